//! Accidental-detection-index fault ordering for full-scan combinational circuits.
//!
//! The crate is `no_std` (with `alloc`) and covers the whole algorithmic path:
//!
//! * [`netlist`]: `.bench` parsing and the levelized circuit model.
//! * [`fault`]: single stuck-at fault enumeration and structural collapsing.
//! * [`sim`]: bit-parallel good-machine and fault simulation (no-drop, drop, n-detect).
//! * [`adi`]: estimation vector selection and the accidental detection index.
//! * [`ordering`]: the six fault orders (`orig`, `incr0`, `decr`, `0decr`, `dynam`, `0dynam`).
//! * [`atpg`]: a PODEM test generator and the ordered test generation loop.
//! * [`metrics`]: fault coverage curves, the AVE steepness metric and order comparison.
//!
//! File formats, the experiment driver and the command line live in the companion
//! `adi-bench` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod adi;
pub mod atpg;
pub mod fault;
pub mod metrics;
pub mod netlist;
pub mod ordering;
pub mod rng;
pub mod sim;

pub use adi::{adi_stats, compute_adi, select_u, AdiError, AdiStats, AdiTable, Aggregator, USelectParams, USelection};
pub use atpg::{generate_test, run_atpg, xfill, AtpgConfig, AtpgError, FiveValue, GenerateOutcome, Logic, TestCube, TestSet, XFill};
pub use fault::{enumerate_faults, Fault, FaultId, FaultSet, FaultSite};
pub use metrics::{ave, compare_orders, coverage_curve, curve_points, Comparison, ComparisonRow, CoverageCurve, CurvePoint, MetricsError, StrategyRun};
pub use netlist::{levelize, parse_bench, to_bench, Circuit, Gate, GateKind, NetId, NetlistError};
pub use ordering::{order_dynamic, order_faults, order_static, OrderedFaultSet, OrderingError, Provenance, Strategy};
pub use sim::{fault_sim_drop, fault_sim_ndet, fault_sim_nodrop, good_sim, DetectionOutcome, DropOutcome, InputVector, PatternBlock};
