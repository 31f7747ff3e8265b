//! Fault coverage curves, the AVE steepness metric and cross-order comparison.
//!
//! For a test sequence `t1..tk` let `n(i)` be the number of faults detected by
//! the first `i` tests. AVE is `sum(i * (n(i) - n(i-1))) / n(k)`: the average
//! 1-based index of the test that first detects a fault. Smaller is steeper.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::atpg::TestSet;
use crate::fault::Fault;
use crate::netlist::Circuit;
use crate::ordering::Strategy;
use crate::sim::{fault_sim_drop, InputVector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no fault is detected, AVE is undefined")]
    NothingDetected,
    #[error("baseline strategy {0} is missing from the comparison")]
    MissingBaseline(Strategy),
    #[error("baseline strategy {0} has a zero measurement")]
    ZeroBaseline(Strategy),
}

/// Cumulative detections: `n_ord[i]` faults are detected by the first `i` tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageCurve {
    n_ord: Vec<usize>,
    total_faults: usize,
}

impl CoverageCurve {
    /// Builds a curve from per-test increments.
    pub fn from_increments<I: IntoIterator<Item = usize>>(increments: I, total_faults: usize) -> Self {
        let mut n_ord = vec![0];
        let mut acc = 0;
        for d in increments {
            acc += d;
            n_ord.push(acc);
        }
        CoverageCurve { n_ord, total_faults }
    }

    pub fn from_test_set(tests: &TestSet, total_faults: usize) -> Self {
        Self::from_increments(tests.detections.iter().map(Vec::len), total_faults)
    }

    /// `n(0..=k)`, always starting with 0.
    pub fn points(&self) -> &[usize] {
        &self.n_ord
    }

    /// Number of tests `k`.
    pub fn tests(&self) -> usize {
        self.n_ord.len() - 1
    }

    pub fn total_faults(&self) -> usize {
        self.total_faults
    }

    pub fn final_detected(&self) -> usize {
        *self.n_ord.last().unwrap_or(&0)
    }

    pub fn increments(&self) -> impl Iterator<Item = usize> + '_ {
        self.n_ord.windows(2).map(|w| w[1] - w[0])
    }

    pub fn coverage(&self) -> f64 {
        if self.total_faults == 0 {
            0.0
        } else {
            self.final_detected() as f64 / self.total_faults as f64
        }
    }
}

/// Fault simulates `tests` in order with dropping and records the curve.
pub fn coverage_curve(circuit: &Circuit, faults: &[Fault], tests: &[InputVector]) -> CoverageCurve {
    let out = fault_sim_drop(circuit, faults, tests);
    CoverageCurve::from_increments(out.new_detections.iter().map(|&d| d as usize), faults.len())
}

/// The AVE metric of a curve.
pub fn ave(curve: &CoverageCurve) -> Result<f64, MetricsError> {
    let total = curve.final_detected();
    if total == 0 {
        return Err(MetricsError::NothingDetected);
    }
    let weighted: u128 = curve
        .increments()
        .enumerate()
        .map(|(i, d)| (i as u128 + 1) * d as u128)
        .sum();
    Ok(weighted as f64 / total as f64)
}

/// Everything measured for one order.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRun {
    pub strategy: Strategy,
    pub tests: usize,
    pub curve: CoverageCurve,
    pub redundant: usize,
    pub aborted: usize,
    /// Cost of test generation in whatever unit the caller picked.
    pub runtime: f64,
}

impl StrategyRun {
    pub fn from_test_set(strategy: Strategy, tests: &TestSet, total_faults: usize, runtime: f64) -> Self {
        StrategyRun {
            strategy,
            tests: tests.len(),
            curve: CoverageCurve::from_test_set(tests, total_faults),
            redundant: tests.redundant.len(),
            aborted: tests.aborted.len(),
            runtime,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub strategy: Strategy,
    pub tests: usize,
    pub ave: f64,
    pub ave_ratio: f64,
    pub rt_ratio: f64,
    /// Detected over all target faults.
    pub coverage: f64,
    /// Detected over target faults not proven redundant.
    pub coverage_testable: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: Strategy,
    pub rows: Vec<ComparisonRow>,
    /// Largest test set among the compared runs, the 100% mark of curve plots.
    pub max_tests: usize,
}

/// One plotted curve sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub tests_pct: f64,
    pub strategy: Strategy,
    pub faults_detected: usize,
    pub coverage_pct: f64,
}

/// Normalizes every run against `baseline`, keeping the input order of runs.
pub fn compare_orders(runs: &[StrategyRun], baseline: Strategy) -> Result<Comparison, MetricsError> {
    let base = runs
        .iter()
        .find(|r| r.strategy == baseline)
        .ok_or(MetricsError::MissingBaseline(baseline))?;
    let base_ave = ave(&base.curve)?;
    let mut rows = Vec::with_capacity(runs.len());
    for r in runs {
        let a = ave(&r.curve)?;
        let rt_ratio = if r.runtime == base.runtime {
            1.0
        } else if base.runtime > 0.0 {
            r.runtime / base.runtime
        } else {
            return Err(MetricsError::ZeroBaseline(baseline));
        };
        let detected = r.curve.final_detected() as f64;
        let testable = r.curve.total_faults().saturating_sub(r.redundant);
        rows.push(ComparisonRow {
            strategy: r.strategy,
            tests: r.tests,
            ave: a,
            ave_ratio: a / base_ave,
            rt_ratio,
            coverage: r.curve.coverage(),
            coverage_testable: if testable == 0 { 1.0 } else { detected / testable as f64 },
        });
    }
    Ok(Comparison {
        baseline,
        rows,
        max_tests: runs.iter().map(|r| r.tests).max().unwrap_or(0),
    })
}

/// Curve samples for every run, one per test plus the origin, with the x axis
/// in percent of the largest test set.
pub fn curve_points(runs: &[StrategyRun]) -> Vec<CurvePoint> {
    let max_tests = runs.iter().map(|r| r.tests).max().unwrap_or(0);
    let mut out = Vec::new();
    for r in runs {
        let total = r.curve.total_faults();
        for (i, &n) in r.curve.points().iter().enumerate() {
            out.push(CurvePoint {
                tests_pct: if max_tests == 0 { 0.0 } else { 100.0 * i as f64 / max_tests as f64 },
                strategy: r.strategy,
                faults_detected: n,
                coverage_pct: if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 },
            });
        }
    }
    out
}
