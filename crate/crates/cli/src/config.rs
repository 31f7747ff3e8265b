//! Resolved experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use adi_core::rng::derive_seed;
use adi_core::{Aggregator, Strategy, USelectParams, XFill};
use serde::Serialize;

pub const U_SEED_LABEL: &str = "u-vectors";
pub const FILL_SEED_LABEL: &str = "xfill";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FillPolicy {
    Zero,
    One,
    Random,
}

impl FromStr for FillPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "0" => Ok(FillPolicy::Zero),
            "one" | "1" => Ok(FillPolicy::One),
            "random" | "rand" => Ok(FillPolicy::Random),
            _ => Err(format!("unknown fill policy `{s}` (zero, one, random)")),
        }
    }
}

impl fmt::Display for FillPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FillPolicy::Zero => "zero",
            FillPolicy::One => "one",
            FillPolicy::Random => "random",
        })
    }
}

/// What `rt_ratio` divides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RtMeasure {
    /// Gate evaluations spent in test generation and fault simulation. Reproducible.
    Effort,
    /// Wall-clock seconds of test generation.
    Wall,
}

impl FromStr for RtMeasure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "effort" => Ok(RtMeasure::Effort),
            "wall" => Ok(RtMeasure::Wall),
            _ => Err(format!("unknown run-time measure `{s}` (effort, wall)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub netlist: PathBuf,
    pub seed: u64,
    pub target_coverage: f64,
    pub max_vectors: usize,
    pub prune: bool,
    pub collapse: bool,
    pub strategies: Vec<Strategy>,
    /// `None` searches without limit.
    pub backtrack_limit: Option<u64>,
    pub fill: FillPolicy,
    pub aggregator: Aggregator,
    pub rt_measure: RtMeasure,
    pub out: PathBuf,
    pub force: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            netlist: PathBuf::new(),
            seed: 1,
            target_coverage: 0.90,
            max_vectors: 10_000,
            prune: true,
            collapse: false,
            strategies: vec![Strategy::Orig, Strategy::Dynam, Strategy::ZeroDynam],
            backtrack_limit: Some(10_000),
            fill: FillPolicy::Random,
            aggregator: Aggregator::Min,
            rt_measure: RtMeasure::Effort,
            out: PathBuf::from("out"),
            force: false,
        }
    }
}

/// The part of the configuration that determines results, as recorded in headers.
#[derive(Serialize)]
struct Recorded<'a> {
    netlist: String,
    seed: u64,
    target_coverage: f64,
    max_vectors: usize,
    prune: bool,
    collapse: bool,
    strategies: Vec<&'a str>,
    backtrack_limit: Option<u64>,
    fill: FillPolicy,
    aggregator: &'a str,
    rt_measure: RtMeasure,
}

impl ExperimentConfig {
    pub fn u_seed(&self) -> u64 {
        derive_seed(self.seed, U_SEED_LABEL)
    }

    pub fn fill_seed(&self) -> u64 {
        derive_seed(self.seed, FILL_SEED_LABEL)
    }

    pub fn u_params(&self) -> USelectParams {
        USelectParams {
            seed: self.u_seed(),
            target_coverage: self.target_coverage,
            max_vectors: self.max_vectors,
            prune: self.prune,
        }
    }

    pub fn xfill(&self) -> XFill {
        match self.fill {
            FillPolicy::Zero => XFill::Zero,
            FillPolicy::One => XFill::One,
            FillPolicy::Random => XFill::Random(self.fill_seed()),
        }
    }

    /// Compact JSON of every setting that influences results. The output
    /// directory and `--force` are left out so reruns elsewhere match.
    pub fn to_json(&self) -> String {
        let recorded = Recorded {
            netlist: self.netlist.display().to_string(),
            seed: self.seed,
            target_coverage: self.target_coverage,
            max_vectors: self.max_vectors,
            prune: self.prune,
            collapse: self.collapse,
            strategies: self.strategies.iter().map(|s| s.name()).collect(),
            backtrack_limit: self.backtrack_limit,
            fill: self.fill,
            aggregator: self.aggregator.name(),
            rt_measure: self.rt_measure,
        };
        serde_json::to_string(&recorded).expect("config serializes")
    }
}
