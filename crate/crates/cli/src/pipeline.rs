//! The experiment pipeline: parse, faults, estimation set, index, orders,
//! test generation per order, comparison.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use adi_core::metrics::{curve_points, StrategyRun};
use adi_core::ordering::order_faults;
use adi_core::sim::{simulate_capped, WORD_BITS};
use adi_core::{
    compare_orders, compute_adi, enumerate_faults, fault_sim_nodrop, parse_bench, run_atpg, select_u, AdiTable,
    AtpgConfig, AtpgError, Circuit, Comparison, DetectionOutcome, FaultSet, InputVector, MetricsError,
    OrderedFaultSet, Strategy, TestSet, USelection,
};

use crate::artifact::{sha256_hex, Header, OutDir};
use crate::config::{ExperimentConfig, RtMeasure};
use crate::error::CliError;
use crate::formats;

/// A parsed netlist with its fault list.
pub struct Loaded {
    pub circuit: Circuit,
    pub faults: FaultSet,
    pub input_sha256: String,
}

pub fn load(config: &ExperimentConfig) -> Result<Loaded, CliError> {
    let path = &config.netlist;
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Input(format!("{}: netlist is not UTF-8 text", path.display())))?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let circuit = parse_bench(&name, &text).map_err(|source| CliError::Netlist {
        path: path.clone(),
        source,
    })?;
    let faults = enumerate_faults(&circuit, config.collapse);
    Ok(Loaded {
        circuit,
        faults,
        input_sha256: sha256_hex(&bytes),
    })
}

/// The estimation set and the index table derived from it.
pub struct Estimate {
    pub selection: USelection,
    pub outcome: DetectionOutcome,
    pub adi: AdiTable,
    pub seconds: f64,
}

pub fn estimate(loaded: &Loaded, config: &ExperimentConfig) -> Result<Estimate, CliError> {
    let start = Instant::now();
    let selection = select_u(&loaded.circuit, loaded.faults.faults(), &config.u_params())
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let outcome = fault_sim_nodrop(&loaded.circuit, loaded.faults.faults(), &selection.vectors);
    let adi = compute_adi(&outcome, config.aggregator);
    Ok(Estimate {
        selection,
        outcome,
        adi,
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn build_orders(estimate: &Estimate, config: &ExperimentConfig) -> Result<Vec<OrderedFaultSet>, CliError> {
    config
        .strategies
        .iter()
        .map(|&s| {
            let order = order_faults(s, &estimate.adi, &estimate.outcome).with_seed(estimate.selection.seed);
            if order.len() != estimate.adi.len() || !order.is_permutation() {
                return Err(CliError::Invariant(format!("order {s} is not a permutation of the fault list")));
            }
            Ok(order)
        })
        .collect()
}

/// Test generation result for one order.
pub struct StrategyResult {
    pub order: OrderedFaultSet,
    pub tests: TestSet,
    pub seconds: f64,
}

impl StrategyResult {
    pub fn strategy(&self) -> Strategy {
        self.order.strategy()
    }

    /// The cost `rt_ratio` is built from.
    pub fn runtime(&self, measure: RtMeasure) -> f64 {
        match measure {
            RtMeasure::Effort => self.tests.effort as f64,
            RtMeasure::Wall => self.seconds,
        }
    }
}

pub fn generate(
    loaded: &Loaded,
    orders: Vec<OrderedFaultSet>,
    config: &ExperimentConfig,
) -> Result<Vec<StrategyResult>, CliError> {
    let atpg = AtpgConfig {
        backtrack_limit: config.backtrack_limit,
        fill: config.xfill(),
    };
    orders
        .into_iter()
        .map(|order| {
            let start = Instant::now();
            let tests = run_atpg(&loaded.circuit, &loaded.faults, &order, &atpg).map_err(|e| match e {
                AtpgError::BadOrder | AtpgError::TargetNotDetected(_) => {
                    CliError::Invariant(format!("{}: {e}", order.strategy()))
                }
            })?;
            Ok(StrategyResult {
                order,
                tests,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

fn header(loaded: &Loaded, config: &ExperimentConfig) -> Header {
    Header::new(config, &loaded.input_sha256)
}

fn write_estimate(out: &OutDir, h: &Header, loaded: &Loaded, est: &Estimate) -> Result<Vec<PathBuf>, CliError> {
    let sel = &est.selection;
    let u_header = h.with([format!(
        "u: truncation_point={} kept={} detected={} threshold={} pruned={}",
        sel.truncation_point,
        sel.vectors.len(),
        sel.detected,
        sel.threshold,
        sel.pruned
    )]);
    Ok(vec![
        out.write("faults.csv", h, &formats::fault_list_csv(&loaded.circuit, &loaded.faults))?,
        out.write("u.vec", &u_header, &formats::vectors_text(&sel.vectors))?,
        out.write("adi.csv", h, &formats::adi_csv(&loaded.circuit, &loaded.faults, &est.adi))?,
        out.write(
            "adi_stats.csv",
            h,
            &formats::adi_stats_csv(&loaded.circuit, &est.adi, sel.vectors.len()),
        )?,
    ])
}

fn write_orders(out: &OutDir, h: &Header, orders: &[OrderedFaultSet]) -> Result<Vec<PathBuf>, CliError> {
    orders
        .iter()
        .map(|o| {
            let p = o.provenance();
            let oh = h.with([format!(
                "order: strategy={} u_seed={} adi_digest={:016x}",
                o.strategy(),
                p.seed.map(|s| s.to_string()).unwrap_or_default(),
                p.adi_digest
            )]);
            out.write(&format!("order_{}.txt", o.strategy()), &oh, &formats::order_text(o))
        })
        .collect()
}

fn write_tests(
    out: &OutDir,
    h: &Header,
    config: &ExperimentConfig,
    results: &[StrategyResult],
) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for r in results {
        let th = h.with([
            format!("strategy: {}", r.strategy()),
            format!(
                "backtrack_limit: {}",
                config.backtrack_limit.map(|l| l.to_string()).unwrap_or_else(|| "none".into())
            ),
            format!("fill: {}", config.xfill()),
        ]);
        files.push(out.write(
            &format!("tests_{}.vec", r.strategy()),
            &th,
            &formats::vectors_text(&r.tests.tests),
        )?);
    }
    let summary: Vec<(Strategy, TestSet)> = results.iter().map(|r| (r.strategy(), r.tests.clone())).collect();
    files.push(out.write("summary.csv", h, &formats::summary_csv(&summary))?);
    Ok(files)
}

/// Files written by a command.
#[derive(Debug, Default)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

pub struct AdiReport {
    pub loaded: Loaded,
    pub estimate: Estimate,
    pub written: Written,
}

/// Estimation set, fault list, index table and its statistics row.
pub fn cmd_adi(config: &ExperimentConfig) -> Result<AdiReport, CliError> {
    let out = OutDir::prepare(&config.out, config.force)?;
    let loaded = load(config)?;
    let estimate = estimate(&loaded, config)?;
    let files = write_estimate(&out, &header(&loaded, config), &loaded, &estimate)?;
    Ok(AdiReport {
        loaded,
        estimate,
        written: Written { files },
    })
}

/// Everything `adi` writes plus one order file per strategy.
pub fn cmd_order(config: &ExperimentConfig) -> Result<Vec<OrderedFaultSet>, CliError> {
    check_strategies(config)?;
    let out = OutDir::prepare(&config.out, config.force)?;
    let loaded = load(config)?;
    let est = estimate(&loaded, config)?;
    let h = header(&loaded, config);
    write_estimate(&out, &h, &loaded, &est)?;
    let orders = build_orders(&est, config)?;
    write_orders(&out, &h, &orders)?;
    Ok(orders)
}

/// Everything `order` writes plus test sets and the summary table.
pub fn cmd_atpg(config: &ExperimentConfig) -> Result<Vec<StrategyResult>, CliError> {
    check_strategies(config)?;
    let out = OutDir::prepare(&config.out, config.force)?;
    let loaded = load(config)?;
    let est = estimate(&loaded, config)?;
    let h = header(&loaded, config);
    write_estimate(&out, &h, &loaded, &est)?;
    let orders = build_orders(&est, config)?;
    write_orders(&out, &h, &orders)?;
    let results = generate(&loaded, orders, config)?;
    write_tests(&out, &h, config, &results)?;
    Ok(results)
}

pub struct CompareReport {
    pub circuit: String,
    pub faults: usize,
    pub u_size: usize,
    pub results: Vec<StrategyResult>,
    pub runs: Vec<StrategyRun>,
    pub comparison: Comparison,
    pub written: Written,
}

impl CompareReport {
    pub fn run(&self, s: Strategy) -> Option<&StrategyRun> {
        self.runs.iter().find(|r| r.strategy == s)
    }
}

fn check_strategies(config: &ExperimentConfig) -> Result<(), CliError> {
    if config.strategies.is_empty() {
        return Err(CliError::Usage("at least one strategy is required".into()));
    }
    let mut seen = config.strategies.clone();
    seen.sort();
    seen.dedup();
    if seen.len() != config.strategies.len() {
        return Err(CliError::Usage("a strategy is listed twice".into()));
    }
    Ok(())
}

/// The full experiment: one estimation set shared by every order, then test
/// generation per order and the normalized comparison against `orig`.
pub fn cmd_compare(config: &ExperimentConfig) -> Result<CompareReport, CliError> {
    check_strategies(config)?;
    if !config.strategies.contains(&Strategy::Orig) {
        return Err(CliError::Usage("compare needs `orig` among the strategies as the baseline".into()));
    }
    let out = OutDir::prepare(&config.out, config.force)?;
    let loaded = load(config)?;
    let est = estimate(&loaded, config)?;
    let h = header(&loaded, config);
    let mut files = write_estimate(&out, &h, &loaded, &est)?;
    let start = Instant::now();
    let orders = build_orders(&est, config)?;
    let order_seconds = start.elapsed().as_secs_f64();
    files.extend(write_orders(&out, &h, &orders)?);
    let results = generate(&loaded, orders, config)?;
    files.extend(write_tests(&out, &h, config, &results)?);

    let total = loaded.faults.len();
    let runs: Vec<StrategyRun> = results
        .iter()
        .map(|r| StrategyRun::from_test_set(r.strategy(), &r.tests, total, r.runtime(config.rt_measure)))
        .collect();
    let comparison = compare_orders(&runs, Strategy::Orig).map_err(|e| match e {
        MetricsError::NothingDetected => CliError::Input(format!("{}: no fault is testable, AVE is undefined", loaded.circuit.name())),
        other => CliError::Invariant(other.to_string()),
    })?;
    let ch = h.with([format!("rt_measure: {:?}", config.rt_measure).to_lowercase()]);
    files.push(out.write("comparison.csv", &ch, &formats::comparison_csv(loaded.circuit.name(), &comparison))?);
    let points = curve_points(&runs);
    for r in &runs {
        let mine: Vec<_> = points.iter().filter(|p| p.strategy == r.strategy).cloned().collect();
        files.push(out.write(&format!("curve_{}.csv", r.strategy), &h, &formats::curve_csv(&mine))?);
    }
    if config.rt_measure == RtMeasure::Wall {
        let mut rows = vec![("estimate", None, est.seconds), ("order", None, order_seconds)];
        rows.extend(results.iter().map(|r| ("atpg", Some(r.strategy()), r.seconds)));
        files.push(out.write("timing.csv", &h, &formats::timing_csv(&rows))?);
    }

    Ok(CompareReport {
        circuit: loaded.circuit.name().to_string(),
        faults: total,
        u_size: est.selection.vectors.len(),
        results,
        runs,
        comparison,
        written: Written { files },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    NoDrop,
    Drop,
    NDetect(u32),
}

impl FromStr for SimMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "nodrop" | "no-drop" => Ok(SimMode::NoDrop),
            "drop" => Ok(SimMode::Drop),
            "ndet" | "n-detect" => Ok(SimMode::NDetect(1)),
            _ => Err(format!("unknown simulation mode `{s}` (nodrop, drop, ndet)")),
        }
    }
}

/// Fault simulates a vector file, or the estimation set when none is given.
pub fn cmd_simulate(config: &ExperimentConfig, vectors: Option<&Path>, mode: SimMode) -> Result<DetectionOutcome, CliError> {
    let out = OutDir::prepare(&config.out, config.force)?;
    let loaded = load(config)?;
    let h = header(&loaded, config);
    let (vs, source): (Vec<InputVector>, String) = match vectors {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let vs = formats::parse_vectors(&text, loaded.circuit.inputs().len())?;
            (vs, format!("{} sha256={}", p.display(), sha256_hex(text.as_bytes())))
        }
        None => {
            let sel = select_u(&loaded.circuit, loaded.faults.faults(), &config.u_params())
                .map_err(|e| CliError::Usage(e.to_string()))?;
            (sel.vectors, "estimation set".into())
        }
    };
    let cap = match mode {
        SimMode::NoDrop => None,
        SimMode::Drop => Some(1),
        SimMode::NDetect(n) => Some(n),
    };
    let outcome = simulate_capped(&loaded.circuit, loaded.faults.faults(), &vs, cap, WORD_BITS);
    let sh = h.with([format!("vectors: {source} count={}", vs.len()), format!("mode: {mode:?}")]);
    out.write("faults.csv", &h, &formats::fault_list_csv(&loaded.circuit, &loaded.faults))?;
    out.write("detections.csv", &sh, &formats::detections_csv(&loaded.circuit, &loaded.faults, &outcome))?;
    out.write("n_det.csv", &sh, &formats::n_det_csv(&outcome))?;
    Ok(outcome)
}
