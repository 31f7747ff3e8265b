use std::path::PathBuf;
use std::process::ExitCode;

use adi_bench::pipeline::{cmd_adi, cmd_atpg, cmd_compare, cmd_order, cmd_simulate, SimMode};
use adi_bench::{CliError, ExperimentConfig, FillPolicy, RtMeasure};
use adi_core::adi::adi_stats;
use adi_core::{Aggregator, Strategy};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

/// Accidental detection index fault ordering workbench.
#[derive(Parser)]
#[command(name = "adi-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select the estimation set and write the per-fault index table.
    Adi(Common),
    /// Write one fault order per strategy.
    Order(Common),
    /// Generate a test set per order.
    Atpg(Common),
    /// Run the full experiment and write the comparison tables.
    Compare(Common),
    /// Fault simulate a vector file (or the estimation set).
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Common {
    /// `.bench` netlist; DFFs are cut into pseudo inputs and outputs.
    #[arg(long)]
    netlist: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Collapse structurally equivalent faults.
    #[arg(long)]
    collapse: bool,
    #[arg(long, default_value_t = 0.90)]
    target_coverage: f64,
    #[arg(long, default_value_t = 10_000)]
    max_vectors: usize,
    /// Drop estimation vectors that detect no new fault (default).
    #[arg(long, overrides_with = "no_prune")]
    prune: bool,
    #[arg(long, overrides_with = "prune")]
    no_prune: bool,
    /// Comma separated: orig, incr0, decr, 0decr, dynam, 0dynam.
    #[arg(long, value_delimiter = ',', default_value = "orig,dynam,0dynam")]
    strategies: Vec<Strategy>,
    /// Backtracks per fault before giving up, or `none`.
    #[arg(long, default_value = "10000", value_parser = parse_limit)]
    backtrack_limit: Limit,
    /// zero, one or random.
    #[arg(long, default_value = "random")]
    fill: FillPolicy,
    /// min or mean.
    #[arg(long, default_value = "min")]
    aggregator: Aggregator,
    /// effort (gate evaluations, reproducible) or wall (seconds).
    #[arg(long, default_value = "effort")]
    rt_measure: RtMeasure,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Write into a non-empty output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// One vector per line; defaults to the estimation set.
    #[arg(long)]
    vectors: Option<PathBuf>,
    /// nodrop, drop or ndet.
    #[arg(long, default_value = "nodrop")]
    mode: SimMode,
    /// Detection cap for `--mode ndet`.
    #[arg(long, default_value_t = 1)]
    n: u32,
}

#[derive(Clone, Copy)]
struct Limit(Option<u64>);

fn parse_limit(s: &str) -> Result<Limit, String> {
    match s.to_ascii_lowercase().as_str() {
        "none" | "unlimited" | "inf" => Ok(Limit(None)),
        n => n.parse().map(|v| Limit(Some(v))).map_err(|e| format!("{e}")),
    }
}

impl Common {
    fn resolve(self) -> ExperimentConfig {
        ExperimentConfig {
            netlist: self.netlist,
            seed: self.seed,
            target_coverage: self.target_coverage,
            max_vectors: self.max_vectors,
            prune: !self.no_prune,
            collapse: self.collapse,
            strategies: self.strategies,
            backtrack_limit: self.backtrack_limit.0,
            fill: self.fill,
            aggregator: self.aggregator,
            rt_measure: self.rt_measure,
            out: self.out,
            force: self.force,
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Adi(c) => {
            let config = c.resolve();
            let r = cmd_adi(&config)?;
            let stats = adi_stats(&r.estimate.adi)
                .map(|s| format!("adi min {} max {} ratio {:.3}", s.min, s.max, s.ratio))
                .unwrap_or_else(|e| e.to_string());
            println!(
                "{}: {} faults, |U| = {}, {}",
                r.loaded.circuit.name(),
                r.loaded.faults.len(),
                r.estimate.selection.vectors.len(),
                stats
            );
        }
        Command::Order(c) => {
            let config = c.resolve();
            for o in cmd_order(&config)? {
                println!("{}: {} faults ordered", o.strategy(), o.len());
            }
        }
        Command::Atpg(c) => {
            let config = c.resolve();
            for r in cmd_atpg(&config)? {
                println!(
                    "{}: {} tests, {} detected, {} redundant, {} aborted",
                    r.strategy(),
                    r.tests.len(),
                    r.tests.detected_count(),
                    r.tests.redundant.len(),
                    r.tests.aborted.len()
                );
            }
        }
        Command::Compare(c) => {
            let config = c.resolve();
            let r = cmd_compare(&config)?;
            println!("{}: {} faults, |U| = {}", r.circuit, r.faults, r.u_size);
            for row in &r.comparison.rows {
                println!(
                    "  {:<7} tests {:>5}  ave {:>9.3}  ave_ratio {:.3}  rt_ratio {:.3}  coverage {:.4}",
                    row.strategy.name(),
                    row.tests,
                    row.ave,
                    row.ave_ratio,
                    row.rt_ratio,
                    row.coverage
                );
            }
        }
        Command::Simulate(s) => {
            let mode = match s.mode {
                SimMode::NDetect(_) => SimMode::NDetect(s.n.max(1)),
                m => m,
            };
            let config = s.common.resolve();
            let out = cmd_simulate(&config, s.vectors.as_deref(), mode)?;
            let detected = (0..out.num_faults()).filter(|&f| out.is_detected(f)).count();
            println!("{} vectors, {detected} of {} faults detected", out.num_vectors(), out.num_faults());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
