//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criterion 7 reads every `.bench` file in `tests/data/iscas89/` (or the
//! directory named by `ADI_ISCAS89_DIR`) together with an optional
//! `waivers.txt` in the same directory.

#[path = "../../core/tests/common/mod.rs"]
mod oracle;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use adi_bench::config::ExperimentConfig;
use adi_bench::pipeline::cmd_compare;
use adi_core::ordering::order_dynamic_with;
use adi_core::{
    ave, compute_adi, coverage_curve, enumerate_faults, fault_sim_drop, fault_sim_nodrop, order_faults, parse_bench, run_atpg,
    Aggregator, AtpgConfig, Circuit, CoverageCurve, DetectionOutcome, Fault, FaultId, InputVector, Strategy, XFill,
};

const WORKED_NDET: [u32; 16] = [11, 11, 13, 13, 12, 11, 11, 15, 11, 11, 8, 7, 11, 14, 8, 8];
const ADI_BUDGET: Duration = Duration::from_millis(1);
const ORACLE_CIRCUITS: u64 = 24;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const AVE_REL_TOL: f64 = 1e-12;
const ATPG_CIRCUITS: u64 = 24;
const MIN_ISCAS89: usize = 8;
const ISCAS89_BUDGET: Duration = Duration::from_secs(600);

type Verdict = Result<String, String>;

/// Runs no-drop simulation and checks the counting identity on the result.
struct Counted {
    runs: usize,
    violations: Vec<String>,
}

impl Counted {
    fn nodrop(&mut self, label: &str, c: &Circuit, faults: &[Fault], vectors: &[InputVector]) -> DetectionOutcome {
        let out = fault_sim_nodrop(c, faults, vectors);
        self.check(label, &out);
        out
    }

    fn check(&mut self, label: &str, out: &DetectionOutcome) {
        self.runs += 1;
        let by_fault: u64 = (0..out.num_faults()).map(|f| out.detection_count(f) as u64).sum();
        let by_vector: u64 = out.n_det().iter().map(|&n| n as u64).sum();
        if by_fault != by_vector {
            self.violations.push(format!("{label}: sum |D(f)| = {by_fault}, sum n_det = {by_vector}"));
        }
    }
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

fn circuit(name: &str, text: &str) -> Circuit {
    parse_bench(name, text).expect("fixture parses")
}

fn worked_outcome(sets: &[Vec<u32>]) -> DetectionOutcome {
    DetectionOutcome::from_sets(sets, WORKED_NDET.to_vec())
}

fn criterion_1() -> Verdict {
    let sets = vec![(9..=15).collect::<Vec<u32>>(), vec![4, 7, 13], vec![10, 14, 15]];
    let outcome = worked_outcome(&sets);
    let start = Instant::now();
    let table = compute_adi(&outcome, Aggregator::Min);
    let took = start.elapsed();
    let got = table.values().to_vec();
    if got != [7, 12, 8] {
        return Err(format!("ADI(f0, f2, f15) = {got:?}, expected [7, 12, 8]"));
    }
    if took >= ADI_BUDGET {
        return Err(format!("took {took:?}, budget {ADI_BUDGET:?}"));
    }
    Ok(format!("ADI(f0, f2, f15) = {got:?} in {took:?}"))
}

fn criterion_2() -> Verdict {
    // f14, f18, f21, f22 as fault indices 0..4
    let names = ["f14", "f18", "f21", "f22"];
    let sets = vec![vec![2], vec![7, 13], vec![7, 13], vec![7]];
    let outcome = worked_outcome(&sets);
    let mut adis = Vec::new();
    let mut trace = vec![WORKED_NDET[7]];
    let order = order_dynamic_with(&outcome, false, |sel, n_det| {
        adis.push(sel.adi);
        if trace.last() != Some(&n_det[7]) {
            trace.push(n_det[7]);
        }
    });
    let picked: Vec<&str> = order.order().iter().map(|f| names[f.index()]).collect();
    if picked != ["f22", "f18", "f14", "f21"] || adis != [15, 14, 13, 13] || trace != [15, 14, 13, 12] {
        return Err(format!("order {picked:?}, ADI {adis:?}, n_det(7) {trace:?}"));
    }
    Ok(format!("order {picked:?}, ADI {adis:?}, n_det(7) {trace:?}"))
}

fn criterion_3(counted: &mut Counted) -> Verdict {
    let start = Instant::now();
    let mut faults_checked = 0;
    for seed in 0..ORACLE_CIRCUITS {
        let text = oracle::random_bench(seed, 12, 40);
        let c = circuit(&format!("r{seed}"), &text);
        let fs = enumerate_faults(&c, false);
        let u = oracle::exhaustive(&c);
        let outcome = counted.nodrop(&format!("oracle r{seed}"), &c, fs.faults(), &u);
        let table = compute_adi(&outcome, Aggregator::Min);
        let naive = oracle::naive_table(&c, fs.faults(), &u);
        let expected = oracle::naive_adi_min(&naive);
        if table.values() != expected.as_slice() {
            let f = (0..expected.len()).find(|&i| table.values()[i] != expected[i]).unwrap_or(0);
            return Err(format!("circuit r{seed}, fault {f}: pipeline {} vs oracle {}", table.values()[f], expected[f]));
        }
        if outcome.n_det() != naive.n_det.as_slice() {
            return Err(format!("circuit r{seed}: n_det differs from the oracle"));
        }
        faults_checked += expected.len();
    }
    let took = start.elapsed();
    if took >= ORACLE_BUDGET {
        return Err(format!("took {took:?}, budget {ORACLE_BUDGET:?}"));
    }
    Ok(format!("{ORACLE_CIRCUITS} circuits, {faults_checked} faults equal in {took:.2?}"))
}

/// Mean 1-based index of the test that first detects each detected fault.
fn ave_by_first_detection(c: &Circuit, faults: &[Fault], tests: &[InputVector]) -> Option<f64> {
    let drop = fault_sim_drop(c, faults, tests);
    let firsts: Vec<f64> = drop.first_detection.iter().flatten().map(|&i| i as f64 + 1.0).collect();
    (!firsts.is_empty()).then(|| firsts.iter().sum::<f64>() / firsts.len() as f64)
}

struct AtpgTally {
    curves: usize,
    ave_worst: f64,
    ave_failures: Vec<String>,
}

impl AtpgTally {
    fn compare_ave(&mut self, label: &str, c: &Circuit, faults: &[Fault], tests: &[InputVector]) {
        let curve = coverage_curve(c, faults, tests);
        let (Ok(formula), Some(direct)) = (ave(&curve), ave_by_first_detection(c, faults, tests)) else {
            return;
        };
        self.curves += 1;
        let rel = (formula - direct).abs() / direct.abs();
        self.ave_worst = self.ave_worst.max(rel);
        if rel > AVE_REL_TOL {
            self.ave_failures.push(format!("{label}: {formula} vs {direct}"));
        }
    }
}

fn criterion_5(tally: &AtpgTally) -> Verdict {
    if !tally.ave_failures.is_empty() {
        return Err(tally.ave_failures.join("; "));
    }
    if tally.curves == 0 {
        return Err("no curves were generated".into());
    }
    // a=1 detects both a/0 and y/0 of y = BUFF(a)
    let c = circuit("single", "INPUT(a)\nOUTPUT(y)\ny = BUFF(a)\n");
    let fs = enumerate_faults(&c, false);
    let faults: Vec<Fault> = fs.faults().iter().copied().filter(|f| !f.stuck).collect();
    let curve = coverage_curve(&c, &faults, &[InputVector::new(vec![true])]);
    if curve.final_detected() != faults.len() {
        return Err("single-test fixture does not detect every fault".into());
    }
    let single = ave(&curve).map_err(|e| e.to_string())?;
    if single != 1.0 {
        return Err(format!("single-test AVE = {single}"));
    }
    let by_increments = ave(&CoverageCurve::from_increments([7], 7)).map_err(|e| e.to_string())?;
    if by_increments != 1.0 {
        return Err(format!("single-increment AVE = {by_increments}"));
    }
    Ok(format!("{} curves, worst relative gap {:.1e}, single-test AVE = 1.0", tally.curves, tally.ave_worst))
}

fn criterion_6(counted: &mut Counted, tally: &mut AtpgTally) -> Verdict {
    let config = AtpgConfig {
        backtrack_limit: None,
        fill: XFill::Random(7),
    };
    let mut tests_checked = 0;
    let mut circuits: Vec<(String, String)> = (0..ATPG_CIRCUITS)
        .map(|seed| (format!("a{seed}"), oracle::random_bench(1000 + seed, 12, 40)))
        .collect();
    circuits.push(("c17".into(), oracle::C17.into()));
    for (name, text) in &circuits {
        let c = circuit(name, text);
        if c.inputs().len() > 12 {
            return Err(format!("{name} has {} inputs", c.inputs().len()));
        }
        let fs = enumerate_faults(&c, false);
        let u = oracle::exhaustive(&c);
        let outcome = counted.nodrop(&format!("exhaustive {name}"), &c, fs.faults(), &u);
        let adi = compute_adi(&outcome, Aggregator::Min);
        let detectable: Vec<bool> = (0..fs.len()).map(|f| outcome.is_detected(f)).collect();
        for strategy in Strategy::ALL {
            let order = order_faults(strategy, &adi, &outcome);
            let ts = run_atpg(&c, &fs, &order, &config).map_err(|e| format!("{name} {strategy}: {e}"))?;
            for (t, target) in ts.tests.iter().zip(&ts.targets) {
                let replay = counted.nodrop(&format!("replay {name}"), &c, &[*fs.get(*target)], std::slice::from_ref(t));
                if !replay.is_detected(0) {
                    return Err(format!("{name} {strategy}: test {t} misses its target {}", target.index()));
                }
                tests_checked += 1;
            }
            let mut covered = vec![false; fs.len()];
            for f in ts.detections.iter().flatten() {
                covered[f.index()] = true;
            }
            if covered != detectable {
                return Err(format!(
                    "{name} {strategy}: {} detected, {} detectable",
                    ts.detected_count(),
                    detectable.iter().filter(|&&d| d).count()
                ));
            }
            if !ts.aborted.is_empty() {
                return Err(format!("{name} {strategy}: {} aborted without a limit", ts.aborted.len()));
            }
            let redundant: Vec<FaultId> = (0..fs.len()).filter(|&f| !detectable[f]).map(FaultId::new).collect();
            let mut claimed = ts.redundant.clone();
            claimed.sort();
            if claimed != redundant {
                return Err(format!("{name} {strategy}: redundant set differs from the undetectable set"));
            }
            tally.compare_ave(&format!("{name} {strategy}"), &c, fs.faults(), &ts.tests);
            let mut reversed = ts.tests.clone();
            reversed.reverse();
            tally.compare_ave(&format!("{name} {strategy} reversed"), &c, fs.faults(), &reversed);
        }
    }
    Ok(format!("{} circuits x 6 orders, {tests_checked} tests replayed, coverage equals exhaustive detectability", circuits.len()))
}

fn criterion_4(counted: &mut Counted) -> Verdict {
    for (name, text) in [("c17", oracle::C17.to_string()), ("s27", read_data("s27.bench"))] {
        let c = circuit(name, &text);
        for collapse in [false, true] {
            let fs = enumerate_faults(&c, collapse);
            let u = oracle::exhaustive(&c);
            counted.nodrop(name, &c, fs.faults(), &u);
            counted.nodrop(name, &c, fs.faults(), &u[..u.len() / 3]);
        }
    }
    if counted.violations.is_empty() {
        Ok(format!("identity holds on {} no-drop simulations", counted.runs))
    } else {
        Err(counted.violations.join("; "))
    }
}

fn read_data(name: &str) -> String {
    fs::read_to_string(data_dir().join(name)).expect("test data present")
}

fn compare_config(netlist: &Path, out: &Path, strategies: Vec<Strategy>) -> ExperimentConfig {
    ExperimentConfig {
        netlist: netlist.to_path_buf(),
        out: out.to_path_buf(),
        strategies,
        ..ExperimentConfig::default()
    }
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .expect("output directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).expect("readable")))
        .collect()
}

fn criterion_8() -> Verdict {
    let mut compared = 0;
    for name in ["c17.bench", "s27.bench"] {
        let netlist = data_dir().join(name);
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        let mut outputs = Vec::new();
        for d in &dirs {
            cmd_compare(&compare_config(&netlist, d.path(), Strategy::ALL.to_vec())).map_err(|e| format!("{name}: {e}"))?;
            outputs.push(csv_files(d.path()));
        }
        if outputs[0].is_empty() {
            return Err(format!("{name}: no CSV written"));
        }
        if outputs[0] != outputs[1] {
            let differing: Vec<&String> = outputs[0].keys().filter(|k| outputs[0].get(*k) != outputs[1].get(*k)).collect();
            return Err(format!("{name}: differing files {differing:?}"));
        }
        compared += outputs[0].len();
    }
    Ok(format!("{compared} CSV files byte-identical across two runs"))
}

#[derive(Debug)]
struct CircuitResult {
    name: String,
    orig: usize,
    incr0: usize,
    zero_dynam: usize,
    ave_ratio_dynam: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// `circuit trend reason...` per line, trend one of `a`, `b`, `c`.
fn read_waivers(dir: &Path) -> Vec<(String, String)> {
    let Ok(text) = fs::read_to_string(dir.join("waivers.txt")) else {
        return Vec::new();
    };
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .filter_map(|l| {
            let mut parts = l.split_whitespace();
            Some((parts.next()?.to_string(), parts.next()?.to_string()))
        })
        .collect()
}

fn criterion_7() -> Verdict {
    let dir = std::env::var_os("ADI_ISCAS89_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| data_dir().join("iscas89"));
    let mut netlists: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "bench"))
        .collect();
    netlists.sort();
    let waivers = read_waivers(&dir);
    let waived = |c: &str, t: &str| waivers.iter().any(|(wc, wt)| wc == c && wt == t);

    let start = Instant::now();
    let strategies = vec![Strategy::Orig, Strategy::Incr0, Strategy::Dynam, Strategy::ZeroDynam];
    let mut results = Vec::new();
    for netlist in &netlists {
        let out = tempfile::tempdir().unwrap();
        let report = cmd_compare(&compare_config(netlist, out.path(), strategies.clone())).map_err(|e| e.to_string())?;
        let tests = |s| report.run(s).map(|r| r.tests).unwrap_or(0);
        let row = report.comparison.rows.iter().find(|r| r.strategy == Strategy::Dynam).expect("dynam row");
        let r = CircuitResult {
            name: report.circuit.clone(),
            orig: tests(Strategy::Orig),
            incr0: tests(Strategy::Incr0),
            zero_dynam: tests(Strategy::ZeroDynam),
            ave_ratio_dynam: row.ave_ratio,
        };
        println!(
            "    {}: |T| orig {} incr0 {} 0dynam {}, AVE dynam/orig {:.3}",
            r.name, r.orig, r.incr0, r.zero_dynam, r.ave_ratio_dynam
        );
        results.push(r);
    }
    let took = start.elapsed();

    let mut problems = Vec::new();
    if results.len() < MIN_ISCAS89 {
        problems.push(format!("only {} ISCAS-89 circuits in {}, need {MIN_ISCAS89}", results.len(), dir.display()));
    }
    if results.is_empty() {
        return Err(problems.join("; "));
    }
    let med_orig = median(results.iter().map(|r| r.orig as f64).collect());
    let med_zero = median(results.iter().map(|r| r.zero_dynam as f64).collect());
    let geomean = (results.iter().map(|r| r.ave_ratio_dynam.ln()).sum::<f64>() / results.len() as f64).exp();
    let incr0_larger = results.iter().filter(|r| r.incr0 >= r.orig).count();
    if med_zero > med_orig {
        problems.push(format!("(a) median |T| 0dynam {med_zero} > orig {med_orig}"));
    }
    if geomean >= 1.0 {
        problems.push(format!("(b) geometric mean AVE ratio {geomean:.3}"));
    }
    if 2 * incr0_larger <= results.len() {
        problems.push(format!("(c) incr0 >= orig on only {incr0_larger} of {}", results.len()));
    }
    for r in &results {
        for (trend, violated) in [
            ("a", r.zero_dynam > r.orig),
            ("b", r.ave_ratio_dynam >= 1.0),
            ("c", r.incr0 < r.orig),
        ] {
            if violated && !waived(&r.name, trend) {
                problems.push(format!("{} violates ({trend}) without a waiver", r.name));
            }
        }
    }
    if took >= ISCAS89_BUDGET {
        problems.push(format!("took {took:?}, budget {ISCAS89_BUDGET:?}"));
    }
    let summary = format!(
        "{} circuits: median |T| 0dynam {med_zero} vs orig {med_orig}, geomean AVE dynam/orig {geomean:.3}, incr0 >= orig on {incr0_larger}, {took:.1?}",
        results.len()
    );
    if problems.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", problems.join("; ")))
    }
}

fn main() -> ExitCode {
    let mut counted = Counted {
        runs: 0,
        violations: Vec::new(),
    };
    let mut tally = AtpgTally {
        curves: 0,
        ave_worst: 0.0,
        ave_failures: Vec::new(),
    };
    let mut verdicts = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3(&mut counted)),
    ];
    let c6 = criterion_6(&mut counted, &mut tally);
    verdicts.push((4, criterion_4(&mut counted)));
    verdicts.push((5, criterion_5(&tally)));
    verdicts.push((6, c6));
    verdicts.push((7, criterion_7()));
    verdicts.push((8, criterion_8()));

    let mut failed = 0;
    for (n, v) in &verdicts {
        match v {
            Ok(detail) => println!("criterion {n}: PASS  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL  {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", verdicts.len());
        ExitCode::FAILURE
    }
}
