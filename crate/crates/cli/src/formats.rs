//! Text and CSV renderings of pipeline results, and the vector file reader.

use adi_core::metrics::{Comparison, CurvePoint};
use adi_core::{adi_stats, AdiTable, Circuit, DetectionOutcome, FaultSet, InputVector, OrderedFaultSet, Strategy, TestSet};

use crate::error::CliError;

fn csv_body<F>(header: &[&str], fill: F) -> String
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    fill(&mut w).expect("in-memory write");
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

/// `id,site,pin,stuck`
pub fn fault_list_csv(circuit: &Circuit, faults: &FaultSet) -> String {
    csv_body(&["id", "site", "pin", "stuck"], |w| {
        for f in faults.faults() {
            w.write_record([
                f.id.index().to_string(),
                circuit.net_name(f.net(circuit)).to_string(),
                f.pin_label(circuit),
                bit(f.stuck).to_string(),
            ])?;
        }
        Ok(())
    })
}

/// `fault_id,site,stuck,detected,adi`
pub fn adi_csv(circuit: &Circuit, faults: &FaultSet, table: &AdiTable) -> String {
    csv_body(&["fault_id", "site", "stuck", "detected", "adi"], |w| {
        for (i, f) in faults.faults().iter().enumerate() {
            w.write_record([
                i.to_string(),
                f.site_label(circuit),
                bit(f.stuck).to_string(),
                bit(table.is_detected(i)).to_string(),
                table.adi(i).to_string(),
            ])?;
        }
        Ok(())
    })
}

/// One row per circuit: inputs, faults, faults detected by `U`, `|U|` and the
/// index range over detected faults.
pub fn adi_stats_csv(circuit: &Circuit, table: &AdiTable, u_size: usize) -> String {
    let header = ["circuit", "inputs", "faults", "detected", "u_size", "adi_min", "adi_max", "adi_ratio", "note"];
    csv_body(&header, |w| {
        let mut row = vec![
            circuit.name().to_string(),
            circuit.inputs().len().to_string(),
            table.len().to_string(),
            table.detected_count().to_string(),
            u_size.to_string(),
        ];
        match adi_stats(table) {
            Ok(s) => row.extend([s.min.to_string(), s.max.to_string(), format!("{:.3}", s.ratio), String::new()]),
            Err(e) => row.extend([String::new(), String::new(), String::new(), e.to_string()]),
        }
        w.write_record(row)
    })
}

/// One vector per line.
pub fn vectors_text<'a>(vectors: impl IntoIterator<Item = &'a InputVector>) -> String {
    vectors.into_iter().map(|v| format!("{v}\n")).collect()
}

/// Parses a vector file: `0`/`1` per input, `#` comments and blank lines ignored.
pub fn parse_vectors(text: &str, width: usize) -> Result<Vec<InputVector>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: InputVector = line
            .parse()
            .map_err(|e| CliError::Input(format!("vector file line {}: {e}", i + 1)))?;
        if v.len() != width {
            return Err(CliError::Input(format!(
                "vector file line {}: {} bits, the circuit has {width} inputs",
                i + 1,
                v.len()
            )));
        }
        out.push(v);
    }
    Ok(out)
}

/// One fault id per line.
pub fn order_text(order: &OrderedFaultSet) -> String {
    order.order().iter().map(|f| format!("{}\n", f.index())).collect()
}

/// `strategy,tests,detected,redundant,aborted`
pub fn summary_csv(runs: &[(Strategy, TestSet)]) -> String {
    csv_body(&["strategy", "tests", "detected", "redundant", "aborted"], |w| {
        for (s, t) in runs {
            w.write_record([
                s.name().to_string(),
                t.len().to_string(),
                t.detected_count().to_string(),
                t.redundant.len().to_string(),
                t.aborted.len().to_string(),
            ])?;
        }
        Ok(())
    })
}

/// `tests_pct,strategy,faults_detected,coverage_pct`
pub fn curve_csv(points: &[CurvePoint]) -> String {
    csv_body(&["tests_pct", "strategy", "faults_detected", "coverage_pct"], |w| {
        for p in points {
            w.write_record([
                format!("{:.4}", p.tests_pct),
                p.strategy.name().to_string(),
                p.faults_detected.to_string(),
                format!("{:.4}", p.coverage_pct),
            ])?;
        }
        Ok(())
    })
}

/// `circuit,strategy,tests,ave,ave_ratio,rt_ratio,coverage,coverage_testable`
pub fn comparison_csv(circuit: &str, cmp: &Comparison) -> String {
    let header = ["circuit", "strategy", "tests", "ave", "ave_ratio", "rt_ratio", "coverage", "coverage_testable"];
    csv_body(&header, |w| {
        for r in &cmp.rows {
            w.write_record([
                circuit.to_string(),
                r.strategy.name().to_string(),
                r.tests.to_string(),
                fixed(r.ave),
                fixed(r.ave_ratio),
                fixed(r.rt_ratio),
                fixed(r.coverage),
                fixed(r.coverage_testable),
            ])?;
        }
        Ok(())
    })
}

/// `fault_id,site,stuck,detections,first_detection`
pub fn detections_csv(circuit: &Circuit, faults: &FaultSet, outcome: &DetectionOutcome) -> String {
    csv_body(&["fault_id", "site", "stuck", "detections", "first_detection"], |w| {
        for (i, f) in faults.faults().iter().enumerate() {
            w.write_record([
                i.to_string(),
                f.site_label(circuit),
                bit(f.stuck).to_string(),
                outcome.detection_count(i).to_string(),
                outcome.first_detection()[i].map(|u| u.to_string()).unwrap_or_default(),
            ])?;
        }
        Ok(())
    })
}

/// `vector,n_det`
pub fn n_det_csv(outcome: &DetectionOutcome) -> String {
    csv_body(&["vector", "n_det"], |w| {
        for (u, n) in outcome.n_det().iter().enumerate() {
            w.write_record([u.to_string(), n.to_string()])?;
        }
        Ok(())
    })
}

/// `phase,strategy,seconds`
pub fn timing_csv(rows: &[(&str, Option<Strategy>, f64)]) -> String {
    csv_body(&["phase", "strategy", "seconds"], |w| {
        for (phase, s, secs) in rows {
            w.write_record([phase.to_string(), s.map(|s| s.name().to_string()).unwrap_or_default(), format!("{secs:.6}")])?;
        }
        Ok(())
    })
}
