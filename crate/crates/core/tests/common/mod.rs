//! Reference models shared by the integration tests.
//!
//! Everything here is deliberately naive: a scalar interpreter that iterates
//! gates to a fixpoint in reverse definition order, and brute-force detection
//! tables built from it.

#![allow(dead_code)]

use adi_core::{Circuit, Fault, FaultSite, GateKind, InputVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const C17: &str = include_str!("../data/c17.bench");

fn scalar_gate(kind: GateKind, ins: &[bool]) -> bool {
    match kind {
        GateKind::And => ins.iter().all(|&b| b),
        GateKind::Nand => !ins.iter().all(|&b| b),
        GateKind::Or => ins.iter().any(|&b| b),
        GateKind::Nor => !ins.iter().any(|&b| b),
        GateKind::Xor => ins.iter().filter(|&&b| b).count() % 2 == 1,
        GateKind::Xnor => ins.iter().filter(|&&b| b).count() % 2 == 0,
        GateKind::Buf => ins[0],
        GateKind::Not => !ins[0],
    }
}

/// Primary output values under `vector`, optionally with `fault` injected.
pub fn naive_outputs(c: &Circuit, vector: &[bool], fault: Option<&Fault>) -> Vec<bool> {
    let mut val: Vec<Option<bool>> = vec![None; c.net_count()];
    for (i, &n) in c.inputs().iter().enumerate() {
        val[n.index()] = Some(vector[i]);
    }
    let (stem, branch, stuck) = match fault.map(|f| (f.site, f.stuck)) {
        Some((FaultSite::Stem(n), s)) => (Some(n), None, s),
        Some((FaultSite::Branch { gate, pin }, s)) => (None, Some((gate, pin)), s),
        None => (None, None, false),
    };
    if let Some(n) = stem {
        val[n.index()] = Some(stuck);
    }
    loop {
        let mut changed = false;
        for (gi, g) in c.gates().iter().enumerate().rev() {
            if stem == Some(g.output) {
                continue;
            }
            let ins: Option<Vec<bool>> = g
                .fanin
                .iter()
                .enumerate()
                .map(|(p, f)| if branch == Some((gi, p)) { Some(stuck) } else { val[f.index()] })
                .collect();
            if let Some(ins) = ins {
                let out = Some(scalar_gate(g.kind, &ins));
                if val[g.output.index()] != out {
                    val[g.output.index()] = out;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    c.outputs().iter().map(|o| val[o.index()].expect("combinational circuit settles")).collect()
}

/// All `2^n` vectors in counting order, input 0 as the least significant bit.
pub fn exhaustive(c: &Circuit) -> Vec<InputVector> {
    let n = c.inputs().len();
    (0..1u64 << n).map(|i| InputVector::from_index(i, n)).collect()
}

/// Brute-force detection table: `d[f]` lists the vector indices detecting `f`.
pub struct NaiveTable {
    pub d: Vec<Vec<u32>>,
    pub n_det: Vec<u32>,
}

pub fn naive_table(c: &Circuit, faults: &[Fault], vectors: &[InputVector]) -> NaiveTable {
    let good: Vec<Vec<bool>> = vectors.iter().map(|v| naive_outputs(c, v.bits(), None)).collect();
    let mut d = vec![Vec::new(); faults.len()];
    let mut n_det = vec![0u32; vectors.len()];
    for (fi, f) in faults.iter().enumerate() {
        for (u, v) in vectors.iter().enumerate() {
            if naive_outputs(c, v.bits(), Some(f)) != good[u] {
                d[fi].push(u as u32);
                n_det[u] += 1;
            }
        }
    }
    NaiveTable { d, n_det }
}

/// Minimum `n_det` over each fault's detecting vectors, 0 when undetected.
pub fn naive_adi_min(t: &NaiveTable) -> Vec<u32> {
    t.d.iter()
        .map(|d| d.iter().map(|&u| t.n_det[u as usize]).min().unwrap_or(0))
        .collect()
}

const KINDS: [&str; 8] = ["AND", "NAND", "OR", "NOR", "XOR", "XNOR", "NOT", "BUFF"];

/// A random combinational `.bench` netlist with 1..=`max_inputs` inputs and
/// 1..=`max_gates` gates, lines shuffled so definitions may follow uses.
pub fn random_bench(seed: u64, max_inputs: usize, max_gates: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_in = rng.random_range(1..=max_inputs);
    let n_gates = rng.random_range(1..=max_gates);
    let mut nets: Vec<String> = (0..n_in).map(|i| format!("i{i}")).collect();
    let mut read = vec![false; n_in + n_gates];
    let mut lines = Vec::new();
    for g in 0..n_gates {
        let kind = KINDS[rng.random_range(0..KINDS.len())];
        let arity = if matches!(kind, "NOT" | "BUFF") { 1 } else { rng.random_range(2..=4) };
        let fanin: Vec<usize> = (0..arity).map(|_| rng.random_range(0..nets.len())).collect();
        for &f in &fanin {
            read[f] = true;
        }
        let names: Vec<&str> = fanin.iter().map(|&f| nets[f].as_str()).collect();
        lines.push(format!("g{g} = {kind}({})", names.join(", ")));
        nets.push(format!("g{g}"));
    }
    lines.shuffle(&mut rng);
    let mut outputs: Vec<usize> = (0..nets.len())
        .filter(|&n| (n >= n_in && !read[n]) || rng.random_bool(0.15))
        .collect();
    if outputs.is_empty() {
        outputs.push(nets.len() - 1);
    }
    let mut text = String::new();
    for n in &nets[..n_in] {
        text.push_str(&format!("INPUT({n})\n"));
    }
    for &o in &outputs {
        text.push_str(&format!("OUTPUT({})\n", nets[o]));
    }
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    text
}
