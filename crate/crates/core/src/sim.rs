//! Bit-parallel logic and stuck-at fault simulation.
//!
//! Vectors are packed up to 64 per word (bit `i` of a net's word is that net
//! under vector `i` of the block). Faults are simulated one at a time across
//! a whole block, propagating only through the fault's fan-out cone.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::fault::{Fault, FaultSite};
use crate::netlist::{Circuit, NetId};

pub const WORD_BITS: usize = 64;

/// A fully specified input assignment in [`Circuit::inputs`] order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InputVector(Vec<bool>);

impl InputVector {
    pub fn new(bits: Vec<bool>) -> Self {
        InputVector(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Vector whose input `i` is bit `i` of `value` (inputs beyond 64 are 0).
    pub fn from_index(value: u64, width: usize) -> Self {
        InputVector((0..width).map(|i| i < 64 && (value >> i) & 1 == 1).collect())
    }
}

impl fmt::Display for InputVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid vector character `{found}` at position {position}")]
pub struct VectorParseError {
    pub found: char,
    pub position: usize,
}

impl FromStr for InputVector {
    type Err = VectorParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .enumerate()
            .map(|(position, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                found => Err(VectorParseError { found, position }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(InputVector)
    }
}

/// Up to [`WORD_BITS`] vectors packed one word per circuit input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternBlock {
    words: Vec<u64>,
    width: usize,
}

impl PatternBlock {
    /// Packs `vectors` (at most 64, at least 1). Unused high bits are zero.
    pub fn pack(vectors: &[InputVector], num_inputs: usize) -> Self {
        assert!(!vectors.is_empty() && vectors.len() <= WORD_BITS);
        let mut words = vec![0u64; num_inputs];
        for (bit, v) in vectors.iter().enumerate() {
            assert_eq!(v.len(), num_inputs, "vector width does not match circuit inputs");
            for (w, &b) in words.iter_mut().zip(v.bits()) {
                *w |= u64::from(b) << bit;
            }
        }
        PatternBlock {
            words,
            width: vectors.len(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// One word per circuit input.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn mask(&self) -> u64 {
        width_mask(self.width)
    }
}

fn width_mask(width: usize) -> u64 {
    if width >= WORD_BITS {
        !0
    } else {
        (1u64 << width) - 1
    }
}

/// Two-valued evaluation of every net for every vector in the block; bits
/// above the block width are zero.
pub fn good_sim(circuit: &Circuit, block: &PatternBlock) -> Vec<u64> {
    let mut values = vec![0u64; circuit.net_count()];
    good_sim_into(circuit, block, &mut values);
    values
}

fn good_sim_into(circuit: &Circuit, block: &PatternBlock, values: &mut [u64]) {
    let mask = block.mask();
    for (&net, &w) in circuit.inputs().iter().zip(block.words()) {
        values[net.index()] = w & mask;
    }
    for g in circuit.gates() {
        let v = g.kind.eval_words(g.fanin.iter().map(|f| values[f.index()]));
        values[g.output.index()] = v & mask;
    }
}

/// Single-fault propagation kernel over one loaded block.
///
/// `load` runs the good machine; `detect` returns the mask of block vectors
/// under which the fault reaches an output.
pub struct FaultSimulator<'c> {
    circuit: &'c Circuit,
    good: Vec<u64>,
    faulty: Vec<u64>,
    touched: Vec<usize>,
    scheduled: Vec<bool>,
    buckets: Vec<Vec<usize>>,
    mask: u64,
    evaluations: u64,
}

impl<'c> FaultSimulator<'c> {
    pub fn new(circuit: &'c Circuit) -> Self {
        FaultSimulator {
            circuit,
            good: vec![0; circuit.net_count()],
            faulty: vec![0; circuit.net_count()],
            touched: Vec::new(),
            scheduled: vec![false; circuit.gates().len()],
            buckets: vec![Vec::new(); circuit.depth() as usize + 1],
            mask: 0,
            evaluations: 0,
        }
    }

    pub fn load(&mut self, block: &PatternBlock) {
        good_sim_into(self.circuit, block, &mut self.good);
        self.faulty.copy_from_slice(&self.good);
        self.mask = block.mask();
        self.evaluations += self.circuit.gates().len() as u64;
    }

    pub fn good_values(&self) -> &[u64] {
        &self.good
    }

    /// Gate evaluations performed so far, a deterministic effort measure.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    fn schedule_fanout(&mut self, net: NetId, lo: &mut usize) {
        for p in self.circuit.fanout(net) {
            if !self.scheduled[p.gate] {
                self.scheduled[p.gate] = true;
                let level = self.circuit.gates()[p.gate].level as usize;
                self.buckets[level].push(p.gate);
                *lo = (*lo).min(level);
            }
        }
    }

    pub fn detect(&mut self, fault: &Fault) -> u64 {
        let circuit = self.circuit;
        let mask = self.mask;
        let forced = if fault.stuck { mask } else { 0 };
        let mut detected = 0u64;
        let mut lo = usize::MAX;
        let mut branch: Option<(usize, usize)> = None;

        match fault.site {
            FaultSite::Stem(net) => {
                let diff = (forced ^ self.good[net.index()]) & mask;
                if diff == 0 {
                    return 0;
                }
                self.faulty[net.index()] = forced;
                self.touched.push(net.index());
                if circuit.is_output(net) {
                    detected |= diff;
                }
                self.schedule_fanout(net, &mut lo);
            }
            FaultSite::Branch { gate, pin } => {
                let net = circuit.gates()[gate].fanin[pin];
                if (forced ^ self.good[net.index()]) & mask == 0 {
                    return 0;
                }
                branch = Some((gate, pin));
                self.scheduled[gate] = true;
                let level = circuit.gates()[gate].level as usize;
                self.buckets[level].push(gate);
                lo = level;
            }
        }

        let mut level = lo;
        while level < self.buckets.len() {
            let mut i = 0;
            while i < self.buckets[level].len() {
                let g = self.buckets[level][i];
                i += 1;
                self.scheduled[g] = false;
                let gate = &circuit.gates()[g];
                let faulty = &self.faulty;
                let value = match branch {
                    Some((bg, bp)) if bg == g => gate.kind.eval_words(
                        gate.fanin
                            .iter()
                            .enumerate()
                            .map(|(p, f)| if p == bp { forced } else { faulty[f.index()] }),
                    ),
                    _ => gate.kind.eval_words(gate.fanin.iter().map(|f| faulty[f.index()])),
                } & mask;
                self.evaluations += 1;
                let out = gate.output;
                let diff = value ^ self.good[out.index()];
                if diff != 0 {
                    self.faulty[out.index()] = value;
                    self.touched.push(out.index());
                    if circuit.is_output(out) {
                        detected |= diff;
                    }
                    let mut unused = usize::MAX;
                    self.schedule_fanout(out, &mut unused);
                }
            }
            self.buckets[level].clear();
            level += 1;
        }

        for &n in &self.touched {
            self.faulty[n] = self.good[n];
        }
        self.touched.clear();
        detected
    }
}

/// Per-fault detecting-vector sets `D(f)` and per-vector counts `n_det(u)`.
///
/// `D(f)` is stored as a bit row of `ceil(|U| / 64)` words per fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionOutcome {
    num_vectors: usize,
    row_words: usize,
    rows: Vec<u64>,
    n_det: Vec<u32>,
    first_detection: Vec<Option<u32>>,
}

impl DetectionOutcome {
    fn empty(num_faults: usize, num_vectors: usize) -> Self {
        let row_words = num_vectors.div_ceil(WORD_BITS);
        DetectionOutcome {
            num_vectors,
            row_words,
            rows: vec![0; row_words * num_faults],
            n_det: vec![0; num_vectors],
            first_detection: vec![None; num_faults],
        }
    }

    /// Builds an outcome from explicit `D(f)` sets and `n_det` values.
    ///
    /// `n_det` is taken as given rather than recounted, so fixtures that show
    /// only part of a fault list can carry the full per-vector counts.
    pub fn from_sets(sets: &[Vec<u32>], n_det: Vec<u32>) -> Self {
        let mut out = DetectionOutcome::empty(sets.len(), n_det.len());
        for (f, set) in sets.iter().enumerate() {
            for &u in set {
                assert!((u as usize) < out.num_vectors, "vector index out of range");
                out.rows[f * out.row_words + u as usize / WORD_BITS] |= 1 << (u as usize % WORD_BITS);
            }
            out.first_detection[f] = set.iter().copied().min();
        }
        out.n_det = n_det;
        out
    }

    pub fn num_faults(&self) -> usize {
        self.first_detection.len()
    }

    pub fn num_vectors(&self) -> usize {
        self.num_vectors
    }

    pub fn n_det(&self) -> &[u32] {
        &self.n_det
    }

    pub fn first_detection(&self) -> &[Option<u32>] {
        &self.first_detection
    }

    pub fn is_detected(&self, fault: usize) -> bool {
        self.first_detection[fault].is_some()
    }

    pub fn detects(&self, fault: usize, vector: usize) -> bool {
        (self.row(fault)[vector / WORD_BITS] >> (vector % WORD_BITS)) & 1 == 1
    }

    pub fn row(&self, fault: usize) -> &[u64] {
        &self.rows[fault * self.row_words..(fault + 1) * self.row_words]
    }

    /// Vector indices in `D(f)`, ascending.
    pub fn detected_by(&self, fault: usize) -> impl Iterator<Item = u32> + '_ {
        self.row(fault).iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            core::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros();
                bits &= bits - 1;
                Some((w * WORD_BITS) as u32 + b)
            })
        })
    }

    pub fn detection_count(&self, fault: usize) -> usize {
        self.row(fault).iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Result of simulation with fault dropping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DropOutcome {
    pub first_detection: Vec<Option<u32>>,
    /// Faults first detected by each vector.
    pub new_detections: Vec<u32>,
}

impl DropOutcome {
    pub fn detected_count(&self) -> usize {
        self.first_detection.iter().filter(|d| d.is_some()).count()
    }
}

/// Runs fault simulation with an optional per-fault detection cap, using
/// blocks of `block_width` vectors (1..=64).
pub fn simulate_capped(
    circuit: &Circuit,
    faults: &[Fault],
    vectors: &[InputVector],
    cap: Option<u32>,
    block_width: usize,
) -> DetectionOutcome {
    assert!((1..=WORD_BITS).contains(&block_width));
    let mut out = DetectionOutcome::empty(faults.len(), vectors.len());
    let mut counts = vec![0u32; faults.len()];
    let mut sim = FaultSimulator::new(circuit);
    let num_inputs = circuit.inputs().len();
    for (b, chunk) in vectors.chunks(block_width).enumerate() {
        let base = b * block_width;
        sim.load(&PatternBlock::pack(chunk, num_inputs));
        for (f, fault) in faults.iter().enumerate() {
            let room = match cap {
                Some(n) if counts[f] >= n => continue,
                Some(n) => n - counts[f],
                None => u32::MAX,
            };
            let mut hits = sim.detect(fault);
            let mut taken = 0;
            while hits != 0 && taken < room {
                let bit = hits.trailing_zeros() as usize;
                hits &= hits - 1;
                let u = base + bit;
                out.rows[f * out.row_words + u / WORD_BITS] |= 1 << (u % WORD_BITS);
                out.n_det[u] += 1;
                if out.first_detection[f].is_none() {
                    out.first_detection[f] = Some(u as u32);
                }
                taken += 1;
            }
            counts[f] += taken;
        }
    }
    out
}

/// Full `D(f)` for every fault over every vector (no fault dropping).
pub fn fault_sim_nodrop(circuit: &Circuit, faults: &[Fault], vectors: &[InputVector]) -> DetectionOutcome {
    simulate_capped(circuit, faults, vectors, None, WORD_BITS)
}

/// n-detection simulation: each fault is dropped after its `n`-th detection.
pub fn fault_sim_ndet(circuit: &Circuit, faults: &[Fault], vectors: &[InputVector], n: u32) -> DetectionOutcome {
    assert!(n >= 1, "detection cap must be at least 1");
    simulate_capped(circuit, faults, vectors, Some(n), WORD_BITS)
}

/// Simulation with fault dropping.
pub fn fault_sim_drop(circuit: &Circuit, faults: &[Fault], vectors: &[InputVector]) -> DropOutcome {
    let out = simulate_capped(circuit, faults, vectors, Some(1), WORD_BITS);
    DropOutcome {
        first_detection: out.first_detection,
        new_detections: out.n_det,
    }
}

/// Evaluates a single vector on the good machine; returns the output values.
pub fn eval_outputs(circuit: &Circuit, vector: &InputVector) -> Vec<bool> {
    let values = good_sim(circuit, &PatternBlock::pack(core::slice::from_ref(vector), circuit.inputs().len()));
    circuit.outputs().iter().map(|o| values[o.index()] & 1 == 1).collect()
}
