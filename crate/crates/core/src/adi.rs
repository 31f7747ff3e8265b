//! Estimation vector selection and the accidental detection index.
//!
//! For a fault `f` detected by the estimation set `U`, the index is the
//! smallest number of faults detected by any single vector of `U` that also
//! detects `f` (the fault itself included). Faults not detected by `U` get 0.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::hash::Hasher;
use core::str::FromStr;

use fnv::FnvHasher;
use thiserror::Error;

use crate::fault::Fault;
use crate::netlist::Circuit;
use crate::rng::VectorStream;
use crate::sim::{DetectionOutcome, FaultSimulator, InputVector, PatternBlock, WORD_BITS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdiError {
    #[error("no detected faults")]
    NoDetectedFaults,
    #[error("target coverage must be in (0, 1], got {0}")]
    TargetCoverage(f64),
    #[error("max vectors must be at least 1")]
    MaxVectors,
    #[error("unknown aggregator `{0}`")]
    UnknownAggregator(alloc::string::String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Aggregator {
    /// Smallest `n_det(u)` over `D(f)`.
    #[default]
    Min,
    /// Rounded-down mean of `n_det(u)` over `D(f)`.
    Mean,
}

impl Aggregator {
    pub fn name(self) -> &'static str {
        match self {
            Aggregator::Min => "min",
            Aggregator::Mean => "mean",
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggregator {
    type Err = AdiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "min" => Ok(Aggregator::Min),
            "mean" | "avg" | "average" => Ok(Aggregator::Mean),
            _ => Err(AdiError::UnknownAggregator(s.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct USelectParams {
    pub seed: u64,
    pub target_coverage: f64,
    pub max_vectors: usize,
    pub prune: bool,
}

impl Default for USelectParams {
    fn default() -> Self {
        USelectParams {
            seed: 1,
            target_coverage: 0.90,
            max_vectors: 10_000,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct USelection {
    /// The estimation set `U`.
    pub vectors: Vec<InputVector>,
    pub seed: u64,
    pub target_coverage: f64,
    pub max_vectors: usize,
    pub pruned: bool,
    /// Random vectors kept before pruning (the truncation point `N`).
    pub truncation_point: usize,
    /// Faults detected by the first `N` vectors under fault dropping.
    pub detected: usize,
    /// Detections required to stop, `ceil(target_coverage * |F|)`.
    pub threshold: usize,
}

/// `ceil(target * total)`, tolerant of binary rounding (0.9 * 10 is 9, not 10).
pub fn coverage_threshold(target: f64, total: usize) -> usize {
    let x = target * total as f64 - 1e-9;
    if x <= 0.0 {
        return 0;
    }
    let floor = x as usize;
    if (floor as f64) < x {
        floor + 1
    } else {
        floor
    }
}

/// Draws random vectors from `seed`, simulates them with fault dropping and
/// keeps the prefix up to the first vector at which the cumulative detection
/// count reaches the coverage threshold (or all `max_vectors` if it never
/// does). With `prune`, vectors of that prefix that detected no new fault are
/// discarded.
pub fn select_u(circuit: &Circuit, faults: &[Fault], params: &USelectParams) -> Result<USelection, AdiError> {
    if !(params.target_coverage > 0.0 && params.target_coverage <= 1.0) {
        return Err(AdiError::TargetCoverage(params.target_coverage));
    }
    if params.max_vectors == 0 {
        return Err(AdiError::MaxVectors);
    }
    let threshold = coverage_threshold(params.target_coverage, faults.len());
    let num_inputs = circuit.inputs().len();
    let mut stream = VectorStream::new(num_inputs, params.seed);
    let mut sim = FaultSimulator::new(circuit);
    let mut detected = vec![false; faults.len()];
    let mut kept: Vec<(InputVector, u32)> = Vec::new();
    let mut cumulative = 0usize;
    let mut generated = 0usize;

    'outer: while generated < params.max_vectors {
        let width = (params.max_vectors - generated).min(WORD_BITS);
        let block: Vec<InputVector> = stream.by_ref().take(width).collect();
        generated += width;
        sim.load(&PatternBlock::pack(&block, num_inputs));
        let mut new_counts = [0u32; WORD_BITS];
        for (f, fault) in faults.iter().enumerate() {
            if detected[f] {
                continue;
            }
            let hits = sim.detect(fault);
            if hits != 0 {
                detected[f] = true;
                new_counts[hits.trailing_zeros() as usize] += 1;
            }
        }
        for (i, v) in block.into_iter().enumerate() {
            cumulative += new_counts[i] as usize;
            kept.push((v, new_counts[i]));
            if cumulative >= threshold {
                break 'outer;
            }
        }
    }

    let truncation_point = kept.len();
    let vectors = if params.prune {
        kept.into_iter().filter(|(_, n)| *n > 0).map(|(v, _)| v).collect()
    } else {
        kept.into_iter().map(|(v, _)| v).collect()
    };
    Ok(USelection {
        vectors,
        seed: params.seed,
        target_coverage: params.target_coverage,
        max_vectors: params.max_vectors,
        pruned: params.prune,
        truncation_point,
        detected: cumulative,
        threshold,
    })
}

/// Per-fault accidental detection index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdiTable {
    adi: Vec<u32>,
    detected: Vec<bool>,
    aggregator: Aggregator,
}

impl AdiTable {
    pub fn from_values(adi: Vec<u32>, detected: Vec<bool>, aggregator: Aggregator) -> Self {
        assert_eq!(adi.len(), detected.len());
        AdiTable {
            adi,
            detected,
            aggregator,
        }
    }

    pub fn len(&self) -> usize {
        self.adi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adi.is_empty()
    }

    pub fn adi(&self, fault: usize) -> u32 {
        self.adi[fault]
    }

    pub fn values(&self) -> &[u32] {
        &self.adi
    }

    /// Membership in `F_U`.
    pub fn is_detected(&self, fault: usize) -> bool {
        self.detected[fault]
    }

    pub fn aggregator(&self) -> Aggregator {
        self.aggregator
    }

    pub fn detected_count(&self) -> usize {
        self.detected.iter().filter(|d| **d).count()
    }

    /// FNV-1a digest of the table, recorded as provenance of derived orders.
    pub fn digest(&self) -> u64 {
        let mut h = FnvHasher::default();
        h.write(self.aggregator.name().as_bytes());
        for (&a, &d) in self.adi.iter().zip(&self.detected) {
            h.write_u32(a);
            h.write_u8(u8::from(d));
        }
        h.finish()
    }
}

/// Computes the index of every fault from `D(f)` and `n_det(u)`.
pub fn compute_adi(outcome: &DetectionOutcome, aggregator: Aggregator) -> AdiTable {
    let n_det = outcome.n_det();
    let mut adi = Vec::with_capacity(outcome.num_faults());
    let mut detected = Vec::with_capacity(outcome.num_faults());
    for f in 0..outcome.num_faults() {
        let value = match aggregator {
            Aggregator::Min => outcome.detected_by(f).map(|u| n_det[u as usize]).min().unwrap_or(0),
            Aggregator::Mean => {
                let (sum, count) = outcome
                    .detected_by(f)
                    .fold((0u64, 0u64), |(s, c), u| (s + u64::from(n_det[u as usize]), c + 1));
                sum.checked_div(count).unwrap_or(0) as u32
            }
        };
        adi.push(value);
        detected.push(outcome.is_detected(f));
    }
    AdiTable {
        adi,
        detected,
        aggregator,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiStats {
    pub min: u32,
    pub max: u32,
    pub ratio: f64,
}

/// Minimum, maximum and max/min over detected faults only.
pub fn adi_stats(table: &AdiTable) -> Result<AdiStats, AdiError> {
    let mut values = table.adi.iter().zip(&table.detected).filter(|(_, d)| **d).map(|(a, _)| *a);
    let first = values.next().ok_or(AdiError::NoDetectedFaults)?;
    let (min, max) = values.fold((first, first), |(lo, hi), a| (lo.min(a), hi.max(a)));
    Ok(AdiStats {
        min,
        max,
        ratio: if min == 0 { f64::INFINITY } else { f64::from(max) / f64::from(min) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault::enumerate_faults;
    use crate::netlist::parse_bench;

    /// `n_det(u)` for the 16 vectors of the four-input example circuit.
    const EXAMPLE_NDET: [u32; 16] = [11, 11, 13, 13, 12, 11, 11, 15, 11, 11, 8, 7, 11, 14, 8, 8];

    fn example(sets: &[&[u32]]) -> AdiTable {
        let sets: Vec<Vec<u32>> = sets.iter().map(|s| s.to_vec()).collect();
        compute_adi(&DetectionOutcome::from_sets(&sets, EXAMPLE_NDET.to_vec()), Aggregator::Min)
    }

    #[test]
    fn worked_example_values() {
        let t = example(&[&[9, 10, 11, 12, 13, 14, 15], &[4, 7, 13], &[10, 14, 15]]);
        assert_eq!(t.values(), [7, 12, 8]);
    }

    #[test]
    fn mean_aggregation_rounds_down() {
        let sets = [alloc::vec![4, 7, 13]];
        let t = compute_adi(&DetectionOutcome::from_sets(&sets, EXAMPLE_NDET.to_vec()), Aggregator::Mean);
        // (12 + 15 + 14) / 3 = 13.67
        assert_eq!(t.values(), [13]);
    }

    #[test]
    fn undetected_fault_is_zero() {
        let t = example(&[&[], &[3]]);
        assert_eq!(t.values(), [0, 13]);
        assert!(!t.is_detected(0));
        assert!(t.is_detected(1));
    }

    #[test]
    fn stats() {
        let t = AdiTable::from_values(alloc::vec![5, 5, 0], alloc::vec![true, true, false], Aggregator::Min);
        assert_eq!(adi_stats(&t).unwrap(), AdiStats { min: 5, max: 5, ratio: 1.0 });
        let t = AdiTable::from_values(alloc::vec![7, 14], alloc::vec![true, true], Aggregator::Min);
        assert_eq!(adi_stats(&t).unwrap().ratio, 2.0);
        let t = AdiTable::from_values(alloc::vec![0, 0], alloc::vec![false, false], Aggregator::Min);
        assert_eq!(adi_stats(&t), Err(AdiError::NoDetectedFaults));
    }

    #[test]
    fn threshold_rounding() {
        assert_eq!(coverage_threshold(0.9, 10), 9);
        assert_eq!(coverage_threshold(0.9, 11), 10);
        assert_eq!(coverage_threshold(1.0, 34), 34);
        assert_eq!(coverage_threshold(0.9, 40), 36);
    }

    #[test]
    fn full_target_with_all_detecting_first_vector() {
        // A single buffer: any vector detects one of the two stem faults on each
        // net, so full coverage needs both polarities; a single inverter chain
        // with target = half the faults stops at the first vector.
        let c = parse_bench("t", "INPUT(a)\nOUTPUT(b)\nb = BUF(a)\n").unwrap();
        let fs = enumerate_faults(&c, false);
        let u = select_u(
            &c,
            fs.faults(),
            &USelectParams {
                target_coverage: 0.5,
                ..USelectParams::default()
            },
        )
        .unwrap();
        assert_eq!(u.truncation_point, 1);
        assert_eq!(u.vectors.len(), 1);
    }

    #[test]
    fn pruned_vectors_all_detect_something_new() {
        let c = parse_bench("c17", crate::netlist::tests::C17).unwrap();
        let fs = enumerate_faults(&c, false);
        let params = USelectParams {
            target_coverage: 1.0,
            max_vectors: 200,
            prune: true,
            seed: 3,
        };
        let u = select_u(&c, fs.faults(), &params).unwrap();
        let drop = crate::sim::fault_sim_drop(&c, fs.faults(), &u.vectors);
        assert!(drop.new_detections.iter().all(|&n| n > 0));
        assert!(u.vectors.len() <= u.truncation_point);
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = parse_bench("t", "INPUT(a)\nOUTPUT(b)\nb = BUF(a)\n").unwrap();
        let fs = enumerate_faults(&c, false);
        let bad = USelectParams {
            target_coverage: 0.0,
            ..USelectParams::default()
        };
        assert!(matches!(select_u(&c, fs.faults(), &bad), Err(AdiError::TargetCoverage(_))));
        let bad = USelectParams {
            max_vectors: 0,
            ..USelectParams::default()
        };
        assert_eq!(select_u(&c, fs.faults(), &bad), Err(AdiError::MaxVectors));
    }
}
