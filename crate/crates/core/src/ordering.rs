//! The six target-fault orders.
//!
//! Faults with index 0 (not detected by the estimation set) form a block that
//! is placed either at the end (`orig` aside, the default) or at the start
//! (`0decr`, `0dynam`). Ties are broken by ascending fault id everywhere.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Reverse;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::adi::{compute_adi, AdiTable, Aggregator};
use crate::fault::FaultId;
use crate::sim::DetectionOutcome;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Enumeration order.
    Orig,
    /// Increasing index, zero-index faults last.
    Incr0,
    /// Decreasing index, zero-index faults last.
    Decr,
    /// Zero-index faults first, then decreasing index.
    ZeroDecr,
    /// Greedy decreasing index with `n_det` updated after each pick, zero-index faults last.
    Dynam,
    /// Zero-index faults first, then the dynamic order.
    ZeroDynam,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Orig,
        Strategy::Incr0,
        Strategy::Decr,
        Strategy::ZeroDecr,
        Strategy::Dynam,
        Strategy::ZeroDynam,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Orig => "orig",
            Strategy::Incr0 => "incr0",
            Strategy::Decr => "decr",
            Strategy::ZeroDecr => "0decr",
            Strategy::Dynam => "dynam",
            Strategy::ZeroDynam => "0dynam",
        }
    }

    pub fn is_dynamic(self) -> bool {
        matches!(self, Strategy::Dynam | Strategy::ZeroDynam)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderingError {
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error("strategy {0} needs detection data, not just an index table")]
    NeedsOutcome(Strategy),
}

impl FromStr for Strategy {
    type Err = OrderingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['_', '-'], "");
        let strategy = match key.as_str() {
            "orig" => Strategy::Orig,
            "incr0" => Strategy::Incr0,
            "decr" => Strategy::Decr,
            "0decr" | "zerodecr" => Strategy::ZeroDecr,
            "dynam" | "dynm" => Strategy::Dynam,
            "0dynam" | "0dynm" | "zerodynam" => Strategy::ZeroDynam,
            _ => return Err(OrderingError::UnknownStrategy(s.into())),
        };
        Ok(strategy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    /// Seed of the estimation vector set, when known.
    pub seed: Option<u64>,
    pub adi_digest: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedFaultSet {
    order: Vec<FaultId>,
    strategy: Strategy,
    provenance: Provenance,
}

impl OrderedFaultSet {
    pub fn new(order: Vec<FaultId>, strategy: Strategy, provenance: Provenance) -> Self {
        OrderedFaultSet {
            order,
            strategy,
            provenance,
        }
    }

    pub fn order(&self) -> &[FaultId] {
        &self.order
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.provenance.seed = Some(seed);
        self
    }

    /// Whether the order is a permutation of `0..len`.
    pub fn is_permutation(&self) -> bool {
        let mut seen = alloc::vec![false; self.order.len()];
        for id in &self.order {
            match seen.get_mut(id.index()) {
                Some(s) if !*s => *s = true,
                _ => return false,
            }
        }
        true
    }
}

fn ids(v: impl IntoIterator<Item = usize>) -> Vec<FaultId> {
    v.into_iter().map(FaultId::new).collect()
}

/// Orders faults by a fixed index table (`orig`, `incr0`, `decr`, `0decr`).
pub fn order_static(adi: &AdiTable, strategy: Strategy) -> Result<OrderedFaultSet, OrderingError> {
    if strategy.is_dynamic() {
        return Err(OrderingError::NeedsOutcome(strategy));
    }
    let n = adi.len();
    let (zero, mut nonzero): (Vec<usize>, Vec<usize>) = (0..n).partition(|&f| adi.adi(f) == 0);
    match strategy {
        Strategy::Incr0 => nonzero.sort_by_key(|&f| (adi.adi(f), f)),
        Strategy::Decr | Strategy::ZeroDecr => nonzero.sort_by_key(|&f| (Reverse(adi.adi(f)), f)),
        _ => {}
    }
    let order = match strategy {
        Strategy::Orig => ids(0..n),
        Strategy::ZeroDecr => ids(zero.into_iter().chain(nonzero)),
        _ => ids(nonzero.into_iter().chain(zero)),
    };
    Ok(OrderedFaultSet {
        order,
        strategy,
        provenance: Provenance {
            seed: None,
            adi_digest: adi.digest(),
        },
    })
}

/// One pick of the dynamic procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub fault: FaultId,
    /// The fault's index at the moment it was picked.
    pub adi: u32,
}

/// Dynamic ordering (`dynam` / `0dynam`).
pub fn order_dynamic(outcome: &DetectionOutcome, zero_first: bool) -> OrderedFaultSet {
    order_dynamic_with(outcome, zero_first, |_, _| {})
}

/// Dynamic ordering with an observer called after every pick with the
/// selection and the updated `n_det` values.
///
/// Repeatedly picks the unplaced detected fault of largest current index
/// (minimum of current `n_det(u)` over `D(f)`), then decrements `n_det(u)` for
/// every `u` in its `D(f)`. Values only ever decrease, so a max-heap with lazy
/// revalidation yields the same picks as recomputing every index each step.
pub fn order_dynamic_with<F>(outcome: &DetectionOutcome, zero_first: bool, mut observer: F) -> OrderedFaultSet
where
    F: FnMut(Selection, &[u32]),
{
    let n = outcome.num_faults();
    let sets: Vec<Vec<u32>> = (0..n).map(|f| outcome.detected_by(f).collect()).collect();
    let mut n_det = outcome.n_det().to_vec();
    let current = |f: usize, n_det: &[u32]| sets[f].iter().map(|&u| n_det[u as usize]).min().unwrap_or(0);

    let mut heap: BinaryHeap<(u32, Reverse<usize>)> = (0..n)
        .filter(|&f| !sets[f].is_empty())
        .map(|f| (current(f, &n_det), Reverse(f)))
        .collect();
    let mut picked = Vec::with_capacity(heap.len());
    while let Some((stored, Reverse(f))) = heap.pop() {
        let now = current(f, &n_det);
        if now != stored {
            heap.push((now, Reverse(f)));
            continue;
        }
        for &u in &sets[f] {
            n_det[u as usize] -= 1;
        }
        picked.push(f);
        observer(
            Selection {
                fault: FaultId::new(f),
                adi: now,
            },
            &n_det,
        );
    }

    let zero = (0..n).filter(|&f| sets[f].is_empty());
    let order = if zero_first {
        ids(zero.chain(picked))
    } else {
        let mut v = picked;
        v.extend(zero);
        ids(v)
    };
    OrderedFaultSet {
        order,
        strategy: if zero_first { Strategy::ZeroDynam } else { Strategy::Dynam },
        provenance: Provenance {
            seed: None,
            adi_digest: compute_adi(outcome, Aggregator::Min).digest(),
        },
    }
}

/// Builds the order for any strategy.
pub fn order_faults(strategy: Strategy, adi: &AdiTable, outcome: &DetectionOutcome) -> OrderedFaultSet {
    match strategy {
        Strategy::Dynam => order_dynamic(outcome, false),
        Strategy::ZeroDynam => order_dynamic(outcome, true),
        s => order_static(adi, s).expect("static strategy"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn table(values: &[u32]) -> AdiTable {
        AdiTable::from_values(values.to_vec(), values.iter().map(|&v| v > 0).collect(), Aggregator::Min)
    }

    fn idx(o: &OrderedFaultSet) -> Vec<usize> {
        o.order().iter().map(|f| f.index()).collect()
    }

    #[test]
    fn small_static_orders() {
        let t = table(&[0, 5, 3]);
        assert_eq!(idx(&order_static(&t, Strategy::Decr).unwrap()), [1, 2, 0]);
        assert_eq!(idx(&order_static(&t, Strategy::ZeroDecr).unwrap()), [0, 1, 2]);
        assert_eq!(idx(&order_static(&t, Strategy::Incr0).unwrap()), [2, 1, 0]);
        assert_eq!(idx(&order_static(&t, Strategy::Orig).unwrap()), [0, 1, 2]);
    }

    #[test]
    fn equal_values_give_identity() {
        let t = table(&[4, 4, 4, 4]);
        for s in [Strategy::Orig, Strategy::Incr0, Strategy::Decr, Strategy::ZeroDecr] {
            assert_eq!(idx(&order_static(&t, s).unwrap()), [0, 1, 2, 3]);
        }
        let outcome = DetectionOutcome::from_sets(&[vec![0], vec![1], vec![2], vec![3]], vec![4, 4, 4, 4]);
        assert_eq!(idx(&order_dynamic(&outcome, false)), [0, 1, 2, 3]);
    }

    #[test]
    fn static_rejects_dynamic() {
        assert_eq!(
            order_static(&table(&[1]), Strategy::Dynam),
            Err(OrderingError::NeedsOutcome(Strategy::Dynam))
        );
    }

    #[test]
    fn single_fault_decrements_its_vector() {
        let outcome = DetectionOutcome::from_sets(&[vec![1]], vec![3, 5]);
        let mut last = Vec::new();
        let o = order_dynamic_with(&outcome, false, |_, n| last = n.to_vec());
        assert_eq!(idx(&o), [0]);
        assert_eq!(last, [3, 4]);
    }

    #[test]
    fn zero_block_placement() {
        let outcome = DetectionOutcome::from_sets(&[vec![], vec![0], vec![], vec![0, 1]], vec![2, 1]);
        assert_eq!(idx(&order_dynamic(&outcome, false)), [1, 3, 0, 2]);
        assert_eq!(idx(&order_dynamic(&outcome, true)), [0, 2, 1, 3]);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!("ZERO_DYNAM".parse::<Strategy>().unwrap(), Strategy::ZeroDynam);
        assert_eq!("0dynm".parse::<Strategy>().unwrap(), Strategy::ZeroDynam);
        assert!("best".parse::<Strategy>().is_err());
    }

    #[test]
    fn permutation_check() {
        let p = Provenance { seed: None, adi_digest: 0 };
        assert!(OrderedFaultSet::new(ids([2, 0, 1]), Strategy::Orig, p).is_permutation());
        assert!(!OrderedFaultSet::new(ids([2, 0, 0]), Strategy::Orig, p).is_permutation());
        assert!(!OrderedFaultSet::new(ids([3, 0, 1]), Strategy::Orig, p).is_permutation());
    }
}
