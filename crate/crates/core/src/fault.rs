//! Single stuck-at fault enumeration and structural equivalence collapsing.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::netlist::{Circuit, GateKind, NetId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaultId(u32);

impl FaultId {
    pub fn new(index: usize) -> Self {
        FaultId(u32::try_from(index).expect("fault index exceeds u32"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for FaultId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FaultSite {
    /// The whole net, as seen by every reader.
    Stem(NetId),
    /// One gate input pin of a net with more than one observation point.
    Branch { gate: usize, pin: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fault {
    pub id: FaultId,
    pub site: FaultSite,
    pub stuck: bool,
}

impl Fault {
    /// The net carrying the fault: the stem itself or the net feeding the branch.
    pub fn net(&self, circuit: &Circuit) -> NetId {
        match self.site {
            FaultSite::Stem(net) => net,
            FaultSite::Branch { gate, pin } => circuit.gates()[gate].fanin[pin],
        }
    }

    /// `net` for a stem, `net->gate_output:pin` for a branch.
    pub fn site_label(&self, circuit: &Circuit) -> String {
        match self.site {
            FaultSite::Stem(net) => String::from(circuit.net_name(net)),
            FaultSite::Branch { gate, pin } => {
                let g = &circuit.gates()[gate];
                format!("{}->{}:{}", circuit.net_name(g.fanin[pin]), circuit.net_name(g.output), pin)
            }
        }
    }

    /// Empty for a stem, `gate_output:pin` for a branch.
    pub fn pin_label(&self, circuit: &Circuit) -> String {
        match self.site {
            FaultSite::Stem(_) => String::new(),
            FaultSite::Branch { gate, pin } => format!("{}:{}", circuit.net_name(circuit.gates()[gate].output), pin),
        }
    }
}

/// The target fault list `F`. Fault ids are dense and equal to list position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaultSet {
    faults: Vec<Fault>,
    collapsed: bool,
    representative_of: Vec<(Fault, FaultId)>,
}

impl FaultSet {
    pub fn faults(&self) -> &[Fault] {
        &self.faults
    }

    pub fn len(&self) -> usize {
        self.faults.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faults.is_empty()
    }

    pub fn get(&self, id: FaultId) -> &Fault {
        &self.faults[id.index()]
    }

    pub fn is_collapsed(&self) -> bool {
        self.collapsed
    }

    /// Collapsed-away faults (carrying their uncollapsed enumeration id) paired
    /// with the id of their representative in this set. Empty when uncollapsed.
    pub fn representative_of(&self) -> &[(Fault, FaultId)] {
        &self.representative_of
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    /// Keeps the smaller root so every class is represented by its first fault.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Enumerates `F`: nets in index order, each stem before its branches,
/// stuck-at-0 before stuck-at-1. Branch faults exist for every gate pin of a
/// net with more than one observation point (gate pins plus primary output).
///
/// With `collapse`, gate-local equivalences are merged and the first fault of
/// each class is kept.
pub fn enumerate_faults(circuit: &Circuit, collapse: bool) -> FaultSet {
    let mut faults = Vec::new();
    let mut stem_id = vec![0usize; circuit.net_count()];
    let mut branch_id: Vec<Vec<Option<usize>>> = circuit.gates().iter().map(|g| vec![None; g.fanin.len()]).collect();
    for (n, stem) in stem_id.iter_mut().enumerate() {
        let net = NetId::new(n);
        *stem = faults.len();
        for stuck in [false, true] {
            faults.push(Fault {
                id: FaultId::new(faults.len()),
                site: FaultSite::Stem(net),
                stuck,
            });
        }
        if circuit.fanout_count(net) > 1 {
            for p in circuit.fanout(net) {
                branch_id[p.gate][p.pin] = Some(faults.len());
                for stuck in [false, true] {
                    faults.push(Fault {
                        id: FaultId::new(faults.len()),
                        site: FaultSite::Branch { gate: p.gate, pin: p.pin },
                        stuck,
                    });
                }
            }
        }
    }
    if !collapse {
        return FaultSet {
            faults,
            collapsed: false,
            representative_of: Vec::new(),
        };
    }

    let mut uf = UnionFind((0..faults.len()).collect());
    for (g, gate) in circuit.gates().iter().enumerate() {
        let out = stem_id[gate.output.index()];
        // (input stuck value, equivalent output stuck value)
        let pairs: &[(bool, bool)] = match gate.kind {
            GateKind::And => &[(false, false)],
            GateKind::Nand => &[(false, true)],
            GateKind::Or => &[(true, true)],
            GateKind::Nor => &[(true, false)],
            GateKind::Buf => &[(false, false), (true, true)],
            GateKind::Not => &[(false, true), (true, false)],
            GateKind::Xor | GateKind::Xnor => &[],
        };
        for (pin, f) in gate.fanin.iter().enumerate() {
            let input = branch_id[g][pin].unwrap_or(stem_id[f.index()]);
            for &(in_v, out_v) in pairs {
                uf.union(input + usize::from(in_v), out + usize::from(out_v));
            }
        }
    }

    let mut new_id = vec![usize::MAX; faults.len()];
    let mut kept = Vec::new();
    for i in 0..faults.len() {
        if uf.find(i) == i {
            new_id[i] = kept.len();
            kept.push(Fault {
                id: FaultId::new(kept.len()),
                ..faults[i]
            });
        }
    }
    let mut representative_of = Vec::new();
    for (i, f) in faults.iter().enumerate() {
        let root = uf.find(i);
        if root != i {
            representative_of.push((*f, FaultId::new(new_id[root])));
        }
    }
    FaultSet {
        faults: kept,
        collapsed: true,
        representative_of,
    }
}
