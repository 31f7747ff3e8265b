//! PODEM test generation and the ordered test generation loop.
//!
//! The engine tracks the good and the faulty machine separately in
//! three-valued logic; the classic five values (`0`, `1`, `X`, `D`, `D'`) are
//! the projection of such a pair. Decisions are made on primary inputs only.
//! Implication is event driven, so undoing a decision is just re-assigning
//! the input to `X`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fault::{Fault, FaultId, FaultSet, FaultSite};
use crate::netlist::{Circuit, Driver, GateKind, NetId};
use crate::ordering::OrderedFaultSet;
use crate::rng::seeded_rng;
use crate::sim::{FaultSimulator, InputVector, PatternBlock};

/// Three-valued logic value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Logic {
    Zero,
    One,
    X,
}

impl Logic {
    pub fn from_bool(b: bool) -> Logic {
        if b {
            Logic::One
        } else {
            Logic::Zero
        }
    }

    pub fn known(self) -> Option<bool> {
        match self {
            Logic::Zero => Some(false),
            Logic::One => Some(true),
            Logic::X => None,
        }
    }

    fn not(self) -> Logic {
        match self {
            Logic::Zero => Logic::One,
            Logic::One => Logic::Zero,
            Logic::X => Logic::X,
        }
    }
}

/// Three-valued gate evaluation.
pub fn eval_logic<I: IntoIterator<Item = Logic>>(kind: GateKind, inputs: I) -> Logic {
    let mut it = inputs.into_iter();
    let base = match kind {
        GateKind::And | GateKind::Nand => {
            let mut acc = Logic::One;
            for v in it {
                match v {
                    Logic::Zero => {
                        acc = Logic::Zero;
                        break;
                    }
                    Logic::X => acc = Logic::X,
                    Logic::One => {}
                }
            }
            acc
        }
        GateKind::Or | GateKind::Nor => {
            let mut acc = Logic::Zero;
            for v in it {
                match v {
                    Logic::One => {
                        acc = Logic::One;
                        break;
                    }
                    Logic::X => acc = Logic::X,
                    Logic::Zero => {}
                }
            }
            acc
        }
        GateKind::Xor | GateKind::Xnor => {
            let mut parity = false;
            let mut unknown = false;
            for v in it {
                match v.known() {
                    Some(b) => parity ^= b,
                    None => unknown = true,
                }
            }
            if unknown {
                Logic::X
            } else {
                Logic::from_bool(parity)
            }
        }
        GateKind::Buf | GateKind::Not => it.next().unwrap_or(Logic::X),
    };
    if kind.is_inverting() {
        base.not()
    } else {
        base
    }
}

/// The five-valued test generation algebra.
///
/// `D` is 1 in the good machine and 0 in the faulty one; `Dbar` the reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FiveValue {
    Zero,
    One,
    X,
    D,
    Dbar,
}

impl FiveValue {
    /// Projection of a (good, faulty) pair; any unknown component gives `X`.
    pub fn from_pair(good: Logic, faulty: Logic) -> FiveValue {
        match (good.known(), faulty.known()) {
            (Some(false), Some(false)) => FiveValue::Zero,
            (Some(true), Some(true)) => FiveValue::One,
            (Some(true), Some(false)) => FiveValue::D,
            (Some(false), Some(true)) => FiveValue::Dbar,
            _ => FiveValue::X,
        }
    }

    pub fn good(self) -> Logic {
        match self {
            FiveValue::Zero | FiveValue::Dbar => Logic::Zero,
            FiveValue::One | FiveValue::D => Logic::One,
            FiveValue::X => Logic::X,
        }
    }

    pub fn faulty(self) -> Logic {
        match self {
            FiveValue::Zero | FiveValue::D => Logic::Zero,
            FiveValue::One | FiveValue::Dbar => Logic::One,
            FiveValue::X => Logic::X,
        }
    }

    /// Gate evaluation, defined through the two machine projections.
    pub fn eval(kind: GateKind, inputs: &[FiveValue]) -> FiveValue {
        let good = eval_logic(kind, inputs.iter().map(|v| v.good()));
        let faulty = eval_logic(kind, inputs.iter().map(|v| v.faulty()));
        FiveValue::from_pair(good, faulty)
    }
}

impl fmt::Display for FiveValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FiveValue::Zero => "0",
            FiveValue::One => "1",
            FiveValue::X => "X",
            FiveValue::D => "D",
            FiveValue::Dbar => "D'",
        })
    }
}

/// A partially specified input assignment (`None` is don't-care).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TestCube(Vec<Option<bool>>);

impl TestCube {
    pub fn new(bits: Vec<Option<bool>>) -> Self {
        TestCube(bits)
    }

    pub fn bits(&self) -> &[Option<bool>] {
        &self.0
    }

    pub fn specified(&self) -> usize {
        self.0.iter().filter(|b| b.is_some()).count()
    }
}

impl fmt::Display for TestCube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(match b {
                Some(false) => "0",
                Some(true) => "1",
                None => "X",
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenerateOutcome {
    Test(TestCube),
    /// The whole input space was searched: no test exists.
    Redundant,
    /// The backtrack limit was exceeded.
    Aborted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Machine {
    Good,
    Faulty,
}

/// Reusable PODEM engine for one circuit.
pub struct Podem<'c> {
    circuit: &'c Circuit,
    good: Vec<Logic>,
    faulty: Vec<Logic>,
    scheduled: Vec<bool>,
    buckets: Vec<Vec<usize>>,
    cone: Vec<usize>,
    in_cone: Vec<bool>,
    visit: Vec<u32>,
    stamp: u32,
    stem: Option<NetId>,
    branch: Option<(usize, usize)>,
    site_net: NetId,
    stuck: bool,
    evaluations: u64,
}

impl<'c> Podem<'c> {
    pub fn new(circuit: &'c Circuit) -> Self {
        Podem {
            circuit,
            good: vec![Logic::X; circuit.net_count()],
            faulty: vec![Logic::X; circuit.net_count()],
            scheduled: vec![false; circuit.gates().len()],
            buckets: vec![Vec::new(); circuit.depth() as usize + 1],
            cone: Vec::new(),
            in_cone: vec![false; circuit.gates().len()],
            visit: vec![0; circuit.net_count()],
            stamp: 0,
            stem: None,
            branch: None,
            site_net: NetId::new(0),
            stuck: false,
            evaluations: 0,
        }
    }

    /// Gate evaluations performed so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    fn schedule_fanout(&mut self, net: NetId) {
        for p in self.circuit.fanout(net) {
            if !self.scheduled[p.gate] {
                self.scheduled[p.gate] = true;
                let level = self.circuit.gates()[p.gate].level as usize;
                self.buckets[level].push(p.gate);
            }
        }
    }

    fn schedule_gate(&mut self, g: usize) {
        if !self.scheduled[g] {
            self.scheduled[g] = true;
            let level = self.circuit.gates()[g].level as usize;
            self.buckets[level].push(g);
        }
    }

    fn propagate(&mut self) {
        let circuit = self.circuit;
        for level in 1..self.buckets.len() {
            let mut i = 0;
            while i < self.buckets[level].len() {
                let g = self.buckets[level][i];
                i += 1;
                self.scheduled[g] = false;
                let gate = &circuit.gates()[g];
                let good = eval_logic(gate.kind, gate.fanin.iter().map(|f| self.good[f.index()]));
                let faulty = if self.stem == Some(gate.output) {
                    Logic::from_bool(self.stuck)
                } else {
                    let forced_pin = match self.branch {
                        Some((bg, bp)) if bg == g => Some(bp),
                        _ => None,
                    };
                    let stuck = Logic::from_bool(self.stuck);
                    let faulty = &self.faulty;
                    eval_logic(
                        gate.kind,
                        gate.fanin
                            .iter()
                            .enumerate()
                            .map(|(p, f)| if Some(p) == forced_pin { stuck } else { faulty[f.index()] }),
                    )
                };
                self.evaluations += 1;
                let out = gate.output.index();
                if good != self.good[out] || faulty != self.faulty[out] {
                    self.good[out] = good;
                    self.faulty[out] = faulty;
                    self.schedule_fanout(gate.output);
                }
            }
            self.buckets[level].clear();
        }
    }

    fn assign(&mut self, input: usize, value: Logic) {
        let net = self.circuit.inputs()[input];
        self.good[net.index()] = value;
        self.faulty[net.index()] = if self.stem == Some(net) {
            Logic::from_bool(self.stuck)
        } else {
            value
        };
        self.schedule_fanout(net);
        self.propagate();
    }

    fn reset(&mut self, fault: &Fault) {
        self.good.fill(Logic::X);
        self.faulty.fill(Logic::X);
        self.stuck = fault.stuck;
        self.site_net = fault.net(self.circuit);
        match fault.site {
            FaultSite::Stem(net) => {
                self.stem = Some(net);
                self.branch = None;
                self.faulty[net.index()] = Logic::from_bool(fault.stuck);
                self.schedule_fanout(net);
            }
            FaultSite::Branch { gate, pin } => {
                self.stem = None;
                self.branch = Some((gate, pin));
                self.schedule_gate(gate);
            }
        }
        self.propagate();

        // Gates reachable from the fault site, in levelized order.
        for &g in &self.cone {
            self.in_cone[g] = false;
        }
        self.cone.clear();
        let mut stack: Vec<usize> = match fault.site {
            FaultSite::Stem(net) => self.circuit.fanout(net).iter().map(|p| p.gate).collect(),
            FaultSite::Branch { gate, .. } => vec![gate],
        };
        while let Some(g) = stack.pop() {
            if self.in_cone[g] {
                continue;
            }
            self.in_cone[g] = true;
            self.cone.push(g);
            let out = self.circuit.gates()[g].output;
            stack.extend(self.circuit.fanout(out).iter().map(|p| p.gate));
        }
        self.cone.sort_unstable();
    }

    fn is_error(&self, net: NetId) -> bool {
        matches!(
            (self.good[net.index()].known(), self.faulty[net.index()].known()),
            (Some(g), Some(f)) if g != f
        )
    }

    fn is_settled(&self, net: NetId) -> bool {
        self.good[net.index()] != Logic::X && self.faulty[net.index()] != Logic::X
    }

    fn detected(&self) -> bool {
        self.circuit.outputs().iter().any(|&o| self.is_error(o))
    }

    /// Whether an error reaches input `pin` of gate `g`.
    fn pin_has_error(&self, g: usize, pin: usize) -> bool {
        let net = self.circuit.gates()[g].fanin[pin];
        match self.branch {
            Some((bg, bp)) if bg == g && bp == pin => self.good[net.index()] == Logic::from_bool(!self.stuck),
            _ => self.is_error(net),
        }
    }

    /// Whether an output is reachable from `net` through nets that are not
    /// settled to equal values.
    fn x_path(&mut self, net: NetId) -> bool {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.visit.fill(0);
            self.stamp = 1;
        }
        let mut stack = vec![net];
        self.visit[net.index()] = self.stamp;
        while let Some(n) = stack.pop() {
            if self.circuit.is_output(n) {
                return true;
            }
            for p in self.circuit.fanout(n) {
                let out = self.circuit.gates()[p.gate].output;
                if self.visit[out.index()] != self.stamp && (!self.is_settled(out) || self.is_error(out)) {
                    self.visit[out.index()] = self.stamp;
                    stack.push(out);
                }
            }
        }
        false
    }

    /// The next objective, or `None` when the current assignment cannot be
    /// extended to a test.
    fn objective(&mut self) -> Option<(NetId, bool, Machine)> {
        match self.good[self.site_net.index()].known() {
            None => return Some((self.site_net, !self.stuck, Machine::Good)),
            Some(v) if v == self.stuck => return None,
            Some(_) => {}
        }
        for ci in 0..self.cone.len() {
            let g = self.cone[ci];
            let gate = &self.circuit.gates()[g];
            if self.is_settled(gate.output) {
                continue;
            }
            if !(0..gate.fanin.len()).any(|p| self.pin_has_error(g, p)) {
                continue;
            }
            if !self.x_path(gate.output) {
                continue;
            }
            let want = gate.kind.controlling_value() == Some(false);
            for (p, &f) in gate.fanin.iter().enumerate() {
                if self.branch == Some((g, p)) {
                    continue;
                }
                if self.good[f.index()] == Logic::X {
                    return Some((f, want, Machine::Good));
                }
                if self.faulty[f.index()] == Logic::X {
                    return Some((f, want, Machine::Faulty));
                }
            }
        }
        None
    }

    /// Walks from an objective back to an unassigned primary input.
    fn backtrace(&self, mut net: NetId, mut value: bool, machine: Machine) -> (usize, bool) {
        let values = match machine {
            Machine::Good => &self.good,
            Machine::Faulty => &self.faulty,
        };
        loop {
            match self.circuit.driver(net) {
                Driver::Input(pos) => return (pos, value),
                Driver::Gate(g) => {
                    let gate = &self.circuit.gates()[g];
                    let forced = match (machine, self.branch) {
                        (Machine::Faulty, Some((bg, bp))) if bg == g => Some(bp),
                        _ => None,
                    };
                    let mut target = value ^ gate.kind.is_inverting();
                    let mut chosen = None;
                    for (p, &f) in gate.fanin.iter().enumerate() {
                        let v = if Some(p) == forced {
                            Logic::from_bool(self.stuck)
                        } else {
                            values[f.index()]
                        };
                        match v.known() {
                            None if chosen.is_none() => chosen = Some(f),
                            Some(b) if matches!(gate.kind, GateKind::Xor | GateKind::Xnor) => target ^= b,
                            _ => {}
                        }
                    }
                    net = chosen.expect("an unknown gate output has an unknown input");
                    value = target;
                }
            }
        }
    }

    /// Runs PODEM for one fault.
    pub fn generate(&mut self, fault: &Fault, backtrack_limit: Option<u64>) -> GenerateOutcome {
        self.reset(fault);
        let mut assigned = vec![None; self.circuit.inputs().len()];
        // (input, value, already flipped)
        let mut stack: Vec<(usize, bool, bool)> = Vec::new();
        let mut backtracks = 0u64;
        loop {
            if self.detected() {
                return GenerateOutcome::Test(TestCube(assigned));
            }
            if let Some((net, value, machine)) = self.objective() {
                let (input, v) = self.backtrace(net, value, machine);
                assigned[input] = Some(v);
                self.assign(input, Logic::from_bool(v));
                stack.push((input, v, false));
                continue;
            }
            loop {
                match stack.pop() {
                    None => return GenerateOutcome::Redundant,
                    Some((input, _, true)) => {
                        assigned[input] = None;
                        self.assign(input, Logic::X);
                    }
                    Some((input, v, false)) => {
                        backtracks += 1;
                        if backtrack_limit.is_some_and(|l| backtracks > l) {
                            return GenerateOutcome::Aborted;
                        }
                        assigned[input] = Some(!v);
                        self.assign(input, Logic::from_bool(!v));
                        stack.push((input, !v, true));
                        break;
                    }
                }
            }
        }
    }
}

/// Generates a test cube for `fault`, or proves it redundant, or aborts after
/// `backtrack_limit` backtracks (`None` for no limit).
pub fn generate_test(circuit: &Circuit, fault: &Fault, backtrack_limit: Option<u64>) -> GenerateOutcome {
    Podem::new(circuit).generate(fault, backtrack_limit)
}

/// Don't-care fill policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum XFill {
    Zero,
    One,
    Random(u64),
}

impl fmt::Display for XFill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XFill::Zero => f.write_str("zero"),
            XFill::One => f.write_str("one"),
            XFill::Random(seed) => write!(f, "random({seed})"),
        }
    }
}

/// Stateful filler: a `Random` policy draws from one stream across calls.
pub struct Filler {
    policy: XFill,
    rng: Option<ChaCha8Rng>,
}

impl Filler {
    pub fn new(policy: XFill) -> Self {
        let rng = match policy {
            XFill::Random(seed) => Some(seeded_rng(seed)),
            _ => None,
        };
        Filler { policy, rng }
    }

    pub fn fill(&mut self, cube: &TestCube) -> InputVector {
        let bits = cube
            .bits()
            .iter()
            .map(|b| match (b, self.policy, self.rng.as_mut()) {
                (Some(v), _, _) => *v,
                (None, XFill::One, _) => true,
                (None, XFill::Random(_), Some(rng)) => rng.random(),
                (None, _, _) => false,
            })
            .collect();
        InputVector::new(bits)
    }
}

/// Replaces don't-cares according to `policy`; specified positions are kept.
pub fn xfill(cube: &TestCube, policy: XFill) -> InputVector {
    Filler::new(policy).fill(cube)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtpgConfig {
    /// `None` searches exhaustively.
    pub backtrack_limit: Option<u64>,
    pub fill: XFill,
}

impl Default for AtpgConfig {
    fn default() -> Self {
        AtpgConfig {
            backtrack_limit: Some(10_000),
            fill: XFill::Random(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AtpgError {
    #[error("order is not a permutation of the fault list")]
    BadOrder,
    #[error("generated test does not detect its target fault {0}")]
    TargetNotDetected(FaultId),
}

/// Output of [`run_atpg`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestSet {
    pub tests: Vec<InputVector>,
    /// Fault each test was generated for.
    pub targets: Vec<FaultId>,
    /// Faults first detected by each test, ascending by id.
    pub detections: Vec<Vec<FaultId>>,
    /// Faults whose search hit the backtrack limit and that no test detected.
    pub aborted: Vec<FaultId>,
    /// Faults proven untestable.
    pub redundant: Vec<FaultId>,
    /// Gate evaluations spent by test generation and fault simulation.
    pub effort: u64,
}

impl TestSet {
    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }

    pub fn detected_count(&self) -> usize {
        self.detections.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Pending,
    Aborted,
    Detected,
    Redundant,
}

/// Generates tests by walking `order`: faults already detected are skipped;
/// every new test is fault simulated against all undetected faults and the
/// ones it detects are dropped.
pub fn run_atpg(
    circuit: &Circuit,
    faults: &FaultSet,
    order: &OrderedFaultSet,
    config: &AtpgConfig,
) -> Result<TestSet, AtpgError> {
    if order.len() != faults.len() || !order.is_permutation() {
        return Err(AtpgError::BadOrder);
    }
    let mut podem = Podem::new(circuit);
    let mut sim = FaultSimulator::new(circuit);
    let mut filler = Filler::new(config.fill);
    let mut status = vec![Status::Pending; faults.len()];
    let mut remaining: Vec<usize> = (0..faults.len()).collect();
    let mut out = TestSet::default();
    let mut aborted_order = Vec::new();

    for &target in order.order() {
        let t = target.index();
        if !matches!(status[t], Status::Pending) {
            continue;
        }
        match podem.generate(faults.get(target), config.backtrack_limit) {
            GenerateOutcome::Redundant => {
                status[t] = Status::Redundant;
                out.redundant.push(target);
                remaining.retain(|&f| f != t);
            }
            GenerateOutcome::Aborted => {
                status[t] = Status::Aborted;
                aborted_order.push(target);
            }
            GenerateOutcome::Test(cube) => {
                let vector = filler.fill(&cube);
                sim.load(&PatternBlock::pack(core::slice::from_ref(&vector), circuit.inputs().len()));
                let mut newly = Vec::new();
                remaining.retain(|&f| {
                    if sim.detect(&faults.faults()[f]) != 0 {
                        status[f] = Status::Detected;
                        newly.push(FaultId::new(f));
                        false
                    } else {
                        true
                    }
                });
                if status[t] != Status::Detected {
                    return Err(AtpgError::TargetNotDetected(target));
                }
                newly.sort_unstable();
                out.tests.push(vector);
                out.targets.push(target);
                out.detections.push(newly);
            }
        }
    }
    out.aborted = aborted_order
        .into_iter()
        .filter(|f| status[f.index()] == Status::Aborted)
        .collect();
    out.effort = podem.evaluations() + sim.evaluations();
    Ok(out)
}
