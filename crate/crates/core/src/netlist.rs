//! `.bench` netlist front-end and the levelized combinational circuit model.
//!
//! Flip-flops are cut: the output of `q = DFF(d)` becomes a pseudo-primary
//! input and `d` a pseudo-primary output, which yields the combinational
//! core of a full-scan design.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

/// Dense index of a net in a [`Circuit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NetId(u32);

impl NetId {
    pub fn new(index: usize) -> Self {
        NetId(u32::try_from(index).expect("net index exceeds u32"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Not,
    Buf,
    Xor,
    Xnor,
}

impl GateKind {
    /// Case-insensitive keyword lookup; `BUFF` is accepted for `BUF`.
    pub fn from_keyword(word: &str) -> Option<GateKind> {
        let kind = match word.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "NOT" | "INV" => GateKind::Not,
            "BUF" | "BUFF" => GateKind::Buf,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            _ => return None,
        };
        Some(kind)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
        }
    }

    pub fn is_unary(self) -> bool {
        matches!(self, GateKind::Not | GateKind::Buf)
    }

    /// Whether the output is the complement of the underlying AND/OR/XOR/identity.
    pub fn is_inverting(self) -> bool {
        matches!(self, GateKind::Nand | GateKind::Nor | GateKind::Not | GateKind::Xnor)
    }

    /// The input value that alone fixes the output, if the gate has one.
    pub fn controlling_value(self) -> Option<bool> {
        match self {
            GateKind::And | GateKind::Nand => Some(false),
            GateKind::Or | GateKind::Nor => Some(true),
            _ => None,
        }
    }

    /// Bitwise evaluation over packed words.
    #[inline]
    pub fn eval_words<I: IntoIterator<Item = u64>>(self, inputs: I) -> u64 {
        let mut it = inputs.into_iter();
        match self {
            GateKind::And => it.fold(!0, |a, b| a & b),
            GateKind::Nand => !it.fold(!0, |a, b| a & b),
            GateKind::Or => it.fold(0, |a, b| a | b),
            GateKind::Nor => !it.fold(0, |a, b| a | b),
            GateKind::Xor => it.fold(0, |a, b| a ^ b),
            GateKind::Xnor => !it.fold(0, |a, b| a ^ b),
            GateKind::Buf => it.next().unwrap_or(0),
            GateKind::Not => !it.next().unwrap_or(0),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub output: NetId,
    pub kind: GateKind,
    pub fanin: Vec<NetId>,
    /// One more than the highest fan-in level; primary inputs sit at level 0.
    pub level: u32,
}

/// What drives a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    /// Position in [`Circuit::inputs`].
    Input(usize),
    /// Index in [`Circuit::gates`].
    Gate(usize),
}

/// A gate input pin: `fanin[pin]` of `gates[gate]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pin {
    pub gate: usize,
    pub pin: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetlistError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: net `{net}` is used but never defined")]
    UndefinedNet { net: String, line: usize },
    #[error("line {line}: net `{net}` is driven more than once")]
    MultiplyDriven { net: String, line: usize },
    #[error("combinational cycle through net `{net}`")]
    Cycle { net: String },
    #[error("line {line}: unsupported gate kind `{kind}`")]
    UnsupportedGate { kind: String, line: usize },
    #[error("line {line}: {kind} gate `{net}` has {found} inputs")]
    Arity {
        net: String,
        kind: GateKind,
        found: usize,
        line: usize,
    },
}

/// A validated, levelized combinational circuit. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    name: String,
    net_names: Vec<String>,
    by_name: BTreeMap<String, NetId>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    gates: Vec<Gate>,
    net_level: Vec<u32>,
    driver: Vec<Driver>,
    fanout: Vec<Vec<Pin>>,
    is_output: Vec<bool>,
    depth: u32,
}

impl Circuit {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn net_count(&self) -> usize {
        self.net_names.len()
    }

    pub fn net_name(&self, net: NetId) -> &str {
        &self.net_names[net.index()]
    }

    pub fn net_by_name(&self, name: &str) -> Option<NetId> {
        self.by_name.get(name).copied()
    }

    /// Primary inputs followed by pseudo-primary inputs (cut flip-flop outputs).
    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    /// Primary outputs followed by pseudo-primary outputs (cut flip-flop inputs).
    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    /// Gates in levelized order.
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn net_level(&self, net: NetId) -> u32 {
        self.net_level[net.index()]
    }

    pub fn driver(&self, net: NetId) -> Driver {
        self.driver[net.index()]
    }

    /// Gate pins reading `net`, ordered by gate index then pin.
    pub fn fanout(&self, net: NetId) -> &[Pin] {
        &self.fanout[net.index()]
    }

    pub fn is_output(&self, net: NetId) -> bool {
        self.is_output[net.index()]
    }

    /// Number of observation points of a net: gate pins plus one if it is an output.
    pub fn fanout_count(&self, net: NetId) -> usize {
        self.fanout[net.index()].len() + usize::from(self.is_output[net.index()])
    }

    /// Highest gate level (0 for a circuit without gates).
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn with_name(mut self, name: &str) -> Circuit {
        self.name = name.to_string();
        self
    }
}

struct RawGate {
    output: NetId,
    kind: GateKind,
    fanin: Vec<NetId>,
}

/// Builds the derived tables and checks structure for gates given in any order.
fn assemble(
    name: String,
    net_names: Vec<String>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    raw: Vec<RawGate>,
) -> Result<Circuit, NetlistError> {
    let net_count = net_names.len();
    let mut driver: Vec<Option<Driver>> = vec![None; net_count];
    for (pos, &net) in inputs.iter().enumerate() {
        driver[net.index()] = Some(Driver::Input(pos));
    }
    for (g, gate) in raw.iter().enumerate() {
        driver[gate.output.index()] = Some(Driver::Gate(g));
    }

    // Level every net with an explicit stack so deep chains cannot overflow.
    const UNSEEN: u8 = 0;
    const ACTIVE: u8 = 1;
    const DONE: u8 = 2;
    let mut state = vec![UNSEEN; net_count];
    let mut level = vec![0u32; net_count];
    for root in 0..net_count {
        if state[root] == DONE {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = ACTIVE;
        while let Some(&mut (net, ref mut next)) = stack.last_mut() {
            let gate = match driver[net] {
                Some(Driver::Gate(g)) => &raw[g],
                _ => {
                    level[net] = 0;
                    state[net] = DONE;
                    stack.pop();
                    continue;
                }
            };
            if *next < gate.fanin.len() {
                let child = gate.fanin[*next].index();
                *next += 1;
                match state[child] {
                    UNSEEN => {
                        state[child] = ACTIVE;
                        stack.push((child, 0));
                    }
                    ACTIVE => {
                        return Err(NetlistError::Cycle {
                            net: net_names[child].clone(),
                        })
                    }
                    _ => {}
                }
            } else {
                level[net] = 1 + gate.fanin.iter().map(|f| level[f.index()]).max().unwrap_or(0);
                state[net] = DONE;
                stack.pop();
            }
        }
    }

    let mut gates: Vec<Gate> = raw
        .into_iter()
        .map(|g| Gate {
            level: level[g.output.index()],
            output: g.output,
            kind: g.kind,
            fanin: g.fanin,
        })
        .collect();
    // Stable: ties keep definition order.
    gates.sort_by_key(|g| g.level);

    let mut driver: Vec<Driver> = driver
        .into_iter()
        .map(|d| d.expect("every net is driven after validation"))
        .collect();
    let mut fanout = vec![Vec::new(); net_count];
    for (g, gate) in gates.iter().enumerate() {
        driver[gate.output.index()] = Driver::Gate(g);
        for (pin, f) in gate.fanin.iter().enumerate() {
            fanout[f.index()].push(Pin { gate: g, pin });
        }
    }
    let mut is_output = vec![false; net_count];
    for o in &outputs {
        is_output[o.index()] = true;
    }
    let by_name = net_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), NetId::new(i)))
        .collect();
    let depth = gates.last().map_or(0, |g| g.level);
    Ok(Circuit {
        name,
        net_names,
        by_name,
        inputs,
        outputs,
        gates,
        net_level: level,
        driver,
        fanout,
        is_output,
        depth,
    })
}

/// Recomputes levels and sorts gates by level, keeping the current order among
/// equal levels. Idempotent on an already levelized circuit.
pub fn levelize(circuit: &Circuit) -> Result<Circuit, NetlistError> {
    let raw = circuit
        .gates
        .iter()
        .map(|g| RawGate {
            output: g.output,
            kind: g.kind,
            fanin: g.fanin.clone(),
        })
        .collect();
    assemble(
        circuit.name.clone(),
        circuit.net_names.clone(),
        circuit.inputs.clone(),
        circuit.outputs.clone(),
        raw,
    )
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn column(&self) -> usize {
        self.text[..self.pos].chars().count() + 1
    }

    fn error(&self, message: impl Into<String>) -> NetlistError {
        NetlistError::Syntax {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.text[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.text.len()
    }

    fn expect(&mut self, c: char) -> Result<(), NetlistError> {
        self.skip_ws();
        if self.text[self.pos..].starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.error(format!("expected `{c}`")))
        }
    }

    fn peek(&mut self, c: char) -> bool {
        self.skip_ws();
        self.text[self.pos..].starts_with(c)
    }

    /// An identifier: any run of characters other than whitespace and `()=,`.
    fn ident(&mut self) -> Result<(&'a str, usize), NetlistError> {
        self.skip_ws();
        let column = self.column();
        let rest = &self.text[self.pos..];
        let len = rest
            .find(|c: char| c.is_whitespace() || "()=,".contains(c))
            .unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("expected a name"));
        }
        self.pos += len;
        Ok((&rest[..len], column))
    }
}

#[derive(Default)]
struct NameTable {
    names: Vec<String>,
    index: BTreeMap<String, NetId>,
    first_use: Vec<usize>,
}

impl NameTable {
    fn intern(&mut self, name: &str, line: usize) -> NetId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = NetId::new(self.names.len());
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.first_use.push(line);
        id
    }
}

/// Parses `.bench` text into a validated, levelized [`Circuit`].
///
/// Net indices follow first appearance in the text. Lines are
/// `INPUT(n)`, `OUTPUT(n)`, `n = KIND(a, b, ...)` or `q = DFF(d)`; anything
/// after `#` is a comment.
pub fn parse_bench(name: &str, text: &str) -> Result<Circuit, NetlistError> {
    let mut names = NameTable::default();
    let mut declared_inputs: Vec<NetId> = Vec::new();
    let mut declared_outputs: Vec<NetId> = Vec::new();
    let mut dff_q: Vec<NetId> = Vec::new();
    let mut dff_d: Vec<NetId> = Vec::new();
    let mut raw: Vec<RawGate> = Vec::new();
    let mut defined_at: Vec<Option<usize>> = Vec::new();

    let mut define = |net: NetId, line: usize, names: &NameTable| -> Result<(), NetlistError> {
        if defined_at.len() <= net.index() {
            defined_at.resize(net.index() + 1, None);
        }
        if defined_at[net.index()].is_some() {
            return Err(NetlistError::MultiplyDriven {
                net: names.names[net.index()].clone(),
                line,
            });
        }
        defined_at[net.index()] = Some(line);
        Ok(())
    };

    for (lineno, full) in text.lines().enumerate() {
        let line = lineno + 1;
        let body = match full.find('#') {
            Some(i) => &full[..i],
            None => full,
        };
        let mut cur = Cursor { text: body, pos: 0, line };
        if cur.at_end() {
            continue;
        }
        let (first, first_col) = cur.ident()?;
        if cur.peek('(') {
            let upper = first.to_ascii_uppercase();
            let is_input = match upper.as_str() {
                "INPUT" => true,
                "OUTPUT" => false,
                _ => {
                    return Err(NetlistError::Syntax {
                        line,
                        column: first_col,
                        message: format!("unknown declaration `{first}`"),
                    })
                }
            };
            cur.expect('(')?;
            let (net_name, _) = cur.ident()?;
            cur.expect(')')?;
            if !cur.at_end() {
                return Err(cur.error("unexpected text after declaration"));
            }
            let net = names.intern(net_name, line);
            if is_input {
                define(net, line, &names)?;
                declared_inputs.push(net);
            } else {
                declared_outputs.push(net);
            }
            continue;
        }

        let output = names.intern(first, line);
        cur.expect('=')?;
        let (kind_word, kind_col) = cur.ident()?;
        cur.expect('(')?;
        let mut fanin = Vec::new();
        loop {
            let (arg, _) = cur.ident()?;
            fanin.push(names.intern(arg, line));
            if cur.peek(',') {
                cur.expect(',')?;
            } else {
                break;
            }
        }
        cur.expect(')')?;
        if !cur.at_end() {
            return Err(cur.error("unexpected text after gate"));
        }
        define(output, line, &names)?;

        if kind_word.eq_ignore_ascii_case("DFF") {
            if fanin.len() != 1 {
                return Err(NetlistError::Syntax {
                    line,
                    column: kind_col,
                    message: format!("DFF takes one input, found {}", fanin.len()),
                });
            }
            dff_q.push(output);
            dff_d.push(fanin[0]);
            continue;
        }
        let kind = GateKind::from_keyword(kind_word).ok_or_else(|| NetlistError::UnsupportedGate {
            kind: kind_word.to_string(),
            line,
        })?;
        let arity_ok = if kind.is_unary() { fanin.len() == 1 } else { fanin.len() >= 2 };
        if !arity_ok {
            return Err(NetlistError::Arity {
                net: first.to_string(),
                kind,
                found: fanin.len(),
                line,
            });
        }
        raw.push(RawGate { output, kind, fanin });
    }

    defined_at.resize(names.names.len(), None);
    if let Some(undefined) = (0..names.names.len())
        .filter(|&i| defined_at[i].is_none())
        .min_by_key(|&i| names.first_use[i])
    {
        return Err(NetlistError::UndefinedNet {
            net: names.names[undefined].clone(),
            line: names.first_use[undefined],
        });
    }

    let mut inputs = declared_inputs;
    inputs.extend(dff_q);
    let mut outputs: Vec<NetId> = Vec::new();
    let mut seen = vec![false; names.names.len()];
    for o in declared_outputs.into_iter().chain(dff_d) {
        if !seen[o.index()] {
            seen[o.index()] = true;
            outputs.push(o);
        }
    }
    assemble(name.to_string(), names.names, inputs, outputs, raw)
}

/// Emits the combinational circuit as `.bench` text (flip-flops already cut).
pub fn to_bench(circuit: &Circuit) -> String {
    let mut out = String::new();
    out.push_str(&format!("# {}\n", circuit.name));
    for &i in &circuit.inputs {
        out.push_str(&format!("INPUT({})\n", circuit.net_name(i)));
    }
    for &o in &circuit.outputs {
        out.push_str(&format!("OUTPUT({})\n", circuit.net_name(o)));
    }
    for g in &circuit.gates {
        let args: Vec<&str> = g.fanin.iter().map(|&f| circuit.net_name(f)).collect();
        out.push_str(&format!(
            "{} = {}({})\n",
            circuit.net_name(g.output),
            g.kind.keyword(),
            args.join(", ")
        ));
    }
    out
}
