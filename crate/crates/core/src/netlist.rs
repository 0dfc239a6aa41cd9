//! Gate-level circuit model and the `.bench` / JSON readers and writers.
//!
//! A [`Circuit`] is built once and never mutated afterwards. Flip-flops cut
//! the combinational graph: their `q` nets behave like primary inputs and
//! their `d` nets like primary outputs of the combinational cloud.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! index_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }

            #[inline]
            pub fn from_index(i: usize) -> Self {
                Self(i as u32)
            }
        }
    };
}

index_type!(
    /// Index of a net inside a [`Circuit`].
    NetId
);
index_type!(
    /// Index of a combinational gate inside a [`Circuit`].
    GateId
);
index_type!(
    /// Index of a flip-flop inside a [`Circuit`].
    FfId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    Not,
    Buff,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::And,
        GateKind::Or,
        GateKind::Nand,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buff,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buff => "BUFF",
        }
    }

    pub fn is_unary(self) -> bool {
        matches!(self, GateKind::Not | GateKind::Buff)
    }

    fn arity_ok(self, n: usize) -> bool {
        if self.is_unary() {
            n == 1
        } else {
            n >= 2
        }
    }

    /// Two-valued evaluation.
    pub fn eval<I: IntoIterator<Item = bool>>(self, inputs: I) -> bool {
        let mut it = inputs.into_iter();
        match self {
            GateKind::And => it.all(|v| v),
            GateKind::Nand => !it.all(|v| v),
            GateKind::Or => it.any(|v| v),
            GateKind::Nor => !it.any(|v| v),
            GateKind::Xor => it.fold(false, |a, v| a ^ v),
            GateKind::Xnor => !it.fold(false, |a, v| a ^ v),
            GateKind::Not => !it.next().unwrap_or(false),
            GateKind::Buff => it.next().unwrap_or(false),
        }
    }

    /// Bit-parallel evaluation, one assignment per bit lane.
    pub fn eval_words<I: IntoIterator<Item = u64>>(self, inputs: I) -> u64 {
        let mut it = inputs.into_iter();
        match self {
            GateKind::And => it.fold(!0, |a, v| a & v),
            GateKind::Nand => !it.fold(!0, |a, v| a & v),
            GateKind::Or => it.fold(0, |a, v| a | v),
            GateKind::Nor => !it.fold(0, |a, v| a | v),
            GateKind::Xor => it.fold(0, |a, v| a ^ v),
            GateKind::Xnor => !it.fold(0, |a, v| a ^ v),
            GateKind::Not => !it.next().unwrap_or(0),
            GateKind::Buff => it.next().unwrap_or(0),
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GateKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        // `.bench` files in the wild use both BUF and BUFF.
        match s.to_ascii_uppercase().as_str() {
            "AND" => Ok(GateKind::And),
            "OR" => Ok(GateKind::Or),
            "NAND" => Ok(GateKind::Nand),
            "NOR" => Ok(GateKind::Nor),
            "XOR" => Ok(GateKind::Xor),
            "XNOR" => Ok(GateKind::Xnor),
            "NOT" | "INV" => Ok(GateKind::Not),
            "BUFF" | "BUF" => Ok(GateKind::Buff),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Input,
    Gate(GateId),
    FlipFlop(FfId),
}

/// One consumer pin of a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sink {
    Gate(GateId),
    FlipFlop(FfId),
    Output,
}

#[derive(Debug, Clone)]
pub struct Net {
    pub name: String,
    pub driver: Driver,
    /// One entry per consuming pin, so `AND(a, a)` lists the gate twice.
    pub fanout: Vec<Sink>,
}

#[derive(Debug, Clone)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
    pub output: NetId,
}

#[derive(Debug, Clone)]
pub struct FlipFlop {
    /// Flip-flops are named after their `q` net.
    pub name: String,
    pub d: NetId,
    pub q: NetId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub num_ffs: usize,
    pub num_gates: usize,
    pub num_pis: usize,
    pub num_pos: usize,
    pub num_nets: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildErrorKind {
    #[error("net `{name}` has more than one driver (first defined at line {first_line})")]
    DuplicateDriver { name: String, first_line: usize },
    #[error("net `{0}` is used but never defined")]
    UndefinedNet(String),
    #[error("combinational cycle through net `{0}`")]
    CombinationalCycle(String),
    #[error("{kind} gate `{name}` has {got} input(s)")]
    Arity {
        name: String,
        kind: GateKind,
        got: usize,
    },
    #[error("unknown gate kind `{0}`")]
    UnknownGateKind(String),
    #[error("flip-flop `{0}` has its d and q on the same net")]
    FlipFlopSelfLoop(String),
    #[error("excluded net `{0}` does not exist")]
    UnknownExcludedNet(String),
    #[error("syntax error: {0}")]
    Syntax(String),
}

/// A construction or parse error. `line` is 1-based; 0 means the error is not
/// tied to a source line (JSON input, exclude list).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct NetlistError {
    pub line: usize,
    pub kind: BuildErrorKind,
}

impl NetlistError {
    fn new(line: usize, kind: BuildErrorKind) -> Self {
        Self { line, kind }
    }
}

#[derive(Debug, Clone)]
pub struct Circuit {
    nets: Vec<Net>,
    gates: Vec<Gate>,
    ffs: Vec<FlipFlop>,
    inputs: Vec<NetId>,
    outputs: Vec<NetId>,
    excluded: Vec<NetId>,
    excluded_mask: Vec<bool>,
    topo: Vec<GateId>,
    names: HashMap<String, NetId>,
    d_of: Vec<Vec<FfId>>,
}

impl Circuit {
    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn flip_flops(&self) -> &[FlipFlop] {
        &self.ffs
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NetId] {
        &self.outputs
    }

    pub fn excluded(&self) -> &[NetId] {
        &self.excluded
    }

    pub fn net(&self, id: NetId) -> &Net {
        &self.nets[id.index()]
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id.index()]
    }

    pub fn flip_flop(&self, id: FfId) -> &FlipFlop {
        &self.ffs[id.index()]
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.nets[id.index()].name
    }

    pub fn ff_name(&self, id: FfId) -> &str {
        &self.ffs[id.index()].name
    }

    pub fn ff_names(&self) -> Vec<String> {
        self.ffs.iter().map(|f| f.name.clone()).collect()
    }

    pub fn find_net(&self, name: &str) -> Option<NetId> {
        self.names.get(name).copied()
    }

    pub fn find_ff(&self, name: &str) -> Option<FfId> {
        let net = self.find_net(name)?;
        match self.net(net).driver {
            Driver::FlipFlop(f) => Some(f),
            _ => None,
        }
    }

    pub fn is_excluded(&self, id: NetId) -> bool {
        self.excluded_mask[id.index()]
    }

    /// Flip-flops whose D pin is driven by `id`.
    pub fn ffs_fed_by(&self, id: NetId) -> &[FfId] {
        &self.d_of[id.index()]
    }

    /// Gates in a fixed topological order (inputs before outputs).
    pub fn topo_order(&self) -> &[GateId] {
        &self.topo
    }

    /// Gate outputs and primary inputs; flip-flop `q` nets are not combinational.
    pub fn is_combinational(&self, id: NetId) -> bool {
        !matches!(self.net(id).driver, Driver::FlipFlop(_))
    }

    /// PIs and flip-flop outputs: the free variables of the combinational cloud.
    pub fn is_source(&self, id: NetId) -> bool {
        !matches!(self.net(id).driver, Driver::Gate(_))
    }

    pub fn stats(&self) -> CircuitStats {
        circuit_stats(self)
    }
}

pub fn circuit_stats(c: &Circuit) -> CircuitStats {
    CircuitStats {
        num_ffs: c.ffs.len(),
        num_gates: c.gates.len(),
        num_pis: c.inputs.len(),
        num_pos: c.outputs.len(),
        num_nets: c.nets.len(),
    }
}

#[derive(Debug, Clone)]
enum PendingDef {
    Input,
    Gate { kind: GateKind, inputs: Vec<String> },
    FlipFlop { d: String },
}

/// Incremental circuit construction shared by the `.bench` reader, the JSON
/// reader and the random generator. Nets are numbered in definition order.
#[derive(Debug, Default, Clone)]
pub struct CircuitBuilder {
    defs: Vec<(String, PendingDef, usize)>,
    outputs: Vec<(String, usize)>,
    excluded: Vec<String>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn input(&mut self, name: impl Into<String>) -> &mut Self {
        self.input_at(name, 0)
    }

    pub fn gate<S: Into<String>>(
        &mut self,
        output: impl Into<String>,
        kind: GateKind,
        inputs: impl IntoIterator<Item = S>,
    ) -> &mut Self {
        self.gate_at(output, kind, inputs, 0)
    }

    pub fn dff(&mut self, q: impl Into<String>, d: impl Into<String>) -> &mut Self {
        self.dff_at(q, d, 0)
    }

    pub fn output(&mut self, name: impl Into<String>) -> &mut Self {
        self.outputs.push((name.into(), 0));
        self
    }

    pub fn exclude(&mut self, name: impl Into<String>) -> &mut Self {
        self.excluded.push(name.into());
        self
    }

    fn input_at(&mut self, name: impl Into<String>, line: usize) -> &mut Self {
        self.defs.push((name.into(), PendingDef::Input, line));
        self
    }

    fn gate_at<S: Into<String>>(
        &mut self,
        output: impl Into<String>,
        kind: GateKind,
        inputs: impl IntoIterator<Item = S>,
        line: usize,
    ) -> &mut Self {
        let inputs = inputs.into_iter().map(Into::into).collect();
        self.defs
            .push((output.into(), PendingDef::Gate { kind, inputs }, line));
        self
    }

    fn dff_at(&mut self, q: impl Into<String>, d: impl Into<String>, line: usize) -> &mut Self {
        self.defs
            .push((q.into(), PendingDef::FlipFlop { d: d.into() }, line));
        self
    }

    pub fn build(&self) -> Result<Circuit, NetlistError> {
        let mut names: HashMap<String, NetId> = HashMap::new();
        let mut def_line = Vec::with_capacity(self.defs.len());
        for (name, _, line) in &self.defs {
            if let Some(&prev) = names.get(name) {
                let first_line: usize = def_line[prev.index()];
                return Err(NetlistError::new(
                    *line,
                    BuildErrorKind::DuplicateDriver {
                        name: name.clone(),
                        first_line,
                    },
                ));
            }
            names.insert(name.clone(), NetId::from_index(def_line.len()));
            def_line.push(*line);
        }

        let resolve = |name: &str, line: usize| {
            names.get(name).copied().ok_or_else(|| {
                NetlistError::new(line, BuildErrorKind::UndefinedNet(name.to_string()))
            })
        };

        let mut nets: Vec<Net> = Vec::with_capacity(self.defs.len());
        let mut gates = Vec::new();
        let mut gate_lines = Vec::new();
        let mut ffs = Vec::new();
        let mut inputs = Vec::new();
        for (idx, (name, def, line)) in self.defs.iter().enumerate() {
            let id = NetId::from_index(idx);
            let driver = match def {
                PendingDef::Input => {
                    inputs.push(id);
                    Driver::Input
                }
                PendingDef::Gate { kind, inputs: ins } => {
                    if !kind.arity_ok(ins.len()) {
                        return Err(NetlistError::new(
                            *line,
                            BuildErrorKind::Arity {
                                name: name.clone(),
                                kind: *kind,
                                got: ins.len(),
                            },
                        ));
                    }
                    let ins = ins
                        .iter()
                        .map(|n| resolve(n, *line))
                        .collect::<Result<Vec<_>, _>>()?;
                    let gid = GateId::from_index(gates.len());
                    gates.push(Gate {
                        kind: *kind,
                        inputs: ins,
                        output: id,
                    });
                    gate_lines.push(*line);
                    Driver::Gate(gid)
                }
                PendingDef::FlipFlop { d } => {
                    let d = resolve(d, *line)?;
                    if d == id {
                        return Err(NetlistError::new(
                            *line,
                            BuildErrorKind::FlipFlopSelfLoop(name.clone()),
                        ));
                    }
                    let fid = FfId::from_index(ffs.len());
                    ffs.push(FlipFlop {
                        name: name.clone(),
                        d,
                        q: id,
                    });
                    Driver::FlipFlop(fid)
                }
            };
            nets.push(Net {
                name: name.clone(),
                driver,
                fanout: Vec::new(),
            });
        }

        let mut outputs = Vec::with_capacity(self.outputs.len());
        for (name, line) in &self.outputs {
            outputs.push(resolve(name, *line)?);
        }
        let mut excluded = Vec::new();
        let mut excluded_mask = vec![false; nets.len()];
        for name in &self.excluded {
            let id = names.get(name).copied().ok_or_else(|| {
                NetlistError::new(0, BuildErrorKind::UnknownExcludedNet(name.clone()))
            })?;
            if !excluded_mask[id.index()] {
                excluded_mask[id.index()] = true;
                excluded.push(id);
            }
        }
        excluded.sort();

        let mut d_of = vec![Vec::new(); nets.len()];
        for (gi, g) in gates.iter().enumerate() {
            for &i in &g.inputs {
                nets[i.index()].fanout.push(Sink::Gate(GateId::from_index(gi)));
            }
        }
        for (fi, f) in ffs.iter().enumerate() {
            let fid = FfId::from_index(fi);
            nets[f.d.index()].fanout.push(Sink::FlipFlop(fid));
            d_of[f.d.index()].push(fid);
        }
        for &o in &outputs {
            nets[o.index()].fanout.push(Sink::Output);
        }

        let topo = topo_sort(&nets, &gates).map_err(|g| {
            NetlistError::new(
                gate_lines[g.index()],
                BuildErrorKind::CombinationalCycle(nets[gates[g.index()].output.index()].name.clone()),
            )
        })?;

        Ok(Circuit {
            nets,
            gates,
            ffs,
            inputs,
            outputs,
            excluded,
            excluded_mask,
            topo,
            names,
            d_of,
        })
    }
}

/// Kahn's algorithm seeded in gate-id order. On a cycle, returns the
/// lowest-numbered gate that could not be scheduled.
fn topo_sort(nets: &[Net], gates: &[Gate]) -> Result<Vec<GateId>, GateId> {
    let mut pending: Vec<usize> = gates
        .iter()
        .map(|g| {
            g.inputs
                .iter()
                .filter(|i| matches!(nets[i.index()].driver, Driver::Gate(_)))
                .count()
        })
        .collect();
    let mut queue: VecDeque<GateId> = (0..gates.len())
        .filter(|&g| pending[g] == 0)
        .map(GateId::from_index)
        .collect();
    let mut order = Vec::with_capacity(gates.len());
    while let Some(g) = queue.pop_front() {
        order.push(g);
        for sink in &nets[gates[g.index()].output.index()].fanout {
            if let Sink::Gate(s) = *sink {
                pending[s.index()] -= 1;
                if pending[s.index()] == 0 {
                    queue.push_back(s);
                }
            }
        }
    }
    if order.len() == gates.len() {
        Ok(order)
    } else {
        let stuck = (0..gates.len()).find(|&g| pending[g] > 0).unwrap();
        Err(GateId::from_index(stuck))
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| !c.is_whitespace() && !matches!(c, '(' | ')' | ',' | '=' | '#'))
}

/// Parse ISCAS-89 style `.bench` text. Nets listed in `exclude` are marked as
/// clock/reset and never become fault sites.
pub fn parse_bench(text: &str, exclude: &[String]) -> Result<Circuit, NetlistError> {
    let mut b = CircuitBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |msg: &str| NetlistError::new(line_no, BuildErrorKind::Syntax(msg.to_string()));

        if let Some((lhs, rhs)) = line.split_once('=') {
            let target = lhs.trim();
            if !is_ident(target) {
                return Err(syntax("expected net name before `=`"));
            }
            let (func, args) = split_call(rhs.trim()).ok_or_else(|| syntax("expected `KIND(args)`"))?;
            if func.eq_ignore_ascii_case("DFF") {
                if args.len() != 1 {
                    return Err(NetlistError::new(
                        line_no,
                        BuildErrorKind::Syntax(format!("DFF takes one input, got {}", args.len())),
                    ));
                }
                b.dff_at(target, args[0], line_no);
            } else {
                let kind = func.parse::<GateKind>().map_err(|_| {
                    NetlistError::new(line_no, BuildErrorKind::UnknownGateKind(func.to_string()))
                })?;
                b.gate_at(target, kind, args, line_no);
            }
        } else {
            let (func, args) = split_call(line).ok_or_else(|| syntax("unrecognized statement"))?;
            if args.len() != 1 {
                return Err(syntax("INPUT/OUTPUT take exactly one net"));
            }
            match func.to_ascii_uppercase().as_str() {
                "INPUT" => {
                    b.input_at(args[0], line_no);
                }
                "OUTPUT" => {
                    b.outputs.push((args[0].to_string(), line_no));
                }
                _ => return Err(syntax("expected INPUT(...) or OUTPUT(...)")),
            }
        }
    }
    for e in exclude {
        b.exclude(e.clone());
    }
    b.build()
}

fn split_call(s: &str) -> Option<(&str, Vec<&str>)> {
    let open = s.find('(')?;
    let body = s[open + 1..].strip_suffix(')')?;
    let func = s[..open].trim();
    if !is_ident(func) {
        return None;
    }
    let args: Vec<&str> = if body.trim().is_empty() {
        Vec::new()
    } else {
        body.split(',').map(str::trim).collect()
    };
    if args.iter().any(|a| !is_ident(a)) {
        return None;
    }
    Some((func, args))
}

/// Serialize to `.bench`. Gates are written in topological order; exclusions
/// are recorded in a comment since the format has no syntax for them.
pub fn write_bench(c: &Circuit) -> String {
    let mut out = String::new();
    if !c.excluded.is_empty() {
        let names: Vec<&str> = c.excluded.iter().map(|&n| c.net_name(n)).collect();
        out.push_str(&format!("# excluded: {}\n", names.join(" ")));
    }
    for &i in &c.inputs {
        out.push_str(&format!("INPUT({})\n", c.net_name(i)));
    }
    for &o in &c.outputs {
        out.push_str(&format!("OUTPUT({})\n", c.net_name(o)));
    }
    for f in &c.ffs {
        out.push_str(&format!("{} = DFF({})\n", f.name, c.net_name(f.d)));
    }
    for &g in &c.topo {
        let g = c.gate(g);
        let ins: Vec<&str> = g.inputs.iter().map(|&n| c.net_name(n)).collect();
        out.push_str(&format!(
            "{} = {}({})\n",
            c.net_name(g.output),
            g.kind,
            ins.join(", ")
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonGate {
    pub id: usize,
    pub kind: GateKind,
    pub inputs: Vec<String>,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonFlipFlop {
    pub id: usize,
    pub d: String,
    pub q: String,
}

/// Native JSON circuit document. All references are by net name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonCircuit {
    pub nets: Vec<String>,
    pub gates: Vec<JsonGate>,
    pub ffs: Vec<JsonFlipFlop>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub excluded: Vec<String>,
}

impl From<&Circuit> for JsonCircuit {
    fn from(c: &Circuit) -> Self {
        let name = |n: &NetId| c.net_name(*n).to_string();
        JsonCircuit {
            nets: c.nets.iter().map(|n| n.name.clone()).collect(),
            gates: c
                .gates
                .iter()
                .enumerate()
                .map(|(id, g)| JsonGate {
                    id,
                    kind: g.kind,
                    inputs: g.inputs.iter().map(name).collect(),
                    output: name(&g.output),
                })
                .collect(),
            ffs: c
                .ffs
                .iter()
                .enumerate()
                .map(|(id, f)| JsonFlipFlop {
                    id,
                    d: name(&f.d),
                    q: name(&f.q),
                })
                .collect(),
            inputs: c.inputs.iter().map(name).collect(),
            outputs: c.outputs.iter().map(name).collect(),
            excluded: c.excluded.iter().map(name).collect(),
        }
    }
}

impl JsonCircuit {
    /// Rebuild a circuit. Net numbering follows the `nets` list so that ids
    /// survive a JSON round trip.
    pub fn to_circuit(&self) -> Result<Circuit, NetlistError> {
        enum Def<'a> {
            Input,
            Gate(&'a JsonGate),
            Ff(&'a JsonFlipFlop),
        }
        let mut defs: HashMap<&str, Def> = HashMap::new();
        let dup = |name: &str| {
            NetlistError::new(
                0,
                BuildErrorKind::DuplicateDriver {
                    name: name.to_string(),
                    first_line: 0,
                },
            )
        };
        for i in &self.inputs {
            if defs.insert(i, Def::Input).is_some() {
                return Err(dup(i));
            }
        }
        for g in &self.gates {
            if defs.insert(&g.output, Def::Gate(g)).is_some() {
                return Err(dup(&g.output));
            }
        }
        for f in &self.ffs {
            if defs.insert(&f.q, Def::Ff(f)).is_some() {
                return Err(dup(&f.q));
            }
        }
        let mut b = CircuitBuilder::new();
        for n in &self.nets {
            match defs.remove(n.as_str()) {
                Some(Def::Input) => b.input(n.clone()),
                Some(Def::Gate(g)) => b.gate(n.clone(), g.kind, g.inputs.iter().cloned()),
                Some(Def::Ff(f)) => b.dff(n.clone(), f.d.clone()),
                None => {
                    return Err(NetlistError::new(0, BuildErrorKind::UndefinedNet(n.clone())))
                }
            };
        }
        if let Some(name) = defs.keys().min() {
            return Err(NetlistError::new(
                0,
                BuildErrorKind::Syntax(format!("net `{name}` is driven but missing from `nets`")),
            ));
        }
        for o in &self.outputs {
            b.output(o.clone());
        }
        for e in &self.excluded {
            b.exclude(e.clone());
        }
        b.build()
    }
}
