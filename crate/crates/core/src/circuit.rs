//! Gate-level circuit IR.
//!
//! Gates are single-target elementary operations carrying an arbitrary list
//! of control conditions. Multi-controlled gates are first class; nothing
//! here decomposes them.
//!
//! Text form, one gate per line:
//!
//! ```text
//! # qubits=5
//! RY(1.0471975511965979) t=4 c=[2:1,3:0]
//! X t=0 c=[]
//! ```

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GateKind {
    PauliX,
    Hadamard,
    /// `R_y(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`.
    RotY(f64),
    /// Phase on the `|0⟩` component: `|0⟩ → e^{iβ}|0⟩`, `|1⟩ → |1⟩`.
    Phase(f64),
}

impl GateKind {
    pub fn inverse(self) -> Self {
        match self {
            GateKind::RotY(theta) => GateKind::RotY(-theta),
            GateKind::Phase(beta) => GateKind::Phase(-beta),
            other => other,
        }
    }
}

/// A control condition: the gate fires only when `qubit` reads `state`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Control {
    pub qubit: usize,
    pub state: bool,
}

impl Control {
    pub fn on(qubit: usize) -> Self {
        Self { qubit, state: true }
    }

    pub fn off(qubit: usize) -> Self {
        Self { qubit, state: false }
    }
}

/// Controls that fire when `qubits` (little-endian) hold `value`.
pub fn value_controls(qubits: impl IntoIterator<Item = usize>, value: u64) -> Vec<Control> {
    qubits
        .into_iter()
        .enumerate()
        .map(|(bit, qubit)| Control { qubit, state: (value >> bit) & 1 == 1 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gate {
    pub kind: GateKind,
    pub target: usize,
    pub controls: Vec<Control>,
}

impl Gate {
    pub fn new(kind: GateKind, target: usize, controls: Vec<Control>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(controls.len());
        for c in &controls {
            if c.qubit == target {
                return Err(Error::InvalidArgument(format!("qubit {target} both controls and is targeted")));
            }
            if !seen.insert(c.qubit) {
                return Err(Error::InvalidArgument(format!("qubit {} appears twice as a control", c.qubit)));
            }
        }
        Ok(Self { kind, target, controls })
    }

    pub fn x(target: usize) -> Self {
        Self { kind: GateKind::PauliX, target, controls: Vec::new() }
    }

    pub fn h(target: usize) -> Self {
        Self { kind: GateKind::Hadamard, target, controls: Vec::new() }
    }

    pub fn ry(theta: f64, target: usize) -> Self {
        Self { kind: GateKind::RotY(theta), target, controls: Vec::new() }
    }

    pub fn phase(beta: f64, target: usize) -> Self {
        Self { kind: GateKind::Phase(beta), target, controls: Vec::new() }
    }

    pub fn inverse(&self) -> Self {
        Self { kind: self.kind.inverse(), target: self.target, controls: self.controls.clone() }
    }

    /// Largest qubit index touched.
    pub fn max_qubit(&self) -> usize {
        self.controls.iter().map(|c| c.qubit).fold(self.target, usize::max)
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.target).chain(self.controls.iter().map(|c| c.qubit))
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            GateKind::PauliX => f.write_str("X")?,
            GateKind::Hadamard => f.write_str("H")?,
            GateKind::RotY(theta) => write!(f, "RY({theta:?})")?,
            GateKind::Phase(beta) => write!(f, "P({beta:?})")?,
        }
        write!(f, " t={} c=[", self.target)?;
        for (i, c) in self.controls.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", c.qubit, u8::from(c.state))?;
        }
        f.write_str("]")
    }
}

impl FromStr for Gate {
    type Err = String;

    fn from_str(line: &str) -> std::result::Result<Self, String> {
        let mut fields = line.split_whitespace();
        let head = fields.next().ok_or("empty gate line")?;
        let angle = |prefix: &str| -> std::result::Result<f64, String> {
            head.strip_prefix(prefix)
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| format!("malformed `{head}`"))?
                .parse::<f64>()
                .map_err(|e| format!("bad angle in `{head}`: {e}"))
        };
        let kind = match head {
            "X" => GateKind::PauliX,
            "H" => GateKind::Hadamard,
            h if h.starts_with("RY(") => GateKind::RotY(angle("RY(")?),
            h if h.starts_with("P(") => GateKind::Phase(angle("P(")?),
            other => return Err(format!("unknown gate `{other}`")),
        };
        let target = fields
            .next()
            .and_then(|t| t.strip_prefix("t="))
            .ok_or("missing `t=`")?
            .parse::<usize>()
            .map_err(|e| format!("bad target: {e}"))?;
        let ctrl = fields
            .next()
            .and_then(|c| c.strip_prefix("c=["))
            .and_then(|c| c.strip_suffix(']'))
            .ok_or("missing `c=[...]`")?;
        if fields.next().is_some() {
            return Err("trailing fields".into());
        }
        let mut controls = Vec::new();
        for item in ctrl.split(',').filter(|s| !s.is_empty()) {
            let (q, p) = item.split_once(':').ok_or_else(|| format!("bad control `{item}`"))?;
            let qubit = q.parse::<usize>().map_err(|e| format!("bad control qubit: {e}"))?;
            let state = match p {
                "0" => false,
                "1" => true,
                _ => return Err(format!("bad polarity `{p}`")),
            };
            controls.push(Control { qubit, state });
        }
        Gate::new(kind, target, controls).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, gates: Vec::new() }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if gate.max_qubit() >= self.num_qubits {
            return Err(Error::InvalidArgument(format!(
                "gate `{gate}` exceeds the {}-qubit circuit",
                self.num_qubits
            )));
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Appends `other` after `self`, widening to the larger qubit count.
    pub fn append(&mut self, other: &Circuit) {
        self.num_qubits = self.num_qubits.max(other.num_qubits);
        self.gates.extend_from_slice(&other.gates);
    }

    pub fn with_num_qubits(mut self, num_qubits: usize) -> Result<Self> {
        if let Some(g) = self.gates.iter().find(|g| g.max_qubit() >= num_qubits) {
            return Err(Error::InvalidArgument(format!("gate `{g}` does not fit {num_qubits} qubits")));
        }
        self.num_qubits = num_qubits;
        Ok(self)
    }

    /// Every qubit touched by some gate.
    pub fn support(&self) -> HashSet<usize> {
        self.gates.iter().flat_map(|g| g.qubits()).collect()
    }

    pub fn inverse(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Adds `extra` to the control list of every gate.
    pub fn controlled(&self, extra: &[Control]) -> Result<Circuit> {
        let support = self.support();
        let mut seen = HashSet::new();
        for c in extra {
            if support.contains(&c.qubit) {
                return Err(Error::InvalidArgument(format!(
                    "control qubit {} is already used by the circuit",
                    c.qubit
                )));
            }
            if !seen.insert(c.qubit) {
                return Err(Error::InvalidArgument(format!("control qubit {} repeated", c.qubit)));
            }
        }
        let num_qubits = extra.iter().map(|c| c.qubit + 1).fold(self.num_qubits, usize::max);
        let gates = self
            .gates
            .iter()
            .map(|g| {
                let mut controls = g.controls.clone();
                controls.extend_from_slice(extra);
                Gate { kind: g.kind, target: g.target, controls }
            })
            .collect();
        Ok(Circuit { num_qubits, gates })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# qubits={}\n", self.num_qubits);
        for g in &self.gates {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses [`Self::to_text`] output. Without a `# qubits=` header the
    /// width is the smallest that fits every gate.
    pub fn from_text(text: &str) -> Result<Circuit> {
        let mut declared = None;
        let mut gates = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(n) = rest.trim().strip_prefix("qubits=") {
                    declared = Some(n.trim().parse::<usize>().map_err(|e| Error::Parse {
                        line: i + 1,
                        msg: e.to_string(),
                    })?);
                }
                continue;
            }
            gates.push(line.parse::<Gate>().map_err(|msg| Error::Parse { line: i + 1, msg })?);
        }
        let needed = gates.iter().map(|g| g.max_qubit() + 1).max().unwrap_or(0);
        let num_qubits = declared.unwrap_or(needed);
        Circuit { num_qubits: needed, gates }.with_num_qubits(num_qubits)
    }
}

impl Extend<Gate> for Circuit {
    fn extend<I: IntoIterator<Item = Gate>>(&mut self, iter: I) {
        for g in iter {
            self.num_qubits = self.num_qubits.max(g.max_qubit() + 1);
            self.gates.push(g);
        }
    }
}

fn check_register(register: &[usize]) -> Result<()> {
    if register.is_empty() {
        return Err(Error::InvalidArgument("register must hold at least one qubit".into()));
    }
    let distinct: HashSet<_> = register.iter().collect();
    if distinct.len() != register.len() {
        return Err(Error::InvalidArgument("register qubits must be distinct".into()));
    }
    Ok(())
}

/// Ripple incrementer `|r⟩ → |r+1 mod 2ⁿ⟩` on a little-endian register.
pub fn increment(register: &[usize]) -> Result<Circuit> {
    check_register(register)?;
    let mut c = Circuit::default();
    for i in (1..register.len()).rev() {
        let controls = register[..i].iter().map(|&q| Control::on(q)).collect();
        c.extend([Gate { kind: GateKind::PauliX, target: register[i], controls }]);
    }
    c.extend([Gate::x(register[0])]);
    Ok(c)
}

/// `|r⟩ → |r−1 mod 2ⁿ⟩`, the reversed incrementer.
pub fn decrement(register: &[usize]) -> Result<Circuit> {
    Ok(increment(register)?.inverse())
}

/// `Π = 2|0⟩⟨0| − 𝕀` on `qubits`.
///
/// A phase of −1 on the all-zero pattern (a `P(π)` on the first qubit
/// controlled on the rest being `|0⟩`) followed by an exact global −1
/// written as `P(π) X P(π) X`.
pub fn reflection_about_zero(qubits: &[usize]) -> Result<Circuit> {
    check_register(qubits)?;
    let head = qubits[0];
    let mut c = Circuit::default();
    c.extend([
        Gate {
            kind: GateKind::Phase(PI),
            target: head,
            controls: qubits[1..].iter().map(|&q| Control::off(q)).collect(),
        },
        Gate::phase(PI, head),
        Gate::x(head),
        Gate::phase(PI, head),
        Gate::x(head),
    ]);
    Ok(c)
}
