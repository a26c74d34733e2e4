//! Gate-list circuits, dense state-vector execution and Pauli propagation.

mod pauli;
mod statevector;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use pauli::{conjugate_pauli, PauliString, MAX_PAULI_WIDTH};
pub use statevector::{expectation_pauli, run_statevector, StateVector, MAX_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Op {
    PrepZero(usize),
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    Cnot(usize, usize),
    /// `exp(−i θ/2 Z⊗Z)`
    Rzz(f64, usize, usize),
    /// `exp(−i θ/2 X)`
    Rx(f64, usize),
    /// `exp(−i θ/2 X⊗X)`
    Rxx(f64, usize, usize),
    /// Measure in Z, store the outcome (1 for eigenvalue −1) in a classical bit.
    MeasureZ(usize, usize),
    /// Measure in X, store the outcome (1 for eigenvalue −1) in a classical bit.
    MeasureX(usize, usize),
}

impl Op {
    pub fn qubits(&self) -> Vec<usize> {
        use Op::*;
        match *self {
            PrepZero(q)
            | H(q)
            | X(q)
            | Y(q)
            | Z(q)
            | Rx(_, q)
            | MeasureZ(q, _)
            | MeasureX(q, _) => vec![q],
            Cnot(a, b) | Rzz(_, a, b) | Rxx(_, a, b) => vec![a, b],
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Op::Cnot(..) | Op::Rzz(..) | Op::Rxx(..))
    }

    pub fn is_measurement(&self) -> bool {
        matches!(self, Op::MeasureZ(..) | Op::MeasureX(..))
    }

    pub fn cbit(&self) -> Option<usize> {
        match *self {
            Op::MeasureZ(_, c) | Op::MeasureX(_, c) => Some(c),
            _ => None,
        }
    }

    fn kind(&self) -> &'static str {
        use Op::*;
        match self {
            PrepZero(_) => "PREP",
            H(_) => "H",
            X(_) => "X",
            Y(_) => "Y",
            Z(_) => "Z",
            Cnot(..) => "CNOT",
            Rzz(..) => "RZZ",
            Rx(..) => "RX",
            Rxx(..) => "RXX",
            MeasureZ(..) => "MZ",
            MeasureX(..) => "MX",
        }
    }

    fn angle(&self) -> Option<f64> {
        match *self {
            Op::Rzz(t, ..) | Op::Rx(t, _) | Op::Rxx(t, ..) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Init,
    Logical,
    Syndrome,
    Final,
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockKind::Init => "init",
            BlockKind::Logical => "logical",
            BlockKind::Syndrome => "syndrome",
            BlockKind::Final => "final",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockTag {
    pub kind: BlockKind,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub op: Op,
    pub block: Option<BlockTag>,
    /// Set on gates that implement a logical operation (as opposed to
    /// encoding, syndrome extraction or inserted errors).
    pub logical: bool,
}

impl Gate {
    pub fn new(op: Op) -> Self {
        Gate {
            op,
            block: None,
            logical: false,
        }
    }

    pub fn logical(op: Op) -> Self {
        Gate {
            op,
            block: None,
            logical: true,
        }
    }

    pub fn in_block(mut self, tag: BlockTag) -> Self {
        self.block = Some(tag);
        self
    }
}

impl From<Op> for Gate {
    fn from(op: Op) -> Self {
        Gate::new(op)
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.op.kind())?;
        for q in self.op.qubits() {
            write!(f, " {q}")?;
        }
        if let Some(t) = self.op.angle() {
            write!(f, " {t}")?;
        }
        if let Some(c) = self.op.cbit() {
            write!(f, " c{c}")?;
        }
        if let Some(tag) = self.block {
            write!(f, " {}:{}", tag.kind, tag.index)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub width: usize,
    pub n_cbits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Circuit {
            width,
            n_cbits: 0,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: impl Into<Gate>) {
        let gate = gate.into();
        if let Some(c) = gate.op.cbit() {
            self.n_cbits = self.n_cbits.max(c + 1);
        }
        self.gates.push(gate);
    }

    /// Checks qubit ranges, distinct two-qubit operands and unique classical bits.
    pub fn validate(&self) -> crate::Result<()> {
        if self.width == 0 {
            return Err(crate::Error::MalformedGate("circuit has zero width".into()));
        }
        let mut used = vec![false; self.n_cbits];
        for g in &self.gates {
            let qs = g.op.qubits();
            if qs.iter().any(|&q| q >= self.width) || (qs.len() == 2 && qs[0] == qs[1]) {
                return Err(crate::Error::MalformedGate(g.to_string()));
            }
            if let Some(c) = g.op.cbit() {
                if c >= self.n_cbits || std::mem::replace(&mut used[c], true) {
                    return Err(crate::Error::MalformedGate(format!(
                        "classical bit reused in {g}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn count_two_qubit(&self) -> usize {
        self.gates.iter().filter(|g| g.op.is_two_qubit()).count()
    }

    /// One gate per line: `KIND q0 [q1] [theta] [cbit] [block-id]`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }
}
