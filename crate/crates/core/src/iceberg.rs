//! Encoding of logical QAOA circuits into the `[[k+2, k, 2]]` Iceberg code.
//!
//! Physical qubits are numbered `t = 0`, data `1..=k`, `b = k+1`, followed by
//! two ancillas. The code space is stabilized by `S_X = X^⊗n` and
//! `S_Z = Z^⊗n`; logical operators are `X̄_i = X_t X_i` and `Z̄_i = Z_b Z_i`.

use serde::{Deserialize, Serialize};

use crate::circuits::{BlockKind, BlockTag, Circuit, Gate, Op};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcebergLayout {
    pub k: usize,
}

impl IcebergLayout {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k % 2 == 1 {
            return invalid(format!("Iceberg code needs even k ≥ 2, got {k}"));
        }
        Ok(IcebergLayout { k })
    }

    /// Number of code qubits.
    pub fn n(&self) -> usize {
        self.k + 2
    }

    pub fn top(&self) -> usize {
        0
    }

    pub fn bottom(&self) -> usize {
        self.k + 1
    }

    /// Physical index of logical qubit `i` (0-based).
    pub fn data(&self, i: usize) -> usize {
        i + 1
    }

    pub fn ancillas(&self) -> [usize; 2] {
        [self.n(), self.n() + 1]
    }

    pub fn width(&self) -> usize {
        self.n() + 2
    }
}

/// Which basis an ancilla is read out in; an ancilla flips when the residual
/// error anticommutes with the measured observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    Z,
    X,
}

/// Measurement-free core of a fault-tolerant gadget plus its readout.
#[derive(Debug, Clone)]
pub struct Gadget {
    pub kind: BlockKind,
    pub prep: Vec<Op>,
    pub body: Vec<Op>,
    pub ancilla_readout: Vec<(usize, Readout)>,
}

impl Gadget {
    pub fn cnot_count(&self) -> usize {
        self.body
            .iter()
            .filter(|o| matches!(o, Op::Cnot(..)))
            .count()
    }
}

/// Cat-state preparation of `|+̄⟩^⊗k` with two flag ancillas (`n+3` CNOTs).
/// The GHZ state is built in the Z basis and rotated by a Hadamard layer.
pub fn init_gadget(layout: &IcebergLayout) -> Gadget {
    let n = layout.n();
    let [a1, a2] = layout.ancillas();
    let mut body = vec![
        Op::H(0),
        Op::Cnot(0, a1),
        Op::Cnot(0, 1),
        Op::Cnot(1, a1),
        Op::Cnot(1, a2),
    ];
    body.extend((1..n - 1).map(|i| Op::Cnot(i, i + 1)));
    body.push(Op::Cnot(n - 2, a2));
    body.extend((0..n).map(Op::H));
    Gadget {
        kind: BlockKind::Init,
        prep: vec![Op::PrepZero(a1), Op::PrepZero(a2)],
        body,
        ancilla_readout: vec![(a1, Readout::Z), (a2, Readout::Z)],
    }
}

/// Measures `S_Z` into the first ancilla and `S_X` into the second (`2n` CNOTs).
pub fn syndrome_gadget(layout: &IcebergLayout) -> Gadget {
    let n = layout.n();
    let [za, xa] = layout.ancillas();
    let mut body = vec![Op::H(xa), Op::Cnot(0, za), Op::Cnot(xa, 0), Op::Cnot(xa, 1)];
    body.extend((1..n - 1).map(|q| Op::Cnot(q, za)));
    body.extend((2..n).map(|q| Op::Cnot(xa, q)));
    body.push(Op::Cnot(n - 1, za));
    Gadget {
        kind: BlockKind::Syndrome,
        prep: vec![Op::PrepZero(za), Op::PrepZero(xa)],
        body,
        ancilla_readout: vec![(za, Readout::Z), (xa, Readout::X)],
    }
}

/// Flagged `S_X` check followed by transversal Z readout (`n+2` CNOTs).
pub fn final_gadget(layout: &IcebergLayout) -> Gadget {
    let n = layout.n();
    let [xa, flag] = layout.ancillas();
    let mut body = vec![Op::H(xa), Op::Cnot(xa, 0), Op::Cnot(xa, flag)];
    body.extend((1..n - 1).map(|q| Op::Cnot(xa, q)));
    body.push(Op::Cnot(xa, flag));
    body.push(Op::Cnot(xa, n - 1));
    Gadget {
        kind: BlockKind::Final,
        prep: vec![Op::PrepZero(xa), Op::PrepZero(flag)],
        body,
        ancilla_readout: vec![(xa, Readout::X), (flag, Readout::Z)],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpan {
    pub kind: BlockKind,
    pub index: usize,
    /// Gate range `[start, end)` in the physical circuit.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodedCircuit {
    pub layout: IcebergLayout,
    pub circuit: Circuit,
    pub blocks: Vec<BlockSpan>,
    /// Fault-tolerant gadgets including the final measurement.
    pub s: usize,
    pub g1: usize,
    pub g2: usize,
    /// Logical gates per logical block, in circuit order.
    pub logical_counts: Vec<usize>,
    /// Ancilla classical bits per gadget (init, syndromes…, final).
    pub gadget_bits: Vec<Vec<usize>>,
    /// Classical bits of the final data readout, in physical order.
    pub data_bits: Vec<usize>,
}

/// `s − 1` insertion offsets splitting `num_logical_gates` into `s` parts
/// whose sizes differ by at most one.
pub fn place_syndromes(num_logical_gates: usize, s: usize) -> Result<Vec<usize>> {
    if s == 0 {
        return invalid("s must be at least 1");
    }
    Ok((1..s).map(|j| j * num_logical_gates / s).collect())
}

/// Validates an explicit list of offsets.
pub fn check_offsets(num_logical_gates: usize, offsets: &[usize]) -> Result<()> {
    if offsets.iter().any(|&o| o > num_logical_gates) || offsets.windows(2).any(|w| w[0] > w[1]) {
        return invalid(format!(
            "offsets {offsets:?} out of range for {num_logical_gates} gates"
        ));
    }
    Ok(())
}

/// Block sizes implied by a set of offsets.
pub fn partition_sizes(num_logical_gates: usize, offsets: &[usize]) -> Vec<usize> {
    let mut sizes = Vec::with_capacity(offsets.len() + 1);
    let mut prev = 0;
    for &o in offsets.iter().chain(std::iter::once(&num_logical_gates)) {
        sizes.push(o - prev);
        prev = o;
    }
    sizes
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeOptions {
    pub s: usize,
    pub dd: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions { s: 1, dd: true }
    }
}

pub fn encode(logical: &Circuit, k: usize, s: usize, dd: bool) -> Result<EncodedCircuit> {
    let sequence = logical_sequence(logical, k)?;
    let offsets = place_syndromes(sequence.len(), s)?;
    encode_with_offsets(logical, k, &offsets, dd)
}

/// Strips the Hadamard prelude and returns the logical RZZ/RX sequence.
fn logical_sequence(logical: &Circuit, k: usize) -> Result<Vec<Op>> {
    if logical.width != k {
        return invalid(format!(
            "logical circuit width {} != k = {k}",
            logical.width
        ));
    }
    let mut seen_h = vec![false; k];
    let mut ops = Vec::new();
    for g in &logical.gates {
        match g.op {
            Op::H(q) if ops.is_empty() && !seen_h[q] => seen_h[q] = true,
            Op::Rzz(..) | Op::Rx(..) => ops.push(g.op),
            other => return invalid(format!("unsupported logical gate {other:?}")),
        }
    }
    if seen_h.iter().any(|&h| !h) {
        return invalid("logical circuit must start with a Hadamard on every qubit");
    }
    Ok(ops)
}

pub fn encode_with_offsets(
    logical: &Circuit,
    k: usize,
    offsets: &[usize],
    dd: bool,
) -> Result<EncodedCircuit> {
    let layout = IcebergLayout::new(k)?;
    let sequence = logical_sequence(logical, k)?;
    check_offsets(sequence.len(), offsets)?;
    let s = offsets.len() + 1;
    let n = layout.n();
    let mut circuit = Circuit::new(layout.width());
    let mut blocks = Vec::new();
    let mut gadget_bits = Vec::new();
    let mut next_cbit = 0;

    let mut emit_gadget =
        |circuit: &mut Circuit, blocks: &mut Vec<BlockSpan>, g: Gadget, index: usize| {
            let tag = BlockTag {
                kind: g.kind,
                index,
            };
            let start = circuit.gates.len();
            for op in g.prep.iter().chain(&g.body) {
                circuit.push(Gate::new(*op).in_block(tag));
            }
            let mut bits = Vec::new();
            for &(q, basis) in &g.ancilla_readout {
                let op = match basis {
                    Readout::Z => Op::MeasureZ(q, next_cbit),
                    Readout::X => Op::MeasureX(q, next_cbit),
                };
                circuit.push(Gate::new(op).in_block(tag));
                bits.push(next_cbit);
                next_cbit += 1;
            }
            let mut data = Vec::new();
            if g.kind == BlockKind::Final {
                for q in 0..n {
                    circuit.push(Gate::new(Op::MeasureZ(q, next_cbit)).in_block(tag));
                    data.push(next_cbit);
                    next_cbit += 1;
                }
            }
            blocks.push(BlockSpan {
                kind: g.kind,
                index,
                start,
                end: circuit.gates.len(),
            });
            (bits, data)
        };

    let (bits, _) = emit_gadget(&mut circuit, &mut blocks, init_gadget(&layout), 0);
    gadget_bits.push(bits);

    let mut g1 = 0;
    let mut g2 = 0;
    let mut logical_counts = Vec::with_capacity(s);
    let mut pos = 0;
    for part in 0..s {
        let end = offsets.get(part).copied().unwrap_or(sequence.len());
        let tag = BlockTag {
            kind: BlockKind::Logical,
            index: part,
        };
        let start = circuit.gates.len();
        for idx in pos..end {
            let op = sequence[idx];
            // A cost gate right after a mixer gate starts a new QAOA layer.
            if dd && idx > 0 && matches!(op, Op::Rzz(..)) && matches!(sequence[idx - 1], Op::Rx(..))
            {
                for q in 0..n {
                    circuit.push(Gate::new(Op::X(q)).in_block(tag));
                }
            }
            let physical = match op {
                Op::Rx(th, i) => {
                    g1 += 1;
                    Op::Rxx(th, layout.top(), layout.data(i))
                }
                Op::Rzz(th, i, j) => {
                    g2 += 1;
                    Op::Rzz(th, layout.data(i), layout.data(j))
                }
                _ => unreachable!(),
            };
            circuit.push(Gate::logical(physical).in_block(tag));
        }
        blocks.push(BlockSpan {
            kind: BlockKind::Logical,
            index: part,
            start,
            end: circuit.gates.len(),
        });
        logical_counts.push(end - pos);
        pos = end;
        if part + 1 < s {
            let (bits, _) = emit_gadget(
                &mut circuit,
                &mut blocks,
                syndrome_gadget(&layout),
                part + 1,
            );
            gadget_bits.push(bits);
        }
    }
    let (bits, data_bits) = emit_gadget(&mut circuit, &mut blocks, final_gadget(&layout), s);
    gadget_bits.push(bits);

    Ok(EncodedCircuit {
        layout,
        circuit,
        blocks,
        s,
        g1,
        g2,
        logical_counts,
        gadget_bits,
        data_bits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    /// Discarded at the given gadget (0 = init, `s` = final).
    Reject(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoded {
    pub verdict: Verdict,
    /// Logical bitstring, bit `i` set when logical qubit `i` reads −1.
    pub logical: Option<u64>,
}

pub fn decode(bits: &[bool], encoded: &EncodedCircuit) -> Result<Decoded> {
    let needed = encoded
        .gadget_bits
        .iter()
        .flatten()
        .chain(&encoded.data_bits)
        .max()
        .copied()
        .unwrap_or(0);
    if bits.len() <= needed {
        return Err(Error::InvalidArgument(format!(
            "expected at least {} bits, got {}",
            needed + 1,
            bits.len()
        )));
    }
    for (g, anc) in encoded.gadget_bits.iter().enumerate() {
        if anc.iter().any(|&c| bits[c]) {
            return Ok(Decoded {
                verdict: Verdict::Reject(g),
                logical: None,
            });
        }
    }
    let data: Vec<bool> = encoded.data_bits.iter().map(|&c| bits[c]).collect();
    if data.iter().filter(|&&b| b).count() % 2 == 1 {
        return Ok(Decoded {
            verdict: Verdict::Reject(encoded.s),
            logical: None,
        });
    }
    let zb = data[encoded.layout.bottom()];
    let logical = (0..encoded.layout.k).fold(0u64, |acc, i| {
        if data[encoded.layout.data(i)] ^ zb {
            acc | (1 << i)
        } else {
            acc
        }
    });
    Ok(Decoded {
        verdict: Verdict::Accept,
        logical: Some(logical),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockBudget {
    pub kind: BlockKind,
    pub index: usize,
    pub two_qubit_gates: usize,
}

/// Two-qubit gate count per block in circuit order.
pub fn gate_budget(encoded: &EncodedCircuit) -> Vec<BlockBudget> {
    encoded
        .blocks
        .iter()
        .map(|b| BlockBudget {
            kind: b.kind,
            index: b.index,
            two_qubit_gates: encoded.circuit.gates[b.start..b.end]
                .iter()
                .filter(|g| g.op.is_two_qubit())
                .count(),
        })
        .collect()
}

#[derive(Serialize)]
struct Sidecar<'a> {
    k: usize,
    n: usize,
    s: usize,
    g1: usize,
    g2: usize,
    blocks: &'a [BlockSpan],
    budget: Vec<BlockBudget>,
}

/// Block boundaries and budgets as JSON.
pub fn sidecar_json(encoded: &EncodedCircuit) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Sidecar {
        k: encoded.layout.k,
        n: encoded.layout.n(),
        s: encoded.s,
        g1: encoded.g1,
        g2: encoded.g2,
        blocks: &encoded.blocks,
        budget: gate_budget(encoded),
    })?)
}
