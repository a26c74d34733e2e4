#![allow(dead_code)]

use std::collections::BTreeMap;

use iceberg_qaoa::circuits::{BlockKind, Circuit, Gate, Op, StateVector};
use iceberg_qaoa::iceberg::{decode, EncodedCircuit, Verdict};
use iceberg_qaoa::noise::full_set;
use iceberg_qaoa::problems::ProblemInstance;
use iceberg_qaoa::qaoa::{build_qaoa, energy_of_state, QaoaParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exact post-selected logical distribution of an encoded circuit: every
/// mid-circuit ancilla is projected onto 0, the trailing data readout is
/// summed over. Returns the acceptance weight and the normalized
/// distribution.
pub fn accepted_distribution(
    circuit: &Circuit,
    encoded: &EncodedCircuit,
) -> (f64, BTreeMap<u64, f64>) {
    let mut sv = StateVector::new(circuit.width).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let tail = circuit
        .gates
        .iter()
        .rev()
        .take_while(|g| matches!(g.op, Op::MeasureZ(..)))
        .count();
    let body = circuit.gates.len() - tail;
    let mut weight = 1.0;
    for g in &circuit.gates[..body] {
        match g.op {
            Op::MeasureZ(q, _) | Op::MeasureX(q, _) => {
                let x_basis = matches!(g.op, Op::MeasureX(..));
                if x_basis {
                    sv.h(q);
                }
                let p0 = 1.0 - sv.prob_one(q);
                weight *= p0;
                if p0 < 1e-14 {
                    return (0.0, BTreeMap::new());
                }
                sv.collapse(q, false, p0);
                if x_basis {
                    sv.h(q);
                }
            }
            Op::PrepZero(q) => sv.prep_zero(q, &mut rng),
            op => sv.apply(&op, &mut rng, &mut []).unwrap(),
        }
    }
    let mut dist = BTreeMap::new();
    let mut accepted = 0.0;
    let mut bits = vec![false; circuit.n_cbits];
    for (idx, a) in sv.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p < 1e-16 {
            continue;
        }
        for g in &circuit.gates[body..] {
            if let Op::MeasureZ(q, c) = g.op {
                bits[c] = (idx >> q) & 1 == 1;
            }
        }
        let d = decode(&bits, encoded).unwrap();
        if d.verdict == Verdict::Accept {
            *dist.entry(d.logical.unwrap()).or_insert(0.0) += p;
            accepted += p;
        }
    }
    if accepted > 0.0 {
        dist.values_mut().for_each(|v| *v /= accepted);
    }
    (weight * accepted, dist)
}

pub fn total_variation(a: &BTreeMap<u64, f64>, b: &BTreeMap<u64, f64>) -> f64 {
    let keys: std::collections::BTreeSet<u64> = a.keys().chain(b.keys()).copied().collect();
    0.5 * keys
        .iter()
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// Gate indices of every CNOT inside init, syndrome and final gadgets.
pub fn gadget_cnots(encoded: &EncodedCircuit) -> Vec<usize> {
    encoded
        .circuit
        .gates
        .iter()
        .enumerate()
        .filter(|(_, g)| {
            matches!(g.op, Op::Cnot(..)) && g.block.map_or(false, |b| b.kind != BlockKind::Logical)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Copy of `circuit` with the two-qubit Pauli `(a, b)` inserted after gate `at`.
pub fn with_fault(circuit: &Circuit, at: usize, pauli: (u8, u8)) -> Circuit {
    let (q0, q1) = match circuit.gates[at].op {
        Op::Cnot(c, t) => (c, t),
        ref op => panic!("not a CNOT: {op:?}"),
    };
    let mut gates = circuit.gates[..=at].to_vec();
    for (code, q) in [(pauli.0, q0), (pauli.1, q1)] {
        match code {
            1 => gates.push(Gate::new(Op::X(q))),
            2 => gates.push(Gate::new(Op::Y(q))),
            3 => gates.push(Gate::new(Op::Z(q))),
            _ => {}
        }
    }
    gates.extend_from_slice(&circuit.gates[at + 1..]);
    Circuit {
        width: circuit.width,
        n_cbits: circuit.n_cbits,
        gates,
    }
}

/// First-order unencoded fidelity: each RZZ carries a depolarizing fault with
/// probability `p`, and every one of the 15 Paulis is propagated exactly.
pub fn first_order_fidelity(instance: &ProblemInstance, params: &QaoaParams, p: f64) -> f64 {
    let c = build_qaoa(instance, params).unwrap();
    let energy = |fault: Option<(usize, (u8, u8))>| {
        let mut sv = StateVector::new(c.width).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (i, g) in c.gates.iter().enumerate() {
            sv.apply(&g.op, &mut rng, &mut []).unwrap();
            if let (Some((at, (a, b))), Op::Rzz(_, q0, q1)) = (fault, g.op) {
                if at == i {
                    for (code, q) in [(a, q0), (b, q1)] {
                        match code {
                            1 => sv.x(q),
                            2 => sv.y(q),
                            3 => sv.z(q),
                            _ => {}
                        }
                    }
                }
            }
        }
        energy_of_state(instance, &sv).energy
    };
    let e0 = energy(None);
    let mut damage = 0.0;
    for (i, g) in c.gates.iter().enumerate() {
        if matches!(g.op, Op::Rzz(..)) {
            damage += full_set()
                .into_iter()
                .map(|f| 1.0 - energy(Some((i, f))) / e0)
                .sum::<f64>()
                / 15.0;
        }
    }
    1.0 - p * damage
}
