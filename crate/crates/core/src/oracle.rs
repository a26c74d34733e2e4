//! Exact enumeration of faults inside the Iceberg gadgets.
//!
//! Every combination of `μ` faulty CNOTs, each followed by one of the 15
//! non-identity two-qubit Paulis, is propagated to the end of the gadget and
//! classified as harmless, logical, exciting or discarded.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{conjugate_pauli, Gate, Op, PauliString};
use crate::error::{invalid, Error, Result};
use crate::iceberg::{final_gadget, init_gadget, syndrome_gadget, Gadget, IcebergLayout, Readout};
use crate::noise::full_set;
use crate::perfmodel::{model_fractions, BlockProbs, GadgetKind};

/// Upper bound on enumerated fault configurations per call.
pub const ENUMERATION_BUDGET: u64 = 2_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Residual {
    Harmless,
    Logical,
    ExcitingSx,
    ExcitingSz,
    ExcitingBoth,
}

impl Residual {
    pub fn is_exciting(self) -> bool {
        matches!(
            self,
            Residual::ExcitingSx | Residual::ExcitingSz | Residual::ExcitingBoth
        )
    }
}

fn code_mask(n: usize) -> u64 {
    (1u64 << n) - 1
}

fn excitation(x: u64, z: u64) -> Option<Residual> {
    // S_X = X^n is excited by an odd number of Z components, S_Z by odd X.
    match (z.count_ones() % 2 == 1, x.count_ones() % 2 == 1) {
        (false, false) => None,
        (true, false) => Some(Residual::ExcitingSx),
        (false, true) => Some(Residual::ExcitingSz),
        (true, true) => Some(Residual::ExcitingBoth),
    }
}

/// Classification against the code: harmless iff the residual is in
/// `{I, S_X, S_Z, S_X S_Z}` up to phase.
pub fn classify_residual(pauli: &PauliString, layout: &IcebergLayout) -> Residual {
    let m = code_mask(layout.n());
    let (x, z) = (pauli.x & m, pauli.z & m);
    if let Some(r) = excitation(x, z) {
        return r;
    }
    if (x == 0 || x == m) && (z == 0 || z == m) {
        Residual::Harmless
    } else {
        Residual::Logical
    }
}

/// Classification against the state `|+̄⟩^⊗k` prepared by the init gadget,
/// whose stabilizer group contains every even-weight X string and `S_Z`.
pub fn classify_prepared(pauli: &PauliString, layout: &IcebergLayout) -> Residual {
    let m = code_mask(layout.n());
    let (x, z) = (pauli.x & m, pauli.z & m);
    if let Some(r) = excitation(x, z) {
        return r;
    }
    if z == 0 || z == m {
        Residual::Harmless
    } else {
        Residual::Logical
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    H,
    L,
    E,
    D,
}

struct Classifier {
    kind: GadgetKind,
    layout: IcebergLayout,
    readout: Vec<(usize, Readout)>,
}

impl Classifier {
    fn classify(&self, x: u64, z: u64) -> Outcome {
        for &(q, basis) in &self.readout {
            let flipped = match basis {
                Readout::Z => (x >> q) & 1,
                Readout::X => (z >> q) & 1,
            };
            if flipped == 1 {
                return Outcome::D;
            }
        }
        let p = PauliString::from_masks(self.layout.width(), x, z);
        match self.kind {
            GadgetKind::Final => {
                // Data are read out in Z, so only X components matter.
                let m = code_mask(self.layout.n());
                let xd = x & m;
                if xd.count_ones() % 2 == 1 {
                    Outcome::D
                } else if xd == 0 || xd == m {
                    Outcome::H
                } else {
                    Outcome::L
                }
            }
            GadgetKind::Init | GadgetKind::Syndrome => {
                let r = if self.kind == GadgetKind::Init {
                    classify_prepared(&p, &self.layout)
                } else {
                    classify_residual(&p, &self.layout)
                };
                match r {
                    Residual::Harmless => Outcome::H,
                    Residual::Logical => Outcome::L,
                    _ => Outcome::E,
                }
            }
        }
    }
}

pub fn gadget_for(kind: GadgetKind, layout: &IcebergLayout) -> Gadget {
    match kind {
        GadgetKind::Init => init_gadget(layout),
        GadgetKind::Syndrome => syndrome_gadget(layout),
        GadgetKind::Final => final_gadget(layout),
    }
}

/// Propagated effect `(x, z)` of every Pauli after every CNOT location.
pub fn location_effects(gadget: &Gadget, width: usize) -> Result<Vec<Vec<(u64, u64)>>> {
    let body: Vec<Gate> = gadget.body.iter().map(|&o| Gate::new(o)).collect();
    let mut out = Vec::new();
    for (idx, op) in gadget.body.iter().enumerate() {
        let (c, t) = match *op {
            Op::Cnot(c, t) => (c, t),
            _ => continue,
        };
        let mut row = Vec::with_capacity(15);
        for (a, b) in full_set() {
            let mut p = PauliString::identity(width);
            p.set(c, a);
            p.set(t, b);
            let r = conjugate_pauli(&body[idx + 1..], p)?;
            row.push((r.x, r.z));
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionReport {
    pub block: GadgetKind,
    pub k: usize,
    pub mu: usize,
    pub exact: BlockProbs,
    pub model: BlockProbs,
    pub configurations: u64,
}

fn binomial(n: u64, r: u64) -> u64 {
    (0..r).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

pub fn enumerate_fractions(block: GadgetKind, k: usize, mu: usize) -> Result<FractionReport> {
    if !(1..=3).contains(&mu) {
        return invalid(format!("μ = {mu} outside 1..=3"));
    }
    let layout = IcebergLayout::new(k)?;
    if layout.width() > 64 {
        return invalid("layout too wide for bit-mask propagation");
    }
    let gadget = gadget_for(block, &layout);
    let effects = location_effects(&gadget, layout.width())?;
    let locs = effects.len();
    if locs < mu {
        return invalid("fewer locations than faults");
    }
    let total = binomial(locs as u64, mu as u64) * 15u64.pow(mu as u32);
    if total > ENUMERATION_BUDGET {
        return Err(Error::Guard(format!(
            "{total} configurations exceed the enumeration budget"
        )));
    }
    let cls = Classifier {
        kind: block,
        layout,
        readout: gadget.ancilla_readout.clone(),
    };
    let tally = |acc: &mut [u64; 4], x: u64, z: u64| {
        acc[cls.classify(x, z) as usize] += 1;
    };

    let counts = (0..locs)
        .into_par_iter()
        .map(|i| {
            let mut acc = [0u64; 4];
            for &(x1, z1) in &effects[i] {
                if mu == 1 {
                    tally(&mut acc, x1, z1);
                    continue;
                }
                for j in i + 1..locs {
                    for &(x2, z2) in &effects[j] {
                        if mu == 2 {
                            tally(&mut acc, x1 ^ x2, z1 ^ z2);
                            continue;
                        }
                        for l in j + 1..locs {
                            for &(x3, z3) in &effects[l] {
                                tally(&mut acc, x1 ^ x2 ^ x3, z1 ^ z2 ^ z3);
                            }
                        }
                    }
                }
            }
            acc
        })
        .reduce(
            || [0u64; 4],
            |a, b| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]],
        );

    let seen: u64 = counts.iter().sum();
    debug_assert_eq!(seen, total);
    let f = |c: u64| c as f64 / seen as f64;
    Ok(FractionReport {
        block,
        k,
        mu,
        exact: BlockProbs {
            h: f(counts[0]),
            l: f(counts[1]),
            e: f(counts[2]),
            d: f(counts[3]),
        },
        model: model_fractions(block, mu),
        configurations: seen,
    })
}

pub const CSV_HEADER: &str = "block,k,mu,H,L,E,D,model_H,model_L,model_E,model_D";

pub fn report_csv_row(r: &FractionReport) -> String {
    let name = match r.block {
        GadgetKind::Init => "init",
        GadgetKind::Syndrome => "syndrome",
        GadgetKind::Final => "final",
    };
    format!(
        "{},{},{},{:.4},{:.4},{:.4},{:.4},{},{},{},{}",
        name,
        r.k,
        r.mu,
        r.exact.h,
        r.exact.l,
        r.exact.e,
        r.exact.d,
        r.model.h,
        r.model.l,
        r.model.e,
        r.model.d
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_examples() {
        let l = IcebergLayout::new(4).unwrap();
        let w = l.width();
        assert_eq!(
            classify_residual(&PauliString::identity(w), &l),
            Residual::Harmless
        );
        assert_eq!(
            classify_residual(&PauliString::from_masks(w, 0b111111, 0), &l),
            Residual::Harmless
        );
        assert_eq!(
            classify_residual(&PauliString::from_masks(w, 0b000011, 0), &l),
            Residual::Logical
        );
        assert_eq!(
            classify_residual(&PauliString::from_masks(w, 0b1, 0), &l),
            Residual::ExcitingSz
        );
        assert_eq!(
            classify_residual(&PauliString::from_masks(w, 0, 0b1), &l),
            Residual::ExcitingSx
        );
        assert_eq!(
            classify_residual(&PauliString::from_masks(w, 0b1, 0b1), &l),
            Residual::ExcitingBoth
        );
    }

    #[test]
    fn single_faults_never_logical() {
        for kind in [GadgetKind::Init, GadgetKind::Syndrome, GadgetKind::Final] {
            for k in [2, 4, 6, 8] {
                let r = enumerate_fractions(kind, k, 1).unwrap();
                assert_eq!(r.exact.l, 0.0, "{kind:?} k={k}");
                assert!((r.exact.total() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mu_guard() {
        assert!(enumerate_fractions(GadgetKind::Init, 8, 4).is_err());
        assert!(enumerate_fractions(GadgetKind::Init, 7, 1).is_err());
    }
}
