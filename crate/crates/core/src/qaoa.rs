//! Logical QAOA circuits, noiseless energies and parameter schedules.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Gate, Op, StateVector, MAX_WIDTH};
use crate::error::{invalid, Error, Result};
use crate::problems::ProblemInstance;

/// Published fixed angles for 3-regular MaxCut, one line per depth.
pub const FIXED_ANGLES_3REG: &str = include_str!("../data/fixed_angles_3reg.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.len() != betas.len() {
            return invalid(format!("{} gammas vs {} betas", gammas.len(), betas.len()));
        }
        Ok(QaoaParams { gammas, betas })
    }

    pub fn layers(&self) -> usize {
        self.gammas.len()
    }

    pub fn to_line(&self) -> String {
        let mut s = self.layers().to_string();
        for v in self.gammas.iter().chain(&self.betas) {
            s.push_str(&format!(" {v}"));
        }
        s
    }
}

/// Parses "ell gamma_1..gamma_ell beta_1..beta_ell" lines; `#` starts a comment.
pub fn parse_params<R: BufRead>(input: R) -> Result<BTreeMap<usize, QaoaParams>> {
    let mut out = BTreeMap::new();
    for (ln, line) in input.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            line: ln + 1,
            msg: msg.to_string(),
        };
        let vals: Vec<f64> = body
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| err("bad number")))
            .collect::<Result<_>>()?;
        let ell = vals[0] as usize;
        if vals[0] != ell as f64 || vals.len() != 1 + 2 * ell {
            return Err(err("expected ell followed by 2·ell angles"));
        }
        let p = QaoaParams::new(vals[1..=ell].to_vec(), vals[ell + 1..].to_vec())?;
        out.insert(ell, p);
    }
    Ok(out)
}

pub fn load_params_file(path: &Path) -> Result<BTreeMap<usize, QaoaParams>> {
    parse_params(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Fixed angles for 3-regular MaxCut at depth `ell`, if tabulated.
pub fn fixed_angles(ell: usize) -> Option<QaoaParams> {
    parse_params(FIXED_ANGLES_3REG.as_bytes())
        .ok()?
        .remove(&ell)
}

/// Hadamard layer, then per layer `RZZ(2γ w)` on every edge and `RX(2β)` on every qubit.
pub fn build_qaoa(instance: &ProblemInstance, params: &QaoaParams) -> Result<Circuit> {
    if params.gammas.len() != params.betas.len() {
        return invalid("parameter vectors differ in length");
    }
    let k = instance.k;
    let mut c = Circuit::new(k);
    for q in 0..k {
        c.push(Op::H(q));
    }
    for (&g, &b) in params.gammas.iter().zip(&params.betas) {
        for e in &instance.edges {
            c.push(Gate::logical(Op::Rzz(2.0 * g * e.w, e.i, e.j)));
        }
        for q in 0..k {
            c.push(Gate::logical(Op::Rx(2.0 * b, q)));
        }
    }
    Ok(c)
}

/// Exact QAOA state.
pub fn qaoa_state(instance: &ProblemInstance, params: &QaoaParams) -> Result<StateVector> {
    if instance.k > MAX_WIDTH {
        return Err(Error::Guard(format!(
            "k = {} exceeds state-vector limit",
            instance.k
        )));
    }
    let c = build_qaoa(instance, params)?;
    let mut sv = StateVector::new(c.width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for g in &c.gates {
        sv.apply(&g.op, &mut rng, &mut [])?;
    }
    Ok(sv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiselessEnergy {
    pub energy: f64,
    /// `⟨Z_i Z_j⟩` per edge, in instance edge order.
    pub edge_zz: Vec<f64>,
}

pub fn noiseless_energy(
    instance: &ProblemInstance,
    params: &QaoaParams,
) -> Result<NoiselessEnergy> {
    let sv = qaoa_state(instance, params)?;
    Ok(energy_of_state(instance, &sv))
}

pub fn energy_of_state(instance: &ProblemInstance, sv: &StateVector) -> NoiselessEnergy {
    let edge_zz: Vec<f64> = instance.edges.iter().map(|e| sv.zz(e.i, e.j)).collect();
    let energy = instance
        .edges
        .iter()
        .zip(&edge_zz)
        .map(|(e, v)| e.w * v)
        .sum();
    NoiselessEnergy { energy, edge_zz }
}

/// `α = objective(energy) / f_max`; for MaxCut this is `(|E| − ⟨H⟩) / (2 f_max)`.
pub fn approximation_ratio(instance: &ProblemInstance, energy: f64) -> Result<f64> {
    let f_max = instance.f_max()?;
    if f_max == 0.0 {
        return Err(Error::Undefined("f_max = 0".into()));
    }
    Ok(instance.objective_from_energy(energy) / f_max)
}

/// Shifts every angle by `δ·u`, `u ~ U[0, 1]` independently.
pub fn perturb_params(params: &QaoaParams, delta: f64, seed: u64) -> Result<QaoaParams> {
    if delta < 0.0 {
        return invalid("δ must be non-negative");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shift = |v: &f64| v + delta * rng.gen::<f64>();
    let gammas = params.gammas.iter().map(&mut shift).collect();
    let betas = params.betas.iter().map(&mut shift).collect();
    Ok(QaoaParams { gammas, betas })
}

/// Coordinate descent on `(γ, β)` minimizing the noiseless energy, started
/// from a linear ramp.
pub fn optimize_params(
    instance: &ProblemInstance,
    ell: usize,
    sweeps: usize,
) -> Result<QaoaParams> {
    let scale = {
        let rms = (instance.edges.iter().map(|e| e.w * e.w).sum::<f64>()
            / instance.num_edges().max(1) as f64)
            .sqrt();
        let deg = 2.0 * instance.num_edges() as f64 / instance.k as f64;
        1.0 / (rms * deg.max(1.0).sqrt())
    };
    let ramp = |i: usize| (i as f64 + 0.5) / ell as f64;
    let mut x: Vec<f64> = (0..ell)
        .map(|i| 0.7 * scale * ramp(i))
        .chain((0..ell).map(|i| 0.5 * (1.0 - ramp(i))))
        .collect();
    let energy = |x: &[f64]| -> Result<f64> {
        let p = QaoaParams::new(x[..ell].to_vec(), x[ell..].to_vec())?;
        Ok(noiseless_energy(instance, &p)?.energy)
    };
    let mut best = energy(&x)?;
    let mut step = 0.1;
    for _ in 0..sweeps {
        let mut improved = false;
        for c in 0..x.len() {
            let h = if c < ell { step * scale } else { step };
            for dir in [1.0, -1.0] {
                loop {
                    x[c] += dir * h;
                    let e = energy(&x)?;
                    if e < best - 1e-12 {
                        best = e;
                        improved = true;
                    } else {
                        x[c] -= dir * h;
                        break;
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
            if step < 1e-4 {
                break;
            }
        }
    }
    QaoaParams::new(x[..ell].to_vec(), x[ell..].to_vec())
}
