//! Goemans–Williamson MaxCut and Pauli-check sandwiching.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Gate, Op};
use crate::error::{invalid, Error, Result};
use crate::iceberg::Verdict;
use crate::montecarlo::{execute, shot_seed, summarize, RunSummary, ShotRecord, MAX_MC_K};
use crate::noise::{inject, Mode, NoiseParams};
use crate::problems::ProblemInstance;
use crate::qaoa::{build_qaoa, QaoaParams};

/// Stationarity tolerance on the Riemannian gradient.
pub const GW_TOL: f64 = 1e-8;
pub const GW_MAX_SWEEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwResult {
    pub k: usize,
    pub best_cut: f64,
    /// Best cut over `f_max`.
    pub alpha: f64,
    /// Mean rounded cut over `f_max`.
    pub mean_alpha: f64,
    /// Relaxation objective.
    pub sdp_value: f64,
    pub trials: usize,
    pub seed: u64,
    pub sweeps: usize,
    pub grad_norm: f64,
}

impl GwResult {
    /// Row in the run CSV layout.
    pub fn csv_row(&self) -> String {
        format!(
            "{},0,0,{},{},,,1,{}",
            self.k, self.trials, self.trials, self.mean_alpha
        )
    }
}

/// Rank of the factorization, `⌈√(2k)⌉`.
pub fn bm_rank(k: usize) -> usize {
    ((2.0 * k as f64).sqrt().ceil() as usize).max(1)
}

fn neighbours(instance: &ProblemInstance) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); instance.k];
    for e in &instance.edges {
        adj[e.i].push((e.j, e.w));
        adj[e.j].push((e.i, e.w));
    }
    adj
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Unit vectors maximizing `Σ w (1 − v_i·v_j)/2`. Returns the vectors, the
/// number of sweeps and the final gradient norm.
pub fn solve_relaxation(
    instance: &ProblemInstance,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, usize, f64)> {
    let k = instance.k;
    let r = bm_rank(k);
    let adj = neighbours(instance);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|_| {
            let mut x: Vec<f64> = (0..r).map(|_| StandardNormal.sample(&mut rng)).collect();
            normalize(&mut x);
            x
        })
        .collect();
    let grad = |v: &[Vec<f64>], i: usize| {
        let mut g = vec![0.0; r];
        for &(j, w) in &adj[i] {
            for (gd, vd) in g.iter_mut().zip(&v[j]) {
                *gd += w * vd;
            }
        }
        g
    };
    let grad_norm = |v: &[Vec<f64>]| {
        (0..k)
            .map(|i| {
                let g = grad(v, i);
                let c = dot(&g, &v[i]);
                g.iter()
                    .zip(&v[i])
                    .map(|(a, b)| (a - c * b).powi(2))
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    };
    for sweep in 0..GW_MAX_SWEEPS {
        // Exact projected step per vertex: move v_i to the minimizer of v_i·g_i.
        for i in 0..k {
            let mut g = grad(&v, i);
            if dot(&g, &g) == 0.0 {
                continue;
            }
            g.iter_mut().for_each(|x| *x = -*x);
            normalize(&mut g);
            v[i] = g;
        }
        let gn = grad_norm(&v);
        if gn < GW_TOL {
            return Ok((v, sweep + 1, gn));
        }
    }
    let gn = grad_norm(&v);
    Err(Error::Fit(format!(
        "relaxation did not reach stationarity: gradient norm {gn:.3e}"
    )))
}

pub fn relaxation_value(instance: &ProblemInstance, v: &[Vec<f64>]) -> f64 {
    instance
        .edges
        .iter()
        .map(|e| e.w * (1.0 - dot(&v[e.i], &v[e.j])) / 2.0)
        .sum()
}

pub fn goemans_williamson(
    instance: &ProblemInstance,
    rounding_trials: usize,
    seed: u64,
) -> Result<GwResult> {
    if !instance.family.is_maxcut() {
        return invalid("Goemans–Williamson needs a MaxCut instance");
    }
    if rounding_trials == 0 {
        return invalid("rounding_trials must be ≥ 1");
    }
    let f_max = instance.f_max()?;
    if f_max <= 0.0 {
        return Err(Error::Undefined("f_max = 0".into()));
    }
    let (v, sweeps, grad_norm) = solve_relaxation(instance, seed)?;
    let r = v[0].len();
    let cuts: Vec<f64> = (0..rounding_trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(shot_seed(seed.wrapping_add(1), t));
            let h: Vec<f64> = (0..r).map(|_| StandardNormal.sample(&mut rng)).collect();
            let bits = v
                .iter()
                .enumerate()
                .fold(0u64, |a, (i, vi)| a | (((dot(vi, &h) < 0.0) as u64) << i));
            instance.objective_bits(bits)
        })
        .collect();
    let best_cut = cuts.iter().cloned().fold(f64::MIN, f64::max);
    let mean = cuts.iter().sum::<f64>() / cuts.len() as f64;
    Ok(GwResult {
        k: instance.k,
        best_cut,
        alpha: best_cut / f_max,
        mean_alpha: mean / f_max,
        sdp_value: relaxation_value(instance, &v),
        trials: rounding_trials,
        seed,
        sweeps,
        grad_norm,
    })
}

/// Cost-layer indices of a QAOA circuit ordered middle-first.
pub fn middle_first(layers: usize) -> Vec<usize> {
    let mid = (layers as f64 - 1.0) / 2.0;
    let mut v: Vec<usize> = (0..layers).collect();
    v.sort_by(|a, b| {
        (*a as f64 - mid)
            .abs()
            .total_cmp(&(*b as f64 - mid).abs())
            .then(a.cmp(b))
    });
    v
}

/// Gate ranges `[start, end)` of the consecutive `RZZ` runs.
fn cost_layers(logical: &Circuit) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, g) in logical.gates.iter().enumerate() {
        match (matches!(g.op, Op::Rzz(..)), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, logical.gates.len()));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcsCircuit {
    pub circuit: Circuit,
    pub k: usize,
    /// Sandwiched cost layers, in check order.
    pub layers: Vec<usize>,
    /// Classical bits of the two check ancillas per sandwiched layer.
    pub check_bits: Vec<[usize; 2]>,
}

fn controlled_x_string(a: usize, k: usize, out: &mut Vec<Gate>) {
    for q in 0..k {
        out.push(Gate::new(Op::Cnot(a, q)));
    }
}

fn controlled_z_string(a: usize, k: usize, out: &mut Vec<Gate>) {
    for q in 0..k {
        out.push(Gate::new(Op::H(q)));
        out.push(Gate::new(Op::Cnot(a, q)));
        out.push(Gate::new(Op::H(q)));
    }
}

/// Sandwiches `s_checks` cost layers between controlled `X^k` and `Z^k`
/// checks. Data bits occupy classical bits `0..k`; check bits follow.
pub fn build_pcs(
    logical: &Circuit,
    k: usize,
    s_checks: usize,
    which_layers: Option<&[usize]>,
) -> Result<PcsCircuit> {
    if logical.width != k {
        return invalid("logical circuit width differs from k");
    }
    let ranges = cost_layers(logical);
    if s_checks > ranges.len() {
        return invalid(format!(
            "{s_checks} checks exceed {} cost layers",
            ranges.len()
        ));
    }
    let layers: Vec<usize> = match which_layers {
        Some(w) => {
            if w.len() != s_checks || w.iter().any(|&l| l >= ranges.len()) {
                return invalid("layer list does not match s_checks");
            }
            let mut d = w.to_vec();
            d.sort_unstable();
            d.dedup();
            if d.len() != w.len() {
                return invalid("duplicate layer in list");
            }
            w.to_vec()
        }
        None => middle_first(ranges.len())
            .into_iter()
            .take(s_checks)
            .collect(),
    };
    let mut circuit = Circuit::new(k + 2 * s_checks);
    let mut check_bits = vec![[0, 0]; s_checks];
    let slot = |layer: usize| layers.iter().position(|&l| l == layer);
    let mut next_layer = 0;
    for (i, g) in logical.gates.iter().enumerate() {
        let at_start = ranges.get(next_layer).map_or(false, |r| r.0 == i);
        if at_start {
            if let Some(j) = slot(next_layer) {
                let (ax, az) = (k + 2 * j, k + 2 * j + 1);
                let mut pre = Vec::new();
                pre.push(Gate::new(Op::H(ax)));
                controlled_x_string(ax, k, &mut pre);
                pre.push(Gate::new(Op::H(az)));
                controlled_z_string(az, k, &mut pre);
                pre.into_iter().for_each(|g| circuit.push(g));
            }
        }
        circuit.push(*g);
        let at_end = ranges.get(next_layer).map_or(false, |r| r.1 == i + 1);
        if at_end {
            if let Some(j) = slot(next_layer) {
                let (ax, az) = (k + 2 * j, k + 2 * j + 1);
                let mut post = Vec::new();
                controlled_z_string(az, k, &mut post);
                post.push(Gate::new(Op::H(az)));
                controlled_x_string(ax, k, &mut post);
                post.push(Gate::new(Op::H(ax)));
                post.push(Gate::new(Op::MeasureZ(ax, k + 2 * j)));
                post.push(Gate::new(Op::MeasureZ(az, k + 2 * j + 1)));
                post.into_iter().for_each(|g| circuit.push(g));
                check_bits[j] = [k + 2 * j, k + 2 * j + 1];
            }
            next_layer += 1;
        }
    }
    for q in 0..k {
        circuit.push(Op::MeasureZ(q, q));
    }
    Ok(PcsCircuit {
        circuit,
        k,
        layers,
        check_bits,
    })
}

pub fn pcs_decode(bits: &[bool], pcs: &PcsCircuit) -> (Verdict, Option<u64>) {
    for (j, cb) in pcs.check_bits.iter().enumerate() {
        if bits[cb[0]] || bits[cb[1]] {
            return (Verdict::Reject(j), None);
        }
    }
    let logical = (0..pcs.k).fold(0u64, |a, q| a | ((bits[q] as u64) << q));
    (Verdict::Accept, Some(logical))
}

pub fn pcs_shots(
    pcs: &PcsCircuit,
    noise: &NoiseParams,
    shots: usize,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    let mut stop = vec![None; pcs.circuit.n_cbits];
    for (j, cb) in pcs.check_bits.iter().enumerate() {
        stop[cb[0]] = Some(j);
        stop[cb[1]] = Some(j);
    }
    (0..shots as u64)
        .into_par_iter()
        .map(|shot| {
            let sd = shot_seed(seed, shot);
            let mut rng = ChaCha8Rng::seed_from_u64(sd);
            let noisy = inject(&pcs.circuit, noise, Mode::Unencoded, &mut rng)?;
            let ex = execute(&noisy, &stop, &mut rng)?;
            let (verdict, logical) = pcs_decode(&ex.bits, pcs);
            Ok(ShotRecord {
                shot,
                seed: sd,
                verdict,
                logical,
                raw: ex.bits,
            })
        })
        .collect()
}

/// Noisy PCS run; every two-qubit gate, checks included, carries `p_l`.
pub fn run_pcs(
    instance: &ProblemInstance,
    params: &QaoaParams,
    noise: &NoiseParams,
    s_checks: usize,
    shots: usize,
    seed: u64,
) -> Result<RunSummary> {
    if shots == 0 {
        return invalid("shots must be ≥ 1");
    }
    if instance.k > MAX_MC_K {
        return Err(Error::Guard(format!(
            "k = {} exceeds the Monte-Carlo cap {MAX_MC_K}",
            instance.k
        )));
    }
    let pcs = build_pcs(&build_qaoa(instance, params)?, instance.k, s_checks, None)?;
    let records = pcs_shots(&pcs, noise, shots, seed)?;
    summarize(
        instance,
        params,
        s_checks,
        &records,
        s_checks,
        pcs.circuit.count_two_qubit(),
        seed,
    )
}
