//! Model sweeps, breakeven scans and Monte-Carlo studies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{invalid, Error, Result};
use crate::iceberg::{place_syndromes, BlockSpan, EncodedCircuit};
use crate::montecarlo::{
    run_iceberg, run_iceberg_with, run_unencoded, IcebergOptions, RunSummary, MAX_MC_K,
};
use crate::noise::NoiseParams;
use crate::perfmodel::{predict, CircuitShape};
use crate::problems::ProblemInstance;
use crate::qaoa::{approximation_ratio, noiseless_energy, perturb_params, QaoaParams};

pub const SWEEP_CSV_HEADER: &str = "k,ell,s,scale,f_ice,f_une,post_rate";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub ks: Vec<usize>,
    pub ells: Vec<usize>,
    pub ss: Vec<usize>,
    pub scales: Vec<f64>,
    pub degree: usize,
    pub shots: usize,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            ks: (6..=48).step_by(2).collect(),
            ells: (1..=16).collect(),
            ss: vec![6],
            scales: vec![1.0],
            degree: 3,
            shots: 1000,
            seed: 0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty()
            || self.ells.is_empty()
            || self.ss.is_empty()
            || self.scales.is_empty()
        {
            return invalid("sweep ranges must be non-empty");
        }
        if self.scales.iter().any(|&f| !(f > 0.0)) {
            return invalid("scale factors must be > 0");
        }
        if self
            .ks
            .iter()
            .any(|&k| k % 2 == 1 || k * self.degree % 2 == 1)
        {
            return invalid("k must be even");
        }
        Ok(())
    }

    /// Overrides defaults with keys `ks`, `ells`, `ss`, `scales`, `degree`,
    /// `shots`, `seed`.
    pub fn from_config(cfg: &Config) -> Result<Self> {
        let mut s = SweepSpec::default();
        if let Some(v) = cfg.get_usize_list("ks") {
            s.ks = v?;
        }
        if let Some(v) = cfg.get_usize_list("ells") {
            s.ells = v?;
        }
        if let Some(v) = cfg.get_usize_list("ss") {
            s.ss = v?;
        }
        if let Some(v) = cfg.get_f64_list("scales") {
            s.scales = v?;
        }
        if let Some(v) = cfg.get_usize("degree") {
            s.degree = v?;
        }
        if let Some(v) = cfg.get_usize("shots") {
            s.shots = v?;
        }
        if let Some(v) = cfg.get_usize("seed") {
            s.seed = v? as u64;
        }
        s.validate()?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub k: usize,
    pub ell: usize,
    pub s: usize,
    pub scale: f64,
    pub f_ice: f64,
    pub f_une: f64,
    pub post_rate: f64,
}

impl FrontierPoint {
    pub fn gain(&self) -> f64 {
        self.f_ice - self.f_une
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.k, self.ell, self.s, self.scale, self.f_ice, self.f_une, self.post_rate
        )
    }
}

/// Model grid over the sweep ranges. `s` larger than the gate count of a point is
/// skipped.
pub fn frontier_sweep(spec: &SweepSpec, noise: &NoiseParams) -> Result<Vec<FrontierPoint>> {
    spec.validate()?;
    let mut grid = Vec::new();
    for &scale in &spec.scales {
        for &s in &spec.ss {
            for &ell in &spec.ells {
                for &k in &spec.ks {
                    grid.push((k, ell, s, scale));
                }
            }
        }
    }
    let pts: Vec<Option<FrontierPoint>> = grid
        .par_iter()
        .map(|&(k, ell, s, scale)| {
            let shape = CircuitShape::regular(k, spec.degree, ell, s).ok()?;
            let p = predict(&shape, &noise.scaled(scale)).ok()?;
            Some(FrontierPoint {
                k,
                ell,
                s,
                scale,
                f_ice: p.f_ice.unwrap_or(0.0),
                f_une: p.f_une,
                post_rate: p.post_rate,
            })
        })
        .collect();
    Ok(pts.into_iter().flatten().collect())
}

/// One contour crossing between neighbouring `k` values at fixed `ℓ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub ell: usize,
    pub s: usize,
    pub scale: f64,
    pub k_lo: usize,
    pub k_hi: usize,
}

fn crossings(points: &[FrontierPoint], value: impl Fn(&FrontierPoint) -> f64) -> Vec<ContourPoint> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| {
        (a.scale.total_cmp(&b.scale))
            .then(a.s.cmp(&b.s))
            .then(a.ell.cmp(&b.ell))
            .then(a.k.cmp(&b.k))
    });
    sorted
        .windows(2)
        .filter(|w| w[0].ell == w[1].ell && w[0].s == w[1].s && w[0].scale == w[1].scale)
        .filter(|w| (value(&w[0]) >= 0.0) != (value(&w[1]) >= 0.0))
        .map(|w| ContourPoint {
            ell: w[0].ell,
            s: w[0].s,
            scale: w[0].scale,
            k_lo: w[0].k,
            k_hi: w[1].k,
        })
        .collect()
}

/// Sign changes of `F_ice − F_une` along `k`.
pub fn breakeven_contour(points: &[FrontierPoint]) -> Vec<ContourPoint> {
    crossings(points, FrontierPoint::gain)
}

/// Sign changes of `post_rate − level` along `k`.
pub fn post_rate_contour(points: &[FrontierPoint], level: f64) -> Vec<ContourPoint> {
    crossings(points, |p| p.post_rate - level)
}

/// Largest `k` such that every grid point with `k' ≤ k` at this `ℓ` has a
/// non-negative gain.
pub fn breakeven_k(points: &[FrontierPoint], ell: usize, s: usize, scale: f64) -> Option<usize> {
    let mut row: Vec<&FrontierPoint> = points
        .iter()
        .filter(|p| p.ell == ell && p.s == s && p.scale == scale)
        .collect();
    row.sort_by_key(|p| p.k);
    let mut best = None;
    for p in row {
        if p.gain() < 0.0 {
            break;
        }
        best = Some(p.k);
    }
    best
}

pub fn sweep_csv(points: &[FrontierPoint]) -> String {
    let mut s = format!("{SWEEP_CSV_HEADER}\n");
    for p in points {
        s.push_str(&p.csv_row());
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakevenTarget {
    /// Required logical fidelity.
    Fidelity(f64),
    /// Required noisy approximation ratio `α(F) = F α₀ + (1 − F) α_rand`.
    Ratio {
        alpha_target: f64,
        alpha_noiseless: f64,
        alpha_random: f64,
    },
}

impl BreakevenTarget {
    /// Target written as `GW / noiseless`.
    pub fn from_ratio(gw: f64, noiseless: f64) -> Result<Self> {
        if noiseless <= 0.0 {
            return invalid("noiseless ratio must be positive");
        }
        Ok(BreakevenTarget::Fidelity(gw / noiseless))
    }

    pub fn fidelity(&self) -> Result<f64> {
        match *self {
            BreakevenTarget::Fidelity(f) => Ok(f),
            BreakevenTarget::Ratio {
                alpha_target,
                alpha_noiseless,
                alpha_random,
            } => {
                if alpha_noiseless <= alpha_random {
                    return invalid("noiseless ratio does not exceed the random-guess ratio");
                }
                Ok((alpha_target - alpha_random) / (alpha_noiseless - alpha_random))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakevenResult {
    pub k: usize,
    pub ell: usize,
    pub s: usize,
    pub target_fidelity: f64,
    pub iceberg_scale: Option<f64>,
    pub unencoded_scale: Option<f64>,
}

/// Largest scale in `(0, max_scale]` with `fid(scale) ≥ target`, assuming
/// `fid` decreases with the scale. `None` when even `min_scale` misses.
pub fn required_scale(
    fid: impl Fn(f64) -> Result<f64>,
    target: f64,
    min_scale: f64,
    max_scale: f64,
) -> Result<Option<f64>> {
    if fid(min_scale)? < target {
        return Ok(None);
    }
    if fid(max_scale)? >= target {
        return Ok(Some(max_scale));
    }
    let (mut lo, mut hi) = (min_scale, max_scale);
    while hi - lo > 1e-9 * max_scale {
        let mid = 0.5 * (lo + hi);
        if fid(mid)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

pub fn gw_breakeven_scan(
    k: usize,
    ell: usize,
    s: usize,
    noise: &NoiseParams,
    target: BreakevenTarget,
    max_scale: f64,
) -> Result<BreakevenResult> {
    let t = target.fidelity()?;
    if !(max_scale > 0.0) {
        return invalid("max_scale must be > 0");
    }
    let shape = CircuitShape::regular(k, 3, ell, s)?;
    let min_scale = 1e-9 * max_scale;
    let ice = required_scale(
        |f| Ok(predict(&shape, &noise.scaled(f))?.f_ice.unwrap_or(0.0)),
        t,
        min_scale,
        max_scale,
    )?;
    let une = required_scale(
        |f| Ok(predict(&shape, &noise.scaled(f))?.f_une),
        t,
        min_scale,
        max_scale,
    )?;
    if ice.is_none() && une.is_none() {
        return Err(Error::Undefined(format!(
            "target fidelity {t} unreachable for any positive scale"
        )));
    }
    Ok(BreakevenResult {
        k,
        ell,
        s,
        target_fidelity: t,
        iceberg_scale: ice,
        unencoded_scale: une,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementPoint {
    /// 1-based position label; 0 is the run without an intermediate syndrome.
    pub position: usize,
    pub offset: Option<usize>,
    pub fidelity: Option<f64>,
    pub stderr: Option<f64>,
    pub post_rate: f64,
}

/// Offsets of `count` evenly spaced single-syndrome positions.
pub fn placement_offsets(total_gates: usize, count: usize) -> Vec<usize> {
    (1..=count)
        .map(|i| (i * total_gates + (count + 1) / 2) / (count + 1))
        .collect()
}

fn placement_point(position: usize, offset: Option<usize>, r: &RunSummary) -> PlacementPoint {
    PlacementPoint {
        position,
        offset,
        fidelity: r.fidelity.as_ref().map(|f| f.f_c),
        stderr: r.fidelity.as_ref().map(|f| f.stderr),
        post_rate: r.acceptance,
    }
}

/// Single intermediate syndrome at each listed position (1-based, out of
/// `count`), plus the final-only reference at position 0.
pub fn syndrome_placement_sweep(
    instance: &ProblemInstance,
    params: &QaoaParams,
    noise: &NoiseParams,
    positions: &[usize],
    count: usize,
    shots: usize,
    seed: u64,
) -> Result<Vec<PlacementPoint>> {
    if positions.iter().any(|&p| p == 0 || p > count) {
        return invalid("positions must lie in 1..=count");
    }
    let total = params.layers() * (instance.num_edges() + instance.k);
    let offsets = placement_offsets(total, count);
    let mut out = vec![placement_point(
        0,
        None,
        &run_iceberg(instance, params, noise, 1, shots, seed)?,
    )];
    for &p in positions {
        let off = offsets[p - 1];
        let opts = IcebergOptions {
            s: 2,
            offsets: Some(vec![off]),
            dd: true,
        };
        out.push(placement_point(
            p,
            Some(off),
            &run_iceberg_with(instance, params, noise, &opts, shots, seed)?,
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeEstimate {
    pub lambda: f64,
    pub t_ice: f64,
    pub t_ps: f64,
}

/// `λ = Σ d_i t_i / t_ps` with `t_ps` the time of the last gadget.
pub fn runtime_estimate(times: &[f64], discards: &[f64]) -> Result<RuntimeEstimate> {
    if times.is_empty() || times.len() != discards.len() {
        return invalid("times and discard fractions must be non-empty and equally long");
    }
    if discards.iter().any(|&d| !(0.0..=1.0).contains(&d))
        || (discards.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return invalid("discard fractions must lie in [0, 1] and sum to 1");
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times[0] < 0.0 {
        return invalid("gadget times must be non-negative and non-decreasing");
    }
    let t_ps = *times.last().unwrap();
    if t_ps <= 0.0 {
        return invalid("t_ps must be positive");
    }
    let lambda = times.iter().zip(discards).map(|(t, d)| t * d).sum::<f64>() / t_ps;
    Ok(RuntimeEstimate {
        lambda,
        t_ice: lambda * t_ps,
        t_ps,
    })
}

/// Cumulative two-qubit gate count up to the end of every gadget, as a time
/// proxy.
pub fn gadget_times(encoded: &EncodedCircuit) -> Vec<f64> {
    let gates = &encoded.circuit.gates;
    let gadgets: Vec<&BlockSpan> = encoded
        .blocks
        .iter()
        .filter(|b| b.kind != crate::circuits::BlockKind::Logical)
        .collect();
    gadgets
        .iter()
        .map(|b| {
            gates[..b.end]
                .iter()
                .filter(|g| g.op.is_two_qubit())
                .count() as f64
        })
        .collect()
}

/// Per-shot end-of-run fractions: rejected shots end at their gadget,
/// accepted shots at the final one.
pub fn end_fractions(summary: &RunSummary) -> Vec<f64> {
    let mut d = summary.discard_fractions.clone();
    if let Some(last) = d.last_mut() {
        *last += summary.acceptance;
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub ell: usize,
    pub alpha_ice: Option<f64>,
    pub se_ice: f64,
    pub post_rate: f64,
    pub alpha_une: Option<f64>,
    pub se_une: f64,
    pub alpha_noiseless: f64,
}

impl ComparisonRow {
    /// Difference `α_ice − α_une` in units of its standard error.
    pub fn z_score(&self) -> Option<f64> {
        let d = self.alpha_ice? - self.alpha_une?;
        let se = (self.se_ice.powi(2) + self.se_une.powi(2)).sqrt();
        Some(if se > 0.0 {
            d / se
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        })
    }
}

fn alpha_se(instance: &ProblemInstance, r: &RunSummary) -> Result<f64> {
    Ok(r.stats.energy_stderr / instance.f_max()?.abs())
}

/// Encoded against unencoded approximation ratio per layer count, with the
/// parameters supplied by `params_for`.
pub fn sk_comparison(
    instance: &ProblemInstance,
    ells: &[usize],
    s: usize,
    noise: &NoiseParams,
    shots: usize,
    seed: u64,
    params_for: impl Fn(usize) -> Result<QaoaParams>,
) -> Result<Vec<ComparisonRow>> {
    let mut rows = Vec::new();
    for &ell in ells {
        let params = params_for(ell)?;
        let ice = run_iceberg(instance, &params, noise, s, shots, seed)?;
        let une = run_unencoded(instance, &params, noise, shots, seed)?;
        rows.push(ComparisonRow {
            ell,
            alpha_ice: ice.alpha,
            se_ice: alpha_se(instance, &ice)?,
            post_rate: ice.acceptance,
            alpha_une: une.alpha,
            se_une: alpha_se(instance, &une)?,
            alpha_noiseless: approximation_ratio(instance, ice.noiseless.energy)?,
        });
    }
    Ok(rows)
}

/// Noiseless approximation ratio after shifting every angle by `δ·U[0, 1]`.
pub fn perturbation_study(
    instance: &ProblemInstance,
    params: &QaoaParams,
    deltas: &[f64],
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    deltas
        .iter()
        .map(|&d| {
            let p = perturb_params(params, d, seed)?;
            Ok((
                d,
                approximation_ratio(instance, noiseless_energy(instance, &p)?.energy)?,
            ))
        })
        .collect()
}

/// Monte-Carlo size actually used for a requested `k`, and whether it was
/// reduced.
pub fn mc_scale(k: usize) -> (usize, bool) {
    if k > MAX_MC_K {
        (MAX_MC_K, true)
    } else {
        (k, false)
    }
}

/// Balanced syndrome offsets for a logical gate count, re-exported for the CLI.
pub fn balanced_offsets(total: usize, s: usize) -> Result<Vec<usize>> {
    place_syndromes(total, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runtime_examples() {
        assert_eq!(
            runtime_estimate(&[0.2, 0.6, 1.0], &[0.0, 0.0, 1.0])
                .unwrap()
                .lambda,
            1.0
        );
        assert!((runtime_estimate(&[0.5, 1.0], &[0.5, 0.5]).unwrap().lambda - 0.75).abs() < 1e-12);
        assert!(
            (runtime_estimate(&[0.384, 1.0], &[0.5, 0.5]).unwrap().lambda - 0.692).abs() < 1e-12
        );
        assert!(runtime_estimate(&[0.5, 1.0], &[0.5, 0.6]).is_err());
        assert!(runtime_estimate(&[1.0, 0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn zero_noise_frontier() {
        let spec = SweepSpec {
            ks: vec![6, 8],
            ells: vec![1, 2],
            ..Default::default()
        };
        for p in frontier_sweep(&spec, &NoiseParams::central_fit().scaled(1e-12)).unwrap() {
            assert!(p.gain() >= 0.0 && p.gain() < 1e-6);
            assert!(p.post_rate > 1.0 - 1e-6);
        }
    }

    #[test]
    fn unreachable_target() {
        assert!(gw_breakeven_scan(
            16,
            10,
            4,
            &NoiseParams::central_fit(),
            BreakevenTarget::Fidelity(1.0),
            1.0
        )
        .is_err());
    }

    #[test]
    fn contour_sign_change() {
        let mk = |k, g: f64| FrontierPoint {
            k,
            ell: 1,
            s: 1,
            scale: 1.0,
            f_ice: 0.5 + g,
            f_une: 0.5,
            post_rate: 1.0,
        };
        let pts = [mk(6, 0.1), mk(8, 0.05), mk(10, -0.02)];
        assert_eq!(
            breakeven_contour(&pts),
            [ContourPoint {
                ell: 1,
                s: 1,
                scale: 1.0,
                k_lo: 8,
                k_hi: 10
            }]
        );
        assert_eq!(breakeven_k(&pts, 1, 1, 1.0), Some(8));
    }
}
