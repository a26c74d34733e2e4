//! Least-squares fits of the model error rates with bootstrap intervals.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::brent::BrentOpt;
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::montecarlo::RunSummary;
use crate::noise::{Mode, NoiseParams};
use crate::perfmodel::{error_counts, predict, CircuitShape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitRecord {
    pub role: Mode,
    pub shape: CircuitShape,
    pub ell: usize,
    /// Per-edge fidelity ratios.
    pub edge_ratios: Vec<f64>,
    pub f_c: f64,
    pub stderr: f64,
    /// Observed discard fraction (0 for unencoded circuits).
    pub d_c: f64,
    pub two_qubit_gates: usize,
    pub shots: usize,
}

impl CircuitRecord {
    /// Builds a record from a Monte-Carlo summary. Edges without a defined
    /// ratio are dropped.
    pub fn from_summary(summary: &RunSummary, shape: CircuitShape) -> Result<Self> {
        let fid = summary
            .fidelity
            .as_ref()
            .ok_or_else(|| Error::Undefined("run has no fidelity estimate".into()))?;
        Ok(CircuitRecord {
            role: if summary.s == 0 {
                Mode::Unencoded
            } else {
                Mode::Iceberg
            },
            shape,
            ell: summary.ell,
            edge_ratios: fid.edge_ratios.iter().flatten().copied().collect(),
            f_c: fid.f_c,
            stderr: fid.stderr,
            d_c: 1.0 - summary.acceptance,
            two_qubit_gates: summary.two_qubit_gates,
            shots: summary.shots,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub records: Vec<CircuitRecord>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterThresholds {
    pub min_two_qubit_gates: usize,
    pub max_rel_stderr: f64,
    pub edge_min: f64,
    pub edge_max: f64,
}

impl FilterThresholds {
    pub fn for_role(role: Mode) -> Self {
        match role {
            Mode::Unencoded => FilterThresholds {
                min_two_qubit_gates: 200,
                max_rel_stderr: 0.01,
                edge_min: 0.5,
                edge_max: 1.0,
            },
            Mode::Iceberg => FilterThresholds {
                min_two_qubit_gates: 150,
                max_rel_stderr: 0.012,
                edge_min: 0.5,
                edge_max: 1.0,
            },
        }
    }
}

pub fn filter_dataset(raw: &Dataset, role: Mode) -> Result<Dataset> {
    filter_with(raw, role, &FilterThresholds::for_role(role))
}

pub fn filter_with(raw: &Dataset, role: Mode, t: &FilterThresholds) -> Result<Dataset> {
    let records: Vec<CircuitRecord> = raw
        .records
        .iter()
        .filter(|r| r.role == role)
        .filter(|r| r.two_qubit_gates >= t.min_two_qubit_gates)
        .filter(|r| r.f_c != 0.0 && (r.stderr / r.f_c).abs() <= t.max_rel_stderr)
        .map(|r| {
            let mut r = r.clone();
            r.edge_ratios
                .retain(|&x| x >= t.edge_min && x <= t.edge_max);
            r
        })
        .filter(|r| !r.edge_ratios.is_empty())
        .collect();
    if records.is_empty() {
        return Err(Error::Fit("no records survive filtering".into()));
    }
    Ok(Dataset { records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub iterations: usize,
    pub failures: usize,
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub estimate: Vec<f64>,
    pub loss: f64,
    pub iterations: u64,
    pub bootstrap: Option<BootstrapSummary>,
}

impl FitResult {
    /// Rows `name,model,ci_low,ci_high`.
    pub fn table(&self) -> String {
        let mut s = String::from("parameter,model,ci_low,ci_high\n");
        for (i, name) in self.names.iter().enumerate() {
            let (lo, hi) = self
                .bootstrap
                .as_ref()
                .map_or((f64::NAN, f64::NAN), |b| (b.lower[i], b.upper[i]));
            s.push_str(&format!(
                "{name},{:.3e},{:.3e},{:.3e}\n",
                self.estimate[i], lo, hi
            ));
        }
        s
    }
}

/// `Σ_c Σ_edges (F_ij − P0(p_ℓ, g2))²`.
pub fn unencoded_loss(data: &Dataset, p_l: f64) -> f64 {
    data.records
        .iter()
        .map(|r| {
            let f = error_counts(p_l.clamp(0.0, 1.0), r.shape.g2)
                .map(|c| c.p0)
                .unwrap_or(0.0);
            r.edge_ratios.iter().map(|x| (x - f).powi(2)).sum::<f64>()
        })
        .sum()
}

/// `Σ_c [ (1/|F_c|) Σ_edges (F_ij − F_ice)² + (D_c − D)² ]`.
pub fn iceberg_loss(data: &Dataset, noise: &NoiseParams) -> f64 {
    data.records
        .iter()
        .map(|r| match predict(&r.shape, noise) {
            Ok(p) => {
                let f = p.f_ice.unwrap_or(0.0);
                let m = r.edge_ratios.len().max(1) as f64;
                r.edge_ratios.iter().map(|x| (x - f).powi(2)).sum::<f64>() / m
                    + (r.d_c - p.probs.d).powi(2)
            }
            Err(_) => f64::INFINITY,
        })
        .sum()
}

struct Unencoded<'a>(&'a Dataset);

impl CostFunction for Unencoded<'_> {
    type Param = f64;
    type Output = f64;
    fn cost(&self, p: &f64) -> std::result::Result<f64, argmin::core::Error> {
        Ok(unencoded_loss(self.0, *p))
    }
}

pub fn fit_unencoded(data: &Dataset) -> Result<FitResult> {
    if data.is_empty() {
        return Err(Error::Fit("empty dataset".into()));
    }
    // Coarse log-spaced scan, then Brent refinement inside the best bracket.
    let mut grid = vec![0.0];
    grid.extend((0..=180).map(|i| 10f64.powf(-9.0 + i as f64 / 20.0)));
    let losses: Vec<f64> = grid.iter().map(|&p| unencoded_loss(data, p)).collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| losses[a].total_cmp(&losses[b]))
        .unwrap_or(0);
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (mut est, mut loss, mut iters) = (grid[best], losses[best], 0);
    if hi > lo {
        let solver = BrentOpt::new(lo, hi).set_tolerance(1e-14, 1e-16);
        let res = Executor::new(Unencoded(data), solver)
            .configure(|s| s.max_iters(500))
            .run()
            .map_err(|e| Error::Fit(e.to_string()))?;
        let st = res.state();
        if st.get_best_cost() <= loss {
            est = *st.get_best_param().unwrap_or(&est);
            loss = st.get_best_cost();
        }
        iters = st.get_iter();
    }
    Ok(FitResult {
        names: vec!["p_l".into()],
        estimate: vec![est],
        loss,
        iterations: iters,
        bootstrap: None,
    })
}

fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

struct Iceberg<'a>(&'a Dataset);

impl Iceberg<'_> {
    fn noise(u: &[f64]) -> NoiseParams {
        NoiseParams::iceberg(sigmoid(u[0]), sigmoid(u[1]), sigmoid(u[2]))
    }
}

impl CostFunction for Iceberg<'_> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, u: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(iceberg_loss(self.0, &Iceberg::noise(u)))
    }
}

fn nelder_mead(data: &Dataset, start: &[f64], step: f64) -> Result<(Vec<f64>, f64, u64)> {
    let mut simplex = vec![start.to_vec()];
    for i in 0..start.len() {
        let mut v = start.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-16)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let res = Executor::new(Iceberg(data), solver)
        .configure(|s| s.max_iters(3000))
        .run()
        .map_err(|e| Error::Fit(e.to_string()))?;
    let st = res.state();
    let best = st
        .get_best_param()
        .cloned()
        .unwrap_or_else(|| start.to_vec());
    Ok((best, st.get_best_cost(), st.get_iter()))
}

/// Starting points for the multi-start search, as rates `(p_cx, p_c, p_a)`.
pub fn iceberg_starts() -> Vec<[f64; 3]> {
    let mut v = Vec::new();
    for &pcx in &[3e-4, 5e-3] {
        for &pc in &[1e-5, 1e-3] {
            for &pa in &[3e-4, 5e-3] {
                v.push([pcx, pc, pa]);
            }
        }
    }
    v.push([1e-3, 1e-4, 1e-3]);
    v
}

pub fn fit_iceberg(data: &Dataset) -> Result<FitResult> {
    if data.len() < 3 {
        return Err(Error::Fit(format!(
            "need ≥ 3 records for 3 parameters, got {}",
            data.len()
        )));
    }
    if data.records.iter().all(|r| r.d_c >= 1.0) {
        return Err(Error::Fit("no accepted samples in any record".into()));
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut iterations = 0;
    for s in iceberg_starts() {
        let u0: Vec<f64> = s.iter().map(|&p| logit(p)).collect();
        let (mut u, mut loss, it) = nelder_mead(data, &u0, 1.0)?;
        iterations += it;
        // Restart from the optimum with a fresh simplex to escape collapse.
        for step in [0.3, 0.05] {
            let (u2, l2, it2) = nelder_mead(data, &u, step)?;
            iterations += it2;
            if l2 <= loss {
                u = u2;
                loss = l2;
            }
        }
        if best.as_ref().map_or(true, |b| loss < b.1) {
            best = Some((u, loss));
        }
    }
    let (u, loss) = best.ok_or_else(|| Error::Fit("no start converged".into()))?;
    if !loss.is_finite() {
        return Err(Error::Fit("loss is not finite at the optimum".into()));
    }
    Ok(FitResult {
        names: vec!["p_cx".into(), "p_c".into(), "p_a".into()],
        estimate: u.iter().map(|&x| sigmoid(x)).collect(),
        loss,
        iterations,
        bootstrap: None,
    })
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Resamples whole circuits with replacement and refits; 95% percentile
/// intervals per parameter.
pub fn bootstrap<F>(
    data: &Dataset,
    fitter: F,
    iterations: usize,
    seed: u64,
) -> Result<BootstrapSummary>
where
    F: Fn(&Dataset) -> Result<FitResult> + Sync,
{
    if iterations < 100 {
        return invalid("bootstrap needs at least 100 iterations");
    }
    if data.is_empty() {
        return Err(Error::Fit("empty dataset".into()));
    }
    let fits: Vec<Option<Vec<f64>>> = (0..iterations as u64)
        .into_par_iter()
        .map(|it| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ it);
            let records = (0..data.len())
                .map(|_| data.records[rng.gen_range(0..data.len())].clone())
                .collect();
            fitter(&Dataset { records }).ok().map(|f| f.estimate)
        })
        .collect();
    let ok: Vec<Vec<f64>> = fits.iter().flatten().cloned().collect();
    if ok.is_empty() {
        return Err(Error::Fit("every bootstrap refit failed".into()));
    }
    let dims = ok[0].len();
    let mut mean = Vec::with_capacity(dims);
    let mut lower = Vec::with_capacity(dims);
    let mut upper = Vec::with_capacity(dims);
    for d in 0..dims {
        let mut col: Vec<f64> = ok.iter().map(|v| v[d]).collect();
        col.sort_by(f64::total_cmp);
        mean.push(col.iter().sum::<f64>() / col.len() as f64);
        lower.push(percentile(&col, 0.025));
        upper.push(percentile(&col, 0.975));
    }
    Ok(BootstrapSummary {
        iterations,
        failures: iterations - ok.len(),
        mean,
        lower,
        upper,
    })
}

/// Synthetic records whose ratios equal the model prediction exactly.
pub fn synthetic_record(
    shape: CircuitShape,
    noise: &NoiseParams,
    role: Mode,
    edges: usize,
) -> Result<CircuitRecord> {
    let p = predict(&shape, noise)?;
    let (f, d) = match role {
        Mode::Unencoded => (p.f_une, 0.0),
        Mode::Iceberg => (p.f_ice.unwrap_or(0.0), p.probs.d),
    };
    Ok(CircuitRecord {
        role,
        ell: 0,
        two_qubit_gates: shape.g2,
        shape,
        edge_ratios: vec![f; edges],
        f_c: f,
        stderr: 0.0,
        d_c: d,
        shots: 0,
    })
}


#[cfg(test)]
mod recovery {
    use super::*;

    #[test]
    fn iceberg_recovers_synthetic_rates() {
        let truth = NoiseParams::central_fit();
        let records = [
            (8, 1, 1),
            (8, 4, 2),
            (10, 6, 3),
            (12, 8, 3),
            (14, 10, 4),
            (16, 10, 2),
        ]
        .iter()
        .map(|&(k, ell, s)| {
            synthetic_record(
                CircuitShape::regular(k, 3, ell, s).unwrap(),
                &truth,
                Mode::Iceberg,
                8,
            )
            .unwrap()
        })
        .collect();
        let fit = fit_iceberg(&Dataset { records }).unwrap();
        for (est, want) in fit.estimate.iter().zip([truth.p_cx, truth.p_c, truth.p_a]) {
            assert!((est / want - 1.0).abs() < 0.05, "{est} vs {want}");
        }
    }
}
