//! Analytic performance model: block-by-block propagation of the harmless,
//! logical, exciting and discarding error probabilities `(H, L, E, D)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::iceberg::{partition_sizes, place_syndromes, EncodedCircuit};
use crate::noise::NoiseParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockProbs {
    pub h: f64,
    pub l: f64,
    pub e: f64,
    pub d: f64,
}

impl BlockProbs {
    pub const CLEAN: BlockProbs = BlockProbs {
        h: 1.0,
        l: 0.0,
        e: 0.0,
        d: 0.0,
    };

    pub fn total(&self) -> f64 {
        self.h + self.l + self.e + self.d
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.h, self.l, self.e, self.d]
    }
}

/// `(P0, P1, P2)`: probabilities of zero, one, and two or more faulty gates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorCounts {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    /// `1 − P0`, kept separately to avoid cancellation at small rates.
    pub not0: f64,
}

impl ErrorCounts {
    /// Conditioned on exactly one (`mu = 1`) or at least two faulty gates.
    pub fn conditioned(mu: usize) -> Self {
        if mu == 1 {
            ErrorCounts {
                p0: 0.0,
                p1: 1.0,
                p2: 0.0,
                not0: 1.0,
            }
        } else {
            ErrorCounts {
                p0: 0.0,
                p1: 0.0,
                p2: 1.0,
                not0: 1.0,
            }
        }
    }
}

pub fn error_counts(p: f64, g: usize) -> Result<ErrorCounts> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("rate {p} outside [0, 1]"));
    }
    if g == 0 {
        return Ok(ErrorCounts {
            p0: 1.0,
            p1: 0.0,
            p2: 0.0,
            not0: 0.0,
        });
    }
    let gf = g as f64;
    let log_q = (-p).ln_1p();
    let p0 = (gf * log_q).exp();
    let not0 = -(gf * log_q).exp_m1();
    let p1 = if p == 1.0 {
        if g == 1 {
            1.0
        } else {
            0.0
        }
    } else {
        gf * p * ((gf - 1.0) * log_q).exp()
    };
    let p2 = (not0 - p1).max(0.0);
    Ok(ErrorCounts { p0, p1, p2, not0 })
}

pub fn error_count_probs(p: f64, g: usize) -> Result<(f64, f64, f64)> {
    let c = error_counts(p, g)?;
    Ok((c.p0, c.p1, c.p2))
}

pub fn init_update(c: ErrorCounts) -> BlockProbs {
    BlockProbs {
        h: c.p0 + c.p1 / 8.0,
        l: c.p2 / 8.0,
        e: 3.0 / 8.0 * c.p1 + 3.0 / 8.0 * c.p2,
        d: 0.5 * c.p1 + 0.5 * c.p2,
    }
}

pub fn logical_update(x: BlockProbs, pc_not0: f64, a: ErrorCounts) -> BlockProbs {
    let s = x.h + x.l + x.e;
    let pc0 = 1.0 - pc_not0;
    BlockProbs {
        h: x.h * pc0 * a.p0,
        l: x.h * pc_not0 * a.p0 + x.l * a.p0 + x.e * a.p1 / 3.0 + s * a.p2 / 4.0,
        e: x.e * a.p0 + (x.h + x.l + 2.0 / 3.0 * x.e) * a.p1 + 0.75 * s * a.p2,
        d: x.d,
    }
}

pub fn syndrome_update(x: BlockProbs, c: ErrorCounts) -> BlockProbs {
    let s = x.h + x.l + x.e;
    BlockProbs {
        h: x.h * (c.p0 + c.p1 / 16.0),
        l: x.l * c.p0 + (x.l + x.e) * c.p1 / 16.0 + s * c.p2 / 16.0,
        e: 3.0 / 16.0 * s * c.not0,
        d: x.d + x.e * c.p0 + 0.75 * s * c.not0,
    }
}

pub fn final_update(x: BlockProbs, c: ErrorCounts) -> BlockProbs {
    let s = x.h + x.l + x.e;
    BlockProbs {
        h: x.h * (c.p0 + c.p1 / 8.0),
        l: x.l * c.p0 + (x.l + x.e) * c.p1 / 8.0 + s * c.p2 / 8.0,
        e: 0.0,
        d: x.d + x.e * c.p0 + 7.0 / 8.0 * s * c.not0,
    }
}

pub fn init_block(p_cx: f64, n: usize) -> Result<BlockProbs> {
    Ok(init_update(error_counts(p_cx, n + 3)?))
}

pub fn logical_block(input: BlockProbs, p_c: f64, p_a: f64, g: usize) -> Result<BlockProbs> {
    Ok(logical_update(
        input,
        error_counts(p_c, g)?.not0,
        error_counts(p_a, g)?,
    ))
}

pub fn syndrome_block(input: BlockProbs, p_cx: f64, n: usize) -> Result<BlockProbs> {
    Ok(syndrome_update(input, error_counts(p_cx, 2 * n)?))
}

pub fn final_block(input: BlockProbs, p_cx: f64, n: usize) -> Result<BlockProbs> {
    Ok(final_update(input, error_counts(p_cx, n + 2)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GadgetKind {
    Init,
    Syndrome,
    Final,
}

/// Conditional `(H, L, E, D)` of a gadget given exactly `mu = 1` or `mu ≥ 2`
/// internal faults and a clean input.
pub fn model_fractions(kind: GadgetKind, mu: usize) -> BlockProbs {
    let c = ErrorCounts::conditioned(mu);
    match kind {
        GadgetKind::Init => init_update(c),
        GadgetKind::Syndrome => syndrome_update(BlockProbs::CLEAN, c),
        GadgetKind::Final => final_update(BlockProbs::CLEAN, c),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitShape {
    pub k: usize,
    pub g1: usize,
    pub g2: usize,
    /// Logical gates in each of the `s` logical blocks.
    pub block_gates: Vec<usize>,
}

impl CircuitShape {
    pub fn balanced(k: usize, g1: usize, g2: usize, s: usize) -> Result<Self> {
        let total = g1 + g2;
        let block_gates = partition_sizes(total, &place_syndromes(total, s)?);
        Ok(CircuitShape {
            k,
            g1,
            g2,
            block_gates,
        })
    }

    /// QAOA on a `degree`-regular graph: `g1 = kℓ`, `g2 = |E|ℓ`.
    pub fn regular(k: usize, degree: usize, ell: usize, s: usize) -> Result<Self> {
        if (k * degree) % 2 == 1 {
            return invalid(format!("no {degree}-regular graph on {k} vertices"));
        }
        CircuitShape::balanced(k, k * ell, k * degree / 2 * ell, s)
    }

    pub fn from_encoded(e: &EncodedCircuit) -> Self {
        CircuitShape {
            k: e.layout.k,
            g1: e.g1,
            g2: e.g2,
            block_gates: e.logical_counts.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.k + 2
    }

    pub fn s(&self) -> usize {
        self.block_gates.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k % 2 == 1 {
            return invalid(format!("Iceberg code needs even k ≥ 2, got {}", self.k));
        }
        if self.block_gates.is_empty() {
            return invalid("shape needs s ≥ 1");
        }
        if self.block_gates.iter().sum::<usize>() != self.g1 + self.g2 {
            return invalid("block gate counts do not sum to g1 + g2");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub f_une: f64,
    /// `None` when every shot is discarded.
    pub f_ice: Option<f64>,
    pub post_rate: f64,
    pub probs: BlockProbs,
}

/// Final `(H, L, E, D)` after the whole encoded circuit.
pub fn propagate(shape: &CircuitShape, noise: &NoiseParams) -> Result<BlockProbs> {
    shape.validate()?;
    let n = shape.n();
    let cx_init = error_counts(noise.p_cx, n + 3)?;
    let cx_syn = error_counts(noise.p_cx, 2 * n)?;
    let cx_fin = error_counts(noise.p_cx, n + 2)?;
    let mut x = init_update(cx_init);
    for (i, &g) in shape.block_gates.iter().enumerate() {
        x = logical_update(
            x,
            error_counts(noise.p_c, g)?.not0,
            error_counts(noise.p_a, g)?,
        );
        if i + 1 < shape.block_gates.len() {
            x = syndrome_update(x, cx_syn);
        }
    }
    Ok(final_update(x, cx_fin))
}

pub fn predict(shape: &CircuitShape, noise: &NoiseParams) -> Result<Prediction> {
    let probs = propagate(shape, noise)?;
    let post_rate = 1.0 - probs.d;
    let f_ice = if post_rate > 0.0 {
        Some(probs.h / post_rate)
    } else {
        None
    };
    let f_une = error_counts(noise.p_l, shape.g2)?.p0;
    Ok(Prediction {
        f_une,
        f_ice,
        post_rate,
        probs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingOrderScan {
    /// `(p_c, 1 − F_ice)` at `p_cx = p_a = 0`.
    pub commuting: Vec<(f64, f64)>,
    /// `(p, 1 − F_ice)` at `p_cx = p_a = p`, `p_c = 0`.
    pub detectable: Vec<(f64, f64)>,
    pub slope_commuting: f64,
    pub prefactor_commuting: f64,
    pub slope_detectable: f64,
}

/// Least-squares slope and intercept of `log y` against `log x`.
pub fn loglog_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn leading_order_scan(shape: &CircuitShape, rates: &[f64]) -> Result<LeadingOrderScan> {
    let infid = |noise: NoiseParams| -> Result<f64> {
        Ok(1.0 - predict(shape, &noise)?.f_ice.unwrap_or(0.0))
    };
    let mut commuting = Vec::new();
    let mut detectable = Vec::new();
    for &p in rates {
        commuting.push((p, infid(NoiseParams::iceberg(0.0, p, 0.0))?));
        detectable.push((p, infid(NoiseParams::iceberg(p, 0.0, p))?));
    }
    let (slope_commuting, icpt) = loglog_fit(&commuting);
    let (slope_detectable, _) = loglog_fit(&detectable);
    Ok(LeadingOrderScan {
        commuting,
        detectable,
        slope_commuting,
        prefactor_commuting: icpt.exp(),
        slope_detectable,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchItem {
    pub shape: CircuitShape,
    pub noise: NoiseParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchResult {
    pub shape: CircuitShape,
    pub prediction: Option<Prediction>,
    pub error: Option<String>,
}

/// JSON array of `{shape, noise}` in, JSON array of predictions out.
pub fn predict_batch_json(input: &str) -> Result<String> {
    let items: Vec<BatchItem> = serde_json::from_str(input)?;
    let out: Vec<BatchResult> = items
        .into_iter()
        .map(|it| match predict(&it.shape, &it.noise) {
            Ok(p) => BatchResult {
                shape: it.shape,
                prediction: Some(p),
                error: None,
            },
            Err(e) => BatchResult {
                shape: it.shape,
                prediction: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(serde_json::to_string_pretty(&out)?)
}
