//! Noisy shot-by-shot execution of unencoded and Iceberg-encoded QAOA.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Op, StateVector};
use crate::error::{invalid, Error, Result};
use crate::iceberg::{decode, encode_with_offsets, place_syndromes, EncodedCircuit, Verdict};
use crate::noise::{inject, Mode, NoiseParams};
use crate::problems::ProblemInstance;
use crate::qaoa::{approximation_ratio, build_qaoa, noiseless_energy, NoiselessEnergy, QaoaParams};

/// Default cap on logical qubits for Monte-Carlo runs.
pub const MAX_MC_K: usize = 16;
/// Noiseless edge correlators below this magnitude give no usable ratio.
pub const EDGE_EPS: f64 = 1e-9;

/// Per-shot rng seed.
pub fn shot_seed(master: u64, shot: u64) -> u64 {
    master ^ shot
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot: u64,
    pub seed: u64,
    pub verdict: Verdict,
    pub logical: Option<u64>,
    pub raw: Vec<bool>,
}

/// Raw execution result; `stopped` is the gadget whose ancilla fired, if the
/// run was cut short.
#[derive(Debug, Clone)]
pub struct Execution {
    pub bits: Vec<bool>,
    pub stopped: Option<usize>,
}

/// Runs a (noisy) circuit. Execution stops at the first measured bit listed
/// in `stop_on` that reads 1; a trailing run of Z measurements is sampled
/// jointly from the final state.
pub fn execute(
    circuit: &Circuit,
    stop_on: &[Option<usize>],
    rng: &mut ChaCha8Rng,
) -> Result<Execution> {
    let mut sv = StateVector::new(circuit.width)?;
    let mut bits = vec![false; circuit.n_cbits];
    let gates = &circuit.gates;
    let tail = gates
        .iter()
        .rev()
        .take_while(|g| matches!(g.op, Op::MeasureZ(..)))
        .count();
    let body = gates.len() - tail;
    for g in &gates[..body] {
        sv.apply(&g.op, rng, &mut bits)?;
        if let Some(c) = g.op.cbit() {
            if bits[c] {
                if let Some(Some(gadget)) = stop_on.get(c) {
                    return Ok(Execution {
                        bits,
                        stopped: Some(*gadget),
                    });
                }
            }
        }
    }
    if tail > 0 {
        let idx = sv.sample_index(rng);
        for g in &gates[body..] {
            if let Op::MeasureZ(q, c) = g.op {
                bits[c] = (idx >> q) & 1 == 1;
            }
        }
    }
    Ok(Execution {
        bits,
        stopped: None,
    })
}

/// Running statistics over accepted logical samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub count: usize,
    pub mean_energy: f64,
    pub energy_stderr: f64,
    /// Mean `z_i z_j` per edge.
    pub edge_zz: Vec<f64>,
}

impl SampleStats {
    pub fn from_bitstrings(
        instance: &ProblemInstance,
        samples: impl IntoIterator<Item = u64>,
    ) -> Self {
        let m = instance.num_edges();
        let mut count = 0usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut edge = vec![0i64; m];
        for b in samples {
            count += 1;
            let mut e = 0.0;
            for (acc, ed) in edge.iter_mut().zip(&instance.edges) {
                let s = if ((b >> ed.i) ^ (b >> ed.j)) & 1 == 0 {
                    1
                } else {
                    -1
                };
                *acc += s;
                e += ed.w * s as f64;
            }
            sum += e;
            sum_sq += e * e;
        }
        let c = count.max(1) as f64;
        let mean = sum / c;
        let var = if count > 1 {
            (sum_sq - c * mean * mean).max(0.0) / (c - 1.0)
        } else {
            0.0
        };
        SampleStats {
            count,
            mean_energy: mean,
            energy_stderr: (var / c).sqrt(),
            edge_zz: edge.iter().map(|&v| v as f64 / c).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityEstimate {
    pub f_c: f64,
    pub stderr: f64,
    /// Per-edge ratio, `None` where the noiseless correlator vanishes.
    pub edge_ratios: Vec<Option<f64>>,
    pub distance: f64,
    pub undefined_edges: usize,
}

/// White-noise fidelity estimate from sample statistics.
pub fn estimate_fidelity(
    stats: &SampleStats,
    noiseless: &NoiselessEnergy,
) -> Result<FidelityEstimate> {
    if noiseless.energy.abs() < EDGE_EPS {
        return Err(Error::Undefined("noiseless energy is zero".into()));
    }
    if stats.count == 0 {
        return Err(Error::Undefined("no accepted samples".into()));
    }
    let f_c = stats.mean_energy / noiseless.energy;
    let stderr = stats.energy_stderr / noiseless.energy.abs();
    let edge_ratios: Vec<Option<f64>> = stats
        .edge_zz
        .iter()
        .zip(&noiseless.edge_zz)
        .map(|(&m, &z0)| {
            if z0.abs() < EDGE_EPS {
                None
            } else {
                Some(m / z0)
            }
        })
        .collect();
    let defined: Vec<f64> = edge_ratios.iter().flatten().copied().collect();
    let undefined_edges = edge_ratios.len() - defined.len();
    let distance = if defined.is_empty() {
        0.0
    } else {
        defined
            .iter()
            .map(|r| (r - f_c).powi(2))
            .sum::<f64>()
            .sqrt()
            / defined.len() as f64
    };
    Ok(FidelityEstimate {
        f_c,
        stderr,
        edge_ratios,
        distance,
        undefined_edges,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub k: usize,
    pub ell: usize,
    /// Gadget count; 0 for unencoded runs.
    pub s: usize,
    pub shots: usize,
    pub accepted: usize,
    /// Shots discarded at each gadget (init, syndromes…, final).
    pub discards: Vec<usize>,
    pub acceptance: f64,
    pub discard_fractions: Vec<f64>,
    pub stats: SampleStats,
    pub noiseless: NoiselessEnergy,
    pub fidelity: Option<FidelityEstimate>,
    pub alpha: Option<f64>,
    pub two_qubit_gates: usize,
    pub seed: u64,
}

impl RunSummary {
    pub fn post_rate_stderr(&self) -> f64 {
        let a = self.acceptance;
        (a * (1.0 - a) / self.shots as f64).sqrt()
    }

    pub const CSV_HEADER: &'static str = "k,ell,s,shots,accepted,fidelity,stderr,post_rate,alpha";

    pub fn csv_row(&self) -> String {
        let (f, se) = self
            .fidelity
            .as_ref()
            .map_or((f64::NAN, f64::NAN), |f| (f.f_c, f.stderr));
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.k,
            self.ell,
            self.s,
            self.shots,
            self.accepted,
            f,
            se,
            self.acceptance,
            self.alpha.unwrap_or(f64::NAN)
        )
    }
}

fn guard(instance: &ProblemInstance, shots: usize) -> Result<()> {
    if shots == 0 {
        return invalid("shots must be ≥ 1");
    }
    if instance.k > MAX_MC_K {
        return Err(Error::Guard(format!(
            "k = {} exceeds the Monte-Carlo cap {MAX_MC_K}",
            instance.k
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn summarize(
    instance: &ProblemInstance,
    params: &QaoaParams,
    s: usize,
    records: &[ShotRecord],
    gadgets: usize,
    two_qubit_gates: usize,
    seed: u64,
) -> Result<RunSummary> {
    let noiseless = noiseless_energy(instance, params)?;
    let mut discards = vec![0usize; gadgets];
    for r in records {
        if let Verdict::Reject(g) = r.verdict {
            discards[g] += 1;
        }
    }
    let stats = SampleStats::from_bitstrings(instance, records.iter().filter_map(|r| r.logical));
    let shots = records.len();
    let fidelity = estimate_fidelity(&stats, &noiseless).ok();
    let alpha = if stats.count > 0 {
        approximation_ratio(instance, stats.mean_energy).ok()
    } else {
        None
    };
    Ok(RunSummary {
        k: instance.k,
        ell: params.layers(),
        s,
        shots,
        accepted: stats.count,
        acceptance: stats.count as f64 / shots as f64,
        discard_fractions: discards.iter().map(|&d| d as f64 / shots as f64).collect(),
        discards,
        stats,
        noiseless,
        fidelity,
        alpha,
        two_qubit_gates,
        seed,
    })
}

/// Shot records of a noisy unencoded run.
pub fn unencoded_shots(
    instance: &ProblemInstance,
    params: &QaoaParams,
    noise: &NoiseParams,
    shots: usize,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    guard(instance, shots)?;
    let mut circuit = build_qaoa(instance, params)?;
    for q in 0..instance.k {
        circuit.push(Op::MeasureZ(q, q));
    }
    (0..shots as u64)
        .into_par_iter()
        .map(|shot| {
            let sd = shot_seed(seed, shot);
            let mut rng = ChaCha8Rng::seed_from_u64(sd);
            let noisy = inject(&circuit, noise, Mode::Unencoded, &mut rng)?;
            let ex = execute(&noisy, &[], &mut rng)?;
            let logical = ex
                .bits
                .iter()
                .enumerate()
                .fold(0u64, |a, (i, &b)| a | ((b as u64) << i));
            Ok(ShotRecord {
                shot,
                seed: sd,
                verdict: Verdict::Accept,
                logical: Some(logical),
                raw: ex.bits,
            })
        })
        .collect()
}

pub fn run_unencoded(
    instance: &ProblemInstance,
    params: &QaoaParams,
    noise: &NoiseParams,
    shots: usize,
    seed: u64,
) -> Result<RunSummary> {
    let records = unencoded_shots(instance, params, noise, shots, seed)?;
    let g2 = instance.num_edges() * params.layers();
    summarize(instance, params, 0, &records, 0, g2, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcebergOptions {
    pub s: usize,
    /// Explicit syndrome offsets overriding the balanced placement.
    pub offsets: Option<Vec<usize>>,
    pub dd: bool,
}

impl IcebergOptions {
    pub fn new(s: usize) -> Self {
        IcebergOptions {
            s,
            offsets: None,
            dd: true,
        }
    }
}

pub fn encode_for(
    instance: &ProblemInstance,
    params: &QaoaParams,
    opts: &IcebergOptions,
) -> Result<EncodedCircuit> {
    let logical = build_qaoa(instance, params)?;
    let total = logical.gates.iter().filter(|g| g.logical).count();
    let offsets = match &opts.offsets {
        Some(o) => o.clone(),
        None => place_syndromes(total, opts.s)?,
    };
    encode_with_offsets(&logical, instance.k, &offsets, opts.dd)
}

/// Executes one noisy shot of an encoded circuit.
pub fn iceberg_shot(
    encoded: &EncodedCircuit,
    noise: &NoiseParams,
    shot: u64,
    seed: u64,
) -> Result<ShotRecord> {
    let mut stop_on = vec![None; encoded.circuit.n_cbits];
    for (g, bits) in encoded.gadget_bits.iter().enumerate() {
        for &c in bits {
            stop_on[c] = Some(g);
        }
    }
    let sd = shot_seed(seed, shot);
    let mut rng = ChaCha8Rng::seed_from_u64(sd);
    let noisy = inject(&encoded.circuit, noise, Mode::Iceberg, &mut rng)?;
    let ex = execute(&noisy, &stop_on, &mut rng)?;
    let d = decode(&ex.bits, encoded)?;
    Ok(ShotRecord {
        shot,
        seed: sd,
        verdict: d.verdict,
        logical: d.logical,
        raw: ex.bits,
    })
}

pub fn iceberg_shots(
    instance: &ProblemInstance,
    params: &QaoaParams,
    noise: &NoiseParams,
    opts: &IcebergOptions,
    shots: usize,
    seed: u64,
) -> Result<(EncodedCircuit, Vec<ShotRecord>)> {
    guard(instance, shots)?;
    let encoded = encode_for(instance, params, opts)?;
    let records = (0..shots as u64)
        .into_par_iter()
        .map(|shot| iceberg_shot(&encoded, noise, shot, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok((encoded, records))
}

pub fn run_iceberg_with(
    instance: &ProblemInstance,
    params: &QaoaParams,
    noise: &NoiseParams,
    opts: &IcebergOptions,
    shots: usize,
    seed: u64,
) -> Result<RunSummary> {
    let (encoded, records) = iceberg_shots(instance, params, noise, opts, shots, seed)?;
    summarize(
        instance,
        params,
        encoded.s,
        &records,
        encoded.s + 1,
        encoded.circuit.count_two_qubit(),
        seed,
    )
}

pub fn run_iceberg(
    instance: &ProblemInstance,
    params: &QaoaParams,
    noise: &NoiseParams,
    s: usize,
    shots: usize,
    seed: u64,
) -> Result<RunSummary> {
    run_iceberg_with(
        instance,
        params,
        noise,
        &IcebergOptions::new(s),
        shots,
        seed,
    )
}

/// Streams shots as CSV: `shot_index,verdict,block,logical_bits,energy`.
pub fn write_shots_csv<W: Write>(
    instance: &ProblemInstance,
    records: &[ShotRecord],
    mut out: W,
) -> Result<()> {
    writeln!(out, "shot_index,verdict,block,logical_bits,energy")?;
    for r in records {
        let (verdict, block) = match r.verdict {
            Verdict::Accept => ("accept", String::new()),
            Verdict::Reject(b) => ("reject", b.to_string()),
        };
        let (bits, energy) = match r.logical {
            Some(l) => (
                (0..instance.k)
                    .map(|i| if (l >> i) & 1 == 1 { '1' } else { '0' })
                    .collect::<String>(),
                instance.energy_bits(l).to_string(),
            ),
            None => (String::new(), String::new()),
        };
        writeln!(out, "{},{},{},{},{}", r.shot, verdict, block, bits, energy)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::gen_regular_graph;

    #[test]
    fn stats_of_constant_samples() {
        let g = gen_regular_graph(4, 3, 0).unwrap();
        let s = SampleStats::from_bitstrings(&g, [0u64; 10]);
        assert_eq!(s.mean_energy, 6.0);
        assert_eq!(s.energy_stderr, 0.0);
        assert!(s.edge_zz.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn guards() {
        let g = gen_regular_graph(18, 3, 0).unwrap();
        let p = QaoaParams::new(vec![0.1], vec![0.1]).unwrap();
        assert!(run_unencoded(&g, &p, &NoiseParams::default(), 10, 0).is_err());
        let g = gen_regular_graph(4, 3, 0).unwrap();
        assert!(run_unencoded(&g, &p, &NoiseParams::default(), 0, 0).is_err());
    }
}
