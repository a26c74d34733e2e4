//! Problem instances: random 3-regular / Erdős–Rényi MaxCut graphs and
//! Sherrington–Kirkpatrick spin glasses, with brute-force optima.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest vertex count accepted by [`brute_force_optimum`].
pub const MAX_BRUTE_FORCE_K: usize = 30;
/// Instances up to this size get their optimum computed on construction.
const AUTO_OPTIMUM_K: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Regular,
    ErdosRenyi,
    Sk,
}

impl Family {
    pub fn is_maxcut(self) -> bool {
        !matches!(self, Family::Sk)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Regular => "regular",
            Family::ErdosRenyi => "erdos_renyi",
            Family::Sk => "sk",
        })
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(Family::Regular),
            "erdos_renyi" => Ok(Family::ErdosRenyi),
            "sk" => Ok(Family::Sk),
            other => invalid(format!("unknown family {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// A weighted graph together with its cost Hamiltonian `H = Σ w_ij Z_i Z_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub k: usize,
    pub edges: Vec<Edge>,
    pub family: Family,
    /// Optimal objective value, when known.
    pub f_max: Option<f64>,
}

impl ProblemInstance {
    /// Validates the edge list and, for small `k`, caches the optimum.
    pub fn new(k: usize, mut edges: Vec<Edge>, family: Family) -> Result<Self> {
        if k == 0 {
            return invalid("empty vertex set");
        }
        let mut seen = BTreeSet::new();
        for e in edges.iter_mut() {
            if e.i > e.j {
                std::mem::swap(&mut e.i, &mut e.j);
            }
            if e.i == e.j || e.j >= k {
                return invalid(format!("bad edge ({}, {}) for k={k}", e.i, e.j));
            }
            if !seen.insert((e.i, e.j)) {
                return invalid(format!("duplicate edge ({}, {})", e.i, e.j));
            }
            if family.is_maxcut() && e.w != 1.0 {
                return invalid("MaxCut instances are unweighted");
            }
        }
        if family == Family::Sk && edges.len() != k * (k - 1) / 2 {
            return invalid("SK instances are complete graphs");
        }
        let mut inst = ProblemInstance {
            k,
            edges,
            family,
            f_max: None,
        };
        if k <= AUTO_OPTIMUM_K {
            inst.f_max = Some(brute_force_optimum(&inst)?.0);
        }
        Ok(inst)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.k];
        for e in &self.edges {
            d[e.i] += 1;
            d[e.j] += 1;
        }
        d
    }

    /// `Σ w z_i z_j` for a bitstring where bit `v` set means `z_v = −1`.
    pub fn energy_bits(&self, bits: u64) -> f64 {
        self.edges
            .iter()
            .map(|e| {
                if ((bits >> e.i) ^ (bits >> e.j)) & 1 == 1 {
                    -e.w
                } else {
                    e.w
                }
            })
            .sum()
    }

    /// Objective as a function of the energy `Σ w z_i z_j`.
    pub fn objective_from_energy(&self, energy: f64) -> f64 {
        if self.family.is_maxcut() {
            (self.total_weight() - energy) / 2.0
        } else {
            -energy
        }
    }

    pub fn objective_bits(&self, bits: u64) -> f64 {
        self.objective_from_energy(self.energy_bits(bits))
    }

    pub fn f_max(&self) -> Result<f64> {
        match self.f_max {
            Some(f) => Ok(f),
            None => Ok(brute_force_optimum(self)?.0),
        }
    }

    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.k, self.edges.len(), self.family)?;
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.i, e.j, e.w)?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true));
        let parse_err = |line: usize, msg: &str| Error::Parse {
            line: line + 1,
            msg: msg.to_string(),
        };
        let (ln, header) = lines.next().ok_or_else(|| parse_err(0, "missing header"))?;
        let header = header?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 {
            return Err(parse_err(ln, "expected \"k m family\""));
        }
        let k: usize = h[0].parse().map_err(|_| parse_err(ln, "bad k"))?;
        let m: usize = h[1].parse().map_err(|_| parse_err(ln, "bad m"))?;
        let family: Family = h[2].parse()?;
        let mut edges = Vec::with_capacity(m);
        for (ln, line) in lines.by_ref().take(m) {
            let line = line?;
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 3 {
                return Err(parse_err(ln, "expected \"i j w\""));
            }
            let i = t[0].parse().map_err(|_| parse_err(ln, "bad i"))?;
            let j = t[1].parse().map_err(|_| parse_err(ln, "bad j"))?;
            let w = t[2].parse().map_err(|_| parse_err(ln, "bad w"))?;
            edges.push(Edge { i, j, w });
        }
        if edges.len() != m {
            return Err(parse_err(ln, "fewer edges than declared"));
        }
        ProblemInstance::new(k, edges, family)
    }
}

fn unit_edges(pairs: impl IntoIterator<Item = (usize, usize)>) -> Vec<Edge> {
    let mut edges: Vec<Edge> = pairs
        .into_iter()
        .map(|(a, b)| Edge {
            i: a.min(b),
            j: a.max(b),
            w: 1.0,
        })
        .collect();
    edges.sort_by_key(|e| (e.i, e.j));
    edges
}

/// Random simple `degree`-regular graph via the configuration model with
/// rejection of self-loops and multi-edges.
pub fn gen_regular_graph(k: usize, degree: usize, seed: u64) -> Result<ProblemInstance> {
    if (k * degree) % 2 == 1 {
        return invalid(format!("k·degree = {} is odd", k * degree));
    }
    if k <= degree {
        return invalid(format!("k = {k} must exceed degree {degree}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..k)
        .flat_map(|v| std::iter::repeat(v).take(degree))
        .collect();
    for _ in 0..100_000 {
        stubs.shuffle(&mut rng);
        let mut set = BTreeSet::new();
        let ok = stubs
            .chunks(2)
            .all(|p| p[0] != p[1] && set.insert((p[0].min(p[1]), p[0].max(p[1]))));
        if ok {
            return ProblemInstance::new(k, unit_edges(set), Family::Regular);
        }
    }
    Err(Error::Guard(
        "configuration model did not produce a simple graph".into(),
    ))
}

/// `m` distinct edges drawn uniformly from the complete graph on `k` vertices.
pub fn gen_erdos_renyi(k: usize, m: usize, seed: u64) -> Result<ProblemInstance> {
    let all: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    if m > all.len() {
        return invalid(format!("m = {m} exceeds {} possible edges", all.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, all.len(), m);
    ProblemInstance::new(
        k,
        unit_edges(picked.iter().map(|x| all[x])),
        Family::ErdosRenyi,
    )
}

/// Complete graph with i.i.d. standard-normal couplings.
pub fn gen_sk(k: usize, seed: u64) -> Result<ProblemInstance> {
    if k < 2 {
        return invalid("SK model needs k ≥ 2");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let w: f64 = StandardNormal.sample(&mut rng);
            edges.push(Edge { i, j, w });
        }
    }
    ProblemInstance::new(k, edges, Family::Sk)
}

/// Objective of a ±1 assignment: the cut value for MaxCut, `−Σ J z_i z_j` for SK.
pub fn objective(instance: &ProblemInstance, z: &[i8]) -> Result<f64> {
    if z.len() != instance.k {
        return invalid(format!(
            "assignment has length {}, expected {}",
            z.len(),
            instance.k
        ));
    }
    let energy: f64 = instance
        .edges
        .iter()
        .map(|e| e.w * f64::from(z[e.i]) * f64::from(z[e.j]))
        .sum();
    Ok(instance.objective_from_energy(energy))
}

pub fn bits_to_spins(bits: u64, k: usize) -> Vec<i8> {
    (0..k)
        .map(|v| if (bits >> v) & 1 == 1 { -1 } else { 1 })
        .collect()
}

/// Exhaustive optimum over the `2^(k−1)` assignments with the last spin fixed.
pub fn brute_force_optimum(instance: &ProblemInstance) -> Result<(f64, Vec<i8>)> {
    let k = instance.k;
    if k > MAX_BRUTE_FORCE_K {
        return Err(Error::Guard(format!("k = {k} too large for enumeration")));
    }
    if k == 1 {
        return Ok((instance.objective_bits(0), vec![1]));
    }
    let free = k - 1;
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for e in &instance.edges {
        adj[e.i].push((e.j, e.w));
        adj[e.j].push((e.i, e.w));
    }
    let hi = free.min(6);
    let lo = free - hi;
    // Each chunk fixes the top `hi` free bits and walks the rest in Gray order.
    let (best_e, best_bits) = (0u64..1 << hi)
        .into_par_iter()
        .map(|prefix| {
            let mut bits = prefix << lo;
            let mut e = instance.energy_bits(bits);
            let (mut be, mut bb) = (e, bits);
            for step in 1u64..1 << lo {
                let v = step.trailing_zeros() as usize;
                let zv = if (bits >> v) & 1 == 1 { -1.0 } else { 1.0 };
                let field: f64 = adj[v]
                    .iter()
                    .map(|&(u, w)| if (bits >> u) & 1 == 1 { -w } else { w })
                    .sum();
                e -= 2.0 * zv * field;
                bits ^= 1 << v;
                if e < be {
                    be = e;
                    bb = bits;
                }
            }
            (be, bb)
        })
        .reduce(
            || (f64::INFINITY, 0),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );
    Ok((
        instance.objective_from_energy(best_e),
        bits_to_spins(best_bits, k),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(k: usize) -> ProblemInstance {
        ProblemInstance::new(
            k,
            unit_edges((0..k).map(|i| (i, (i + 1) % k))),
            Family::ErdosRenyi,
        )
        .unwrap()
    }

    #[test]
    fn k4_regular_is_complete() {
        let g = gen_regular_graph(4, 3, 0).unwrap();
        assert_eq!(g.num_edges(), 6);
        assert!(g.degrees().iter().all(|&d| d == 3));
    }

    #[test]
    fn regular_graph_errors() {
        assert!(gen_regular_graph(5, 3, 0).is_err());
        assert!(gen_regular_graph(3, 3, 0).is_err());
    }

    #[test]
    fn regular_k16() {
        let g = gen_regular_graph(16, 3, 1).unwrap();
        assert_eq!(g.num_edges(), 24);
        assert!(g.degrees().iter().all(|&d| d == 3));
        assert_eq!(g, gen_regular_graph(16, 3, 1).unwrap());
    }

    #[test]
    fn erdos_renyi_counts() {
        assert_eq!(gen_erdos_renyi(18, 27, 0).unwrap().num_edges(), 27);
        assert_eq!(gen_erdos_renyi(18, 45, 0).unwrap().num_edges(), 45);
        assert_eq!(gen_erdos_renyi(4, 6, 0).unwrap().num_edges(), 6);
        assert!(gen_erdos_renyi(4, 7, 0).is_err());
    }

    #[test]
    fn sk_shapes() {
        assert_eq!(gen_sk(10, 0).unwrap().num_edges(), 45);
        assert_eq!(gen_sk(2, 0).unwrap().num_edges(), 1);
        assert!(gen_sk(1, 0).is_err());
        let g = gen_sk(50, 3).unwrap();
        let n = g.num_edges() as f64;
        let mean = g.total_weight() / n;
        assert!(mean.abs() < 4.0 / n.sqrt());
    }

    #[test]
    fn small_optima() {
        let k3 = ProblemInstance::new(3, unit_edges([(0, 1), (1, 2), (0, 2)]), Family::ErdosRenyi)
            .unwrap();
        assert_eq!(k3.f_max, Some(2.0));
        let c4 = cycle(4);
        assert_eq!(c4.f_max, Some(4.0));
        assert_eq!(objective(&c4, &[1, -1, 1, -1]).unwrap(), 4.0);
        assert_eq!(objective(&c4, &[1, 1, 1, 1]).unwrap(), 0.0);
        assert!(objective(&c4, &[1, 1]).is_err());
    }

    #[test]
    fn brute_force_matches_full_enumeration() {
        let g = gen_regular_graph(12, 3, 7).unwrap();
        let full = (0u64..1 << 12)
            .map(|b| g.objective_bits(b))
            .fold(f64::MIN, f64::max);
        let (f, z) = brute_force_optimum(&g).unwrap();
        assert_eq!(f, full);
        assert_eq!(objective(&g, &z).unwrap(), f);
        let sk = gen_sk(9, 2).unwrap();
        let full = (0u64..1 << 9)
            .map(|b| sk.objective_bits(b))
            .fold(f64::MIN, f64::max);
        assert!((sk.f_max.unwrap() - full).abs() < 1e-12);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = gen_sk(6, 4).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let back = ProblemInstance::read_edge_list(&buf[..]).unwrap();
        assert_eq!(g, back);
        assert!(ProblemInstance::read_edge_list(&b"3 1 regular\n"[..]).is_err());
    }
}
