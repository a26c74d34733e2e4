//! Stochastic two-qubit Pauli channels and their insertion into circuits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuits::{BlockKind, Circuit, Gate, Op};
use crate::config::Config;
use crate::error::{invalid, Error, Result};

/// Two-qubit Pauli `(P_a, P_b)` with codes 0 = I, 1 = X, 2 = Y, 3 = Z.
pub type Pauli2 = (u8, u8);

pub const COMMUTING: [Pauli2; 3] = [(1, 1), (2, 2), (3, 3)];

pub fn full_set() -> Vec<Pauli2> {
    (0..16u8).skip(1).map(|v| (v >> 2, v & 3)).collect()
}

pub fn anticommuting_set() -> Vec<Pauli2> {
    full_set()
        .into_iter()
        .filter(|p| !COMMUTING.contains(p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Unencoded,
    Cnot,
    Commuting,
    Anticommuting,
}

impl Channel {
    pub fn support(self) -> Vec<Pauli2> {
        match self {
            Channel::Unencoded | Channel::Cnot => full_set(),
            Channel::Commuting => COMMUTING.to_vec(),
            Channel::Anticommuting => anticommuting_set(),
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rate) {
        return invalid(format!("rate {rate} outside [0, 1]"));
    }
    Ok(())
}

/// With probability `rate` a uniform Pauli from the channel's set.
pub fn sample_error<R: Rng + ?Sized>(
    channel: Channel,
    rate: f64,
    rng: &mut R,
) -> Result<Option<Pauli2>> {
    check_rate(rate)?;
    Ok(draw(channel, rate, rng))
}

fn draw<R: Rng + ?Sized>(channel: Channel, rate: f64, rng: &mut R) -> Option<Pauli2> {
    if rate <= 0.0 || rng.gen::<f64>() >= rate {
        return None;
    }
    Some(match channel {
        Channel::Unencoded | Channel::Cnot => {
            let v = rng.gen_range(1..16u8);
            (v >> 2, v & 3)
        }
        Channel::Commuting => COMMUTING[rng.gen_range(0..3)],
        Channel::Anticommuting => {
            // Uniform over the 12 non-commuting elements.
            let v = rng.gen_range(0..12u8);
            let mut seen = 0;
            let mut out = (0, 0);
            for p in 1..16u8 {
                let pp = (p >> 2, p & 3);
                if COMMUTING.contains(&pp) {
                    continue;
                }
                if seen == v {
                    out = pp;
                    break;
                }
                seen += 1;
            }
            out
        }
    })
}

/// `r(θ) = a + b|θ|` rescaling of the gate error rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleModel {
    pub a: f64,
    pub b: f64,
    pub q_c: f64,
    pub q_a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p_l: f64,
    pub p_cx: f64,
    pub p_c: f64,
    pub p_a: f64,
    #[serde(default)]
    pub angle: Option<AngleModel>,
}

impl NoiseParams {
    pub fn iceberg(p_cx: f64, p_c: f64, p_a: f64) -> Self {
        NoiseParams {
            p_cx,
            p_c,
            p_a,
            ..Default::default()
        }
    }

    pub fn unencoded(p_l: f64) -> Self {
        NoiseParams {
            p_l,
            ..Default::default()
        }
    }

    /// Central rates fitted to the trapped-ion emulator data.
    pub fn central_fit() -> Self {
        NoiseParams {
            p_l: 4.4e-4,
            p_cx: 5.5e-3,
            p_c: 7.0e-5,
            p_a: 2.2e-3,
            angle: None,
        }
    }

    pub fn scaled(&self, f: f64) -> Self {
        NoiseParams {
            p_l: self.p_l * f,
            p_cx: self.p_cx * f,
            p_c: self.p_c * f,
            p_a: self.p_a * f,
            angle: self.angle,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for r in [self.p_l, self.p_cx, self.p_c, self.p_a] {
            check_rate(r)?;
        }
        if let Some(m) = self.angle {
            if (m.a + m.b * std::f64::consts::FRAC_PI_4 - 1.0).abs() > 1e-9 {
                return invalid("angle model must satisfy a + b·π/4 = 1");
            }
        }
        Ok(())
    }

    pub fn from_config(cfg: &Config) -> Result<Self> {
        let get = |key: &str| cfg.get_f64(key).unwrap_or(Ok(0.0));
        let mut p = NoiseParams {
            p_l: get("p_l")?,
            p_cx: get("p_cx")?,
            p_c: get("p_c")?,
            p_a: get("p_a")?,
            angle: None,
        };
        if cfg.contains("angle_a") || cfg.contains("angle_b") {
            p.angle = Some(AngleModel {
                a: get("angle_a")?,
                b: get("angle_b")?,
                q_c: get("q_c")?,
                q_a: get("q_a")?,
            });
        }
        p.validate()?;
        Ok(p)
    }

    pub fn to_config(&self) -> String {
        let mut s = format!(
            "p_l = {:e}\np_cx = {:e}\np_c = {:e}\np_a = {:e}\n",
            self.p_l, self.p_cx, self.p_c, self.p_a
        );
        if let Some(m) = self.angle {
            s.push_str(&format!(
                "angle_a = {}\nangle_b = {}\nq_c = {}\nq_a = {}\n",
                m.a, m.b, m.q_c, m.q_a
            ));
        }
        s
    }
}

/// `(p_c(θ), p_a(θ), p_ℓ(θ))` for a rotation `exp(−iθ P⊗P)`.
pub fn angle_rates(theta: f64, base: &NoiseParams) -> Result<(f64, f64, f64)> {
    let m = base
        .angle
        .ok_or_else(|| Error::InvalidArgument("angle model absent".into()))?;
    let r = m.a + m.b * theta.abs();
    Ok((m.q_c * r * (1.0 - m.q_a * r), m.q_a * r, base.p_cx * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Unencoded,
    Iceberg,
}

fn pauli_gates(p: Pauli2, q0: usize, q1: usize, template: &Gate, out: &mut Vec<Gate>) {
    for (code, q) in [(p.0, q0), (p.1, q1)] {
        let op = match code {
            1 => Op::X(q),
            2 => Op::Y(q),
            3 => Op::Z(q),
            _ => continue,
        };
        out.push(Gate {
            op,
            block: template.block,
            logical: false,
        });
    }
}

/// Physical rotation angle `θ` of `exp(−iθ P⊗P)` for a two-qubit rotation gate.
fn half_angle(op: &Op) -> Option<f64> {
    match *op {
        Op::Rzz(t, ..) | Op::Rxx(t, ..) => Some(t / 2.0),
        _ => None,
    }
}

/// One noisy realization of `circuit`.
pub fn inject<R: Rng + ?Sized>(
    circuit: &Circuit,
    noise: &NoiseParams,
    mode: Mode,
    rng: &mut R,
) -> Result<Circuit> {
    noise.validate()?;
    let mut gates = Vec::with_capacity(circuit.gates.len() + 16);
    for g in &circuit.gates {
        gates.push(*g);
        let (q0, q1) = match g.op {
            Op::Cnot(a, b) | Op::Rzz(_, a, b) | Op::Rxx(_, a, b) => (a, b),
            _ => continue,
        };
        let angle = match (noise.angle, half_angle(&g.op)) {
            (Some(_), Some(th)) => Some(angle_rates(th, noise)?),
            _ => None,
        };
        let clamp = |r: f64| r.clamp(0.0, 1.0);
        match mode {
            Mode::Unencoded => {
                let p = angle.map_or(noise.p_l, |a| clamp(a.2));
                if let Some(e) = draw(Channel::Unencoded, p, rng) {
                    pauli_gates(e, q0, q1, g, &mut gates);
                }
            }
            Mode::Iceberg => {
                let tag = g.block.ok_or_else(|| {
                    Error::InvalidArgument(format!("gate without block tag: {g}"))
                })?;
                if g.logical {
                    let (pc, pa) =
                        angle.map_or((noise.p_c, noise.p_a), |a| (clamp(a.0), clamp(a.1)));
                    if let Some(e) = draw(Channel::Commuting, pc, rng) {
                        pauli_gates(e, q0, q1, g, &mut gates);
                    }
                    if let Some(e) = draw(Channel::Anticommuting, pa, rng) {
                        pauli_gates(e, q0, q1, g, &mut gates);
                    }
                } else if matches!(g.op, Op::Cnot(..)) {
                    if tag.kind == BlockKind::Logical {
                        return Err(Error::InvalidArgument(format!(
                            "CNOT inside a logical block: {g}"
                        )));
                    }
                    if let Some(e) = draw(Channel::Cnot, noise.p_cx, rng) {
                        pauli_gates(e, q0, q1, g, &mut gates);
                    }
                }
            }
        }
    }
    Ok(Circuit {
        width: circuit.width,
        n_cbits: circuit.n_cbits,
        gates,
    })
}
