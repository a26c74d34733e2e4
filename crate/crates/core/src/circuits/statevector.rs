use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Circuit, Op, PauliString};
use crate::error::{Error, Result};

/// Largest register the dense simulator accepts.
pub const MAX_WIDTH: usize = 24;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense state vector; qubit `q` is bit `q` of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    width: usize,
    amps: Vec<Complex64>,
}

/// Visits each index with bit `q` clear.
#[inline]
fn for_pairs(len: usize, q: usize, mut f: impl FnMut(usize, usize)) {
    let stride = 1usize << q;
    let mut base = 0;
    while base < len {
        for i in base..base + stride {
            f(i, i | stride);
        }
        base += stride << 1;
    }
}

impl StateVector {
    /// `|0…0⟩` on `width` qubits.
    pub fn new(width: usize) -> Result<Self> {
        if width == 0 || width > MAX_WIDTH {
            return Err(Error::Guard(format!(
                "state-vector width {width} outside 1..={MAX_WIDTH}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << width];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { width, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let width = amps.len().trailing_zeros() as usize;
        if !amps.len().is_power_of_two() || width == 0 || width > MAX_WIDTH {
            return Err(Error::Guard(
                "amplitude vector length must be 2^w, 1 ≤ w ≤ 24".into(),
            ));
        }
        Ok(StateVector { width, amps })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check(&self, q: usize) -> Result<()> {
        if q >= self.width {
            return Err(Error::MalformedGate(format!(
                "qubit {q} outside width {}",
                self.width
            )));
        }
        Ok(())
    }

    pub fn h(&mut self, q: usize) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = &mut self.amps;
        for_pairs(a.len(), q, |i, j| {
            let (x, y) = (a[i], a[j]);
            a[i] = (x + y) * s;
            a[j] = (x - y) * s;
        });
    }

    pub fn x(&mut self, q: usize) {
        let a = &mut self.amps;
        for_pairs(a.len(), q, |i, j| a.swap(i, j));
    }

    pub fn y(&mut self, q: usize) {
        let a = &mut self.amps;
        for_pairs(a.len(), q, |i, j| {
            let (x, y) = (a[i], a[j]);
            a[i] = -I * y;
            a[j] = I * x;
        });
    }

    pub fn z(&mut self, q: usize) {
        let a = &mut self.amps;
        for_pairs(a.len(), q, |_, j| a[j] = -a[j]);
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        let cm = 1usize << c;
        let a = &mut self.amps;
        for_pairs(a.len(), t, |i, j| {
            if i & cm != 0 {
                a.swap(i, j);
            }
        });
    }

    pub fn rzz(&mut self, theta: f64, p: usize, q: usize) {
        let even = Complex64::from_polar(1.0, -theta / 2.0);
        let odd = even.conj();
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if ((i >> p) ^ (i >> q)) & 1 == 0 {
                even
            } else {
                odd
            };
        }
    }

    pub fn rx(&mut self, theta: f64, q: usize) {
        let (s, c) = (theta / 2.0).sin_cos();
        let a = &mut self.amps;
        for_pairs(a.len(), q, |i, j| {
            let (x, y) = (a[i], a[j]);
            a[i] = x * c - I * s * y;
            a[j] = y * c - I * s * x;
        });
    }

    pub fn rxx(&mut self, theta: f64, p: usize, q: usize) {
        let (s, c) = (theta / 2.0).sin_cos();
        let m = (1usize << p) | (1usize << q);
        let a = &mut self.amps;
        for_pairs(a.len(), p, |i, _| {
            let j = i ^ m;
            let (x, y) = (a[i], a[j]);
            a[i] = x * c - I * s * y;
            a[j] = y * c - I * s * x;
        });
    }

    /// Probability that qubit `q` reads 1 in the Z basis.
    pub fn prob_one(&self, q: usize) -> f64 {
        let m = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & m != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projects qubit `q` onto `outcome` and renormalizes.
    pub fn collapse(&mut self, q: usize, outcome: bool, prob: f64) {
        let m = 1usize << q;
        let scale = 1.0 / prob.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if ((i & m) != 0) == outcome {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn measure_z<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> bool {
        let p1 = self.prob_one(q).clamp(0.0, 1.0);
        let outcome = rng.gen::<f64>() < p1;
        self.collapse(q, outcome, if outcome { p1 } else { 1.0 - p1 });
        outcome
    }

    pub fn measure_x<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> bool {
        self.h(q);
        let b = self.measure_z(q, rng);
        self.h(q);
        b
    }

    pub fn prep_zero<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) {
        if self.measure_z(q, rng) {
            self.x(q);
        }
    }

    /// Samples a full computational-basis outcome without collapsing.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if r < acc {
                return i;
            }
        }
        // Rounding left `r` beyond the accumulated mass: take the last
        // index with nonzero weight.
        self.amps
            .iter()
            .rposition(|a| a.norm_sqr() > 0.0)
            .unwrap_or(0)
    }

    /// Applies one operation; measurement outcomes are written to `cbits`.
    pub fn apply<R: Rng + ?Sized>(
        &mut self,
        op: &Op,
        rng: &mut R,
        cbits: &mut [bool],
    ) -> Result<()> {
        for q in op.qubits() {
            self.check(q)?;
        }
        match *op {
            Op::PrepZero(q) => self.prep_zero(q, rng),
            Op::H(q) => self.h(q),
            Op::X(q) => self.x(q),
            Op::Y(q) => self.y(q),
            Op::Z(q) => self.z(q),
            Op::Cnot(c, t) if c != t => self.cnot(c, t),
            Op::Rzz(th, p, q) if p != q => self.rzz(th, p, q),
            Op::Rx(th, q) => self.rx(th, q),
            Op::Rxx(th, p, q) if p != q => self.rxx(th, p, q),
            Op::MeasureZ(q, c) | Op::MeasureX(q, c) => {
                let slot = cbits.get_mut(c).ok_or_else(|| {
                    Error::MalformedGate(format!("classical bit {c} out of range"))
                })?;
                *slot = if matches!(op, Op::MeasureZ(..)) {
                    self.measure_z(q, rng)
                } else {
                    self.measure_x(q, rng)
                };
            }
            _ => return Err(Error::MalformedGate(format!("{op:?}"))),
        }
        Ok(())
    }

    /// `⟨Z_p Z_q⟩`.
    pub fn zz(&self, p: usize, q: usize) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if ((i >> p) ^ (i >> q)) & 1 == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum()
    }
}

/// Executes `circuit` from `|0…0⟩`, sampling measurements from `seed`.
pub fn run_statevector(circuit: &Circuit, seed: u64) -> Result<(StateVector, Vec<bool>)> {
    circuit.validate()?;
    let mut sv = StateVector::new(circuit.width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cbits = vec![false; circuit.n_cbits];
    for g in &circuit.gates {
        sv.apply(&g.op, &mut rng, &mut cbits)?;
    }
    Ok((sv, cbits))
}

/// `⟨ψ|P|ψ⟩` for a Hermitian Pauli string `P` (phase fixed by `Y = iXZ`).
pub fn expectation_pauli(state: &StateVector, pauli: &PauliString) -> Result<f64> {
    if pauli.width != state.width {
        return Err(Error::InvalidArgument(format!(
            "Pauli width {} vs state width {}",
            pauli.width, state.width
        )));
    }
    let (x, z) = (pauli.x as usize, pauli.z as usize);
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, a) in state.amps.iter().enumerate() {
        let term = state.amps[i ^ x].conj() * a;
        if (i & z).count_ones() % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    let phase = I.powu((x & z).count_ones());
    Ok((phase * acc).re)
}
