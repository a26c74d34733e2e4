use std::fmt;

use super::{Gate, Op};
use crate::error::{Error, Result};

pub const MAX_PAULI_WIDTH: usize = 64;

/// Phase-free Pauli operator stored as symplectic bit masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    pub width: usize,
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub fn identity(width: usize) -> Self {
        assert!(
            width <= MAX_PAULI_WIDTH,
            "Pauli width {width} exceeds {MAX_PAULI_WIDTH}"
        );
        PauliString { width, x: 0, z: 0 }
    }

    pub fn from_masks(width: usize, x: u64, z: u64) -> Self {
        let p = PauliString::identity(width);
        let m = p.mask();
        PauliString {
            x: x & m,
            z: z & m,
            ..p
        }
    }

    /// Single-qubit factor: 0 = I, 1 = X, 2 = Y, 3 = Z.
    pub fn single(width: usize, q: usize, kind: u8) -> Self {
        let mut p = PauliString::identity(width);
        p.set(q, kind);
        p
    }

    pub fn set(&mut self, q: usize, kind: u8) {
        let b = 1u64 << q;
        self.x &= !b;
        self.z &= !b;
        if kind == 1 || kind == 2 {
            self.x |= b;
        }
        if kind == 2 || kind == 3 {
            self.z |= b;
        }
    }

    pub fn get(&self, q: usize) -> u8 {
        let x = (self.x >> q) & 1;
        let z = (self.z >> q) & 1;
        match (x, z) {
            (0, 0) => 0,
            (1, 0) => 1,
            (1, 1) => 2,
            _ => 3,
        }
    }

    fn mask(&self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }

    /// Product up to phase.
    pub fn mul(&self, other: &PauliString) -> PauliString {
        PauliString {
            width: self.width,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.width {
            f.write_str(["I", "X", "Y", "Z"][self.get(q) as usize])?;
        }
        Ok(())
    }
}

/// Propagates `p` forward through a Clifford segment, returning `U p U†`
/// with the phase dropped.
pub fn conjugate_pauli<'a, I>(segment: I, mut p: PauliString) -> Result<PauliString>
where
    I: IntoIterator<Item = &'a Gate>,
{
    for g in segment {
        match g.op {
            Op::H(q) => {
                let xb = (p.x >> q) & 1;
                let zb = (p.z >> q) & 1;
                p.x = (p.x & !(1 << q)) | (zb << q);
                p.z = (p.z & !(1 << q)) | (xb << q);
            }
            Op::X(_) | Op::Y(_) | Op::Z(_) => {}
            Op::Cnot(c, t) => {
                p.x ^= ((p.x >> c) & 1) << t;
                p.z ^= ((p.z >> t) & 1) << c;
            }
            _ => return Err(Error::NonClifford(g.to_string())),
        }
    }
    Ok(p)
}
