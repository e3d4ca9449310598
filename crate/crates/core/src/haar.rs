//! Reproducible Haar-random unitaries and pure states.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};

/// A deterministic random stream identified by `(master_seed, stream_id)`.
///
/// Each stream is an independent ChaCha20 stream keyed by the master seed, so the
/// samples drawn from one stream never depend on how many other streams exist or
/// which thread consumes them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeededRng {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeededRng {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self { master_seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HaarUnitary {
    matrix: CMatrix,
}

impl HaarUnitary {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary(dim: usize, rng: SeededRng) -> Result<HaarUnitary> {
    if dim == 0 {
        return Err(Error::InvalidDimension("Haar unitary needs dim >= 1".into()));
    }
    let mut r = rng.rng();
    let ginibre = CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(&mut r));
    let qr = ginibre.qr();
    let mut q = qr.q();
    let upper = qr.r();
    for j in 0..dim {
        let d = upper[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    Ok(HaarUnitary { matrix: q })
}

/// Haar-random unit vector, distributed as the first column of a Haar unitary.
pub fn haar_state(dim: usize, rng: SeededRng) -> Result<CVector> {
    if dim == 0 {
        return Err(Error::InvalidDimension("Haar state needs dim >= 1".into()));
    }
    let mut r = rng.rng();
    loop {
        let v = CVector::from_fn(dim, |_, _| complex_gaussian(&mut r));
        let norm = v.norm();
        if norm > 1e-300 {
            return Ok(v / C64::new(norm, 0.0));
        }
    }
}
