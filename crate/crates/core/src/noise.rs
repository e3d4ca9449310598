//! Simultaneous loss and dephasing as a superoperator.
//!
//! The generator `kl * L[a] + kphi * L[n]` maps `|m><n|` into the span of
//! `|m-j><n-j|`, so it never mixes coherences with different offsets `m - n`.
//! [`loss_dephasing_channel`] exponentiates one small block per offset instead of
//! the full `D^2 x D^2` generator; [`loss_dephasing_channel_dense`] exponentiates
//! the full generator and is kept as the reference route.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{annihilation_op, expm, kron, number_op, unvec, vec, CMatrix, FockOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub kappa_l_t: f64,
    pub kappa_phi_t: f64,
}

impl NoisePoint {
    pub fn new(kappa_l_t: f64, kappa_phi_t: f64) -> Result<Self> {
        let p = Self { kappa_l_t, kappa_phi_t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("kappa_l_t", self.kappa_l_t), ("kappa_phi_t", self.kappa_phi_t)] {
            if !v.is_finite() {
                return Err(Error::InvalidNoise(format!("{name} must be finite, got {v}")));
            }
            if v < 0.0 {
                return Err(Error::InvalidNoise(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    pub fn noiseless() -> Self {
        Self { kappa_l_t: 0.0, kappa_phi_t: 0.0 }
    }

    /// Bit-exact key, used for caching.
    pub fn key(&self) -> (u64, u64) {
        (self.kappa_l_t.to_bits(), self.kappa_phi_t.to_bits())
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Dense(CMatrix),
    /// One `(D - d) x (D - d)` block per coherence offset `d`, acting on the
    /// coefficients of `|j + d><j|` (and identically on `|j><j + d|`).
    Offsets(Vec<CMatrix>),
}

/// Linear map on `D x D` operators, with column-stacking matrix form `D^2 x D^2`.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    repr: Repr,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: CMatrix) -> Result<Self> {
        if dim == 0 || matrix.nrows() != dim * dim || matrix.ncols() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator on dimension {dim} must be {0}x{0}, got {1}x{2}",
                dim * dim,
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { dim, repr: Repr::Dense(matrix) })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, repr: Repr::Dense(CMatrix::identity(dim * dim, dim * dim)) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense `D^2 x D^2` matrix acting on column-stacked operators.
    pub fn to_matrix(&self) -> CMatrix {
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Offsets(blocks) => {
                let d = self.dim;
                let idx = |i: usize, j: usize| i + j * d;
                let mut out = CMatrix::zeros(d * d, d * d);
                for (offset, block) in blocks.iter().enumerate() {
                    let len = d - offset;
                    for m in 0..len {
                        for n in 0..len {
                            let v = block[(m, n)];
                            if v == C64::new(0.0, 0.0) {
                                continue;
                            }
                            out[(idx(m + offset, m), idx(n + offset, n))] = v;
                            if offset > 0 {
                                out[(idx(m, m + offset), idx(n, n + offset))] = v;
                            }
                        }
                    }
                }
                out
            }
        }
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() != self.dim || rho.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "superoperator on dimension {} applied to {}x{} operator",
                self.dim,
                rho.nrows(),
                rho.ncols()
            )));
        }
        match &self.repr {
            Repr::Dense(m) => unvec(&(m * vec(rho)?), self.dim),
            Repr::Offsets(blocks) => {
                let d = self.dim;
                let mut out = CMatrix::zeros(d, d);
                for (offset, block) in blocks.iter().enumerate() {
                    let len = d - offset;
                    let lower = nalgebra::DVector::from_fn(len, |j, _| rho[(j + offset, j)]);
                    let image = block * lower;
                    for j in 0..len {
                        out[(j + offset, j)] = image[j];
                    }
                    if offset > 0 {
                        let upper = nalgebra::DVector::from_fn(len, |j, _| rho[(j, j + offset)]);
                        let image = block * upper;
                        for j in 0..len {
                            out[(j, j + offset)] = image[j];
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// `self ∘ first`: apply `first`, then `self`.
    pub fn compose(&self, first: &Superoperator) -> Result<Superoperator> {
        if self.dim != first.dim {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose superoperators on dimensions {} and {}",
                self.dim, first.dim
            )));
        }
        let repr = match (&self.repr, &first.repr) {
            (Repr::Offsets(a), Repr::Offsets(b)) => Repr::Offsets(a.iter().zip(b).map(|(x, y)| x * y).collect()),
            _ => Repr::Dense(self.to_matrix() * first.to_matrix()),
        };
        Ok(Superoperator { dim: self.dim, repr })
    }

    pub fn scaled(&self, s: f64) -> Superoperator {
        let s = C64::new(s, 0.0);
        let repr = match &self.repr {
            Repr::Dense(m) => Repr::Dense(m * s),
            Repr::Offsets(b) => Repr::Offsets(b.iter().map(|x| x * s).collect()),
        };
        Superoperator { dim: self.dim, repr }
    }

    pub fn add(&self, other: &Superoperator) -> Result<Superoperator> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch("superoperator dimensions differ".into()));
        }
        let repr = match (&self.repr, &other.repr) {
            (Repr::Offsets(a), Repr::Offsets(b)) => Repr::Offsets(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            _ => Repr::Dense(self.to_matrix() + other.to_matrix()),
        };
        Ok(Superoperator { dim: self.dim, repr })
    }
}

/// Superoperator of `D[L] rho = L rho L^† - {L^† L, rho} / 2`:
/// `conj(L) ⊗ L - I ⊗ L^†L / 2 - (L^†L)^T ⊗ I / 2`.
pub fn dissipator_superop(l: &FockOperator) -> Superoperator {
    let l = l.matrix();
    let d = l.nrows();
    let ident = CMatrix::identity(d, d);
    let ldl = l.adjoint() * l;
    let half = C64::new(0.5, 0.0);
    let m = kron(&l.conjugate(), l) - kron(&ident, &ldl) * half - kron(&ldl.transpose(), &ident) * half;
    Superoperator { dim: d, repr: Repr::Dense(m) }
}

/// Dense generator `kl * L[a] + kphi * L[n]` (with the evolution time folded in).
pub fn lindbladian(noise: NoisePoint, dim: usize) -> Result<Superoperator> {
    noise.validate()?;
    let loss = dissipator_superop(&annihilation_op(dim)?);
    let deph = dissipator_superop(&number_op(dim)?);
    loss.scaled(noise.kappa_l_t).add(&deph.scaled(noise.kappa_phi_t))
}

/// Reference route: exponentiate the full dense generator.
pub fn loss_dephasing_channel_dense(noise: NoisePoint, dim: usize) -> Result<Superoperator> {
    let gen = lindbladian(noise, dim)?;
    let m = expm(&gen.to_matrix())?;
    Superoperator::from_matrix(dim, m)
}

fn offset_generator(noise: NoisePoint, dim: usize, offset: usize) -> CMatrix {
    let len = dim - offset;
    let d = offset as f64;
    let mut g = CMatrix::zeros(len, len);
    for j in 0..len {
        let jf = j as f64;
        g[(j, j)] = C64::new(-noise.kappa_l_t * (2.0 * jf + d) / 2.0 - noise.kappa_phi_t * d * d / 2.0, 0.0);
        if j + 1 < len {
            g[(j, j + 1)] = C64::new(noise.kappa_l_t * ((jf + 1.0 + d) * (jf + 1.0)).sqrt(), 0.0);
        }
    }
    g
}

/// The loss-dephasing channel `exp(kl t L[a] + kphi t L[n])` on a truncation of
/// dimension `dim`.
pub fn loss_dephasing_channel(noise: NoisePoint, dim: usize) -> Result<Superoperator> {
    noise.validate()?;
    if dim == 0 {
        return Err(Error::InvalidDimension("channel dimension must be at least 1".into()));
    }
    let blocks = (0..dim).map(|offset| expm(&offset_generator(noise, dim, offset))).collect::<Result<Vec<_>>>()?;
    Ok(Superoperator { dim, repr: Repr::Offsets(blocks) })
}

type ChannelKey = ((u64, u64), usize);

/// Loss-dephasing channels keyed by `(noise point, dimension)`.
#[derive(Debug, Default)]
pub struct ChannelCache {
    inner: RwLock<HashMap<ChannelKey, Arc<Superoperator>>>,
}

impl ChannelCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, noise: NoisePoint, dim: usize) -> Result<Arc<Superoperator>> {
        let key = (noise.key(), dim);
        if let Some(hit) = self.inner.read().expect("channel cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let channel = Arc::new(loss_dephasing_channel(noise, dim)?);
        let mut guard = self.inner.write().expect("channel cache poisoned");
        Ok(Arc::clone(guard.entry(key).or_insert(channel)))
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("channel cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
