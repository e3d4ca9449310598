//! Choi matrices, logical channels and channel fidelity.
//!
//! Convention: `Choi(E) = sum_ij |i><j| ⊗ E(|i><j|)` with the input factor first,
//! so the Choi matrix of the identity is `sum_ij |ii><jj|` and trace preservation
//! reads `Tr_out Choi = I`.

use crate::codes::Code;
use crate::error::{Error, Result};
use crate::linalg::{
    eigh, hermiticity_residual, max_abs, min_eigenvalue, outer, partial_trace, CMatrix, Subsystem, C64,
};
use crate::noise::Superoperator;

/// Slack allowed on the smallest Choi eigenvalue of a recovery map.
pub const RECOVERY_PSD_TOL: f64 = 1e-7;
/// Slack allowed when validating a Choi matrix handed to [`channel_fidelity`].
pub const FIDELITY_PSD_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    d_in: usize,
    d_out: usize,
    matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn new(d_in: usize, d_out: usize, matrix: CMatrix) -> Result<Self> {
        let n = d_in * d_out;
        if d_in == 0 || d_out == 0 || matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix for {d_in} -> {d_out} must be {n}x{n}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { d_in, d_out, matrix })
    }

    pub fn identity(d: usize) -> Self {
        let mut m = CMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                m[(i * d + i, j * d + j)] = C64::new(1.0, 0.0);
            }
        }
        Self { d_in: d, d_out: d, matrix: m }
    }

    /// Choi matrix of `rho -> sum_k K rho K^†`; each Kraus operator is `d_out x d_in`.
    pub fn from_kraus(kraus: &[CMatrix]) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| Error::InvalidChannel("empty Kraus set".into()))?;
        let (d_out, d_in) = first.shape();
        let mut m = CMatrix::zeros(d_in * d_out, d_in * d_out);
        for k in kraus {
            if k.shape() != (d_out, d_in) {
                return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
            }
            let v = nalgebra::DVector::from_fn(d_in * d_out, |idx, _| k[(idx % d_out, idx / d_out)]);
            m += outer(&v, &v);
        }
        Ok(Self { d_in, d_out, matrix: m })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Apply the channel: `E(rho)_{ab} = sum_ij rho_ij C[(i,a),(j,b)]`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.shape() != (self.d_in, self.d_in) {
            return Err(Error::DimensionMismatch(format!(
                "channel input is {0}x{0}, got {1}x{2}",
                self.d_in,
                rho.nrows(),
                rho.ncols()
            )));
        }
        let (din, dout) = (self.d_in, self.d_out);
        let mut out = CMatrix::zeros(dout, dout);
        for i in 0..din {
            for j in 0..din {
                let r = rho[(i, j)];
                if r == C64::new(0.0, 0.0) {
                    continue;
                }
                for a in 0..dout {
                    for b in 0..dout {
                        out[(a, b)] += r * self.matrix[(i * dout + a, j * dout + b)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `max |Tr_out C - I|`.
    pub fn tp_residual(&self) -> f64 {
        let tr = partial_trace(&self.matrix, (self.d_in, self.d_out), Subsystem::First)
            .expect("dimensions checked at construction");
        let ident = CMatrix::identity(self.d_in, self.d_in);
        crate::linalg::max_abs_diff(&tr, &ident)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(&self.matrix)
    }

    /// Kraus operators from the eigendecomposition, dropping eigenvalues below `cutoff`.
    pub fn kraus(&self, cutoff: f64) -> Vec<CMatrix> {
        let (vals, vecs) = eigh(&self.matrix);
        let (din, dout) = (self.d_in, self.d_out);
        vals.iter()
            .enumerate()
            .filter(|(_, &v)| v > cutoff)
            .map(|(k, &v)| {
                let s = v.sqrt();
                CMatrix::from_fn(dout, din, |a, i| vecs[(i * dout + a, k)] * s)
            })
            .collect()
    }
}

/// Choi matrix of a square superoperator (`d_in = d_out = D`).
pub fn superop_to_choi(s: &Superoperator, d_in: usize, d_out: usize) -> Result<ChoiMatrix> {
    if d_in != s.dim() || d_out != s.dim() {
        return Err(Error::DimensionMismatch(format!(
            "superoperator acts on dimension {}, requested {d_in} -> {d_out}",
            s.dim()
        )));
    }
    let m = s.to_matrix();
    let d = d_in;
    let choi = CMatrix::from_fn(d * d, d * d, |row, col| {
        let (i, a) = (row / d, row % d);
        let (j, b) = (col / d, col % d);
        m[(a + b * d, i + j * d)]
    });
    ChoiMatrix::new(d, d, choi)
}

pub fn choi_to_superop(c: &ChoiMatrix) -> Result<Superoperator> {
    if c.d_in != c.d_out {
        return Err(Error::DimensionMismatch("only square channels have a square superoperator".into()));
    }
    let d = c.d_in;
    let m = CMatrix::from_fn(d * d, d * d, |row, col| {
        let (a, b) = (row % d, row / d);
        let (i, j) = (col % d, col / d);
        c.matrix[(i * d + a, j * d + b)]
    });
    Superoperator::from_matrix(d, m)
}

/// Logical qubit channel (Choi matrix with `d_in = d_out = 2`).
#[derive(Clone, Debug, PartialEq)]
pub struct LogicalChannel {
    choi: ChoiMatrix,
}

impl LogicalChannel {
    pub fn new(choi: ChoiMatrix) -> Result<Self> {
        if choi.d_in != 2 || choi.d_out != 2 {
            return Err(Error::DimensionMismatch(format!(
                "logical channel must be 2 -> 2, got {} -> {}",
                choi.d_in, choi.d_out
            )));
        }
        Ok(Self { choi })
    }

    pub fn choi(&self) -> &ChoiMatrix {
        &self.choi
    }
}

fn check_recovery(recovery: &ChoiMatrix) -> Result<()> {
    let scale = max_abs(recovery.matrix()).max(1.0);
    if recovery.hermiticity_residual() > 1e-8 * scale {
        return Err(Error::InvalidRecovery("recovery Choi matrix is not Hermitian".into()));
    }
    let min = recovery.min_eigenvalue();
    if min < -RECOVERY_PSD_TOL {
        return Err(Error::InvalidRecovery(format!(
            "recovery is not completely positive (min Choi eigenvalue {min:e})"
        )));
    }
    let tp = recovery.tp_residual();
    if tp > RECOVERY_PSD_TOL {
        return Err(Error::InvalidRecovery(format!("recovery is not trace preserving (residual {tp:e})")));
    }
    Ok(())
}

/// Logical channel `recovery ∘ noise ∘ encoder`, where the recovery maps the
/// noise space straight to the logical qubit (decoder folded in).
pub fn compose_logical_channel(code: &Code, noise: &Superoperator, recovery: &ChoiMatrix) -> Result<LogicalChannel> {
    let d = noise.dim();
    if recovery.d_in != d || recovery.d_out != 2 {
        return Err(Error::DimensionMismatch(format!(
            "recovery must map {d} -> 2, got {} -> {}",
            recovery.d_in, recovery.d_out
        )));
    }
    check_recovery(recovery)?;
    let enc = code.encoder_isometry(d)?;
    let words = [enc.column(0).into_owned(), enc.column(1).into_owned()];
    let mut logical = CMatrix::zeros(4, 4);
    for a in 0..2 {
        for b in 0..2 {
            let noisy = noise.apply(&outer(&words[a], &words[b]))?;
            let out = recovery.apply(&noisy)?;
            for x in 0..2 {
                for y in 0..2 {
                    logical[(a * 2 + x, b * 2 + y)] = out[(x, y)];
                }
            }
        }
    }
    LogicalChannel::new(ChoiMatrix::new(2, 2, logical)?)
}

/// `(Tr C + <Φ|C|Φ>) / (d (d + 1))` with `|Φ> = sum_i |ii>`; equal to the Kraus form
/// `(Tr sum_k M_k^† M_k + sum_k |Tr M_k|^2) / (d (d + 1))`.
pub fn choi_fidelity(choi: &ChoiMatrix) -> Result<f64> {
    if choi.d_in != choi.d_out {
        return Err(Error::DimensionMismatch("fidelity to the identity needs d_in = d_out".into()));
    }
    let scale = max_abs(choi.matrix()).max(1.0);
    if choi.hermiticity_residual() > 1e-8 * scale {
        return Err(Error::InvalidChannel("Choi matrix is not Hermitian".into()));
    }
    let min = choi.min_eigenvalue();
    if min < -FIDELITY_PSD_TOL * scale {
        return Err(Error::InvalidChannel(format!(
            "Choi matrix is not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    let d = choi.d_in;
    let m = choi.matrix();
    let tr: f64 = (0..d * d).map(|k| m[(k, k)].re).sum();
    let mut overlap = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            overlap += m[(i * d + i, j * d + j)];
        }
    }
    Ok((tr + overlap.re) / (d * (d + 1)) as f64)
}

pub fn channel_fidelity(ch: &LogicalChannel) -> Result<f64> {
    choi_fidelity(&ch.choi)
}
