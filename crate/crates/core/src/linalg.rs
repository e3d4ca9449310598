//! Complex linear algebra over truncated Fock space.
//!
//! All matrices are dense `Complex64`. Vectorization is column-stacking:
//! `vec(rho)[i + j * d] = rho[(i, j)]`, so that `vec(A rho B) = (B^T ⊗ A) vec(rho)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Square operator on a truncated Fock space of dimension `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockOperator {
    matrix: CMatrix,
}

impl FockOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() == 0 || !matrix.is_square() {
            return Err(Error::InvalidDimension(format!(
                "Fock operator must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

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

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidDimension("truncation dimension must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Truncated annihilation operator: `a|n> = sqrt(n) |n-1>`.
pub fn annihilation_op(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let mut m = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    FockOperator::new(m)
}

/// Photon number operator `diag(0, 1, ..., dim - 1)`.
pub fn number_op(dim: usize) -> Result<FockOperator> {
    check_dim(dim)?;
    let diag = CVector::from_fn(dim, |n, _| C64::new(n as f64, 0.0));
    FockOperator::new(CMatrix::from_diagonal(&diag))
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Column-stacking vectorization of a square matrix.
pub fn vec(rho: &CMatrix) -> Result<CVector> {
    if !rho.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "vec expects a square matrix, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    // nalgebra storage is column-major, which is exactly column stacking.
    Ok(CVector::from_column_slice(rho.as_slice()))
}

pub fn unvec(v: &CVector, dim: usize) -> Result<CMatrix> {
    if v.len() != dim * dim {
        return Err(Error::DimensionMismatch(format!(
            "unvec: vector of length {} cannot form a {dim}x{dim} matrix",
            v.len()
        )));
    }
    Ok(CMatrix::from_column_slice(dim, dim, v.as_slice()))
}

/// Which factor of a bipartite space `H_1 ⊗ H_2` to keep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Partial trace of `x` acting on `H_{d1} ⊗ H_{d2}` (row index `i1 * d2 + i2`).
pub fn partial_trace(x: &CMatrix, dims: (usize, usize), keep: Subsystem) -> Result<CMatrix> {
    let (d1, d2) = dims;
    if !x.is_square() || x.nrows() != d1 * d2 {
        return Err(Error::DimensionMismatch(format!(
            "partial trace over ({d1}, {d2}) needs a {0}x{0} matrix, got {1}x{2}",
            d1 * d2,
            x.nrows(),
            x.ncols()
        )));
    }
    let out = match keep {
        Subsystem::First => CMatrix::from_fn(d1, d1, |i, j| (0..d2).map(|k| x[(i * d2 + k, j * d2 + k)]).sum()),
        Subsystem::Second => CMatrix::from_fn(d2, d2, |a, b| (0..d1).map(|k| x[(k * d2 + a, k * d2 + b)]).sum()),
    };
    Ok(out)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `m`.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    hermitian_part(m).symmetric_eigenvalues().iter().fold(f64::INFINITY, |acc, &v| acc.min(v))
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Backward-error bounds for the [m/m] approximants in the 1-norm.
const THETA: [(usize, f64); 4] =
    [(3, 1.495585217958292e-2), (5, 2.539_398_330_063_23e-1), (7, 9.504178996162932e-1), (9, 2.097847961257068e0)];
const THETA_13: f64 = 5.371920351148152;

fn scaled(m: &CMatrix, s: f64) -> CMatrix {
    m * C64::new(s, 0.0)
}

fn pade_low(a: &CMatrix, coeffs: &[f64]) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let ident = CMatrix::identity(n, n);
    let a2 = a * a;
    let degree = coeffs.len() - 1;
    // Even powers A^0, A^2, A^4, ...
    let mut powers = vec![ident.clone(), a2.clone()];
    while powers.len() <= degree / 2 {
        let next = powers.last().unwrap() * &a2;
        powers.push(next);
    }
    let mut u = CMatrix::zeros(n, n);
    let mut v = CMatrix::zeros(n, n);
    for (k, &b) in coeffs.iter().enumerate() {
        let p = &powers[k / 2];
        if k % 2 == 1 {
            u += scaled(p, b);
        } else {
            v += scaled(p, b);
        }
    }
    (a * u, v)
}

fn pade13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let b = &PADE13;
    let ident = CMatrix::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (scaled(&a6, b[13]) + scaled(&a4, b[11]) + scaled(&a2, b[9]))
        + scaled(&a6, b[7])
        + scaled(&a4, b[5])
        + scaled(&a2, b[3])
        + scaled(&ident, b[1]);
    let u = a * u_inner;
    let v = &a6 * (scaled(&a6, b[12]) + scaled(&a4, b[10]) + scaled(&a2, b[8]))
        + scaled(&a6, b[6])
        + scaled(&a4, b[4])
        + scaled(&a2, b[2])
        + scaled(&ident, b[0]);
    (u, v)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé approximant.
pub fn expm(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("expm needs a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("expm input contains NaN or infinity".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let norm = one_norm(m);
    let solve = |u: CMatrix, v: CMatrix| -> Result<CMatrix> {
        let p = &v + &u;
        let q = v - u;
        q.lu().solve(&p).ok_or_else(|| Error::NonFinite("singular Padé denominator in expm".into()))
    };
    for &(degree, theta) in THETA.iter() {
        if norm <= theta {
            let coeffs: &[f64] = match degree {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let (u, v) = pade_low(m, coeffs);
            return solve(u, v);
        }
    }
    let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil().max(0.0) as i32 } else { 0 };
    let a = scaled(m, 2f64.powi(-s));
    let (u, v) = pade13(&a);
    let mut r = solve(u, v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}
