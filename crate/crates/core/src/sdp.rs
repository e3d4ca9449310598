//! Primal-dual interior point solver for block-diagonal complex Hermitian SDPs.
//!
//! Primal: minimize `<C, X>` subject to `<A_k, X> = b_k`, `X ⪰ 0`.
//! Dual:   maximize `b · y` subject to `sum_k y_k A_k + Z = C`, `Z ⪰ 0`.
//!
//! `X`, `Z`, `C` are block diagonal; each `A_k` is a sparse Hermitian matrix whose
//! entries may touch several blocks. Search directions are HKM with a Mehrotra
//! predictor-corrector; infeasible starting points are allowed.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_part, CMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparseEntry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: C64,
}

/// One equality constraint `<A, X> = rhs`. Entry lists must describe a Hermitian
/// matrix: an off-diagonal `(r, c, v)` needs its partner `(c, r, conj v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub entries: Vec<SparseEntry>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct BlockSdp {
    pub blocks: Vec<usize>,
    pub cost: Vec<CMatrix>,
    pub constraints: Vec<Constraint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSettings {
    pub max_iterations: usize,
    pub feasibility_tol: f64,
    pub gap_tol: f64,
    /// Acceptance thresholds for a stalled run to be reported as near-optimal.
    pub near_optimal_tol: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { max_iterations: 100, feasibility_tol: 1e-8, gap_tol: 1e-8, near_optimal_tol: 1e-6 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Optimal,
    NearOptimal,
    Failed,
}

impl SolverStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverStatus::Optimal => "optimal",
            SolverStatus::NearOptimal => "near-optimal",
            SolverStatus::Failed => "failed",
        }
    }

    pub fn is_usable(self) -> bool {
        !matches!(self, SolverStatus::Failed)
    }
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SolverStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(SolverStatus::Optimal),
            "near-optimal" => Ok(SolverStatus::NearOptimal),
            "failed" => Ok(SolverStatus::Failed),
            other => Err(Error::Parse(format!("unknown solver status '{other}'"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: Vec<CMatrix>,
    pub y: Vec<f64>,
    pub z: Vec<CMatrix>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    pub iterations: usize,
    pub status: SolverStatus,
}

struct Measures {
    pobj: f64,
    dobj: f64,
    pinf: f64,
    dinf: f64,
    relgap: f64,
}

impl Measures {
    fn worst(&self) -> f64 {
        self.pinf.max(self.dinf).max(self.relgap)
    }
}

fn frob_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

fn inner(a: &[CMatrix], b: &[CMatrix]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y.iter()).map(|(p, q)| (p.conj() * q).re).sum::<f64>()).sum()
}

impl BlockSdp {
    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() || self.blocks.contains(&0) {
            return Err(Error::InvalidDimension("SDP blocks must be non-empty".into()));
        }
        if self.cost.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch("one cost matrix per block required".into()));
        }
        for (c, &n) in self.cost.iter().zip(&self.blocks) {
            if c.shape() != (n, n) {
                return Err(Error::DimensionMismatch("cost block has wrong shape".into()));
            }
        }
        for k in &self.constraints {
            if k.entries.is_empty() || !k.rhs.is_finite() {
                return Err(Error::InvalidParameter("empty or non-finite constraint".into()));
            }
            for e in &k.entries {
                let n = *self
                    .blocks
                    .get(e.block)
                    .ok_or_else(|| Error::DimensionMismatch(format!("constraint references block {}", e.block)))?;
                if e.row >= n || e.col >= n {
                    return Err(Error::DimensionMismatch("constraint entry out of range".into()));
                }
            }
        }
        Ok(())
    }

    fn total_dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// `<A_k, X>` for every constraint (real part of `Tr(A_k X)`).
    fn apply_a(&self, x: &[CMatrix]) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints
                .iter()
                .map(|k| k.entries.iter().map(|e| (e.value * x[e.block][(e.col, e.row)]).re).sum::<f64>()),
        )
    }

    fn apply_at(&self, y: &DVector<f64>) -> Vec<CMatrix> {
        let mut out: Vec<CMatrix> = self.blocks.iter().map(|&n| CMatrix::zeros(n, n)).collect();
        for (k, yk) in self.constraints.iter().zip(y.iter()) {
            for e in &k.entries {
                out[e.block][(e.row, e.col)] += e.value * *yk;
            }
        }
        out
    }

    fn measures(&self, x: &[CMatrix], y: &DVector<f64>, z: &[CMatrix], b: &DVector<f64>) -> Measures {
        let pobj = inner(&self.cost, x);
        let dobj = b.dot(y);
        let rp = b - self.apply_a(x);
        let aty = self.apply_at(y);
        let cnorm = self.cost.iter().map(frob_sq).sum::<f64>().sqrt();
        let rd: f64 = self.cost.iter().zip(&aty).zip(z).map(|((c, a), zb)| frob_sq(&(c - a - zb))).sum::<f64>().sqrt();
        Measures {
            pobj,
            dobj,
            pinf: rp.norm() / (1.0 + b.norm()),
            dinf: rd / (1.0 + cnorm),
            relgap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        }
    }

    /// Schur complement `M_ij = Re Tr(A_i X A_j Z^{-1})`.
    fn schur(&self, x: &[CMatrix], zinv: &[CMatrix]) -> DMatrix<f64> {
        let m = self.constraints.len();
        let mut out = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            let ai = &self.constraints[i].entries;
            for j in i..m {
                let aj = &self.constraints[j].entries;
                let mut acc = C64::new(0.0, 0.0);
                for e in ai {
                    let xb = &x[e.block];
                    let zb = &zinv[e.block];
                    for f in aj {
                        if f.block != e.block {
                            continue;
                        }
                        acc += e.value * f.value * xb[(e.col, f.row)] * zb[(f.col, e.row)];
                    }
                }
                out[(i, j)] = acc.re;
                out[(j, i)] = acc.re;
            }
        }
        out
    }
}

fn cholesky_lower(m: &CMatrix) -> Option<CMatrix> {
    Cholesky::<C64, Dyn>::new(m.clone()).map(|c| c.l())
}

fn inverse_pd(m: &CMatrix) -> Option<CMatrix> {
    Cholesky::<C64, Dyn>::new(m.clone()).map(|c| hermitian_part(&c.inverse()))
}

/// Largest `alpha <= 1` keeping `X + alpha dX ⪰ 0`, scaled back by `tau`.
fn step_length(l: &[CMatrix], d: &[CMatrix], tau: f64) -> f64 {
    let mut alpha = f64::INFINITY;
    for (lb, db) in l.iter().zip(d) {
        let Some(tmp) = lb.solve_lower_triangular(db) else {
            return 0.0;
        };
        let Some(s) = lb.solve_lower_triangular(&tmp.adjoint()) else {
            return 0.0;
        };
        let s = hermitian_part(&s.adjoint());
        let lam = s.symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &v| a.min(v));
        if lam < 0.0 {
            alpha = alpha.min(-1.0 / lam);
        }
    }
    (tau * alpha).min(1.0)
}

fn solve_spd(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = m.clone().cholesky() {
        return Some(ch.solve(rhs));
    }
    let scale = m.diagonal().amax().max(1e-300);
    let mut reg = m.clone();
    for i in 0..reg.nrows() {
        reg[(i, i)] += 1e-13 * scale;
    }
    if let Some(ch) = reg.cholesky() {
        return Some(ch.solve(rhs));
    }
    m.clone().lu().solve(rhs)
}

pub fn solve(problem: &BlockSdp, settings: &SdpSettings) -> Result<SdpSolution> {
    problem.validate()?;
    let m = problem.constraints.len();
    let n_total = problem.total_dim() as f64;
    let b = DVector::from_iterator(m, problem.constraints.iter().map(|k| k.rhs));

    let a_norms: Vec<f64> =
        problem.constraints.iter().map(|k| k.entries.iter().map(|e| e.value.norm_sqr()).sum::<f64>().sqrt()).collect();
    let cnorm = problem.cost.iter().map(frob_sq).sum::<f64>().sqrt();
    let sqrt_n = n_total.sqrt();
    let xi = problem
        .constraints
        .iter()
        .zip(&a_norms)
        .map(|(k, an)| (1.0 + k.rhs.abs()) / (1.0 + an))
        .fold(10f64.max(sqrt_n), |acc, v| acc.max(sqrt_n * v));
    let eta = a_norms.iter().fold(10f64.max(sqrt_n).max(cnorm), |acc, &v| acc.max(v));

    let mut x: Vec<CMatrix> = problem.blocks.iter().map(|&n| CMatrix::identity(n, n) * C64::new(xi, 0.0)).collect();
    let mut z: Vec<CMatrix> = problem.blocks.iter().map(|&n| CMatrix::identity(n, n) * C64::new(eta, 0.0)).collect();
    let mut y = DVector::<f64>::zeros(m);

    // (worst residual, X, y, Z, iteration)
    type Iterate = (f64, Vec<CMatrix>, DVector<f64>, Vec<CMatrix>, usize);
    let mut best: Option<Iterate> = None;
    let mut iterations = 0;
    let mut status = SolverStatus::Failed;

    for iter in 0..=settings.max_iterations {
        iterations = iter;
        let meas = problem.measures(&x, &y, &z, &b);
        if !meas.worst().is_finite() {
            break;
        }
        if best.as_ref().is_none_or(|bst| meas.worst() < bst.0) {
            best = Some((meas.worst(), x.clone(), y.clone(), z.clone(), iter));
        }
        if meas.pinf <= settings.feasibility_tol
            && meas.dinf <= settings.feasibility_tol
            && meas.relgap <= settings.gap_tol
        {
            status = SolverStatus::Optimal;
            break;
        }
        if iter == settings.max_iterations {
            break;
        }

        let Some(zinv) = z.iter().map(inverse_pd).collect::<Option<Vec<_>>>() else {
            break;
        };
        let Some(lx) = x.iter().map(cholesky_lower).collect::<Option<Vec<_>>>() else {
            break;
        };
        let Some(lz) = z.iter().map(cholesky_lower).collect::<Option<Vec<_>>>() else {
            break;
        };

        let mu = inner(&x, &z) / n_total;
        let rp = &b - problem.apply_a(&x);
        let aty = problem.apply_at(&y);
        let rd: Vec<CMatrix> =
            problem.cost.iter().zip(&aty).zip(&z).map(|((c, a), zb)| hermitian_part(&(c - a - zb))).collect();
        let x_rd_zinv: Vec<CMatrix> = x.iter().zip(&rd).zip(&zinv).map(|((xb, rb), zi)| xb * rb * zi).collect();
        let a_xrz = problem.apply_a(&x_rd_zinv);
        let schur = problem.schur(&x, &zinv);

        let direction = |g: &[CMatrix]| -> Option<(Vec<CMatrix>, DVector<f64>, Vec<CMatrix>)> {
            let rhs = &rp - problem.apply_a(g) + &a_xrz;
            let dy = solve_spd(&schur, &rhs)?;
            let atdy = problem.apply_at(&dy);
            let dz: Vec<CMatrix> = rd.iter().zip(&atdy).map(|(r, a)| r - a).collect();
            let dx: Vec<CMatrix> = g
                .iter()
                .zip(&x)
                .zip(&dz)
                .zip(&zinv)
                .map(|(((gb, xb), dzb), zi)| hermitian_part(&(gb - xb * dzb * zi)))
                .collect();
            Some((dx, dy, dz))
        };

        let g_pred: Vec<CMatrix> = x.iter().map(|xb| -xb).collect();
        let Some((dx_p, _, dz_p)) = direction(&g_pred) else {
            break;
        };
        let ap = step_length(&lx, &dx_p, 1.0);
        let ad = step_length(&lz, &dz_p, 1.0);
        let x_trial: Vec<CMatrix> = x.iter().zip(&dx_p).map(|(a, d)| a + d * C64::new(ap, 0.0)).collect();
        let z_trial: Vec<CMatrix> = z.iter().zip(&dz_p).map(|(a, d)| a + d * C64::new(ad, 0.0)).collect();
        let ratio = (inner(&x_trial, &z_trial) / (mu * n_total)).max(0.0);
        let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = ratio.powf(expon).min(1.0);

        let g_corr: Vec<CMatrix> = x
            .iter()
            .zip(&zinv)
            .zip(dx_p.iter().zip(&dz_p))
            .map(|((xb, zi), (dxb, dzb))| zi * C64::new(sigma * mu, 0.0) - xb - dxb * dzb * zi)
            .collect();
        let Some((dx, dy, dz)) = direction(&g_corr) else {
            break;
        };
        let tau = 0.9 + 0.09 * ap.min(ad);
        let ap = step_length(&lx, &dx, tau);
        let ad = step_length(&lz, &dz, tau);
        if ap <= 0.0 && ad <= 0.0 {
            break;
        }
        for (xb, d) in x.iter_mut().zip(&dx) {
            *xb = hermitian_part(&(&*xb + d * C64::new(ap, 0.0)));
        }
        for (zb, d) in z.iter_mut().zip(&dz) {
            *zb = hermitian_part(&(&*zb + d * C64::new(ad, 0.0)));
        }
        y += dy * ad;
    }

    if status != SolverStatus::Optimal {
        if let Some((_, bx, by, bz, _)) = best {
            x = bx;
            y = by;
            z = bz;
        }
    }
    let meas = problem.measures(&x, &y, &z, &b);
    if status != SolverStatus::Optimal && meas.worst() <= settings.near_optimal_tol {
        status = SolverStatus::NearOptimal;
    }
    Ok(SdpSolution {
        x,
        y: y.iter().copied().collect(),
        z,
        primal_objective: meas.pobj,
        dual_objective: meas.dobj,
        primal_infeasibility: meas.pinf,
        dual_infeasibility: meas.dinf,
        relative_gap: meas.relgap,
        iterations,
        status,
    })
}
