//! Wigner functions on a phase-space grid.
//!
//! Convention: `hbar = 1`, `a = (x + i p) / sqrt 2`, `∬ W dx dp = 1`, so the vacuum
//! peaks at `1/pi` and `|1>` reaches `-1/pi` at the origin. Evaluation uses the
//! stable three-term recurrence for the Laguerre matrix elements, exact for a
//! truncated density matrix.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{hermiticity_residual, outer, trace, CMatrix, CVector, C64};

/// Largest accepted axis length when parsing a grid description.
pub const MAX_AXIS_POINTS: usize = 4096;

pub const CSV_CONVENTION: &str = "hbar=1; a=(x+ip)/sqrt(2); integral of W over dx dp = 1; vacuum peak 1/pi";

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseGrid {
    x_values: Vec<f64>,
    p_values: Vec<f64>,
}

fn check_axis(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidGrid(format!("{name} axis is empty")));
    }
    if v.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid(format!("{name} axis has non-finite values")));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!("{name} axis is not strictly increasing")));
    }
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| if k == n - 1 { hi } else { lo + step * k as f64 }).collect()
}

fn parse_axis(name: &str, s: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(Error::InvalidGrid(format!("{name} axis must be min:max:points, got `{s}`")));
    };
    let num = |t: &str| {
        t.trim().parse::<f64>().map_err(|_| Error::InvalidGrid(format!("{name} axis bound `{t}` is not a number")))
    };
    let (lo, hi) = (num(lo)?, num(hi)?);
    let n: usize =
        n.trim().parse().map_err(|_| Error::InvalidGrid(format!("{name} axis size `{n}` is not an integer")))?;
    if !(2..=MAX_AXIS_POINTS).contains(&n) {
        return Err(Error::InvalidGrid(format!("{name} axis needs 2..={MAX_AXIS_POINTS} points")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidGrid(format!("{name} axis needs finite min < max")));
    }
    Ok((lo, hi, n))
}

impl PhaseGrid {
    pub fn new(x_values: Vec<f64>, p_values: Vec<f64>) -> Result<Self> {
        check_axis("x", &x_values)?;
        check_axis("p", &p_values)?;
        Ok(Self { x_values, p_values })
    }

    pub fn uniform(x: (f64, f64, usize), p: (f64, f64, usize)) -> Result<Self> {
        Self::new(linspace(x.0, x.1, x.2), linspace(p.0, p.1, p.2))
    }

    /// Parse `xmin:xmax:nx,pmin:pmax:np`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (xs, ps) =
            spec.split_once(',').ok_or_else(|| Error::InvalidGrid("expected `xmin:xmax:nx,pmin:pmax:np`".into()))?;
        let x = parse_axis("x", xs)?;
        let p = parse_axis("p", ps)?;
        let grid = Self::uniform(x, p)?;
        Ok(grid)
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x_values
    }

    pub fn p_values(&self) -> &[f64] {
        &self.p_values
    }
}

/// Wigner field `W[(i, j)] = W(x_i, p_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    pub grid: PhaseGrid,
    pub values: DMatrix<f64>,
}

fn check_density(rho: &CMatrix) -> Result<()> {
    if !rho.is_square() || rho.nrows() == 0 {
        return Err(Error::DimensionMismatch("density matrix must be square and non-empty".into()));
    }
    if rho.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("density matrix has non-finite entries".into()));
    }
    if hermiticity_residual(rho) > 1e-8 {
        return Err(Error::InvalidParameter("density matrix is not Hermitian".into()));
    }
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("density matrix trace {tr} is not 1")));
    }
    Ok(())
}

fn wigner_at(rho: &CMatrix, x: f64, p: f64, work: &mut Vec<C64>) -> f64 {
    let m = rho.nrows();
    let a = C64::new(x, p) * std::f64::consts::FRAC_1_SQRT_2;
    let two_a = a * 2.0;
    let two_ac = a.conj() * 2.0;
    work.clear();
    work.resize(m, C64::new(0.0, 0.0));
    work[0] = C64::new((-2.0 * a.norm_sqr()).exp() / std::f64::consts::PI, 0.0);
    let mut w = rho[(0, 0)].re * work[0].re;
    for n in 1..m {
        work[n] = two_a * work[n - 1] / (n as f64).sqrt();
        w += 2.0 * (rho[(0, n)] * work[n]).re;
    }
    for row in 1..m {
        let sr = (row as f64).sqrt();
        let mut temp = work[row];
        work[row] = (two_ac * temp - work[row - 1] * sr) / sr;
        w += (rho[(row, row)] * work[row]).re;
        for n in (row + 1)..m {
            let next = (two_a * work[n - 1] - temp * sr) / (n as f64).sqrt();
            temp = work[n];
            work[n] = next;
            w += 2.0 * (rho[(row, n)] * work[n]).re;
        }
    }
    w
}

/// Wigner function at arbitrary phase-space points.
pub fn wigner_points(rho: &CMatrix, points: &[(f64, f64)]) -> Result<Vec<f64>> {
    check_density(rho)?;
    let mut work = Vec::with_capacity(rho.nrows());
    Ok(points.iter().map(|&(x, p)| wigner_at(rho, x, p, &mut work)).collect())
}

pub fn wigner(rho: &CMatrix, grid: &PhaseGrid) -> Result<WignerField> {
    check_density(rho)?;
    let (nx, np) = (grid.x_values.len(), grid.p_values.len());
    let columns: Vec<Vec<f64>> = grid
        .x_values
        .par_iter()
        .map(|&x| {
            let mut work = Vec::with_capacity(rho.nrows());
            grid.p_values.iter().map(|&p| wigner_at(rho, x, p, &mut work)).collect()
        })
        .collect();
    let values = DMatrix::from_fn(nx, np, |i, j| columns[i][j]);
    Ok(WignerField { grid: grid.clone(), values })
}

pub fn pure_state(psi: &CVector) -> Result<CMatrix> {
    let norm = psi.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::InvalidParameter("state vector has zero or non-finite norm".into()));
    }
    let v = psi / C64::new(norm, 0.0);
    Ok(outer(&v, &v))
}

impl WignerField {
    /// Riemann sum of `W` using the grid spacings (trapezoid-free, uniform weights).
    pub fn integral(&self) -> f64 {
        let dx = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { 1.0 };
        self.values.sum() * dx(&self.grid.x_values) * dx(&self.grid.p_values)
    }

    /// CSV with `x,p,W` rows (x outer, p inner) after `#` header lines.
    pub fn write_csv<W: Write>(&self, out: W, extra_header: &[String]) -> Result<()> {
        let mut out = std::io::BufWriter::new(out);
        writeln!(out, "# schema_version=1")?;
        writeln!(out, "# convention: {CSV_CONVENTION}")?;
        for line in extra_header {
            writeln!(out, "# {}", line.replace('\n', " "))?;
        }
        writeln!(out, "x,p,W")?;
        for (i, x) in self.grid.x_values.iter().enumerate() {
            for (j, p) in self.grid.p_values.iter().enumerate() {
                writeln!(out, "{x:.16e},{p:.16e},{:.16e}", self.values[(i, j)])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}
