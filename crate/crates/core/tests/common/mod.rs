#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use rotcode::linalg::{eigh, CMatrix, C64};
use rotcode::metrics::ChoiMatrix;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn inv_sqrt(g: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(g);
    let mut out = CMatrix::zeros(g.nrows(), g.ncols());
    for (k, lam) in vals.iter().enumerate() {
        let col = vecs.column(k);
        out += col * col.adjoint() * C64::new(lam.sqrt().recip(), 0.0);
    }
    out
}

/// Random CPTP map `d_in -> d_out` as `rank` Kraus operators.
pub fn random_kraus(d_in: usize, d_out: usize, rank: usize, rng: &mut ChaCha20Rng) -> Vec<CMatrix> {
    let raw: Vec<CMatrix> = (0..rank).map(|_| ginibre(d_out, d_in, rng)).collect();
    let mut g = CMatrix::zeros(d_in, d_in);
    for a in &raw {
        g += a.adjoint() * a;
    }
    let s = inv_sqrt(&g);
    raw.into_iter().map(|a| a * &s).collect()
}

pub fn random_channel(d_in: usize, d_out: usize, rng: &mut ChaCha20Rng) -> ChoiMatrix {
    let rank = rng.random_range(d_in.div_ceil(d_out)..=d_in * d_out);
    ChoiMatrix::from_kraus(&random_kraus(d_in, d_out, rank, rng)).unwrap()
}

/// Average-fidelity Kraus sum `(Tr sum K^†K + sum |Tr K|^2) / (d (d + 1))`.
pub fn kraus_fidelity(kraus: &[CMatrix]) -> f64 {
    let d = kraus[0].nrows();
    let mut norm = 0.0;
    let mut overlap = 0.0;
    for k in kraus {
        norm += (k.adjoint() * k).trace().re;
        overlap += k.trace().norm_sqr();
    }
    (norm + overlap) / (d * (d + 1)) as f64
}

pub fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Loss then dephasing applied to `|m><n|`, written entry by entry.
pub fn analytic_channel_entry(m: usize, n: usize, kl: f64, kphi: f64, p: usize, q: usize) -> C64 {
    if m < p || n < q || m - p != n - q {
        return C64::new(0.0, 0.0);
    }
    let l = m - p;
    let eta = (-kl).exp();
    let mag =
        (binom(m, l) * binom(n, l)).sqrt() * eta.powf((m + n) as f64 / 2.0 - l as f64) * (1.0 - eta).powi(l as i32);
    let offset = m as f64 - n as f64;
    C64::new(mag * (-kphi * offset * offset / 2.0).exp(), 0.0)
}

pub fn bin_path() -> &'static str {
    env!("CARGO_BIN_EXE_rotcode")
}
