//! Rotation-symmetric bosonic codes.
//!
//! A code of rotation order `N` stores `|0_N>` on Fock levels `2kN` and `|1_N>` on
//! levels `(2k+1)N`. Every family here (trivial, binomial, cat, one- and
//! two-primitive random) is built by placing amplitudes on that grid.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{haar_state, SeededRng};
use crate::linalg::{outer, CMatrix, CVector, FockOperator, C64};

/// Tail mass allowed beyond the truncation for cat codewords.
pub const CAT_TAIL_BOUND: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeFamily {
    Triv,
    Bin,
    Cat,
    Rand1,
    Rand2,
}

impl CodeFamily {
    pub const ALL: [CodeFamily; 5] =
        [CodeFamily::Triv, CodeFamily::Bin, CodeFamily::Cat, CodeFamily::Rand1, CodeFamily::Rand2];

    pub fn as_str(self) -> &'static str {
        match self {
            CodeFamily::Triv => "triv",
            CodeFamily::Bin => "bin",
            CodeFamily::Cat => "cat",
            CodeFamily::Rand1 => "rand1",
            CodeFamily::Rand2 => "rand2",
        }
    }

    pub fn is_random(self) -> bool {
        matches!(self, CodeFamily::Rand1 | CodeFamily::Rand2)
    }
}

impl fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CodeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "triv" | "trivial" => Ok(CodeFamily::Triv),
            "bin" | "binomial" => Ok(CodeFamily::Bin),
            "cat" => Ok(CodeFamily::Cat),
            "rand1" | "1-rand" => Ok(CodeFamily::Rand1),
            "rand2" | "2-rand" => Ok(CodeFamily::Rand2),
            other => Err(Error::Parse(format!("unknown code family `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeParams {
    None,
    K(usize),
    Alpha(f64),
}

impl CodeParams {
    /// Short descriptor used in tables, e.g. `K=3` or `alpha=1.5`.
    pub fn descriptor(&self) -> String {
        match self {
            CodeParams::None => "-".to_string(),
            CodeParams::K(k) => format!("K={k}"),
            CodeParams::Alpha(a) => format!("alpha={a:.16e}"),
        }
    }

    pub fn parse_descriptor(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "-" || s.is_empty() {
            return Ok(CodeParams::None);
        }
        if let Some(k) = s.strip_prefix("K=") {
            return k.parse().map(CodeParams::K).map_err(|e| Error::Parse(format!("bad K in `{s}`: {e}")));
        }
        if let Some(a) = s.strip_prefix("alpha=") {
            let alpha: f64 = a.parse().map_err(|e| Error::Parse(format!("bad alpha in `{s}`: {e}")))?;
            if !alpha.is_finite() {
                return Err(Error::Parse(format!("non-finite alpha in `{s}`")));
            }
            return Ok(CodeParams::Alpha(alpha));
        }
        Err(Error::Parse(format!("unrecognised parameter descriptor `{s}`")))
    }
}

/// Random streams used to draw the primitives of a random code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSeeds {
    pub master: u64,
    pub zero_stream: u64,
    /// Equal to `zero_stream` for single-primitive codes.
    pub one_stream: u64,
}

/// Number-shift and phase distances of an order-`N` rotation code.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CodeDistance {
    pub d_n: usize,
    pub d_phi: f64,
}

impl CodeDistance {
    pub fn for_order(n: usize) -> Self {
        Self { d_n: n, d_phi: PI / n as f64 }
    }

    /// Shift errors `g` in `[0, N)` are correctable.
    pub fn corrects_shift(&self, g: usize) -> bool {
        g < self.d_n
    }

    /// Rotation errors `phi` in `[0, pi/N)` are correctable.
    pub fn corrects_rotation(&self, phi: f64) -> bool {
        (0.0..self.d_phi).contains(&phi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Word {
    Zero,
    One,
    Plus,
    Minus,
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" | "0" => Ok(Word::Zero),
            "one" | "1" => Ok(Word::One),
            "plus" | "+" => Ok(Word::Plus),
            "minus" | "-" => Ok(Word::Minus),
            other => Err(Error::Parse(format!("unknown codeword `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Code {
    family: CodeFamily,
    rotation_order: usize,
    params: CodeParams,
    seeds: Option<CodeSeeds>,
    zero_word: CVector,
    one_word: CVector,
}

impl Code {
    /// Assemble a code from raw codewords, checking every structural invariant.
    pub fn from_parts(
        family: CodeFamily,
        rotation_order: usize,
        params: CodeParams,
        seeds: Option<CodeSeeds>,
        zero_word: CVector,
        one_word: CVector,
        norm_tol: f64,
    ) -> Result<Self> {
        let code = Self { family, rotation_order, params, seeds, zero_word, one_word };
        code.check_invariants(norm_tol)?;
        Ok(code)
    }

    pub fn family(&self) -> CodeFamily {
        self.family
    }

    pub fn rotation_order(&self) -> usize {
        self.rotation_order
    }

    pub fn params(&self) -> CodeParams {
        self.params
    }

    pub fn seeds(&self) -> Option<CodeSeeds> {
        self.seeds
    }

    /// Truncation dimension the codewords are stored in.
    pub fn dim(&self) -> usize {
        self.zero_word.len()
    }

    pub fn zero_word(&self) -> &CVector {
        &self.zero_word
    }

    pub fn one_word(&self) -> &CVector {
        &self.one_word
    }

    pub fn word(&self, which: Word) -> CVector {
        let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        match which {
            Word::Zero => self.zero_word.clone(),
            Word::One => self.one_word.clone(),
            Word::Plus => (&self.zero_word + &self.one_word) * s,
            Word::Minus => (&self.zero_word - &self.one_word) * s,
        }
    }

    pub fn distance(&self) -> CodeDistance {
        CodeDistance::for_order(self.rotation_order)
    }

    /// Highest Fock level carrying a nonzero amplitude in either codeword.
    pub fn max_occupied_level(&self) -> usize {
        let last = |w: &CVector| w.iter().rposition(|z| z.norm() > 0.0).unwrap_or(0);
        last(&self.zero_word).max(last(&self.one_word))
    }

    fn check_invariants(&self, norm_tol: f64) -> Result<()> {
        let n = self.rotation_order;
        if n == 0 {
            return Err(Error::InvalidParameter("rotation order must be at least 1".into()));
        }
        if self.zero_word.len() != self.one_word.len() || self.zero_word.is_empty() {
            return Err(Error::DimensionMismatch("codewords must share a nonzero dimension".into()));
        }
        if n >= self.zero_word.len() {
            return Err(Error::CutoffTooSmall {
                dim: self.zero_word.len(),
                reason: format!("one codeword needs Fock level {n}"),
            });
        }
        for (name, word, residue) in [("zero", &self.zero_word, 0), ("one", &self.one_word, n)] {
            if word.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite(format!("{name} codeword has non-finite amplitudes")));
            }
            let norm = word.norm();
            if (norm - 1.0).abs() > norm_tol {
                return Err(Error::InvalidParameter(format!("{name} codeword norm {norm} is not 1")));
            }
            if let Some(bad) =
                word.iter().enumerate().position(|(level, z)| z.norm() > 0.0 && level % (2 * n) != residue)
            {
                return Err(Error::InvalidParameter(format!(
                    "{name} codeword has amplitude on Fock level {bad}, off its rotation grid"
                )));
            }
        }
        Ok(())
    }

    /// Copy of the code with codewords zero-padded to dimension `dim`.
    pub fn embedded(&self, dim: usize) -> Result<Self> {
        if dim <= self.max_occupied_level() {
            return Err(Error::CutoffTooSmall {
                dim,
                reason: format!("code occupies level {}", self.max_occupied_level()),
            });
        }
        let resize = |w: &CVector| CVector::from_fn(dim, |i, _| w.get(i).copied().unwrap_or_default());
        Ok(Self { zero_word: resize(&self.zero_word), one_word: resize(&self.one_word), ..self.clone() })
    }

    /// Encoder `S = |0_N><0| + |1_N><1|` as a `dim x 2` isometry.
    pub fn encoder_isometry(&self, dim: usize) -> Result<CMatrix> {
        if dim < self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "encoder dimension {dim} smaller than code dimension {}",
                self.dim()
            )));
        }
        Ok(CMatrix::from_fn(dim, 2, |row, col| {
            let w = if col == 0 { &self.zero_word } else { &self.one_word };
            w.get(row).copied().unwrap_or_default()
        }))
    }

    pub fn code_projector(&self) -> FockOperator {
        let p = outer(&self.zero_word, &self.zero_word) + outer(&self.one_word, &self.one_word);
        FockOperator::new(p).expect("codewords are non-empty")
    }

    /// Average photon number of the code space, `Tr(n P_code) / 2`.
    pub fn avg_photon(&self) -> f64 {
        0.5 * self
            .zero_word
            .iter()
            .zip(self.one_word.iter())
            .enumerate()
            .map(|(n, (a, b))| n as f64 * (a.norm_sqr() + b.norm_sqr()))
            .sum::<f64>()
    }

    /// Largest deviation from the rotation-code symmetries.
    ///
    /// Combines `||R_N w - w||` over both codewords with the logical-Z action of
    /// `R_{2N}`: `|0_N>` and `|1_N>` must be its +1 and -1 eigenvectors, which is
    /// the same as `R_{2N}` exchanging `|+_N>` and `|-_N>`.
    pub fn stabilizer_residual(&self) -> f64 {
        let n = self.rotation_order as f64;
        let rotate =
            |w: &CVector, angle: f64| CVector::from_fn(w.len(), |k, _| w[k] * C64::from_polar(1.0, angle * k as f64));
        let stab = 2.0 * PI / n;
        let logical_z = PI / n;
        let mut worst = 0.0_f64;
        for w in [&self.zero_word, &self.one_word] {
            worst = worst.max((rotate(w, stab) - w).norm());
        }
        worst = worst.max((rotate(&self.zero_word, logical_z) - &self.zero_word).norm());
        worst = worst.max((rotate(&self.one_word, logical_z) + &self.one_word).norm());
        let plus = self.word(Word::Plus);
        let minus = self.word(Word::Minus);
        worst = worst.max((rotate(&plus, logical_z) - &minus).norm());
        worst = worst.max((rotate(&minus, logical_z) - &plus).norm());
        worst
    }
}

fn require_fits(dim: usize, highest: usize) -> Result<()> {
    if dim <= highest {
        Err(Error::CutoffTooSmall { dim, reason: format!("codewords occupy Fock level {highest}") })
    } else {
        Ok(())
    }
}

fn require_order(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidParameter("rotation order N must be at least 1".into()))
    } else {
        Ok(())
    }
}

fn normalized(v: CVector) -> CVector {
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// `|0> , |1>` encoding, recorded with rotation order 1.
pub fn trivial_code(dim: usize) -> Result<Code> {
    require_fits(dim, 1)?;
    let mut zero = CVector::zeros(dim);
    let mut one = CVector::zeros(dim);
    zero[0] = C64::new(1.0, 0.0);
    one[1] = C64::new(1.0, 0.0);
    Ok(Code {
        family: CodeFamily::Triv,
        rotation_order: 1,
        params: CodeParams::None,
        seeds: None,
        zero_word: zero,
        one_word: one,
    })
}

/// Binomial code: amplitude `sqrt(C(K+1, p))` on level `pN`, even `p` in the zero
/// word and odd `p` in the one word, each word normalized.
///
/// `K = 1, N = 2` is the kitten code `{(|0> + |4>)/sqrt 2, |2>}`.
pub fn binomial_code(n: usize, k: usize, dim: usize) -> Result<Code> {
    require_order(n)?;
    let top = k + 1;
    require_fits(dim, top * n)?;
    let mut zero = CVector::zeros(dim);
    let mut one = CVector::zeros(dim);
    for p in 0..=top {
        let amp = C64::new(binomial(top, p).sqrt(), 0.0);
        if p % 2 == 0 {
            zero[p * n] = amp;
        } else {
            one[p * n] = amp;
        }
    }
    Ok(Code {
        family: CodeFamily::Bin,
        rotation_order: n,
        params: CodeParams::K(k),
        seeds: None,
        zero_word: normalized(zero),
        one_word: normalized(one),
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Log-weights `2 ln(alpha^m / sqrt(m!))` of the Poisson amplitudes on the grid
/// `m = kN`, for all `k` with non-negligible weight.
fn cat_log_weights(n: usize, alpha: f64) -> Vec<(usize, f64)> {
    let ln_a = alpha.ln();
    let mut out = Vec::new();
    let mut ln_fact = 0.0;
    let mut last_level = 0;
    let mut peak = f64::NEG_INFINITY;
    for k in 0.. {
        let m = k * n;
        for i in (last_level + 1)..=m {
            ln_fact += (i as f64).ln();
        }
        last_level = m;
        let w = 2.0 * m as f64 * ln_a - ln_fact;
        peak = peak.max(w);
        out.push((m, w));
        // Past the Poisson peak and negligible against it: stop.
        if m as f64 > alpha * alpha + 1.0 && w < peak - 80.0 {
            break;
        }
    }
    out
}

/// Smallest truncation for which both cat codewords lose less than
/// [`CAT_TAIL_BOUND`] of their norm.
pub fn cat_cutoff(n: usize, alpha: f64) -> Result<usize> {
    require_order(n)?;
    check_alpha(alpha)?;
    let weights = cat_log_weights(n, alpha);
    let mut dim = 2 * n + 1;
    for parity in 0..2 {
        let sector: Vec<(usize, f64)> =
            weights.iter().enumerate().filter(|(k, _)| k % 2 == parity).map(|(_, &w)| w).collect();
        let peak = sector.iter().map(|&(_, w)| w).fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = sector.iter().map(|&(_, w)| (w - peak).exp()).sum();
        let mut tail = total;
        for &(m, w) in &sector {
            tail -= (w - peak).exp();
            if tail / total < CAT_TAIL_BOUND {
                dim = dim.max(m + 1);
                break;
            }
        }
    }
    Ok(dim)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("cat amplitude must be positive, got {alpha}")));
    }
    Ok(())
}

/// Cat code: Poisson-weighted amplitudes `alpha^{kN} / sqrt((kN)!)`, even `k` in the
/// zero word and odd `k` in the one word, each word normalized by direct summation.
pub fn cat_code(n: usize, alpha: f64, dim: usize) -> Result<Code> {
    let needed = cat_cutoff(n, alpha)?;
    if dim < needed {
        return Err(Error::CutoffTooSmall {
            dim,
            reason: format!("cat tail beyond the cutoff exceeds {CAT_TAIL_BOUND:e}; need at least {needed}"),
        });
    }
    let weights = cat_log_weights(n, alpha);
    let peak = weights.iter().map(|&(_, w)| w).fold(f64::NEG_INFINITY, f64::max);
    let mut zero = CVector::zeros(dim);
    let mut one = CVector::zeros(dim);
    for (k, &(m, w)) in weights.iter().enumerate() {
        if m >= dim {
            break;
        }
        let amp = C64::new((0.5 * (w - peak)).exp(), 0.0);
        if k % 2 == 0 {
            zero[m] = amp;
        } else {
            one[m] = amp;
        }
    }
    Ok(Code {
        family: CodeFamily::Cat,
        rotation_order: n,
        params: CodeParams::Alpha(alpha),
        seeds: None,
        zero_word: normalized(zero),
        one_word: normalized(one),
    })
}

/// Expand primitives onto the rotation grid: `psi_k -> |2Nk>`, `phi_k -> |(2k+1)N>`.
pub fn expand_primitives(
    family: CodeFamily,
    n: usize,
    psi: &CVector,
    phi: &CVector,
    dim: usize,
    seeds: Option<CodeSeeds>,
) -> Result<Code> {
    require_order(n)?;
    if psi.is_empty() || psi.len() != phi.len() {
        return Err(Error::DimensionMismatch("primitives must have equal nonzero length".into()));
    }
    let k = psi.len() - 1;
    require_fits(dim, (2 * k + 1) * n)?;
    let mut zero = CVector::zeros(dim);
    let mut one = CVector::zeros(dim);
    for j in 0..=k {
        zero[2 * n * j] = psi[j];
        one[(2 * j + 1) * n] = phi[j];
    }
    let code = Code {
        family,
        rotation_order: n,
        params: CodeParams::K(k),
        seeds,
        zero_word: normalized(zero),
        one_word: normalized(one),
    };
    Ok(code)
}

/// Random code whose two codewords share a single Haar primitive.
pub fn one_rand_code(n: usize, k: usize, dim: usize, rng: SeededRng) -> Result<Code> {
    require_order(n)?;
    require_fits(dim, (2 * k + 1) * n)?;
    let psi = haar_state(k + 1, rng)?;
    let seeds = CodeSeeds { master: rng.master_seed, zero_stream: rng.stream_id, one_stream: rng.stream_id };
    expand_primitives(CodeFamily::Rand1, n, &psi, &psi, dim, Some(seeds))
}

/// Random code with independent Haar primitives for the two codewords.
pub fn two_rand_code(n: usize, k: usize, dim: usize, zero_rng: SeededRng, one_rng: SeededRng) -> Result<Code> {
    require_order(n)?;
    require_fits(dim, (2 * k + 1) * n)?;
    if zero_rng.master_seed != one_rng.master_seed {
        return Err(Error::InvalidParameter("both primitive streams must share a master seed".into()));
    }
    let psi = haar_state(k + 1, zero_rng)?;
    let phi = haar_state(k + 1, one_rng)?;
    let seeds =
        CodeSeeds { master: zero_rng.master_seed, zero_stream: zero_rng.stream_id, one_stream: one_rng.stream_id };
    expand_primitives(CodeFamily::Rand2, n, &psi, &phi, dim, Some(seeds))
}

/// Smallest simulation dimension for a family: loss and dephasing never raise the
/// photon number, so the highest occupied level plus one suffices.
pub fn simulation_cutoff(family: CodeFamily, n: usize, params: CodeParams) -> Result<usize> {
    match (family, params) {
        (CodeFamily::Triv, _) => Ok(2),
        (CodeFamily::Bin, CodeParams::K(k)) => Ok((k + 1) * n + 1),
        (CodeFamily::Cat, CodeParams::Alpha(a)) => cat_cutoff(n, a),
        (CodeFamily::Rand1 | CodeFamily::Rand2, CodeParams::K(k)) => Ok((2 * k + 1) * n + 1),
        (family, params) => Err(Error::InvalidParameter(format!("parameters {params:?} do not fit family {family}"))),
    }
}

/// Build any family at its simulation cutoff. Random families draw their
/// primitives from `(master_seed, zero_stream)` and `(master_seed, one_stream)`.
pub fn build_code(family: CodeFamily, n: usize, params: CodeParams, seeds: Option<CodeSeeds>) -> Result<Code> {
    let dim = simulation_cutoff(family, n, params)?;
    let need_seeds = || seeds.ok_or_else(|| Error::InvalidParameter(format!("family {family} needs random seeds")));
    match (family, params) {
        (CodeFamily::Triv, _) => trivial_code(dim),
        (CodeFamily::Bin, CodeParams::K(k)) => binomial_code(n, k, dim),
        (CodeFamily::Cat, CodeParams::Alpha(a)) => cat_code(n, a, dim),
        (CodeFamily::Rand1, CodeParams::K(k)) => {
            let s = need_seeds()?;
            one_rand_code(n, k, dim, SeededRng::new(s.master, s.zero_stream))
        }
        (CodeFamily::Rand2, CodeParams::K(k)) => {
            let s = need_seeds()?;
            two_rand_code(n, k, dim, SeededRng::new(s.master, s.zero_stream), SeededRng::new(s.master, s.one_stream))
        }
        _ => unreachable!("simulation_cutoff rejects mismatched parameters"),
    }
}
