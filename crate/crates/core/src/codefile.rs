//! JSON serialization of codes.
//!
//! Codewords are stored as sparse `{n, re, im}` lists; floats use shortest
//! round-trip formatting, so a reloaded code is bit-identical to the original.

use serde::{Deserialize, Serialize};

use crate::codes::{Code, CodeFamily, CodeParams, CodeSeeds};
use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};

pub const CODE_SCHEMA_VERSION: u32 = 1;
/// Largest truncation dimension accepted from a code file.
pub const MAX_CODE_DIM: usize = 4096;
pub const MAX_ROTATION_ORDER: usize = 1024;
/// Codeword norm tolerance applied on load.
pub const LOAD_NORM_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplitude {
    pub n: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeFile {
    pub schema_version: u32,
    pub family: CodeFamily,
    pub rotation_order: usize,
    pub cutoff_dim: usize,
    pub params: String,
    #[serde(default)]
    pub seeds: Option<CodeSeeds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar_code: Option<f64>,
    pub zero_word: Vec<Amplitude>,
    pub one_word: Vec<Amplitude>,
}

fn sparse(w: &CVector) -> Vec<Amplitude> {
    w.iter()
        .enumerate()
        .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
        .map(|(n, z)| Amplitude { n, re: z.re, im: z.im })
        .collect()
}

fn dense(name: &str, amps: &[Amplitude], dim: usize) -> Result<CVector> {
    let mut v = CVector::zeros(dim);
    let mut seen = vec![false; dim];
    for a in amps {
        if a.n >= dim {
            return Err(Error::Parse(format!("{name} amplitude on level {} beyond cutoff {dim}", a.n)));
        }
        if seen[a.n] {
            return Err(Error::Parse(format!("{name} lists level {} twice", a.n)));
        }
        if !(a.re.is_finite() && a.im.is_finite()) {
            return Err(Error::Parse(format!("{name} amplitude on level {} is not finite", a.n)));
        }
        seen[a.n] = true;
        v[a.n] = C64::new(a.re, a.im);
    }
    Ok(v)
}

impl CodeFile {
    pub fn from_code(code: &Code) -> Self {
        Self {
            schema_version: CODE_SCHEMA_VERSION,
            family: code.family(),
            rotation_order: code.rotation_order(),
            cutoff_dim: code.dim(),
            params: code.params().descriptor(),
            seeds: code.seeds(),
            nbar_code: Some(code.avg_photon()),
            zero_word: sparse(code.zero_word()),
            one_word: sparse(code.one_word()),
        }
    }

    pub fn to_code(&self) -> Result<Code> {
        if self.schema_version != CODE_SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema_version {}", self.schema_version)));
        }
        if !(2..=MAX_CODE_DIM).contains(&self.cutoff_dim) {
            return Err(Error::Parse(format!("cutoff_dim must lie in 2..={MAX_CODE_DIM}")));
        }
        if !(1..=MAX_ROTATION_ORDER).contains(&self.rotation_order) {
            return Err(Error::Parse(format!("rotation_order must lie in 1..={MAX_ROTATION_ORDER}")));
        }
        let params = CodeParams::parse_descriptor(&self.params)?;
        let consistent = match (self.family, params) {
            (CodeFamily::Triv, CodeParams::None) => self.rotation_order == 1,
            (CodeFamily::Bin | CodeFamily::Rand1 | CodeFamily::Rand2, CodeParams::K(_)) => true,
            (CodeFamily::Cat, CodeParams::Alpha(a)) => a > 0.0,
            _ => false,
        };
        if !consistent {
            return Err(Error::Parse(format!(
                "parameters `{}` (order {}) do not fit family {}",
                self.params, self.rotation_order, self.family
            )));
        }
        let zero = dense("zero_word", &self.zero_word, self.cutoff_dim)?;
        let one = dense("one_word", &self.one_word, self.cutoff_dim)?;
        Code::from_parts(self.family, self.rotation_order, params, self.seeds, zero, one, LOAD_NORM_TOL)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn code_to_json(code: &Code) -> Result<String> {
    CodeFile::from_code(code).to_json()
}

/// Parse and validate a code file. Never panics on malformed input.
pub fn code_from_json(text: &str) -> Result<Code> {
    CodeFile::from_json(text)?.to_code()
}
