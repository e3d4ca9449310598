use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::codes::{build_code, Code, CodeFamily, CodeParams, CodeSeeds};
use crate::error::{Error, Result};
use crate::noise::NoisePoint;
use crate::sdp::SolverStatus;

/// Floor applied to reported infidelities.
pub const INFIDELITY_FLOOR: f64 = 1e-7;

pub const RECORD_HEADER: [&str; 13] = [
    "family",
    "N",
    "param",
    "seed0",
    "seed1",
    "kappa_l_t",
    "kappa_phi_t",
    "cutoff_D",
    "fidelity",
    "infidelity",
    "nbar_code",
    "solver_status",
    "runtime_ms",
];

pub fn floored_infidelity(fidelity: f64) -> f64 {
    if fidelity.is_nan() {
        return f64::NAN;
    }
    (1.0 - fidelity).max(INFIDELITY_FLOOR)
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub family: CodeFamily,
    #[serde(rename = "N")]
    pub n: usize,
    pub param: String,
    pub seed0: Option<u64>,
    pub seed1: Option<u64>,
    pub kappa_l_t: f64,
    pub kappa_phi_t: f64,
    #[serde(rename = "cutoff_D")]
    pub cutoff_d: usize,
    pub fidelity: f64,
    pub infidelity: f64,
    pub nbar_code: f64,
    pub solver_status: SolverStatus,
    pub runtime_ms: f64,
}

impl SweepRecord {
    pub fn noise(&self) -> NoisePoint {
        NoisePoint { kappa_l_t: self.kappa_l_t, kappa_phi_t: self.kappa_phi_t }
    }

    pub fn is_failed(&self) -> bool {
        self.solver_status == SolverStatus::Failed || !self.fidelity.is_finite()
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let opt = |s: Option<u64>| s.map(|v| v.to_string()).unwrap_or_default();
        vec![
            self.family.to_string(),
            self.n.to_string(),
            self.param.clone(),
            opt(self.seed0),
            opt(self.seed1),
            fmt_f64(self.kappa_l_t),
            fmt_f64(self.kappa_phi_t),
            self.cutoff_d.to_string(),
            fmt_f64(self.fidelity),
            fmt_f64(self.infidelity),
            fmt_f64(self.nbar_code),
            self.solver_status.to_string(),
            fmt_f64(self.runtime_ms),
        ]
    }

    /// Rebuild the evaluated code; random families need the sweep's master seed.
    pub fn rebuild_code(&self, master_seed: u64) -> Result<Code> {
        let params = CodeParams::parse_descriptor(&self.param)?;
        let seeds = match (self.seed0, self.seed1) {
            (Some(z), Some(o)) => Some(CodeSeeds { master: master_seed, zero_stream: z, one_stream: o }),
            (None, None) => None,
            _ => return Err(Error::Parse("record carries only one seed".into())),
        };
        build_code(self.family, self.n, params, seeds)
    }

    fn check(&self) -> Result<()> {
        if !self.kappa_l_t.is_finite() || !self.kappa_phi_t.is_finite() {
            return Err(Error::Parse("record has non-finite noise values".into()));
        }
        CodeParams::parse_descriptor(&self.param)?;
        Ok(())
    }
}

pub fn write_records<W: Write>(out: W, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Parse a record table; the header must match [`RECORD_HEADER`] exactly.
pub fn read_records<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(RECORD_HEADER.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected record header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<SweepRecord>() {
        let rec = row?;
        rec.check()?;
        out.push(rec);
    }
    Ok(out)
}
