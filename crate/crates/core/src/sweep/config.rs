use serde::{Deserialize, Serialize};

use crate::codes::CodeFamily;
use crate::error::{Error, Result};
use crate::noise::NoisePoint;
use crate::sdp::SdpSettings;

/// Logarithmically spaced axis from `min` with `points_per_decade` points per
/// decade; the point count is `round(decades * ppd) + 1`, so the last value can
/// overshoot `max` by less than half a step.
pub fn noise_grid(min: f64, max: f64, points_per_decade: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min > 0.0 && min < max) {
        return Err(Error::InvalidGrid(format!("need 0 < min < max, got min={min}, max={max}")));
    }
    if !(points_per_decade.is_finite() && points_per_decade > 0.0) {
        return Err(Error::InvalidGrid("points per decade must be positive".into()));
    }
    let (lo, hi) = (min.log10(), max.log10());
    let steps = ((hi - lo) * points_per_decade + 0.5).floor();
    if steps > 10_000.0 {
        return Err(Error::InvalidGrid("noise axis longer than 10001 points".into()));
    }
    let steps = steps as usize;
    Ok((0..=steps).map(|k| 10f64.powf(lo + k as f64 / points_per_decade)).collect())
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|k| if k == count - 1 { hi } else { (a + (b - a) * k as f64 / (count - 1) as f64).exp() })
                .collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum GridMode {
    /// Cartesian product of the axis with itself.
    Full,
    /// `kappa_l t = kappa_phi t` along the axis.
    Diagonal,
    /// Fixed loss, dephasing along the axis.
    LossColumn { kappa_l_t: f64 },
    /// Fixed dephasing, loss along the axis.
    DephasingRow { kappa_phi_t: f64 },
    /// Explicit list.
    Points { points: Vec<NoisePoint> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points_per_decade: f64,
    pub mode: GridMode,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { min: 1e-3, max: 0.25, points_per_decade: 5.0, mode: GridMode::Full }
    }
}

impl GridSpec {
    pub fn axis(&self) -> Result<Vec<f64>> {
        noise_grid(self.min, self.max, self.points_per_decade)
    }

    /// Noise points in sweep order (loss outer, dephasing inner).
    pub fn points(&self) -> Result<Vec<NoisePoint>> {
        let pts: Vec<NoisePoint> = match &self.mode {
            GridMode::Points { points } => points.clone(),
            mode => {
                let axis = self.axis()?;
                match mode {
                    GridMode::Full => axis
                        .iter()
                        .flat_map(|&l| axis.iter().map(move |&p| NoisePoint { kappa_l_t: l, kappa_phi_t: p }))
                        .collect(),
                    GridMode::Diagonal => axis.iter().map(|&v| NoisePoint { kappa_l_t: v, kappa_phi_t: v }).collect(),
                    GridMode::LossColumn { kappa_l_t } => {
                        axis.iter().map(|&v| NoisePoint { kappa_l_t: *kappa_l_t, kappa_phi_t: v }).collect()
                    }
                    GridMode::DephasingRow { kappa_phi_t } => {
                        axis.iter().map(|&v| NoisePoint { kappa_l_t: v, kappa_phi_t: *kappa_phi_t }).collect()
                    }
                    GridMode::Points { .. } => unreachable!(),
                }
            }
        };
        if pts.is_empty() {
            return Err(Error::InvalidGrid("noise grid is empty".into()));
        }
        for p in &pts {
            p.validate()?;
        }
        Ok(pts)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub families: Vec<CodeFamily>,
    pub n_set: Vec<usize>,
    pub bin_k: Vec<usize>,
    pub cat_alpha: Vec<f64>,
    pub rand_k: Vec<usize>,
    pub trials: usize,
    pub grid: GridSpec,
    pub master_seed: u64,
    /// Levels added above each family's minimal simulation cutoff.
    pub extra_levels: usize,
    pub solver: SdpSettings,
}

pub const DEFAULT_MASTER_SEED: u64 = 20_240_601;

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            families: CodeFamily::ALL.to_vec(),
            n_set: vec![2, 3, 4],
            bin_k: (1..=8).collect(),
            cat_alpha: log_space(0.5, 4.0, 20),
            rand_k: (1..=6).collect(),
            trials: 50,
            grid: GridSpec::default(),
            master_seed: DEFAULT_MASTER_SEED,
            extra_levels: 0,
            solver: SdpSettings::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.families.is_empty() {
            return bad("no code families selected");
        }
        let non_trivial = self.families.iter().any(|f| *f != CodeFamily::Triv);
        if non_trivial && self.n_set.is_empty() {
            return bad("rotation order set is empty");
        }
        if self.n_set.iter().any(|&n| n == 0 || n > 16) {
            return bad("rotation orders must lie in 1..=16");
        }
        if self.families.contains(&CodeFamily::Bin) && (self.bin_k.is_empty() || self.bin_k.iter().any(|&k| k > 64)) {
            return bad("binomial K range must be non-empty with K <= 64");
        }
        if self.families.contains(&CodeFamily::Cat)
            && (self.cat_alpha.is_empty() || self.cat_alpha.iter().any(|a| !(a.is_finite() && *a > 0.0 && *a <= 20.0)))
        {
            return bad("cat alpha grid must be non-empty with 0 < alpha <= 20");
        }
        let random = self.families.iter().any(|f| f.is_random());
        if random {
            if self.rand_k.is_empty() || self.rand_k.iter().any(|&k| k > 64) {
                return bad("random-code K range must be non-empty with K <= 64");
            }
            if self.trials == 0 {
                return bad("random families need at least one trial");
            }
        }
        let mut fams = self.families.clone();
        fams.sort();
        fams.dedup();
        if fams.len() != self.families.len() {
            return bad("families listed twice");
        }
        self.grid.points()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_axis_has_thirteen_points() {
        let axis = noise_grid(1e-3, 0.25, 5.0).unwrap();
        assert_eq!(axis.len(), 13);
        assert_eq!(axis[0], 1e-3);
        for (k, v) in axis.iter().enumerate() {
            let expected = 10f64.powf(-3.0 + 0.2 * k as f64);
            assert!((v / expected - 1.0).abs() < 1e-12);
        }
        assert!((axis[12] - 10f64.powf(-0.6)).abs() < 1e-12);
    }

    #[test]
    fn invalid_ranges() {
        assert!(noise_grid(0.1, 0.1, 5.0).is_err());
        assert!(noise_grid(0.0, 0.1, 5.0).is_err());
        assert!(noise_grid(0.2, 0.1, 5.0).is_err());
        assert!(noise_grid(1e-3, 0.1, 0.0).is_err());
    }

    #[test]
    fn diagonal_and_full_modes() {
        let mut spec = GridSpec { mode: GridMode::Diagonal, ..GridSpec::default() };
        let axis = spec.axis().unwrap();
        let diag = spec.points().unwrap();
        assert_eq!(diag.len(), axis.len());
        assert!(diag.iter().zip(&axis).all(|(p, a)| p.kappa_l_t == *a && p.kappa_phi_t == *a));
        spec.mode = GridMode::Full;
        assert_eq!(spec.points().unwrap().len(), 169);
    }

    #[test]
    fn default_config_is_valid() {
        let c = SweepConfig::default();
        c.validate().unwrap();
        assert_eq!(c.cat_alpha.len(), 20);
        assert_eq!(c.cat_alpha[0], 0.5);
        assert_eq!(c.cat_alpha[19], 4.0);
        let mut bad = c.clone();
        bad.trials = 0;
        assert!(bad.validate().is_err());
        bad = c.clone();
        bad.families.clear();
        assert!(bad.validate().is_err());
    }
}
