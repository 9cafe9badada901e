use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::OfulConfig;
use crate::env::{NoiseFamily, NoiseSpec};
use crate::error::{Error, Result};
use crate::estimator::{HuberParams, ScheduleConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    HvtUcb,
    HeavyOfulGd,
    Oful,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::HvtUcb => "hvt_ucb",
            Algorithm::HeavyOfulGd => "heavy_oful_gd",
            Algorithm::Oful => "oful",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hvt_ucb" => Ok(Algorithm::HvtUcb),
            "heavy_oful_gd" => Ok(Algorithm::HeavyOfulGd),
            "oful" => Ok(Algorithm::Oful),
            other => {
                Err(Error::Config(format!("unknown algorithm {other:?} (expected hvt_ucb, heavy_oful_gd or oful)")))
            }
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    StudentT,
    Gaussian,
}

/// Noise section of the config. Unset fields take per-family defaults:
/// Student-t `df = 2.1, ε = 0.99, ν = 1.31`; Gaussian `std = 1, ε = 1, ν = std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub family: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

impl NoiseConfig {
    pub fn student_t() -> Self {
        Self { family: NoiseKind::StudentT, df: Some(2.1), std: None, epsilon: Some(0.99), nu: Some(1.31) }
    }

    pub fn gaussian() -> Self {
        Self { family: NoiseKind::Gaussian, df: None, std: Some(1.0), epsilon: Some(1.0), nu: Some(1.0) }
    }

    pub fn to_spec(&self) -> Result<NoiseSpec> {
        let spec = match self.family {
            NoiseKind::StudentT => {
                if self.std.is_some() {
                    return Err(Error::Config("`std` does not apply to student_t noise".into()));
                }
                NoiseSpec::new(
                    NoiseFamily::StudentT { df: self.df.unwrap_or(2.1) },
                    self.epsilon.unwrap_or(0.99),
                    self.nu.unwrap_or(1.31),
                )
            }
            NoiseKind::Gaussian => {
                if self.df.is_some() {
                    return Err(Error::Config("`df` does not apply to gaussian noise".into()));
                }
                let std = self.std.unwrap_or(1.0);
                NoiseSpec::new(NoiseFamily::Gaussian { std }, self.epsilon.unwrap_or(1.0), self.nu.unwrap_or(std))
            }
        };
        spec.map_err(|e| Error::Config(e.to_string()))
    }
}

/// A complete experiment description, read from a single JSON document.
///
/// `lambda`, `sigma_min` and `delta` default to `d`, `1/√T` and `1/(8T)`
/// when left unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub algo: Algorithm,
    pub noise: NoiseConfig,
    pub d: usize,
    pub n: usize,
    #[serde(alias = "T")]
    pub horizon: u64,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub lambda: Option<f64>,
    pub sigma_min: Option<f64>,
    pub delta: Option<f64>,
    pub alpha: f64,
    /// Sub-Gaussian scale in OFUL's radius.
    pub oful_r: f64,
    /// Draw a fresh arm set every round instead of keeping one fixed set.
    pub resample_arms: bool,
    /// Run trials one after another so per-round timings are not skewed by
    /// core sharing.
    pub sequential: bool,
    /// Re-derive `V⁻¹` from scratch every this many updates.
    pub inverse_refresh_every: Option<usize>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algo: Algorithm::HvtUcb,
            noise: NoiseConfig::student_t(),
            d: 2,
            n: 50,
            horizon: 18_000,
            trials: 10,
            master_seed: 0,
            s: 1.0,
            l: 1.0,
            lambda: None,
            sigma_min: None,
            delta: None,
            alpha: 4.0,
            oful_r: 1.0,
            resample_arms: false,
            sequential: true,
            inverse_refresh_every: None,
            out_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(self.d as f64)
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min.unwrap_or_else(|| 1.0 / (self.horizon.max(1) as f64).sqrt())
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| 1.0 / (8.0 * self.horizon.max(1) as f64))
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        self.noise.to_spec()
    }

    pub fn schedule_config(&self) -> Result<ScheduleConfig> {
        Ok(ScheduleConfig {
            d: self.d,
            epsilon: self.noise_spec()?.epsilon(),
            alpha: self.alpha,
            lambda: self.lambda(),
            sigma_min: self.sigma_min(),
            delta: self.delta(),
            horizon: self.horizon.max(1),
            s: self.s,
            l: self.l,
        })
    }

    pub fn huber_params(&self) -> Result<HuberParams> {
        HuberParams::new(self.schedule_config()?).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn oful_config(&self) -> OfulConfig {
        OfulConfig { d: self.d, lambda: self.lambda(), s: self.s, l: self.l, delta: self.delta(), r: self.oful_r }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.d == 0 {
            return bad("d must be at least 1".into());
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if !(self.s > 0.0 && self.l > 0.0) {
            return bad("S and L must be positive".into());
        }
        if !(self.oful_r >= 0.0) {
            return bad(format!("oful_r must be >= 0, got {}", self.oful_r));
        }
        self.noise_spec()?;
        self.huber_params()?;
        Ok(())
    }
}
