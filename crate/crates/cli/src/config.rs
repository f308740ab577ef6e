//! Run configuration: one flat TOML file.  Every key is optional; the
//! defaults reproduce the r1 = 1.2, r2 = 1, d = 0.05 configuration.

use std::path::Path;

use serde::Deserialize;
use tvball::oracle_raster::Grid;
use tvball::oracle_tv::Stencil;
use tvball::thresholds::Thresholds;
use tvball::TwoBallConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Lambdas {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Csv,
    Pgm,
    Svg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_r1")]
    pub r1: f64,
    #[serde(default = "default_r2")]
    pub r2: f64,
    #[serde(default = "default_d")]
    pub d: f64,
    pub lambda: Option<Lambdas>,
    #[serde(default = "default_h")]
    pub h: f64,
    /// `[xmin, ymin, xmax, ymax]`; defaults to the hull of S plus `pad`.
    #[serde(rename = "box")]
    pub bbox: Option<[f64; 4]>,
    #[serde(default = "default_pad")]
    pub pad: f64,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Output>,
    /// Absolute levels s for the SVG level lines; default is a spread below
    /// the top level of each field.
    pub levels: Option<Vec<f64>>,
    pub stencil: Option<Stencil>,
    pub max_iters: Option<usize>,
    /// Phase diagram: λ in (0, phase_lambda_max], s in [0, 1].
    pub phase_lambda_max: Option<f64>,
    #[serde(default = "default_phase_n")]
    pub phase_n_lambda: usize,
    #[serde(default = "default_phase_n")]
    pub phase_n_s: usize,
    /// Grid step of the oracle comparisons run by `verify`.
    #[serde(default = "default_verify_h")]
    pub verify_h: f64,
    /// Test hook: added to R1 before `verify` checks it.
    #[serde(default)]
    pub perturb_r1: f64,
}

fn default_r1() -> f64 {
    1.2
}
fn default_r2() -> f64 {
    1.0
}
fn default_d() -> f64 {
    0.05
}
fn default_h() -> f64 {
    1.0 / 128.0
}
fn default_pad() -> f64 {
    0.1
}
fn default_outputs() -> Vec<Output> {
    vec![Output::Csv, Output::Pgm, Output::Svg]
}
fn default_phase_n() -> usize {
    50
}
fn default_verify_h() -> f64 {
    1.0 / 64.0
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.geometry()?;
        positive("h", self.h)?;
        positive("verify_h", self.verify_h)?;
        if !(self.pad.is_finite() && self.pad >= 0.0) {
            return Err(ConfigError::Invalid(format!("pad must be non-negative, got {}", self.pad)));
        }
        if let Some(ls) = &self.lambda {
            let ls = match ls {
                Lambdas::One(l) => std::slice::from_ref(l),
                Lambdas::Many(v) => v.as_slice(),
            };
            if ls.is_empty() {
                return Err(ConfigError::Invalid("lambda list is empty".into()));
            }
            for &l in ls {
                positive("lambda", l)?;
            }
        }
        if let Some(b) = self.bbox {
            if !b.iter().all(|v| v.is_finite()) || b[2] <= b[0] || b[3] <= b[1] {
                return Err(ConfigError::Invalid(format!("box must be [xmin, ymin, xmax, ymax], got {b:?}")));
            }
        }
        if let Some(levels) = &self.levels {
            if levels.iter().any(|s| !(0.0..=1.0).contains(s)) {
                return Err(ConfigError::Invalid("levels must lie in [0, 1]".into()));
            }
        }
        if let Some(l) = self.phase_lambda_max {
            positive("phase_lambda_max", l)?;
        }
        if self.phase_n_lambda == 0 || self.phase_n_s < 2 {
            return Err(ConfigError::Invalid("phase_n_lambda must be >= 1 and phase_n_s >= 2".into()));
        }
        if self.max_iters == Some(0) {
            return Err(ConfigError::Invalid("max_iters must be positive".into()));
        }
        if !self.perturb_r1.is_finite() {
            return Err(ConfigError::Invalid("perturb_r1 must be finite".into()));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<TwoBallConfig, ConfigError> {
        TwoBallConfig::new(self.r1, self.r2, self.d).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    /// Requested λ values, or one per regime of the explicit solution.
    pub fn lambdas(&self, th: &Thresholds) -> Vec<f64> {
        match &self.lambda {
            Some(Lambdas::One(l)) => vec![*l],
            Some(Lambdas::Many(v)) => v.clone(),
            None => default_lambdas(th),
        }
    }

    /// The field grid: the configured box, or the padded hull.
    pub fn grid(&self, cfg: &TwoBallConfig) -> Result<Grid, tvball::oracle_raster::RasterError> {
        match self.bbox {
            Some([x0, y0, x1, y1]) => Grid::covering(x0, y0, x1, y1, self.h),
            None => Grid::around(cfg, self.h, self.pad),
        }
    }
}

pub fn default_lambdas(th: &Thresholds) -> Vec<f64> {
    let l3 = th.lambda3;
    match (th.lambda1, th.lambda2) {
        (Some(l1), Some(l2)) => {
            let mut v = Vec::new();
            if l1 > 0.0 {
                v.push(0.5 * l1);
            }
            if l2 > l1 {
                v.push(0.5 * (l1 + l2));
            }
            v.push(0.5 * (l2 + l3));
            v.push(1.1 * l3);
            v
        }
        _ => vec![0.25 * l3, 0.5 * l3, 1.1 * l3],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_lists() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!((c.r1, c.r2, c.d), (1.2, 1.0, 0.05));
        let c = RunConfig::parse("lambda = 0.3").unwrap();
        assert!(matches!(c.lambda, Some(Lambdas::One(l)) if l == 0.3));
        let c = RunConfig::parse("lambda = [0.1, 0.2]\nstencil = \"upwind\"").unwrap();
        assert!(matches!(c.lambda, Some(Lambdas::Many(ref v)) if v.len() == 2));
        assert_eq!(c.stencil, Some(Stencil::Upwind));
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["r1 = -0.5", "d = -0.1", "h = -1.0", "lambda = []", "colour = 3", "r1 = ", "box = [1.0, 0.0, 0.0, 1.0]"] {
            assert!(RunConfig::parse(text).is_err(), "{text}");
        }
    }
}
