//! Run and sweep configuration files.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificate::{EmbeddingConstants, DEFAULT_MARGIN};
use crate::eigenbasis::DomainSpec;
use crate::error::{Error, Result};
use crate::galerkin::ModelParams;
use crate::integrator::IntegratorConfig;
use crate::monitors::MonitorToggles;
use crate::nonlinearity::NonlinearitySpec;

use super::output::COLUMNS;

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "JMGT_OUTPUT_ROOT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    Zero,
    /// `u0 = amplitude·e1`, `u1 = velocity·e1`.
    PrincipalMode {
        amplitude: f64,
        #[serde(default)]
        velocity: f64,
    },
    /// `u0_i = amplitude·e^{−rate(i−1)}`, an analytic profile.
    Analytic {
        amplitude: f64,
        rate: f64,
    },
    /// Seeded random `u0` with coefficients bounded by `amplitude/i²`.
    Random {
        amplitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    Coefficients {
        u0: Vec<f64>,
        #[serde(default)]
        u1: Option<Vec<f64>>,
        #[serde(default)]
        u2: Option<Vec<f64>>,
    },
    Preset {
        preset: Preset,
    },
    /// Data built by the blow-up certificate for horizon `t0`.
    Certified {
        t0: f64,
        #[serde(default = "default_margin")]
        margin: f64,
    },
}

fn default_margin() -> f64 {
    DEFAULT_MARGIN
}

fn default_modes() -> usize {
    16
}

fn default_xi0() -> f64 {
    1.0
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_plots() -> Vec<String> {
    vec!["u_inf".into(), "F_N".into()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// Quadrature nodes per axis; derived from the modes when absent.
    #[serde(default)]
    pub quad_nodes: Option<usize>,
    #[serde(default)]
    pub params: ModelParams,
    pub nonlinearity: NonlinearitySpec,
    /// Lower end of the tail and growth hypotheses.
    #[serde(default = "default_xi0")]
    pub xi0: f64,
    pub initial_data: InitialData,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub monitors: MonitorToggles,
    #[serde(default)]
    pub embedding: Option<EmbeddingConstants>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_plots")]
    pub plots: Vec<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        if self.modes == 0 {
            return Err(Error::Config("modes must be at least 1".into()));
        }
        self.params.validate()?;
        self.nonlinearity.build()?;
        if !(self.xi0 > 0.0 && self.xi0.is_finite()) {
            return Err(Error::Config(format!("xi0 must be positive, got {}", self.xi0)));
        }
        self.integrator.validate()?;
        if let Some(c) = &self.embedding {
            c.validate()?;
        }
        for p in &self.plots {
            if !COLUMNS.contains(&p.as_str()) || p == "t" {
                return Err(Error::Config(format!("unknown plot column '{p}'")));
            }
        }
        match &self.initial_data {
            InitialData::Coefficients { u0, u1, u2 } => {
                for (name, v) in [("u0", Some(u0)), ("u1", u1.as_ref()), ("u2", u2.as_ref())] {
                    if let Some(v) = v {
                        if v.len() != self.modes {
                            return Err(Error::Config(format!(
                                "{name} has {} coefficients, expected {}",
                                v.len(),
                                self.modes
                            )));
                        }
                        if v.iter().any(|x| !x.is_finite()) {
                            return Err(Error::Config(format!("{name} has non-finite coefficients")));
                        }
                    }
                }
            }
            InitialData::Preset { preset } => {
                let finite = |x: f64| x.is_finite();
                let ok = match preset {
                    Preset::Zero => true,
                    Preset::PrincipalMode { amplitude, velocity } => finite(*amplitude) && finite(*velocity),
                    Preset::Analytic { amplitude, rate } => finite(*amplitude) && *rate > 0.0 && finite(*rate),
                    Preset::Random { amplitude } => finite(*amplitude),
                };
                if !ok {
                    return Err(Error::Config(format!("invalid preset parameters: {preset:?}")));
                }
            }
            InitialData::Certified { t0, margin } => {
                if !(*t0 > 0.0 && t0.is_finite()) {
                    return Err(Error::Config(format!("certified t0 must be positive, got {t0}")));
                }
                if !(*margin > 0.0 && margin.is_finite()) {
                    return Err(Error::Config(format!("certified margin must be positive, got {margin}")));
                }
            }
        }
        Ok(())
    }

    /// Coefficients of `(u0, u1, u2)` for non-certified data.
    pub fn explicit_data(&self) -> Option<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let n = self.modes;
        let zeros = || vec![0.0; n];
        match &self.initial_data {
            InitialData::Coefficients { u0, u1, u2 } => {
                Some((u0.clone(), u1.clone().unwrap_or_else(zeros), u2.clone().unwrap_or_else(zeros)))
            }
            InitialData::Preset { preset } => {
                let mut u0 = zeros();
                let mut u1 = zeros();
                match preset {
                    Preset::Zero => {}
                    Preset::PrincipalMode { amplitude, velocity } => {
                        u0[0] = *amplitude;
                        u1[0] = *velocity;
                    }
                    Preset::Analytic { amplitude, rate } => {
                        for (i, c) in u0.iter_mut().enumerate() {
                            *c = amplitude * (-rate * i as f64).exp();
                        }
                    }
                    Preset::Random { amplitude } => {
                        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                        for (i, c) in u0.iter_mut().enumerate() {
                            let d = (i + 1) as f64;
                            *c = amplitude * rng.gen_range(-1.0..1.0) / (d * d);
                        }
                    }
                }
                Some((u0, u1, zeros()))
            }
            InitialData::Certified { .. } => None,
        }
    }

    /// Output directory with the environment override applied to relative paths.
    pub fn resolved_output_dir(&self) -> PathBuf {
        resolve_output(&self.output_dir)
    }
}

pub(crate) fn resolve_output(dir: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if dir.is_relative() => PathBuf::from(root).join(dir),
        _ => dir.to_path_buf(),
    }
}

/// Parameters a sweep axis may vary.
pub const SWEEP_PARAMETERS: &[&str] = &["tau", "alpha", "beta", "gamma", "k", "amplitude", "t0", "modes"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    #[serde(default)]
    pub grid: Vec<SweepAxis>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<SweepConfig> {
        let cfg: SweepConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base.validate()?;
        for axis in &cfg.grid {
            if !SWEEP_PARAMETERS.contains(&axis.parameter.as_str()) {
                return Err(Error::Config(format!(
                    "unknown sweep parameter '{}' (expected one of {SWEEP_PARAMETERS:?})",
                    axis.parameter
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<SweepConfig> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Cartesian product of the axes; empty when there are no axes or one is empty.
    pub fn points(&self) -> Vec<Vec<(String, f64)>> {
        if self.grid.is_empty() {
            return Vec::new();
        }
        let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for axis in &self.grid {
            let mut next = Vec::with_capacity(points.len() * axis.values.len());
            for p in &points {
                for &v in &axis.values {
                    let mut q = p.clone();
                    q.push((axis.parameter.clone(), v));
                    next.push(q);
                }
            }
            points = next;
        }
        points
    }
}

/// Applies one sweep coordinate to a run configuration.
pub fn apply_parameter(cfg: &mut RunConfig, name: &str, value: f64) -> Result<()> {
    match name {
        "tau" => cfg.params.tau = value,
        "alpha" => cfg.params.alpha = value,
        "beta" => cfg.params.beta = value,
        "gamma" => cfg.params.gamma = value,
        "k" => match &mut cfg.nonlinearity {
            NonlinearitySpec::Quadratic { k } | NonlinearitySpec::Exponential { k } => *k = value,
            NonlinearitySpec::Zero => return Err(Error::Config("sweep over k needs a nonzero nonlinearity".into())),
        },
        "amplitude" => match &mut cfg.initial_data {
            InitialData::Preset { preset } => match preset {
                Preset::PrincipalMode { amplitude, .. }
                | Preset::Analytic { amplitude, .. }
                | Preset::Random { amplitude } => *amplitude = value,
                Preset::Zero => return Err(Error::Config("sweep over amplitude needs a nonzero preset".into())),
            },
            _ => return Err(Error::Config("sweep over amplitude needs preset initial data".into())),
        },
        "t0" => match &mut cfg.initial_data {
            InitialData::Certified { t0, .. } => *t0 = value,
            _ => return Err(Error::Config("sweep over t0 needs certified initial data".into())),
        },
        "modes" => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(Error::Config(format!("modes must be a positive integer, got {value}")));
            }
            cfg.modes = value as usize;
        }
        other => return Err(Error::Config(format!("unknown sweep parameter '{other}'"))),
    }
    cfg.validate()
}
