//! Experiment configuration files (TOML).

use std::fmt;
use std::path::{Path, PathBuf};

use phasekit::dynsys::Method;
use phasekit::models::{Model, ModelConfig};
use phasekit::prc::ImpulseMode;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer};

use crate::CliError;

/// Whole experiment: one model plus per-stage settings.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Where CSVs and reports go, relative to the config file.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub model: ModelConfig,
    #[serde(default)]
    pub integration: IntegrationConfig,
    #[serde(default)]
    pub prc: PrcConfig,
    #[serde(default)]
    pub ppv: PpvConfig,
    pub phasesim: Option<PhasesimConfig>,
    pub lock: Option<LockConfig>,
    /// Directory of the config file; set by [`load_config`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationConfig {
    pub method: Method,
    /// Step used before the period is known.
    pub bootstrap_step: f64,
    /// Working step is `T0 / steps_per_period`.
    pub steps_per_period: usize,
    pub settle_periods: usize,
    pub max_settle_periods: usize,
    pub settle_tol: f64,
    pub period_tol: f64,
    pub crossings: usize,
    pub grid_size: usize,
    pub warmup_steps: usize,
    /// Periods skipped before measuring an asymptotic phase shift.
    pub discard_periods: usize,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            bootstrap_step: 1e-3,
            steps_per_period: 2000,
            settle_periods: 20,
            max_settle_periods: 500,
            settle_tol: 1e-8,
            period_tol: 1e-6,
            crossings: 16,
            grid_size: 2000,
            warmup_steps: 20_000,
            discard_periods: 20,
        }
    }
}

/// Injected charge: `"auto"` or coulombs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Charge {
    Auto,
    Explicit(f64),
}

impl<'de> Deserialize<'de> for Charge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Charge;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"auto\" or a charge in coulombs")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Charge, E> {
                if v == "auto" {
                    Ok(Charge::Auto)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Charge, E> {
                Ok(Charge::Explicit(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Charge, E> {
                Ok(Charge::Explicit(v as f64))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrcConfig {
    pub n_points: usize,
    pub charge: Charge,
    /// Pulse width in seconds; `T0 / 1000` when absent.
    pub width: Option<f64>,
    pub mode: ImpulseMode,
    /// Peak phase shift (rad) aimed for by `charge = "auto"`.
    pub target_shift: f64,
}

impl Default for PrcConfig {
    fn default() -> Self {
        Self {
            n_points: 100,
            charge: Charge::Auto,
            width: None,
            mode: ImpulseMode::StateJump,
            target_shift: 0.05,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpvConfig {
    pub harmonics: usize,
    /// Also compute the adjoint PPV and the comparison report in `ppv`.
    pub compare: bool,
}

impl Default for PpvConfig {
    fn default() -> Self {
        Self {
            harmonics: phasekit::ppv::DEFAULT_HARMONICS,
            compare: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasesimConfig {
    /// Network description, relative to the config file.
    pub network: PathBuf,
    pub t_end: f64,
    /// Global step; `min T0 / 500` when absent.
    pub dt: Option<f64>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_record_every() -> usize {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LockConfig {
    /// Injected current amplitude, amperes.
    pub amplitude: f64,
    /// `w_inj = omega0 (1 + detuning)`.
    pub detuning: Option<f64>,
    /// Injection frequency in rad/s; overrides `detuning`.
    pub w_inj: Option<f64>,
    #[serde(default = "default_horizon")]
    pub horizon_periods: usize,
}

fn default_horizon() -> usize {
    2000
}

impl ExperimentConfig {
    pub fn output_path(&self) -> PathBuf {
        self.base_dir.join(&self.output_dir)
    }

    pub fn build_model(&self) -> Result<Model, CliError> {
        self.model.build().map_err(|e| match e {
            phasekit::Error::InvalidArgument { name, reason } => {
                CliError::config(format!("model.{name}"), reason)
            }
            other => CliError::config("model", other.to_string()),
        })
    }

    fn validate(&self) -> Result<(), CliError> {
        self.build_model()?;
        let i = &self.integration;
        positive("integration.bootstrap_step", i.bootstrap_step)?;
        positive("integration.settle_tol", i.settle_tol)?;
        positive("integration.period_tol", i.period_tol)?;
        at_least("integration.steps_per_period", i.steps_per_period, 10)?;
        at_least("integration.settle_periods", i.settle_periods, 1)?;
        at_least(
            "integration.max_settle_periods",
            i.max_settle_periods,
            i.settle_periods,
        )?;
        at_least("integration.crossings", i.crossings, 2)?;
        at_least("integration.grid_size", i.grid_size, 16)?;
        at_least("integration.warmup_steps", i.warmup_steps, 10)?;

        let p = &self.prc;
        at_least("prc.n_points", p.n_points, 4)?;
        if let Charge::Explicit(q) = p.charge {
            if !q.is_finite() || q == 0.0 {
                return Err(CliError::config("prc.charge", "must be finite and nonzero"));
            }
        }
        if let Some(w) = p.width {
            positive("prc.width", w)?;
        }
        if !(p.target_shift > 0.0 && p.target_shift < std::f64::consts::FRAC_PI_2) {
            return Err(CliError::config(
                "prc.target_shift",
                "must lie in (0, pi/2)",
            ));
        }
        at_least("ppv.harmonics", self.ppv.harmonics, 1)?;

        if let Some(s) = &self.phasesim {
            positive("phasesim.t_end", s.t_end)?;
            if let Some(dt) = s.dt {
                positive("phasesim.dt", dt)?;
            }
            at_least("phasesim.record_every", s.record_every, 1)?;
            let net = self.base_dir.join(&s.network);
            if !net.is_file() {
                return Err(CliError::config(
                    "phasesim.network",
                    format!("file not found: {}", net.display()),
                ));
            }
        }
        if let Some(l) = &self.lock {
            if !l.amplitude.is_finite() {
                return Err(CliError::config("lock.amplitude", "must be finite"));
            }
            match (l.detuning, l.w_inj) {
                (None, None) => {
                    return Err(CliError::config(
                        "lock.detuning",
                        "set `detuning` or `w_inj`",
                    ))
                }
                (Some(d), _) if d.is_nan() || d <= -1.0 || d.is_infinite() => {
                    return Err(CliError::config(
                        "lock.detuning",
                        "must be finite and above -1",
                    ))
                }
                (_, Some(w)) => positive("lock.w_inj", w)?,
                _ => {}
            }
            at_least("lock.horizon_periods", l.horizon_periods, 8)?;
        }
        Ok(())
    }
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(key, format!("must be positive, got {v}")))
    }
}

fn at_least(key: &str, v: usize, min: usize) -> Result<(), CliError> {
    if v >= min {
        Ok(())
    } else {
        Err(CliError::config(
            key,
            format!("must be at least {min}, got {v}"),
        ))
    }
}

/// One-line description of a TOML error, with the offending line.
pub(crate) fn toml_error(text: &str, e: &toml::de::Error) -> CliError {
    let msg = e.message().replace('\n', " ");
    match e.span() {
        Some(span) => {
            let line_no = text[..span.start.min(text.len())].matches('\n').count() + 1;
            let line = text.lines().nth(line_no - 1).unwrap_or("").trim();
            CliError::config(format!("line {line_no} `{line}`"), msg)
        }
        None => CliError::config("file", msg),
    }
}

pub fn parse_config(text: &str, base_dir: &Path) -> Result<ExperimentConfig, CliError> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| toml_error(text, &e))?;
    cfg.base_dir = base_dir.to_path_buf();
    cfg.validate()?;
    Ok(cfg)
}

/// Read, fill defaults and validate a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base)
}
