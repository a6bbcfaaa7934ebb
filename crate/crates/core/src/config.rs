//! Experiment configuration: a TOML file with one table per stage.
//!
//! ```toml
//! medium = "quasi-periodic"          # or "constant", "periodic", or a spec
//!
//! [solver]
//! dx = 0.05
//! dt = 0.001
//! L = 20.0
//! mu = 1.0
//! stop_h = 150.0
//! ```

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::media::QuasiPeriodicMedium;
use crate::solver::{Advection, FluxOrder, LeftBc, SolverConfig, Stop};

/// Named media accepted in place of a full spec.
pub fn medium_preset(name: &str) -> Option<QuasiPeriodicMedium> {
    match name {
        "constant" => QuasiPeriodicMedium::constant(1.0).ok(),
        "periodic" => Some(QuasiPeriodicMedium::default_periodic()),
        "quasi-periodic" => Some(QuasiPeriodicMedium::default_quasi_periodic()),
        _ => None,
    }
}

pub fn parse_medium(text: &str) -> Result<QuasiPeriodicMedium> {
    match medium_preset(text.trim()) {
        Some(m) => Ok(m),
        None => text.parse(),
    }
}

fn ser_medium<S: Serializer>(
    m: &QuasiPeriodicMedium,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&m.to_string())
}

fn de_medium<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<QuasiPeriodicMedium, D::Error> {
    let text = String::deserialize(d)?;
    parse_medium(&text).map_err(serde::de::Error::custom)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeftBcKey {
    Pin,
    ZeroSlope,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdvectionKey {
    Central,
    Upwind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dx: f64,
    pub dt: f64,
    #[serde(rename = "L")]
    pub depth: f64,
    pub mu: f64,
    #[serde(default = "default_left_bc")]
    pub left_bc: LeftBcKey,
    #[serde(default = "default_flux_order")]
    pub flux_order: u8,
    #[serde(default = "default_advection")]
    pub advection: AdvectionKey,
    #[serde(default = "default_cutoff")]
    pub transient_cutoff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_h: Option<f64>,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Initial front position of cutoff data.
    #[serde(default)]
    pub h0: f64,
    /// Cutoff index of the initial data.
    #[serde(default = "one")]
    pub n: u32,
    /// Write a snapshot file every this many steps (0: final state only).
    #[serde(default)]
    pub checkpoint_every: u64,
}

fn default_left_bc() -> LeftBcKey {
    LeftBcKey::Pin
}
fn default_flux_order() -> u8 {
    2
}
fn default_advection() -> AdvectionKey {
    AdvectionKey::Central
}
fn default_cutoff() -> f64 {
    20.0
}
fn default_stride() -> usize {
    100
}
fn one() -> u32 {
    1
}

impl SolverSection {
    pub fn solver_config(&self) -> Result<SolverConfig> {
        let flux_order = match self.flux_order {
            1 => FluxOrder::First,
            2 => FluxOrder::Second,
            k => {
                return Err(Error::InvalidInput(format!(
                    "flux_order must be 1 or 2, got {k}"
                )))
            }
        };
        let cfg = SolverConfig {
            dx: self.dx,
            dt: self.dt,
            depth: self.depth,
            mu: self.mu,
            left_bc: match self.left_bc {
                LeftBcKey::Pin => LeftBc::Pin,
                LeftBcKey::ZeroSlope => LeftBc::ZeroSlope,
            },
            flux_order,
            advection: match self.advection {
                AdvectionKey::Central => Advection::Central,
                AdvectionKey::Upwind => Advection::Upwind,
            },
            transient_cutoff: self.transient_cutoff,
            snapshot_stride: self.snapshot_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `stop_h` wins when both are set.
    pub fn stop(&self) -> Result<Stop> {
        match (self.stop_h, self.stop_t) {
            (Some(h), _) => Ok(Stop::Front(h)),
            (None, Some(t)) => Ok(Stop::Time(t)),
            (None, None) => Err(Error::MissingKey("solver.stop_h".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadySection {
    pub tol: f64,
    /// Domain `[−half_width, half_width]`; sized from the run when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

impl Default for SteadySection {
    fn default() -> Self {
        SteadySection {
            tol: 1e-9,
            half_width: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LadderSection {
    pub n_list: Vec<u32>,
    pub h0_list: Vec<f64>,
    pub tau_start: f64,
    pub tau_end: f64,
    pub tau_step: f64,
    /// Defaults to `2 dx`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_tol: Option<f64>,
    /// Allowed profile distance between consecutive `h0`, relative to `max v`.
    pub h0_rel_tol: f64,
}

impl Default for LadderSection {
    fn default() -> Self {
        LadderSection {
            n_list: vec![1, 2, 4, 8],
            h0_list: vec![-20.0, -40.0],
            tau_start: 30.0,
            tau_end: 80.0,
            tau_step: 0.5,
            order_tol: None,
            h0_rel_tol: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    /// The comparison run restarts from the semi-wave scaled by this factor.
    pub rho_scale: f64,
    /// Front position of the restart.
    pub rho_restart: f64,
    pub rho_window: f64,
    pub rho_tol: f64,
    /// `ε` relative to the mean speed.
    pub almost_eps_rel: f64,
    pub almost_step: f64,
    pub almost_max_shift: f64,
    pub almost_max_gap: f64,
    /// Front position where average-speed windows start; defaults to the
    /// first post-transient position.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub average_start: Option<f64>,
    pub average_lengths: Vec<f64>,
    pub residual_trim: usize,
    /// Drop `μ` from the pull-back residual.
    pub mu_literal: bool,
    /// Tolerance of the time-monotonicity check.
    pub monotone_tol: f64,
    pub tail_tol: f64,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        DiagnosticsSection {
            rho_scale: 0.9,
            rho_restart: 20.0,
            rho_window: 50.0,
            rho_tol: 1e-3,
            almost_eps_rel: 0.05,
            almost_step: 0.05,
            almost_max_shift: 100.0,
            almost_max_gap: 40.0,
            average_start: None,
            average_lengths: vec![100.0, 200.0, 400.0],
            residual_trim: 4,
            mu_literal: false,
            monotone_tol: 1e-3,
            tail_tol: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    /// Defaults to the lower bound of the medium.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    pub mu_list: Vec<f64>,
    pub tol: f64,
    /// Relative tolerance of the PDE speed against the oracle.
    pub speed_rel_tol: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            a0: None,
            mu_list: vec![1.0],
            tol: 1e-12,
            speed_rel_tol: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(serialize_with = "ser_medium", deserialize_with = "de_medium")]
    pub medium: QuasiPeriodicMedium,
    pub solver: SolverSection,
    #[serde(default)]
    pub steady: SteadySection,
    #[serde(default)]
    pub ladder: LadderSection,
    #[serde(default)]
    pub diagnostics: DiagnosticsSection,
    #[serde(default)]
    pub oracle: OracleSection,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            if let Some(key) = missing_field(&msg) {
                return Error::MissingKey(key);
            }
            let line = e.span().map_or(0, |s| {
                text[..s.start.min(text.len())].matches('\n').count() + 1
            });
            Error::ConfigParse { line, msg }
        })?;
        cfg.solver.solver_config()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn missing_field(msg: &str) -> Option<String> {
    let rest = msg.split_once("missing field `")?.1;
    Some(rest.split_once('`')?.0.to_string())
}
