//! TOML configuration schema.
//!
//! Every quantity is SI. Any frequency or rate may be written either as a
//! plain value in rad/s (`decay_kappa = 3.14e7`) or as a multiple of the
//! mechanical frequency with the `_in_omega_m` suffix
//! (`decay_kappa_in_omega_m = 0.5`); giving both is an error. Omitted keys
//! fall back to the baseline parameter set (see [`PhysicalParams::baseline`]).
//!
//! ```toml
//! [cavity]
//! length = 1e-3
//! decay_kappa_in_omega_m = 0.5
//! wavelength = 810e-9
//! coupling_j_in_omega_m = 2.0
//!
//! [drive]
//! power = 35e-3
//!
//! [mirror]
//! omega_m = 6.283185307179586e7
//! mass = 5e-12
//! damping_gamma_m = 628.3185307179587
//! temperature = 0.4
//!
//! [atoms]
//! decay_gamma_a_in_omega_m = 0.5
//! coupling_g_a_in_omega_m = 0.6
//! detuning_delta_a_in_omega_m = -1.0
//! number = 1e7
//!
//! [detuning]
//! mode = "effective"          # or "bare" with delta1 / delta2
//! delta_in_omega_m = 1.0
//!
//! [sweep]
//! axis = "delta"              # "delta" | "temperature" | "j"
//! start = 0.0
//! stop = 2.5
//! points = 201
//! overlay_axis = "j"
//! overlays = [1.0, 1.5, 2.0]
//!
//! [tcrit]
//! pair = "mirror-atoms"
//! t_max = 200.0
//! tolerance = 0.1
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entanglement::BipartitePair;
use crate::params::{DetuningSpec, ParamError, PhysicalParams};
use crate::sweep::SweepAxis;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config key `{0}` given both in rad/s and in units of omega_m")]
    Conflict(String),
    #[error("config key `{key}` is not valid for detuning mode `{mode}`")]
    WrongMode { key: &'static str, mode: DetuningMode },
    #[error("detuning mode `{0}` requires key `{1}`")]
    MissingKey(DetuningMode, &'static str),
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningMode {
    #[default]
    Effective,
    Bare,
}

impl std::fmt::Display for DetuningMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetuningMode::Effective => "effective",
            DetuningMode::Bare => "bare",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub cavity: CavitySection,
    #[serde(default)]
    pub drive: DriveSection,
    #[serde(default)]
    pub mirror: MirrorSection,
    #[serde(default)]
    pub atoms: AtomsSection,
    #[serde(default)]
    pub detuning: DetuningSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tcrit: Option<TcritSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_kappa_in_omega_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_j: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_j_in_omega_m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping_gamma_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping_gamma_m_in_omega_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_gamma_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_gamma_a_in_omega_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_g_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_g_a_in_omega_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_delta_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detuning_delta_a_in_omega_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub number: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetuningSection {
    #[serde(default)]
    pub mode: DetuningMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_in_omega_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta1_in_omega_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta2_in_omega_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay_axis: Option<SweepAxis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overlays: Vec<f64>,
}

pub const DEFAULT_SWEEP_POINTS: usize = 201;

fn default_points() -> usize {
    DEFAULT_SWEEP_POINTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcritSection {
    #[serde(default)]
    pub pair: BipartitePair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

fn frequency(
    key: &str,
    plain: Option<f64>,
    in_omega_m: Option<f64>,
    omega_m: f64,
) -> Result<Option<f64>, ConfigError> {
    match (plain, in_omega_m) {
        (Some(_), Some(_)) => Err(ConfigError::Conflict(key.to_string())),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(x)) => Ok(Some(x * omega_m)),
        (None, None) => Ok(None),
    }
}

impl ConfigFile {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Canonical config for `p`, with every value written in plain SI units.
    pub fn from_params(p: &PhysicalParams) -> Self {
        let detuning = match p.detuning {
            DetuningSpec::Effective { delta } => DetuningSection {
                mode: DetuningMode::Effective,
                delta: Some(delta),
                ..Default::default()
            },
            DetuningSpec::Bare { delta1, delta2 } => DetuningSection {
                mode: DetuningMode::Bare,
                delta1: Some(delta1),
                delta2: Some(delta2),
                ..Default::default()
            },
        };
        ConfigFile {
            cavity: CavitySection {
                length: Some(p.cavity_length),
                decay_kappa: Some(p.cavity_decay),
                wavelength: Some(p.wavelength),
                coupling_j: Some(p.cavity_coupling),
                ..Default::default()
            },
            drive: DriveSection { power: Some(p.drive_power) },
            mirror: MirrorSection {
                omega_m: Some(p.mech_freq),
                mass: Some(p.mech_mass),
                damping_gamma_m: Some(p.mech_damping),
                temperature: Some(p.temperature),
                ..Default::default()
            },
            atoms: AtomsSection {
                decay_gamma_a: Some(p.atom_decay),
                coupling_g_a: Some(p.atom_coupling),
                detuning_delta_a: Some(p.atom_detuning),
                number: Some(p.atom_number),
                ..Default::default()
            },
            detuning,
            sweep: None,
            tcrit: None,
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config sections are always representable in TOML")
    }

    /// Resolve into validated physical parameters.
    pub fn to_params(&self) -> Result<PhysicalParams, ConfigError> {
        let mut p = PhysicalParams::baseline();
        let omega_m = self.mirror.omega_m.unwrap_or(p.mech_freq);
        p.mech_freq = omega_m;

        let set = |target: &mut f64, value: Option<f64>| {
            if let Some(v) = value {
                *target = v;
            }
        };

        // The baseline's frequency-valued defaults scale with ω_m only when they are
        // naturally expressed relative to it.
        p.cavity_coupling = omega_m;
        p.atom_detuning = -omega_m;

        set(&mut p.cavity_length, self.cavity.length);
        set(&mut p.wavelength, self.cavity.wavelength);
        set(
            &mut p.cavity_decay,
            frequency("cavity.decay_kappa", self.cavity.decay_kappa, self.cavity.decay_kappa_in_omega_m, omega_m)?,
        );
        set(
            &mut p.cavity_coupling,
            frequency("cavity.coupling_j", self.cavity.coupling_j, self.cavity.coupling_j_in_omega_m, omega_m)?,
        );
        set(&mut p.drive_power, self.drive.power);
        set(&mut p.mech_mass, self.mirror.mass);
        set(
            &mut p.mech_damping,
            frequency(
                "mirror.damping_gamma_m",
                self.mirror.damping_gamma_m,
                self.mirror.damping_gamma_m_in_omega_m,
                omega_m,
            )?,
        );
        set(&mut p.temperature, self.mirror.temperature);
        set(
            &mut p.atom_decay,
            frequency("atoms.decay_gamma_a", self.atoms.decay_gamma_a, self.atoms.decay_gamma_a_in_omega_m, omega_m)?,
        );
        set(
            &mut p.atom_coupling,
            frequency("atoms.coupling_g_a", self.atoms.coupling_g_a, self.atoms.coupling_g_a_in_omega_m, omega_m)?,
        );
        set(
            &mut p.atom_detuning,
            frequency(
                "atoms.detuning_delta_a",
                self.atoms.detuning_delta_a,
                self.atoms.detuning_delta_a_in_omega_m,
                omega_m,
            )?,
        );
        set(&mut p.atom_number, self.atoms.number);

        let d = &self.detuning;
        let delta = frequency("detuning.delta", d.delta, d.delta_in_omega_m, omega_m)?;
        let delta1 = frequency("detuning.delta1", d.delta1, d.delta1_in_omega_m, omega_m)?;
        let delta2 = frequency("detuning.delta2", d.delta2, d.delta2_in_omega_m, omega_m)?;
        p.detuning = match d.mode {
            DetuningMode::Effective => {
                if delta1.is_some() {
                    return Err(ConfigError::WrongMode { key: "delta1", mode: d.mode });
                }
                if delta2.is_some() {
                    return Err(ConfigError::WrongMode { key: "delta2", mode: d.mode });
                }
                DetuningSpec::Effective { delta: delta.unwrap_or(omega_m) }
            }
            DetuningMode::Bare => {
                if delta.is_some() {
                    return Err(ConfigError::WrongMode { key: "delta", mode: d.mode });
                }
                DetuningSpec::Bare {
                    delta1: delta1.ok_or(ConfigError::MissingKey(d.mode, "delta1"))?,
                    delta2: delta2.ok_or(ConfigError::MissingKey(d.mode, "delta2"))?,
                }
            }
        };

        p.validate()?;
        Ok(p)
    }
}
