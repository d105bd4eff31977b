//! Raw experimental parameters and the constants derived from them.
//!
//! Everything is in SI units; frequencies and rates are angular (rad/s).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{C, HBAR, K_B};

/// Quality factor at or below which the Markovian treatment of the
/// mechanical bath is flagged.
pub const MARKOVIAN_Q_THRESHOLD: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{name}` must be strictly positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("parameter `{name}` must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
}

/// How the two cavity detunings are specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DetuningSpec {
    /// Impose `Δ₁ = −Δ` and the effective cavity-2 detuning `Δ₂′ = +Δ`.
    Effective { delta: f64 },
    /// Bare detunings; `Δ₂′` follows self-consistently from the mirror shift.
    Bare { delta1: f64, delta2: f64 },
}

impl DetuningSpec {
    /// Cavity-1 detuning `Δ₁` (never shifted by the mirror).
    pub fn delta1(&self) -> f64 {
        match *self {
            DetuningSpec::Effective { delta } => -delta,
            DetuningSpec::Bare { delta1, .. } => delta1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Cavity length `L`, m.
    pub cavity_length: f64,
    /// Cavity decay rate `κ`, shared by both cavities.
    pub cavity_decay: f64,
    /// Drive wavelength `λ`, m.
    pub wavelength: f64,
    /// Input laser power `P`, W.
    pub drive_power: f64,
    /// Mechanical frequency `ω_m`.
    pub mech_freq: f64,
    /// Effective mirror mass `m`, kg.
    pub mech_mass: f64,
    /// Mechanical damping rate `γ_m`.
    pub mech_damping: f64,
    /// Atomic decay rate `γ_a`.
    pub atom_decay: f64,
    /// Collective atom–cavity coupling `G_a = g√N`.
    pub atom_coupling: f64,
    /// Cavity–cavity photon hopping `J`.
    pub cavity_coupling: f64,
    /// Atomic detuning `Δ_a`.
    pub atom_detuning: f64,
    /// Mirror bath temperature, K.
    pub temperature: f64,
    /// Atom number `N`, only used by the validity diagnostics.
    pub atom_number: f64,
    pub detuning: DetuningSpec,
}

impl PhysicalParams {
    /// Baseline parameter set with `Δ = ω_m`, `J = ω_m`, `Δ_a = −ω_m`,
    /// `T = 400 mK` and `N = 10⁷`.
    pub fn baseline() -> Self {
        let omega_m = 2.0 * PI * 1e7;
        Self {
            cavity_length: 1e-3,
            cavity_decay: PI * 1e7,
            wavelength: 810e-9,
            drive_power: 35e-3,
            mech_freq: omega_m,
            mech_mass: 5e-12,
            mech_damping: 200.0 * PI,
            atom_decay: PI * 1e7,
            atom_coupling: 1.2 * PI * 1e7,
            cavity_coupling: omega_m,
            atom_detuning: -omega_m,
            temperature: 0.4,
            atom_number: 1e7,
            detuning: DetuningSpec::Effective { delta: omega_m },
        }
    }

    pub fn quality_factor(&self) -> f64 {
        self.mech_freq / self.mech_damping
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let finite = [
            ("cavity_length", self.cavity_length),
            ("cavity_decay", self.cavity_decay),
            ("wavelength", self.wavelength),
            ("drive_power", self.drive_power),
            ("mech_freq", self.mech_freq),
            ("mech_mass", self.mech_mass),
            ("mech_damping", self.mech_damping),
            ("atom_decay", self.atom_decay),
            ("atom_coupling", self.atom_coupling),
            ("cavity_coupling", self.cavity_coupling),
            ("atom_detuning", self.atom_detuning),
            ("temperature", self.temperature),
            ("atom_number", self.atom_number),
        ];
        let detunings = match self.detuning {
            DetuningSpec::Effective { delta } => vec![("delta", delta)],
            DetuningSpec::Bare { delta1, delta2 } => vec![("delta1", delta1), ("delta2", delta2)],
        };
        for (name, value) in finite.into_iter().chain(detunings) {
            if !value.is_finite() {
                return Err(ParamError::NotFinite { name, value });
            }
        }

        let positive = [
            ("cavity_length", self.cavity_length),
            ("cavity_decay", self.cavity_decay),
            ("wavelength", self.wavelength),
            ("mech_freq", self.mech_freq),
            ("mech_mass", self.mech_mass),
            ("mech_damping", self.mech_damping),
            ("atom_decay", self.atom_decay),
            ("atom_number", self.atom_number),
        ];
        for (name, value) in positive {
            if value <= 0.0 {
                return Err(ParamError::NotPositive { name, value });
            }
        }

        // Zero power / zero couplings are legitimate limiting cases.
        let non_negative = [
            ("drive_power", self.drive_power),
            ("atom_coupling", self.atom_coupling),
            ("cavity_coupling", self.cavity_coupling),
            ("temperature", self.temperature),
        ];
        for (name, value) in non_negative {
            if value < 0.0 {
                return Err(ParamError::Negative { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// Optical angular frequency `2πc/λ`, used for both the cavity and the laser.
    pub cavity_freq: f64,
    /// Single-photon radiation-pressure coupling `G₀`.
    pub radiation_coupling: f64,
    /// Drive amplitude `Ω_l`.
    pub drive_amplitude: f64,
    /// Mean thermal phonon number `n̄`.
    pub thermal_occupation: f64,
    pub quality_factor: f64,
}

impl DerivedConstants {
    /// True when `Q ≤ 100`, i.e. the Markovian bath approximation is suspect.
    pub fn markovian_warning(&self) -> bool {
        self.quality_factor <= MARKOVIAN_Q_THRESHOLD
    }
}

/// Bose–Einstein occupation of a mode of angular frequency `omega` at
/// temperature `temperature`; zero at `T = 0`.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = HBAR * omega / (K_B * temperature);
    1.0 / x.exp_m1()
}

pub fn derive_constants(p: &PhysicalParams) -> Result<DerivedConstants, ParamError> {
    p.validate()?;
    let cavity_freq = 2.0 * PI * C / p.wavelength;
    let radiation_coupling =
        (cavity_freq / p.cavity_length) * (HBAR / (p.mech_mass * p.mech_freq)).sqrt();
    let drive_amplitude = (2.0 * p.drive_power * p.cavity_decay / (HBAR * cavity_freq)).sqrt();
    Ok(DerivedConstants {
        cavity_freq,
        radiation_coupling,
        drive_amplitude,
        thermal_occupation: thermal_occupation(p.mech_freq, p.temperature),
        quality_factor: p.quality_factor(),
    })
}
