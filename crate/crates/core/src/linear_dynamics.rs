//! Linearized fluctuation dynamics `u̇ = A u + n` in the quadrature basis
//! `u = (δq, δp, δX₁, δY₁, δX₂, δY₂, δx, δy)`.

use std::io::{self, BufRead, Write};

use nalgebra::{DMatrix, Schur};
use serde::Serialize;
use thiserror::Error;

use crate::params::{DerivedConstants, PhysicalParams};
use crate::steady_state::SteadyState;
use crate::Matrix8;

/// Half-width of the band around zero spectral abscissa, in units of `ω_m`,
/// inside which the model is classified as marginal (and unstable).
pub const MARGINAL_BAND: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("Schur iteration did not converge")]
    NoConvergence,
}

/// Rates and couplings that fully determine the drift matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftRates {
    pub mech_freq: f64,
    pub mech_damping: f64,
    pub cavity_decay: f64,
    pub atom_decay: f64,
    pub delta1: f64,
    pub delta2_eff: f64,
    pub atom_detuning: f64,
    pub cavity_coupling: f64,
    pub optomech_coupling: f64,
    pub atom_coupling: f64,
}

impl DriftRates {
    pub fn new(p: &PhysicalParams, s: &SteadyState) -> Self {
        Self {
            mech_freq: p.mech_freq,
            mech_damping: p.mech_damping,
            cavity_decay: p.cavity_decay,
            atom_decay: p.atom_decay,
            delta1: p.detuning.delta1(),
            delta2_eff: s.delta2_eff,
            atom_detuning: p.atom_detuning,
            cavity_coupling: p.cavity_coupling,
            optomech_coupling: s.coupling,
            atom_coupling: p.atom_coupling,
        }
    }

    pub fn drift_matrix(&self) -> Matrix8 {
        let DriftRates {
            mech_freq: wm,
            mech_damping: gm,
            cavity_decay: k,
            atom_decay: ga,
            delta1: d1,
            delta2_eff: d2,
            atom_detuning: da,
            cavity_coupling: j,
            optomech_coupling: g,
            atom_coupling: gat,
        } = *self;
        #[rustfmt::skip]
        let a = Matrix8::from_row_slice(&[
            0.0,  wm,   0.0,  0.0,  0.0,  0.0,  0.0,  0.0,
            -wm,  -gm,  0.0,  0.0,  g,    0.0,  0.0,  0.0,
            0.0,  0.0,  -k,   d1,   0.0,  j,    0.0,  gat,
            0.0,  0.0,  -d1,  -k,   -j,   0.0,  -gat, 0.0,
            0.0,  0.0,  0.0,  j,    -k,   d2,   0.0,  0.0,
            g,    0.0,  -j,   0.0,  -d2,  -k,   0.0,  0.0,
            0.0,  0.0,  0.0,  gat,  0.0,  0.0,  -ga,  da,
            0.0,  0.0,  -gat, 0.0,  0.0,  0.0,  -da,  -ga,
        ]);
        a
    }
}

/// Noise strengths `Diag[0, γ_m(2n̄+1), κ, κ, κ, κ, γ_a, γ_a]`.
pub fn diffusion_matrix(p: &PhysicalParams, thermal_occupation: f64) -> Matrix8 {
    let k = p.cavity_decay;
    let ga = p.atom_decay;
    Matrix8::from_diagonal(&nalgebra::SVector::<f64, 8>::from_column_slice(&[
        0.0,
        p.mech_damping * (2.0 * thermal_occupation + 1.0),
        k,
        k,
        k,
        k,
        ga,
        ga,
    ]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    pub stable: bool,
    /// Largest real part over the eigenvalues of the drift matrix, rad/s.
    pub spectral_abscissa: f64,
    /// Abscissa lies inside the marginal band around zero.
    pub marginal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearModel {
    pub rates: Option<DriftRates>,
    pub drift: Matrix8,
    pub diffusion: Matrix8,
    /// Frequency used to size the marginal band (ω_m for the physical model).
    pub frequency_scale: f64,
    pub stable: bool,
    pub spectral_abscissa: f64,
    pub marginal: bool,
}

impl LinearModel {
    /// Wrap raw matrices, deciding stability on construction.
    pub fn from_matrices(drift: Matrix8, diffusion: Matrix8, frequency_scale: f64) -> Result<Self, StabilityError> {
        let stability = stability_of(&drift, frequency_scale)?;
        Ok(Self {
            rates: None,
            drift,
            diffusion,
            frequency_scale,
            stable: stability.stable,
            spectral_abscissa: stability.spectral_abscissa,
            marginal: stability.marginal,
        })
    }

    /// Same drift, diffusion rebuilt for a different mirror temperature.
    pub fn with_diffusion(&self, diffusion: Matrix8) -> Self {
        Self { diffusion, ..self.clone() }
    }
}

pub fn build_linear_model(
    p: &PhysicalParams,
    d: &DerivedConstants,
    s: &SteadyState,
) -> Result<LinearModel, StabilityError> {
    let rates = DriftRates::new(p, s);
    let mut model = LinearModel::from_matrices(
        rates.drift_matrix(),
        diffusion_matrix(p, d.thermal_occupation),
        p.mech_freq,
    )?;
    model.rates = Some(rates);
    Ok(model)
}

/// Re-derive the stability verdict for an assembled model.
pub fn check_stability(model: &LinearModel) -> Result<Stability, StabilityError> {
    stability_of(&model.drift, model.frequency_scale)
}

pub fn stability_of(drift: &Matrix8, frequency_scale: f64) -> Result<Stability, StabilityError> {
    let abscissa = spectral_abscissa(&DMatrix::from_column_slice(8, 8, drift.as_slice()))?;
    let band = MARGINAL_BAND * frequency_scale;
    let marginal = abscissa.abs() <= band;
    Ok(Stability { stable: abscissa < 0.0 && !marginal, spectral_abscissa: abscissa, marginal })
}

/// `max Re λ` over the eigenvalues of a real square matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64, StabilityError> {
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000).ok_or(StabilityError::NoConvergence)?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Write a matrix row-major, one row per line, full precision scientific notation.
pub fn write_matrix<W: Write>(mut w: W, m: &Matrix8) -> io::Result<()> {
    for i in 0..8 {
        let row: Vec<String> = (0..8).map(|j| format!("{:.17e}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(r: R) -> io::Result<Matrix8> {
    let mut values = Vec::with_capacity(64);
    for line in r.lines() {
        let line = line?;
        for tok in line.split_whitespace() {
            values.push(
                tok.parse::<f64>()
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?,
            );
        }
    }
    if values.len() != 64 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("expected 64 entries, found {}", values.len()),
        ));
    }
    Ok(Matrix8::from_row_slice(&values))
}
