//! Bipartite Gaussian entanglement between the mirror and the other modes.
//!
//! For a two-mode covariance block `Vs = [[V_m, V_mβ], [V_mβᵀ, V_β]]` the
//! partially transposed symplectic eigenvalues are
//! `ν∓ = √((Σ ∓ √(Σ² − 4 det Vs)) / 2)` with `Σ = det V_m + det V_β − 2 det V_mβ`,
//! and `E_N = max(0, −ln 2ν₋)`. Quadratures have vacuum variance 1/2, so the
//! separability threshold is `ν₋ = 1/2`.

use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Matrix8;

/// Negative discriminants down to this (relative to `max(1, Σ²)`) are rounding.
pub const DISCRIMINANT_TOLERANCE: f64 = 1e-12;
/// `ν₋` within this of 1/2 counts as separable.
pub const SEPARABILITY_TOLERANCE: f64 = 1e-12;
/// Slack on the uncertainty bound `ν ≥ 1/2` for the physicality flag.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntanglementError {
    #[error("inconsistent covariance block: Sigma^2 - 4 det Vs = {discriminant:e}")]
    NegativeDiscriminant { discriminant: f64 },
}

/// One of the four bosonic modes, in quadrature-vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Mirror,
    Cavity1,
    Cavity2,
    Atoms,
}

impl Mode {
    /// Zero-based index of the mode's first quadrature.
    pub fn offset(self) -> usize {
        match self {
            Mode::Mirror => 0,
            Mode::Cavity1 => 2,
            Mode::Cavity2 => 4,
            Mode::Atoms => 6,
        }
    }
}

/// The mirror-centred bipartitions that are reported by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BipartitePair {
    /// Quadratures {1, 2, 3, 4}.
    MirrorCavity1,
    /// Quadratures {1, 2, 5, 6}.
    MirrorCavity2,
    /// Quadratures {1, 2, 7, 8}.
    #[default]
    MirrorAtoms,
}

impl BipartitePair {
    pub const ALL: [BipartitePair; 3] =
        [BipartitePair::MirrorCavity1, BipartitePair::MirrorCavity2, BipartitePair::MirrorAtoms];

    pub fn modes(self) -> (Mode, Mode) {
        match self {
            BipartitePair::MirrorCavity1 => (Mode::Mirror, Mode::Cavity1),
            BipartitePair::MirrorCavity2 => (Mode::Mirror, Mode::Cavity2),
            BipartitePair::MirrorAtoms => (Mode::Mirror, Mode::Atoms),
        }
    }

    /// Zero-based rows/columns of `V` making up the pair's 4×4 block.
    pub fn indices(self) -> [usize; 4] {
        let (a, b) = self.modes();
        mode_indices(a, b)
    }

    pub fn name(self) -> &'static str {
        match self {
            BipartitePair::MirrorCavity1 => "mirror-cavity1",
            BipartitePair::MirrorCavity2 => "mirror-cavity2",
            BipartitePair::MirrorAtoms => "mirror-atoms",
        }
    }
}

impl std::str::FromStr for BipartitePair {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BipartitePair::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown pair `{s}` (expected mirror-cavity1, mirror-cavity2 or mirror-atoms)"))
    }
}

fn mode_indices(a: Mode, b: Mode) -> [usize; 4] {
    [a.offset(), a.offset() + 1, b.offset(), b.offset() + 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntanglementReport {
    /// `None` when the block did not come from a named bipartition.
    pub pair: Option<BipartitePair>,
    pub submatrix: Matrix4<f64>,
    pub sigma: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub log_negativity: f64,
    pub entangled: bool,
    pub physical: bool,
}

/// Rows/columns of `v` for modes `a` and `b`, in that order.
pub fn extract_modes(v: &Matrix8, a: Mode, b: Mode) -> Matrix4<f64> {
    let idx = mode_indices(a, b);
    Matrix4::from_fn(|i, j| v[(idx[i], idx[j])])
}

pub fn extract_submatrix(v: &Matrix8, pair: BipartitePair) -> Matrix4<f64> {
    let (a, b) = pair.modes();
    extract_modes(v, a, b)
}

fn symplectic_pair(sigma: f64, det: f64) -> Option<(f64, f64)> {
    let disc = sigma * sigma - 4.0 * det;
    if disc < -DISCRIMINANT_TOLERANCE * (sigma * sigma).max(1.0) {
        return None;
    }
    let root = disc.max(0.0).sqrt();
    Some((((sigma - root) / 2.0).max(0.0).sqrt(), ((sigma + root) / 2.0).max(0.0).sqrt()))
}

/// Partial-transpose symplectic spectrum and logarithmic negativity of a 4×4 block.
pub fn logarithmic_negativity(vs: &Matrix4<f64>) -> Result<EntanglementReport, EntanglementError> {
    let block = |r: usize, c: usize| -> Matrix2<f64> { vs.fixed_view::<2, 2>(r, c).into_owned() };
    let det_m = block(0, 0).determinant();
    let det_b = block(2, 2).determinant();
    let det_mb = block(0, 2).determinant();
    let det = vs.determinant();

    let sigma = det_m + det_b - 2.0 * det_mb;
    let (nu_minus, nu_plus) = symplectic_pair(sigma, det).ok_or(EntanglementError::NegativeDiscriminant {
        discriminant: sigma * sigma - 4.0 * det,
    })?;

    // Both ν² of the untransposed block are roots of x² − Σ₊x + det; they are
    // ≥ 1/4 iff Σ₊ ≥ 1/2 and det − Σ₊/4 + 1/16 ≥ 0.
    let sigma_plus = det_m + det_b + 2.0 * det_mb;
    let slack = PHYSICALITY_TOLERANCE * (sigma_plus * sigma_plus).max(1.0);
    let physical = sigma_plus >= 0.5 - PHYSICALITY_TOLERANCE && det - sigma_plus / 4.0 + 1.0 / 16.0 >= -slack;

    let entangled = nu_minus < 0.5 - SEPARABILITY_TOLERANCE;
    let log_negativity = if entangled { -(2.0 * nu_minus).ln() } else { 0.0 };
    Ok(EntanglementReport {
        pair: None,
        submatrix: *vs,
        sigma,
        nu_minus,
        nu_plus,
        log_negativity,
        entangled,
        physical,
    })
}

pub fn pair_report(v: &Matrix8, pair: BipartitePair) -> Result<EntanglementReport, EntanglementError> {
    let mut report = logarithmic_negativity(&extract_submatrix(v, pair))?;
    report.pair = Some(pair);
    Ok(report)
}

/// `E_N¹` (mirror–cavity 1), `E_N²` (mirror–cavity 2), `E_N³` (mirror–atoms).
pub fn all_pairs_report(v: &Matrix8) -> Result<[EntanglementReport; 3], EntanglementError> {
    Ok([
        pair_report(v, BipartitePair::MirrorCavity1)?,
        pair_report(v, BipartitePair::MirrorCavity2)?,
        pair_report(v, BipartitePair::MirrorAtoms)?,
    ])
}

/// Reports for the pairs that exclude the mirror (cavity1–cavity2,
/// cavity1–atoms, cavity2–atoms). Not part of the default output.
pub fn non_mirror_pairs_report(v: &Matrix8) -> Result<[EntanglementReport; 3], EntanglementError> {
    let pairs = [(Mode::Cavity1, Mode::Cavity2), (Mode::Cavity1, Mode::Atoms), (Mode::Cavity2, Mode::Atoms)];
    let mut out = Vec::with_capacity(3);
    for (a, b) in pairs {
        out.push(logarithmic_negativity(&extract_modes(v, a, b))?);
    }
    Ok([out[0], out[1], out[2]])
}
