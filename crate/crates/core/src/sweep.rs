//! Full pipeline per parameter point, parameter sweeps and the
//! critical-temperature search.

use std::fmt::Write as _;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entanglement::{all_pairs_report, BipartitePair, EntanglementError, EntanglementReport};
use crate::linear_dynamics::{build_linear_model, diffusion_matrix, LinearModel, StabilityError};
use crate::lyapunov::{solve_lyapunov, LyapunovError};
use crate::params::{derive_constants, thermal_occupation, DetuningSpec, ParamError, PhysicalParams};
use crate::steady_state::{solve_steady_state, validity_report, SteadyState, SteadyStateError, ValidityReport};

/// Fixed CSV columns following the axis columns.
pub const CSV_COLUMNS: &str = "EN1,EN2,EN3,nu1,nu2,nu3,stable,low_excitation_ok,strong_drive_ok,abs_a1,abs_a2,q_s,Delta2_eff_over_omega_m,G_over_omega_m";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Effective detuning `Δ/ω_m` (sets `Δ₁ = −Δ`, `Δ₂′ = Δ`).
    #[serde(rename = "delta")]
    DeltaOverOmegaM,
    /// Mirror bath temperature in kelvin.
    #[serde(rename = "temperature")]
    TemperatureK,
    /// Cavity–cavity coupling `J/ω_m`.
    #[serde(rename = "j")]
    JOverOmegaM,
}

impl SweepAxis {
    pub fn column_name(self) -> &'static str {
        match self {
            SweepAxis::DeltaOverOmegaM => "Delta_over_omega_m",
            SweepAxis::TemperatureK => "T_K",
            SweepAxis::JOverOmegaM => "J_over_omega_m",
        }
    }

    pub fn apply(self, p: &mut PhysicalParams, value: f64) {
        match self {
            SweepAxis::DeltaOverOmegaM => p.detuning = DetuningSpec::Effective { delta: value * p.mech_freq },
            SweepAxis::TemperatureK => p.temperature = value,
            SweepAxis::JOverOmegaM => p.cavity_coupling = value * p.mech_freq,
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "delta" => Ok(SweepAxis::DeltaOverOmegaM),
            "temperature" | "t" => Ok(SweepAxis::TemperatureK),
            "j" => Ok(SweepAxis::JOverOmegaM),
            _ => Err(format!("unknown sweep axis `{s}` (expected delta, temperature or j)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep start {start} must be below stop {stop}")]
    EmptyRange { start: f64, stop: f64 },
    #[error("a sweep needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("overlay value {0} is not finite")]
    BadOverlay(f64),
    #[error("overlays given without an overlay axis")]
    MissingOverlayAxis,
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub overlay_axis: Option<SweepAxis>,
    pub overlays: Vec<f64>,
    pub base: PhysicalParams,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if !(self.start < self.stop) {
            return Err(SweepError::EmptyRange { start: self.start, stop: self.stop });
        }
        if self.points < 2 {
            return Err(SweepError::TooFewPoints(self.points));
        }
        if let Some(&bad) = self.overlays.iter().find(|v| !v.is_finite()) {
            return Err(SweepError::BadOverlay(bad));
        }
        if !self.overlays.is_empty() && self.overlay_axis.is_none() {
            return Err(SweepError::MissingOverlayAxis);
        }
        self.base.validate()?;
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == n {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / n as f64
                }
            })
            .collect()
    }

    /// `(axis value, overlay value)` per row, overlay-major.
    pub fn coordinates(&self) -> Vec<(f64, Option<f64>)> {
        let grid = self.grid();
        let overlays: Vec<Option<f64>> = if self.overlays.is_empty() {
            vec![None]
        } else {
            self.overlays.iter().copied().map(Some).collect()
        };
        overlays
            .into_iter()
            .flat_map(|o| grid.iter().map(move |&x| (x, o)))
            .collect()
    }

    pub fn params_at(&self, x: f64, overlay: Option<f64>) -> PhysicalParams {
        let mut p = self.base.clone();
        if let (Some(axis), Some(v)) = (self.overlay_axis, overlay) {
            axis.apply(&mut p, v);
        }
        self.axis.apply(&mut p, x);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PointStatus {
    Ok,
    Unstable,
    Failed(String),
}

/// Compact steady-state numbers carried into the CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadySummary {
    pub abs_a1: f64,
    pub abs_a2: f64,
    pub q_s: f64,
    pub delta2_eff: f64,
    pub coupling: f64,
    /// The bare-detuning problem had more than one branch.
    pub multivalued: bool,
}

impl SteadySummary {
    fn new(s: &SteadyState, multivalued: bool) -> Self {
        Self {
            abs_a1: s.a1.norm(),
            abs_a2: s.a2.norm(),
            q_s: s.q,
            delta2_eff: s.delta2_eff,
            coupling: s.coupling,
            multivalued,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub status: PointStatus,
    pub mech_freq: f64,
    pub spectral_abscissa: Option<f64>,
    pub steady: Option<SteadySummary>,
    pub validity: Option<ValidityReport>,
    /// Present only for stable points.
    pub reports: Option<[EntanglementReport; 3]>,
}

impl PointResult {
    fn failed(p: &PhysicalParams, msg: String) -> Self {
        Self {
            status: PointStatus::Failed(msg),
            mech_freq: p.mech_freq,
            spectral_abscissa: None,
            steady: None,
            validity: None,
            reports: None,
        }
    }

    pub fn is_stable(&self) -> bool {
        self.status == PointStatus::Ok
    }

    /// `E_N` for `pair`, absent for unstable or failed points.
    pub fn log_negativity(&self, pair: BipartitePair) -> Option<f64> {
        self.reports.map(|r| r[pair_slot(pair)].log_negativity)
    }

    pub fn nu_minus(&self, pair: BipartitePair) -> Option<f64> {
        self.reports.map(|r| r[pair_slot(pair)].nu_minus)
    }
}

fn pair_slot(pair: BipartitePair) -> usize {
    match pair {
        BipartitePair::MirrorCavity1 => 0,
        BipartitePair::MirrorCavity2 => 1,
        BipartitePair::MirrorAtoms => 2,
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    SteadyState(#[from] SteadyStateError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error(transparent)]
    Entanglement(#[from] EntanglementError),
}

/// Everything about a parameter point that does not depend on temperature.
#[derive(Debug, Clone)]
pub struct PreparedPoint {
    pub params: PhysicalParams,
    pub steady: SteadyState,
    pub multivalued: bool,
    pub model: LinearModel,
    pub validity: ValidityReport,
}

impl PreparedPoint {
    pub fn new(p: &PhysicalParams) -> Result<Self, PipelineError> {
        let d = derive_constants(p)?;
        let sol = solve_steady_state(p, &d)?;
        let steady = *sol.selected();
        let model = build_linear_model(p, &d, &steady)?;
        Ok(Self {
            params: p.clone(),
            steady,
            multivalued: sol.multivalued(),
            model,
            validity: validity_report(p, &steady),
        })
    }

    /// Stationary entanglement at mirror temperature `temperature`.
    /// Returns `Ok(None)` for an unstable model.
    pub fn reports_at(&self, temperature: f64) -> Result<Option<[EntanglementReport; 3]>, PipelineError> {
        if !self.model.stable {
            return Ok(None);
        }
        let nbar = thermal_occupation(self.params.mech_freq, temperature);
        let diffusion = diffusion_matrix(&self.params, nbar);
        let cov = solve_lyapunov(&self.model.drift, &diffusion)?;
        Ok(Some(all_pairs_report(&cov.v)?))
    }

    pub fn result_at(&self, temperature: f64) -> PointResult {
        let reports = self.reports_at(temperature);
        let (status, reports) = match reports {
            Ok(Some(r)) => (PointStatus::Ok, Some(r)),
            Ok(None) => (PointStatus::Unstable, None),
            Err(e) => (PointStatus::Failed(e.to_string()), None),
        };
        PointResult {
            status,
            mech_freq: self.params.mech_freq,
            spectral_abscissa: Some(self.model.spectral_abscissa),
            steady: Some(SteadySummary::new(&self.steady, self.multivalued)),
            validity: Some(self.validity),
            reports,
        }
    }
}

/// Derive → steady state → linear model → stability gate → Lyapunov → reports.
pub fn evaluate_point(p: &PhysicalParams) -> PointResult {
    match PreparedPoint::new(p) {
        Ok(prep) => prep.result_at(p.temperature),
        Err(e) => PointResult::failed(p, e.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub overlay_value: Option<f64>,
    pub point: PointResult,
}

/// Evaluate every grid point (in parallel); rows come back in index order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    Ok(spec
        .coordinates()
        .into_par_iter()
        .map(|(x, o)| SweepRow {
            axis_value: x,
            overlay_value: o,
            point: evaluate_point(&spec.params_at(x, o)),
        })
        .collect())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv_header(spec: &SweepSpec) -> String {
    let mut cols = vec![spec.axis.column_name()];
    if let Some(axis) = spec.overlay_axis.filter(|_| !spec.overlays.is_empty()) {
        cols.push(axis.column_name());
    }
    format!("{},{}", cols.join(","), CSV_COLUMNS)
}

pub fn csv_row(spec: &SweepSpec, row: &SweepRow) -> String {
    let pt = &row.point;
    let mut fields = vec![row.axis_value.to_string()];
    if spec.overlay_axis.is_some() && !spec.overlays.is_empty() {
        fields.push(opt(row.overlay_value));
    }
    for pair in BipartitePair::ALL {
        fields.push(opt(pt.log_negativity(pair)));
    }
    for pair in BipartitePair::ALL {
        fields.push(opt(pt.nu_minus(pair)));
    }
    fields.push(
        match pt.status {
            PointStatus::Ok => "true",
            PointStatus::Unstable => "false",
            PointStatus::Failed(_) => "failed",
        }
        .to_string(),
    );
    let flag = |f: fn(&ValidityReport) -> bool| pt.validity.as_ref().map(|v| f(v).to_string()).unwrap_or_default();
    fields.push(flag(|v| v.low_excitation_ok));
    fields.push(flag(|v| v.strong_drive_ok));
    let s = pt.steady.as_ref();
    fields.push(opt(s.map(|s| s.abs_a1)));
    fields.push(opt(s.map(|s| s.abs_a2)));
    fields.push(opt(s.map(|s| s.q_s)));
    fields.push(opt(s.map(|s| s.delta2_eff / pt.mech_freq)));
    fields.push(opt(s.map(|s| s.coupling / pt.mech_freq)));
    fields.join(",")
}

pub fn write_csv<W: Write>(mut w: W, spec: &SweepSpec, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(w, "{}", csv_header(spec))?;
    for row in rows {
        writeln!(w, "{}", csv_row(spec, row))?;
    }
    Ok(())
}

pub fn csv_string(spec: &SweepSpec, rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, spec, rows).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV is ASCII")
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot of `E_N` for `pair`, one polyline per overlay; absent values
/// (unstable points) break the line.
pub fn render_svg(spec: &SweepSpec, rows: &[SweepRow], pair: BipartitePair) -> String {
    let (w, h, ml, mr, mt, mb) = (720.0, 480.0, 70.0, 150.0, 30.0, 55.0);
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let ymax = rows
        .iter()
        .filter_map(|r| r.point.log_negativity(pair))
        .fold(0.0f64, f64::max)
        .max(1e-3)
        * 1.05;
    let sx = |x: f64| ml + (x - spec.start) / (spec.stop - spec.start) * pw;
    let sy = |y: f64| mt + ph - y / ymax * ph;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=5 {
        let fx = spec.start + (spec.stop - spec.start) * k as f64 / 5.0;
        let fy = ymax * k as f64 / 5.0;
        let (x, y) = (sx(fx), sy(fy));
        let _ = writeln!(svg, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, mt + ph, mt + ph + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{fx:.3}</text>"#, mt + ph + 20.0);
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{y:.2}" x2="{ml:.2}" y2="{y:.2}" stroke="black"/>"#, ml - 5.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{fy:.3}</text>"#, ml - 8.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, ml + pw / 2.0, h - 12.0, spec.axis.column_name());
    let _ = writeln!(svg, r#"<text x="15" y="{:.2}" transform="rotate(-90 15 {:.2})" text-anchor="middle">E_N ({})</text>"#, mt + ph / 2.0, mt + ph / 2.0, pair.name());

    let groups: Vec<Option<f64>> = if spec.overlays.is_empty() {
        vec![None]
    } else {
        spec.overlays.iter().copied().map(Some).collect()
    };
    for (gi, group) in groups.iter().enumerate() {
        let colour = PALETTE[gi % PALETTE.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, svg: &mut String| {
            if segment.len() > 1 {
                let _ = writeln!(svg, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, segment.join(" "));
            }
            segment.clear();
        };
        for row in rows.iter().filter(|r| r.overlay_value == *group) {
            match row.point.log_negativity(pair) {
                Some(y) => segment.push(format!("{:.2},{:.2}", sx(row.axis_value), sy(y))),
                None => flush(&mut segment, &mut svg),
            }
        }
        flush(&mut segment, &mut svg);
        let label = match (spec.overlay_axis, group) {
            (Some(axis), Some(v)) => format!("{} = {v}", axis.column_name()),
            _ => "E_N".to_string(),
        };
        let ly = mt + 15.0 + 18.0 * gi as f64;
        let _ = writeln!(svg, r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/>"#, ml + pw + 10.0, ml + pw + 30.0);
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}">{label}</text>"#, ml + pw + 35.0, ly + 4.0);
    }
    svg.push_str("</svg>\n");
    svg
}

pub const DEFAULT_TCRIT_TOLERANCE: f64 = 0.1;
pub const DEFAULT_TCRIT_MAX: f64 = 200.0;
const MONOTONICITY_SAMPLES: usize = 41;

#[derive(Debug, Error)]
pub enum TcritError {
    #[error("no crossing: E_N = {at_base} at base temperature {base} K and {at_max} at T_max = {t_max} K")]
    NoCrossing { base: f64, at_base: f64, t_max: f64, at_max: f64 },
    #[error("model is unstable (spectral abscissa {spectral_abscissa:e} rad/s); no stationary state")]
    Unstable { spectral_abscissa: f64 },
    #[error("T_max = {t_max} K must exceed the base temperature {base} K")]
    BadRange { base: f64, t_max: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalTempResult {
    /// Smallest temperature found with `E_N = 0` (upper end of the bracket).
    pub critical_temperature: f64,
    /// `(T_low, T_high)` with `E_N(T_low) > 0` and `E_N(T_high) = 0`.
    pub bracket: (f64, f64),
    pub pair: BipartitePair,
    pub tolerance: f64,
    /// False when the sampled profile was not non-increasing in `T`.
    pub monotone: bool,
    /// `(T, E_N)` samples used for the monotonicity check.
    pub profile: Vec<(f64, f64)>,
}

/// Bisect on the mirror temperature for the onset of separability of `pair`,
/// starting from `p.temperature`.
pub fn find_critical_temperature(
    p: &PhysicalParams,
    pair: BipartitePair,
    t_max: f64,
    tolerance: f64,
) -> Result<CriticalTempResult, TcritError> {
    if !(tolerance > 0.0) {
        return Err(TcritError::BadTolerance(tolerance));
    }
    let base = p.temperature;
    if !(t_max > base) {
        return Err(TcritError::BadRange { base, t_max });
    }
    let prep = PreparedPoint::new(p)?;
    if !prep.model.stable {
        return Err(TcritError::Unstable { spectral_abscissa: prep.model.spectral_abscissa });
    }
    let en = |t: f64| -> Result<f64, TcritError> {
        let reports = prep.reports_at(t)?.expect("stability does not depend on temperature");
        Ok(reports[pair_slot(pair)].log_negativity)
    };

    let at_base = en(base)?;
    let at_max = en(t_max)?;
    if !(at_base > 0.0 && at_max == 0.0) {
        return Err(TcritError::NoCrossing { base, at_base, t_max, at_max });
    }

    let (mut lo, mut hi) = (base, t_max);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if en(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let n = MONOTONICITY_SAMPLES - 1;
    let mut profile = Vec::with_capacity(MONOTONICITY_SAMPLES);
    for i in 0..=n {
        let t = base + (t_max - base) * i as f64 / n as f64;
        profile.push((t, en(t)?));
    }
    let monotone = profile.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);

    Ok(CriticalTempResult {
        critical_temperature: hi,
        bracket: (lo, hi),
        pair,
        tolerance,
        monotone,
        profile,
    })
}
