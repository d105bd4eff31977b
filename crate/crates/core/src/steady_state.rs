//! Classical mean-field steady state of the driven system and the
//! diagnostics that decide whether the linearized Gaussian model applies.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::params::{DerivedConstants, DetuningSpec, PhysicalParams};

/// Excitation probability below which the bosonic atom description holds.
pub const LOW_EXCITATION_THRESHOLD: f64 = 0.1;
/// Minimum intracavity amplitude for the linearization to be trusted.
pub const STRONG_DRIVE_THRESHOLD: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteadyStateError {
    #[error("mirror-displacement fixed point did not converge after {iterations} steps (last iterate q = {last_q})")]
    NotConverged { iterations: usize, last_q: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    /// Dimensionless mirror displacement `q_s`.
    pub q: f64,
    /// Mirror momentum `p_s`; always zero.
    pub p: f64,
    pub a1: Complex64,
    pub a2: Complex64,
    /// Atomic-mode amplitude `c_s`.
    pub c: Complex64,
    /// Effective cavity-2 detuning `Δ₂′ = Δ₂ − G₀ q_s`.
    pub delta2_eff: f64,
    /// Effective optomechanical coupling `G = √2 G₀ |a₂|`.
    pub coupling: f64,
}

/// All self-consistent solutions for one parameter point, sorted by `q_s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyStateSolution {
    pub branches: Vec<SteadyState>,
}

impl SteadyStateSolution {
    /// The branch used for downstream analysis (smallest `q_s`).
    pub fn selected(&self) -> &SteadyState {
        &self.branches[0]
    }

    /// True when the bare-detuning problem is optically bistable.
    pub fn multivalued(&self) -> bool {
        self.branches.len() > 1
    }
}

/// Knobs for the bare-detuning fixed-point search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { damping: 0.5, tolerance: 1e-12, max_iterations: 10_000 }
    }
}

/// Mean-field amplitudes for a given effective detuning `Δ₂′`.
fn amplitudes(p: &PhysicalParams, d: &DerivedConstants, delta1: f64, delta2_eff: f64) -> SteadyState {
    let i = Complex64::i();
    let kappa = p.cavity_decay;
    let atom_response = Complex64::new(p.atom_decay, p.atom_detuning);
    let cavity2 = Complex64::new(kappa, delta2_eff);
    let j = p.cavity_coupling;
    let ga = p.atom_coupling;

    let denom = Complex64::new(kappa, delta1) + ga * ga / atom_response + j * j / cavity2;
    let a1 = d.drive_amplitude / denom;
    let a2 = -i * j * a1 / cavity2;
    let c = -i * ga * a1 / atom_response;
    let q = d.radiation_coupling * a2.norm_sqr() / p.mech_freq;
    SteadyState {
        q,
        p: 0.0,
        a1,
        a2,
        c,
        delta2_eff,
        coupling: std::f64::consts::SQRT_2 * d.radiation_coupling * a2.norm(),
    }
}

/// Solve the steady-state mean values.
///
/// In effective-detuning mode the solution is closed form. In bare mode the
/// scalar map `q ↦ G₀|a₂(q)|²/ω_m` is iterated with damping; the interval of
/// admissible displacements is additionally scanned for sign changes of
/// `q − G₀|a₂(q)|²/ω_m` so that every branch of a bistable response is found.
pub fn solve_steady_state(
    p: &PhysicalParams,
    d: &DerivedConstants,
) -> Result<SteadyStateSolution, SteadyStateError> {
    solve_steady_state_with(p, d, FixedPointOptions::default())
}

pub fn solve_steady_state_with(
    p: &PhysicalParams,
    d: &DerivedConstants,
    opts: FixedPointOptions,
) -> Result<SteadyStateSolution, SteadyStateError> {
    match p.detuning {
        DetuningSpec::Effective { delta } => Ok(SteadyStateSolution {
            branches: vec![amplitudes(p, d, -delta, delta)],
        }),
        DetuningSpec::Bare { delta1, delta2 } => solve_bare(p, d, delta1, delta2, opts),
    }
}

fn solve_bare(
    p: &PhysicalParams,
    d: &DerivedConstants,
    delta1: f64,
    delta2: f64,
    opts: FixedPointOptions,
) -> Result<SteadyStateSolution, SteadyStateError> {
    let g0 = d.radiation_coupling;
    let map = |q: f64| amplitudes(p, d, delta1, delta2 - g0 * q).q;

    let mut roots = bracketed_roots(p, d, delta1, &map);

    let mut q = 0.0;
    let mut converged = None;
    for _ in 0..opts.max_iterations {
        let next = (1.0 - opts.damping) * q + opts.damping * map(q);
        let step = (next - q).abs();
        q = next;
        if step <= opts.tolerance * q.abs().max(f64::MIN_POSITIVE) {
            converged = Some(q);
            break;
        }
    }

    if let Some(qf) = converged {
        let scale = roots.iter().fold(qf.abs(), |m, r| m.max(r.abs())).max(f64::MIN_POSITIVE);
        match roots.iter_mut().find(|r| (**r - qf).abs() <= 1e-9 * scale) {
            Some(r) => *r = qf,
            None => roots.push(qf),
        }
    }
    if roots.is_empty() {
        return Err(SteadyStateError::NotConverged { iterations: opts.max_iterations, last_q: q });
    }
    roots.sort_by(|a, b| a.total_cmp(b));

    let branches = roots
        .into_iter()
        .map(|q| {
            let mut s = amplitudes(p, d, delta1, delta2 - g0 * q);
            // Keep the self-consistent displacement itself rather than the
            // re-evaluated map, which differs by the root-finding residual.
            s.q = q;
            s
        })
        .collect();
    Ok(SteadyStateSolution { branches })
}

/// Upper bound on `G₀|a₂|²/ω_m` over all real `Δ₂′`.
fn displacement_bound(p: &PhysicalParams, d: &DerivedConstants, delta1: f64) -> f64 {
    // a₂ = −iJΩ / (Z(κ + iΔ₂′) + J²) with Z = κ + iΔ₁ + G_a²/(γ_a + iΔ_a), and
    // |Z(κ + iΔ₂′) + J²| ≥ |Z| (κ + J² Re Z / |Z|²) for every real Δ₂′.
    let atom_response = Complex64::new(p.atom_decay, p.atom_detuning);
    let z = Complex64::new(p.cavity_decay, delta1) + p.atom_coupling.powi(2) / atom_response;
    let j2 = p.cavity_coupling.powi(2);
    let lower = z.norm() * (p.cavity_decay + j2 * z.re / z.norm_sqr());
    let a2_max = p.cavity_coupling * d.drive_amplitude / lower;
    d.radiation_coupling * a2_max * a2_max / p.mech_freq
}

fn bracketed_roots(p: &PhysicalParams, d: &DerivedConstants, delta1: f64, map: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let h = |q: f64| q - map(q);
    let q_max = displacement_bound(p, d, delta1);
    if q_max == 0.0 || h(0.0) == 0.0 {
        return vec![0.0];
    }
    // Resolve the cavity-2 resonance: Δ₂′ moves by G₀·dq per step, keep it ≪ κ.
    let span = d.radiation_coupling * q_max / p.cavity_decay;
    let cells = ((50.0 * span).ceil() as usize).clamp(2_000, 200_000);
    let step = q_max / cells as f64;

    let mut roots = Vec::new();
    let mut lo = 0.0;
    let mut h_lo = h(lo);
    for k in 1..=cells {
        let hi = if k == cells { q_max } else { k as f64 * step };
        let h_hi = h(hi);
        if h_hi == 0.0 {
            roots.push(hi);
        } else if h_lo.signum() != h_hi.signum() && h_lo != 0.0 {
            roots.push(bisect(&h, lo, hi, h_lo));
        }
        lo = hi;
        h_lo = h_hi;
    }
    roots
}

fn bisect(h: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut h_lo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let h_mid = h(mid);
        if h_mid == 0.0 {
            return mid;
        }
        if h_mid.signum() == h_lo.signum() {
            lo = mid;
            h_lo = h_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityReport {
    /// Single-atom excitation probability `G_a²|a₁|² / (N(Δ_a² + γ_a²))`.
    pub excitation_prob: f64,
    pub amp1_abs: f64,
    pub amp2_abs: f64,
    pub quality_factor: f64,
    pub low_excitation_ok: bool,
    pub strong_drive_ok: bool,
    pub markovian_ok: bool,
}

pub fn validity_report(p: &PhysicalParams, s: &SteadyState) -> ValidityReport {
    let amp1_abs = s.a1.norm();
    let amp2_abs = s.a2.norm();
    let g2 = p.atom_coupling * p.atom_coupling / p.atom_number;
    let excitation_prob = g2 * amp1_abs * amp1_abs / (p.atom_detuning.powi(2) + p.atom_decay.powi(2));
    let quality_factor = p.quality_factor();
    ValidityReport {
        excitation_prob,
        amp1_abs,
        amp2_abs,
        quality_factor,
        low_excitation_ok: excitation_prob < LOW_EXCITATION_THRESHOLD,
        strong_drive_ok: amp1_abs.min(amp2_abs) > STRONG_DRIVE_THRESHOLD,
        markovian_ok: quality_factor > crate::params::MARKOVIAN_Q_THRESHOLD,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_constants;
    use approx::assert_relative_eq;

    fn baseline() -> (PhysicalParams, DerivedConstants) {
        let p = PhysicalParams::baseline();
        let d = derive_constants(&p).unwrap();
        (p, d)
    }

    #[test]
    fn uncoupled_cavity_two_stays_empty() {
        let (mut p, _) = baseline();
        p.cavity_coupling = 0.0;
        let d = derive_constants(&p).unwrap();
        let s = *solve_steady_state(&p, &d).unwrap().selected();
        assert_eq!(s.a2, Complex64::new(0.0, 0.0));
        assert_eq!(s.q, 0.0);
        assert_eq!(s.p, 0.0);
        let expected = d.drive_amplitude
            / (Complex64::new(p.cavity_decay, p.detuning.delta1())
                + p.atom_coupling.powi(2) / Complex64::new(p.atom_decay, p.atom_detuning));
        assert_relative_eq!(s.a1.re, expected.re, max_relative = 1e-14);
        assert_relative_eq!(s.a1.im, expected.im, max_relative = 1e-14);
    }

    #[test]
    fn undriven_system_is_empty() {
        let (mut p, _) = baseline();
        p.drive_power = 0.0;
        let d = derive_constants(&p).unwrap();
        for detuning in [
            DetuningSpec::Effective { delta: p.mech_freq },
            DetuningSpec::Bare { delta1: -p.mech_freq, delta2: p.mech_freq },
        ] {
            p.detuning = detuning;
            let sol = solve_steady_state(&p, &d).unwrap();
            assert!(!sol.multivalued());
            let s = sol.selected();
            assert_eq!((s.q, s.a1.norm(), s.a2.norm(), s.c.norm()), (0.0, 0.0, 0.0, 0.0));
            let v = validity_report(&p, s);
            assert_eq!(v.excitation_prob, 0.0);
            assert!(!v.strong_drive_ok);
        }
    }

    #[test]
    fn displacement_matches_intracavity_intensity() {
        let (p, d) = baseline();
        let s = *solve_steady_state(&p, &d).unwrap().selected();
        assert!(s.q > 0.0);
        assert_relative_eq!(s.q, d.radiation_coupling * s.a2.norm_sqr() / p.mech_freq, max_relative = 1e-12);
        assert_relative_eq!(s.coupling, 2f64.sqrt() * d.radiation_coupling * s.a2.norm(), max_relative = 1e-15);
    }

    #[test]
    fn bare_mode_recovers_effective_solution() {
        let (p, d) = baseline();
        let eff = *solve_steady_state(&p, &d).unwrap().selected();
        let mut bare = p.clone();
        bare.detuning = DetuningSpec::Bare {
            delta1: -p.mech_freq,
            delta2: p.mech_freq + d.radiation_coupling * eff.q,
        };
        let sol = solve_steady_state(&bare, &d).unwrap();
        let s = sol
            .branches
            .iter()
            .min_by(|a, b| (a.q - eff.q).abs().total_cmp(&(b.q - eff.q).abs()))
            .unwrap();
        assert_relative_eq!(s.q, eff.q, max_relative = 1e-9);
        assert_relative_eq!(s.delta2_eff, eff.delta2_eff, max_relative = 1e-9);
        assert_relative_eq!(s.a1.re, eff.a1.re, max_relative = 1e-9);
        assert_relative_eq!(s.a2.im, eff.a2.im, max_relative = 1e-9);
    }

    #[test]
    fn bistable_response_returns_every_branch() {
        // 0.2 W drive with the second cavity blue of its normal-mode resonance
        // folds the response over; three self-consistent displacements exist.
        let (mut p, _) = baseline();
        p.drive_power = 0.2;
        p.detuning = DetuningSpec::Bare { delta1: -p.mech_freq, delta2: 3.0 * p.mech_freq };
        let d = derive_constants(&p).unwrap();
        let sol = solve_steady_state(&p, &d).unwrap();
        assert!(sol.multivalued());
        let expected = [25500.95972069236, 133618.54225923168, 192733.03824321664];
        assert_eq!(sol.branches.len(), expected.len());
        for (s, q) in sol.branches.iter().zip(expected) {
            assert_relative_eq!(s.q, q, max_relative = 1e-9);
            let residual = s.q - d.radiation_coupling * s.a2.norm_sqr() / p.mech_freq;
            assert!(residual.abs() <= 1e-9 * s.q, "residual {residual}");
        }
        assert_eq!(sol.selected().q, sol.branches[0].q);

        // Just outside the fold there is a single branch again.
        p.detuning = DetuningSpec::Bare { delta1: -p.mech_freq, delta2: 5.0 * p.mech_freq };
        assert!(!solve_steady_state(&p, &d).unwrap().multivalued());
    }

    #[test]
    fn bracket_fallback_when_iteration_budget_is_zero() {
        let (mut p, d) = baseline();
        p.detuning = DetuningSpec::Bare { delta1: -p.mech_freq, delta2: p.mech_freq };
        // A zero-step iteration can never converge; the bracket scan still
        // finds the root, so the result must still be a valid solution.
        let opts = FixedPointOptions { damping: 0.5, tolerance: 1e-12, max_iterations: 0 };
        let sol = solve_steady_state_with(&p, &d, opts).unwrap();
        let s = sol.selected();
        assert_relative_eq!(s.q, d.radiation_coupling * s.a2.norm_sqr() / p.mech_freq, max_relative = 1e-12);
    }

    #[test]
    fn validity_flags_at_baseline() {
        let (p, d) = baseline();
        let s = *solve_steady_state(&p, &d).unwrap().selected();
        let v = validity_report(&p, &s);
        let expected = p.atom_coupling.powi(2) * s.a1.norm_sqr()
            / (p.atom_number * (p.atom_detuning.powi(2) + p.atom_decay.powi(2)));
        assert_relative_eq!(v.excitation_prob, expected, max_relative = 1e-14);
        // With N = 1e7 the single-atom excitation probability is ~19.4.
        assert_relative_eq!(v.excitation_prob, 19.376539649872125, max_relative = 1e-10);
        assert!(!v.low_excitation_ok);
        assert!(v.strong_drive_ok);
        assert!(v.markovian_ok);
    }

    #[test]
    fn huge_ensemble_suppresses_excitation() {
        let (mut p, d) = baseline();
        let s = *solve_steady_state(&p, &d).unwrap().selected();
        let base = validity_report(&p, &s).excitation_prob;
        let mut last = f64::INFINITY;
        for n in [1e7, 1e10, 1e13, 1e16, 1e20] {
            p.atom_number = n;
            let v = validity_report(&p, &s);
            assert!(v.excitation_prob < last);
            assert_relative_eq!(v.excitation_prob * n, base * 1e7, max_relative = 1e-12);
            last = v.excitation_prob;
        }
        assert!(last < 1e-9);
        assert!(validity_report(&p, &s).low_excitation_ok);
    }
}
