//! Stationary covariance as the time integral `∫₀^∞ e^{Aτ} D e^{Aᵀτ} dτ`.
//!
//! This route shares no code with the Kronecker/LU solver and is used as an
//! oracle for it. A short panel `[0, h]` is integrated with adaptive
//! Gauss–Kronrod quadrature; longer horizons are reached by doubling,
//! `W(2t) = W(t) + e^{At} W(t) e^{Aᵀt}`.

use nalgebra::SMatrix;
use thiserror::Error;

/// `‖e^{AH}‖_F` below which the tail beyond the horizon is negligible.
pub const PROPAGATOR_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegralError {
    #[error("horizon too short: ||exp(A H)||_F = {propagator_norm:e}, tail bound {truncation_bound:e}")]
    HorizonInsufficient { propagator_norm: f64, truncation_bound: f64 },
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralEstimate<const N: usize> {
    pub v: SMatrix<f64, N, N>,
    /// Integration horizon actually used, in the time unit of `A`.
    pub horizon: f64,
    pub propagator_norm: f64,
}

/// Matrix exponential by scaling and squaring of a degree-18 Taylor polynomial.
pub fn expm<const N: usize>(x: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    let norm1 = x.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let y = x / 2f64.powi(squarings);

    let mut term = SMatrix::<f64, N, N>::identity();
    let mut sum = term;
    for k in 1..=18 {
        term = term * y / k as f64;
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// 7-point Gauss weights for the odd Kronrod nodes 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod<const N: usize>(
    f: &dyn Fn(f64) -> SMatrix<f64, N, N>,
    a: f64,
    b: f64,
) -> (SMatrix<f64, N, N>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let centre = f(c);
    let mut k = centre * WGK[7];
    let mut g = centre * WG[3];
    for (i, &x) in XGK[..7].iter().enumerate() {
        let pair = f(c - h * x) + f(c + h * x);
        k += pair * WGK[i];
        if i % 2 == 1 {
            g += pair * WG[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

fn adaptive<const N: usize>(
    f: &dyn Fn(f64) -> SMatrix<f64, N, N>,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
) -> SMatrix<f64, N, N> {
    let (value, err) = kronrod(f, a, b);
    if err <= tol || depth >= 40 {
        return value;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth + 1) + adaptive(f, m, b, 0.5 * tol, depth + 1)
}

fn panel<const N: usize>(a: &SMatrix<f64, N, N>, d: &SMatrix<f64, N, N>, h: f64) -> SMatrix<f64, N, N> {
    let integrand = |t: f64| {
        let f = expm(&(a * t));
        f * d * f.transpose()
    };
    let tol = 1e-15 * h * d.norm();
    adaptive(&integrand, 0.0, h, tol, 0)
}

fn doubling<const N: usize>(
    a: &SMatrix<f64, N, N>,
    d: &SMatrix<f64, N, N>,
    h0: f64,
    doublings: Option<u32>,
) -> IntegralEstimate<N> {
    let mut w = panel(a, d, h0);
    let mut e = expm(&(a * h0));
    let mut horizon = h0;
    let mut steps = 0;
    loop {
        let done = match doublings {
            Some(k) => steps >= k,
            None => e.norm() < PROPAGATOR_CUTOFF || steps >= 400,
        };
        if done {
            break;
        }
        w += e * w * e.transpose();
        e = e * e;
        horizon *= 2.0;
        steps += 1;
    }
    IntegralEstimate { v: (w + w.transpose()) * 0.5, horizon, propagator_norm: e.norm() }
}

fn base_step<const N: usize>(a: &SMatrix<f64, N, N>) -> f64 {
    1.0 / a.norm().max(f64::MIN_POSITIVE)
}

/// Integrate up to `horizon`; fails if `e^{A·horizon}` has not decayed.
pub fn integral_crosscheck<const N: usize>(
    a: &SMatrix<f64, N, N>,
    d: &SMatrix<f64, N, N>,
    horizon: f64,
) -> Result<IntegralEstimate<N>, IntegralError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(IntegralError::BadHorizon(horizon));
    }
    let ratio = horizon / base_step(a);
    let k = if ratio > 1.0 { ratio.log2().ceil() as u32 } else { 0 };
    let est = doubling(a, d, horizon / 2f64.powi(k as i32), Some(k));
    if est.propagator_norm >= PROPAGATOR_CUTOFF {
        let truncation_bound = est.propagator_norm.powi(2) * est.v.norm();
        return Err(IntegralError::HorizonInsufficient {
            propagator_norm: est.propagator_norm,
            truncation_bound,
        });
    }
    Ok(est)
}

/// Integrate with the horizon doubled until `‖e^{AH}‖_F < 1e-12`.
pub fn integral_crosscheck_auto<const N: usize>(
    a: &SMatrix<f64, N, N>,
    d: &SMatrix<f64, N, N>,
) -> Result<IntegralEstimate<N>, IntegralError> {
    let est = doubling(a, d, base_step(a), None);
    if est.propagator_norm >= PROPAGATOR_CUTOFF {
        return Err(IntegralError::HorizonInsufficient {
            propagator_norm: est.propagator_norm,
            truncation_bound: f64::INFINITY,
        });
    }
    Ok(est)
}
