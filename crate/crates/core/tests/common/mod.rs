#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix2, Matrix4};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use optoent_core::{DetuningSpec, Matrix8, PhysicalParams};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Exact integer matrix `2^s · A` (every finite f64 is a dyadic rational).
fn to_integer_matrix(a: &Matrix8) -> Vec<Vec<BigInt>> {
    let rationals: Vec<BigRational> = a
        .iter()
        .map(|&x| BigRational::from_float(x).expect("finite entry"))
        .collect();
    let max_denom = rationals.iter().map(|r| r.denom().clone()).max().unwrap();
    let mut out = vec![vec![BigInt::zero(); 8]; 8];
    for c in 0..8 {
        for r in 0..8 {
            let q = &rationals[c * 8 + r] * BigRational::from_integer(max_denom.clone());
            assert!(q.is_integer());
            out[r][c] = q.to_integer();
        }
    }
    out
}

/// Coefficients `c_0..c_8` of `det(λI − B)` by Faddeev–LeVerrier, exact.
pub fn characteristic_polynomial(b: &[Vec<BigInt>]) -> Vec<BigInt> {
    let n = b.len();
    let mul = |x: &[Vec<BigInt>], y: &[Vec<BigInt>]| -> Vec<Vec<BigInt>> {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(BigInt::zero(), |acc, k| acc + &x[i][k] * &y[k][j]))
                    .collect()
            })
            .collect()
    };
    let mut coeffs = vec![BigInt::zero(); n + 1];
    coeffs[n] = BigInt::one();
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for k in 1..=n {
        let mut next = mul(b, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        m = next;
        let am = mul(b, &m);
        let trace = (0..n).fold(BigInt::zero(), |acc, i| acc + &am[i][i]);
        let kk = BigInt::from(k as u64);
        assert!((&trace % &kk).is_zero());
        coeffs[n - k] = -trace / kk;
    }
    coeffs
}

/// True iff every root of the polynomial (coefficients lowest degree first,
/// positive leading coefficient) has strictly negative real part.
pub fn routh_hurwitz(coeffs: &[BigInt]) -> bool {
    let n = coeffs.len() - 1;
    let c: Vec<BigRational> = coeffs.iter().rev().map(|x| BigRational::from_integer(x.clone())).collect();
    let mut prev: Vec<BigRational> = c.iter().step_by(2).cloned().collect();
    let mut curr: Vec<BigRational> = c.iter().skip(1).step_by(2).cloned().collect();
    if !prev[0].is_positive() {
        return false;
    }
    for _ in 1..=n {
        if !curr[0].is_positive() {
            return false;
        }
        let next: Vec<BigRational> = (0..prev.len() - 1)
            .map(|i| {
                let b = curr.get(i + 1).cloned().unwrap_or_else(BigRational::zero);
                (&curr[0] * &prev[i + 1] - &prev[0] * b) / &curr[0]
            })
            .collect();
        prev = curr;
        curr = next;
    }
    true
}

pub fn routh_hurwitz_stable(a: &Matrix8) -> bool {
    routh_hurwitz(&characteristic_polynomial(&to_integer_matrix(a)))
}

pub fn normal_matrix<const R: usize, const C: usize>(rng: &mut StdRng) -> nalgebra::SMatrix<f64, R, C> {
    nalgebra::SMatrix::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn abscissa(a: &Matrix8) -> f64 {
    optoent_core::linear_dynamics::spectral_abscissa(&DMatrix::from_column_slice(8, 8, a.as_slice())).unwrap()
}

/// Random matrix shifted so that its spectral abscissa is in `[-1, -0.1]`,
/// and a random PSD diffusion matrix of random rank.
pub fn random_stable_system(rng: &mut StdRng) -> (Matrix8, Matrix8) {
    let m: Matrix8 = normal_matrix(rng);
    let shift = abscissa(&m) + rng.random_range(0.1..1.0);
    let a = m - Matrix8::identity() * shift;
    let rank = rng.random_range(1..=8);
    let mut b = normal_matrix::<8, 8>(rng);
    for c in rank..8 {
        b.column_mut(c).fill(0.0);
    }
    (a, b * b.transpose())
}

/// Random physical parameters around the baseline: rates and detunings drawn in
/// units of ω_m, drive power from 0 to 100 mW.
pub fn random_params(rng: &mut StdRng) -> PhysicalParams {
    let mut p = PhysicalParams::baseline();
    let wm = p.mech_freq;
    p.cavity_decay = rng.random_range(0.1..2.0) * wm;
    p.atom_decay = rng.random_range(0.1..2.0) * wm;
    p.atom_coupling = rng.random_range(0.0..2.0) * wm;
    p.cavity_coupling = rng.random_range(0.0..3.0) * wm;
    p.atom_detuning = rng.random_range(-2.0..2.0) * wm;
    p.drive_power = rng.random_range(0.0..0.1);
    p.mech_damping = wm / 10f64.powf(rng.random_range(2.0..6.0));
    p.temperature = rng.random_range(0.0..50.0);
    p.detuning = DetuningSpec::Effective { delta: rng.random_range(-2.5..2.5) * wm };
    p
}

fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

pub fn local(a: Matrix2<f64>, b: Matrix2<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&b);
    m
}

pub fn local_rotation(t1: f64, t2: f64) -> Matrix4<f64> {
    local(rotation(t1), rotation(t2))
}

/// Random two-mode symplectic matrix: local rotations and squeezers, a beam
/// splitter and a two-mode squeezer, composed in random order of parameters.
pub fn random_symplectic(rng: &mut StdRng) -> Matrix4<f64> {
    let mut s = Matrix4::identity();
    for _ in 0..3 {
        let (r1, r2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let squeeze = local(
            Matrix2::new(f64::exp(r1), 0.0, 0.0, f64::exp(-r1)),
            Matrix2::new(f64::exp(r2), 0.0, 0.0, f64::exp(-r2)),
        );
        let rot = local_rotation(rng.random_range(0.0..6.3), rng.random_range(0.0..6.3));
        let th: f64 = rng.random_range(0.0..6.3);
        let (c, si) = (th.cos(), th.sin());
        let bs = Matrix4::new(
            c, 0.0, si, 0.0, 0.0, c, 0.0, si, -si, 0.0, c, 0.0, 0.0, -si, 0.0, c,
        );
        let r: f64 = rng.random_range(0.0..1.0);
        let (ch, sh) = (f64::cosh(r), f64::sinh(r));
        let tms = Matrix4::new(
            ch, 0.0, sh, 0.0, 0.0, ch, 0.0, -sh, sh, 0.0, ch, 0.0, 0.0, -sh, 0.0, ch,
        );
        s = tms * bs * rot * squeeze * s;
    }
    s
}

/// Random physical two-mode covariance matrix `S diag(ν₁,ν₁,ν₂,ν₂) Sᵀ`, ν ≥ 1/2.
pub fn random_physical_state(rng: &mut StdRng) -> Matrix4<f64> {
    let s = random_symplectic(rng);
    let n1 = 0.5 + rng.random_range(0.0..2.0);
    let n2 = 0.5 + rng.random_range(0.0..2.0);
    let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(n1, n1, n2, n2));
    let v = s * d * s.transpose();
    (v + v.transpose()) * 0.5
}

pub fn random_orthogonal(rng: &mut StdRng) -> Matrix8 {
    normal_matrix::<8, 8>(rng).qr().q()
}

pub fn max_rel_diff(x: &Matrix8, y: &Matrix8) -> f64 {
    (x - y).norm() / y.norm().max(f64::MIN_POSITIVE)
}
