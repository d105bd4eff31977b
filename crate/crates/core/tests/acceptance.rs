mod common;

use std::process::ExitCode;

use common::*;
use nalgebra::Matrix4;
use optoent_core::config::ConfigFile;
use optoent_core::entanglement::{all_pairs_report, logarithmic_negativity, BipartitePair};
use optoent_core::linear_dynamics::{build_linear_model, MARGINAL_BAND};
use optoent_core::lyapunov::integral::integral_crosscheck_auto;
use optoent_core::lyapunov::solve_lyapunov;
use optoent_core::params::derive_constants;
use optoent_core::steady_state::solve_steady_state;
use optoent_core::sweep::{csv_string, find_critical_temperature, run_sweep, SweepAxis, SweepRow, SweepSpec};
use optoent_core::PhysicalParams;

type Outcome = (bool, String);

fn delta_sweep(j: f64) -> (SweepSpec, Vec<SweepRow>) {
    let mut base = PhysicalParams::baseline();
    base.cavity_coupling = j * base.mech_freq;
    let spec = SweepSpec {
        axis: SweepAxis::DeltaOverOmegaM,
        start: 0.0,
        stop: 2.5,
        points: 201,
        overlay_axis: None,
        overlays: vec![],
        base,
    };
    let rows = run_sweep(&spec).unwrap();
    (spec, rows)
}

struct Profile {
    peak: f64,
    peak_at: f64,
    /// Measure of the `E_N > 0` set in units of ω_m.
    width: f64,
    unstable: usize,
}

fn profile(spec: &SweepSpec, rows: &[SweepRow], pair: BipartitePair) -> Profile {
    let step = (spec.stop - spec.start) / (spec.points - 1) as f64;
    let mut p = Profile { peak: 0.0, peak_at: f64::NAN, width: 0.0, unstable: 0 };
    for r in rows {
        match r.point.log_negativity(pair) {
            Some(e) => {
                if e > p.peak {
                    p.peak = e;
                    p.peak_at = r.axis_value;
                }
                if e > 0.0 {
                    p.width += step;
                }
            }
            None => p.unstable += 1,
        }
    }
    p
}

fn criterion_1() -> Outcome {
    let (spec, rows) = delta_sweep(1.0);
    let en: Vec<Option<f64>> = rows.iter().map(|r| r.point.log_negativity(BipartitePair::MirrorAtoms)).collect();
    let prof = profile(&spec, &rows, BipartitePair::MirrorAtoms);
    let positive: Vec<usize> = (0..en.len()).filter(|&i| en[i].is_some_and(|e| e > 0.0)).collect();
    let contiguous = positive.windows(2).all(|w| w[1] == w[0] + 1);
    let at_one = rows.iter().position(|r| (r.axis_value - 1.0).abs() < 1e-12).unwrap();
    let contains_one = positive.contains(&at_one);
    let (lo, hi) = (*positive.first().unwrap_or(&0), *positive.last().unwrap_or(&0));
    let zero_below = (0..lo).any(|i| en[i] == Some(0.0));
    let zero_above = (hi + 1..en.len()).any(|i| en[i] == Some(0.0));
    let peak_ok = (0.5..=1.5).contains(&prof.peak_at);
    let ok = peak_ok && contiguous && contains_one && (zero_below || zero_above);
    (
        ok,
        format!(
            "peak E_N3 = {:.4} at Delta/omega_m = {:.4}; E_N3 > 0 on [{:.4}, {:.4}] (contiguous: {contiguous}); \
             separable below: {zero_below}, above: {zero_above}; E_N3 at 2.5 = {:.3e}; unstable points: {}",
            prof.peak,
            prof.peak_at,
            rows[lo].axis_value,
            rows[hi].axis_value,
            en[en.len() - 1].unwrap_or(f64::NAN),
            prof.unstable
        ),
    )
}

fn criterion_2() -> Outcome {
    let profiles: Vec<(f64, Profile)> = [1.0, 1.5, 2.0]
        .into_iter()
        .map(|j| {
            let (spec, rows) = delta_sweep(j);
            (j, profile(&spec, &rows, BipartitePair::MirrorAtoms))
        })
        .collect();
    let peaks_up = profiles.windows(2).all(|w| w[1].1.peak > w[0].1.peak);
    let widths_up = profiles.windows(2).all(|w| w[1].1.width >= w[0].1.width);
    let detail = profiles
        .iter()
        .map(|(j, p)| format!("J={j}: peak {:.4} at {:.4}, width {:.4}, unstable {}", p.peak, p.peak_at, p.width, p.unstable))
        .collect::<Vec<_>>()
        .join("; ");
    (peaks_up && widths_up, format!("{detail}; peaks increasing: {peaks_up}, widths nondecreasing: {widths_up}"))
}

fn criterion_3() -> Outcome {
    let mut parts = Vec::new();
    let mut tc = Vec::new();
    for j in [1.0, 1.5, 2.0] {
        let mut p = PhysicalParams::baseline();
        p.cavity_coupling = j * p.mech_freq;
        match find_critical_temperature(&p, BipartitePair::MirrorAtoms, 200.0, 0.1) {
            Ok(r) => {
                parts.push(format!("J={j}: T_c = {:.2} K", r.critical_temperature));
                tc.push(Some(r.critical_temperature));
            }
            Err(e) => {
                parts.push(format!("J={j}: {e}"));
                tc.push(None);
            }
        }
    }
    let in_window = tc[2].is_some_and(|t| (22.0..=42.0).contains(&t));
    let ordered = match (tc[0], tc[1], tc[2]) {
        (Some(a), Some(b), Some(c)) => c > b && b > a,
        _ => false,
    };
    (in_window && ordered, format!("{}; T_c(2) in [22, 42] K: {in_window}; ordered: {ordered}", parts.join("; ")))
}

fn criterion_4() -> Outcome {
    let mut peaks = Vec::new();
    for j in [0.4, 0.6, 0.8, 1.0] {
        let (spec, rows) = delta_sweep(j);
        let p: Vec<f64> = BipartitePair::ALL.iter().map(|&pair| profile(&spec, &rows, pair).peak).collect();
        peaks.push((j, p));
    }
    let nondecr = |k: usize| peaks.windows(2).all(|w| w[1].1[k] >= w[0].1[k]);
    let noninc = |k: usize| peaks.windows(2).all(|w| w[1].1[k] <= w[0].1[k]);
    let (en1, en2, en3) = (nondecr(0), noninc(1), nondecr(2));
    let detail = peaks
        .iter()
        .map(|(j, p)| format!("J={j}: ({:.4}, {:.4}, {:.4})", p[0], p[1], p[2]))
        .collect::<Vec<_>>()
        .join("; ");
    (
        en1 && en2 && en3,
        format!("peaks (E_N1, E_N2, E_N3) {detail}; E_N1 up: {en1}, E_N2 down: {en2}, E_N3 up: {en3}"),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = rng(5005);
    let (mut worst_res, mut worst_int) = (0f64, 0f64);
    for _ in 0..100 {
        let (a, d) = random_stable_system(&mut rng);
        let v = match solve_lyapunov(&a, &d) {
            Ok(c) => c.v,
            Err(e) => return (false, format!("solver failed: {e}")),
        };
        worst_res = worst_res.max((a * v + v * a.transpose() + d).norm() / d.norm());
        match integral_crosscheck_auto(&a, &d) {
            Ok(w) => worst_int = worst_int.max(max_rel_diff(&w.v, &v)),
            Err(e) => return (false, format!("integral failed: {e}")),
        }
    }
    (
        worst_res <= 1e-10 && worst_int <= 1e-6,
        format!("worst residual {worst_res:.2e} (<= 1e-10), worst integral disagreement {worst_int:.2e} (<= 1e-6)"),
    )
}

fn criterion_6() -> Outcome {
    let mut worst_tms = 0f64;
    for r in [0.1f64, 0.5, 1.0] {
        let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
        let vs = Matrix4::new(c, 0.0, s, 0.0, 0.0, c, 0.0, -s, s, 0.0, c, 0.0, 0.0, -s, 0.0, c);
        let e = logarithmic_negativity(&vs).unwrap().log_negativity;
        worst_tms = worst_tms.max((e - 2.0 * r).abs());
    }
    let vacuum = logarithmic_negativity(&(Matrix4::identity() * 0.5)).unwrap().log_negativity;
    let n = 832.9648654280111;
    let thermal = Matrix4::from_diagonal(&nalgebra::Vector4::new(n + 0.5, n + 0.5, 0.5, 0.5));
    let tv = logarithmic_negativity(&thermal).unwrap().log_negativity;
    let mut rng = rng(6006);
    let mut worst_rot = 0f64;
    for _ in 0..100 {
        let vs = random_physical_state(&mut rng);
        let rot = local_rotation(rand::Rng::random_range(&mut rng, 0.0..6.3), rand::Rng::random_range(&mut rng, 0.0..6.3));
        let a = logarithmic_negativity(&vs).unwrap();
        let b = logarithmic_negativity(&(rot * vs * rot.transpose())).unwrap();
        worst_rot = worst_rot.max((a.nu_minus - b.nu_minus).abs()).max((a.nu_plus - b.nu_plus).abs());
    }
    (
        worst_tms <= 1e-9 && vacuum == 0.0 && tv == 0.0 && worst_rot <= 1e-10,
        format!("two-mode squeezed |E_N - 2r| max {worst_tms:.2e}; vacuum E_N = {vacuum}; thermal x vacuum E_N = {tv}; rotation drift max {worst_rot:.2e}"),
    )
}

fn criterion_7() -> Outcome {
    let mut p = PhysicalParams::baseline();
    p.atom_coupling = 0.0;
    p.cavity_coupling = 0.0;
    let d = derive_constants(&p).unwrap();
    let s = *solve_steady_state(&p, &d).unwrap().selected();
    let model = build_linear_model(&p, &d, &s).unwrap();
    let v = solve_lyapunov(&model.drift, &model.diffusion).unwrap().v;
    let thermal = (2.0 * d.thermal_occupation + 1.0) / 2.0;
    let mirror_err = ((v[(0, 0)] - thermal).abs().max((v[(1, 1)] - thermal).abs())) / thermal;
    let rest = v.fixed_view::<6, 6>(2, 2).into_owned();
    let vac_err = (rest - nalgebra::SMatrix::<f64, 6, 6>::identity() * 0.5).abs().max();
    let mut off = v;
    off.fixed_view_mut::<2, 2>(0, 0).fill(0.0);
    off.fixed_view_mut::<6, 6>(2, 2).fill(0.0);
    let cross = off.abs().max();
    let en: Vec<f64> = all_pairs_report(&v).unwrap().iter().map(|r| r.log_negativity).collect();
    (
        mirror_err <= 1e-4 && vac_err <= 1e-6 && cross <= 1e-6 && en.iter().all(|&e| e == 0.0),
        format!("mirror rel. error {mirror_err:.2e}; cavity/atom block error {vac_err:.2e}; mirror cross terms {cross:.2e}; E_N = {en:?}"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = rng(8008);
    let (mut agree, mut skipped, mut disagree, mut stable) = (0, 0, 0, 0);
    for _ in 0..1000 {
        let p = random_params(&mut rng);
        let d = derive_constants(&p).unwrap();
        let s = *solve_steady_state(&p, &d).unwrap().selected();
        let model = build_linear_model(&p, &d, &s).unwrap();
        if model.spectral_abscissa.abs() < MARGINAL_BAND * p.mech_freq {
            skipped += 1;
            continue;
        }
        let rh = routh_hurwitz_stable(&model.drift);
        if rh == model.stable {
            agree += 1;
        } else {
            disagree += 1;
        }
        stable += rh as usize;
    }
    (
        disagree == 0,
        format!("{agree} agree, {disagree} disagree, {skipped} within the marginal band; {stable} stable draws"),
    )
}

fn criterion_9() -> Outcome {
    let cfg = ConfigFile::from_toml_str(
        "[sweep]\naxis = \"delta\"\nstart = 0.0\nstop = 2.5\npoints = 101\noverlay_axis = \"j\"\noverlays = [0.5, 1.0, 1.5]\n",
    )
    .unwrap();
    let sweep = cfg.sweep.clone().unwrap();
    let spec = SweepSpec {
        axis: sweep.axis,
        start: sweep.start,
        stop: sweep.stop,
        points: sweep.points,
        overlay_axis: sweep.overlay_axis,
        overlays: sweep.overlays,
        base: cfg.to_params().unwrap(),
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| csv_string(&spec, &run_sweep(&spec).unwrap()))
    };
    let reference = run(1);
    let same = [1, 2, 4, 8, 8].iter().all(|&t| run(t) == reference);
    (same, format!("{} rows, byte-identical across 5 runs on 1-8 threads: {same}", reference.lines().count() - 1))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("peak location of E_N3 over Delta", criterion_1),
        ("E_N3 peak and width grow with J", criterion_2),
        ("critical temperature window and ordering", criterion_3),
        ("entanglement transfer across J", criterion_4),
        ("Lyapunov residual and integral oracle", criterion_5),
        ("entanglement measure oracles", criterion_6),
        ("decoupled-limit covariance", criterion_7),
        ("eigenvalue vs Routh-Hurwitz stability", criterion_8),
        ("sweep determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = f();
        if !ok {
            failed += 1;
        }
        println!("[{}] criterion {}: {name} -- {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
