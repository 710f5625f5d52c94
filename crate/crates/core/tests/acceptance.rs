//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! `ACCEPTANCE_ONLY=3,7` restricts the run to the listed criteria.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rollwave::bloch::{assemble_bloch, eigenvalues, hf_asymptote, resolvent_region_sup, default_radius, uniform_xis, RegionSpec};
use rollwave::conditions::{slope_report, weighted_mean_identity};
use rollwave::evolution::{
    convolution_fit, evolve_linear, evolve_modulated, evolve_nonlinear, random_smooth_perturbation,
    space_modulated_distance, DeltaOptions, EvolveConfig, FitOptions, ModulatedOptions, ModulationInput, NormSpace,
};
use rollwave::exec::Exec;
use rollwave::gauge::{build_gauge, dissipation_coefficients, EnergyWeight, Phi2Choice};
use rollwave::model::{constant_state_spectrum, default_wavenumbers, instability_onset};
use rollwave::profile::{check_mean_identity, refine, WaveProfile};
use rollwave::shock::{
    build_interpolant, build_shock_gauge, evolve_shock_linear, gaussian_perturbation, rankine_hugoniot_residual,
    solve_shock_profile, ShockEvolveConfig, ShockGaugeOde, ShockOptions,
};
use rollwave::spectral::PeriodicGrid;
use rollwave::sweep::{corpus, run_scan, ScanConfig};
use rollwave::ModelParams;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Check = fn() -> Outcome;

fn corpus_512() -> &'static [WaveProfile] {
    static C: OnceLock<Vec<WaveProfile>> = OnceLock::new();
    C.get_or_init(|| corpus(512).expect("corpus branch"))
}

fn corpus_at(f: f64) -> &'static WaveProfile {
    corpus_512().iter().find(|w| (w.froude() - f).abs() < 1e-9).expect("corpus member")
}

fn c1_mean_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for w in corpus_512() {
        let fs: [fn(f64) -> f64; 4] = [|_| 1.0, |t| t, |t| t * t, |t| t.powi(-3)];
        for f in fs {
            worst = worst.max(check_mean_identity(w, f).abs());
        }
    }
    outcome(worst <= 1e-8, format!("{} profiles, max |<f(tau) u_x>| = {worst:.2e}", corpus_512().len()))
}

fn c2_averaged_positivity() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut min_lhs = f64::INFINITY;
    for w in corpus_512() {
        let gs: [fn(f64) -> f64; 3] = [|_| 1.0, |t| t * t, |t| t * t * t];
        for g in gs {
            let m = weighted_mean_identity(w, g).expect("positive weight");
            worst = worst.max(m.gap);
            min_lhs = min_lhs.min(m.lhs);
        }
    }
    outcome(worst <= 1e-8 && min_lhs > 0.0, format!("max gap {worst:.2e}, min lhs {min_lhs:.4e}"))
}

fn c3_threshold() -> Outcome {
    let cfg = ScanConfig::default();
    let res = run_scan(&cfg).expect("scan");
    let b = &res.summary.branches[0];
    let failures = b.failures;
    let min_avg = res.rows.iter().map(|r| r.averaged_value).fold(f64::INFINITY, f64::min);
    match b.f_star {
        Some(f) => outcome(
            (3.0..=4.0).contains(&f) && res.summary.averaged_positive && failures == 0,
            format!("N = {}, {} rows, F* = {f:.4} in {:?}, min averaged {min_avg:.4e}, failures {failures}", cfg.n, res.rows.len(), b.bracket.unwrap()),
        ),
        None => outcome(false, format!("no flip of the pointwise condition, failures {failures}")),
    }
}

fn c4_gauge() -> Outcome {
    let mut worst_defect: f64 = 0.0;
    let mut worst_cross: f64 = 0.0;
    let mut min_coer = f64::INFINITY;
    let mut max_inv: f64 = 0.0;
    let mut failing = 0;
    for w in corpus_512() {
        let g = build_gauge(w, Phi2Choice::Auto, EnergyWeight::Form).expect("gauge");
        let d = dissipation_coefficients(&g, w);
        worst_defect = worst_defect.max(g.periodicity_defect);
        worst_cross = worst_cross.max(d.cross_relative);
        min_coer = min_coer.min(g.coercivity_min);
        max_inv = max_inv.max(1.0 / g.phi1_bounds.0);
        if !slope_report(w).pointwise_holds {
            failing += 1;
        }
    }
    outcome(
        worst_defect <= 1e-8 && worst_cross <= 1e-12 && min_coer > 0.0 && max_inv.is_finite() && failing >= 2,
        format!(
            "defect {worst_defect:.1e}, cross {worst_cross:.1e}, min coercivity {min_coer:.3e}, max 1/phi1 {max_inv:.3}, pointwise-failing profiles {failing}"
        ),
    )
}

/// Smallest damping rate over 20 random perturbations, and the total
/// number of violated samples.
fn ensemble_eta(w: &WaveProfile, dt: f64) -> (f64, usize) {
    let g = build_gauge(w, Phi2Choice::Auto, EnergyWeight::Form).expect("gauge");
    let cfg = EvolveConfig { dt, t_final: 2.0, sample_every: (0.01 / dt).round() as usize, ..Default::default() };
    let mut eta = f64::INFINITY;
    let mut viol = 0;
    for seed in 0..20 {
        let (t0, u0) = random_smooth_perturbation(&w.grid(), seed, 8, 1e-3);
        let mut run = evolve_linear(w, Some(&g), &t0, &u0, &cfg).expect("linear run");
        let f = run.trace.fit(&FitOptions::default()).expect("fit");
        eta = eta.min(f.eta);
        viol += f.violations;
    }
    (eta, viol)
}

fn c5_linear_damping() -> Outcome {
    let w512 = corpus_at(4.0);
    let w256 = refine(w512, 256).expect("refine");
    let fails = !slope_report(&w256).pointwise_holds;
    let (e0, v0) = ensemble_eta(&w256, 2e-3);
    let (e1, v1) = ensemble_eta(&w256, 1e-3);
    let (e2, v2) = ensemble_eta(w512, 2e-3);
    let stable = [e1, e2].iter().all(|e| (e / e0 - 1.0).abs() <= 0.2);
    outcome(
        fails && e0 > 0.0 && v0 + v1 + v2 == 0 && stable,
        format!("F = 4 (pointwise fails: {fails}), eta {e0:.4} / dt/2 {e1:.4} / 2N {e2:.4}, violations {}", v0 + v1 + v2),
    )
}

fn c6_hf_asymptote() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for w in corpus_512() {
        let errs: Vec<f64> = [128, 192, 256]
            .iter()
            .map(|&m| hf_asymptote(w, m, 0.0, (0.25, 0.5)).map(|h| h.relative_error).unwrap_or(f64::INFINITY))
            .collect();
        monotone &= errs.windows(2).all(|p| p[1] <= p[0]);
        worst = worst.max(errs[2]);
    }
    outcome(worst <= 0.05 && monotone, format!("max relative error at M = 256: {worst:.4}, decreasing in M: {monotone}"))
}

fn c7_resolvent() -> Outcome {
    let w = corpus_at(4.0);
    let eta = slope_report(w).averaged_value;
    let xis = uniform_xis(w.period, 16);
    let r = default_radius(w, eta, 256, &xis, Exec::best()).expect("radius");
    let spec = RegionSpec { eta, radius: r, rings: 4, angles: 7, xi_count: 16 };
    let lo = resolvent_region_sup(w, 1, 128, &spec, Exec::best()).expect("scan");
    let hi = resolvent_region_sup(w, 1, 256, &spec, Exec::best()).expect("scan");
    let change = (hi.sup / lo.sup - 1.0).abs();
    outcome(
        lo.sup.is_finite() && hi.sup.is_finite() && change <= 0.1,
        format!("F = 4, R = {r:.3}, sup M=128 {:.4}, M=256 {:.4}, change {:.1}%", lo.sup, hi.sup, 100.0 * change),
    )
}

/// Growth rate of a single eigenmode of the constant-state symbol under
/// the linear scheme, Richardson-extrapolated over three step sizes.
fn scheme_rate(w: &WaveProfile, k: f64, lam: Complex64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let th = i * k / (lam - i * w.speed * k);
    let x = w.points();
    let tau: Vec<f64> = x.iter().map(|&x| (th * Complex64::from_polar(1.0, k * x)).re).collect();
    let u: Vec<f64> = x.iter().map(|&x| Complex64::from_polar(1.0, k * x).re).collect();
    let t_final = 0.5;
    let rate = |dt: f64| -> Complex64 {
        let cfg = EvolveConfig { dt, t_final, snapshot_every: 0, ..Default::default() };
        let r = evolve_linear(w, None, &tau, &u, &cfg).expect("linear run");
        let (_, _, uf) = r.trajectory.last().expect("final state");
        // Fourier coefficient of e^{ikx} in u
        let n = uf.len() as f64;
        let c: Complex64 = x.iter().zip(uf).map(|(&x, &v)| v * Complex64::from_polar(1.0, -k * x)).sum::<Complex64>() / n;
        (2.0 * c).ln() / t_final
    };
    let (a, b, c) = (rate(4e-3), rate(2e-3), rate(1e-3));
    let ab = (4.0 * b - a) / 3.0;
    let bc = (4.0 * c - b) / 3.0;
    (8.0 * bc - ab) / 7.0
}

fn c8_constant_state() -> Outcome {
    let params = ModelParams::st_venant(1.5, 0.1).with_speed(0.7);
    let period = 2.0 * PI;
    let w = WaveProfile::constant(params, period, 32, 1.0, 1.0).expect("constant state");
    let modes = 16;
    let mut worst_bloch: f64 = 0.0;
    for xi in [0.0, 0.13, -0.4] {
        let op = assemble_bloch(&w, xi, modes).expect("bloch");
        let mut got = eigenvalues(&op).expect("eigenvalues");
        let mut want: Vec<Complex64> = (-(modes as i64)..=modes as i64)
            .flat_map(|j| constant_state_spectrum(&w.params, xi + 2.0 * PI * j as f64 / period))
            .collect();
        let key = |z: &Complex64| (z.re * 1e6).round() as i64 * 1_000_000_000 + (z.im * 1e3).round() as i64;
        got.sort_by_key(key);
        want.sort_by_key(key);
        for z in &want {
            let d = got.iter().map(|g| (g - z).norm()).fold(f64::INFINITY, f64::min);
            worst_bloch = worst_bloch.max(d / (1.0 + z.norm()));
        }
    }
    let mut worst_rate: f64 = 0.0;
    for k in [1.0, 2.0] {
        let lam = constant_state_spectrum(&w.params, k)[0];
        let r = scheme_rate(&w, k, lam);
        worst_rate = worst_rate.max((r - lam).norm() / (1.0 + lam.norm()));
    }
    let onset = instability_onset(&ModelParams::st_venant(1.5, 0.1), 1.5, 2.5, 1e-4, &default_wavenumbers(801)).expect("onset");
    outcome(
        worst_bloch <= 1e-8 && worst_rate <= 1e-8 && (onset - 2.0).abs() <= 1e-2,
        format!("Bloch vs symbol {worst_bloch:.1e}, scheme rate {worst_rate:.1e}, onset F = {onset:.5}"),
    )
}

fn c9_modulated() -> Outcome {
    let w = refine(corpus_at(4.0), 256).expect("refine");
    let g = build_gauge(&w, Phi2Choice::Auto, EnergyWeight::Form).expect("gauge");
    let grid = w.grid();
    let (t0, u0) = random_smooth_perturbation(&grid, 7, 8, 1e-3);
    // psi = 0 against the plain nonlinear run
    let cfg = EvolveConfig { dt: 2e-3, t_final: 1.0, hk: 2, ..Default::default() };
    let full_t: Vec<f64> = t0.iter().zip(&w.tau_bar).map(|(a, b)| a + b).collect();
    let full_u: Vec<f64> = u0.iter().zip(&w.u_bar).map(|(a, b)| a + b).collect();
    let plain = evolve_nonlinear(&w, None, &full_t, &full_u, &cfg).expect("nonlinear run");
    let zero = evolve_modulated(&w, &g, &t0, &u0, &ModulationInput::zero(), &cfg, &ModulatedOptions::default()).expect("modulated run");
    let (_, pt, pu) = plain.trajectory.last().unwrap();
    let (_, zt, zu) = zero.trajectory.last().unwrap();
    let mut gap: f64 = 0.0;
    let mut size: f64 = 0.0;
    for j in 0..grid.n() {
        gap = gap.max((pt[j] - w.tau_bar[j] - zt[j]).abs()).max((pu[j] - w.u_bar[j] - zu[j]).abs());
        size = size.max(zt[j].abs()).max(zu[j].abs());
    }
    let rel = gap / size;
    // psi = eps sin(2 pi x / X) e^{-t}
    let consts = [("X".to_string(), w.period), ("pi".to_string(), PI)].into();
    let psi = ModulationInput::parse("1e-3 * sin(2 * pi * x / X) * exp(-t)", &consts).expect("psi");
    let cfg = EvolveConfig { dt: 2e-3, t_final: 3.0, hk: 2, sample_every: 5, ..Default::default() };
    let run = evolve_modulated(&w, &g, &t0, &u0, &psi, &cfg, &ModulatedOptions::default()).expect("modulated run");
    let tr = &run.trace;
    let mut thetas = Vec::new();
    let mut gaps = Vec::new();
    for s in [1u32, 2] {
        let y: Vec<f64> = if s == 1 { tr.h1.iter().map(|v| v * v).collect() } else { tr.hk.iter().map(|v| v * v).collect() };
        let g: Vec<f64> = tr.times.iter().zip(&tr.l2).map(|(&t, l)| l * l + psi.size(&grid, t, s).powi(2)).collect();
        let f = convolution_fit(&tr.times, &y, &g, 2.0, 1e3).expect("fit");
        thetas.push(f.theta);
        gaps.push(f.max_gap);
    }
    let ok = rel <= 1e-10 && thetas.iter().all(|t| *t > 0.0) && gaps.iter().all(|g| *g >= -1e-12);
    outcome(
        ok,
        format!("psi = 0 vs plain run {rel:.1e}; theta s=1 {:.4}, s=2 {:.4}, min slack {:.2e}", thetas[0], thetas[1], gaps[0].min(gaps[1])),
    )
}

fn c10_shock() -> Outcome {
    let params = ModelParams::isentropic_gas(5.0 / 3.0, 1.0, 0.5);
    let opts = ShockOptions { n: 801, half_width: Some(40.0), ..Default::default() };
    let p = solve_shock_profile(&params, 1.0, 2.0, &opts).expect("shock profile");
    let rh = rankine_hugoniot_residual(&p);
    let theta = 0.5 * p.decay_rate;
    let interp = build_interpolant(&p, theta).expect("interpolant");
    let decays = interp.fitted_rates.0 >= 0.9 * theta && interp.fitted_rates.1 >= 0.9 * theta;
    let g = build_shock_gauge(&p, &interp, None, ShockGaugeOde::Transport).expect("shock gauge");
    let cross = g.cross.iter().fold(0.0f64, |m, v| m.max(v.abs())) / g.phi1_bounds.1;
    let (t0, u0) = gaussian_perturbation(&p, 1e-3, 0.0, 1.0);
    let run = evolve_shock_linear(&p, &g, &t0, &u0, &ShockEvolveConfig::default()).expect("shock run");
    let ok = rh <= 1e-12 && p.is_monotone() && decays && cross <= 1e-12 && run.fit.eta > 0.0 && run.fit.violations == 0;
    outcome(
        ok,
        format!(
            "RH {rh:.1e}, monotone {}, interpolant rates {:.3}/{:.3} vs theta {theta:.3}, cross {cross:.1e}, eta {:.4}, violations {}",
            p.is_monotone(),
            interp.fitted_rates.0,
            interp.fitted_rates.1,
            run.fit.eta,
            run.fit.violations
        ),
    )
}

fn c11_delta() -> Outcome {
    let grid = PeriodicGrid::new(64, 10.0).expect("grid");
    let x = grid.points();
    let k = 2.0 * PI / 10.0;
    let wave = |s: f64| -> (Vec<f64>, Vec<f64>) {
        (
            x.iter().map(|&x| 1.0 + 0.3 * (k * (x - s)).sin() + 0.1 * (2.0 * k * (x - s)).cos()).collect(),
            x.iter().map(|&x| 0.5 * (k * (x - s)).cos()).collect(),
        )
    };
    let opts = DeltaOptions::default();
    let (a, b) = wave(0.0);
    let same = space_modulated_distance(&grid, (&a, &b), (&a, &b), NormSpace::L2, &opts).expect("delta");
    let (c, d) = wave(0.7);
    let shift = space_modulated_distance(&grid, (&c, &d), (&a, &b), NormSpace::L2, &opts).expect("delta");
    let mut below = true;
    for seed in 0..4 {
        let (p, q) = random_smooth_perturbation(&grid, seed, 6, 0.2);
        let pt: Vec<f64> = a.iter().zip(&p).map(|(x, y)| x + y).collect();
        let qu: Vec<f64> = b.iter().zip(&q).map(|(x, y)| x + y).collect();
        for space in [NormSpace::L2, NormSpace::H1] {
            let r = space_modulated_distance(&grid, (&pt, &qu), (&a, &b), space, &opts).expect("delta");
            below &= r.delta <= r.baseline;
        }
    }
    outcome(
        same.delta == 0.0 && shift.delta <= 1e-6 && below,
        format!("delta(u, u) = {:.1e}, shifted pair {:.2e}, never above baseline: {below}", same.delta, shift.delta),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 11] = [
        ("mean identity", c1_mean_identity),
        ("averaged positivity", c2_averaged_positivity),
        ("threshold reproduction", c3_threshold),
        ("gauge validity", c4_gauge),
        ("linear damping", c5_linear_damping),
        ("high-frequency asymptote", c6_hf_asymptote),
        ("resolvent bounds", c7_resolvent),
        ("constant-state oracle", c8_constant_state),
        ("modulated reduction", c9_modulated),
        ("shock suite", c10_shock),
        ("space-modulated distance", c11_delta),
    ];
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let id = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let t = Instant::now();
        let r = check();
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} {name}: {} ({:.1}s)", r.detail, t.elapsed().as_secs_f64());
        if !r.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
