use proptest::prelude::*;

use rollwave::conditions::{alpha_profile, slope_report, weighted_mean_identity};
use rollwave::evolution::{damping_fit, space_modulated_distance, DeltaOptions, EnergyTrace, FitOptions, NormSpace};
use rollwave::expr::{Expr, Var};
use rollwave::profile::WaveProfile;
use rollwave::shock::{rankine_hugoniot_residual, solve_shock_profile, ShockOptions};
use rollwave::spectral::PeriodicGrid;
use rollwave::sweep::froude_grid;
use rollwave::ModelParams;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constant_state_alpha(f in 0.5f64..5.0, nu in 0.01f64..1.0, c in -1.0f64..1.0) {
        let p = ModelParams::st_venant(f, nu).with_speed(c);
        let w = WaveProfile::constant(p, 4.0, 16, 1.0, 1.0).unwrap();
        let a = alpha_profile(&w);
        prop_assert!(a.iter().all(|v| (v - 1.0 / (f * f)).abs() < 1e-12));
        let r = slope_report(&w);
        prop_assert!(r.pointwise_holds && r.averaged_holds);
        let id = weighted_mean_identity(&w, |t| t * t).unwrap();
        prop_assert!(id.gap < 1e-12);
    }

    #[test]
    fn damping_fit_is_scale_invariant(scale in 1e-3f64..1e3, rate in 0.1f64..3.0, floor in 0.0f64..0.5) {
        let times: Vec<f64> = (0..=60).map(|i| i as f64 * 0.05).collect();
        let mk = |s: f64| EnergyTrace {
            energy: times.iter().map(|t| s * ((-rate * t).exp() + floor)).collect(),
            l2: times.iter().map(|t| (s * (0.5 + 0.1 * t.sin())).sqrt()).collect(),
            times: times.clone(),
            ..Default::default()
        };
        let a = damping_fit(&mk(1.0), &FitOptions::default()).unwrap();
        let b = damping_fit(&mk(scale), &FitOptions::default()).unwrap();
        prop_assert!((a.eta - b.eta).abs() <= 1e-8 * (1.0 + a.eta));
        prop_assert_eq!(a.violations, 0);
        prop_assert_eq!(b.violations, 0);
    }

    #[test]
    fn shock_rankine_hugoniot(tm in 0.5f64..2.0, ratio in 1.2f64..3.0, gamma in 1.1f64..2.0) {
        let params = ModelParams::isentropic_gas(gamma, 1.0, 0.5);
        let opts = ShockOptions { n: 201, ..Default::default() };
        for (a, b) in [(tm, tm * ratio), (tm * ratio, tm)] {
            let p = solve_shock_profile(&params, a, b, &opts).unwrap();
            prop_assert!(rankine_hugoniot_residual(&p) <= 1e-12);
            prop_assert!(p.is_monotone());
            prop_assert!((p.speed > 0.0) == (b > a));
        }
    }

    #[test]
    fn grid_spacing(start in 2.0f64..3.0, span in 0.0f64..2.0, step in 0.05f64..0.5) {
        let g = froude_grid(start, start + span, step);
        prop_assert!(!g.is_empty());
        prop_assert!(g.windows(2).all(|w| ((w[1] - w[0]) - step).abs() < 1e-8));
        prop_assert!(*g.last().unwrap() <= start + span + 1e-9);
    }

    #[test]
    fn derivative_matches_difference(a in -2.0f64..2.0, b in 0.1f64..2.0, x in -1.0f64..1.0, t in 0.0f64..1.0) {
        let src = format!("{a} * sin({b} * x) * exp(-t) + x^3 * t");
        let e = Expr::parse(&src).unwrap();
        let h = 1e-6;
        let dx = e.diff(Var::X).eval(x, t);
        let dt = e.diff(Var::T).eval(x, t);
        let fx = (e.eval(x + h, t) - e.eval(x - h, t)) / (2.0 * h);
        let ft = (e.eval(x, t + h) - e.eval(x, t - h)) / (2.0 * h);
        prop_assert!((dx - fx).abs() < 1e-6 && (dt - ft).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn delta_never_exceeds_identity(seed in 0u64..1000, shift in -1.0f64..1.0, amp in 0.0f64..0.2) {
        let g = PeriodicGrid::new(32, 6.0).unwrap();
        let x = g.points();
        let k = 2.0 * std::f64::consts::PI / 6.0;
        let u: Vec<f64> = x.iter().map(|&x| 1.0 + 0.3 * (k * x).sin()).collect();
        let v: Vec<f64> = x.iter().map(|&x| 1.0 + 0.3 * (k * (x - shift)).sin() + amp * (2.0 * k * x).cos()).collect();
        let z = vec![0.0; 32];
        let opts = DeltaOptions { seed, seeds: 2, max_iter: 60, ..Default::default() };
        for space in [NormSpace::L2, NormSpace::H1] {
            let r = space_modulated_distance(&g, (&v, &z), (&u, &z), space, &opts).unwrap();
            prop_assert!(r.delta <= r.baseline);
            prop_assert!(r.delta >= 0.0);
        }
    }
}
