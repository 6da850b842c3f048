use nzbc_asym::asymptotics::{q_plane_wave, soliton_phase_factor};
use nzbc_asym::config::{Grid, RunConfig, ScatteringBlock};
use nzbc_asym::phase::wrap_angle;
use nzbc_asym::spectral::{lambda_fn, Reflection, Side};
use nzbc_asym::special::{theta3, ThetaParams};
use nzbc_asym::C64;
use proptest::prelude::*;
use std::f64::consts::PI;

proptest! {
    #[test]
    fn plane_wave_keeps_the_background_modulus(q in 0.2f64..3.0, ph in -PI..PI, g in -20.0f64..20.0) {
        let q_pw = q_plane_wave(C64::from_polar(q, ph), g);
        prop_assert!((q_pw.norm() - q).abs() < 1e-13 * q);
    }

    #[test]
    fn soliton_phase_factor_is_unimodular(re in -4.0f64..-0.01, im in -4.0f64..-0.01, q in 0.3f64..2.0) {
        prop_assert!((soliton_phase_factor(C64::new(re, im), q).norm() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn theta_is_even_and_periodic(m in 0.05f64..0.95, x in -2.0f64..2.0, y in -0.3f64..0.3) {
        let p = ThetaParams::from_modulus(m, 1e-17).unwrap();
        let z = C64::new(x, y * p.tau.im);
        let t = theta3(z, &p).unwrap();
        let scale = t.norm().max(1.0);
        prop_assert!((theta3(z + 1.0, &p).unwrap() - t).norm() < 1e-12 * scale);
        prop_assert!((theta3(-z, &p).unwrap() - t).norm() < 1e-12 * scale);
        // Θ(z + τ) = e^{−iπτ − 2iπz} Θ(z)
        let shifted = theta3(z + p.tau, &p).unwrap();
        let factor = (C64::new(0.0, -PI) * p.tau - C64::new(0.0, 2.0 * PI) * z).exp();
        prop_assert!((shifted - factor * t).norm() < 1e-10 * (shifted.norm() + scale));
    }

    #[test]
    fn lambda_branch_symmetries(re in -5.0f64..5.0, im in -5.0f64..5.0, q in 0.2f64..2.0) {
        prop_assume!(re.abs() > 1e-6);
        let k = C64::new(re, im);
        let l = lambda_fn(k, q, Side::Auto);
        prop_assert!((l * l - (k * k + q * q)).norm() < 1e-12 * (1.0 + k.norm_sqr()));
        prop_assert!((lambda_fn(k.conj(), q, Side::Auto) - l.conj()).norm() < 1e-12 * (1.0 + l.norm()));
        prop_assert!((lambda_fn(-k, q, Side::Auto) + l).norm() < 1e-12 * (1.0 + l.norm()));
        prop_assert!((l * k.conj()).re > 0.0);
    }

    #[test]
    fn reflection_schwarz_reflection(a in 0.0f64..0.9, w in 0.3f64..4.0, re in -5.0f64..5.0, im in -2.0f64..2.0) {
        let r = Reflection::Gaussian { amplitude: a, width: w };
        let k = C64::new(re, im);
        prop_assert!((r.rbar(k.conj()) - r.r(k).conj()).norm() < 1e-15);
        prop_assert!((r.rbar(C64::new(re, 0.0)) - r.r(C64::new(re, 0.0)).conj()).norm() < 1e-15);
    }

    #[test]
    fn wrapped_angles_stay_in_range(a in -100.0f64..100.0) {
        let w = wrap_angle(a);
        prop_assert!(w > -PI && w <= PI);
        let turns = (a - w) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn range_grids_hit_both_ends(start in -10.0f64..0.0, len in 0.1f64..10.0, n in 2usize..200) {
        let v = Grid::Range { start, stop: start + len, n }.values();
        prop_assert_eq!(v.len(), n);
        prop_assert_eq!(v[0], start);
        prop_assert!((v[n - 1] - (start + len)).abs() < 1e-12);
    }

    #[test]
    fn configs_survive_json(re in -3.0f64..-0.01, im in -3.0f64..-0.01, ph in -3.0f64..3.0) {
        let cfg = RunConfig {
            scattering: ScatteringBlock {
                q_o: 1.0,
                q_minus_phase: ph,
                p: C64::new(re, im),
                r_norm: C64::new(0.5, -0.2),
                reflection: Reflection::Gaussian { amplitude: 0.3, width: 2.0 },
            },
            xi_grid: Some(Grid::Range { start: -5.0, stop: -1.0, n: 5 }),
            field: None,
            ray_times: Some(Grid::List(vec![1.0, 2.5])),
            oracle: None,
            compare: None,
            tolerances: Default::default(),
            output: None,
        };
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
