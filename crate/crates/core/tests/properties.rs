use cwwr::eos::{isotherm, pressure_two_component, rescale, solve_two_component};
use cwwr::phase::{classify, stationarity_residual, stationary_points};
use cwwr::specialfn::{f_value, psi_value, u_dx, u_value};
use cwwr::PhasePoint;
use proptest::prelude::*;

fn log_a() -> impl Strategy<Value = f64> {
    (-3.0f64..2.0).prop_map(|e| 10f64.powf(e))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lambert_residual(a in log_a(), x in -30.0f64..30.0) {
        let u = u_value(a, x).unwrap();
        let lhs = u.ln() + a * u;
        prop_assert!((lhs - x).abs() <= 1e-13 * x.abs().max(1.0));
    }

    #[test]
    fn u_monotone(a in log_a(), x in -20.0f64..20.0, dx in 1e-3f64..1.0, da in 1e-3f64..1.0) {
        let u = u_value(a, x).unwrap();
        prop_assert!(u_value(a, x + dx).unwrap() > u);
        prop_assert!(u_value(a * (1.0 + da), x).unwrap() < u);
    }

    #[test]
    fn u_and_f_derivatives(a in log_a(), x in -8.0f64..8.0) {
        let h = 1e-5;
        let fd_u = (u_value(a, x + h).unwrap() - u_value(a, x - h).unwrap()) / (2.0 * h);
        prop_assert!(rel(fd_u, u_dx(a, x).unwrap()) < 1e-7);
        let fd_f = (f_value(a, x + h).unwrap() - f_value(a, x - h).unwrap()) / (2.0 * h);
        prop_assert!(rel(fd_f, u_value(a, x).unwrap()) < 1e-7);
    }

    #[test]
    fn psi_increasing(y in 1e-4f64..50.0, dy in 1e-3f64..1.0) {
        prop_assert!(psi_value(y + dy).unwrap() > psi_value(y).unwrap());
    }

    #[test]
    fn swap_symmetry(a in log_a(), mu0 in -3.0f64..5.0, mu1 in -3.0f64..5.0) {
        let p = PhasePoint::new(a, mu0, mu1).unwrap();
        let s = classify(&p).unwrap();
        let t = classify(&p.swapped()).unwrap();
        prop_assert_eq!(s.region, t.region);
        let mut ys: Vec<f64> = s.maximizers.iter().map(|m| m.y).collect();
        let mut ts: Vec<f64> = t.maximizers.iter().map(|m| -m.y).collect();
        ys.sort_by(f64::total_cmp);
        ts.sort_by(f64::total_cmp);
        for (y, t) in ys.iter().zip(&ts) {
            prop_assert!((y - t).abs() <= 1e-10 * (1.0 + y.abs()));
        }
        let p0 = pressure_two_component(&p).unwrap();
        let p1 = pressure_two_component(&p.swapped()).unwrap();
        prop_assert!(rel(p0, p1) < 1e-12);
    }

    #[test]
    fn stationary_points_are_roots(a in log_a(), mu0 in -3.0f64..5.0, mu1 in -3.0f64..5.0) {
        let p = PhasePoint::new(a, mu0, mu1).unwrap();
        for s in stationary_points(&p).unwrap() {
            let r = stationarity_residual(&p, s.y).unwrap();
            prop_assert!(r.abs() <= 1e-10, "residual {r} at y={}", s.y);
        }
    }

    #[test]
    fn maximizer_densities_are_consistent(a in log_a(), mu0 in -3.0f64..5.0, mu1 in -3.0f64..5.0) {
        let p = PhasePoint::new(a, mu0, mu1).unwrap();
        let st = solve_two_component(&p).unwrap();
        for d in &st.phases {
            let (r0, r1) = d.self_consistency_residual(&p);
            prop_assert!(r0.abs() <= 1e-10 * d.rho0.max(1.0) && r1.abs() <= 1e-10 * d.rho1.max(1.0));
            prop_assert!(d.stability(a) >= -1e-10);
        }
    }

    #[test]
    fn pressure_gradient_is_density(a in 0.2f64..5.0, mu0 in -2.0f64..4.0, mu1 in -2.0f64..4.0) {
        prop_assume!((mu0 - mu1).abs() > 1e-3);
        let h = 1e-6;
        let p = PhasePoint::new(a, mu0, mu1).unwrap();
        let st = solve_two_component(&p).unwrap();
        prop_assume!(!st.solution.near_tie);
        let d = st.phases[0];
        let pr = |m0: f64, m1: f64| pressure_two_component(&PhasePoint::new(a, m0, m1).unwrap()).unwrap();
        let g0 = (pr(mu0 + h, mu1) - pr(mu0 - h, mu1)) / (2.0 * h);
        let g1 = (pr(mu0, mu1 + h) - pr(mu0, mu1 - h)) / (2.0 * h);
        let scale = d.rho0 + d.rho1;
        prop_assert!((g0 - d.rho0).abs() <= 1e-6 * scale, "{g0} vs {}", d.rho0);
        prop_assert!((g1 - d.rho1).abs() <= 1e-6 * scale, "{g1} vs {}", d.rho1);
    }

    #[test]
    fn isotherm_nondecreasing(a in 0.2f64..5.0, theta in 0.1f64..30.0) {
        let grid: Vec<f64> = (1..200).map(|i| 0.05 * i as f64 / a).collect();
        let curve = isotherm(a, theta, &grid).unwrap();
        for w in curve.samples.windows(2) {
            prop_assert!(w[1].rho >= w[0].rho);
            prop_assert!(w[1].p_hat >= w[0].p_hat - 1e-12 * w[0].p_hat.abs().max(1.0));
        }
    }

    #[test]
    fn scale_invariance(a in 0.2f64..5.0, mu0 in -2.0f64..4.0, mu1 in -2.0f64..4.0,
                        alpha in prop::sample::select(vec![0.1, 0.5, 2.0, 10.0])) {
        let p = PhasePoint::new(a, mu0, mu1).unwrap();
        let r = rescale(&p, alpha).unwrap();
        let s0 = solve_two_component(&p).unwrap();
        let s1 = solve_two_component(&r.point).unwrap();
        prop_assert_eq!(s0.solution.region, s1.solution.region);
        prop_assert!(rel(s1.pressure, s0.pressure * r.pressure_factor) < 1e-10);
        for (x, y) in s0.phases.iter().zip(&s1.phases) {
            prop_assert!(rel(y.rho0, x.rho0 * r.density_factor) < 1e-10);
            prop_assert!(rel(y.rho1, x.rho1 * r.density_factor) < 1e-10);
        }
    }
}
