use approx::assert_relative_eq;
use nullsim::field_equations::kretschmann_oracle;
use nullsim::initial_data::{schwarzschild_r_from_uv, Background, SchwarzschildInterior};
use proptest::prelude::*;

/// Plain bisection on `(1 − ρ) e^ρ = UV` for ρ = r/2M.
fn bisect_radius(uv: f64, mass: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (1.0 - mid) * mid.exp() > uv {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    2.0 * mass * 0.5 * (lo + hi)
}

proptest! {
    #[test]
    fn radius_solves_the_kruskal_relation(u in 0.01f64..3.0, t in 0.001f64..0.999, mass in 0.1f64..5.0) {
        let v = t / u;
        let r = schwarzschild_r_from_uv(u, v, mass).unwrap();
        let expected = bisect_radius(u * v, mass);
        prop_assert!((r - expected).abs() <= 1e-12 * 2.0 * mass, "r = {r}, bisection {expected}");
    }

    #[test]
    fn conformal_factor_matches_closed_form(u in 0.05f64..2.0, t in 0.01f64..0.99) {
        let mass = 0.5;
        let bh = SchwarzschildInterior::new(mass).unwrap();
        let p = bh.point(u, t / u).unwrap();
        let omega_sq = 32.0 * mass.powi(3) / p.r * (-p.r / (2.0 * mass)).exp();
        assert_relative_eq!(p.omega_sq(), omega_sq, max_relative = 1e-12);
    }
}

#[test]
fn radius_gradients_match_finite_differences() {
    let bh = SchwarzschildInterior::new(0.5).unwrap();
    let step = 1e-6;
    for &(u, v) in &[(0.5, 0.5), (0.9, 0.3), (0.2, 4.0), (0.99, 0.999)] {
        let p = bh.point(u, v).unwrap();
        let r = |u: f64, v: f64| schwarzschild_r_from_uv(u, v, 0.5).unwrap();
        let du = (r(u + step, v) - r(u - step, v)) / (2.0 * step);
        let dv = (r(u, v + step) - r(u, v - step)) / (2.0 * step);
        assert_relative_eq!(p.nu, du, max_relative = 1e-7);
        assert_relative_eq!(p.lambda, dv, max_relative = 1e-7);
    }
}

#[test]
fn sampled_metric_reproduces_textbook_curvature() {
    let mass = 0.5;
    let bg = Background::Schwarzschild(SchwarzschildInterior::new(mass).unwrap());
    let sampler = |u: f64, v: f64| bg.metric(u, v);
    for &(u, v) in &[(0.6, 0.6), (0.8, 1.1), (0.95, 1.0)] {
        let r = schwarzschild_r_from_uv(u, v, mass).unwrap();
        let exact = 48.0 * mass * mass / r.powi(6);
        assert_relative_eq!(bg.kretschmann(r), exact, max_relative = 1e-14);
        let errors: Vec<f64> = [4e-3, 2e-3, 1e-3]
            .iter()
            .map(|&h| (kretschmann_oracle(&sampler, u, v, h, h).unwrap() / exact - 1.0).abs())
            .collect();
        assert!(errors[2] < 5e-3, "relative error {errors:?} at ({u}, {v})");
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.8..=2.2).contains(&order), "order {order} from {errors:?} at ({u}, {v})");
        }
    }
}

#[test]
fn flat_background_has_no_curvature() {
    let bg = Background::Minkowski;
    let sampler = |u: f64, v: f64| bg.metric(u, v);
    let k = kretschmann_oracle(&sampler, -0.5, 1.5, 1e-3, 1e-3).unwrap();
    assert!(k.abs() < 1e-5, "K = {k}");
}
