use nullsim::evolution::{convergence_study, march, ConvergenceKind, SchemeConfig};
use nullsim::initial_data::{Gauge, InitialDataSpec, NullMap, PulseProfile, SchwarzschildInterior};
use nullsim::{DoubleNullGrid, FieldState, PointStatus};

const MASS: f64 = 0.5;

/// Unit Kruskal square whose diagonal runs from r = 0.9 to r = 0.05,
/// resolved with an exponential gauge.
fn interior_domain(n: usize) -> (DoubleNullGrid, Gauge) {
    let bh = SchwarzschildInterior::new(MASS).unwrap();
    let lo = bh.uv_at_radius(0.9).sqrt();
    let hi = bh.uv_at_radius(0.05).sqrt();
    let map = NullMap::Exponential { limit: 1.0, rate: ((1.0 - lo) / (1.0 - hi)).ln() };
    (DoubleNullGrid::new(lo, lo + 1.0, lo, lo + 1.0, n, n).unwrap(), Gauge { u: map, v: map })
}

fn evolve(spec: &InitialDataSpec, grid: &DoubleNullGrid) -> FieldState {
    march(spec.build(grid).unwrap(), &SchemeConfig::default()).map_err(|a| a.error).unwrap().0
}

fn pulse_spec(amplitude: f64) -> (InitialDataSpec, DoubleNullGrid) {
    let spec = InitialDataSpec::pulse(PulseProfile::new(amplitude, 1.002, 1.018, 4));
    (spec, DoubleNullGrid::new(-1.0, 0.9, 1.0, 1.02, 121, 41).unwrap())
}

#[test]
fn perturbing_a_ray_only_changes_its_future() {
    let (spec, grid) = pulse_spec(800.0);
    let base = spec.build(&grid).unwrap();
    let (i0, j0) = (40, 15);
    let mut kicked = base.clone();
    let mut p = kicked.get(i0, 0);
    p.phi += 1e-3;
    p.z += 1e-2;
    kicked.set_active(i0, 0, p);
    let mut kicked_v = base.clone();
    let mut q = kicked_v.get(0, j0);
    q.w *= 1.01;
    kicked_v.set_active(0, j0, q);

    let config = SchemeConfig::default();
    let a = march(base, &config).map_err(|a| a.error).unwrap().0;
    let b = march(kicked, &config).map_err(|a| a.error).unwrap().0;
    let c = march(kicked_v, &config).map_err(|a| a.error).unwrap().0;
    let mut changed = (0, 0);
    for i in 0..grid.n_u {
        for j in 0..grid.n_v {
            if i < i0 {
                assert_eq!(a.get(i, j), b.get(i, j), "({i}, {j}) precedes the kicked u-ray");
            } else if j > 0 && a.get(i, j) != b.get(i, j) {
                changed.0 += 1;
            }
            if j < j0 {
                assert_eq!(a.get(i, j), c.get(i, j), "({i}, {j}) precedes the kicked v-ray");
            } else if i > 0 && a.get(i, j) != c.get(i, j) {
                changed.1 += 1;
            }
        }
    }
    assert!(changed.0 > 0 && changed.1 > 0);
}

#[test]
fn evolution_is_independent_of_thread_count() {
    let (spec, grid) = pulse_spec(2000.0);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| evolve(&spec, &grid))
    };
    let serial = run(1);
    assert_eq!(serial, run(3));
    assert_eq!(serial, evolve(&spec, &grid));
}

#[test]
fn schwarzschild_converges_at_second_order_in_a_distorted_gauge() {
    let bh = SchwarzschildInterior::new(MASS).unwrap();
    let lo = bh.uv_at_radius(0.9).sqrt();
    let grid = DoubleNullGrid::new(lo, lo + 0.4, lo, lo + 0.4, 41, 41).unwrap();
    let gauge = Gauge { u: NullMap::Quadratic { kappa: 0.3 }, v: NullMap::Identity };
    let spec = InitialDataSpec::schwarzschild(MASS).with_gauge(gauge);
    let report = convergence_study(&spec, &grid, 3, &SchemeConfig::default()).unwrap();
    assert_eq!(report.kind, ConvergenceKind::Exact);
    assert!(!report.non_monotone && !report.degenerate);
    for order in report.orders() {
        assert!((1.8..=2.2).contains(&order), "{:?}", report.rows);
    }
}

#[test]
fn gauge_change_preserves_radius_at_shared_events() {
    let bh = SchwarzschildInterior::new(MASS).unwrap();
    let lo = bh.uv_at_radius(0.9).sqrt();
    let n = 161;
    let grid = DoubleNullGrid::new(lo, lo + 0.4, lo, lo + 0.4, n, n).unwrap();
    let kappa = 0.3;
    let warped = InitialDataSpec::schwarzschild(MASS).with_gauge(Gauge { u: NullMap::Quadratic { kappa }, v: NullMap::Identity });
    let state = evolve(&warped, &grid);
    let step = grid.h();
    for i in [n / 4, n / 2, n - 1] {
        let s = grid.u(i) - lo;
        let big_u = grid.u(i) + kappa * s * s;
        for j in [n / 3, n - 1] {
            let exact = bh.r(big_u, grid.v(j)).unwrap();
            let r = state.active(i, j).unwrap().r;
            assert!((r - exact).abs() < 10.0 * step * step, "({i}, {j}): {r} vs {exact}");
        }
    }
}

#[test]
fn weak_perturbation_self_converges_at_second_order() {
    let (grid, gauge) = interior_domain(81);
    let pulse = PulseProfile::new(0.01, grid.u_min + 0.1, grid.u_min + 0.5, 4);
    let spec = InitialDataSpec::perturbed_schwarzschild(MASS, 0.01, Some(pulse), Some(pulse)).with_gauge(gauge);
    let report = convergence_study(&spec, &grid, 4, &SchemeConfig::default()).unwrap();
    assert_eq!(report.kind, ConvergenceKind::SelfConvergence);
    let orders = report.orders();
    assert_eq!(orders.len(), 2, "{:?}", report.rows);
    for order in orders {
        assert!((1.8..=2.2).contains(&order), "{:?}", report.rows);
    }
}

#[test]
fn floor_excises_a_future_set() {
    let (grid, gauge) = interior_domain(61);
    let spec = InitialDataSpec::schwarzschild(MASS).with_gauge(gauge);
    let config = SchemeConfig { r_floor: 0.2, ..SchemeConfig::default() };
    let (state, report) = march(spec.build(&grid).unwrap(), &config).map_err(|a| a.error).unwrap();
    assert!(report.cells_excised > 0);
    assert_eq!(state.count(PointStatus::Excised), report.cells_excised);
    assert_eq!(state.count(PointStatus::Unset), 0);
    for i in 0..grid.n_u {
        for j in 0..grid.n_v {
            if state.status(i, j) == PointStatus::Excised {
                if i + 1 < grid.n_u {
                    assert_eq!(state.status(i + 1, j), PointStatus::Excised);
                }
                if j + 1 < grid.n_v {
                    assert_eq!(state.status(i, j + 1), PointStatus::Excised);
                }
            } else {
                assert!(state.get(i, j).r >= 0.2 * 0.99 || i == 0 || j == 0);
            }
        }
    }
}
