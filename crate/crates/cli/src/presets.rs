//! Reference problems in units with 2M = 1.

use nullsim::evolution::SchemeConfig;
use nullsim::initial_data::{Gauge, InitialDataSpec, NullMap, PulseProfile, SchwarzschildInterior};

use crate::config::{GridConfig, RunConfig};

pub const REFERENCE_MASS: f64 = 0.5;

fn interior() -> SchwarzschildInterior {
    SchwarzschildInterior { mass: REFERENCE_MASS }
}

/// Exponential gauge on the unit square `[lo, lo + 1]²` whose diagonal runs
/// from radius `r_start` to radius `r_end` of the Schwarzschild interior.
fn resolved_interior(n: usize, r_start: f64, r_end: f64) -> (GridConfig, Gauge) {
    let bh = interior();
    let lo = bh.uv_at_radius(r_start).sqrt();
    let hi = bh.uv_at_radius(r_end).sqrt();
    let map = NullMap::Exponential { limit: 1.0, rate: ((1.0 - lo) / (1.0 - hi)).ln() };
    let grid = GridConfig { u_min: lo, u_max: lo + 1.0, v_min: lo, v_max: lo + 1.0, n_u: n, n_v: n };
    (grid, Gauge { u: map, v: map })
}

/// Schwarzschild interior from r = 0.9 down to r = 0.05 on an `n × n` grid.
pub fn schwarzschild_reference(n: usize) -> RunConfig {
    let (grid, gauge) = resolved_interior(n, 0.9, 0.05);
    RunConfig::new(grid, InitialDataSpec::schwarzschild(REFERENCE_MASS).with_gauge(gauge), SchemeConfig::default())
}

/// Perturbed interior on the same domain as [`schwarzschild_reference`],
/// with pulses of size `epsilon` on both cones.
pub fn perturbed_reference(n: usize, epsilon: f64) -> RunConfig {
    let (grid, gauge) = resolved_interior(n, 0.9, 0.05);
    let pulse = PulseProfile::new(epsilon, grid.u_min + 0.1, grid.u_min + 0.5, 4);
    let spec = InitialDataSpec::perturbed_schwarzschild(REFERENCE_MASS, epsilon, Some(pulse), Some(pulse)).with_gauge(gauge);
    RunConfig::new(grid, spec, SchemeConfig::default())
}

pub const NEAR_SINGULARITY_R_START: f64 = 0.03;
pub const NEAR_SINGULARITY_R_END: f64 = 0.008;
pub const NEAR_SINGULARITY_FLOOR: f64 = 0.0012;

/// Kruskal square whose initial corner sits at r = 0.03 and whose cones end
/// at r = 0.008, evolved up to the excision floor. `epsilon = 0` gives the
/// unperturbed interior.
pub fn near_singularity(n: usize, epsilon: f64) -> RunConfig {
    let bh = interior();
    let a = bh.uv_at_radius(NEAR_SINGULARITY_R_START).sqrt();
    let b = bh.uv_at_radius(NEAR_SINGULARITY_R_END) / a;
    let len = b - a;
    let grid = GridConfig { u_min: a, u_max: b, v_min: a, v_max: b, n_u: n, n_v: n };
    let spec = if epsilon == 0.0 {
        InitialDataSpec::schwarzschild(REFERENCE_MASS)
    } else {
        let pulse = PulseProfile::new(epsilon, a + 0.05 * len, a + 0.45 * len, 4);
        InitialDataSpec::perturbed_schwarzschild(REFERENCE_MASS, epsilon, Some(pulse), Some(pulse))
    };
    let scheme = SchemeConfig { r_floor: NEAR_SINGULARITY_FLOOR, ..SchemeConfig::default() };
    RunConfig::new(grid, spec, scheme)
}

/// Flat data with a scalar pulse on the outgoing cone `u = -1`,
/// `v ∈ [1, 1.02]`, supported on `[1.002, 1.018]`.
pub fn pulse_collapse(amplitude: f64) -> RunConfig {
    let grid = GridConfig { u_min: -1.0, u_max: 0.9, v_min: 1.0, v_max: 1.02, n_u: 401, n_v: 81 };
    let spec = InitialDataSpec::pulse(PulseProfile::new(amplitude, 1.002, 1.018, 4));
    RunConfig::new(grid, spec, SchemeConfig::default())
}

/// Flat space on `[-1, 0] × [1, 2]`.
pub fn minkowski(n: usize) -> RunConfig {
    let grid = GridConfig { u_min: -1.0, u_max: 0.0, v_min: 1.0, v_max: 2.0, n_u: n, n_v: n };
    RunConfig::new(grid, InitialDataSpec::minkowski(), SchemeConfig::default())
}
