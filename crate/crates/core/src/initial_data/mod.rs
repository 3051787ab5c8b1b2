//! Characteristic data on the initial outgoing cone `u = u_min` (row `i = 0`)
//! and incoming cone `v = v_min` (column `j = 0`).
//!
//! Gauge: on the incoming cone Ω is the background value (closed-form
//! Schwarzschild, or 1 for flat families) and r is marched from the `u`
//! constraint; on the outgoing cone r is the background value and log Ω is
//! marched from the `v` constraint, continuous with the corner. Transverse
//! derivatives are integrated along each cone from the wave equations. All
//! marches are trapezoidal, so the discrete constraint residuals vanish to
//! round-off on the cones.

mod kruskal;

pub use kruskal::{schwarzschild_r_from_uv, SchwarzschildInterior};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_equations::{hawking_mass_at, rhs_phi_wave, rhs_r_wave};
use crate::geometry::{DoubleNullGrid, FieldState, PointState};

const MARCH_TOL: f64 = 1e-15;
const MARCH_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Minkowski,
    Schwarzschild,
    PerturbedSchwarzschild,
    Pulse,
}

/// Smooth monotone map from a grid null coordinate `x ∈ [x_min, x_max]` to the
/// background's null coordinate `X`. Every map fixes `X(x_min) = x_min`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NullMap {
    #[default]
    Identity,
    /// `X = x + κ (x − x_min)²`
    Quadratic { kappa: f64 },
    /// `X = L − (L − x_min) e^{−k (x − x_min)}`: spacing in `X` shrinks
    /// geometrically toward the accumulation value `L`.
    Exponential { limit: f64, rate: f64 },
}

impl NullMap {
    /// `(X, dX/dx)` at `x`.
    pub fn map(&self, x: f64, x_min: f64) -> (f64, f64) {
        match *self {
            NullMap::Identity => (x, 1.0),
            NullMap::Quadratic { kappa } => {
                let s = x - x_min;
                (x + kappa * s * s, 1.0 + 2.0 * kappa * s)
            }
            NullMap::Exponential { limit, rate } => {
                let e = (-rate * (x - x_min)).exp();
                let span = limit - x_min;
                (limit - span * e, rate * span * e)
            }
        }
    }

    fn validate(&self, x_min: f64, x_max: f64) -> Result<()> {
        match *self {
            NullMap::Identity => Ok(()),
            NullMap::Quadratic { kappa } => {
                if kappa.is_finite() && 1.0 + 2.0 * kappa * (x_max - x_min) > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!("quadratic map with kappa = {kappa} is not monotone on the grid")))
                }
            }
            NullMap::Exponential { limit, rate } => {
                if rate > 0.0 && rate.is_finite() && limit > x_min && limit.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "exponential map needs rate > 0 and limit > {x_min}, got rate = {rate}, limit = {limit}"
                    )))
                }
            }
        }
    }
}

/// Coordinate gauge: how grid `(u, v)` relate to the background's null
/// coordinates. Under `U = f(u)`, ∂ᵤr and ∂ᵤφ pick up `f'(u)` and log Ω
/// gains `½ ln f'(u)`; likewise in `v`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Gauge {
    pub u: NullMap,
    pub v: NullMap,
}

impl Gauge {
    pub const IDENTITY: Gauge = Gauge { u: NullMap::Identity, v: NullMap::Identity };

    pub fn validate(&self, grid: &DoubleNullGrid) -> Result<()> {
        self.u.validate(grid.u_min, grid.u_max)?;
        self.v.validate(grid.v_min, grid.v_max)
    }
}

/// How a pulse amplitude turns into a null derivative of φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseScaling {
    /// `∂φ = A sᵏ (1 − s)ᵏ`
    Absolute,
    /// `∂φ = A (4 s (1 − s))ᵏ / r²`, so `r² |∂φ| ≤ A`.
    InverseRadiusSquared,
}

/// Compactly supported scalar pulse on one initial cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseProfile {
    pub amplitude: f64,
    /// Support `[start, end]` in the coordinate along the cone.
    pub support: (f64, f64),
    #[serde(default = "default_shape_exponent")]
    pub k: u32,
}

fn default_shape_exponent() -> u32 {
    4
}

impl PulseProfile {
    pub fn new(amplitude: f64, start: f64, end: f64, k: u32) -> Self {
        Self { amplitude, support: (start, end), k }
    }

    fn validate(&self, ray_start: f64, ray_end: f64) -> Result<()> {
        let (a, b) = self.support;
        if !(a < b) {
            return Err(Error::Config(format!("empty pulse support [{a}, {b}]")));
        }
        if !(a > ray_start && b <= ray_end) {
            return Err(Error::Config(format!(
                "pulse support [{a}, {b}] not strictly inside the ray [{ray_start}, {ray_end}]"
            )));
        }
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Config(format!("pulse amplitude must be nonnegative, got {}", self.amplitude)));
        }
        if self.k == 0 {
            return Err(Error::Config("pulse shape exponent must be at least 1".into()));
        }
        Ok(())
    }

    fn shape(&self, x: f64, scaling: PulseScaling) -> f64 {
        let (a, b) = self.support;
        if x <= a || x >= b {
            return 0.0;
        }
        let s = (x - a) / (b - a);
        let k = self.k as i32;
        match scaling {
            PulseScaling::Absolute => self.amplitude * (s * (1.0 - s)).powi(k),
            PulseScaling::InverseRadiusSquared => self.amplitude * (4.0 * s * (1.0 - s)).powi(k),
        }
    }

    /// φ derivative along the cone at coordinate `x` where the radius is `r`.
    pub fn derivative(&self, x: f64, r: f64, scaling: PulseScaling) -> f64 {
        match scaling {
            PulseScaling::Absolute => self.shape(x, scaling),
            PulseScaling::InverseRadiusSquared => self.shape(x, scaling) / (r * r),
        }
    }
}

/// Parameterized characteristic data family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSpec {
    pub family: Family,
    /// Background mass `M` (ignored by the flat families).
    #[serde(default)]
    pub mass: f64,
    /// Perturbation bound: `r² |∂φ| ≤ ε` on both cones.
    #[serde(default)]
    pub epsilon: f64,
    /// Pulse on the outgoing cone `u = u_min`, support in `v`.
    #[serde(default)]
    pub outgoing_pulse: Option<PulseProfile>,
    /// Pulse on the incoming cone `v = v_min`, support in `u`.
    #[serde(default)]
    pub incoming_pulse: Option<PulseProfile>,
    #[serde(default)]
    pub gauge: Gauge,
}

impl InitialDataSpec {
    pub fn minkowski() -> Self {
        Self { family: Family::Minkowski, mass: 0.0, epsilon: 0.0, outgoing_pulse: None, incoming_pulse: None, gauge: Gauge::IDENTITY }
    }

    pub fn schwarzschild(mass: f64) -> Self {
        Self { family: Family::Schwarzschild, mass, ..Self::minkowski() }
    }

    pub fn perturbed_schwarzschild(mass: f64, epsilon: f64, outgoing: Option<PulseProfile>, incoming: Option<PulseProfile>) -> Self {
        Self {
            family: Family::PerturbedSchwarzschild,
            mass,
            epsilon,
            outgoing_pulse: outgoing,
            incoming_pulse: incoming,
            gauge: Gauge::IDENTITY,
        }
    }

    pub fn pulse(profile: PulseProfile) -> Self {
        Self { family: Family::Pulse, outgoing_pulse: Some(profile), ..Self::minkowski() }
    }

    pub fn with_gauge(mut self, gauge: Gauge) -> Self {
        self.gauge = gauge;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be nonnegative, got {}", self.epsilon)));
        }
        match self.family {
            Family::Schwarzschild | Family::PerturbedSchwarzschild if !(self.mass > 0.0) => {
                Err(Error::Config(format!("{:?} data need M > 0, got {}", self.family, self.mass)))
            }
            Family::Pulse if self.outgoing_pulse.is_none() => Err(Error::Config("pulse family needs an outgoing pulse".into())),
            _ => Ok(()),
        }
    }

    /// Closed-form background solution, when the family has one that is
    /// exact for the full evolution (no scalar field).
    pub fn exact_solution(&self) -> Option<Background> {
        match self.family {
            Family::Minkowski => Some(Background::Minkowski),
            Family::Schwarzschild => Some(Background::Schwarzschild(SchwarzschildInterior { mass: self.mass })),
            Family::PerturbedSchwarzschild if self.epsilon == 0.0 => {
                Some(Background::Schwarzschild(SchwarzschildInterior { mass: self.mass }))
            }
            Family::Pulse if self.outgoing_pulse.is_none_or(|p| p.amplitude == 0.0) => Some(Background::Minkowski),
            _ => None,
        }
    }

    fn background(&self) -> Background {
        match self.family {
            Family::Minkowski | Family::Pulse => Background::Minkowski,
            Family::Schwarzschild | Family::PerturbedSchwarzschild => {
                Background::Schwarzschild(SchwarzschildInterior { mass: self.mass })
            }
        }
    }

    pub fn build(&self, grid: &DoubleNullGrid) -> Result<FieldState> {
        self.validate()?;
        match self.family {
            Family::Minkowski => build_minkowski_data_in_gauge(grid, self.gauge),
            Family::Schwarzschild => build_schwarzschild_data_in_gauge(grid, self.mass, self.gauge),
            Family::PerturbedSchwarzschild => {
                build_perturbed_in_gauge(grid, self.mass, self.epsilon, self.outgoing_pulse, self.incoming_pulse, self.gauge)
            }
            Family::Pulse => {
                let p = self.outgoing_pulse.expect("validated");
                build_pulse_in_gauge(grid, p, self.gauge)
            }
        }
    }

    /// Exact field value at a grid point in this spec's gauge, if the family
    /// has an exact solution.
    pub fn exact_point(&self, grid: &DoubleNullGrid, i: usize, j: usize) -> Option<PointState> {
        let bg = self.exact_solution()?;
        bg.point_in_gauge(grid, self.gauge, i, j).ok()
    }

    pub fn background_point(&self, grid: &DoubleNullGrid, i: usize, j: usize) -> Result<PointState> {
        self.background().point_in_gauge(grid, self.gauge, i, j)
    }
}

/// Closed-form vacuum solutions used as background and as exact oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Background {
    /// `r = (v − u)/2`, Ω = 1.
    Minkowski,
    Schwarzschild(SchwarzschildInterior),
}

impl Background {
    pub fn point(&self, u: f64, v: f64) -> Result<PointState> {
        match self {
            Background::Minkowski => {
                let r = 0.5 * (v - u);
                if !(r > 0.0) {
                    return Err(Error::Config(format!("flat data need v > u, got ({u}, {v})")));
                }
                Ok(PointState { r, log_omega: 0.0, phi: 0.0, nu: -0.5, lambda: 0.5, z: 0.0, w: 0.0 })
            }
            Background::Schwarzschild(s) => s.point(u, v).map_err(|e| match e {
                Error::OutsideInterior { .. } | Error::PastSingularity { .. } => {
                    Error::Config(format!("grid point ({u}, {v}) is not inside the black-hole interior: {e}"))
                }
                other => other,
            }),
        }
    }

    fn point_in_gauge(&self, grid: &DoubleNullGrid, gauge: Gauge, i: usize, j: usize) -> Result<PointState> {
        let (big_u, ju) = gauge.u.map(grid.u(i), grid.u_min);
        let (big_v, jv) = gauge.v.map(grid.v(j), grid.v_min);
        let mut p = self.point(big_u, big_v)?;
        p.nu *= ju;
        p.z *= ju;
        p.lambda *= jv;
        p.w *= jv;
        p.log_omega += 0.5 * (ju * jv).ln();
        Ok(p)
    }

    /// Kretschmann scalar as a function of the areal radius.
    pub fn kretschmann(&self, r: f64) -> f64 {
        match self {
            Background::Minkowski => 0.0,
            Background::Schwarzschild(s) => s.kretschmann(r),
        }
    }

    /// `(r, log Ω)` sampler in Kruskal/flat coordinates.
    pub fn metric(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        self.point(u, v).ok().map(|p| (p.r, p.log_omega))
    }
}

fn fill_background(grid: &DoubleNullGrid, bg: Background, gauge: Gauge) -> Result<FieldState> {
    gauge.validate(grid)?;
    let mut state = FieldState::new(*grid);
    for j in 0..grid.n_v {
        state.set_active(0, j, bg.point_in_gauge(grid, gauge, 0, j)?);
    }
    for i in 1..grid.n_u {
        state.set_active(i, 0, bg.point_in_gauge(grid, gauge, i, 0)?);
    }
    Ok(state)
}

pub fn build_minkowski_data(grid: &DoubleNullGrid) -> Result<FieldState> {
    build_minkowski_data_in_gauge(grid, Gauge::IDENTITY)
}

fn build_minkowski_data_in_gauge(grid: &DoubleNullGrid, gauge: Gauge) -> Result<FieldState> {
    fill_background(grid, Background::Minkowski, gauge)
}

/// Exact Schwarzschild interior data on both cones; grid coordinates are
/// Kruskal `(U, V)`.
pub fn build_schwarzschild_data(grid: &DoubleNullGrid, mass: f64) -> Result<FieldState> {
    build_schwarzschild_data_in_gauge(grid, mass, Gauge::IDENTITY)
}

fn build_schwarzschild_data_in_gauge(grid: &DoubleNullGrid, mass: f64, gauge: Gauge) -> Result<FieldState> {
    let bg = Background::Schwarzschild(SchwarzschildInterior::new(mass)?);
    fill_background(grid, bg, gauge)
}

/// Schwarzschild data carrying scalar pulses with `r² |∂φ| ≤ ε`, re-solved
/// from the constraints.
pub fn build_perturbed_schwarzschild_data(
    grid: &DoubleNullGrid,
    mass: f64,
    epsilon: f64,
    outgoing: Option<PulseProfile>,
    incoming: Option<PulseProfile>,
) -> Result<FieldState> {
    build_perturbed_in_gauge(grid, mass, epsilon, outgoing, incoming, Gauge::IDENTITY)
}

fn build_perturbed_in_gauge(
    grid: &DoubleNullGrid,
    mass: f64,
    epsilon: f64,
    outgoing: Option<PulseProfile>,
    incoming: Option<PulseProfile>,
    gauge: Gauge,
) -> Result<FieldState> {
    if !(epsilon >= 0.0) {
        return Err(Error::Config(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    for p in outgoing.iter().chain(incoming.iter()) {
        if p.amplitude > epsilon {
            return Err(Error::Config(format!("pulse amplitude {} exceeds the bound epsilon = {epsilon}", p.amplitude)));
        }
    }
    if let Some(p) = outgoing {
        p.validate(grid.v_min, grid.v_max)?;
    }
    if let Some(p) = incoming {
        p.validate(grid.u_min, grid.u_max)?;
    }
    if epsilon == 0.0 {
        return build_schwarzschild_data_in_gauge(grid, mass, gauge);
    }
    let bg = Background::Schwarzschild(SchwarzschildInterior::new(mass)?);
    let mut state = fill_background(grid, bg, gauge)?;
    if let Some(p) = outgoing {
        march_outgoing(&mut state, &p, PulseScaling::InverseRadiusSquared)?;
    }
    if let Some(p) = incoming {
        march_incoming(&mut state, &p, PulseScaling::InverseRadiusSquared)?;
    }
    Ok(state)
}

/// Flat data with a scalar pulse `∂ᵥφ = A sᵏ (1 − s)ᵏ` on the outgoing cone
/// and unperturbed flat data on the incoming cone.
pub fn build_pulse_data(grid: &DoubleNullGrid, amplitude: f64, v_a: f64, v_b: f64, k: u32) -> Result<FieldState> {
    build_pulse_in_gauge(grid, PulseProfile::new(amplitude, v_a, v_b, k), Gauge::IDENTITY)
}

fn build_pulse_in_gauge(grid: &DoubleNullGrid, profile: PulseProfile, gauge: Gauge) -> Result<FieldState> {
    profile.validate(grid.v_min, grid.v_max)?;
    let mut state = fill_background(grid, Background::Minkowski, gauge)?;
    if profile.amplitude == 0.0 {
        return Ok(state);
    }
    march_outgoing(&mut state, &profile, PulseScaling::Absolute)?;
    Ok(state)
}

/// First index whose successor lies inside the support: everything up to and
/// including it keeps background values.
fn march_start(coord: impl Fn(usize) -> f64, n: usize, support_start: f64) -> usize {
    (0..n).take_while(|&k| coord(k) <= support_start).last().unwrap_or(0)
}

/// March the outgoing cone `i = 0` in `v` through the pulse: r and ∂ᵥr stay at
/// background values, log Ω follows the `v` constraint, ∂ᵤr and ∂ᵤφ follow
/// the wave equations.
fn march_outgoing(state: &mut FieldState, profile: &PulseProfile, scaling: PulseScaling) -> Result<()> {
    let g = *state.grid();
    let h = g.dv;
    let start = march_start(|j| g.v(j), g.n_v, profile.support.0);
    let mut prev = state.get(0, start);
    for j in start + 1..g.n_v {
        let next_bg = state.get(0, j);
        let (r, lambda) = (next_bg.r, next_bg.lambda);
        let w = profile.derivative(g.v(j), r, scaling);

        // Ω⁻²(λ + h r w²/2) = q_prev − h S_prev / 2 with q = Ω⁻² λ, S = r Ω⁻² w².
        let inv_o2_prev = (-2.0 * prev.log_omega).exp();
        let rhs = inv_o2_prev * prev.lambda - 0.5 * h * prev.r * inv_o2_prev * prev.w * prev.w;
        let inv_o2 = rhs / (lambda + 0.5 * h * r * w * w);
        if !(inv_o2 > 0.0 && inv_o2.is_finite()) {
            return Err(Error::Config(format!(
                "outgoing pulse too strong: constraint march loses Ω² > 0 at v = {}",
                g.v(j)
            )));
        }
        let log_omega = -0.5 * inv_o2.ln();
        let omega_sq = 1.0 / inv_o2;

        // trapezoid for ∂ᵥ(∂ᵤr) = F_r, linear in the new ∂ᵤr
        let f_prev = rhs_r_wave(prev.r, prev.nu, prev.lambda, prev.omega_sq())?;
        let nu = (prev.nu + 0.5 * h * f_prev - 0.5 * h * 0.25 * omega_sq / r) / (1.0 + 0.5 * h * lambda / r);
        // trapezoid for ∂ᵥ(∂ᵤφ) = −(∂ᵤr ∂ᵥφ + ∂ᵥr ∂ᵤφ)/r, linear in the new ∂ᵤφ
        let fz_prev = rhs_phi_wave(prev.r, prev.nu, prev.lambda, prev.z, prev.w)?;
        let z = (prev.z + 0.5 * h * fz_prev - 0.5 * h * nu * w / r) / (1.0 + 0.5 * h * lambda / r);

        let p = PointState { r, log_omega, phi: prev.phi + 0.5 * h * (prev.w + w), nu, lambda, z, w };
        if !p.is_finite() {
            return Err(Error::Config(format!("non-finite outgoing data at v = {}", g.v(j))));
        }
        state.set_active(0, j, p);
        prev = p;
    }
    Ok(())
}

/// March the incoming cone `j = 0` in `u` through the pulse: log Ω stays at
/// background values, r and ∂ᵤr follow the `u` constraint, ∂ᵥr and ∂ᵥφ
/// follow the wave equations.
fn march_incoming(state: &mut FieldState, profile: &PulseProfile, scaling: PulseScaling) -> Result<()> {
    let g = *state.grid();
    let h = g.du;
    let start = march_start(|i| g.u(i), g.n_u, profile.support.0);
    let mut prev = state.get(start, 0);
    for i in start + 1..g.n_u {
        let log_omega = state.get(i, 0).log_omega;
        let omega_sq = (2.0 * log_omega).exp();
        let inv_o2_prev = (-2.0 * prev.log_omega).exp();
        let q_prev = inv_o2_prev * prev.nu;
        let s_prev = prev.r * inv_o2_prev * prev.z * prev.z;

        let mut r = prev.r + h * prev.nu;
        let mut nu = prev.nu;
        let mut converged = false;
        for _ in 0..MARCH_MAX_ITER {
            if !(r > 0.0) {
                return Err(Error::Config(format!("incoming constraint march reaches r <= 0 at u = {}", g.u(i))));
            }
            let z = profile.derivative(g.u(i), r, scaling);
            let s = r * z * z / omega_sq;
            let q = q_prev - 0.5 * h * (s_prev + s);
            nu = omega_sq * q;
            let r_new = prev.r + 0.5 * h * (prev.nu + nu);
            let done = (r_new - r).abs() <= MARCH_TOL * r_new.abs();
            r = r_new;
            if done {
                converged = true;
                break;
            }
        }
        if !converged || !(r > 0.0) {
            return Err(Error::Config(format!("incoming constraint march failed to converge at u = {}", g.u(i))));
        }
        let z = profile.derivative(g.u(i), r, scaling);

        let f_prev = rhs_r_wave(prev.r, prev.nu, prev.lambda, prev.omega_sq())?;
        let lambda = (prev.lambda + 0.5 * h * f_prev - 0.5 * h * 0.25 * omega_sq / r) / (1.0 + 0.5 * h * nu / r);
        let fw_prev = rhs_phi_wave(prev.r, prev.nu, prev.lambda, prev.z, prev.w)?;
        let w = (prev.w + 0.5 * h * fw_prev - 0.5 * h * lambda * z / r) / (1.0 + 0.5 * h * nu / r);

        let p = PointState { r, log_omega, phi: prev.phi + 0.5 * h * (prev.z + z), nu, lambda, z, w };
        if !p.is_finite() {
            return Err(Error::Config(format!("non-finite incoming data at u = {}", g.u(i))));
        }
        state.set_active(i, 0, p);
        prev = p;
    }
    Ok(())
}

/// `E(x) = x/(1+x)² [ln(1/(2x)) + 5 − x]`, the trapped-surface threshold.
pub fn trapping_threshold(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("threshold needs 0 < x < 1, got {x}")));
    }
    Ok(x / ((1.0 + x) * (1.0 + x)) * ((1.0 / (2.0 * x)).ln() + 5.0 - x))
}

/// Mass-input and radius ratios between two points of the outgoing cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionFunctionals {
    pub eta0: f64,
    pub delta0: f64,
    pub threshold: f64,
}

impl CriterionFunctionals {
    pub fn predicts_trapping(&self) -> bool {
        self.eta0 > self.threshold
    }
}

/// η₀ = (m(v₂) − m(v₁)) / r(v₂), δ₀ = (r(v₂) − r(v₁)) / r(v₂) along the
/// outgoing cone `ray`, with masses from the discrete Hawking mass.
pub fn criterion_functionals(ray: &[PointState], j1: usize, j2: usize) -> Result<CriterionFunctionals> {
    if !(j1 < j2 && j2 < ray.len()) {
        return Err(Error::Domain(format!("need v1 < v2 on the ray, got indices {j1}, {j2} of {}", ray.len())));
    }
    let (a, b) = (&ray[j1], &ray[j2]);
    let m1 = hawking_mass_at(a)?.m;
    let m2 = hawking_mass_at(b)?.m;
    let eta0 = (m2 - m1) / b.r;
    let delta0 = (b.r - a.r) / b.r;
    Ok(CriterionFunctionals { eta0, delta0, threshold: trapping_threshold(delta0)? })
}

/// Outcome of the trapped-surface criterion for one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub eta0: f64,
    pub delta0: f64,
    pub e_of_delta0: f64,
    pub predicted_trapped: bool,
    pub observed_trapped: bool,
    /// Coordinates of the first point (in diagonal order) with ∂ᵥr < 0.
    pub first_trapped_point: Option<(f64, f64)>,
}

impl CriterionReport {
    pub fn new(f: CriterionFunctionals, observed_trapped: bool, first_trapped_point: Option<(f64, f64)>) -> Self {
        Self {
            eta0: f.eta0,
            delta0: f.delta0,
            e_of_delta0: f.threshold,
            predicted_trapped: f.predicts_trapping(),
            observed_trapped,
            first_trapped_point,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_equations::{constraint_residual_u, constraint_residual_v};

    fn interior_grid(n: usize) -> DoubleNullGrid {
        // M = 1/2 interior, corner at r ≈ 0.9, far corner at r ≈ 0.3
        let lo = SchwarzschildInterior { mass: 0.5 }.uv_at_radius(0.9).sqrt();
        let hi = SchwarzschildInterior { mass: 0.5 }.uv_at_radius(0.3).sqrt();
        DoubleNullGrid::new(lo, hi, lo, hi, n, n).unwrap()
    }

    fn ray_residuals(state: &FieldState) -> f64 {
        let g = state.grid();
        let along_v = (1..g.n_v - 1).filter_map(|j| constraint_residual_v(state, 0, j));
        let along_u = (1..g.n_u - 1).filter_map(|i| constraint_residual_u(state, i, 0));
        along_v.chain(along_u).fold(0.0f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn threshold_values() {
        assert!((trapping_threshold(0.5).unwrap() - 1.0).abs() < 1e-15);
        // 0.1/1.21 (ln 5 + 4.9)
        assert!((trapping_threshold(0.1).unwrap() - 0.537_970_075_407_777).abs() < 1e-14);
        assert!(trapping_threshold(1e-9).unwrap() < 3e-8);
        assert!(trapping_threshold(0.0).is_err());
        assert!(trapping_threshold(1.0).is_err());
    }

    #[test]
    fn schwarzschild_rays_are_exact() {
        let g = interior_grid(41);
        let s = build_schwarzschild_data(&g, 0.5).unwrap();
        assert!(ray_residuals(&s) <= 1e-12, "{}", ray_residuals(&s));
        for j in 0..g.n_v {
            let p = s.get(0, j);
            assert!((hawking_mass_at(&p).unwrap().m - 0.5).abs() < 1e-12);
            assert!(p.nu < 0.0 && p.lambda < 0.0);
        }
    }

    #[test]
    fn schwarzschild_rejects_exterior_grid() {
        let g = DoubleNullGrid::new(-0.2, 0.5, 0.1, 0.5, 11, 11).unwrap();
        assert!(matches!(build_schwarzschild_data(&g, 0.5), Err(Error::Config(_))));
    }

    #[test]
    fn zero_perturbation_is_schwarzschild() {
        let g = interior_grid(33);
        let p = PulseProfile::new(0.0, g.v(5), g.v(20), 4);
        let a = build_perturbed_schwarzschild_data(&g, 0.5, 0.0, Some(p), None).unwrap();
        let b = build_schwarzschild_data(&g, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn perturbed_rays_satisfy_constraints_and_bound() {
        let g = interior_grid(81);
        let eps = 0.05;
        let out = PulseProfile::new(eps, g.v(10), g.v(50), 4);
        let inc = PulseProfile::new(eps, g.u(8), g.u(40), 4);
        let s = build_perturbed_schwarzschild_data(&g, 0.5, eps, Some(out), Some(inc)).unwrap();
        assert!(ray_residuals(&s) <= 1e-10, "{}", ray_residuals(&s));
        let mut sup = 0.0f64;
        for j in 0..g.n_v {
            let p = s.get(0, j);
            sup = sup.max(p.r * p.r * p.w.abs());
        }
        for i in 0..g.n_u {
            let p = s.get(i, 0);
            sup = sup.max(p.r * p.r * p.z.abs());
        }
        assert!(sup <= eps * (1.0 + 1e-12));
        assert!(sup > 0.5 * eps);
    }

    #[test]
    fn perturbation_above_bound_rejected() {
        let g = interior_grid(21);
        let out = PulseProfile::new(0.2, g.v(3), g.v(10), 4);
        assert!(matches!(build_perturbed_schwarzschild_data(&g, 0.5, 0.1, Some(out), None), Err(Error::Config(_))));
    }

    fn pulse_grid() -> DoubleNullGrid {
        DoubleNullGrid::new(-1.0, 0.9, 1.0, 1.2, 96, 41).unwrap()
    }

    #[test]
    fn zero_pulse_is_minkowski() {
        let g = pulse_grid();
        let a = build_pulse_data(&g, 0.0, 1.05, 1.15, 4).unwrap();
        let b = build_minkowski_data(&g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pulse_rays_satisfy_constraints() {
        let g = pulse_grid();
        let s = build_pulse_data(&g, 40.0, 1.05, 1.15, 4).unwrap();
        assert!(ray_residuals(&s) <= 1e-10, "{}", ray_residuals(&s));
    }

    #[test]
    fn empty_support_rejected() {
        let g = pulse_grid();
        assert!(matches!(build_pulse_data(&g, 1.0, 1.1, 1.1, 4), Err(Error::Config(_))));
        assert!(matches!(build_pulse_data(&g, 1.0, 0.9, 1.1, 4), Err(Error::Config(_))));
    }

    #[test]
    fn mass_input_grows_with_amplitude() {
        let g = pulse_grid();
        let mut last = -1.0;
        for a in [0.0, 5.0, 10.0, 20.0, 40.0] {
            let s = build_pulse_data(&g, a, 1.05, 1.15, 4).unwrap();
            let ray: Vec<_> = (0..g.n_v).map(|j| s.get(0, j)).collect();
            let f = criterion_functionals(&ray, 0, g.n_v - 1).unwrap();
            if a == 0.0 {
                assert_eq!(f.eta0, 0.0);
            }
            assert!(f.eta0 >= last);
            last = f.eta0;
        }
    }
}
