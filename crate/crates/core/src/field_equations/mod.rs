//! Pointwise form of the spherically symmetric Einstein-scalar system in
//! double-null gauge, `g = −Ω² du dv + r² dσ²`.
//!
//! All Ω-dependent expressions take `log Ω` (or `Ω²`) rather than Ω itself;
//! near the singular boundary Ω² spans many decades.

mod curvature;
mod oracle;

pub use curvature::{curvature_jet, kretschmann_at, kretschmann_closed_form, CurvatureJet};
pub use oracle::{kretschmann_oracle, kretschmann_oracle_at, MetricSampler};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FieldState, PointState};

/// Width of the band around the apparent horizon where the mass-form
/// rewrites are skipped.
pub const HORIZON_BAND: f64 = 1e-6;

#[inline]
fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 {
        Ok(())
    } else {
        Err(Error::SingularPoint { r })
    }
}

/// ∂ᵤ∂ᵥr from `r ∂ᵤ∂ᵥr = −∂ᵤr ∂ᵥr − Ω²/4`.
#[inline]
pub fn rhs_r_wave(r: f64, nu: f64, lambda: f64, omega_sq: f64) -> Result<f64> {
    check_radius(r)?;
    Ok((-nu * lambda - 0.25 * omega_sq) / r)
}

/// ∂ᵤ∂ᵥ log Ω from `r² ∂ᵤ∂ᵥ log Ω = ∂ᵤr ∂ᵥr + Ω²/4 − r² ∂ᵤφ ∂ᵥφ`.
#[inline]
pub fn rhs_logomega_wave(r: f64, nu: f64, lambda: f64, omega_sq: f64, z: f64, w: f64) -> Result<f64> {
    check_radius(r)?;
    Ok((nu * lambda + 0.25 * omega_sq) / (r * r) - z * w)
}

/// ∂ᵤ∂ᵥφ from `r ∂ᵤ∂ᵥφ = −∂ᵤr ∂ᵥφ − ∂ᵥr ∂ᵤφ`.
#[inline]
pub fn rhs_phi_wave(r: f64, nu: f64, lambda: f64, z: f64, w: f64) -> Result<f64> {
    check_radius(r)?;
    Ok((-nu * w - lambda * z) / r)
}

/// Mixed derivatives (∂ᵤ∂ᵥr, ∂ᵤ∂ᵥ log Ω, ∂ᵤ∂ᵥφ) at a point.
#[inline]
pub fn wave_rhs(p: &PointState) -> Result<[f64; 3]> {
    let omega_sq = p.omega_sq();
    Ok([
        rhs_r_wave(p.r, p.nu, p.lambda, omega_sq)?,
        rhs_logomega_wave(p.r, p.nu, p.lambda, omega_sq, p.z, p.w)?,
        rhs_phi_wave(p.r, p.nu, p.lambda, p.z, p.w)?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassData {
    /// Hawking mass.
    pub m: f64,
    /// 2m/r
    pub mu: f64,
}

/// Hawking mass from `1 − 2m/r = −4 Ω⁻² ∂ᵤr ∂ᵥr`.
pub fn hawking_mass(r: f64, nu: f64, lambda: f64, omega_sq: f64) -> Result<MassData> {
    check_radius(r)?;
    if !(omega_sq > 0.0) {
        return Err(Error::Domain(format!("Ω² = {omega_sq} must be positive")));
    }
    let mu = 1.0 + 4.0 * nu * lambda / omega_sq;
    Ok(MassData { m: 0.5 * r * mu, mu })
}

pub fn hawking_mass_at(p: &PointState) -> Result<MassData> {
    check_radius(p.r)?;
    // Ω⁻² straight from the log variable so that huge Ω² does not overflow.
    let mu = 1.0 + 4.0 * p.nu * p.lambda * (-2.0 * p.log_omega).exp();
    Ok(MassData { m: 0.5 * p.r * mu, mu })
}

/// ∂ᵤ∂ᵥr written through the mass ratio: `μ/((1−μ) r) ∂ᵥr ∂ᵤr`.
///
/// `None` inside the horizon band |μ − 1| < [`HORIZON_BAND`], where the form
/// has a removable singularity.
pub fn rhs_r_wave_mass_form(r: f64, nu: f64, lambda: f64, mu: f64) -> Option<f64> {
    if r <= 0.0 || (mu - 1.0).abs() < HORIZON_BAND {
        return None;
    }
    Some(mu / ((1.0 - mu) * r) * lambda * nu)
}

/// ∂ᵤm from `2 ∂ᵤr ∂ᵤm = (1−μ) r² (∂ᵤφ)²`.
pub fn mass_gradient_u(r: f64, nu: f64, mu: f64, z: f64) -> Option<f64> {
    (nu != 0.0).then(|| (1.0 - mu) * r * r * z * z / (2.0 * nu))
}

/// ∂ᵥm from `2 ∂ᵥr ∂ᵥm = (1−μ) r² (∂ᵥφ)²`.
pub fn mass_gradient_v(r: f64, lambda: f64, mu: f64, w: f64) -> Option<f64> {
    (lambda != 0.0).then(|| (1.0 - mu) * r * r * w * w / (2.0 * lambda))
}

/// One point of a null ray as seen by the constraint along that ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub r: f64,
    pub log_omega: f64,
    /// Derivative of r along the ray (∂ᵤr on a `v = const` ray).
    pub dr: f64,
    /// Derivative of φ along the ray.
    pub dphi: f64,
}

impl RaySample {
    pub fn along_u(p: &PointState) -> Self {
        Self { r: p.r, log_omega: p.log_omega, dr: p.nu, dphi: p.z }
    }

    pub fn along_v(p: &PointState) -> Self {
        Self { r: p.r, log_omega: p.log_omega, dr: p.lambda, dphi: p.w }
    }

    #[inline]
    fn flux(&self) -> f64 {
        (-2.0 * self.log_omega).exp() * self.dr
    }

    #[inline]
    fn source(&self) -> f64 {
        self.r * (-2.0 * self.log_omega).exp() * self.dphi * self.dphi
    }
}

/// Centered residual of `∂(Ω⁻² ∂r) + r Ω⁻² (∂φ)² = 0` at the middle sample.
///
/// The flux is differenced over `2h` and the source is averaged with 1-2-1
/// weights, so data built by trapezoidal marching satisfy it to round-off.
pub fn constraint_residual(prev: &RaySample, mid: &RaySample, next: &RaySample, h: f64) -> f64 {
    (next.flux() - prev.flux()) / (2.0 * h) + 0.25 * (prev.source() + 2.0 * mid.source() + next.source())
}

/// Residual of the `u` constraint at `(i, j)`; `None` without a full stencil.
pub fn constraint_residual_u(state: &FieldState, i: usize, j: usize) -> Option<f64> {
    let g = state.grid();
    if i == 0 || i + 1 >= g.n_u {
        return None;
    }
    let a = state.active(i - 1, j)?;
    let b = state.active(i, j)?;
    let c = state.active(i + 1, j)?;
    Some(constraint_residual(&RaySample::along_u(&a), &RaySample::along_u(&b), &RaySample::along_u(&c), g.du))
}

/// Residual of the `v` constraint at `(i, j)`; `None` without a full stencil.
pub fn constraint_residual_v(state: &FieldState, i: usize, j: usize) -> Option<f64> {
    let g = state.grid();
    if j == 0 || j + 1 >= g.n_v {
        return None;
    }
    let a = state.active(i, j - 1)?;
    let b = state.active(i, j)?;
    let c = state.active(i, j + 1)?;
    Some(constraint_residual(&RaySample::along_v(&a), &RaySample::along_v(&b), &RaySample::along_v(&c), g.dv))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub l_inf: f64,
    /// Root mean square over evaluable points.
    pub l_2: f64,
    pub count: usize,
}

impl ResidualNorms {
    fn from_values<'a>(values: impl Iterator<Item = &'a Option<f64>>) -> Self {
        let (mut l_inf, mut sq, mut count) = (0.0f64, 0.0, 0usize);
        for x in values.flatten() {
            l_inf = l_inf.max(x.abs());
            sq += x * x;
            count += 1;
        }
        let l_2 = if count > 0 { (sq / count as f64).sqrt() } else { 0.0 };
        Self { l_inf, l_2, count }
    }
}

/// Constraint residual fields over a state, row-major like the field planes.
#[derive(Debug, Clone)]
pub struct ConstraintResiduals {
    pub res_u: Vec<Option<f64>>,
    pub res_v: Vec<Option<f64>>,
    pub u: ResidualNorms,
    pub v: ResidualNorms,
}

impl ConstraintResiduals {
    pub fn compute(state: &FieldState) -> Self {
        Self::compute_filtered(state, |_, _| true)
    }

    /// Residuals restricted to points accepted by `keep(i, j)`.
    pub fn compute_filtered(state: &FieldState, keep: impl Fn(usize, usize) -> bool) -> Self {
        Self::compute_with(state, &keep, &keep)
    }

    /// Residuals whose three-point stencils lie entirely off the initial
    /// rays, i.e. on marched points only.
    pub fn compute_evolved(state: &FieldState) -> Self {
        Self::compute_with(state, &|i, j| i >= 2 && j >= 1, &|i, j| i >= 1 && j >= 2)
    }

    fn compute_with(state: &FieldState, keep_u: &dyn Fn(usize, usize) -> bool, keep_v: &dyn Fn(usize, usize) -> bool) -> Self {
        let g = state.grid();
        let mut res_u = vec![None; g.len()];
        let mut res_v = vec![None; g.len()];
        for i in 0..g.n_u {
            for j in 0..g.n_v {
                let k = g.index(i, j);
                if keep_u(i, j) {
                    res_u[k] = constraint_residual_u(state, i, j);
                }
                if keep_v(i, j) {
                    res_v[k] = constraint_residual_v(state, i, j);
                }
            }
        }
        let u = ResidualNorms::from_values(res_u.iter());
        let v = ResidualNorms::from_values(res_v.iter());
        Self { res_u, res_v, u, v }
    }
}
