//! Schwarzschild interior in Kruskal-type double-null coordinates:
//! `(1 − r/2M) e^{r/2M} = U V`, `Ω² = (32 M³ / r) e^{−r/2M}`.

use crate::error::{Error, Result};
use crate::geometry::PointState;

const MAX_ITER: usize = 200;
const REL_TOL: f64 = 1e-14;

/// `1 − (1 − ρ) e^ρ`, accurate for small ρ.
fn defect(rho: f64) -> f64 {
    if rho < 0.1 {
        // Σ_{k≥2} (k − 1) ρ^k / k!
        let mut term = rho * rho / 2.0;
        let mut sum = term;
        let mut k = 2.0;
        while term.abs() > 1e-18 * sum.abs() {
            term *= rho / (k + 1.0) * (k / (k - 1.0));
            sum += term;
            k += 1.0;
            if k > 60.0 {
                break;
            }
        }
        sum
    } else {
        rho * rho.exp() - rho.exp_m1()
    }
}

/// Solve `(1 − ρ) e^ρ = 1 − defect` for ρ ∈ (0, 1) given `defect ∈ (0, 1)`.
///
/// Newton on the monotone map, safeguarded by bisection on the bracket.
pub(crate) fn rho_from_defect(target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut rho = (2.0 * target).sqrt().clamp(1e-300, 0.999);
    for _ in 0..MAX_ITER {
        let f = defect(rho) - target;
        if f > 0.0 {
            hi = rho;
        } else {
            lo = rho;
        }
        let slope = rho * rho.exp();
        let mut next = rho - f / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - rho).abs() <= REL_TOL * next {
            return next;
        }
        rho = next;
    }
    rho
}

/// Areal radius at Kruskal coordinates `(U, V)` of the interior with mass `M`.
pub fn schwarzschild_r_from_uv(u: f64, v: f64, mass: f64) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::Config(format!("mass must be positive, got {mass}")));
    }
    let uv = u * v;
    if !(uv > 0.0) {
        return Err(Error::OutsideInterior { uv });
    }
    if uv >= 1.0 {
        return Err(Error::PastSingularity { uv });
    }
    Ok(2.0 * mass * rho_from_defect(1.0 - uv))
}

/// Exact interior solution with φ ≡ 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchwarzschildInterior {
    pub mass: f64,
}

impl SchwarzschildInterior {
    pub fn new(mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Config(format!("mass must be positive, got {mass}")));
        }
        Ok(Self { mass })
    }

    pub fn r(&self, u: f64, v: f64) -> Result<f64> {
        schwarzschild_r_from_uv(u, v, self.mass)
    }

    pub fn log_omega_of_r(&self, r: f64) -> f64 {
        let m = self.mass;
        0.5 * ((32.0 * m * m * m / r).ln() - r / (2.0 * m))
    }

    /// Full point state with derivatives from implicit differentiation:
    /// `∂ᵤr = −4M² V e^{−ρ} / r`, `∂ᵥr = −4M² U e^{−ρ} / r`.
    pub fn point(&self, u: f64, v: f64) -> Result<PointState> {
        let r = self.r(u, v)?;
        let m = self.mass;
        let decay = (-r / (2.0 * m)).exp();
        Ok(PointState {
            r,
            log_omega: self.log_omega_of_r(r),
            phi: 0.0,
            nu: -4.0 * m * m * v * decay / r,
            lambda: -4.0 * m * m * u * decay / r,
            z: 0.0,
            w: 0.0,
        })
    }

    /// `(r, log Ω)`, the sampler form used by the curvature oracle.
    pub fn metric(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        let r = self.r(u, v).ok()?;
        Some((r, self.log_omega_of_r(r)))
    }

    /// `48 M² / r⁶`
    pub fn kretschmann(&self, r: f64) -> f64 {
        48.0 * self.mass * self.mass / r.powi(6)
    }

    /// Kruskal product `U V` on the hypersurface of areal radius `r`.
    pub fn uv_at_radius(&self, r: f64) -> f64 {
        let rho = r / (2.0 * self.mass);
        1.0 - defect(rho)
    }
}
