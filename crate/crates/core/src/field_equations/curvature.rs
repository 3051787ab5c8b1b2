use serde::{Deserialize, Serialize};

use super::{rhs_logomega_wave, rhs_r_wave};
use crate::error::{Error, Result};
use crate::geometry::FieldState;

/// Second-order jet of (r, log Ω) at a point, enough to evaluate the
/// Kretschmann scalar of `−Ω² du dv + r² dσ²`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CurvatureJet {
    pub r: f64,
    pub r_u: f64,
    pub r_v: f64,
    pub r_uu: f64,
    pub r_vv: f64,
    pub r_uv: f64,
    pub log_omega: f64,
    pub lo_u: f64,
    pub lo_v: f64,
    pub lo_uv: f64,
}

/// Kretschmann scalar `R_{αβγδ} R^{αβγδ}` in closed form.
///
/// Evaluated term by term in the form where every Ω-derivative appears as a
/// derivative of log Ω and powers of Ω are folded into `Ω⁻²`, `Ω⁻⁴`. The mixed
/// second derivative of Ω enters only through `∂ᵤ∂ᵥΩ / Ω = ∂ᵤ∂ᵥ log Ω + ∂ᵤ log Ω ∂ᵥ log Ω`.
pub fn kretschmann_closed_form(jet: &CurvatureJet) -> Result<f64> {
    let CurvatureJet { r, r_u, r_v, r_uu, r_vv, r_uv, log_omega, lo_u, lo_v, lo_uv } = *jet;
    if !(r > 0.0) {
        return Err(Error::SingularPoint { r });
    }
    let inv_o2 = (-2.0 * log_omega).exp();
    let inv_o4 = inv_o2 * inv_o2;
    let r2 = r * r;
    let r4 = r2 * r2;
    // ∂ᵤ∂ᵥΩ / Ω
    let o_uv = lo_uv + lo_u * lo_v;

    let line1 = 16.0 * r_uv * r_uv * r2 + 16.0 * r_uu * r_vv * r2;
    let line2 = -32.0 * r_uu * r_v * r2 * lo_v - 32.0 * r_vv * r2 * r_u * lo_u;
    let line3a = 16.0 * r_v * r_v * r_u * r_u + 64.0 * r_v * r2 * r_u * lo_u * lo_v;
    let line3b = 8.0 * r_v * r_u;
    let line4 = 16.0 * r4 * o_uv * o_uv - 32.0 * r4 * o_uv * lo_v * lo_u;
    let line5 = 16.0 * r4 * lo_v * lo_v * lo_u * lo_u;

    let k = 4.0 / r4 * ((line1 + line2 + line3a + line4 + line5) * inv_o4 + line3b * inv_o2 + 1.0);
    Ok(k)
}

/// Assemble the curvature jet at an interior grid point.
///
/// Pure second derivatives of r come from centered differences of the
/// evolved ∂ᵤr, ∂ᵥr fields; first derivatives of log Ω from centered
/// differences of log Ω; the mixed derivatives from the wave equations the
/// solution satisfies. `None` when the 5-point cross stencil is incomplete.
pub fn curvature_jet(state: &FieldState, i: usize, j: usize) -> Option<CurvatureJet> {
    let g = state.grid();
    if i == 0 || j == 0 || i + 1 >= g.n_u || j + 1 >= g.n_v {
        return None;
    }
    let c = state.active(i, j)?;
    let west = state.active(i - 1, j)?;
    let east = state.active(i + 1, j)?;
    let south = state.active(i, j - 1)?;
    let north = state.active(i, j + 1)?;
    let omega_sq = c.omega_sq();
    let r_uv = rhs_r_wave(c.r, c.nu, c.lambda, omega_sq).ok()?;
    let lo_uv = rhs_logomega_wave(c.r, c.nu, c.lambda, omega_sq, c.z, c.w).ok()?;
    Some(CurvatureJet {
        r: c.r,
        r_u: c.nu,
        r_v: c.lambda,
        r_uu: (east.nu - west.nu) / (2.0 * g.du),
        r_vv: (north.lambda - south.lambda) / (2.0 * g.dv),
        r_uv,
        log_omega: c.log_omega,
        lo_u: (east.log_omega - west.log_omega) / (2.0 * g.du),
        lo_v: (north.log_omega - south.log_omega) / (2.0 * g.dv),
        lo_uv,
    })
}

/// Closed-form Kretschmann scalar at a grid point, if evaluable.
pub fn kretschmann_at(state: &FieldState, i: usize, j: usize) -> Option<f64> {
    curvature_jet(state, i, j).and_then(|jet| kretschmann_closed_form(&jet).ok())
}
