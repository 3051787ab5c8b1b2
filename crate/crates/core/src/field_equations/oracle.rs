//! Brute-force Kretschmann scalar: Christoffel symbols of the double-null
//! metric from finite differences of (r, Ω), Riemann tensor by numerical
//! differentiation of the Christoffels, full index contraction.
//!
//! Shares nothing with the closed-form evaluator except the metric ansatz.

use crate::geometry::FieldState;

const U: usize = 0;
const V: usize = 1;
const TH: usize = 2;
const PH: usize = 3;

/// Polar angle at which the 4-d tensors are evaluated. Any generic value works.
const THETA: f64 = 1.0;
const THETA_STEP: f64 = 1e-3;

/// Source of metric functions on the `(u, v)` plane.
pub trait MetricSampler {
    /// `(r, log Ω)` at `(u, v)`, or `None` outside the sampler's domain.
    fn sample(&self, u: f64, v: f64) -> Option<(f64, f64)>;
}

impl<F> MetricSampler for F
where
    F: Fn(f64, f64) -> Option<(f64, f64)>,
{
    fn sample(&self, u: f64, v: f64) -> Option<(f64, f64)> {
        self(u, v)
    }
}

type Christoffel = [[[f64; 4]; 4]; 4];

#[derive(Clone, Copy)]
struct Local {
    r: f64,
    r_u: f64,
    r_v: f64,
    om: f64,
    om_u: f64,
    om_v: f64,
}

/// Γ^a_{bc} indexed `[a][b][c]`.
fn christoffel(p: &Local, theta: f64) -> Christoffel {
    let mut g = [[[0.0; 4]; 4]; 4];
    let (s, c) = theta.sin_cos();
    let om2 = p.om * p.om;
    g[U][U][U] = 2.0 * p.om_u / p.om;
    g[U][TH][TH] = 2.0 * p.r * p.r_v / om2;
    g[U][PH][PH] = 2.0 * p.r * s * s * p.r_v / om2;
    g[V][V][V] = 2.0 * p.om_v / p.om;
    g[V][TH][TH] = 2.0 * p.r * p.r_u / om2;
    g[V][PH][PH] = 2.0 * p.r * s * s * p.r_u / om2;
    for (a, b) in [(TH, TH), (PH, PH)] {
        g[a][U][b] = p.r_u / p.r;
        g[a][b][U] = p.r_u / p.r;
        g[a][V][b] = p.r_v / p.r;
        g[a][b][V] = p.r_v / p.r;
    }
    g[TH][PH][PH] = -s * c;
    g[PH][TH][PH] = c / s;
    g[PH][PH][TH] = c / s;
    g
}

fn kretschmann_from_stencil(stencil: &[[(f64, f64); 5]; 5], du: f64, dv: f64) -> Option<f64> {
    if stencil.iter().flatten().any(|&(r, lo)| !(r > 0.0) || !lo.is_finite()) {
        return None;
    }
    let r = |a: usize, b: usize| stencil[a][b].0;
    let om = |a: usize, b: usize| stencil[a][b].1.exp();
    let local = |a: usize, b: usize| Local {
        r: r(a, b),
        r_u: (r(a + 1, b) - r(a - 1, b)) / (2.0 * du),
        r_v: (r(a, b + 1) - r(a, b - 1)) / (2.0 * dv),
        om: om(a, b),
        om_u: (om(a + 1, b) - om(a - 1, b)) / (2.0 * du),
        om_v: (om(a, b + 1) - om(a, b - 1)) / (2.0 * dv),
    };

    let centre = local(2, 2);
    let gamma = christoffel(&centre, THETA);
    let gamma_e = christoffel(&local(3, 2), THETA);
    let gamma_w = christoffel(&local(1, 2), THETA);
    let gamma_n = christoffel(&local(2, 3), THETA);
    let gamma_s = christoffel(&local(2, 1), THETA);
    let gamma_th: [Christoffel; 4] = [-2.0, -1.0, 1.0, 2.0].map(|k| christoffel(&centre, THETA + k * THETA_STEP));

    // dgamma[c][a][b][d] = ∂_c Γ^a_{bd}
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for d in 0..4 {
                dgamma[U][a][b][d] = (gamma_e[a][b][d] - gamma_w[a][b][d]) / (2.0 * du);
                dgamma[V][a][b][d] = (gamma_n[a][b][d] - gamma_s[a][b][d]) / (2.0 * dv);
                dgamma[TH][a][b][d] = (gamma_th[0][a][b][d] - 8.0 * gamma_th[1][a][b][d] + 8.0 * gamma_th[2][a][b][d]
                    - gamma_th[3][a][b][d])
                    / (12.0 * THETA_STEP);
            }
        }
    }

    // R^a_{bcd} = ∂_c Γ^a_{db} − ∂_d Γ^a_{cb} + Γ^a_{ce} Γ^e_{db} − Γ^a_{de} Γ^e_{cb}
    let mut riemann_up = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut x = dgamma[c][a][d][b] - dgamma[d][a][c][b];
                    for e in 0..4 {
                        x += gamma[a][c][e] * gamma[e][d][b] - gamma[a][d][e] * gamma[e][c][b];
                    }
                    riemann_up[a][b][c][d] = x;
                }
            }
        }
    }

    let sin2 = THETA.sin().powi(2);
    let mut metric = [[0.0; 4]; 4];
    let om2 = centre.om * centre.om;
    metric[U][V] = -0.5 * om2;
    metric[V][U] = -0.5 * om2;
    metric[TH][TH] = centre.r * centre.r;
    metric[PH][PH] = centre.r * centre.r * sin2;
    let mut inverse = [[0.0; 4]; 4];
    inverse[U][V] = -2.0 / om2;
    inverse[V][U] = -2.0 / om2;
    inverse[TH][TH] = 1.0 / (centre.r * centre.r);
    inverse[PH][PH] = 1.0 / (centre.r * centre.r * sin2);

    // R_{abcd}
    let mut lower = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    lower[a][b][c][d] = (0..4).map(|e| metric[a][e] * riemann_up[e][b][c][d]).sum();
                }
            }
        }
    }
    // Raise all four indices one at a time.
    let mut upper = lower;
    for slot in 0..4 {
        let mut next = [[[[0.0; 4]; 4]; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let idx = [a, b, c, d];
                        let mut x = 0.0;
                        for e in 0..4 {
                            let mut src = idx;
                            src[slot] = e;
                            x += inverse[idx[slot]][e] * upper[src[0]][src[1]][src[2]][src[3]];
                        }
                        next[a][b][c][d] = x;
                    }
                }
            }
        }
        upper = next;
    }

    let mut k = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    k += lower[a][b][c][d] * upper[a][b][c][d];
                }
            }
        }
    }
    k.is_finite().then_some(k)
}

/// Kretschmann scalar at `(u, v)` from a metric sampler on a 5×5 stencil of
/// spacings `du`, `dv`. `None` if any stencil point is unavailable.
pub fn kretschmann_oracle(sampler: &impl MetricSampler, u: f64, v: f64, du: f64, dv: f64) -> Option<f64> {
    let mut stencil = [[(0.0, 0.0); 5]; 5];
    for (a, row) in stencil.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            *cell = sampler.sample(u + (a as f64 - 2.0) * du, v + (b as f64 - 2.0) * dv)?;
        }
    }
    kretschmann_from_stencil(&stencil, du, dv)
}

/// Oracle evaluated on grid values of (r, log Ω) with the grid spacings.
pub fn kretschmann_oracle_at(state: &FieldState, i: usize, j: usize) -> Option<f64> {
    let g = state.grid();
    if i < 2 || j < 2 || i + 2 >= g.n_u || j + 2 >= g.n_v {
        return None;
    }
    let mut stencil = [[(0.0, 0.0); 5]; 5];
    for (a, row) in stencil.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            let p = state.active(i + a - 2, j + b - 2)?;
            *cell = (p.r, p.log_omega);
        }
    }
    kretschmann_from_stencil(&stencil, g.du, g.dv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_is_flat() {
        let flat = |u: f64, v: f64| Some((0.5 * (v - u), 0.0));
        for h in [1e-2, 1e-3] {
            let k = kretschmann_oracle(&flat, 0.0, 2.0, h, h).unwrap();
            assert!(k.abs() <= 10.0 * h * h, "K = {k} at h = {h}");
        }
    }

    #[test]
    fn out_of_domain_is_not_evaluable() {
        let half = |u: f64, v: f64| (u < 0.01).then_some((0.5 * (v - u), 0.0));
        assert!(kretschmann_oracle(&half, 0.0, 2.0, 0.01, 0.01).is_none());
    }
}
