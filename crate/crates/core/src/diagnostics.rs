//! Observables computed from evolved states: Hawking mass and Kretschmann
//! fields, trapped region and apparent horizon, limits of r·∂r along rays
//! approaching the singular boundary, scalar-field bound constants, the Ω²
//! window and power-law blow-up fits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_equations::{hawking_mass_at, kretschmann_at};
use crate::geometry::{FieldState, PointState, PointStatus};

/// Relative band around μ = 1 inside which the trapped flag and μ > 1 may
/// disagree.
pub const MU_BAND: f64 = 1e-8;

/// How close (in grid points) a ray must end to the excised set to count as
/// approaching the singular boundary.
pub const APPROACH_REACH: usize = 4;

/// Minimum number of samples for a power-law fit.
pub const MIN_FIT_SAMPLES: usize = 8;

/// Both null expansions negative.
#[inline]
pub fn is_trapped(p: &PointState) -> bool {
    p.nu < 0.0 && p.lambda < 0.0
}

/// Derived quantities at one active point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub i: usize,
    pub j: usize,
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub m: f64,
    pub mu: f64,
    /// Kretschmann scalar; `None` where the difference stencil is incomplete.
    pub kretschmann: Option<f64>,
    pub trapped: bool,
    pub r_nu: f64,
    pub r_lambda: f64,
    pub r2_z: f64,
    pub r2_w: f64,
    pub log_omega: f64,
    pub log_r: f64,
}

impl DiagnosticsRecord {
    pub fn at(state: &FieldState, i: usize, j: usize) -> Option<Self> {
        let p = state.active(i, j)?;
        let mass = hawking_mass_at(&p).ok()?;
        let (u, v) = state.grid().coords(i, j);
        Some(Self {
            i,
            j,
            u,
            v,
            r: p.r,
            m: mass.m,
            mu: mass.mu,
            kretschmann: kretschmann_at(state, i, j),
            trapped: is_trapped(&p),
            r_nu: p.r * p.nu,
            r_lambda: p.r * p.lambda,
            r2_z: p.r * p.r * p.z.abs(),
            r2_w: p.r * p.r * p.w.abs(),
            log_omega: p.log_omega,
            log_r: p.r.ln(),
        })
    }

    /// Trapped flag agrees with μ > 1 outside the band around μ = 1.
    pub fn trapped_consistent(&self) -> bool {
        (self.mu - 1.0).abs() <= MU_BAND * (1.0 + self.mu.abs()) || self.trapped == (self.mu > 1.0)
    }
}

/// Records for every active point, row-major.
pub fn diagnostics_field(state: &FieldState) -> Vec<DiagnosticsRecord> {
    let g = *state.grid();
    (0..g.len())
        .into_par_iter()
        .filter_map(|k| DiagnosticsRecord::at(state, k / g.n_v, k % g.n_v))
        .collect()
}

/// A null ray through the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaySelector {
    /// `v = v(j)`, parameterized by increasing `u`.
    ConstV(usize),
    /// `u = u(i)`, parameterized by increasing `v`.
    ConstU(usize),
}

impl RaySelector {
    fn len(&self, state: &FieldState) -> usize {
        match self {
            RaySelector::ConstV(_) => state.grid().n_u,
            RaySelector::ConstU(_) => state.grid().n_v,
        }
    }

    fn point(&self, k: usize) -> (usize, usize) {
        match *self {
            RaySelector::ConstV(j) => (k, j),
            RaySelector::ConstU(i) => (i, k),
        }
    }

    /// Leading run of active points along the ray.
    pub fn active_points(&self, state: &FieldState) -> Vec<(usize, usize)> {
        (0..self.len(state)).map(|k| self.point(k)).take_while(|&(i, j)| state.is_active(i, j)).collect()
    }

    /// Whether the ray's active run ends within [`APPROACH_REACH`] points of an
    /// excised point.
    pub fn approaches_excision(&self, state: &FieldState) -> bool {
        let n = self.active_points(state).len();
        n > 0 && (n..self.len(state).min(n + APPROACH_REACH)).any(|k| {
            let (i, j) = self.point(k);
            state.status(i, j) == PointStatus::Excised
        })
    }
}

/// Indices `j` of the `v = const` rays that end at the excised set.
pub fn approach_rays(state: &FieldState) -> Vec<usize> {
    (0..state.grid().n_v).filter(|&j| RaySelector::ConstV(j).approaches_excision(state)).collect()
}

/// Indices `i` of the `u = const` rays that end at the excised set.
pub fn approach_rays_u(state: &FieldState) -> Vec<usize> {
    (0..state.grid().n_u).filter(|&i| RaySelector::ConstU(i).approaches_excision(state)).collect()
}

/// Apparent-horizon point on one `v = const` ray.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonCrossing {
    pub u: f64,
    pub v: f64,
    /// μ interpolated to the crossing.
    pub mu: f64,
    pub r: f64,
}

/// Zeros of ∂ᵥr along each `v = const` ray, by linear interpolation in `u`
/// between consecutive active points where ∂ᵥr changes from nonnegative to
/// negative. At most one (the first) crossing per ray.
pub fn find_apparent_horizon(state: &FieldState) -> Vec<HorizonCrossing> {
    let g = state.grid();
    let mut out = Vec::new();
    for j in 0..g.n_v {
        for i in 0..g.n_u.saturating_sub(1) {
            let (Some(a), Some(b)) = (state.active(i, j), state.active(i + 1, j)) else { continue };
            if a.lambda >= 0.0 && b.lambda < 0.0 {
                let t = a.lambda / (a.lambda - b.lambda);
                let (Ok(ma), Ok(mb)) = (hawking_mass_at(&a), hawking_mass_at(&b)) else { break };
                out.push(HorizonCrossing {
                    u: g.u(i) + t * g.du,
                    v: g.v(j),
                    mu: ma.mu + t * (mb.mu - ma.mu),
                    r: a.r + t * (b.r - a.r),
                });
                break;
            }
        }
    }
    out
}

/// First point in diagonal order (then increasing `i`) with ∂ᵥr < 0 and
/// ∂ᵤr < 0, as grid coordinates.
pub fn first_trapped_point(state: &FieldState) -> Option<(f64, f64)> {
    let g = state.grid();
    (0..g.num_diagonals())
        .flat_map(|d| g.diagonal(d))
        .find(|&(i, j)| state.active(i, j).is_some_and(|p| is_trapped(&p)))
        .map(|(i, j)| g.coords(i, j))
}

/// `(r, r ∂ᵤr, r ∂ᵥr)` along a ray toward the excised set, with statistics
/// over the final decade `r ≤ 10 r_last`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitTrack {
    pub ray: RaySelector,
    pub samples: Vec<(f64, f64, f64)>,
    pub r_last: f64,
    /// Final-decade mean of r ∂ᵤr (estimate of −C₁).
    pub mean_r_nu: f64,
    /// Final-decade mean of r ∂ᵥr (estimate of −C₂).
    pub mean_r_lambda: f64,
    /// Final-decade total variation of r ∂ᵤr divided by |mean|.
    pub variation_r_nu: f64,
    pub variation_r_lambda: f64,
    pub final_decade_samples: usize,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn total_variation(x: &[f64]) -> f64 {
    x.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

pub fn track_r_dr_limits(state: &FieldState, ray: RaySelector) -> Result<LimitTrack> {
    if !ray.approaches_excision(state) {
        return Err(Error::NotApplicable(format!("{ray:?} does not reach the excised set")));
    }
    let samples: Vec<(f64, f64, f64)> = ray
        .active_points(state)
        .into_iter()
        .map(|(i, j)| {
            let p = state.get(i, j);
            (p.r, p.r * p.nu, p.r * p.lambda)
        })
        .collect();
    let r_last = samples.last().map(|s| s.0).unwrap_or(f64::NAN);
    let window: Vec<_> = samples.iter().filter(|s| s.0 <= 10.0 * r_last).collect();
    if window.len() < 2 || samples[0].0 < 10.0 * r_last {
        return Err(Error::NotApplicable(format!("{ray:?} does not span a full decade of r")));
    }
    let nus: Vec<f64> = window.iter().map(|s| s.1).collect();
    let lambdas: Vec<f64> = window.iter().map(|s| s.2).collect();
    let (mean_r_nu, mean_r_lambda) = (mean(&nus), mean(&lambdas));
    Ok(LimitTrack {
        ray,
        r_last,
        mean_r_nu,
        mean_r_lambda,
        variation_r_nu: total_variation(&nus) / mean_r_nu.abs(),
        variation_r_lambda: total_variation(&lambdas) / mean_r_lambda.abs(),
        final_decade_samples: window.len(),
        samples,
    })
}

/// Allowed relative final-decade variation on perturbed data: the
/// `2 r^{1/100}` envelope with a measured-constant headroom of 5.
pub fn limit_envelope(r_last: f64) -> f64 {
    10.0 * r_last.powf(0.01)
}

/// Measured suprema of r²|∂ᵤφ| and r²|∂ᵥφ| over the trapped region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarBounds {
    pub d1: f64,
    pub d1_at: (f64, f64),
    pub d2: f64,
    pub d2_at: (f64, f64),
    /// Relative growth of each supremum over the final decade of r.
    pub growth_d1: f64,
    pub growth_d2: f64,
    /// Both growths below 10%.
    pub plateau: bool,
}

pub fn scalar_bound_constants(state: &FieldState) -> Result<ScalarBounds> {
    let records: Vec<DiagnosticsRecord> = diagnostics_field(state).into_iter().filter(|d| d.trapped).collect();
    if records.is_empty() {
        return Err(Error::NotApplicable("no trapped points".into()));
    }
    let r_min = records.iter().map(|d| d.r).fold(f64::INFINITY, f64::min);
    let sup = |f: fn(&DiagnosticsRecord) -> f64, outer_only: bool| {
        records
            .iter()
            .filter(|d| !outer_only || d.r >= 10.0 * r_min)
            .fold((0.0f64, (f64::NAN, f64::NAN)), |acc, d| if f(d) > acc.0 { (f(d), (d.u, d.v)) } else { acc })
    };
    let growth = |all: f64, outer: f64| if all == 0.0 { 0.0 } else if outer == 0.0 { f64::INFINITY } else { all / outer - 1.0 };
    let (d1, d1_at) = sup(|d| d.r2_z, false);
    let (d2, d2_at) = sup(|d| d.r2_w, false);
    let growth_d1 = growth(d1, sup(|d| d.r2_z, true).0);
    let growth_d2 = growth(d2, sup(|d| d.r2_w, true).0);
    Ok(ScalarBounds { d1, d1_at, d2, d2_at, growth_d1, growth_d2, plateau: growth_d1 < 0.1 && growth_d2 < 0.1 })
}

/// Power-law fit `y ≈ c · r^{−N}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub r_lo: f64,
    pub r_hi: f64,
    /// Fitted N (minus the log-log slope).
    pub exponent: f64,
    /// Intercept of the log-log line (log c).
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
    /// Samples in the window dropped for a nonpositive value.
    pub excluded: usize,
    /// Standard error of the exponent.
    pub std_error: f64,
}

/// Least squares on `(log r, log y)` over samples with `r ∈ [lo, hi]`.
pub fn fit_blowup_exponent(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Domain(format!("invalid fit window [{lo}, {hi}]")));
    }
    let in_window: Vec<(f64, f64)> = series.iter().copied().filter(|&(r, _)| r >= lo && r <= hi).collect();
    let pts: Vec<(f64, f64)> = in_window.iter().filter(|&&(r, y)| r > 0.0 && y > 0.0).map(|&(r, y)| (r.ln(), y.ln())).collect();
    let excluded = in_window.len() - pts.len();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::NotApplicable(format!("{} usable samples in [{lo}, {hi}], need {MIN_FIT_SAMPLES}", pts.len())));
    }
    let (x_lo, x_hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if x_hi - x_lo < 0.5 * std::f64::consts::LN_10 {
        return Err(Error::NotApplicable(format!("samples span less than half a decade of r in [{lo}, {hi}]")));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let std_error = if pts.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(RateFit { r_lo: lo, r_hi: hi, exponent: -slope, intercept, r_squared, samples: pts.len(), excluded, std_error })
}

/// `(r, K)` along a ray, where K is evaluable.
pub fn kretschmann_series(state: &FieldState, ray: RaySelector) -> Vec<(f64, f64)> {
    ray.active_points(state)
        .into_iter()
        .filter_map(|(i, j)| Some((state.get(i, j).r, kretschmann_at(state, i, j)?)))
        .collect()
}

/// `[2 r_floor, 20 r_floor]` shifted and clipped into `[r_min, r_max]`.
pub fn default_fit_window(r_floor: f64, r_min: f64, r_max: f64) -> (f64, f64) {
    let lo = (2.0 * r_floor).max(r_min);
    let hi = (lo * 10.0).min(r_max);
    (lo, hi)
}

/// Blow-up exponent fitted along the central approach ray in each direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSummary {
    /// Fit along the central `v = const` approach ray.
    pub along_v: RateFit,
    pub ray_j: usize,
    /// Cross-check along the central `u = const` approach ray.
    pub along_u: Option<RateFit>,
    /// Range of exponents over all `v = const` approach rays with a valid fit.
    pub spread: (f64, f64),
}

pub fn blowup_exponent(state: &FieldState, window: Option<(f64, f64)>, r_floor: f64) -> Result<ExponentSummary> {
    let rays = approach_rays(state);
    if rays.is_empty() {
        return Err(Error::NotApplicable("no ray reaches the excised set".into()));
    }
    let fit_ray = |ray: RaySelector| {
        let series = kretschmann_series(state, ray);
        let (r_min, r_max) = series.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| (a.min(s.0), b.max(s.0)));
        let w = window.unwrap_or_else(|| default_fit_window(r_floor, r_min, r_max));
        fit_blowup_exponent(&series, w)
    };
    let central = rays[rays.len() / 2];
    let along_v = fit_ray(RaySelector::ConstV(central))?;
    let urays = approach_rays_u(state);
    let along_u = urays.get(urays.len() / 2).and_then(|&i| fit_ray(RaySelector::ConstU(i)).ok());
    let fits: Vec<f64> = rays.par_iter().filter_map(|&j| fit_ray(RaySelector::ConstV(j)).ok().map(|f| f.exponent)).collect();
    let spread = fits.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(ExponentSummary { along_v, ray_j: central, along_u, spread })
}

/// Slope of log Ω² against log r near the singular boundary and the measured
/// constant in Ω² ≤ D/r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaWindow {
    pub slope: f64,
    /// max Ω² r over the samples.
    pub d_hat: f64,
    pub samples: usize,
    pub r_range: (f64, f64),
}

/// Pools the final decade of r on every approach ray (all active points when
/// nothing is excised) and fits log Ω² = a log r + b.
pub fn omega_window(state: &FieldState) -> Result<OmegaWindow> {
    let rays = approach_rays(state);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    if rays.is_empty() {
        let g = state.grid();
        for i in 0..g.n_u {
            for j in 0..g.n_v {
                if let Some(p) = state.active(i, j) {
                    pts.push((p.r, p.log_omega));
                }
            }
        }
    } else {
        for j in rays {
            let ray: Vec<PointState> = RaySelector::ConstV(j).active_points(state).iter().map(|&(i, j)| state.get(i, j)).collect();
            let r_last = ray.last().map(|p| p.r).unwrap_or(f64::NAN);
            pts.extend(ray.iter().filter(|p| p.r <= 10.0 * r_last).map(|p| (p.r, p.log_omega)));
        }
    }
    let (r_lo, r_hi) = pts.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if pts.len() < MIN_FIT_SAMPLES || !(r_hi >= 10.0 * r_lo * (1.0 - 1e-9)) {
        return Err(Error::NotApplicable("less than one decade of r available".into()));
    }
    let d_hat = pts.iter().map(|&(r, lo)| (2.0 * lo).exp() * r).fold(0.0, f64::max);
    let xy: Vec<(f64, f64)> = pts.iter().map(|&(r, lo)| (r.ln(), 2.0 * lo)).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(OmegaWindow { slope: sxy / sxx, d_hat, samples: xy.len(), r_range: (r_lo, r_hi) })
}

/// Tolerances for inequality checks, calibrated on an exact solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub h: f64,
    /// Relative tolerance on K-based inequalities.
    pub kretschmann: f64,
    /// Tolerance on ∂ᵤm normalized by m |∂ᵤr| / r.
    pub mass_gradient: f64,
}

/// Safety factor between the error measured on the exact solution and the
/// tolerance applied elsewhere.
pub const TOLERANCE_SAFETY: f64 = 10.0;

/// Smallest tolerance handed out, so round-off never fails a check.
pub const TOLERANCE_FLOOR: f64 = 1e-10;

impl Tolerances {
    /// Measure errors of an evolved exact solution against its closed-form
    /// Kretschmann scalar `exact_k(r)` and its constant Hawking mass.
    pub fn calibrate(state: &FieldState, exact_k: impl Fn(f64) -> f64) -> Self {
        let records = diagnostics_field(state);
        let k_err = records
            .iter()
            .filter_map(|d| d.kretschmann.map(|k| (k / exact_k(d.r) - 1.0).abs()))
            .fold(0.0, f64::max);
        let dm_err = normalized_mass_gradients(state).into_iter().map(|(_, x)| x.abs()).fold(0.0, f64::max);
        Self {
            h: state.grid().h(),
            kretschmann: (TOLERANCE_SAFETY * k_err).max(TOLERANCE_FLOOR),
            mass_gradient: (TOLERANCE_SAFETY * dm_err).max(TOLERANCE_FLOOR),
        }
    }
}

/// Centered ∂ᵤm at trapped points with complete stencils, divided by the
/// natural scale m |∂ᵤr| / r.
fn normalized_mass_gradients(state: &FieldState) -> Vec<((usize, usize), f64)> {
    let g = state.grid();
    let mut out = Vec::new();
    for i in 1..g.n_u.saturating_sub(1) {
        for j in 0..g.n_v {
            let (Some(a), Some(c), Some(b)) = (state.active(i - 1, j), state.active(i, j), state.active(i + 1, j)) else {
                continue;
            };
            if !is_trapped(&c) {
                continue;
            }
            let (Ok(ma), Ok(mc), Ok(mb)) = (hawking_mass_at(&a), hawking_mass_at(&c), hawking_mass_at(&b)) else { continue };
            let dm = (mb.m - ma.m) / (2.0 * g.du);
            let scale = mc.m.abs() * c.nu.abs() / c.r;
            if scale > 0.0 {
                out.push(((i, j), dm / scale));
            }
        }
    }
    out
}

/// Outcome of an inequality checked over trapped points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    /// Smallest normalized margin found (`+∞` when nothing was checked).
    pub min_margin: f64,
    pub at: Option<(f64, f64)>,
    pub checked: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl InequalityCheck {
    fn from_margins(state: &FieldState, margins: impl Iterator<Item = ((usize, usize), f64)>, tolerance: f64) -> Self {
        let mut min_margin = f64::INFINITY;
        let mut at = None;
        let mut checked = 0;
        for ((i, j), x) in margins {
            checked += 1;
            if x < min_margin {
                min_margin = x;
                at = Some(state.grid().coords(i, j));
            }
        }
        Self { min_margin, at, checked, tolerance, pass: min_margin >= -tolerance }
    }
}

/// `K ≥ 32 m²/r⁶` at trapped points, as the relative margin
/// `(K − 32 m²/r⁶) / K`.
pub fn mass_inequality_check(state: &FieldState, tol: &Tolerances) -> InequalityCheck {
    let margins = diagnostics_field(state).into_iter().filter(|d| d.trapped).filter_map(|d| {
        let k = d.kretschmann?;
        let bound = 32.0 * d.m * d.m / d.r.powi(6);
        Some(((d.i, d.j), (k - bound) / k.abs().max(bound)))
    });
    InequalityCheck::from_margins(state, margins, tol.kretschmann)
}

/// `∂ᵤm ≥ 0` at trapped points, via centered differences of the Hawking mass.
pub fn mass_monotonicity_check(state: &FieldState, tol: &Tolerances) -> InequalityCheck {
    InequalityCheck::from_margins(state, normalized_mass_gradients(state).into_iter(), tol.mass_gradient)
}

/// Points where ∂ᵥr ≥ 0 at an active point lying later in `u` (same `v`) than
/// a point with ∂ᵥr < 0.
pub fn trapped_monotonicity_violations(state: &FieldState) -> Vec<(usize, usize)> {
    let g = state.grid();
    let mut out = Vec::new();
    for j in 0..g.n_v {
        let mut seen_negative = false;
        for i in 0..g.n_u {
            if let Some(p) = state.active(i, j) {
                if p.lambda < 0.0 {
                    seen_negative = true;
                } else if seen_negative {
                    out.push((i, j));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{march, SchemeConfig};
    use crate::geometry::DoubleNullGrid;
    use crate::initial_data::{build_minkowski_data, build_schwarzschild_data, SchwarzschildInterior};
    use proptest::prelude::*;

    #[test]
    fn exact_power_laws() {
        let rs: Vec<f64> = (0..40).map(|k| 0.01 * 1.1f64.powi(k)).collect();
        let s6: Vec<_> = rs.iter().map(|&r| (r, r.powi(-6))).collect();
        let f = fit_blowup_exponent(&s6, (0.01, 0.5)).unwrap();
        assert!((f.exponent - 6.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let s65: Vec<_> = rs.iter().map(|&r| (r, 3.0 * r.powf(-6.5))).collect();
        let f = fit_blowup_exponent(&s65, (0.01, 0.5)).unwrap();
        assert!((f.exponent - 6.5).abs() < 1e-12);
        assert!((f.intercept - 3.0f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn fit_rejects_thin_windows() {
        let s: Vec<_> = (0..5).map(|k| (0.1 + 0.01 * k as f64, 1.0)).collect();
        assert!(matches!(fit_blowup_exponent(&s, (0.05, 0.5)), Err(Error::NotApplicable(_))));
        let narrow: Vec<_> = (0..20).map(|k| (0.1 + 0.001 * k as f64, 1.0)).collect();
        assert!(matches!(fit_blowup_exponent(&narrow, (0.05, 0.5)), Err(Error::NotApplicable(_))));
        let mut with_bad: Vec<_> = (0..20).map(|k| (0.01 * 1.2f64.powi(k), 1.0)).collect();
        with_bad[3].1 = -1.0;
        assert_eq!(fit_blowup_exponent(&with_bad, (0.001, 1.0)).unwrap().excluded, 1);
    }

    proptest! {
        #[test]
        fn fit_recovers_any_power(n in 0.5f64..12.0, c in 0.1f64..10.0) {
            let s: Vec<_> = (0..30).map(|k| { let r = 0.02 * 1.15f64.powi(k); (r, c * r.powf(-n)) }).collect();
            let f = fit_blowup_exponent(&s, (0.01, 10.0)).unwrap();
            prop_assert!((f.exponent - n).abs() < 1e-9);
            prop_assert!(f.r_squared <= 1.0 && f.r_squared >= 0.0);
        }
    }

    fn flat_state() -> FieldState {
        let g = DoubleNullGrid::new(-1.0, 0.9, 1.0, 2.0, 41, 21).unwrap();
        march(build_minkowski_data(&g).unwrap(), &SchemeConfig::default()).unwrap().0
    }

    #[test]
    fn minkowski_diagnostics() {
        let s = flat_state();
        assert!(find_apparent_horizon(&s).is_empty());
        assert!(approach_rays(&s).is_empty());
        assert!(matches!(scalar_bound_constants(&s), Err(Error::NotApplicable(_))));
        assert!(matches!(track_r_dr_limits(&s, RaySelector::ConstV(5)), Err(Error::NotApplicable(_))));
        let w = omega_window(&s).unwrap();
        assert!(w.slope.abs() < 1e-10);
        let tol = Tolerances { h: 0.0, kretschmann: 0.0, mass_gradient: 0.0 };
        let c = mass_inequality_check(&s, &tol);
        assert!(c.pass && c.checked == 0);
        for d in diagnostics_field(&s) {
            assert!(!d.trapped && d.trapped_consistent());
            assert!(d.m.abs() < 1e-12);
        }
    }

    fn interior_state(n: usize, floor: f64) -> FieldState {
        let bh = SchwarzschildInterior { mass: 0.5 };
        let a = bh.uv_at_radius(0.3).sqrt();
        let b = bh.uv_at_radius(0.1) / a;
        let g = DoubleNullGrid::new(a, b, a, b, n, n).unwrap();
        let cfg = SchemeConfig { r_floor: floor, ..Default::default() };
        march(build_schwarzschild_data(&g, 0.5).unwrap(), &cfg).unwrap().0
    }

    #[test]
    fn schwarzschild_diagnostics() {
        let s = interior_state(201, 0.02);
        assert!(find_apparent_horizon(&s).is_empty());
        assert!(trapped_monotonicity_violations(&s).is_empty());
        let rays = approach_rays(&s);
        assert!(!rays.is_empty());
        let b = scalar_bound_constants(&s).unwrap();
        assert_eq!((b.d1, b.d2), (0.0, 0.0));
        assert!(b.plateau);
        let w = omega_window(&s).unwrap();
        // log Ω² = −log r − r/2M + const, so the secant slope over the window sits below −1
        assert!(w.slope < -1.0 && w.slope > -1.2, "{w:?}");
        let tol = Tolerances::calibrate(&s, |r| 12.0 / r.powi(6));
        assert!(mass_inequality_check(&s, &tol).pass);
        assert!(mass_monotonicity_check(&s, &tol).pass);
        for d in diagnostics_field(&s) {
            assert!(d.trapped && d.trapped_consistent());
            if d.r > 0.1 {
                assert!((d.m - 0.5).abs() < 1e-3, "{d:?}");
            }
        }
    }

    #[test]
    fn ray_selection() {
        let s = interior_state(101, 0.02);
        let j = approach_rays(&s)[0];
        let ray = RaySelector::ConstV(j);
        let pts = ray.active_points(&s);
        assert!(pts.iter().enumerate().all(|(k, &(i, jj))| i == k && jj == j));
        assert!(ray.approaches_excision(&s));
        assert!(!RaySelector::ConstV(0).approaches_excision(&s));
    }

    #[test]
    fn trapped_flag_monotonicity_detects_untrapping() {
        let g = DoubleNullGrid::new(-1.0, 0.9, 1.0, 2.0, 5, 3).unwrap();
        let mut s = build_minkowski_data(&g).unwrap();
        let mut p = s.get(1, 0);
        p.lambda = -0.1;
        s.set_active(1, 0, p);
        assert_eq!(trapped_monotonicity_violations(&s), vec![(2, 0), (3, 0), (4, 0)]);
    }
}
