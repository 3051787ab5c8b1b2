//! Double-null computational domain and the per-point field store.
//!
//! Grid index `i` runs along `u` (the incoming direction), `j` along `v`.
//! The initial outgoing cone is the row `i = 0` (`u = u_min`) and the
//! initial incoming cone is the column `j = 0` (`v = v_min`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform rectangle in the `(u, v)` null plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleNullGrid {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub n_u: usize,
    pub n_v: usize,
    pub du: f64,
    pub dv: f64,
    /// Number of global halvings applied since the grid was built.
    pub refinement_level: u32,
}

impl DoubleNullGrid {
    pub fn new(u_min: f64, u_max: f64, v_min: f64, v_max: f64, n_u: usize, n_v: usize) -> Result<Self> {
        if !(u_min.is_finite() && u_max.is_finite() && v_min.is_finite() && v_max.is_finite()) {
            return Err(Error::Config("grid extents must be finite".into()));
        }
        if u_max <= u_min || v_max <= v_min {
            return Err(Error::Config(format!(
                "degenerate extent: u in [{u_min}, {u_max}], v in [{v_min}, {v_max}]"
            )));
        }
        if n_u < 2 || n_v < 2 {
            return Err(Error::Config(format!("need at least 2 points per direction, got {n_u}x{n_v}")));
        }
        let du = (u_max - u_min) / (n_u - 1) as f64;
        let dv = (v_max - v_min) / (n_v - 1) as f64;
        if du <= 0.0 || dv <= 0.0 {
            return Err(Error::Config("grid spacing underflows to zero".into()));
        }
        Ok(Self { u_min, u_max, v_min, v_max, n_u, n_v, du, dv, refinement_level: 0 })
    }

    /// Halve both spacings over the same extents.
    ///
    /// Coarse point `(i, j)` coincides bit-exactly with fine point `(2i, 2j)`:
    /// the fine spacing is exactly half the coarse one and scaling by two
    /// commutes with rounding.
    pub fn refine(&self) -> Self {
        let n_u = 2 * self.n_u - 1;
        let n_v = 2 * self.n_v - 1;
        Self {
            n_u,
            n_v,
            du: (self.u_max - self.u_min) / (n_u - 1) as f64,
            dv: (self.v_max - self.v_min) / (n_v - 1) as f64,
            refinement_level: self.refinement_level + 1,
            ..*self
        }
    }

    #[inline]
    pub fn u(&self, i: usize) -> f64 {
        self.u_min + i as f64 * self.du
    }

    #[inline]
    pub fn v(&self, j: usize) -> f64 {
        self.v_min + j as f64 * self.dv
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.u(i), self.v(j))
    }

    /// Inverse of [`coords`](Self::coords) on grid points; `None` off the lattice.
    pub fn index_of(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        let fi = ((u - self.u_min) / self.du).round();
        let fj = ((v - self.v_min) / self.dv).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.n_u as f64 || fj >= self.n_v as f64 {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        (self.u(i) == u && self.v(j) == v).then_some((i, j))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n_u * self.n_v
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n_u && j < self.n_v);
        i * self.n_v + j
    }

    /// Largest of the two spacings; the `h` used in convergence orders.
    pub fn h(&self) -> f64 {
        self.du.max(self.dv)
    }

    pub fn num_diagonals(&self) -> usize {
        self.n_u + self.n_v - 1
    }

    /// Points `(i, j)` with `i + j = d`, in increasing `i`.
    pub fn diagonal(&self, d: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let i_lo = d.saturating_sub(self.n_v - 1);
        let i_hi = d.min(self.n_u - 1);
        (i_lo..=i_hi).map(move |i| (i, d - i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum PointStatus {
    Unset = 0,
    Active = 1,
    Excised = 2,
}

impl PointStatus {
    pub fn from_u8(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Unset),
            1 => Some(Self::Active),
            2 => Some(Self::Excised),
            _ => None,
        }
    }
}

/// Unknowns at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PointState {
    /// Areal radius.
    pub r: f64,
    /// log Ω.
    pub log_omega: f64,
    pub phi: f64,
    /// ∂ᵤr
    pub nu: f64,
    /// ∂ᵥr
    pub lambda: f64,
    /// ∂ᵤφ
    pub z: f64,
    /// ∂ᵥφ
    pub w: f64,
}

impl PointState {
    #[inline]
    pub fn omega_sq(&self) -> f64 {
        (2.0 * self.log_omega).exp()
    }

    pub fn is_finite(&self) -> bool {
        self.r.is_finite()
            && self.log_omega.is_finite()
            && self.phi.is_finite()
            && self.nu.is_finite()
            && self.lambda.is_finite()
            && self.z.is_finite()
            && self.w.is_finite()
    }

    pub(crate) fn lerp(a: &Self, b: &Self, wa: f64, wb: f64) -> Self {
        Self {
            r: wa * a.r + wb * b.r,
            log_omega: wa * a.log_omega + wb * b.log_omega,
            phi: wa * a.phi + wb * b.phi,
            nu: wa * a.nu + wb * b.nu,
            lambda: wa * a.lambda + wb * b.lambda,
            z: wa * a.z + wb * b.z,
            w: wa * a.w + wb * b.w,
        }
    }

    pub(crate) fn mean4(a: &Self, b: &Self, c: &Self, d: &Self) -> Self {
        Self {
            r: 0.25 * (a.r + b.r + c.r + d.r),
            log_omega: 0.25 * (a.log_omega + b.log_omega + c.log_omega + d.log_omega),
            phi: 0.25 * (a.phi + b.phi + c.phi + d.phi),
            nu: 0.25 * (a.nu + b.nu + c.nu + d.nu),
            lambda: 0.25 * (a.lambda + b.lambda + c.lambda + d.lambda),
            z: 0.25 * (a.z + b.z + c.z + d.z),
            w: 0.25 * (a.w + b.w + c.w + d.w),
        }
    }
}

/// Null diamond identified by its north-east corner.
///
/// The corners are W = (i−1, j), S = (i, j−1) and SW = (i−1, j−1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub i: usize,
    pub j: usize,
}

impl Cell {
    pub fn new(i: usize, j: usize) -> Option<Self> {
        (i >= 1 && j >= 1).then_some(Self { i, j })
    }

    pub fn west(&self) -> (usize, usize) {
        (self.i - 1, self.j)
    }

    pub fn south(&self) -> (usize, usize) {
        (self.i, self.j - 1)
    }

    pub fn south_west(&self) -> (usize, usize) {
        (self.i - 1, self.j - 1)
    }

    pub fn is_updatable(&self, state: &FieldState) -> bool {
        [self.west(), self.south(), self.south_west()]
            .iter()
            .all(|&(i, j)| state.status(i, j) == PointStatus::Active)
    }
}

/// Field planes in row-major order (`i` major), plus a status mask.
///
/// Non-active points hold NaN in every plane. Equality is bitwise on the
/// planes, so two states compare equal exactly when every stored value is
/// identical.
#[derive(Debug, Clone)]
pub struct FieldState {
    grid: DoubleNullGrid,
    pub(crate) r: Vec<f64>,
    pub(crate) log_omega: Vec<f64>,
    pub(crate) phi: Vec<f64>,
    pub(crate) nu: Vec<f64>,
    pub(crate) lambda: Vec<f64>,
    pub(crate) z: Vec<f64>,
    pub(crate) w: Vec<f64>,
    pub(crate) status: Vec<PointStatus>,
}

impl PartialEq for FieldState {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid
            && self.status == other.status
            && self
                .planes()
                .iter()
                .zip(other.planes().iter())
                .all(|((_, a), (_, b))| a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()))
    }
}

impl FieldState {
    pub fn new(grid: DoubleNullGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            r: vec![f64::NAN; n],
            log_omega: vec![f64::NAN; n],
            phi: vec![f64::NAN; n],
            nu: vec![f64::NAN; n],
            lambda: vec![f64::NAN; n],
            z: vec![f64::NAN; n],
            w: vec![f64::NAN; n],
            status: vec![PointStatus::Unset; n],
        }
    }

    #[inline]
    pub fn grid(&self) -> &DoubleNullGrid {
        &self.grid
    }

    #[inline]
    pub fn status(&self, i: usize, j: usize) -> PointStatus {
        self.status[self.grid.index(i, j)]
    }

    #[inline]
    pub fn is_active(&self, i: usize, j: usize) -> bool {
        self.status(i, j) == PointStatus::Active
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> PointState {
        let k = self.grid.index(i, j);
        PointState {
            r: self.r[k],
            log_omega: self.log_omega[k],
            phi: self.phi[k],
            nu: self.nu[k],
            lambda: self.lambda[k],
            z: self.z[k],
            w: self.w[k],
        }
    }

    /// The point state if the point is active.
    #[inline]
    pub fn active(&self, i: usize, j: usize) -> Option<PointState> {
        self.is_active(i, j).then(|| self.get(i, j))
    }

    pub fn set_active(&mut self, i: usize, j: usize, p: PointState) {
        let k = self.grid.index(i, j);
        self.r[k] = p.r;
        self.log_omega[k] = p.log_omega;
        self.phi[k] = p.phi;
        self.nu[k] = p.nu;
        self.lambda[k] = p.lambda;
        self.z[k] = p.z;
        self.w[k] = p.w;
        self.status[k] = PointStatus::Active;
    }

    pub fn set_excised(&mut self, i: usize, j: usize) {
        let k = self.grid.index(i, j);
        for plane in [
            &mut self.r,
            &mut self.log_omega,
            &mut self.phi,
            &mut self.nu,
            &mut self.lambda,
            &mut self.z,
            &mut self.w,
        ] {
            plane[k] = f64::NAN;
        }
        self.status[k] = PointStatus::Excised;
    }

    /// Assign a point from a `(status, state)` pair, as stored in checkpoints.
    pub(crate) fn set_raw(&mut self, k: usize, status: PointStatus, p: PointState) {
        self.r[k] = p.r;
        self.log_omega[k] = p.log_omega;
        self.phi[k] = p.phi;
        self.nu[k] = p.nu;
        self.lambda[k] = p.lambda;
        self.z[k] = p.z;
        self.w[k] = p.w;
        self.status[k] = status;
    }

    pub fn count(&self, status: PointStatus) -> usize {
        self.status.iter().filter(|&&s| s == status).count()
    }

    /// Both initial cones (`i = 0` and `j = 0`) are fully active.
    pub fn initial_rays_populated(&self) -> bool {
        let g = &self.grid;
        (0..g.n_v).all(|j| self.is_active(0, j)) && (0..g.n_u).all(|i| self.is_active(i, 0))
    }

    /// Named planes in the fixed checkpoint order.
    pub fn planes(&self) -> [(&'static str, &[f64]); 7] {
        [
            ("r", &self.r),
            ("log_omega", &self.log_omega),
            ("phi", &self.phi),
            ("nu", &self.nu),
            ("lambda", &self.lambda),
            ("z", &self.z),
            ("w", &self.w),
        ]
    }

    pub fn status_plane(&self) -> &[PointStatus] {
        &self.status
    }

    /// Restriction onto the coarse grid this state's grid refines, taking every
    /// other point. Used to compare nested runs pointwise.
    pub fn coarsen(&self) -> Option<FieldState> {
        let g = &self.grid;
        if g.n_u % 2 == 0 || g.n_v % 2 == 0 || g.n_u < 3 || g.n_v < 3 {
            return None;
        }
        let mut cg = DoubleNullGrid::new(g.u_min, g.u_max, g.v_min, g.v_max, g.n_u.div_ceil(2), g.n_v.div_ceil(2)).ok()?;
        cg.refinement_level = g.refinement_level.saturating_sub(1);
        let mut out = FieldState::new(cg);
        for i in 0..cg.n_u {
            for j in 0..cg.n_v {
                let k = g.index(2 * i, 2 * j);
                out.set_raw(cg.index(i, j), self.status[k], self.get(2 * i, 2 * j));
            }
        }
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_spacing() {
        let g = DoubleNullGrid::new(0.0, 1.0, 0.0, 1.0, 11, 11).unwrap();
        assert_eq!(g.du, 0.1);
        assert_eq!(g.dv, 0.1);
        assert_eq!(g.coords(5, 5), (0.5, 0.5));
        assert_eq!(g.index_of(0.5, 0.5), Some((5, 5)));
    }

    #[test]
    fn rectangular_spacing() {
        let g = DoubleNullGrid::new(0.0, 1.0, 0.0, 2.0, 11, 21).unwrap();
        assert_eq!(g.du, 0.1);
        assert_eq!(g.dv, 0.1);
    }

    #[test]
    fn minimal_grid() {
        let g = DoubleNullGrid::new(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap();
        assert_eq!((g.du, g.dv, g.len()), (1.0, 1.0, 4));
        let s = FieldState::new(g);
        assert_eq!(s.count(PointStatus::Unset), 4);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(DoubleNullGrid::new(1.0, 1.0, 0.0, 1.0, 5, 5), Err(Error::Config(_))));
        assert!(matches!(DoubleNullGrid::new(0.0, 1.0, 2.0, 1.0, 5, 5), Err(Error::Config(_))));
        assert!(matches!(DoubleNullGrid::new(0.0, 1.0, 0.0, 1.0, 1, 5), Err(Error::Config(_))));
        assert!(DoubleNullGrid::new(0.0, f64::NAN, 0.0, 1.0, 5, 5).is_err());
    }

    #[test]
    fn refinement_nests() {
        let g = DoubleNullGrid::new(0.0, 1.0, 0.0, 1.0, 11, 11).unwrap();
        let f = g.refine();
        assert_eq!((f.n_u, f.n_v), (21, 21));
        assert_eq!(f.du, g.du / 2.0);
        assert_eq!(f.refinement_level, 1);

        let two = DoubleNullGrid::new(0.0, 1.0, 0.0, 1.0, 2, 2).unwrap().refine().refine();
        assert_eq!((two.n_u, two.n_v), (5, 5));
    }

    #[test]
    fn coarse_points_reappear_bit_exactly() {
        let g = DoubleNullGrid::new(0.3171, 0.9137, -0.77, 1.2345, 37, 23).unwrap();
        let f = g.refine().refine();
        for i in 0..g.n_u {
            for j in 0..g.n_v {
                assert_eq!(g.coords(i, j), f.coords(4 * i, 4 * j));
            }
        }
    }

    #[test]
    fn diagonals_cover_grid_once() {
        let g = DoubleNullGrid::new(0.0, 1.0, 0.0, 1.0, 4, 7).unwrap();
        let mut seen = vec![0; g.len()];
        for d in 0..g.num_diagonals() {
            for (i, j) in g.diagonal(d) {
                assert_eq!(i + j, d);
                seen[g.index(i, j)] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn cell_corners() {
        assert!(Cell::new(0, 3).is_none());
        let c = Cell::new(2, 3).unwrap();
        assert_eq!((c.west(), c.south(), c.south_west()), ((1, 3), (2, 2), (1, 2)));
    }
}
