//! Diamond-cell predictor-corrector march over the null grid.
//!
//! Each cell advances `(r, log Ω, φ)` to its NE corner from the second-order
//! wave equations integrated over the diamond, and the null derivatives along
//! the cell edges with the trapezoid rule. Diagonals `d = i + j` are processed
//! in order; cells on one diagonal are independent and run in parallel, and
//! their results are written back only after the whole diagonal is computed,
//! so the output does not depend on scheduling.

use std::io::{Read, Write};
use std::time::Instant;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field_equations::{constraint_residual_u, constraint_residual_v, kretschmann_at, wave_rhs, ConstraintResiduals};
use crate::geometry::{Cell, DoubleNullGrid, FieldState, PointState, PointStatus};
use crate::initial_data::InitialDataSpec;

/// Largest |log Ω| accepted before a run is declared blown up.
pub const LOG_OMEGA_LIMIT: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExcisionPolicy {
    /// Excise a point once r drops to the floor, and every point whose
    /// diamond touches an excised point.
    #[default]
    MaskFuture,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchemeConfig {
    pub corrector_iterations: usize,
    pub r_floor: f64,
    /// Check constraints on every k-th diagonal.
    pub constraint_check_cadence: usize,
    pub excision_policy: ExcisionPolicy,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self { corrector_iterations: 2, r_floor: 1e-3, constraint_check_cadence: 1, excision_policy: ExcisionPolicy::MaskFuture }
    }
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.corrector_iterations < 1 {
            return Err(Error::Config("corrector_iterations must be at least 1".into()));
        }
        if !(self.r_floor > 0.0 && self.r_floor.is_finite()) {
            return Err(Error::Config(format!("r_floor must be positive, got {}", self.r_floor)));
        }
        if self.constraint_check_cadence < 1 {
            return Err(Error::Config("constraint_check_cadence must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub diagonals_completed: usize,
    pub cells_excised: usize,
    /// `(diagonal, max |constraint residual|)` for each checked diagonal.
    pub max_constraint_residual_history: Vec<(usize, f64)>,
    /// Seconds.
    pub wall_time: f64,
}

/// Result of advancing one diamond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellUpdate {
    Active(PointState),
    Excised,
}

/// Non-finite or runaway value met inside a cell; located by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct CellBlowup(pub String);

fn check(p: &PointState, stage: &str) -> std::result::Result<(), CellBlowup> {
    if !p.is_finite() {
        return Err(CellBlowup(format!("non-finite value in {stage}: {p:?}")));
    }
    if p.log_omega.abs() > LOG_OMEGA_LIMIT {
        return Err(CellBlowup(format!("|log Ω| = {} exceeds {LOG_OMEGA_LIMIT} in {stage}", p.log_omega.abs())));
    }
    Ok(())
}

fn rhs(p: &PointState, stage: &str) -> std::result::Result<[f64; 3], CellBlowup> {
    let f = wave_rhs(p).map_err(|e| CellBlowup(format!("{stage}: {e}")))?;
    if f.iter().all(|x| x.is_finite()) {
        Ok(f)
    } else {
        Err(CellBlowup(format!("non-finite right-hand side in {stage}")))
    }
}

/// Advance one null diamond from its W, S, SW corners to NE.
pub fn update_cell(
    west: &PointState,
    south: &PointState,
    south_west: &PointState,
    du: f64,
    dv: f64,
    config: &SchemeConfig,
) -> std::result::Result<CellUpdate, CellBlowup> {
    let area = du * dv;
    let f_w = rhs(west, "west corner")?;
    let f_s = rhs(south, "south corner")?;

    let centre = PointState::lerp(west, south, 0.5, 0.5);
    let f_c = rhs(&centre, "predictor")?;
    let mut ne = PointState {
        r: west.r + south.r - south_west.r + area * f_c[0],
        log_omega: west.log_omega + south.log_omega - south_west.log_omega + area * f_c[1],
        phi: west.phi + south.phi - south_west.phi + area * f_c[2],
        nu: south.nu + dv * f_s[0],
        lambda: west.lambda + du * f_w[0],
        z: south.z + dv * f_s[2],
        w: west.w + du * f_w[2],
    };
    check(&ne, "predictor")?;
    if ne.r <= config.r_floor {
        return Ok(CellUpdate::Excised);
    }

    for _ in 0..config.corrector_iterations {
        let centre = PointState::mean4(west, south, south_west, &ne);
        let f_c = rhs(&centre, "corrector")?;
        let f_ne = rhs(&ne, "corrector")?;
        ne = PointState {
            r: west.r + south.r - south_west.r + area * f_c[0],
            log_omega: west.log_omega + south.log_omega - south_west.log_omega + area * f_c[1],
            phi: west.phi + south.phi - south_west.phi + area * f_c[2],
            nu: south.nu + 0.5 * dv * (f_s[0] + f_ne[0]),
            lambda: west.lambda + 0.5 * du * (f_w[0] + f_ne[0]),
            z: south.z + 0.5 * dv * (f_s[2] + f_ne[2]),
            w: west.w + 0.5 * du * (f_w[2] + f_ne[2]),
        };
        check(&ne, "corrector")?;
        if ne.r <= config.r_floor {
            return Ok(CellUpdate::Excised);
        }
    }
    Ok(CellUpdate::Active(ne))
}

/// A march that stopped on a numerical blow-up, with everything computed
/// before the failing diagonal.
#[derive(Debug)]
pub struct MarchAbort {
    pub error: Error,
    pub partial: FieldState,
    pub report: EvolutionReport,
}

impl std::fmt::Display for MarchAbort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (after {} diagonals)", self.error, self.report.diagonals_completed)
    }
}

impl std::error::Error for MarchAbort {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<MarchAbort> for Error {
    fn from(a: MarchAbort) -> Self {
        a.error
    }
}

fn config_abort(state: FieldState, msg: String) -> MarchAbort {
    MarchAbort { error: Error::Config(msg), partial: state, report: EvolutionReport::default() }
}

fn cell_outcome(state: &FieldState, i: usize, j: usize, config: &SchemeConfig) -> std::result::Result<CellUpdate, CellBlowup> {
    let cell = Cell { i, j };
    if !cell.is_updatable(state) {
        return Ok(CellUpdate::Excised);
    }
    let g = state.grid();
    let (wi, wj) = cell.west();
    let (si, sj) = cell.south();
    let (swi, swj) = cell.south_west();
    update_cell(&state.get(wi, wj), &state.get(si, sj), &state.get(swi, swj), g.du, g.dv, config)
}

/// Largest |constraint residual| over the points of diagonal `d` whose
/// stencils are complete, reduced in index order.
fn diagonal_residual(state: &FieldState, d: usize) -> f64 {
    state
        .grid()
        .diagonal(d)
        .flat_map(|(i, j)| [constraint_residual_u(state, i, j), constraint_residual_v(state, i, j)])
        .flatten()
        .fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// Evolve constraint-exact characteristic data over the whole grid.
pub fn march(initial: FieldState, config: &SchemeConfig) -> std::result::Result<(FieldState, EvolutionReport), MarchAbort> {
    march_with(initial, config, 1, |_, _| Ok(()))
}

/// [`march`] starting at diagonal `first` (all earlier diagonals already
/// filled, e.g. from a checkpoint), calling `on_diagonal(state, d)` after each
/// completed diagonal.
pub fn march_with(
    initial: FieldState,
    config: &SchemeConfig,
    first: usize,
    mut on_diagonal: impl FnMut(&FieldState, usize) -> Result<()>,
) -> std::result::Result<(FieldState, EvolutionReport), MarchAbort> {
    if let Err(e) = config.validate() {
        return Err(MarchAbort { error: e, partial: initial, report: EvolutionReport::default() });
    }
    let grid = *initial.grid();
    if !initial.initial_rays_populated() {
        return Err(config_abort(initial, "initial rays are not fully populated".into()));
    }
    if grid.n_u < 2 || grid.n_v < 2 || first == 0 {
        return Err(config_abort(initial, "no reachable cells".into()));
    }
    let start = Instant::now();
    let mut state = initial;
    let mut report = EvolutionReport::default();
    let last = grid.num_diagonals() - 1;

    for d in first..=last {
        let cells: Vec<(usize, usize)> = grid.diagonal(d).filter(|&(i, j)| i >= 1 && j >= 1).collect();
        let outcomes: Vec<_> = cells.par_iter().map(|&(i, j)| cell_outcome(&state, i, j, config)).collect();
        for (&(i, j), outcome) in cells.iter().zip(outcomes) {
            match outcome {
                Ok(CellUpdate::Active(p)) => state.set_active(i, j, p),
                Ok(CellUpdate::Excised) => {
                    state.set_excised(i, j);
                    report.cells_excised += 1;
                }
                Err(CellBlowup(what)) => {
                    report.wall_time = start.elapsed().as_secs_f64();
                    return Err(MarchAbort { error: Error::NumericalBlowup { i, j, what }, partial: state, report });
                }
            }
        }
        report.diagonals_completed += 1;
        if d >= 2 && (d - 1) % config.constraint_check_cadence == 0 {
            report.max_constraint_residual_history.push((d - 1, diagonal_residual(&state, d - 1)));
        }
        if let Err(error) = on_diagonal(&state, d) {
            report.wall_time = start.elapsed().as_secs_f64();
            return Err(MarchAbort { error, partial: state, report });
        }
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((state, report))
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"DNCK";
const CHECKPOINT_VERSION: u32 = 1;

/// Binary dump of a state after diagonal `diagonal`.
///
/// Layout (little-endian): magic `DNCK`, version `u32`, grid descriptor
/// (`u_min, u_max, v_min, v_max: f64`, `n_u, n_v: u64`, `refinement_level: u32`),
/// completed diagonal `u64`, then the seven field planes as row-major `f64`
/// in the order r, log Ω, φ, ∂ᵤr, ∂ᵥr, ∂ᵤφ, ∂ᵥφ, then the status plane as `u8`.
pub fn write_checkpoint(state: &FieldState, diagonal: usize, mut out: impl Write) -> Result<()> {
    let g = state.grid();
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
    for x in [g.u_min, g.u_max, g.v_min, g.v_max] {
        out.write_f64::<LittleEndian>(x)?;
    }
    out.write_u64::<LittleEndian>(g.n_u as u64)?;
    out.write_u64::<LittleEndian>(g.n_v as u64)?;
    out.write_u32::<LittleEndian>(g.refinement_level)?;
    out.write_u64::<LittleEndian>(diagonal as u64)?;
    for (_, plane) in state.planes() {
        for &x in plane {
            out.write_f64::<LittleEndian>(x)?;
        }
    }
    let mask: Vec<u8> = state.status_plane().iter().map(|&s| s as u8).collect();
    out.write_all(&mask)?;
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_checkpoint`]: the state and its completed diagonal.
pub fn read_checkpoint(mut input: impl Read) -> Result<(FieldState, usize)> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = input.read_u32::<LittleEndian>()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut ext = [0.0; 4];
    for x in &mut ext {
        *x = input.read_f64::<LittleEndian>()?;
    }
    let n_u = input.read_u64::<LittleEndian>()? as usize;
    let n_v = input.read_u64::<LittleEndian>()? as usize;
    let level = input.read_u32::<LittleEndian>()?;
    let diagonal = input.read_u64::<LittleEndian>()? as usize;
    let mut grid = DoubleNullGrid::new(ext[0], ext[1], ext[2], ext[3], n_u, n_v)
        .map_err(|e| Error::Checkpoint(format!("invalid grid descriptor: {e}")))?;
    grid.refinement_level = level;
    let n = grid.len();
    let mut planes = vec![vec![0.0; n]; 7];
    for plane in &mut planes {
        input.read_f64_into::<LittleEndian>(plane)?;
    }
    let mut mask = vec![0u8; n];
    input.read_exact(&mut mask)?;
    let mut state = FieldState::new(grid);
    for k in 0..n {
        let status = PointStatus::from_u8(mask[k]).ok_or_else(|| Error::Checkpoint(format!("bad status byte {}", mask[k])))?;
        let p = PointState {
            r: planes[0][k],
            log_omega: planes[1][k],
            phi: planes[2][k],
            nu: planes[3][k],
            lambda: planes[4][k],
            z: planes[5][k],
            w: planes[6][k],
        };
        state.set_raw(k, status, p);
    }
    Ok((state, diagonal))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceKind {
    /// Errors against a closed-form solution.
    Exact,
    /// Differences between successive nested levels.
    SelfConvergence,
}

/// Largest deviations of an evolved state from the family's closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactErrors {
    /// l_inf error of r.
    pub r: f64,
    /// l_inf error of log Ω.
    pub log_omega: f64,
    /// l_inf error of the closed-form Kretschmann scalar, relative where the
    /// exact value is nonzero and absolute otherwise.
    pub kretschmann: f64,
}

/// Compare every active point with the exact solution, if the family has one.
pub fn exact_errors(spec: &InitialDataSpec, state: &FieldState) -> Option<ExactErrors> {
    let background = spec.exact_solution()?;
    let g = state.grid();
    let mut e = ExactErrors { r: 0.0, log_omega: 0.0, kretschmann: 0.0 };
    for i in 0..g.n_u {
        for j in 0..g.n_v {
            let Some(p) = state.active(i, j) else { continue };
            let x = spec.exact_point(g, i, j)?;
            e.r = e.r.max((p.r - x.r).abs());
            e.log_omega = e.log_omega.max((p.log_omega - x.log_omega).abs());
            if let Some(k) = kretschmann_at(state, i, j) {
                let exact = background.kretschmann(x.r);
                let err = if exact != 0.0 { (k / exact - 1.0).abs() } else { k.abs() };
                e.kretschmann = e.kretschmann.max(err);
            }
        }
    }
    Some(e)
}

/// l_inf error of r against the family's closed form on active points.
pub fn exact_r_error(spec: &InitialDataSpec, state: &FieldState) -> Option<f64> {
    exact_errors(spec, state).map(|e| e.r)
}

/// One refinement level of a convergence study. Orders are log₂ of the ratio
/// to the previous (coarser) level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    /// l_inf error of r (exact), or l_inf difference of r to the next finer
    /// level on the common points (self-convergence; absent on the finest).
    pub error: Option<f64>,
    pub order: Option<f64>,
    /// l_inf error of log Ω (exact families only).
    pub log_omega_error: Option<f64>,
    pub log_omega_order: Option<f64>,
    /// Relative l_inf error of K (exact families only).
    pub kretschmann_error: Option<f64>,
    pub kretschmann_order: Option<f64>,
    /// RMS of the discrete constraint residuals over marched stencils.
    pub residual: f64,
    pub residual_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub kind: ConvergenceKind,
    pub rows: Vec<ConvergenceRow>,
    /// Errors too small (round-off) for orders to mean anything.
    pub degenerate: bool,
    /// Errors did not decrease monotonically under refinement.
    pub non_monotone: bool,
}

impl ConvergenceReport {
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }

    pub fn residual_orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.residual_order).collect()
    }

    pub fn kretschmann_orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.kretschmann_order).collect()
    }
}

/// Below this every error is treated as round-off.
const ROUND_OFF: f64 = 1e-12;

fn order(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > ROUND_OFF && fine > ROUND_OFF).then(|| (coarse / fine).log2())
}

fn order_of(prev: Option<f64>, cur: Option<f64>) -> Option<f64> {
    prev.zip(cur).and_then(|(a, b)| order(a, b))
}

/// Points active in both states compared on the coarse lattice.
fn max_r_difference(coarse: &FieldState, fine: &FieldState) -> Option<f64> {
    let restricted = fine.coarsen()?;
    let g = coarse.grid();
    let mut e: f64 = 0.0;
    for i in 0..g.n_u {
        for j in 0..g.n_v {
            if let (Some(a), Some(b)) = (coarse.active(i, j), restricted.active(i, j)) {
                e = e.max((a.r - b.r).abs());
            }
        }
    }
    Some(e)
}

/// RMS of both constraint residuals over stencils made of marched points.
pub fn residual_norm(state: &FieldState) -> f64 {
    let c = ConstraintResiduals::compute_evolved(state);
    let n = (c.u.count + c.v.count).max(1) as f64;
    ((c.u.l_2.powi(2) * c.u.count as f64 + c.v.l_2.powi(2) * c.v.count as f64) / n).sqrt()
}

/// Evolve `spec` on `levels` nested refinements of `base` and measure
/// convergence orders.
pub fn convergence_study(
    spec: &InitialDataSpec,
    base: &DoubleNullGrid,
    levels: usize,
    config: &SchemeConfig,
) -> Result<ConvergenceReport> {
    if levels < 3 {
        return Err(Error::Config(format!("convergence study needs at least 3 levels, got {levels}")));
    }
    let mut grid = *base;
    let mut states = Vec::with_capacity(levels);
    for _ in 0..levels {
        let data = spec.build(&grid)?;
        let (state, _) = march(data, config)?;
        states.push(state);
        grid = grid.refine();
    }
    let kind = if spec.exact_solution().is_some() { ConvergenceKind::Exact } else { ConvergenceKind::SelfConvergence };
    let exact: Vec<Option<ExactErrors>> = states.iter().map(|s| exact_errors(spec, s)).collect();
    let errors: Vec<Option<f64>> = match kind {
        ConvergenceKind::Exact => exact.iter().map(|e| e.map(|e| e.r)).collect(),
        ConvergenceKind::SelfConvergence => (0..levels)
            .map(|k| states.get(k + 1).and_then(|fine| max_r_difference(&states[k], fine)))
            .collect(),
    };
    let residuals: Vec<f64> = states.iter().map(residual_norm).collect();

    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    for k in 0..levels {
        let lo = exact[k].map(|e| e.log_omega);
        let ke = exact[k].map(|e| e.kretschmann);
        let prev = k.checked_sub(1).map(|p| rows[p]);
        rows.push(ConvergenceRow {
            h: states[k].grid().h(),
            error: errors[k],
            order: prev.and_then(|p| order_of(p.error, errors[k])),
            log_omega_error: lo,
            log_omega_order: prev.and_then(|p| order_of(p.log_omega_error, lo)),
            kretschmann_error: ke,
            kretschmann_order: prev.and_then(|p| order_of(p.kretschmann_error, ke)),
            residual: residuals[k],
            residual_order: prev.and_then(|p| order(p.residual, residuals[k])),
        });
    }
    let present: Vec<f64> = errors.iter().flatten().copied().collect();
    let degenerate = present.iter().all(|&e| e <= ROUND_OFF);
    let non_monotone = !degenerate && present.windows(2).any(|w| w[1] >= w[0]);
    Ok(ConvergenceReport { kind, rows, degenerate, non_monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial_data::{build_minkowski_data, build_schwarzschild_data, SchwarzschildInterior};

    fn flat_grid(n: usize) -> DoubleNullGrid {
        DoubleNullGrid::new(-1.0, 0.0, 1.0, 2.0, n, n).unwrap()
    }

    #[test]
    fn minkowski_cell_is_exact() {
        let g = flat_grid(3);
        let data = build_minkowski_data(&g).unwrap();
        let out = update_cell(&data.get(0, 1), &data.get(1, 0), &data.get(0, 0), g.du, g.dv, &SchemeConfig::default()).unwrap();
        let CellUpdate::Active(p) = out else { panic!("excised") };
        assert_eq!(p.r, 0.5 * (g.v(1) - g.u(1)));
        assert_eq!((p.phi, p.log_omega, p.nu, p.lambda), (0.0, 0.0, -0.5, 0.5));
    }

    #[test]
    fn minkowski_march_is_exact() {
        let g = flat_grid(101);
        let (s, report) = march(build_minkowski_data(&g).unwrap(), &SchemeConfig::default()).unwrap();
        assert_eq!(report.cells_excised, 0);
        assert_eq!(s.count(PointStatus::Active), g.len());
        for i in 0..g.n_u {
            for j in 0..g.n_v {
                let p = s.get(i, j);
                assert!((p.r - 0.5 * (g.v(j) - g.u(i))).abs() < 1e-12);
                assert!(p.log_omega.abs() < 1e-12 && p.phi.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn floor_excises() {
        let g = flat_grid(3);
        let data = build_minkowski_data(&g).unwrap();
        let cfg = SchemeConfig { r_floor: 10.0, ..Default::default() };
        let out = update_cell(&data.get(0, 1), &data.get(1, 0), &data.get(0, 0), g.du, g.dv, &cfg).unwrap();
        assert_eq!(out, CellUpdate::Excised);
    }

    #[test]
    fn non_finite_corner_is_blowup() {
        let g = flat_grid(3);
        let data = build_minkowski_data(&g).unwrap();
        let mut bad = data.get(0, 1);
        bad.z = f64::NAN;
        assert!(update_cell(&bad, &data.get(1, 0), &data.get(0, 0), g.du, g.dv, &SchemeConfig::default()).is_err());
    }

    #[test]
    fn schwarzschild_single_cell_error_is_third_order() {
        let bh = SchwarzschildInterior { mass: 0.5 };
        let (u0, v0) = (0.6, 0.6);
        let mut errs = vec![];
        for h in [0.02, 0.01, 0.005] {
            let p = |u: f64, v: f64| bh.point(u, v).unwrap();
            let out = update_cell(&p(u0, v0 + h), &p(u0 + h, v0), &p(u0, v0), h, h, &SchemeConfig::default()).unwrap();
            let CellUpdate::Active(ne) = out else { panic!() };
            errs.push((ne.r - p(u0 + h, v0 + h).r).abs());
        }
        for w in errs.windows(2) {
            let o = (w[0] / w[1]).log2();
            assert!(o > 2.7, "local order {o}, errors {errs:?}");
        }
    }

    #[test]
    fn unpopulated_rays_rejected() {
        let g = flat_grid(5);
        let err = march(FieldState::new(g), &SchemeConfig::default()).unwrap_err();
        assert!(matches!(err.error, Error::Config(_)));
    }

    #[test]
    fn checkpoint_round_trip() {
        let lo = SchwarzschildInterior { mass: 0.5 }.uv_at_radius(0.5).sqrt();
        let hi = SchwarzschildInterior { mass: 0.5 }.uv_at_radius(0.01).sqrt();
        let g = DoubleNullGrid::new(lo, hi, lo, hi, 21, 21).unwrap();
        let cfg = SchemeConfig { r_floor: 0.05, ..Default::default() };
        let (s, report) = march(build_schwarzschild_data(&g, 0.5).unwrap(), &cfg).unwrap();
        assert!(report.cells_excised > 0);
        let mut buf = Vec::new();
        write_checkpoint(&s, 40, &mut buf).unwrap();
        let (back, d) = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(d, 40);
        assert_eq!(back, s);
        buf[0] = b'X';
        assert!(matches!(read_checkpoint(buf.as_slice()), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let lo = SchwarzschildInterior { mass: 0.5 }.uv_at_radius(0.8).sqrt();
        let hi = SchwarzschildInterior { mass: 0.5 }.uv_at_radius(0.2).sqrt();
        let g = DoubleNullGrid::new(lo, hi, lo, hi, 31, 31).unwrap();
        let cfg = SchemeConfig::default();
        let data = build_schwarzschild_data(&g, 0.5).unwrap();
        let (full, _) = march(data.clone(), &cfg).unwrap();

        let mut saved = None;
        let _ = march_with(data, &cfg, 1, |s, d| {
            if d == 25 {
                let mut buf = Vec::new();
                write_checkpoint(s, d, &mut buf)?;
                saved = Some(buf);
                return Err(Error::Config("stop".into()));
            }
            Ok(())
        });
        let (restored, d) = read_checkpoint(saved.unwrap().as_slice()).unwrap();
        let (resumed, _) = march_with(restored, &cfg, d + 1, |_, _| Ok(())).unwrap();
        assert_eq!(resumed, full);
    }
}
