//! A single run: initial data, evolution, diagnostics, artifacts.

use std::path::Path;

use nullsim::diagnostics::{
    approach_rays, blowup_exponent, diagnostics_field, find_apparent_horizon, first_trapped_point, limit_envelope,
    mass_inequality_check, mass_monotonicity_check, omega_window, scalar_bound_constants, track_r_dr_limits,
    trapped_monotonicity_violations, InequalityCheck, LimitTrack, RaySelector, Tolerances,
};
use nullsim::evolution::{march, march_with, EvolutionReport};
use nullsim::initial_data::{criterion_functionals, CriterionReport, Family, Gauge, InitialDataSpec, SchwarzschildInterior};
use nullsim::{Error, FieldState, PointState};
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{default_rays, save_checkpoint, save_grid_dump, save_ray, save_text};
use crate::presets;
use crate::summary::{finite, Check, FittedConstants, RunOutcome, RunSummary, TOOL_VERSION};

/// Resolution of the reference Schwarzschild run used to calibrate
/// tolerances for families without a Schwarzschild background.
pub const REFERENCE_RESOLUTION: usize = 201;

/// Allowed final-decade variation of r ∂r on exact Schwarzschild runs.
pub const LIMIT_VARIATION_EXACT: f64 = 0.02;

/// Half-width of the accepted band around N = 6 on exact Schwarzschild runs.
pub const EXPONENT_BAND_EXACT: f64 = 0.05;
pub const EXPONENT_LOWER: f64 = 5.8;

/// Headroom on both ends of the Ω² slope window.
pub const OMEGA_SLOPE_HEADROOM: f64 = 0.02;

/// Outcome of the evolution step; `error` is set when the march stopped on a
/// numerical failure and `state` holds everything computed before it.
pub struct Evolved {
    pub state: FieldState,
    pub report: EvolutionReport,
    pub error: Option<String>,
}

pub fn initial_state(config: &RunConfig) -> CliResult<FieldState> {
    config.validate()?;
    let grid = config.grid.build()?;
    config.initial_data.build(&grid).map_err(|e| CliError::Config(e.to_string()))
}

pub fn evolve(
    config: &RunConfig,
    initial: FieldState,
    on_diagonal: impl FnMut(&FieldState, usize) -> nullsim::Result<()>,
) -> CliResult<Evolved> {
    match march_with(initial, &config.scheme, 1, on_diagonal) {
        Ok((state, report)) => Ok(Evolved { state, report, error: None }),
        Err(abort) => match abort.error {
            Error::NumericalBlowup { .. } | Error::SingularPoint { .. } => {
                let error = Some(abort.to_string());
                Ok(Evolved { state: abort.partial, report: abort.report, error })
            }
            other => Err(other.into()),
        },
    }
}

/// Run without touching the file system.
pub fn execute(config: &RunConfig) -> CliResult<(RunSummary, FieldState)> {
    let evolved = evolve(config, initial_state(config)?, |_, _| Ok(()))?;
    let summary = analyze(config, &evolved)?;
    Ok((summary, evolved.state))
}

/// Run and write the summary, ray tables, optional grid dump and checkpoints
/// to `dir`. A numerical failure still writes everything for the partial
/// state, then returns [`CliError::Numerical`].
pub fn run(config: &RunConfig, dir: &Path) -> CliResult<RunSummary> {
    let initial = initial_state(config)?;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("output directory {}: {e}", dir.display())))?;
    let every = config.output.checkpoint_every;
    let last = initial.grid().num_diagonals() - 1;
    let evolved = evolve(config, initial, |state, d| {
        if every > 0 && (d % every == 0 || d == last) {
            save_checkpoint(state, d, dir)?;
        }
        Ok(())
    })?;
    let summary = analyze(config, &evolved)?;
    if let Some(e) = &evolved.error {
        let d = evolved.report.diagonals_completed;
        save_checkpoint(&evolved.state, d, dir).map_err(|err| CliError::Numerical(format!("{e}; checkpoint failed: {err}")))?;
    }
    write_artifacts(config, &summary, &evolved.state, dir)?;
    match evolved.error {
        Some(e) => Err(CliError::Numerical(e)),
        None => Ok(summary),
    }
}

pub fn write_artifacts(config: &RunConfig, summary: &RunSummary, state: &FieldState, dir: &Path) -> CliResult<()> {
    save_text(&dir.join("summary.json"), &summary.to_json())?;
    save_text(&dir.join("summary.txt"), &summary.render_text())?;
    let rays = if config.diagnostics.rays.is_empty() { default_rays(state) } else { config.diagnostics.rays.clone() };
    for ray in rays {
        save_ray(state, ray, dir)?;
    }
    if config.output.dump_grid {
        save_grid_dump(state, dir)?;
    }
    Ok(())
}

/// Re-render `summary.txt` from `summary.json` in `dir`.
pub fn report(dir: &Path) -> CliResult<RunSummary> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let summary: RunSummary = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    save_text(&dir.join("summary.txt"), &summary.render_text())?;
    Ok(summary)
}

fn is_exact_schwarzschild(spec: &InitialDataSpec) -> bool {
    match spec.family {
        Family::Schwarzschild => true,
        Family::PerturbedSchwarzschild => spec.epsilon == 0.0,
        _ => false,
    }
}

/// Tolerances from an exact Schwarzschild evolution: the run itself when it
/// is one, the unperturbed background on the same grid for perturbed data,
/// and the reference interior problem otherwise.
pub fn calibrate_tolerances(config: &RunConfig, state: &FieldState) -> CliResult<Tolerances> {
    let spec = &config.initial_data;
    let exact_k = |mass: f64| move |r: f64| SchwarzschildInterior { mass }.kretschmann(r);
    if is_exact_schwarzschild(spec) {
        return Ok(Tolerances::calibrate(state, exact_k(spec.mass)));
    }
    let reference = match spec.family {
        Family::PerturbedSchwarzschild => {
            let mut c = config.clone();
            c.initial_data = InitialDataSpec::schwarzschild(spec.mass).with_gauge(spec.gauge);
            c
        }
        _ => presets::schwarzschild_reference(REFERENCE_RESOLUTION),
    };
    let (state, _) = march(initial_state(&reference)?, &reference.scheme)
        .map_err(|e| CliError::Numerical(format!("tolerance reference run: {e}")))?;
    Ok(Tolerances::calibrate(&state, exact_k(reference.initial_data.mass)))
}

fn criterion_report(config: &RunConfig, state: &FieldState) -> CliResult<CriterionReport> {
    let g = state.grid();
    let cone: Vec<PointState> = (0..g.n_v).map(|j| state.get(0, j)).collect();
    let (j1, j2) = config.diagnostics.criterion_window.unwrap_or((0, g.n_v - 1));
    let f = criterion_functionals(&cone, j1, j2).map_err(|e| CliError::Config(format!("criterion window: {e}")))?;
    let first = first_trapped_point(state);
    Ok(CriterionReport::new(f, first.is_some(), first))
}

fn inequality(name: &str, what: &str, c: InequalityCheck) -> Check {
    if c.checked == 0 {
        return Check::not_applicable(name, "no trapped points with a complete stencil");
    }
    let at = c.at.map(|(u, v)| format!(" at (u, v) = ({u:.6}, {v:.6})")).unwrap_or_default();
    let detail = format!("min {what} {:.3e}{at} over {} points, tolerance {:.3e}", c.min_margin, c.checked, c.tolerance);
    Check::new(name, c.pass, detail, c.min_margin, -c.tolerance)
}

/// Evaluate every invariant check and fitted constant on an evolved state.
pub fn analyze(config: &RunConfig, evolved: &Evolved) -> CliResult<RunSummary> {
    let state = &evolved.state;
    let spec = &config.initial_data;
    let h = state.grid().h();
    let tol = calibrate_tolerances(config, state)?;
    let mut checks = Vec::new();
    let mut k = FittedConstants::default();

    let history = &evolved.report.max_constraint_residual_history;
    let worst = history.iter().map(|x| x.1).filter(|x| x.is_finite()).fold(0.0, f64::max);
    let non_finite = history.iter().filter(|x| !x.1.is_finite()).count();
    checks.push(Check::new(
        "constraint_residuals_finite",
        non_finite == 0,
        format!("largest diagonal residual {worst:.3e}, {non_finite} non-finite diagonals"),
        non_finite as f64,
        0.0,
    ));

    let records = diagnostics_field(state);
    let inconsistent = records.iter().filter(|d| !d.trapped_consistent()).count();
    checks.push(Check::new(
        "trapped_flag_consistency",
        inconsistent == 0,
        format!("{inconsistent} of {} points disagree with mu > 1", records.len()),
        inconsistent as f64,
        0.0,
    ));

    let violations = trapped_monotonicity_violations(state);
    checks.push(Check::new(
        "trapped_monotonicity",
        violations.is_empty(),
        format!("{} untrapped points later in u than a trapped point", violations.len()),
        violations.len() as f64,
        0.0,
    ));
    checks.push(inequality("mass_monotonicity", "normalized du m", mass_monotonicity_check(state, &tol)));
    checks.push(inequality("mass_inequality", "relative margin of K over 32 m^2/r^6", mass_inequality_check(state, &tol)));

    let horizon = find_apparent_horizon(state);
    checks.push(if horizon.is_empty() {
        Check::not_applicable("horizon_mass_ratio", "no apparent horizon crossing")
    } else {
        let dev = horizon.iter().map(|c| (c.mu - 1.0).abs()).fold(0.0, f64::max);
        Check::new(
            "horizon_mass_ratio",
            dev <= h,
            format!("max |mu - 1| {dev:.3e} over {} crossings, bound h = {h:.3e}", horizon.len()),
            dev,
            h,
        )
    });

    let approach = approach_rays(state);
    let reaches = !approach.is_empty();

    checks.push(if !reaches {
        Check::not_applicable("scalar_bounds_plateau", "no ray reaches the excision floor")
    } else {
        match scalar_bound_constants(state) {
            Ok(b) => {
                k.d1 = finite(b.d1);
                k.d2 = finite(b.d2);
                let growth = b.growth_d1.max(b.growth_d2);
                Check::new(
                    "scalar_bounds_plateau",
                    b.plateau,
                    format!("D1 = {:.6}, D2 = {:.6}, final-decade growth {:.3e}", b.d1, b.d2, growth),
                    growth,
                    0.1,
                )
            }
            Err(e) => Check::not_applicable("scalar_bounds_plateau", e.to_string()),
        }
    });

    checks.push(limit_check(state, &approach, is_exact_schwarzschild(spec), &mut k));

    checks.push(if !reaches {
        Check::not_applicable("blowup_exponent", "no ray reaches the excision floor")
    } else {
        match blowup_exponent(state, config.diagnostics.fit_window, config.scheme.r_floor) {
            Ok(e) => {
                let n = e.along_v.exponent;
                k.n_hat = finite(n);
                k.n_hat_std_error = finite(e.along_v.std_error);
                k.n_hat_r_squared = finite(e.along_v.r_squared);
                k.n_hat_along_u = e.along_u.and_then(|f| finite(f.exponent));
                let (lo, hi) = match spec.family {
                    _ if is_exact_schwarzschild(spec) => (6.0 - EXPONENT_BAND_EXACT, 6.0 + EXPONENT_BAND_EXACT),
                    Family::PerturbedSchwarzschild => (EXPONENT_LOWER, 6.0 + 10.0 * spec.epsilon * spec.epsilon),
                    _ => (EXPONENT_LOWER, f64::INFINITY),
                };
                let detail = format!(
                    "N_hat = {n:.4} +- {:.4} (R^2 {:.6}) on r in [{:.3e}, {:.3e}], accepted [{lo}, {hi}]",
                    e.along_v.std_error, e.along_v.r_squared, e.along_v.r_lo, e.along_v.r_hi
                );
                Check::new("blowup_exponent", (lo..=hi).contains(&n), detail, n, hi)
            }
            Err(e) => Check::not_applicable("blowup_exponent", e.to_string()),
        }
    });

    checks.push(if !reaches {
        Check::not_applicable("omega_slope", "no ray reaches the excision floor")
    } else {
        match omega_window(state) {
            Ok(w) => {
                k.omega_slope = finite(w.slope);
                k.omega_d_hat = finite(w.d_hat);
                let eps = spec.epsilon;
                let (lo, hi) = (-1.0 - OMEGA_SLOPE_HEADROOM, -1.0 + eps * eps + OMEGA_SLOPE_HEADROOM);
                if spec.gauge != Gauge::IDENTITY {
                    Check::not_applicable("omega_slope", "the slope of log Omega^2 is only bounded in Kruskal gauge")
                } else if !matches!(spec.family, Family::Schwarzschild | Family::PerturbedSchwarzschild) {
                    Check::not_applicable("omega_slope", format!("slope {:.4} reported, no bound for this family", w.slope))
                } else {
                    let detail = format!("slope {:.4}, D_hat {:.4}, accepted [{lo:.4}, {hi:.4}]", w.slope, w.d_hat);
                    Check::new("omega_slope", (lo..=hi).contains(&w.slope), detail, w.slope, lo)
                }
            }
            Err(e) => Check::not_applicable("omega_slope", e.to_string()),
        }
    });

    let criterion = if spec.family == Family::Pulse { Some(criterion_report(config, state)?) } else { None };
    checks.push(match &criterion {
        Some(c) => Check::new(
            "trapped_surface_criterion",
            !(c.predicted_trapped && !c.observed_trapped),
            format!(
                "eta0 = {:.6}, E(delta0) = {:.6}, predicted {}, observed {}",
                c.eta0, c.e_of_delta0, c.predicted_trapped, c.observed_trapped
            ),
            c.eta0,
            c.e_of_delta0,
        ),
        None => Check::not_applicable("trapped_surface_criterion", "only evaluated for pulse data"),
    });

    Ok(RunSummary {
        tool_version: TOOL_VERSION.into(),
        outcome: if evolved.error.is_some() { RunOutcome::NumericalFailure } else { RunOutcome::Completed },
        error: evolved.error.clone(),
        config: config.clone(),
        evolution: EvolutionReport {
            max_constraint_residual_history: history.iter().copied().filter(|x| x.1.is_finite()).collect(),
            ..evolved.report.clone()
        },
        criterion,
        constants: k,
        tolerances: Some(tol),
        checks,
    })
}

/// Final-decade variation of r ∂ᵤr and r ∂ᵥr on every approach ray, against
/// 2% on exact data and the envelope on everything else.
fn limit_check(state: &FieldState, approach: &[usize], exact: bool, k: &mut FittedConstants) -> Check {
    const NAME: &str = "limit_r_dr";
    let tracks: Vec<LimitTrack> =
        approach.par_iter().filter_map(|&j| track_r_dr_limits(state, RaySelector::ConstV(j)).ok()).collect();
    if tracks.is_empty() {
        return Check::not_applicable(NAME, "no ray spans a full decade of r before the excision floor");
    }
    let central = &tracks[tracks.len() / 2];
    k.c1 = finite(-central.mean_r_nu);
    k.c2 = finite(-central.mean_r_lambda);
    let bound = |t: &LimitTrack| if exact { LIMIT_VARIATION_EXACT } else { limit_envelope(t.r_last) };
    let (worst, worst_bound) = tracks
        .iter()
        .map(|t| (t.variation_r_nu.max(t.variation_r_lambda), bound(t)))
        .max_by(|a, b| (a.0 / a.1).total_cmp(&(b.0 / b.1)))
        .expect("at least one track");
    let pass = tracks.iter().all(|t| t.variation_r_nu.max(t.variation_r_lambda) <= bound(t));
    Check::new(
        NAME,
        pass,
        format!("worst relative variation {worst:.4} against {worst_bound:.4} over {} rays", tracks.len()),
        worst,
        worst_bound,
    )
}
