//! Parameter sweeps. Rows run in parallel and come back in input order.

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{field, fmt17};
use crate::run::{execute, EXPONENT_BAND_EXACT, EXPONENT_LOWER};
use crate::summary::RunSummary;

/// Fit uncertainty allowed when comparing exponents of neighbouring rows.
pub const EXPONENT_TREND_SLACK: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct CriterionRow {
    pub amplitude: f64,
    pub eta0: Option<f64>,
    pub delta0: Option<f64>,
    pub e_of_delta0: Option<f64>,
    pub predicted: Option<bool>,
    pub observed: Option<bool>,
    pub first_trapped: Option<(f64, f64)>,
    pub error: Option<String>,
    pub summary: Option<RunSummary>,
}

impl CriterionRow {
    /// Trapping predicted but not seen: the one outcome the criterion rules out.
    pub fn is_failure(&self) -> bool {
        self.predicted == Some(true) && self.observed == Some(false)
    }

    fn status(&self) -> &'static str {
        if self.is_failure() {
            "FAILURE"
        } else if self.error.is_some() {
            "error"
        } else {
            "ok"
        }
    }
}

pub const CRITERION_HEADER: [&str; 10] =
    ["amplitude", "eta0", "delta0", "E_delta0", "predicted", "observed", "first_trapped_u", "first_trapped_v", "status", "error"];

pub fn criterion_records(rows: &[CriterionRow]) -> Vec<Vec<String>> {
    let flag = |b: Option<bool>| b.map(|b| b.to_string()).unwrap_or_default();
    rows.iter()
        .map(|r| {
            vec![
                fmt17(r.amplitude),
                field(r.eta0),
                field(r.delta0),
                field(r.e_of_delta0),
                flag(r.predicted),
                flag(r.observed),
                field(r.first_trapped.map(|p| p.0)),
                field(r.first_trapped.map(|p| p.1)),
                r.status().into(),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect()
}

fn criterion_row(base: &RunConfig, amplitude: f64) -> CriterionRow {
    let mut row = CriterionRow {
        amplitude,
        eta0: None,
        delta0: None,
        e_of_delta0: None,
        predicted: None,
        observed: None,
        first_trapped: None,
        error: None,
        summary: None,
    };
    match base.with_amplitude(amplitude).and_then(|c| execute(&c)) {
        Ok((summary, _)) => {
            if let Some(c) = &summary.criterion {
                row.eta0 = Some(c.eta0);
                row.delta0 = Some(c.delta0);
                row.e_of_delta0 = Some(c.e_of_delta0);
                row.predicted = Some(c.predicted_trapped);
                row.observed = Some(c.observed_trapped);
                row.first_trapped = c.first_trapped_point;
            }
            row.error = summary.error.clone();
            row.summary = Some(summary);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// One pulse run per amplitude, comparing the predicted and observed
/// formation of a trapped surface.
pub fn criterion_sweep(base: &RunConfig, amplitudes: &[f64]) -> CliResult<Vec<CriterionRow>> {
    if amplitudes.len() < 2 {
        return Err(CliError::Config(format!("criterion sweep needs at least 2 amplitudes, got {}", amplitudes.len())));
    }
    base.with_amplitude(0.0)?.validate()?;
    Ok(amplitudes.par_iter().map(|&a| criterion_row(base, a)).collect())
}

pub fn criterion_failures(rows: &[CriterionRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| r.is_failure())
        .map(|r| format!("amplitude {}: trapping predicted but not observed", r.amplitude))
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExponentRow {
    pub epsilon: f64,
    pub n_hat: Option<f64>,
    pub n_hat_std_error: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub omega_slope: Option<f64>,
    pub error: Option<String>,
    pub summary: Option<RunSummary>,
}

pub const EXPONENT_HEADER: [&str; 7] = ["epsilon", "N_hat", "N_hat_std_error", "D1_hat", "D2_hat", "omega_slope", "error"];

pub fn exponent_records(rows: &[ExponentRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                fmt17(r.epsilon),
                field(r.n_hat),
                field(r.n_hat_std_error),
                field(r.d1),
                field(r.d2),
                field(r.omega_slope),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect()
}

fn exponent_row(base: &RunConfig, epsilon: f64) -> ExponentRow {
    let mut row =
        ExponentRow { epsilon, n_hat: None, n_hat_std_error: None, d1: None, d2: None, omega_slope: None, error: None, summary: None };
    match base.with_epsilon(epsilon).and_then(|c| execute(&c)) {
        Ok((summary, _)) => {
            let k = summary.constants;
            row.n_hat = k.n_hat;
            row.n_hat_std_error = k.n_hat_std_error;
            row.d1 = k.d1;
            row.d2 = k.d2;
            row.omega_slope = k.omega_slope;
            row.error = summary.error.clone();
            row.summary = Some(summary);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// One perturbed-interior run per perturbation size, each fitting the
/// Kretschmann blow-up exponent.
pub fn exponent_sweep(base: &RunConfig, epsilons: &[f64]) -> CliResult<Vec<ExponentRow>> {
    if epsilons.is_empty() {
        return Err(CliError::Config("exponent sweep needs at least one epsilon".into()));
    }
    let mut probe = base.with_epsilon(0.0)?;
    probe.sweep.epsilons = epsilons.to_vec();
    probe.validate()?;
    Ok(epsilons.par_iter().map(|&e| exponent_row(base, e)).collect())
}

/// `N_hat(0)` within the exact band, every row inside `[5.8, 6 + 10 ε²]`, and
/// the excess over 6 not growing as ε decreases beyond the fit slack.
pub fn exponent_failures(rows: &[ExponentRow]) -> Vec<String> {
    let mut out = Vec::new();
    for r in rows {
        let Some(n) = r.n_hat else {
            out.push(format!("epsilon {}: no exponent ({})", r.epsilon, r.error.as_deref().unwrap_or("fit not applicable")));
            continue;
        };
        let (lo, hi) = if r.epsilon == 0.0 {
            (6.0 - EXPONENT_BAND_EXACT, 6.0 + EXPONENT_BAND_EXACT)
        } else {
            (EXPONENT_LOWER, 6.0 + 10.0 * r.epsilon * r.epsilon)
        };
        if !(lo..=hi).contains(&n) {
            out.push(format!("epsilon {}: N_hat = {n:.4} outside [{lo}, {hi:.4}]", r.epsilon));
        }
    }
    let mut fitted: Vec<(f64, f64)> = rows.iter().filter_map(|r| Some((r.epsilon, r.n_hat?))).collect();
    fitted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in fitted.windows(2) {
        let ((e_small, n_small), (e_large, n_large)) = (w[0], w[1]);
        if n_small - 6.0 > n_large - 6.0 + EXPONENT_TREND_SLACK {
            out.push(format!(
                "excess at epsilon {e_small} ({:.4}) exceeds that at {e_large} ({:.4}) by more than {EXPONENT_TREND_SLACK}",
                n_small - 6.0,
                n_large - 6.0
            ));
        }
    }
    out
}
