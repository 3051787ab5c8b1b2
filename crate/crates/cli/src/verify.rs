//! Convergence of the evolution against the exact Schwarzschild interior.

use nullsim::evolution::{convergence_study, ConvergenceReport, ConvergenceRow};
use nullsim::initial_data::Family;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{field, fmt17};

/// Accepted range of measured convergence orders.
pub const ORDER_RANGE: (f64, f64) = (1.8, 2.2);

pub const CONVERGENCE_HEADER: [&str; 9] = [
    "h",
    "r_error",
    "r_order",
    "log_omega_error",
    "log_omega_order",
    "residual",
    "residual_order",
    "K_error",
    "K_order",
];

pub fn convergence_records(rows: &[ConvergenceRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                fmt17(r.h),
                field(r.error),
                field(r.order),
                field(r.log_omega_error),
                field(r.log_omega_order),
                fmt17(r.residual),
                field(r.residual_order),
                field(r.kretschmann_error),
                field(r.kretschmann_order),
            ]
        })
        .collect()
}

pub fn verify_schwarzschild(base: &RunConfig, levels: usize) -> CliResult<ConvergenceReport> {
    base.validate()?;
    if base.initial_data.family != Family::Schwarzschild {
        return Err(CliError::Config(format!("verification needs schwarzschild data, got {:?}", base.initial_data.family)));
    }
    let grid = base.grid.build()?;
    Ok(convergence_study(&base.initial_data, &grid, levels, &base.scheme)?)
}

/// Orders of r, log Ω and the constraint residuals inside [`ORDER_RANGE`];
/// the Kretschmann error shrinking at every level at order at least 1.8.
pub fn verify_failures(report: &ConvergenceReport) -> Vec<String> {
    let (lo, hi) = ORDER_RANGE;
    let mut out = Vec::new();
    if report.rows.len() < 3 {
        out.push(format!("{} levels, need at least 3", report.rows.len()));
    }
    for (k, row) in report.rows.iter().enumerate().skip(1) {
        for (name, order) in [("r", row.order), ("log Omega", row.log_omega_order), ("constraint residual", row.residual_order)] {
            match order {
                Some(p) if (lo..=hi).contains(&p) => {}
                Some(p) => out.push(format!("level {k}: {name} order {p:.3} outside [{lo}, {hi}]")),
                None => out.push(format!("level {k}: {name} order unavailable")),
            }
        }
        match row.kretschmann_order {
            Some(p) if p >= lo => {}
            Some(p) => out.push(format!("level {k}: Kretschmann order {p:.3} below {lo}")),
            None => out.push(format!("level {k}: Kretschmann order unavailable")),
        }
    }
    let k_errors: Vec<f64> = report.rows.iter().filter_map(|r| r.kretschmann_error).collect();
    if k_errors.windows(2).any(|w| w[1] >= w[0]) {
        out.push(format!("Kretschmann error does not shrink monotonically: {k_errors:?}"));
    }
    out
}
