use std::fmt::Write as _;

use nullsim::diagnostics::Tolerances;
use nullsim::evolution::EvolutionReport;
use nullsim::initial_data::CriterionReport;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl CheckStatus {
    fn label(self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "N/A",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
    /// Measured quantity the check compares, when there is one.
    pub value: Option<f64>,
    /// Bound or tolerance `value` was compared against.
    pub limit: Option<f64>,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            detail,
            value: finite(value),
            limit: finite(limit),
        }
    }

    pub fn not_applicable(name: &str, why: impl Into<String>) -> Self {
        Self { name: name.into(), status: CheckStatus::NotApplicable, detail: why.into(), value: None, limit: None }
    }
}

/// `Some(x)` for finite `x`. JSON has no representation for NaN or ±∞.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Constants measured on the evolved solution. `None` means the quantity was
/// not applicable to the run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FittedConstants {
    /// Limit of −r ∂ᵤr along the central approach ray.
    pub c1: Option<f64>,
    /// Limit of −r ∂ᵥr along the central approach ray.
    pub c2: Option<f64>,
    /// sup r² |∂ᵤφ| over the trapped region.
    pub d1: Option<f64>,
    /// sup r² |∂ᵥφ| over the trapped region.
    pub d2: Option<f64>,
    /// Blow-up exponent of the Kretschmann scalar.
    pub n_hat: Option<f64>,
    pub n_hat_std_error: Option<f64>,
    pub n_hat_r_squared: Option<f64>,
    /// Cross-check of `n_hat` along a `u = const` ray.
    pub n_hat_along_u: Option<f64>,
    /// Slope of log Ω² against log r near the singular boundary.
    pub omega_slope: Option<f64>,
    /// max Ω² r over the same samples.
    pub omega_d_hat: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunOutcome {
    Completed,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tool_version: String,
    pub outcome: RunOutcome,
    pub error: Option<String>,
    pub config: RunConfig,
    pub evolution: EvolutionReport,
    pub criterion: Option<CriterionReport>,
    pub constants: FittedConstants,
    pub tolerances: Option<Tolerances>,
    pub checks: Vec<Check>,
}

impl RunSummary {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary is representable in JSON")
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let g = &self.config.grid;
        let _ = writeln!(s, "{}", self.tool_version);
        let _ = writeln!(s, "outcome      {:?}", self.outcome);
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error        {e}");
        }
        let _ = writeln!(s, "family       {:?}", self.config.initial_data.family);
        let _ = writeln!(s, "grid         {}x{}  u in [{}, {}]  v in [{}, {}]", g.n_u, g.n_v, g.u_min, g.u_max, g.v_min, g.v_max);
        let ev = &self.evolution;
        let _ = writeln!(s, "diagonals    {}", ev.diagonals_completed);
        let _ = writeln!(s, "excised      {}", ev.cells_excised);
        let worst = ev.max_constraint_residual_history.iter().map(|x| x.1).fold(0.0, f64::max);
        let _ = writeln!(s, "max residual {worst:.3e}");
        let _ = writeln!(s, "wall time    {:.3} s", ev.wall_time);
        if let Some(c) = &self.criterion {
            let _ = writeln!(
                s,
                "criterion    eta0 = {:.6}  delta0 = {:.6}  E(delta0) = {:.6}  predicted = {}  observed = {}",
                c.eta0, c.delta0, c.e_of_delta0, c.predicted_trapped, c.observed_trapped
            );
        }
        let k = &self.constants;
        let show = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(s, "constants");
        for (name, x) in [
            ("C1", k.c1),
            ("C2", k.c2),
            ("D1", k.d1),
            ("D2", k.d2),
            ("N_hat", k.n_hat),
            ("N_hat stderr", k.n_hat_std_error),
            ("N_hat (u ray)", k.n_hat_along_u),
            ("omega slope", k.omega_slope),
            ("omega D_hat", k.omega_d_hat),
        ] {
            let _ = writeln!(s, "  {name:<14}{}", show(x));
        }
        if let Some(t) = &self.tolerances {
            let _ = writeln!(s, "tolerances   h = {:.3e}  K = {:.3e}  dm = {:.3e}", t.h, t.kretschmann, t.mass_gradient);
        }
        let _ = writeln!(s, "checks");
        for c in &self.checks {
            let _ = writeln!(s, "  [{:<4}] {:<28} {}", c.status.label(), c.name, c.detail);
        }
        s
    }
}
