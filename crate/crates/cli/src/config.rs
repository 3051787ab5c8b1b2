//! Run configuration, read from TOML or JSON.

use std::path::{Path, PathBuf};

use nullsim::diagnostics::RaySelector;
use nullsim::evolution::SchemeConfig;
use nullsim::initial_data::{Family, InitialDataSpec};
use nullsim::DoubleNullGrid;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Upper bound on grid points accepted from a config file.
pub const MAX_GRID_POINTS: usize = 1 << 26;

/// Largest perturbation size accepted by the exponent sweep.
pub const MAX_SWEEP_EPSILON: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub n_u: usize,
    pub n_v: usize,
}

impl GridConfig {
    pub fn build(&self) -> CliResult<DoubleNullGrid> {
        if self.n_u.saturating_mul(self.n_v) > MAX_GRID_POINTS {
            return Err(CliError::Config(format!("{}x{} grid exceeds {MAX_GRID_POINTS} points", self.n_u, self.n_v)));
        }
        Ok(DoubleNullGrid::new(self.u_min, self.u_max, self.v_min, self.v_max, self.n_u, self.n_v)?)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsOptions {
    /// `[r_lo, r_hi]` for the blow-up exponent fit. Defaults to a decade
    /// above twice the excision floor.
    pub fit_window: Option<(f64, f64)>,
    /// Rays written as CSV tables. Empty selects the central approach ray,
    /// or the middle `v = const` ray when nothing is excised.
    pub rays: Vec<RaySelector>,
    /// Indices `(j1, j2)` on the outgoing cone bounding the trapped-surface
    /// criterion window. Defaults to the whole cone.
    pub criterion_window: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    pub dir: Option<PathBuf>,
    /// Write a checkpoint every this many diagonals; 0 disables.
    pub checkpoint_every: usize,
    pub dump_grid: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    /// Outgoing pulse amplitudes for `criterion-sweep`.
    pub amplitudes: Vec<f64>,
    /// Perturbation sizes for `exponent-sweep`.
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Reserved; the evolution is deterministic.
    #[serde(default)]
    pub seed: u64,
    pub grid: GridConfig,
    pub initial_data: InitialDataSpec,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsOptions,
    #[serde(default)]
    pub output: OutputOptions,
    #[serde(default)]
    pub sweep: SweepOptions,
}

impl RunConfig {
    pub fn new(grid: GridConfig, initial_data: InitialDataSpec, scheme: SchemeConfig) -> Self {
        Self {
            seed: 0,
            grid,
            initial_data,
            scheme,
            diagnostics: DiagnosticsOptions::default(),
            output: OutputOptions::default(),
            sweep: SweepOptions::default(),
        }
    }

    /// Parse by extension: `.json` as JSON, anything else as TOML.
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is representable in TOML")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is representable in JSON")
    }

    pub fn validate(&self) -> CliResult<()> {
        if i64::try_from(self.seed).is_err() {
            return Err(CliError::Config(format!("seed {} does not fit a TOML integer", self.seed)));
        }
        let grid = self.grid.build()?;
        self.initial_data.validate()?;
        self.initial_data.gauge.validate(&grid)?;
        self.scheme.validate()?;
        if let Some((lo, hi)) = self.diagnostics.fit_window {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(CliError::Config(format!("fit_window must satisfy 0 < lo < hi, got [{lo}, {hi}]")));
            }
        }
        for ray in &self.diagnostics.rays {
            let ok = match *ray {
                RaySelector::ConstV(j) => j < grid.n_v,
                RaySelector::ConstU(i) => i < grid.n_u,
            };
            if !ok {
                return Err(CliError::Config(format!("{ray:?} lies outside the {}x{} grid", grid.n_u, grid.n_v)));
            }
        }
        if let Some((j1, j2)) = self.diagnostics.criterion_window {
            if !(j1 < j2 && j2 < grid.n_v) {
                return Err(CliError::Config(format!("criterion_window needs j1 < j2 < {}, got ({j1}, {j2})", grid.n_v)));
            }
        }
        if let Some(a) = self.sweep.amplitudes.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(CliError::Config(format!("sweep amplitude {a} must be finite and nonnegative")));
        }
        if let Some(e) = self.sweep.epsilons.iter().find(|e| !(**e >= 0.0 && **e <= MAX_SWEEP_EPSILON)) {
            return Err(CliError::Config(format!("sweep epsilon {e} outside [0, {MAX_SWEEP_EPSILON}]")));
        }
        Ok(())
    }

    /// Copy with the outgoing pulse amplitude replaced.
    pub fn with_amplitude(&self, amplitude: f64) -> CliResult<Self> {
        let mut c = self.clone();
        let pulse = c
            .initial_data
            .outgoing_pulse
            .as_mut()
            .ok_or_else(|| CliError::Config("an amplitude sweep needs an outgoing pulse".into()))?;
        pulse.amplitude = amplitude;
        Ok(c)
    }

    /// Copy with the perturbation size set to `epsilon` and every pulse
    /// amplitude set to match.
    pub fn with_epsilon(&self, epsilon: f64) -> CliResult<Self> {
        if self.initial_data.family != Family::PerturbedSchwarzschild {
            return Err(CliError::Config("an epsilon sweep needs perturbed_schwarzschild data".into()));
        }
        let mut c = self.clone();
        c.initial_data.epsilon = epsilon;
        for p in [&mut c.initial_data.outgoing_pulse, &mut c.initial_data.incoming_pulse].into_iter().flatten() {
            p.amplitude = epsilon;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn toml_and_json_round_trip() {
        let mut c = presets::near_singularity(200, 0.05);
        c.diagnostics.rays = vec![RaySelector::ConstV(3), RaySelector::ConstU(7)];
        c.diagnostics.fit_window = Some((0.003, 0.03));
        c.output.dir = Some("out/x".into());
        c.sweep.epsilons = vec![0.0, 0.1];
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
        let g = presets::schwarzschild_reference(51);
        assert_eq!(RunConfig::from_toml(&g.to_toml()).unwrap(), g);
    }

    proptest::proptest! {
        #[test]
        fn arbitrary_configs_round_trip(
            lo in -1e3f64..1e3,
            span in 1e-9f64..1e3,
            n in 2usize..5000,
            mass in 1e-6f64..1e3,
            eps in 0.0f64..0.2,
            start in 0.0f64..1.0,
            k in 1u32..9,
            kappa in -0.4f64..10.0,
            floor in 1e-300f64..1.0,
            window in proptest::option::of((1e-6f64..1e-3, 1e-2f64..1.0)),
            amplitudes in proptest::collection::vec(0.0f64..1e6, 0..5),
            seed in 0..=i64::MAX as u64,
        ) {
            let grid = GridConfig { u_min: lo, u_max: lo + span, v_min: lo, v_max: lo + 2.0 * span, n_u: n, n_v: n / 2 + 2 };
            let pulse = nullsim::initial_data::PulseProfile::new(eps, lo + start * span, lo + span, k);
            let gauge = nullsim::initial_data::Gauge {
                u: nullsim::initial_data::NullMap::Quadratic { kappa },
                v: nullsim::initial_data::NullMap::Exponential { limit: lo + 3.0 * span, rate: 1.0 / span },
            };
            let spec = InitialDataSpec::perturbed_schwarzschild(mass, eps, Some(pulse), None).with_gauge(gauge);
            let mut c = RunConfig::new(grid, spec, SchemeConfig { r_floor: floor, ..SchemeConfig::default() });
            c.seed = seed;
            c.diagnostics.fit_window = window;
            c.sweep.amplitudes = amplitudes;
            proptest::prop_assert_eq!(&RunConfig::from_toml(&c.to_toml()).unwrap(), &c);
            proptest::prop_assert_eq!(&RunConfig::from_json(&c.to_json()).unwrap(), &c);
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut text = presets::pulse_collapse(100.0).to_toml();
        text.push_str("\n[extra]\nx = 1\n");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn validation_catches_bad_ranges() {
        let mut c = presets::pulse_collapse(100.0);
        c.diagnostics.criterion_window = Some((5, 5));
        assert!(matches!(c.validate(), Err(CliError::Config(_))));
        let mut c = presets::pulse_collapse(100.0);
        c.sweep.epsilons = vec![0.3];
        assert!(c.validate().is_err());
        let mut c = presets::pulse_collapse(100.0);
        c.grid.n_u = 1;
        assert!(c.validate().is_err());
        let mut c = presets::pulse_collapse(100.0);
        c.seed = u64::MAX;
        assert!(c.validate().is_err());
    }
}
