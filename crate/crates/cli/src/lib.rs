//! Configuration, orchestration and reporting for `nullsim` runs.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod run;
pub mod summary;
pub mod sweep;
pub mod verify;

use std::path::{Path, PathBuf};

pub use config::RunConfig;
pub use error::{CliError, CliResult};
pub use summary::{Check, CheckStatus, RunSummary};

/// Environment variable naming the root under which output directories are
/// created when neither `--out` nor the config names one.
pub const OUTPUT_ROOT_VAR: &str = "NULLSIM_OUT";

pub const DEFAULT_OUTPUT_ROOT: &str = "nullsim-out";

/// `--out` if given, then the config's `output.dir`, then `name` under the
/// output root.
pub fn output_dir(flag: Option<&Path>, configured: Option<&Path>, name: &str) -> PathBuf {
    if let Some(p) = flag.or(configured) {
        return p.to_path_buf();
    }
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
    root.join(name)
}
