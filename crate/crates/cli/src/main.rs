use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nullsim_cli::output::save_rows;
use nullsim_cli::{output_dir, presets, sweep, verify, CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "nullsim", version, about = "Characteristic evolution of spherically symmetric black-hole interiors")]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write summary, ray tables and checkpoints.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write every grid point to grid.csv.
        #[arg(long)]
        dump_grid: bool,
    },
    /// Convergence study against the exact Schwarzschild interior.
    VerifySchwarzschild {
        /// Base (coarsest) configuration; defaults to the 101x101 reference problem.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trapped-surface criterion over a list of pulse amplitudes.
    CriterionSweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated amplitudes; overrides `sweep.amplitudes`.
        #[arg(long, value_delimiter = ',')]
        amplitudes: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Blow-up exponent over a list of perturbation sizes.
    ExponentSweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated perturbation sizes; overrides `sweep.epsilons`.
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render summary.txt from the summary.json in an output directory.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print a built-in configuration as TOML.
    Preset {
        #[arg(value_enum)]
        name: Preset,
        /// Grid points per direction, where the preset takes one.
        #[arg(long)]
        n: Option<usize>,
        /// Perturbation size or pulse amplitude, where the preset takes one.
        #[arg(long)]
        strength: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Minkowski,
    Schwarzschild,
    Perturbed,
    NearSingularity,
    Pulse,
}

fn load(path: Option<&Path>, fallback: impl FnOnce() -> RunConfig) -> CliResult<RunConfig> {
    match path {
        Some(p) => RunConfig::from_path(p),
        None => Ok(fallback()),
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("output directory {}: {e}", dir.display())))
}

fn acceptance(failures: Vec<String>) -> CliResult<()> {
    for f in &failures {
        eprintln!("FAILURE: {f}");
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(format!("{} check(s) failed", failures.len())))
    }
}

fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Run { config, out, dump_grid } => {
            let mut cfg = RunConfig::from_path(&config)?;
            cfg.output.dump_grid |= dump_grid;
            let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
            let dir = output_dir(out.as_deref(), cfg.output.dir.as_deref(), stem);
            let summary = nullsim_cli::run::run(&cfg, &dir)?;
            print!("{}", summary.render_text());
            eprintln!("artifacts in {}", dir.display());
            Ok(())
        }
        Command::VerifySchwarzschild { config, levels, out } => {
            let cfg = load(config.as_deref(), || presets::schwarzschild_reference(101))?;
            let dir = output_dir(out.as_deref(), cfg.output.dir.as_deref(), "verify-schwarzschild");
            let report = verify::verify_schwarzschild(&cfg, levels)?;
            create_dir(&dir)?;
            let records = verify::convergence_records(&report.rows);
            save_rows(&verify::CONVERGENCE_HEADER, &records, &dir.join("convergence.csv"))?;
            println!("{}", verify::CONVERGENCE_HEADER.join(","));
            for r in &records {
                println!("{}", r.join(","));
            }
            acceptance(verify::verify_failures(&report))
        }
        Command::CriterionSweep { config, amplitudes, out } => {
            let cfg = load(config.as_deref(), || presets::pulse_collapse(0.0))?;
            let amplitudes = if amplitudes.is_empty() { cfg.sweep.amplitudes.clone() } else { amplitudes };
            let dir = output_dir(out.as_deref(), cfg.output.dir.as_deref(), "criterion-sweep");
            let rows = sweep::criterion_sweep(&cfg, &amplitudes)?;
            create_dir(&dir)?;
            let records = sweep::criterion_records(&rows);
            save_rows(&sweep::CRITERION_HEADER, &records, &dir.join("criterion_sweep.csv"))?;
            println!("{}", sweep::CRITERION_HEADER.join(","));
            for r in &records {
                println!("{}", r.join(","));
            }
            acceptance(sweep::criterion_failures(&rows))
        }
        Command::ExponentSweep { config, epsilons, out } => {
            let cfg = load(config.as_deref(), || presets::near_singularity(2000, 0.1))?;
            let epsilons = if epsilons.is_empty() { cfg.sweep.epsilons.clone() } else { epsilons };
            let dir = output_dir(out.as_deref(), cfg.output.dir.as_deref(), "exponent-sweep");
            let rows = sweep::exponent_sweep(&cfg, &epsilons)?;
            create_dir(&dir)?;
            let records = sweep::exponent_records(&rows);
            save_rows(&sweep::EXPONENT_HEADER, &records, &dir.join("exponent_sweep.csv"))?;
            println!("{}", sweep::EXPONENT_HEADER.join(","));
            for r in &records {
                println!("{}", r.join(","));
            }
            acceptance(sweep::exponent_failures(&rows))
        }
        Command::Report { out } => {
            let summary = nullsim_cli::run::report(&out)?;
            print!("{}", summary.render_text());
            Ok(())
        }
        Command::Preset { name, n, strength } => {
            let cfg = match name {
                Preset::Minkowski => presets::minkowski(n.unwrap_or(101)),
                Preset::Schwarzschild => presets::schwarzschild_reference(n.unwrap_or(401)),
                Preset::Perturbed => presets::perturbed_reference(n.unwrap_or(401), strength.unwrap_or(0.1)),
                Preset::NearSingularity => presets::near_singularity(n.unwrap_or(2000), strength.unwrap_or(0.1)),
                Preset::Pulse => presets::pulse_collapse(strength.unwrap_or(2000.0)),
            };
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
