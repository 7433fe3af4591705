use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cutdg_study::condition::{run_condition_scaling, run_condition_sweep};
use cutdg_study::config::parse_rescaling;
use cutdg_study::convergence::run_convergence;
use cutdg_study::geometry::run_geometry_check;
use cutdg_study::output::{self, write_csv};
use cutdg_study::properties::{property_rows, run_property_suite};
use cutdg_study::{sweep_deltas, Result, StudyConfig};

#[derive(Parser)]
#[command(name = "cutdg", about = "Studies for the stabilized cut DG bulk-surface solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory for CSV files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// key = value settings file; command-line flags take precedence.
    #[arg(long)]
    config_file: Option<PathBuf>,
    #[arg(long)]
    n0: Option<usize>,
    #[arg(long)]
    c_bulk: Option<f64>,
    #[arg(long)]
    c_surf: Option<f64>,
    #[arg(long)]
    gamma_bulk: Option<f64>,
    #[arg(long)]
    gamma_surf: Option<f64>,
    #[arg(long)]
    mu_bulk: Option<f64>,
    #[arg(long)]
    mu_surf: Option<f64>,
    #[arg(long)]
    tau_bulk: Option<f64>,
    #[arg(long)]
    tau_surf: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Errors and EOCs of the manufactured problem.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        levels: Option<usize>,
        /// Switch off mu_surf, tau_bulk and tau_surf.
        #[arg(long)]
        ablate_ghost: bool,
    },
    /// Condition numbers over translated surfaces.
    ConditionSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        positions: Option<usize>,
        /// Comma-separated subset of full, no-surface, no-bulk, none.
        #[arg(long)]
        config: Option<String>,
        /// symmetric, one-sided or pairwise.
        #[arg(long)]
        rescaling: Option<String>,
    },
    /// Condition numbers of the centered problem over refinement levels.
    ConditionScaling {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        rescaling: Option<String>,
    },
    /// Distance and normal deviation of the discrete surface.
    GeometryCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Coercivity, ghost-penalty equivalence and Poincaré constants over a sweep.
    Properties {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        level: Option<usize>,
        #[arg(long)]
        positions: Option<usize>,
    },
}

fn load(common: &Common, extra: &[(&str, Option<String>)]) -> Result<StudyConfig> {
    let mut c = match &common.config_file {
        Some(path) => StudyConfig::from_file(path)?,
        None => StudyConfig::default(),
    };
    let flags = [
        ("n0", common.n0.map(|v| v.to_string())),
        ("c-bulk", common.c_bulk.map(|v| v.to_string())),
        ("c-surf", common.c_surf.map(|v| v.to_string())),
        ("gamma-bulk", common.gamma_bulk.map(|v| v.to_string())),
        ("gamma-surf", common.gamma_surf.map(|v| v.to_string())),
        ("mu-bulk", common.mu_bulk.map(|v| v.to_string())),
        ("mu-surf", common.mu_surf.map(|v| v.to_string())),
        ("tau-bulk", common.tau_bulk.map(|v| v.to_string())),
        ("tau-surf", common.tau_surf.map(|v| v.to_string())),
    ];
    for (key, value) in flags.iter().chain(extra) {
        if let Some(v) = value {
            c.set(key, v)?;
        }
    }
    c.validate()?;
    Ok(c)
}

fn report(path: &Path) {
    eprintln!("wrote {}", path.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convergence { common, levels, ablate_ghost } => {
            let mut c = load(&common, &[("levels", levels.map(|v| v.to_string()))])?;
            c.ablate_ghost |= ablate_ghost;
            let study = run_convergence(c.levels, c.n0, &c.effective_params(), c.solver_tolerance)?;
            let path = common.out.join("convergence.csv");
            write_csv(&path, &output::CONVERGENCE_HEADER, &study.rows)?;
            report(&path);
            if !study.failures.is_empty() {
                let path = common.out.join("convergence_failures.csv");
                write_csv(&path, &output::FAILURES_HEADER, &study.failures)?;
                report(&path);
            }
        }
        Command::ConditionSweep { common, level, positions, config, rescaling } => {
            let c = load(
                &common,
                &[
                    ("level", level.map(|v| v.to_string())),
                    ("positions", positions.map(|v| v.to_string())),
                    ("config", config),
                    ("rescaling", rescaling),
                ],
            )?;
            let deltas = sweep_deltas(c.positions)?;
            let rows = run_condition_sweep(c.n0, c.level, &deltas, &c.sweep_configs, &c.params, c.rescaling)?;
            let path = common.out.join("condition.csv");
            write_csv(&path, &output::CONDITION_HEADER, &rows)?;
            report(&path);
        }
        Command::ConditionScaling { common, levels, rescaling } => {
            let mut c = load(&common, &[("levels", levels.map(|v| v.to_string()))])?;
            if let Some(r) = rescaling {
                c.rescaling = parse_rescaling(&r)?;
            }
            let rows = run_condition_scaling(c.n0, c.levels, &c.params, c.rescaling)?;
            let path = common.out.join("condition_scaling.csv");
            write_csv(&path, &output::CONDITION_SCALING_HEADER, &rows)?;
            report(&path);
        }
        Command::GeometryCheck { common, levels } => {
            let c = load(&common, &[("levels", levels.map(|v| v.to_string()))])?;
            let rows: Vec<_> = run_geometry_check(c.n0, c.levels)?.into_iter().map(|g| g.row).collect();
            let path = common.out.join("geometry.csv");
            write_csv(&path, &output::GEOMETRY_HEADER, &rows)?;
            report(&path);
        }
        Command::Properties { common, level, positions } => {
            let c = load(
                &common,
                &[("level", level.map(|v| v.to_string())), ("positions", positions.map(|v| v.to_string()))],
            )?;
            let samples = run_property_suite(c.n0, c.level, &sweep_deltas(c.positions)?, &c.params)?;
            let path = common.out.join("properties.csv");
            write_csv(&path, &output::PROPERTIES_HEADER, &property_rows(&samples))?;
            report(&path);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
