use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use obs_thermo::config::ExperimentConfig;
use obs_thermo::experiment::{closure_for_config, run_experiment, write_outputs, ExperimentError};
use obs_thermo::invariants::run_checks;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Observability decomposition and thermodynamic accounting for bilinear
/// quantum control systems.
#[derive(Parser)]
#[command(name = "obs-thermo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the Lie algebra and observability space closure reports.
    Closure(Common),
    /// Run the full experiment and write CSV/JSON outputs.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory; overrides `outputs.dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite against the configured system.
    Check {
        #[command(flatten)]
        common: Common,
        /// Also close the four-bath-spin algebra.
        #[arg(long)]
        slow: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config rank tolerance.
    #[arg(long, env = "OBS_THERMO_RANK_TOL")]
    rank_tol: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), ExperimentError> {
        let mut cfg = ExperimentConfig::from_file(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(tol) = self.rank_tol {
            cfg.rank_tol = tol;
        }
        let base = self.config.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }
}

fn exit_for(err: &ExperimentError) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_VALIDATION
    })
}

fn closure(common: &Common) -> Result<ExitCode, ExperimentError> {
    let (cfg, base) = common.load()?;
    let c = closure_for_config(&cfg, &base)?;
    let report = serde_json::json!({ "lie": c.lie_report, "observability": c.v_report });
    println!("{}", serde_json::to_string_pretty(&report).expect("serialisable"));
    Ok(ExitCode::SUCCESS)
}

fn run(common: &Common, out: Option<&Path>) -> Result<ExitCode, ExperimentError> {
    let (cfg, base) = common.load()?;
    let report = run_experiment(&cfg, &base)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.outputs.dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("out"));
    for path in write_outputs(&report, &dir)? {
        eprintln!("wrote {}", path.display());
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&report.summary()).expect("serialisable")
    );
    Ok(ExitCode::SUCCESS)
}

fn check(common: &Common, slow: bool) -> Result<ExitCode, ExperimentError> {
    let (cfg, base) = common.load()?;
    let outcomes = run_checks(&cfg, &base, slow)?;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", o.name, o.detail);
    }
    Ok(if outcomes.iter().all(|o| o.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NUMERICAL)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Closure(common) => closure(common),
        Command::Run { common, out } => run(common, out.as_deref()),
        Command::Check { common, slow } => check(common, *slow),
    };
    result.unwrap_or_else(|e| exit_for(&e))
}
