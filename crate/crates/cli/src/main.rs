//! `maxdet`: error certificates for maximum-determinant problems.
//!
//! Subcommands:
//! * `lambert`    - evaluate both Lambert W branches and their closed
//!   bounds on a grid, as CSV;
//! * `certify`    - compute the Frobenius-norm certificate for a
//!   suboptimal solution, as JSON;
//! * `mvee`       - solve one minimum-volume enclosing ellipsoid
//!   instance, as JSON;
//! * `experiment` - run the tolerance-ladder study and check the bound
//!   on every rung.
//!
//! Errors are reported as one JSON object on stderr with a nonzero exit.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use maxdet_core::certificate::frobenius_certificate;
use maxdet_core::experiment::{
    self, default_ladder, format_float, generate_points, rows_from_ladder, run_ladder,
    threads_from_env, ExperimentConfig,
};
use maxdet_core::lambert::{w0, w0_bounds, wm1, BRANCH_POINT};
use maxdet_core::linalg::{logdet_posdef, MatrixJson, SymMatrix};
use maxdet_core::mvee::{default_max_iters, solve_mvee, EllipsoidJson, PointSet};

#[derive(Parser)]
#[command(
    name = "maxdet",
    version,
    about = "Euclidean error certificates for maxdet problems"
)]
struct Cli {
    /// Seed for generated point sets.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output format where both are supported.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate W0, W-1 and the closed bounds on a grid in [-1/e, 0).
    Lambert(LambertArgs),
    /// Compute a Frobenius-norm certificate for a suboptimal solution.
    Certify(CertifyArgs),
    /// Solve one minimum-volume enclosing ellipsoid instance.
    Mvee(MveeArgs),
    /// Run the tolerance-ladder experiment and validate the bound.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct LambertArgs {
    /// Left end of the grid (>= -1/e).
    #[arg(long, allow_hyphen_values = true, default_value_t = BRANCH_POINT)]
    min: f64,

    /// Right end of the grid (< 0).
    #[arg(long, allow_hyphen_values = true, default_value_t = -1e-6)]
    max: f64,

    /// Number of grid points; 0 emits only the header.
    #[arg(long, default_value_t = 1000)]
    count: usize,
}

#[derive(Args)]
struct CertifyArgs {
    /// Path to the suboptimal solution X_f (matrix JSON).
    #[arg(long)]
    xf: PathBuf,

    /// Log-determinant optimality gap.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "xstar")]
    epsilon: Option<f64>,

    /// Path to a reference optimizer X* (matrix JSON) to compute the gap
    /// from; negative numerical gaps are clamped to zero.
    #[arg(long, required_unless_present = "epsilon")]
    xstar: Option<PathBuf>,
}

#[derive(Args)]
struct MveeArgs {
    /// Points file (CSV, one point per row); generated when omitted.
    #[arg(long)]
    points: Option<PathBuf>,

    /// Dimension of generated points.
    #[arg(long, default_value_t = 50)]
    dim: usize,

    /// Number of generated points.
    #[arg(long, default_value_t = 100)]
    count: usize,

    /// Solver tolerance (Khachiyan relative gap).
    #[arg(long, default_value_t = 1e-8)]
    delta: f64,

    /// Iteration cap; defaults to 500 * count * dim.
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Instance dimension.
    #[arg(long, default_value_t = 50)]
    dim: usize,

    /// Number of points.
    #[arg(long, default_value_t = 100)]
    count: usize,

    /// Comma-separated descending tolerance ladder; the last entry is
    /// the reference rung. Defaults to 1,1e-1,...,1e-8.
    #[arg(long, value_delimiter = ',')]
    tolerances: Option<Vec<f64>>,
}

struct Failure {
    kind: String,
    message: String,
}

impl From<maxdet_core::Error> for Failure {
    fn from(e: maxdet_core::Error) -> Self {
        Self {
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self {
            kind: "Io".to_string(),
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self {
            kind: "Parse".to_string(),
            message: e.to_string(),
        }
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn load_matrix(path: &PathBuf) -> Result<SymMatrix, Failure> {
    let text = fs::read_to_string(path)?;
    let json: MatrixJson = serde_json::from_str(&text)?;
    Ok(json.to_sym()?)
}

fn cmd_lambert(cli: &Cli, args: &LambertArgs) -> Result<(), Failure> {
    let lo = args.min;
    let hi = args.max;
    let domain_floor = BRANCH_POINT * (1.0 + 1e-14);
    if !(lo >= domain_floor && hi < 0.0 && lo <= hi) {
        return Err(maxdet_core::Error::OutOfDomain {
            value: if lo < domain_floor { lo } else { hi },
            domain: "[-1/e, 0)",
        }
        .into());
    }
    let mut csv = String::from("x,w0,wm1,lower,upper,sandwich_ok\n");
    for k in 0..args.count {
        let x = if args.count == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (args.count - 1) as f64
        };
        let p = w0(x)?;
        let m = wm1(x)?;
        let (lower, upper) = w0_bounds(x)?;
        let sandwich_ok = lower - 1e-12 <= p.w && p.w <= upper + 1e-12;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_float(x),
            format_float(p.w),
            format_float(m.w),
            format_float(lower),
            format_float(upper),
            sandwich_ok
        ));
    }
    emit(&cli.out, &csv)
}

fn cmd_certify(cli: &Cli, args: &CertifyArgs) -> Result<(), Failure> {
    let x_f = load_matrix(&args.xf)?;
    let epsilon = match (&args.epsilon, &args.xstar) {
        (Some(e), _) => *e,
        (None, Some(path)) => {
            let x_star = load_matrix(path)?;
            let gap = logdet_posdef(&x_star)? - logdet_posdef(&x_f)?;
            gap.max(0.0)
        }
        (None, None) => unreachable!("clap enforces epsilon or xstar"),
    };
    let certificate = frobenius_certificate(&x_f, epsilon)?;
    let mut json = serde_json::to_string_pretty(&certificate)?;
    json.push('\n');
    emit(&cli.out, &json)
}

fn cmd_mvee(cli: &Cli, args: &MveeArgs) -> Result<(), Failure> {
    let pts = match &args.points {
        Some(path) => PointSet::from_csv(&fs::read_to_string(path)?)?,
        None => generate_points(args.dim, args.count, cli.seed)?,
    };
    let max_iters = args.max_iters.unwrap_or_else(|| default_max_iters(&pts));
    let report = solve_mvee(&pts, args.delta, max_iters)?;
    if !report.converged {
        return Err(maxdet_core::Error::NoConvergence(format!(
            "gap {:.3e} above tolerance {:.3e} after {} iterations",
            report.khachiyan_gap, args.delta, report.iterations
        ))
        .into());
    }
    let mut json = serde_json::to_string_pretty(&EllipsoidJson::from_report(&report))?;
    json.push('\n');
    emit(&cli.out, &json)
}

/// Runs the ladder; returns false when some rung violated the bound.
fn cmd_experiment(cli: &Cli, args: &ExperimentArgs) -> Result<bool, Failure> {
    let cfg = ExperimentConfig {
        dim: args.dim,
        count: args.count,
        seed: cli.seed,
        tolerances: args.tolerances.clone().unwrap_or_else(default_ladder),
        threads: threads_from_env(),
    };
    cfg.validate()?;
    let pts = generate_points(cfg.dim, cfg.count, cfg.seed)?;
    let reports = run_ladder(&pts, &cfg.tolerances, default_max_iters(&pts), cfg.threads)?;
    let rows = rows_from_ladder(&reports)?;
    let content = match cli.format {
        Format::Csv => experiment::rows_to_csv(&rows),
        Format::Json => {
            let mut s = experiment::rows_to_json(&rows);
            s.push('\n');
            s
        }
    };
    emit(&cli.out, &content)?;
    Ok(rows.iter().all(|r| r.holds))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Lambert(args) => cmd_lambert(&cli, args).map(|()| true),
        Command::Certify(args) => cmd_certify(&cli, args).map(|()| true),
        Command::Mvee(args) => cmd_mvee(&cli, args).map(|()| true),
        Command::Experiment(args) => cmd_experiment(&cli, args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!(
                "{}",
                serde_json::json!({
                    "error": "BoundViolated",
                    "message": "some ladder rung violated the certified bound",
                })
            );
            ExitCode::FAILURE
        }
        Err(failure) => {
            eprintln!(
                "{}",
                serde_json::json!({
                    "error": failure.kind,
                    "message": failure.message,
                })
            );
            ExitCode::FAILURE
        }
    }
}
