//! `salem`: evaluate generalized Salem functions, write curves, run the
//! invariant suites and drive measure experiments.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use salem_core::rational::{format_decimal, format_f64, parse_rational};
use salem_core::{experiment, gk_scan, run_suite, DigitExpansion, Error, ExperimentConfig, Rational, SalemFunction, Suite};

const PLACES: usize = 12;

#[derive(Parser)]
#[command(name = "salem", version, about = "Generalized Salem functions and shift-operator measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print g(x) for a function spec such as "q=2; p=0.3,0.7; seq=perm(2 1)".
    Eval {
        spec: String,
        /// A rational (1/3, 0.25) or a digit expansion (q2:[1,0,1]:zeros).
        x: String,
        #[arg(long, default_value_t = salem_core::salem::DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Write `x,g` at x = i/n, i = 0..=n.
    Curve {
        spec: String,
        #[arg(long)]
        grid: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = salem_core::salem::DEFAULT_TOLERANCE)]
        tol: f64,
    },
    /// Run an invariant suite: lemma1, operators, equation, continuity,
    /// integral, increment, measure or all.
    Verify {
        suite: String,
        /// Function for the function-dependent suites.
        #[arg(long)]
        spec: Option<String>,
    },
    /// Run the measure table described by a config file.
    Measure {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::BudgetExceeded { .. }) => 4,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 3,
            CliError::ChecksFailed(_) => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn check_tol(tol: f64) -> Result<(), CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(tol).into())
    }
}

fn eval(spec: &str, x: &str, tol: f64) -> Result<(), CliError> {
    check_tol(tol)?;
    let f: SalemFunction = spec.parse()?;
    let (evaluation, exact) = if x.contains(':') {
        let e: DigitExpansion = x.parse()?;
        let ev = f.evaluate(&e, tol)?;
        let exact = if ev.exact { Some(f.evaluate_exact(&e)?) } else { None };
        (ev, exact)
    } else {
        let x = parse_rational(x)?;
        let ev = f.evaluate_at(&x, tol)?;
        let exact = if ev.exact {
            let e = salem_core::expansion_of(&x, &f.base(), ev.depth.max(1), salem_core::Tail::Zeros)?;
            Some(f.evaluate_exact(&e)?)
        } else {
            None
        };
        (ev, exact)
    };
    let mut out = io::stdout().lock();
    let _ = writeln!(out, "{}", format_f64(evaluation.value, PLACES));
    let _ = writeln!(out, "depth {}", evaluation.depth);
    if let Some(v) = exact {
        let _ = writeln!(out, "exact {v}");
    }
    Ok(())
}

fn curve(spec: &str, grid: usize, path: &Path, tol: f64) -> Result<(), CliError> {
    check_tol(tol)?;
    if grid < 2 {
        return Err(Error::InvalidArgument(format!("grid = {grid} must be at least 2")).into());
    }
    let f: SalemFunction = spec.parse()?;
    let mut text = format!(
        "# g for {f} at tol {tol:e}; points with two expansions use the terminating one\nx,g\n"
    );
    for i in 0..=grid {
        let x = Rational::new((i as i64).into(), (grid as i64).into());
        let v = f.evaluate_at(&x, tol)?.value;
        text.push_str(&format!("{},{}\n", format_decimal(&x, PLACES), format_f64(v, PLACES)));
    }
    fs::write(path, text).map_err(io_err(path))
}

fn verify(suite: &str, spec: Option<&str>) -> Result<(), CliError> {
    let suite: Suite = suite.parse()?;
    let f = spec.map(str::parse::<SalemFunction>).transpose()?;
    let checks = run_suite(suite, f.as_ref());
    let mut out = io::stdout().lock();
    for c in &checks {
        let _ = writeln!(out, "{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(())
}

fn measure(config: &Path, out: Option<PathBuf>, budget: Option<usize>, seed: Option<u64>) -> Result<(), CliError> {
    let text = fs::read_to_string(config).map_err(io_err(config))?;
    let cfg: ExperimentConfig = text.parse()?;
    let mut scan = cfg.scan()?.clone();
    if let Some(b) = budget {
        scan.budget = b;
    }
    if let Some(s) = seed {
        scan.seed = s;
    }
    eprintln!(
        "budget {} branches, fallback {}",
        scan.budget,
        if scan.fallback { "monte carlo" } else { "off" }
    );
    let result = gk_scan(&scan)?;
    for note in &result.notes {
        eprintln!("{note}");
    }
    let mut csv = Vec::new();
    experiment::write_csv(&result.rows, &mut csv).expect("writing to memory");
    // a relative `out` in the config resolves next to the config file
    let from_config = cfg.out.map(|p| match config.parent() {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    });
    match out.or(from_config) {
        Some(path) => fs::write(&path, csv).map_err(io_err(&path)),
        None => io::stdout().write_all(&csv).map_err(io_err(Path::new("<stdout>"))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval { spec, x, tol } => eval(&spec, &x, tol),
        Command::Curve { spec, grid, out, tol } => curve(&spec, grid, &out, tol),
        Command::Verify { suite, spec } => verify(&suite, spec.as_deref()),
        Command::Measure {
            config,
            out,
            budget,
            seed,
        } => measure(&config, out, budget, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("salem: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
