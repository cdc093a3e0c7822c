mod output;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvop_core::algorithm::{run, Mode, RunConfig, SolveResult};
use cvop_core::geometry::NormSpec;
use cvop_core::metrics::{
    fit_slope, read_log_csv, theoretical_exponent, RateConstants, DEFAULT_BURN_IN,
};
use cvop_core::parallel::Parallelism;
use cvop_core::problem::{builtin, parse_problem, CvopInstance, BUILTIN_NAMES};
use cvop_core::scalarization::SolverConfig;
use cvop_core::verify::{self, VerifyConfig};
use cvop_core::Error;

/// Allowed excess of a fitted convergence slope over the theoretical exponent.
const SLOPE_SLACK: f64 = 0.3;

#[derive(Parser)]
#[command(
    name = "cvop",
    version,
    about = "Outer approximation of upper images of convex vector optimization problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run to termination and write the solution, outer polytope and log.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Apply a fixed number of cuts and fit the convergence slope.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Number of cuts.
        #[arg(long)]
        iters: usize,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run and check every invariant; exits 1 if any check fails.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Plot a log-log convergence graph from a log.csv.
    Report {
        log: PathBuf,
        /// Objective dimension, for the reference exponent.
        #[arg(long)]
        q: usize,
        /// Use the Euclidean exponent 2/(1-q) instead of 1/(1-q).
        #[arg(long)]
        euclidean: bool,
        /// Constant of the reference curve c k^e.
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = DEFAULT_BURN_IN)]
        burn_in: f64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Problem file (TOML) or builtin name.
    problem: String,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Override the problem's norm (l1, l2, linf).
    #[arg(long)]
    norm: Option<NormSpec>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = cvop_core::algorithm::DEFAULT_MAX_ITERS)]
    max_iters: usize,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse { .. } | Error::Validation(_) | Error::Invalid(_) | Error::Io(_) => 2,
            Error::SafetyCap(_) => 4,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    }
}

fn load_problem(spec: &str, norm: Option<NormSpec>) -> Result<CvopInstance, Failure> {
    let path = Path::new(spec);
    let inst = if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
        parse_problem(&text).map_err(|e| Failure {
            code: 2,
            message: format!("{}: {e}", path.display()),
        })?
    } else if BUILTIN_NAMES.contains(&spec) {
        builtin(spec)?
    } else {
        return Err(Failure {
            code: 2,
            message: format!(
                "'{spec}' is neither a file nor a builtin ({})",
                BUILTIN_NAMES.join(", ")
            ),
        });
    };
    match norm {
        Some(n) if n != inst.norm() => Ok(inst.with_norm(n)?),
        _ => Ok(inst),
    }
}

fn parallelism(threads: Option<usize>) -> Result<Parallelism, Failure> {
    match threads {
        Some(0) => Err(Failure {
            code: 2,
            message: "--threads must be at least 1".into(),
        }),
        Some(1) => Ok(Parallelism::Sequential),
        #[cfg(feature = "parallel")]
        Some(n) => {
            // Only fails if a global pool exists already, which is harmless.
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
            Ok(Parallelism::Rayon)
        }
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(Parallelism::Sequential),
        None => Ok(Parallelism::available()),
    }
}

fn run_config(common: &Common) -> Result<RunConfig, Failure> {
    let cfg = RunConfig {
        max_iters: common.max_iters,
        parallelism: parallelism(common.threads)?,
        ..RunConfig::new(common.eps)
    };
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn cmd_solve(common: &Common, out: &Path) -> Result<(), Failure> {
    let inst = load_problem(&common.problem, common.norm)?;
    let cfg = run_config(common)?;
    let res = run(&inst, &cfg)?;
    create_dir(out)?;
    write_outputs(&inst, &res, out)?;

    let vcfg = VerifyConfig {
        samples: 500,
        seed: cfg.seed,
        parallelism: cfg.parallelism,
    };
    let (cuts, gamma) = verify::check_cuts_and_gamma(&inst, &res, &vcfg)?;
    let checks = [
        cuts,
        gamma,
        verify::check_sandwich(&inst, &res, cfg.epsilon, cfg.parallelism)?,
    ];
    let summary = output::summary(&inst, &res, cfg.epsilon, &checks);
    write_file(&out.join("summary.txt"), &summary)?;
    print!("{summary}");
    res.ensure_complete()?;
    Ok(())
}

fn write_outputs(inst: &CvopInstance, res: &SolveResult, out: &Path) -> Result<(), Failure> {
    write_file(&out.join("solution.csv"), &output::solution_csv(inst, res))?;
    write_file(&out.join("outer.csv"), &output::outer_csv(res))?;
    let mut buf = Vec::new();
    cvop_core::metrics::write_log_csv(&res.log, &mut buf)?;
    write_file(
        &out.join("log.csv"),
        &String::from_utf8(buf).expect("ASCII output"),
    )
}

fn cmd_trace(common: &Common, iters: usize, burn_in: f64, out: &Path) -> Result<(), Failure> {
    if iters < 10 {
        return Err(Failure {
            code: 2,
            message: "--iters must be at least 10".into(),
        });
    }
    let inst = load_problem(&common.problem, common.norm)?;
    let cfg = RunConfig {
        mode: Mode::Indefinite(iters),
        track_consecutive: true,
        ..run_config(common)?
    };
    cfg.validate()?;
    let result = run(&inst, &cfg)?;
    create_dir(out)?;
    write_outputs(&inst, &result, out)?;

    let euclidean = inst.norm() == NormSpec::L2;
    let exponent = theoretical_exponent(inst.q(), euclidean)?;
    let mut text = format!(
        "problem {}\nnorm {}\ncuts {}\nstatus {}\ntheoretical_exponent {:.6}\nthreshold {:.6}\n",
        inst.name(),
        inst.norm(),
        result.cuts.len(),
        output::status_name(result.status),
        exponent,
        exponent + SLOPE_SLACK
    );
    match fit_slope(&result.log, burn_in) {
        Ok(fit) => {
            let verdict = if fit.slope <= exponent + SLOPE_SLACK {
                "PASS"
            } else {
                "FAIL"
            };
            text.push_str(&format!(
                "slope {:.6}\nintercept {:.6}\nr2 {:.6}\npoints {}\nverdict {verdict}\n",
                fit.slope, fit.intercept, fit.r2, fit.n_used
            ));
        }
        Err(e) => text.push_str(&format!("slope n/a\nverdict FAIL ({e})\n")),
    }
    let rc = RateConstants::from_vertices(
        &result.vertices.vertices,
        euclidean,
        &SolverConfig::precise(),
    )?;
    text.push_str(&format!(
        "circumradius_upper_bound {:.6e}\nlambda_bar_upper_bound {:.6e}\n",
        rc.r, rc.lambda_bar
    ));
    write_file(&out.join("slope.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_verify(common: &Common, samples: usize, seed: u64) -> Result<bool, Failure> {
    let inst = load_problem(&common.problem, common.norm)?;
    let cfg = RunConfig {
        track_consecutive: true,
        seed,
        ..run_config(common)?
    };
    let res = run(&inst, &cfg)?;
    res.ensure_complete()?;
    let vcfg = VerifyConfig {
        samples,
        seed,
        parallelism: cfg.parallelism,
    };
    let report = verify::verify_run(&inst, &res, cfg.epsilon, &cfg.solver, &vcfg)?;
    print!("{report}");
    Ok(report.all_passed())
}

fn cmd_report(
    log_path: &Path,
    q: usize,
    euclidean: bool,
    c: f64,
    burn_in: f64,
    out: &Path,
) -> Result<(), Failure> {
    let file = std::fs::File::open(log_path).map_err(|e| io_failure(log_path, e))?;
    let log = read_log_csv(file).map_err(|e| Failure {
        code: 2,
        message: format!("{}: {e}", log_path.display()),
    })?;
    if log.is_empty() {
        return Err(Failure {
            code: 2,
            message: format!("{}: log has no records", log_path.display()),
        });
    }
    let exponent = theoretical_exponent(q, euclidean)?;
    let fit = match fit_slope(&log, burn_in) {
        Ok(f) => Some(f),
        Err(e) => {
            log::warn!("no regression line: {e}");
            None
        }
    };
    create_dir(out)?;
    let plot = svg::Plot {
        log: &log,
        fit: fit.as_ref(),
        c,
        exponent,
    };
    write_file(&out.join("plot.svg"), &plot.render())?;
    write_file(&out.join("plot_data.csv"), &plot.data_csv())?;
    if let Some(f) = fit {
        println!("slope {:.6} (reference exponent {:.6})", f.slope, exponent);
    }
    Ok(())
}

fn init_logging() {
    let level = match std::env::var("CVOP_LOG").as_deref() {
        Ok("quiet") => "off",
        Ok("debug") => "debug",
        Ok("trace") => "trace",
        Ok("info") => "info",
        _ => "warn",
    };
    env_logger::Builder::new()
        .parse_filters(level)
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve { common, out } => cmd_solve(common, out).map(|_| true),
        Command::Trace {
            common,
            iters,
            burn_in,
            out,
        } => cmd_trace(common, *iters, *burn_in, out).map(|_| true),
        Command::Verify {
            common,
            samples,
            seed,
        } => cmd_verify(common, *samples, *seed),
        Command::Report {
            log,
            q,
            euclidean,
            c,
            burn_in,
            out,
        } => cmd_report(log, *q, *euclidean, *c, *burn_in, out).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
