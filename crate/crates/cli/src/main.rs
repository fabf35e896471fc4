//! Command-line front door: five subcommands over the library pipeline,
//! JSON artifacts on stdout or --out, machine-readable errors on stderr,
//! and stable exit codes (0 success, 2 validation, 3 numerical, 4 bound
//! violation, 5 guard exceeded).

use clap::{Parser, Subcommand};
use itbound_core::bounds::{crosscheck, main_bound, BoundsError, Method};
use itbound_core::construct::{build_extremal, ConstructError};
use itbound_core::count::{count_exact, count_sample, CountError, CountResult, CountValue};
use itbound_core::model::{DensityMatrix, Mode, ModelError, MultipartiteGraph, PartSpec};
use itbound_core::DEFAULT_TOL;
use log::info;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Sample budget when verify has to fall back past the exact guard.
const DEFAULT_VERIFY_SAMPLES: u64 = 200_000;

#[derive(Parser)]
#[command(name = "itbound", version, about = "Bounds, witnesses, extremal constructions, and counts for multipartite transversals")]
struct Cli {
    /// More logging (-v info, -vv debug); RUST_LOG wins when set
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bound coefficient, witness, shrink factors, and baseline
    Bound {
        /// Density matrix JSON
        #[arg(long)]
        densities: PathBuf,
        /// lp, enumeration, or auto
        #[arg(long, default_value = "auto")]
        method: String,
        /// Run both paths and require agreement
        #[arg(long)]
        crosscheck: bool,
        /// Tolerance override (TB_TOL overrides the default too)
        #[arg(long)]
        tol: Option<f64>,
        /// Write here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Witness decomposition only
    Decompose {
        #[arg(long)]
        densities: PathBuf,
        #[arg(long, default_value = "auto")]
        method: String,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extremal graph plus a sidecar with cores and achieved densities
    Construct {
        #[arg(long)]
        densities: PathBuf,
        /// Comma-separated part sizes, e.g. 4,4
        #[arg(long)]
        parts: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        tol: Option<f64>,
        /// Graph goes here, sidecar next to it with a .meta.json extension
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact or sampled transversal count of a graph file
    Count {
        /// Multipartite graph JSON
        #[arg(long)]
        graph: PathBuf,
        /// it or clique
        #[arg(long, default_value = "it")]
        mode: String,
        /// Sample instead of exact counting
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worker threads for the exact counter
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bound, construct, count, and check both inequalities
    Verify {
        #[arg(long)]
        densities: PathBuf,
        #[arg(long)]
        parts: String,
        #[arg(long, default_value = "auto")]
        method: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Force sampling with this budget (default falls back past the guard)
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }
    fn numerical(message: impl Into<String>) -> Failure {
        Failure { code: 3, message: message.into() }
    }
    fn violation(message: impl Into<String>) -> Failure {
        Failure { code: 4, message: message.into() }
    }
    fn guard(message: impl Into<String>) -> Failure {
        Failure { code: 5, message: message.into() }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Failure {
        Failure::validation(e.to_string())
    }
}

impl From<BoundsError> for Failure {
    fn from(e: BoundsError) -> Failure {
        match e {
            BoundsError::TooLarge(_) => Failure::guard(e.to_string()),
            BoundsError::BadCycle(_) | BoundsError::BadProgram(_) => Failure::validation(e.to_string()),
            BoundsError::Numerical(_) | BoundsError::Mismatch { .. } => Failure::numerical(e.to_string()),
        }
    }
}

impl From<ConstructError> for Failure {
    fn from(e: ConstructError) -> Failure {
        match e {
            ConstructError::BadInput(_) => Failure::validation(e.to_string()),
            _ => Failure::numerical(e.to_string()),
        }
    }
}

impl From<CountError> for Failure {
    fn from(e: CountError) -> Failure {
        match e {
            CountError::Guard(_) => Failure::guard(e.to_string()),
            CountError::BadInput(_) => Failure::validation(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", serde_json::json!({ "error": f.message, "code": f.code }));
            ExitCode::from(f.code)
        }
    }
}

fn tolerance(flag: Option<f64>) -> Result<f64, Failure> {
    let tol = match flag {
        Some(t) => t,
        None => match std::env::var("TB_TOL") {
            Ok(raw) => raw
                .parse::<f64>()
                .map_err(|_| Failure::validation(format!("TB_TOL is not a number: {:?}", raw)))?,
            Err(_) => DEFAULT_TOL,
        },
    };
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::validation(format!("tolerance must be positive, got {}", tol)));
    }
    Ok(tol)
}

fn load_densities(path: &Path) -> Result<DensityMatrix, Failure> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read {}: {}", path.display(), e)))?;
    Ok(DensityMatrix::from_json_str(&raw)?)
}

fn load_graph(path: &Path) -> Result<MultipartiteGraph, Failure> {
    let raw = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read {}: {}", path.display(), e)))?;
    Ok(MultipartiteGraph::from_json_str(&raw)?)
}

fn parse_parts(spec: &str) -> Result<PartSpec, Failure> {
    let sizes = spec
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::validation(format!("bad part sizes {:?}: {}", spec, e)))?;
    Ok(PartSpec::new(sizes)?)
}

fn parse_method(s: &str) -> Result<Method, Failure> {
    s.parse::<Method>().map_err(Failure::validation)
}

fn parse_mode(s: &str) -> Result<Mode, Failure> {
    s.parse::<Mode>().map_err(|e| Failure::validation(e.to_string()))
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, content)
                .map_err(|e| Failure::validation(format!("cannot write {}: {}", path.display(), e)))?;
            info!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{}", content);
            Ok(())
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn json_u128(v: u128) -> serde_json::Value {
    if v <= u64::MAX as u128 {
        serde_json::json!(v as u64)
    } else {
        serde_json::json!(v.to_string())
    }
}

fn run(cmd: Cmd) -> Result<(), Failure> {
    match cmd {
        Cmd::Bound { densities, method, crosscheck: check, tol, out } => {
            let d = load_densities(&densities)?;
            let tol = tolerance(tol)?;
            let mut report = main_bound(&d, parse_method(&method)?, tol)?;
            if check {
                let (lp, en) = crosscheck(&d, tol)?;
                info!("crosscheck: lp {} enumeration {}", lp, en);
                report.notes.push_str("; lp and enumeration agree within 1e-7");
            }
            emit(out.as_deref(), &report.to_json_string())
        }
        Cmd::Decompose { densities, method, tol, out } => {
            let d = load_densities(&densities)?;
            let report = main_bound(&d, parse_method(&method)?, tolerance(tol)?)?;
            emit(out.as_deref(), &with_newline(report.witness.to_json_string()))
        }
        Cmd::Construct { densities, parts, seed, tol, out } => {
            let d = load_densities(&densities)?;
            let parts = parse_parts(&parts)?;
            let report = main_bound(&d, Method::Auto, tolerance(tol)?)?;
            let c = build_extremal(&d, &parts, &report.primal, seed)?;
            match out {
                Some(path) => {
                    emit(Some(&path), &with_newline(c.graph.to_json_string()))?;
                    let sidecar = path.with_extension("meta.json");
                    emit(Some(&sidecar), &c.sidecar_json_string())
                }
                None => {
                    print!("{}", with_newline(c.graph.to_json_string()));
                    print!("{}", c.sidecar_json_string());
                    Ok(())
                }
            }
        }
        Cmd::Count { graph, mode, samples, seed, jobs, out } => {
            let g = load_graph(&graph)?;
            let mode = parse_mode(&mode)?;
            let result = match samples {
                Some(n) => count_sample(&g, n, seed, mode)?,
                None => count_exact(&g, mode, jobs)?,
            };
            emit(out.as_deref(), &result.to_json_string())
        }
        Cmd::Verify { densities, parts, method, seed, samples, tol, jobs, out } => {
            let d = load_densities(&densities)?;
            let parts = parse_parts(&parts)?;
            let report = main_bound(&d, parse_method(&method)?, tolerance(tol)?)?;
            let c = build_extremal(&d, &parts, &report.primal, seed)?;
            let result = match samples {
                Some(n) => count_sample(&c.graph, n, seed, Mode::IndependentTransversal)?,
                None => match count_exact(&c.graph, Mode::IndependentTransversal, jobs) {
                    Ok(r) => r,
                    Err(CountError::Guard(msg)) => {
                        info!("{}; sampling {} tuples instead", msg, DEFAULT_VERIFY_SAMPLES);
                        count_sample(&c.graph, DEFAULT_VERIFY_SAMPLES, seed, Mode::IndependentTransversal)?
                    }
                    Err(e) => return Err(e.into()),
                },
            };
            finish_verify(&parts, &report.coefficient, c.core_guarantee(), &result, out.as_deref())
        }
    }
}

/// Assembles the verify report and checks the two inequalities: count at
/// most the bound side (coefficient times the part product plus the
/// finite-size envelope) and at least the core guarantee. Sampled counts
/// get a three-sigma margin on both comparisons.
fn finish_verify(
    parts: &PartSpec,
    coefficient: &f64,
    core: u128,
    result: &CountResult,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let prod = parts.product_f64();
    let n_min = *parts.sizes().iter().min().expect("at least two parts") as f64;
    let bound_total = coefficient * prod;
    let slack = parts.k() as f64 * prod / n_min;
    let (count_value, count_f64, margin) = match result.value {
        CountValue::Exact(v) => (json_u128(v), v as f64, 0.0),
        CountValue::Estimate { estimate, se, .. } => (serde_json::Value::Null, estimate, 3.0 * se),
    };
    let ratio = if bound_total > 0.0 {
        count_f64 / bound_total
    } else if count_f64 == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let mut body = serde_json::json!({
        "bound": bound_total,
        "core_guarantee": json_u128(core),
        "ratio": ratio,
    });
    match result.value {
        CountValue::Exact(_) => {
            body["count"] = count_value;
        }
        CountValue::Estimate { estimate, se, samples } => {
            body["estimate"] = serde_json::json!(estimate);
            body["se"] = serde_json::json!(se);
            body["samples"] = serde_json::json!(samples);
        }
    }
    let mut text = serde_json::to_string_pretty(&body).expect("verify report serializes");
    text.push('\n');
    emit(out, &text)?;

    let upper_ok = count_f64 <= bound_total + slack + margin + 1e-9 * (1.0 + bound_total);
    let lower_ok = match result.value {
        CountValue::Exact(v) => v >= core,
        CountValue::Estimate { estimate, se, .. } => estimate + 3.0 * se >= core as f64,
    };
    if !upper_ok {
        return Err(Failure::violation(format!(
            "count {} exceeds the bound side {} (bound {} plus slack {})",
            count_f64,
            bound_total + slack,
            bound_total,
            slack
        )));
    }
    if !lower_ok {
        return Err(Failure::violation(format!(
            "count {} fell below the core guarantee {}",
            count_f64, core
        )));
    }
    Ok(())
}
