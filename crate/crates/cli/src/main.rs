//! `orecover`: radius of information, optimal maps and cross-checks from
//! JSON problem files.

mod cert;
mod problem;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use orecover_core::dominance::{self, Exactness, ParamCertificate};
use orecover_core::ell1::{self, L1Verdict};
use orecover_core::oracle::{self, OracleReport};
use orecover_core::recovery::{self, LimitCase, RecoveryMap};
use orecover_core::scenarios;
use orecover_core::{Error, Result};
use serde_json::json;

use cert::{Certificate, L1Section, OracleSection, Residuals};
use problem::{from_rows, to_rows, Compiled, ProblemFile};

const DEFAULT_TOL: f64 = 1e-9;
const DEFAULT_BUDGET: usize = 10_000;
const DEFAULT_SEED: u64 = 42;
/// Relative excess of an oracle value over a certified bound that counts as
/// a soundness violation.
const SOUNDNESS_TOL: f64 = 1e-7;

#[derive(Parser)]
#[command(name = "orecover", version, about = "Optimal recovery under two-ellipsoid models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Solver tolerance (default: file value, then 1e-9).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Oracle sample budget (default 10000).
    #[arg(long, global = true)]
    budget: Option<usize>,
    /// Oracle seed (default: file value, then 42).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the machine-readable result here.
    #[arg(long = "json-out", global = true, value_name = "PATH")]
    json_out: Option<PathBuf>,
    /// Compute every entry of the M table (l1 scenario).
    #[arg(long = "full-M-table", global = true)]
    full_m_table: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the radius of information and an optimal map.
    Radius { problem: PathBuf },
    /// Apply the map of a certificate to an observation vector.
    Apply {
        certificate: PathBuf,
        #[arg(allow_negative_numbers = true, required = true)]
        y: Vec<f64>,
    },
    /// Cross-check a certificate against the brute-force oracle.
    Oracle { problem: PathBuf, certificate: PathBuf },
    /// Write the minimax-over-linear-maps SDP (l1 scenario) in SDPA format.
    ExportSdpa { problem: PathBuf, out: PathBuf },
    /// Minimize the l1 worst case over linear maps by subgradient descent.
    Minimax {
        problem: PathBuf,
        #[arg(long, default_value_t = 500)]
        iters: usize,
    },
    /// Multi-ellipsoid exactness diagnostic (uses R_list and Q).
    DiagnoseN { problem: PathBuf },
}

enum Failure {
    Core(Error),
    Soundness(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

struct Settings {
    tol: f64,
    budget: usize,
    seed: u64,
}

impl Settings {
    fn new(opts: &Opts, file: Option<&ProblemFile>) -> Self {
        Settings {
            tol: opts.tol.or(file.and_then(|f| f.tol)).unwrap_or(DEFAULT_TOL),
            budget: opts.budget.unwrap_or(DEFAULT_BUDGET),
            seed: opts.seed.or(file.and_then(|f| f.seed)).unwrap_or(DEFAULT_SEED),
        }
    }
}

fn read_problem(path: &Path) -> Result<ProblemFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
    ProblemFile::parse(&text).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
        other => other,
    })
}

fn read_certificate(path: &Path) -> Result<Certificate> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: format!("{}: {e}", path.display()),
    })
}

fn write_json(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))
}

fn limit_case_name(case: LimitCase) -> &'static str {
    match case {
        LimitCase::Interior => "interior",
        LimitCase::AZero => "a-zero",
        LimitCase::BZero => "b-zero",
        LimitCase::Determined => "determined",
    }
}

fn oracle_section(report: &OracleReport, target: &str) -> OracleSection {
    OracleSection {
        method: report.method.as_str().to_string(),
        target: target.to_string(),
        value: report.best_value,
        samples: report.samples,
        seed: report.seed,
    }
}

struct Solved {
    status_optimal: bool,
    radius_sq: Option<f64>,
    lower: f64,
    upper: f64,
    params: ParamCertificate,
    weights: Option<(f64, f64)>,
    map: RecoveryMap,
    dual: Option<f64>,
    l1: Option<L1Section>,
    oracle: OracleSection,
}

fn solve(compiled: &Compiled, s: &Settings, full_table: bool) -> Result<Solved> {
    if let Compiled::L1(spec) = compiled {
        let (mut ws, sol) = ell1::l1_optimal_solve(spec, s.tol)?;
        if full_table {
            ell1::fill_m_table(spec, &mut ws)?;
        }
        let report = oracle::l1_worstcase_vertex(&sol.map.qd, spec, s.budget, s.seed)?;
        return Ok(Solved {
            status_optimal: sol.verdict == L1Verdict::Holds,
            radius_sq: sol.radius_sq(),
            lower: sol.lower,
            upper: sol.upper,
            params: sol.params.clone(),
            weights: Some(sol.weights),
            map: sol.map.clone(),
            dual: None,
            l1: Some(L1Section {
                verdict: format!("{:?}", sol.verdict),
                k: sol.k + 1,
                lb_prime: ws.lb.clone(),
                m_column: sol.m_column.clone(),
                margin: sol.margin,
                m_table: full_table.then(|| ws.m_table.clone()),
            }),
            oracle: oracle_section(&report, "worst case of the returned map over the l1 ball"),
        });
    }
    let (radius_sq, params, weights, map) = match compiled {
        Compiled::Exact(spec) => {
            let c = recovery::solve_radius(spec, s.tol)?;
            (c.radius_sq, c.params, None, c.map)
        }
        Compiled::TwoSpace(ts, _) => unpack(scenarios::solve_two_space(ts, s.tol)?),
        Compiled::L2(l2, _) => unpack(scenarios::solve_l2(l2, s.tol)?),
        Compiled::Mixed(mx, _) => unpack(scenarios::solve_mixed(mx, s.tol)?),
        Compiled::L1(_) => unreachable!(),
    };
    let spec = compiled.working_spec();
    let dual = recovery::worst_case_error_dual(&compiled.error_operator(&map.qd), spec)?;
    let report = oracle::lower_bound(spec, s.budget, s.seed);
    Ok(Solved {
        status_optimal: true,
        radius_sq: Some(radius_sq),
        lower: radius_sq,
        upper: dual.value,
        params,
        weights,
        map,
        dual: Some((dual.value - radius_sq).abs()),
        l1: None,
        oracle: oracle_section(&report, "sup of the quantity of interest over the model set and ker Lambda"),
    })
}

fn unpack(sol: scenarios::ScenarioSolution) -> (f64, ParamCertificate, Option<(f64, f64)>, RecoveryMap) {
    (sol.radius_sq, sol.params, Some(sol.weights), sol.map)
}

fn cmd_radius(path: &Path, opts: &Opts) -> std::result::Result<ExitCode, Failure> {
    let file = read_problem(path)?;
    let s = Settings::new(opts, Some(&file));
    let compiled = file.compile()?;
    let solved = solve(&compiled, &s, opts.full_m_table)?;
    let p = &solved.params;
    let certificate = Certificate {
        tool: "orecover".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        input_hash: file.hash(),
        scenario: file.scenario.as_str().into(),
        status: if solved.status_optimal { "Optimal" } else { "BestEffort" }.into(),
        radius_sq: solved.radius_sq,
        lower_bound: solved.lower,
        upper_bound: solved.upper,
        a_sharp: p.a_sharp,
        b_sharp: p.b_sharp,
        tau_sharp: p.tau_sharp,
        lambda_sharp: p.lambda_sharp,
        c_sharp: solved.weights.map(|w| w.0),
        d_sharp: solved.weights.map(|w| w.1),
        limit_case: limit_case_name(solved.map.limit_case).into(),
        map_d: to_rows(&solved.map.d),
        map_qd: to_rows(&solved.map.qd),
        residuals: Residuals {
            psd: p.psd_residual,
            sum: (solved.lower - (p.a_sharp + p.b_sharp)).abs(),
            dual: solved.dual,
            tau_tolerance: p.tau_tolerance,
        },
        l1: solved.l1.clone(),
        oracle: Some(solved.oracle.clone()),
    };

    println!("scenario: {}", certificate.scenario);
    println!("status: {}", certificate.status);
    match certificate.radius_sq {
        Some(r) => println!("radius_sq: {r:.12e}\nradius: {:.12e}", r.sqrt()),
        None => println!("radius_sq in [{:.12e}, {:.12e}]", solved.lower, solved.upper),
    }
    println!("a_sharp: {:.12e}\nb_sharp: {:.12e}\ntau_sharp: {:.12e}", p.a_sharp, p.b_sharp, p.tau_sharp);
    if let Some((c, d)) = solved.weights {
        println!("c_sharp: {c:.12e}\nd_sharp: {d:.12e}");
    }
    if let Some(l1) = &certificate.l1 {
        println!("condition: {} (axis k = {}, margin {:.3e})", l1.verdict, l1.k, l1.margin);
    }
    println!("oracle ({}): {:.12e}", solved.oracle.target, solved.oracle.value);
    if let Some(out) = &opts.json_out {
        write_json(out, &cert::to_pretty_json(&certificate))?;
    }
    Ok(if solved.status_optimal { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cmd_apply(path: &Path, y: &[f64], opts: &Opts) -> std::result::Result<ExitCode, Failure> {
    let certificate = read_certificate(path)?;
    let d = from_rows(&certificate.map_d);
    let qd = from_rows(&certificate.map_qd);
    let m = d.ncols();
    if y.len() != m {
        return Err(Error::DimensionMismatch(format!("observation has length {}, the map expects {m}", y.len())).into());
    }
    let yv = DVector::from_column_slice(y);
    let f = &d * &yv;
    let qf = &qd * &yv;
    let fmt = |v: &DVector<f64>| v.iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(" ");
    println!("f_hat: {}", fmt(&f));
    println!("Q_f_hat: {}", fmt(&qf));
    if let Some(out) = &opts.json_out {
        let value = json!({
            "f_hat": f.as_slice(),
            "Q_f_hat": qf.as_slice(),
        });
        write_json(out, &cert::to_pretty_json(&value))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(problem_path: &Path, cert_path: &Path, opts: &Opts) -> std::result::Result<ExitCode, Failure> {
    let file = read_problem(problem_path)?;
    let certificate = read_certificate(cert_path)?;
    if certificate.input_hash != file.hash() {
        return Err(Error::InvalidInput(format!(
            "input hash mismatch: certificate {} was not produced from {}",
            cert_path.display(),
            problem_path.display()
        ))
        .into());
    }
    let s = Settings::new(opts, Some(&file));
    let compiled = file.compile()?;
    let qd = from_rows(&certificate.map_qd);
    let report = match &compiled {
        Compiled::L1(spec) => oracle::l1_worstcase_vertex(&qd, spec, s.budget, s.seed)?,
        _ => {
            let op = compiled.error_operator(&qd);
            let spec = compiled.working_spec();
            if op.ncols() != spec.n {
                return Err(Error::DimensionMismatch("certificate map does not fit the problem".into()).into());
            }
            oracle::worst_case_error(&op, spec, s.budget, s.seed)
        }
    };
    let claimed = certificate.radius_sq.unwrap_or(certificate.upper_bound);
    let gap = claimed - report.best_value;
    println!("oracle value: {:.12e}", report.best_value);
    println!("certificate value: {claimed:.12e}");
    println!("gap: {gap:.3e}");
    if let Some(out) = &opts.json_out {
        let value = json!({
            "oracle_value": report.best_value,
            "certificate_value": claimed,
            "gap": gap,
            "method": report.method.as_str(),
            "samples": report.samples,
            "seed": report.seed,
        });
        write_json(out, &cert::to_pretty_json(&value))?;
    }
    if report.best_value > claimed + SOUNDNESS_TOL * (1.0 + claimed.abs()) {
        return Err(Failure::Soundness(format!(
            "oracle value {:.12e} exceeds the certified {claimed:.12e}",
            report.best_value
        )));
    }
    Ok(ExitCode::SUCCESS)
}

fn require_l1(file: &ProblemFile, command: &str) -> Result<orecover_core::recovery::ProblemSpec> {
    match file.compile()? {
        Compiled::L1(spec) => Ok(spec),
        _ => Err(Error::InvalidInput(format!(
            "{command} needs scenario \"l1\", found \"{}\"",
            file.scenario.as_str()
        ))),
    }
}

fn cmd_export_sdpa(path: &Path, out: &Path, opts: &Opts) -> std::result::Result<ExitCode, Failure> {
    let file = read_problem(path)?;
    let s = Settings::new(opts, Some(&file));
    let spec = require_l1(&file, "export-sdpa")?;
    let ws = ell1::solve_lb_all(&spec, s.tol)?;
    let sdp = ell1::export_sdpa(&spec, &ws, out)?;
    println!("variables: {}", sdp.m_dim);
    println!(
        "blocks: {}",
        sdp.block_struct.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ")
    );
    println!("entries: {}", sdp.entries.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_minimax(path: &Path, iters: usize, opts: &Opts) -> std::result::Result<ExitCode, Failure> {
    let file = read_problem(path)?;
    let s = Settings::new(opts, Some(&file));
    let spec = require_l1(&file, "minimax")?;
    let (ws, sol) = ell1::l1_optimal_solve(&spec, s.tol)?;
    let res = ell1::minimax_linear(&spec, &ws, iters, s.tol)?;
    let lb = ws.lb.iter().cloned().fold(0.0, f64::max);
    println!("condition: {:?}", sol.verdict);
    println!("lower_bound: {lb:.12e}");
    println!("value: {:.12e}", res.value);
    println!("iterations: {}", res.iterations);
    println!("converged: {}", res.converged);
    if res.hit_max_iterations {
        println!("stopped at the iteration limit");
    }
    if let Some(out) = &opts.json_out {
        let value = json!({
            "lower_bound": lb,
            "value": res.value,
            "iterations": res.iterations,
            "converged": res.converged,
            "hit_max_iterations": res.hit_max_iterations,
            "history": res.history,
            "map_qd": to_rows(&res.d),
        });
        write_json(out, &cert::to_pretty_json(&value))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_diagnose_n(path: &Path, opts: &Opts) -> std::result::Result<ExitCode, Failure> {
    let file = read_problem(path)?;
    let s = Settings::new(opts, Some(&file));
    let (forms, c) = file.diagnostic_forms()?;
    let diag = dominance::n_ellipsoid_diagnostic(&forms, &c, s.tol)?;
    let report = if c.nrows() == 2 {
        oracle::grid_sup_2d(&forms, &c, s.budget.max(1000))?
    } else {
        oracle::sup_quadratic_ellipsoids(&forms, &c, None, s.budget, s.seed)
    };
    let verdict = match diag.verdict {
        Exactness::Exact => "Exact",
        Exactness::NotExact => "NotExact",
    };
    println!("verdict: {verdict}");
    println!("dominance value: {:.12e}", diag.value);
    println!(
        "weights: {}",
        diag.weights.iter().map(|w| format!("{w:.6e}")).collect::<Vec<_>>().join(" ")
    );
    println!("oracle ({}): {:.12e}", report.method.as_str(), report.best_value);
    println!("gap: {:.3e}", diag.value - report.best_value);
    if let Some(out) = &opts.json_out {
        let value = json!({
            "verdict": verdict,
            "value": diag.value,
            "weights": diag.weights,
            "slack": diag.slack,
            "oracle_value": report.best_value,
            "oracle_method": report.method.as_str(),
        });
        write_json(out, &cert::to_pretty_json(&value))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn configure_threads() {
    if let Some(n) = std::env::var("ORECOVER_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    configure_threads();
    let opts = &cli.opts;
    let outcome = match &cli.command {
        Command::Radius { problem } => cmd_radius(problem, opts),
        Command::Apply { certificate, y } => cmd_apply(certificate, y, opts),
        Command::Oracle { problem, certificate } => cmd_oracle(problem, certificate, opts),
        Command::ExportSdpa { problem, out } => cmd_export_sdpa(problem, out, opts),
        Command::Minimax { problem, iters } => cmd_minimax(problem, *iters, opts),
        Command::DiagnoseN { problem } => cmd_diagnose_n(problem, opts),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Soundness(msg)) => {
            eprintln!("soundness violation: {msg}");
            ExitCode::from(3)
        }
    }
}
