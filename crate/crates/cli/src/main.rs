mod render;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use toric_soliton::calabi::{CalabiParameters, CalabiSoliton};
use toric_soliton::error::{Error, ErrorClass};
use toric_soliton::futaki::{solve_soliton_vector, SolverConfig};
use toric_soliton::polytope::{parse_polytope, parse_rational, DelzantPolytope};
use toric_soliton::roots::{automorphism_dimensions, enumerate_roots};
use toric_soliton::verify::{verify, PotentialChoice, VerifyConfig};
use toric_soliton::{hpoly, Execution};

const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(name = "toric-soliton", version, about = "Kähler–Ricci solitons and weighted-Laplacian eigenfunctions on toric Fano manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args)]
struct Options {
    /// Newton tolerance on the relative gradient of the weighted volume.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    /// Points per axis of the interior evaluation grid.
    #[arg(long, global = true, default_value_t = 21)]
    grid: usize,
    /// Minimum facet value of grid points, relative to the polytope spread.
    #[arg(long, global = true, default_value_t = 0.05)]
    margin: f64,
    /// Initial quadrature order.
    #[arg(long, global = true, default_value_t = 10)]
    order: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Disable the thread pool.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Potential {
    Guillemin,
    Calabi,
}

#[derive(Subcommand)]
enum Command {
    /// Demazure roots, semisimple/unipotent split and automorphism dimensions.
    Roots { polytope: PathBuf },
    /// Soliton vector from the Futaki minimisation.
    Soliton { polytope: PathBuf },
    /// Full numerical verification of the eigenfunction decomposition.
    Verify {
        polytope: PathBuf,
        #[arg(long, value_enum, default_value_t = Potential::Guillemin)]
        potential: Potential,
    },
    /// Eigenspace blocks of the weighted Laplacian.
    Decompose {
        polytope: PathBuf,
        #[arg(long, value_enum, default_value_t = Potential::Guillemin)]
        potential: Potential,
    },
    /// Closed-form Calabi soliton on the trapezoid.
    Calabi(CalabiArgs),
}

#[derive(Args)]
struct CalabiArgs {
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    alpha1: String,
    #[arg(long, default_value = "3", allow_hyphen_values = true)]
    alpha2: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    beta1: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    beta2: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    c_alpha1: String,
    #[arg(long, default_value = "-1/3", allow_hyphen_values = true)]
    c_alpha2: String,
    #[arg(long, default_value = "-1", allow_hyphen_values = true)]
    c_beta1: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    c_beta2: String,
}

/// A failure with its process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Input => EXIT_INPUT,
            ErrorClass::Solver => EXIT_SOLVER,
        };
        Failure { code, error: e.into() }
    }
}

fn input_failure(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_INPUT, error }
}

fn load(path: &Path) -> Result<DelzantPolytope, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input_failure)?;
    parse_polytope(&text)
        .with_context(|| format!("invalid polytope in {}", path.display()))
        .map_err(input_failure)
}

/// Rejects non-Delzant and non-Fano input before any numerics.
fn load_fano(path: &Path) -> Result<DelzantPolytope, Failure> {
    let p = load(path)?;
    p.require_delzant().map_err(Error::from)?;
    p.privileged_center().map_err(Error::from)?;
    Ok(p)
}

fn exec(opts: &Options) -> Execution {
    if opts.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn verify_config(opts: &Options, potential: Potential) -> VerifyConfig {
    VerifyConfig {
        potential: match potential {
            Potential::Guillemin => PotentialChoice::Guillemin,
            Potential::Calabi => PotentialChoice::Calabi,
        },
        grid: opts.grid,
        margin: opts.margin,
        tol: opts.tol,
        order: opts.order,
        exec: exec(opts),
        ..VerifyConfig::default()
    }
}

fn config_echo(opts: &Options) -> Value {
    json!({ "tol": opts.tol, "grid": opts.grid, "margin": opts.margin, "order": opts.order })
}

/// Output document, its text rendering, and an optional verification failure.
struct Outcome {
    doc: Value,
    text: String,
    failed_check: Option<String>,
}

fn cmd_roots(path: &Path, opts: &Options) -> Result<Outcome, Failure> {
    let p = load_fano(path)?;
    let center = p.privileged_center().map_err(Error::from)?;
    let alg = p.normalize_algebraic().map_err(Error::from)?;
    let roots = enumerate_roots(&alg, exec(opts)).map_err(Error::from)?;
    let dims = automorphism_dimensions(&roots, alg.dim());
    let alphas = |rs: &[toric_soliton::roots::DemazureRoot]| rs.iter().map(|r| r.alpha.clone()).collect::<Vec<_>>();
    let doc = json!({
        "command": "roots",
        "input": p.to_json(),
        "privileged_center": center.point.iter().map(hpoly::to_f64).collect::<Vec<_>>(),
        "algebraic": alg.to_json(),
        "vertices": alg.vertices().iter().map(|v| v.point_f64()).collect::<Vec<_>>(),
        "roots": roots.roots,
        "semisimple": alphas(&roots.semisimple),
        "unipotent": alphas(&roots.unipotent),
        "dimensions": dims,
    });
    let text = render::roots_text(&doc);
    Ok(Outcome { doc, text, failed_check: None })
}

fn cmd_soliton(path: &Path, opts: &Options) -> Result<Outcome, Failure> {
    let p = load_fano(path)?;
    let cfg = SolverConfig { tol: opts.tol, order: opts.order, exec: exec(opts) };
    let s = solve_soliton_vector(&p, &cfg).map_err(Error::from)?;
    let doc = json!({
        "command": "soliton",
        "input": p.to_json(),
        "algebraic": p.normalize_algebraic().map_err(Error::from)?.to_json(),
        "config": config_echo(opts),
        "soliton": s,
    });
    let text = render::soliton_text(&doc);
    Ok(Outcome { doc, text, failed_check: None })
}

fn run_verify(path: &Path, opts: &Options, potential: Potential) -> Result<Value, Failure> {
    let p = load_fano(path)?;
    let report = verify(&p, &verify_config(opts, potential))?;
    let mut doc = serde_json::to_value(&report).map_err(|e| Failure { code: EXIT_SOLVER, error: e.into() })?;
    let obj = doc.as_object_mut().expect("report serializes to an object");
    obj.insert("command".into(), json!("verify"));
    obj.insert("config".into(), config_echo(opts));
    obj.insert("first_failure".into(), json!(report.first_failure().map(|c| c.name.clone())));
    Ok(doc)
}

fn first_failure(doc: &Value) -> Option<String> {
    doc["first_failure"].as_str().map(str::to_string)
}

fn cmd_verify(path: &Path, opts: &Options, potential: Potential) -> Result<Outcome, Failure> {
    let doc = run_verify(path, opts, potential)?;
    let text = render::verify_text(&doc);
    Ok(Outcome { failed_check: first_failure(&doc), doc, text })
}

fn cmd_decompose(path: &Path, opts: &Options, potential: Potential) -> Result<Outcome, Failure> {
    let full = run_verify(path, opts, potential)?;
    let doc = json!({
        "command": "decompose",
        "input": full["input"],
        "potential": full["potential"],
        "config": full["config"],
        "a": full["soliton"]["a"],
        "dimensions": full["dimensions"],
        "decomposition": full["decomposition"],
        "passed": full["passed"],
        "first_failure": full["first_failure"],
    });
    let text = render::decompose_text(&doc);
    Ok(Outcome { failed_check: first_failure(&doc), doc, text })
}

fn cmd_calabi(args: &CalabiArgs) -> Result<Outcome, Failure> {
    let num = |name: &str, s: &str| -> Result<f64, Failure> {
        parse_rational(s)
            .map(|r| hpoly::to_f64(&r))
            .with_context(|| format!("invalid value for --{name}"))
            .map_err(input_failure)
    };
    let params = CalabiParameters {
        alpha1: num("alpha1", &args.alpha1)?,
        alpha2: num("alpha2", &args.alpha2)?,
        beta1: num("beta1", &args.beta1)?,
        beta2: num("beta2", &args.beta2)?,
        c_alpha1: num("c-alpha1", &args.c_alpha1)?,
        c_alpha2: num("c-alpha2", &args.c_alpha2)?,
        c_beta1: num("c-beta1", &args.c_beta1)?,
        c_beta2: num("c-beta2", &args.c_beta2)?,
    };
    let soliton = CalabiSoliton::new(params).map_err(Error::from)?;
    let report = soliton.report(50).map_err(Error::from)?;
    let doc = json!({ "command": "calabi", "report": report });
    let text = render::calabi_text(&doc);
    Ok(Outcome { doc, text, failed_check: None })
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    let opts = &cli.opts;
    match &cli.command {
        Command::Roots { polytope } => cmd_roots(polytope, opts),
        Command::Soliton { polytope } => cmd_soliton(polytope, opts),
        Command::Verify { polytope, potential } => cmd_verify(polytope, opts, *potential),
        Command::Decompose { polytope, potential } => cmd_decompose(polytope, opts, *potential),
        Command::Calabi(args) => cmd_calabi(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            match cli.opts.format {
                Format::Json => {
                    let doc = render::round_floats(&out.doc);
                    println!("{}", serde_json::to_string_pretty(&doc).expect("JSON values serialize"));
                }
                Format::Text => print!("{}", out.text),
            }
            match out.failed_check {
                Some(name) => {
                    eprintln!("error: verification failed: {name}");
                    ExitCode::from(EXIT_VERIFY)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
