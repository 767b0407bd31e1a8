//! Command-line front end. Every subcommand reads and writes JSON; stdin and
//! stdout are used when paths are omitted.
//!
//! Exit codes: 0 when every certificate passes, 1 when a check fails or a
//! counterexample is found, 2 for I/O, usage or schema errors.

use std::ffi::OsString;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::category::{check_snake, decompose, tensor_product, Decomposition};
use crate::coaction::{check_conjugate_matrix, check_conjugate_raw, check_homomorphism, ConjugatePair, LinearObject};
use crate::derivation::{
    canonical_dual, certify_commutativity, certify_duality, classical_form, partial_isometry_report, polar_data,
    Character, ClassicalDecomposition, DerivationError,
};
use crate::matrix::ComplexVector;
use crate::report::CertificateReport;
use crate::solver::{sample_classical, solve, SolverConfig, SolverRun};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "circle-coact", version, about = "Linear coactions on C(S^1)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Input JSON file (stdin when omitted).
    #[arg(long, short, global = true)]
    pub input: Option<PathBuf>,
    /// Output JSON file (stdout when omitted).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Certificate tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Omit the timestamp and environment metadata.
    #[arg(long, global = true)]
    pub reproducible: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a linear object is a unital *-homomorphism.
    Check,
    /// Build the canonical dual of an object and check the pairing.
    Conjugate,
    /// Run the full certificate chain on a conjugate pair.
    Certify,
    /// Search for solutions of the full constraint system.
    Solve(SolveArgs),
    /// Decompose an object into irreducibles.
    Decompose,
    /// Emit a random classical solution.
    Sample {
        #[arg(long)]
        n: usize,
    },
    /// Tensor two objects and decompose the product.
    Fuse {
        /// First factor.
        #[arg(long)]
        left: PathBuf,
        /// Second factor.
        #[arg(long)]
        right: PathBuf,
    },
    /// Check the pairing identities for vectors `s`, `t`.
    Snake,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub residual_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step_init: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub gauss_newton_below: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub commutativity_tol: f64,
    /// Where to write converged outcomes that fail commutativity.
    #[arg(long, default_value = "counterexample.json")]
    pub counterexample: PathBuf,
}

/// Timestamp and build environment, omitted under `--reproducible`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub timestamp_unix: u64,
    pub version: String,
    pub os: String,
    pub arch: String,
}

impl Meta {
    fn capture() -> Self {
        Meta {
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutput {
    pub report: CertificateReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateOutput {
    pub pair: ConjugatePair,
    pub matrix_report: CertificateReport,
    pub raw_report: CertificateReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyOutput {
    pub report: CertificateReport,
    pub classical: Option<ClassicalDecomposition>,
    /// Why the chain stopped early, if it did.
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutput {
    #[serde(flatten)]
    pub run: SolverRun,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeOutput {
    #[serde(flatten)]
    pub decomposition: Decomposition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutput {
    #[serde(flatten)]
    pub pair: ConjugatePair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuseOutput {
    pub product: LinearObject,
    pub decomposition: Decomposition,
    /// Present when every summand is a character.
    pub characters: Option<Vec<Character>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnakeInput {
    pub n: usize,
    pub s: ComplexVector,
    pub t: ComplexVector,
}

/// A user-facing failure that maps to exit code 2.
#[derive(Debug)]
struct UsageError(String);

type CliResult<T> = Result<T, UsageError>;

/// Parses `args` and runs the command. Never panics on user input.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(stderr, "{e}");
            return EXIT_ERROR;
        }
        Err(e) => {
            let _ = write!(stdout, "{e}");
            return EXIT_PASS;
        }
    };
    match execute(&cli, stdin) {
        Ok((code, json)) => match emit(&cli.common.output, &json, stdout) {
            Ok(()) => code,
            Err(UsageError(msg)) => {
                let _ = writeln!(stderr, "error: {msg}");
                EXIT_ERROR
            }
        },
        Err(UsageError(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn execute(cli: &Cli, stdin: &mut dyn Read) -> CliResult<(i32, String)> {
    let common = &cli.common;
    if !(common.tol > 0.0 && common.tol.is_finite()) {
        return Err(UsageError(format!("--tol must be positive and finite, got {}", common.tol)));
    }
    let meta = (!common.reproducible).then(Meta::capture);
    let tol = common.tol;

    match &cli.command {
        Command::Check => {
            let obj: LinearObject = read_input(common.input.as_deref(), stdin)?;
            let report = check_homomorphism(&obj, tol);
            let code = verdict(report.overall_pass);
            Ok((code, to_json(&CheckOutput { report, meta })?))
        }
        Command::Conjugate => {
            let obj: LinearObject = read_input(common.input.as_deref(), stdin)?;
            let pair = canonical_dual(&obj);
            let matrix_report = check_conjugate_matrix(&pair, tol);
            let raw_report = check_conjugate_raw(&pair, tol).map_err(|e| UsageError(e.to_string()))?;
            let code = verdict(matrix_report.overall_pass && raw_report.overall_pass);
            let out = ConjugateOutput {
                pair,
                matrix_report,
                raw_report,
                meta,
            };
            Ok((code, to_json(&out)?))
        }
        Command::Certify => {
            let pair: ConjugatePair = read_input(common.input.as_deref(), stdin)?;
            let out = certify_chain(&pair, tol, common.seed, meta);
            let code = verdict(out.report.overall_pass && out.classical.is_some());
            Ok((code, to_json(&out)?))
        }
        Command::Solve(args) => {
            let config = SolverConfig {
                n: args.n,
                restarts: args.restarts,
                max_iters: args.max_iters,
                residual_tol: args.residual_tol,
                grad_tol: args.grad_tol,
                seed: common.seed,
                step_init: args.step_init,
                gauss_newton_below: args.gauss_newton_below,
                commutativity_tol: args.commutativity_tol,
            };
            let run = solve(&config).map_err(|e| UsageError(e.to_string()))?;
            let failures: Vec<_> = run.counterexamples().cloned().collect();
            let code = if failures.is_empty() {
                EXIT_PASS
            } else {
                write_file(&args.counterexample, &to_json(&failures)?)?;
                EXIT_FAIL
            };
            Ok((code, to_json(&SolveOutput { run, meta })?))
        }
        Command::Decompose => {
            let obj: LinearObject = read_input(common.input.as_deref(), stdin)?;
            match decompose(&obj, tol, common.seed) {
                Ok(decomposition) => Ok((EXIT_PASS, to_json(&DecomposeOutput { decomposition, meta })?)),
                Err(e) => Ok((EXIT_FAIL, failure_json(&e.to_string())?)),
            }
        }
        Command::Sample { n } => {
            if *n == 0 || *n > 8 {
                return Err(UsageError(format!("--n must be between 1 and 8, got {n}")));
            }
            let pair = sample_classical(*n, common.seed);
            Ok((EXIT_PASS, to_json(&SampleOutput { pair, meta })?))
        }
        Command::Fuse { left, right } => {
            let x: LinearObject = read_input(Some(left), stdin)?;
            let y: LinearObject = read_input(Some(right), stdin)?;
            let product = tensor_product(&x, &y);
            match decompose(&product, tol, common.seed) {
                Ok(decomposition) => {
                    let characters = decomposition.characters(tol);
                    let out = FuseOutput {
                        product,
                        decomposition,
                        characters,
                        meta,
                    };
                    Ok((EXIT_PASS, to_json(&out)?))
                }
                Err(e) => Ok((EXIT_FAIL, failure_json(&e.to_string())?)),
            }
        }
        Command::Snake => {
            let input: SnakeInput = read_input(common.input.as_deref(), stdin)?;
            let report = check_snake(&input.s, &input.t, input.n, tol).map_err(|e| UsageError(e.to_string()))?;
            let code = verdict(report.overall_pass);
            Ok((code, to_json(&CheckOutput { report, meta })?))
        }
    }
}

/// Partial isometries, polar data, duality, commutativity, classical form.
pub fn certify_chain(pair: &ConjugatePair, tol: f64, seed: u64, meta: Option<Meta>) -> CertifyOutput {
    let mut report = CertificateReport::new(tol);
    report.extend_prefixed("partial isometry: ", &partial_isometry_report(pair, tol));
    let mut error = None;
    match polar_data(pair, tol) {
        Ok((_, polar)) => report.extend_prefixed("polar: ", &polar),
        Err(DerivationError::ConstraintViolation(polar)) => {
            report.extend_prefixed("polar: ", &polar);
            error = Some("polar data invariants violated".to_string());
        }
        Err(e) => error = Some(e.to_string()),
    }
    report.extend_prefixed("duality: ", &certify_duality(pair, tol));
    report.extend_prefixed("commutativity: ", &certify_commutativity(pair.object(), tol));
    let classical = match classical_form(pair.object(), tol, seed) {
        Ok(c) => Some(c),
        Err(e) => {
            error.get_or_insert_with(|| e.to_string());
            None
        }
    };
    CertifyOutput {
        report,
        classical,
        error,
        meta,
    }
}

fn verdict(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn failure_json(message: &str) -> CliResult<String> {
    to_json(&serde_json::json!({ "error": message }))
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| UsageError(format!("cannot serialize output: {e}")))
}

fn read_input<T: DeserializeOwned>(path: Option<&Path>, stdin: &mut dyn Read) -> CliResult<T> {
    let (text, source) = match path {
        Some(p) => (
            fs::read_to_string(p).map_err(|e| UsageError(format!("cannot read {}: {e}", p.display())))?,
            p.display().to_string(),
        ),
        None => {
            let mut s = String::new();
            stdin
                .read_to_string(&mut s)
                .map_err(|e| UsageError(format!("cannot read stdin: {e}")))?;
            (s, "stdin".to_string())
        }
    };
    parse_json(&text).map_err(|e| UsageError(format!("{source}: {e}")))
}

/// Deserializes `text`, naming the JSON path of the first offending value.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { "<root>".to_string() } else { path };
        format!("invalid input at {path}: {}", e.inner())
    })?;
    de.end().map_err(|e| format!("trailing data: {e}"))?;
    Ok(value)
}

fn emit(path: &Option<PathBuf>, json: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => write_file(p, json),
        None => stdout
            .write_all(json.as_bytes())
            .map_err(|e| UsageError(format!("cannot write stdout: {e}"))),
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| UsageError(format!("cannot write {}: {e}", path.display())))
}
