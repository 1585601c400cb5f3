//! Command-line front end: `moments`, `eval` and `check`.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 I/O.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cfderiv::FdConfig;
use crate::check::{run_checks, CheckConfig, CheckReport, Scale};
use crate::matcore::{MatrixFile, PosDefMatrix, SymMatrix, C64};
use crate::moments::{closed_form_report, fd_report, mc_report, quadrature_report, MomentReport};
use crate::riesz::{Riesz, RieszParams, Variant};
use crate::specialfn::WeightVector;
use crate::verify::McConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Io(m) => m,
        }
    }
}

fn invalid(e: impl ToString) -> CliError {
    CliError::Invalid(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "riesz", version, about = "Moments, densities and characteristic functions of Riesz distributions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mean and covariance of vec X.
    Moments(MomentsArgs),
    /// Log-density at a positive-definite X, or the characteristic function at a symmetric T.
    Eval(EvalArgs),
    /// Run the verification suite; exits 1 if any check fails.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MomentMethod {
    ClosedForm,
    Fd,
    Mc,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Density,
    Cf,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json", global = true)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SamplingArgs {
    #[arg(long, env = "RIESZ_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[arg(long, value_parser = parse_variant)]
    pub variant: Variant,
    #[arg(long, allow_negative_numbers = true)]
    pub a: f64,
    /// Comma-separated, non-increasing, non-negative weights; zeros if omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<String>,
    /// Path to a matrix file, or `identity:m`.
    #[arg(long)]
    pub sigma: String,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, value_enum, default_value = "closed-form")]
    pub method: MomentMethod,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, value_enum)]
    pub which: Which,
    /// Matrix file holding X (density) or T (cf).
    #[arg(long)]
    pub point: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long, conflicts_with = "full")]
    pub quick: bool,
    #[arg(long)]
    pub full: bool,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

pub fn parse_kappa(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .map_err(|_| invalid(format!("kappa entry '{t}' is not a number")))
        })
        .collect()
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

pub fn read_matrix_file(path: &Path) -> Result<MatrixFile, CliError> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

pub fn parse_sigma(arg: &str) -> Result<PosDefMatrix, CliError> {
    if let Some(m) = arg.strip_prefix("identity:") {
        let m: usize = m
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad order in '{arg}'")))?;
        if m == 0 {
            return Err(invalid("identity order must be at least 1"));
        }
        return Ok(PosDefMatrix::identity(m));
    }
    let mf = read_matrix_file(Path::new(arg))?;
    let a = mf.to_matrix().map_err(invalid)?;
    PosDefMatrix::from_matrix(a).map_err(|e| invalid(format!("sigma: {e}")))
}

pub fn build_dist(args: &DistArgs) -> Result<Riesz, CliError> {
    let sigma = parse_sigma(&args.sigma)?;
    let k = match &args.kappa {
        Some(s) => parse_kappa(s)?,
        None => vec![0.0; sigma.order()],
    };
    let kappa = WeightVector::new(k).map_err(|e| invalid(format!("kappa: {e}")))?;
    RieszParams::new(args.variant, args.a, kappa, sigma)
        .validate()
        .map_err(invalid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ComplexValue {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityValue {
    pub log_density: f64,
    pub density: f64,
}

fn matrix_csv(out: &mut String, label: &str, m: &MatrixFile) {
    for r in 0..m.rows {
        for c in 0..m.cols {
            out.push_str(&format!("{label},{r},{c},{}\n", m.data[r * m.cols + c]));
        }
    }
}

fn moments_csv(r: &MomentReport) -> String {
    let mut s = String::from("quantity,row,col,value\n");
    matrix_csv(&mut s, "mean", &r.mean);
    matrix_csv(&mut s, "cov", &r.cov);
    if let Some(e) = &r.mean_error {
        matrix_csv(&mut s, "mean_error", e);
    }
    if let Some(e) = &r.cov_error {
        matrix_csv(&mut s, "cov_error", e);
    }
    s
}

fn check_csv(r: &CheckReport) -> String {
    let mut s = String::from("name,status,closed_form,oracle,discrepancy,tolerance,inputs\n");
    for c in &r.checks {
        let status = serde_json::to_value(c.status).expect("enum serializes");
        let inputs = serde_json::to_string(&c.inputs).expect("value serializes").replace('"', "\"\"");
        s.push_str(&format!(
            "{},{},{},{},{},{},\"{}\"\n",
            c.name,
            status.as_str().unwrap_or_default(),
            c.closed_form,
            c.oracle,
            c.discrepancy,
            c.tolerance,
            inputs
        ));
    }
    s
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn emit(output: &OutputArgs, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &output.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to standard output: {e}"))),
    }
}

pub fn cmd_moments(args: &MomentsArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let dist = build_dist(&args.dist)?;
    let report = match args.method {
        MomentMethod::ClosedForm => closed_form_report(&dist),
        MomentMethod::Fd => fd_report(&dist, FdConfig::default()).map_err(invalid)?,
        MomentMethod::Mc => {
            let mut cfg = McConfig::new(args.sampling.seed, args.sampling.n_samples.unwrap_or(200_000));
            cfg.workers = args.sampling.workers;
            mc_report(&dist, &cfg).map_err(invalid)?.0
        }
        MomentMethod::Quadrature => quadrature_report(&dist).map_err(invalid)?,
    };
    let text = match args.output.format {
        Format::Json => to_json(&report),
        Format::Csv => moments_csv(&report),
    };
    emit(&args.output, &text, stdout)?;
    Ok(EXIT_OK)
}

pub fn cmd_eval(args: &EvalArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let dist = build_dist(&args.dist)?;
    let point = read_matrix_file(&args.point)?.to_matrix().map_err(invalid)?;
    let text = match args.which {
        Which::Density => {
            let x = PosDefMatrix::from_matrix(point).map_err(|e| invalid(format!("point: {e}")))?;
            let ld = dist.log_density(&x).map_err(invalid)?;
            let v = DensityValue { log_density: ld, density: ld.exp() };
            match args.output.format {
                Format::Json => to_json(&v),
                Format::Csv => format!("log_density,density\n{},{}\n", v.log_density, v.density),
            }
        }
        Which::Cf => {
            let t = SymMatrix::new(point).map_err(|e| invalid(format!("point: {e}")))?;
            let v = ComplexValue::from(dist.char_fn(&t).map_err(invalid)?);
            match args.output.format {
                Format::Json => to_json(&v),
                Format::Csv => format!("re,im\n{},{}\n", v.re, v.im),
            }
        }
    };
    emit(&args.output, &text, stdout)?;
    Ok(EXIT_OK)
}

pub fn cmd_check(args: &CheckArgs, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let scale = if args.full { Scale::Full } else { Scale::Quick };
    let mut cfg = CheckConfig::new(args.sampling.seed, scale);
    cfg.n_samples = args.sampling.n_samples;
    cfg.workers = args.sampling.workers;
    cfg.inject_fault = args.inject_fault;
    if matches!(cfg.n_samples, Some(n) if n < 1000) {
        return Err(invalid("--n-samples must be at least 1000"));
    }
    if cfg.workers == Some(0) {
        return Err(invalid("--workers must be positive"));
    }
    let report = run_checks(&cfg);
    let text = match args.output.format {
        Format::Json => to_json(&report),
        Format::Csv => check_csv(&report),
    };
    emit(&args.output, &text, stdout)?;
    Ok(if report.ok() { EXIT_OK } else { EXIT_VERIFY })
}

/// Parses `args` (including the program name) and runs the command. Errors
/// go to `stderr`; the return value is the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Moments(a) => cmd_moments(a, stdout),
        Command::Eval(a) => cmd_eval(a, stdout),
        Command::Check(a) => cmd_check(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}
