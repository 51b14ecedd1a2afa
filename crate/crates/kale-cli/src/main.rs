//! `kale`: command-line certificates for the radial Kahler metric family.
//!
//! Three commands share one report document:
//! - `verify` runs a named check suite and judges each defect,
//! - `profile` tabulates the coframe profile, compactified scalar
//!   curvature, and conformal factor along the radial coordinate,
//! - `regimes` classifies cone parameters by their Einstein rescaling.
//!
//! Exit status: 0 when every check passes, 1 when any check fails, 2 on
//! configuration errors (bad flags, values outside the charts).

mod report;
mod suites;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};

use kale_core::einstein::{regime_report, scalar_curvature_hat};
use kale_core::lebrun::CoframeProfile;

use report::{Check, ProfileRow, ReportDocument, RunConfig, RunInfo};
use suites::{run_suite, Suite};

#[derive(Parser)]
#[command(
    name = "kale",
    version,
    about = "certificates and tables for a family of radial Kahler metrics",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and report each check
    Verify(VerifyArgs),
    /// Tabulate profile, compactified scalar curvature, and conformal factor
    Profile(ProfileArgs),
    /// Classify cone parameters by their Einstein rescaling
    Regimes(RegimesArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Check suite to run
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    /// Cone parameters for the parameterized checks (comma-separated);
    /// defaults to each suite's own sweep
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    beta: Vec<f64>,
    /// Seed of the master sample generator
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ProfileArgs {
    /// Cone parameter of the family member
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    /// Radial grid as lo:hi:count (inclusive endpoints)
    #[arg(long, value_parser = parse_range)]
    r: RangeSpec,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct RegimesArgs {
    /// Cone parameters to classify (comma-separated)
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    beta: Vec<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the report here instead of stdout (the KALE_OUTPUT_DIR
    /// environment variable names a default directory)
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report format; csv only applies to profile tables
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Omit the wall-clock block so identical runs match byte for byte
    #[arg(long)]
    no_timestamp: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }

    fn extension(self) -> &'static str {
        self.name()
    }
}

#[derive(Clone, Copy, Debug)]
struct RangeSpec {
    lo: f64,
    hi: f64,
    count: usize,
}

fn parse_range(s: &str) -> Result<RangeSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected lo:hi:count".to_string());
    }
    let lo: f64 = parts[0].parse().map_err(|_| format!("bad lower endpoint {:?}", parts[0]))?;
    let hi: f64 = parts[1].parse().map_err(|_| format!("bad upper endpoint {:?}", parts[1]))?;
    let count: usize = parts[2].parse().map_err(|_| format!("bad count {:?}", parts[2]))?;
    Ok(RangeSpec { lo, hi, count })
}

impl RangeSpec {
    fn points(&self) -> Vec<f64> {
        (0..self.count)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// A configuration error: flag name plus message, printed as a usage error.
struct ConfigError {
    flag: &'static str,
    message: String,
}

impl ConfigError {
    fn new(flag: &'static str, message: impl Into<String>) -> ConfigError {
        ConfigError { flag, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);

    let result = match &cli.command {
        Command::Verify(args) => run_verify(args),
        Command::Profile(args) => run_profile(args),
        Command::Regimes(args) => run_regimes(args),
    };

    let (mut doc, output_args, command_name) = match result {
        Ok(parts) => parts,
        Err(e) => {
            eprintln!("config error: --{}: {}", e.flag, e.message);
            return ExitCode::from(2);
        }
    };

    doc.sync_tolerances();
    if !output_args.no_timestamp {
        doc.run = Some(RunInfo {
            timestamp,
            duration_ms: started.elapsed().as_millis() as u64,
        });
    }

    match emit(&mut doc, &output_args, command_name) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("config error: --{}: {}", e.flag, e.message);
            return ExitCode::from(2);
        }
    }

    if doc.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn validate_betas(betas: &[f64], required: bool) -> Result<(), ConfigError> {
    if required && betas.is_empty() {
        return Err(ConfigError::new("beta", "at least one cone parameter is required"));
    }
    for &b in betas {
        if !(b > 0.0 && b.is_finite()) {
            return Err(ConfigError::new(
                "beta",
                format!("cone parameters must be positive and finite (got {b})"),
            ));
        }
    }
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> Result<(ReportDocument, OutputArgs, &'static str), ConfigError> {
    validate_betas(&args.beta, false)?;
    if args.output.format == Format::Csv {
        return Err(ConfigError::new("format", "csv is only available for profile tables"));
    }
    let outcome = run_suite(args.suite, &args.beta, args.seed);
    let mut doc = ReportDocument::new(RunConfig {
        command: "verify".to_string(),
        suite: Some(args.suite.name().to_string()),
        beta: args.beta.clone(),
        seed: Some(args.seed),
        r_range: None,
        grid: outcome.grid,
        tolerances: BTreeMap::new(),
        format: args.output.format.name().to_string(),
        output: None,
    });
    doc.checks = outcome.checks;
    Ok((doc, args.output.clone_args(), "verify"))
}

fn run_profile(args: &ProfileArgs) -> Result<(ReportDocument, OutputArgs, &'static str), ConfigError> {
    if !(args.beta > 0.0 && args.beta.is_finite()) {
        return Err(ConfigError::new(
            "beta",
            format!("cone parameter must be positive and finite (got {})", args.beta),
        ));
    }
    let range = args.r;
    if !(range.lo.is_finite() && range.hi.is_finite()) {
        return Err(ConfigError::new("r", "endpoints must be finite"));
    }
    if range.lo <= 1.0 {
        return Err(ConfigError::new(
            "r",
            format!("the chart needs r > 1 (lower endpoint {})", range.lo),
        ));
    }
    if range.hi <= range.lo {
        return Err(ConfigError::new("r", "upper endpoint must exceed the lower endpoint"));
    }
    if range.count < 2 {
        return Err(ConfigError::new("r", "at least two grid points are required"));
    }

    let mut doc = ReportDocument::new(RunConfig {
        command: "profile".to_string(),
        suite: None,
        beta: vec![args.beta],
        seed: None,
        r_range: Some([range.lo, range.hi]),
        grid: BTreeMap::from([("profile-points".to_string(), range.count as u64)]),
        tolerances: BTreeMap::new(),
        format: args.output.format.name().to_string(),
        output: None,
    });

    let profile = CoframeProfile::new(args.beta);
    let mut rows = Vec::with_capacity(range.count);
    let mut failure: Option<String> = None;
    match profile {
        Ok(profile) => {
            for r in range.points() {
                let row = CoframeProfile::v(&profile, r)
                    .map_err(|e| e.to_string())
                    .and_then(|v| {
                        let r_hat =
                            scalar_curvature_hat(args.beta, r).map_err(|e| e.to_string())?;
                        Ok(ProfileRow { r, v: v.value(), r_hat, u: 1.0 / (r * r) })
                    });
                match row {
                    Ok(row) => rows.push(row),
                    Err(e) => {
                        failure = Some(format!("r = {r}: {e}"));
                        break;
                    }
                }
            }
        }
        Err(e) => failure = Some(e.to_string()),
    }
    if let Some(diagnostic) = failure {
        doc.checks.push(Check::aborted("profile-evaluation", 0.0, diagnostic));
    }
    doc.profile = Some(rows);
    Ok((doc, args.output.clone_args(), "profile"))
}

fn run_regimes(args: &RegimesArgs) -> Result<(ReportDocument, OutputArgs, &'static str), ConfigError> {
    validate_betas(&args.beta, true)?;
    if args.output.format == Format::Csv {
        return Err(ConfigError::new("format", "csv is only available for profile tables"));
    }
    let mut doc = ReportDocument::new(RunConfig {
        command: "regimes".to_string(),
        suite: None,
        beta: args.beta.clone(),
        seed: None,
        r_range: None,
        grid: BTreeMap::new(),
        tolerances: BTreeMap::new(),
        format: args.output.format.name().to_string(),
        output: None,
    });
    let mut regimes = Vec::with_capacity(args.beta.len());
    for &beta in &args.beta {
        match regime_report(beta) {
            Ok(row) => regimes.push(row),
            Err(e) => doc.checks.push(Check::aborted(
                "regime-classification",
                0.0,
                format!("beta = {beta}: {e}"),
            )),
        }
    }
    doc.regimes = Some(regimes);
    Ok((doc, args.output.clone_args(), "regimes"))
}

impl OutputArgs {
    fn clone_args(&self) -> OutputArgs {
        OutputArgs {
            output: self.output.clone(),
            format: self.format,
            no_timestamp: self.no_timestamp,
        }
    }
}

/// Renders the document and routes it: explicit `--output` path first, then
/// a `KALE_OUTPUT_DIR` default named after the command, stdout otherwise.
fn emit(
    doc: &mut ReportDocument,
    args: &OutputArgs,
    command_name: &str,
) -> Result<(), ConfigError> {
    let destination: Option<PathBuf> = match &args.output {
        Some(path) => Some(path.clone()),
        None => std::env::var_os("KALE_OUTPUT_DIR").map(|dir| {
            PathBuf::from(dir).join(format!("{command_name}.{}", args.format.extension()))
        }),
    };
    if let Some(path) = &destination {
        doc.config.output = Some(path.display().to_string());
    }

    let text = match args.format {
        Format::Json => doc.to_canonical_json(),
        Format::Csv => doc.profile_csv().ok_or_else(|| {
            ConfigError::new("format", "csv is only available for profile tables")
        })?,
    };

    match destination {
        Some(path) => {
            std::fs::write(&path, text).map_err(|e| {
                ConfigError::new("output", format!("cannot write {}: {e}", path.display()))
            })?;
            eprintln!("report written to {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            stdout.lock().write_all(text.as_bytes()).expect("stdout is writable");
        }
    }
    Ok(())
}
