use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use spectral_stieltjes::family::{sample_grid, verify_axioms, AxiomReport, FamilyFile};
use spectral_stieltjes::models::{run_suite, ModelKind, SuiteConfig, SuiteReport};

#[derive(Parser)]
#[command(name = "spectral-stieltjes", version, about = "Seeded verification suite for Stieltjes integrals against spectral families")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite.
    Verify(SuiteArgs),
    /// Run the Fourier multiplier line-model checks.
    LineDemo(SuiteArgs),
    /// Run the torus non-representability checks.
    TorusDemo(SuiteArgs),
    /// Check the spectral-family axioms for a family file.
    Axioms(AxiomArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SuiteArgs {
    /// JSON suite configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Threshold applied to every check.
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct AxiomArgs {
    /// Family file: `{"schema_version": 1, "jumps": [{"lambda": …, "delta": [[[re, im], …], …]}]}`.
    family: PathBuf,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Sample points between the padded ends of the jump range.
    #[arg(long, default_value_t = 201)]
    samples: usize,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(args) => suite(args, None),
        Command::LineDemo(args) => suite(args, Some(ModelKind::Line)),
        Command::TorusDemo(args) => suite(args, Some(ModelKind::Torus)),
        Command::Axioms(args) => axioms(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(args: &SuiteArgs, only: Option<ModelKind>) -> Result<SuiteConfig, String> {
    let mut config = match &args.config {
        Some(path) => {
            let text = read(path)?;
            SuiteConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => SuiteConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.tol.is_some() {
        config.tol = args.tol;
    }
    if let Some(kind) = only {
        config.models = vec![kind];
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn suite(args: SuiteArgs, only: Option<ModelKind>) -> Result<bool, String> {
    let config = load_config(&args, only)?;
    let report = run_suite(&config).map_err(|e| e.to_string())?;
    let text = match args.output.format {
        Format::Json => report.to_json().map_err(|e| e.to_string())? + "\n",
        Format::Csv => suite_csv(&report)?,
    };
    emit(&args.output, &text)?;
    summarize(&report);
    Ok(report.all_passed)
}

fn suite_csv(report: &SuiteReport) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &report.checks {
        w.serialize(c).map_err(|e| e.to_string())?;
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn summarize(report: &SuiteReport) {
    let passed = report.checks.iter().filter(|c| c.passed).count();
    eprintln!("{passed}/{} checks passed (seed {})", report.checks.len(), report.seed);
    for c in report.failures() {
        eprintln!("FAILED {}: {}", c.name, c.detail);
    }
}

fn axioms(args: AxiomArgs) -> Result<bool, String> {
    let text = read(&args.family)?;
    let family = FamilyFile::from_json(&text)
        .and_then(|f| f.to_family())
        .map_err(|e| format!("{}: {e}", args.family.display()))?;
    let breakpoints = family.breakpoints().to_vec();
    let (lo, hi) = match (breakpoints.first(), breakpoints.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0.0, 0.0),
    };
    let pad = 1.0f64.max(0.1 * (hi - lo));
    let grid = sample_grid(lo - pad, hi + pad, args.samples.max(2), &breakpoints);
    let report = verify_axioms(&family.into(), &grid, args.tol).map_err(|e| e.to_string())?;
    let text = match args.output.format {
        Format::Json => axioms_json(&report)? + "\n",
        Format::Csv => axioms_csv(&report)?,
    };
    emit(&args.output, &text)?;
    eprintln!(
        "{} ({} sample points)",
        if report.all_passed() { "all axioms hold" } else { "axioms violated" },
        report.grid_size
    );
    Ok(report.all_passed())
}

fn axioms_json(report: &AxiomReport) -> Result<String, String> {
    let value = json!({
        "all_passed": report.all_passed(),
        "grid_size": report.grid_size,
        "sup_norm": report.sup_norm,
        "checks": report.checks,
    });
    serde_json::to_string_pretty(&value).map_err(|e| e.to_string())
}

fn axioms_csv(report: &AxiomReport) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &report.checks {
        w.serialize(c).map_err(|e| e.to_string())?;
    }
    String::from_utf8(w.into_inner().map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(output: &Output, text: &str) -> Result<(), String> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}
