//! Command implementations behind the `shellquad` binary.
//!
//! Every command produces one report: a JSON document embedding the run
//! manifest, or a CSV shell table for `singularity-scan --format csv`.
//! Numeric payloads depend only on the flags and the seed.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::algebra::{CutoffProfile, EnergyMultiplier, LegFunction, ProductTerm, TestFunctionSequence};
use crate::kinematics::{sample_singular_ray, ShellConfig};
use crate::quadrature::{self, annulus_scan, exponent_fit, DeltaFunctional, QuadratureEstimate, Verdict};
use crate::tolerance;
use crate::vev::{scalar_4pt_lsz, tn_eval, AmplitudeRequest, ConnectedTerm, LegSign, ShellAdapter, SignConvention};
use crate::Error;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const SHELL_CSV_HEADER: &str = "level,R_lo,R_hi,integral,stderr";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_INCONCLUSIVE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "shellquad", version, about = "Mass-shell delta functionals: evaluation and singularity diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Exit with code 4 when a required verdict is inconclusive.
    #[arg(long, global = true)]
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum gradient norm over random draws for a mixed-mass configuration.
    GradientCheck(GradientArgs),
    /// Dyadic shell scan around the singular cone of an all-massless configuration.
    SingularityScan(ScanArgs),
    /// Evaluate a connected term on a test-function sequence.
    Evaluate(EvaluateArgs),
    /// Four-leg LSZ amplitude.
    Lsz4(LszArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GradientArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    /// Number of positive-sign legs (default n/2).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub masses: Vec<f64>,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub draws: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    #[arg(long)]
    pub k: Option<usize>,
    /// Must be all zero when given.
    #[arg(long, value_delimiter = ',')]
    pub masses: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 5)]
    pub levels: usize,
    /// Samples per shell.
    #[arg(long, default_value_t = quadrature::DEFAULT_SHELL_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// Connected-term JSON file.
    #[arg(long)]
    pub term: PathBuf,
    /// Test-function sequence JSON file.
    #[arg(long)]
    pub sequence: PathBuf,
    #[arg(long, default_value_t = quadrature::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LszArgs {
    /// Amplitude request JSON file.
    #[arg(long)]
    pub states: PathBuf,
    /// Overrides the budget in the states file.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Overrides the seed in the states file.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Connected-term file: the term plus an optional cutoff profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermFile {
    #[serde(flatten)]
    pub term: ConnectedTerm,
    #[serde(default)]
    pub cutoff: CutoffProfile,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub seed: u64,
    pub tool_version: String,
    pub config_hash: String,
    /// Excluded from reproducibility comparisons.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub manifest: RunManifest,
    pub result: Value,
}

/// A finished command: exit code and the report text (empty on usage errors).
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub payload: String,
    pub message: Option<String>,
}

impl Outcome {
    fn failure(exit_code: i32, message: impl Into<String>) -> Self {
        Outcome { exit_code, payload: String::new(), message: Some(message.into()) }
    }
}

pub fn config_hash(command: &str, params: &Value) -> String {
    let canonical = serde_json::to_string(&json!({ "command": command, "params": params })).unwrap_or_default();
    let digest = Sha256::digest(canonical.as_bytes());
    hex::encode(&digest[..8])
}

fn estimate_json(est: &QuadratureEstimate) -> Value {
    json!({
        "value": [est.value.re, est.value.im],
        "stderr": est.stderr,
        "samples": est.samples,
        "excluded_radius": est.excluded_radius,
        "flag": est.flag,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid {}: {e}", path.display()))
}

fn default_k(n: usize, k: Option<usize>) -> usize {
    k.unwrap_or(n / 2)
}

struct Finished {
    exit_code: i32,
    result: Value,
    csv: Option<String>,
}

/// Runs one parsed command line.
pub fn run(cli: &Cli) -> Outcome {
    let start = Instant::now();
    let (name, params, seed, finished) = match &cli.command {
        Command::GradientCheck(a) => ("gradient-check", json!(a), a.seed, gradient_check(a)),
        Command::SingularityScan(a) => ("singularity-scan", json!(a), a.seed, singularity_scan(a, cli.strict)),
        Command::Evaluate(a) => ("evaluate", json!(a), a.seed, evaluate(a)),
        Command::Lsz4(a) => ("lsz4", json!(a), a.seed.unwrap_or(0), lsz4(a)),
    };
    let finished = match finished {
        Ok(f) => f,
        Err(outcome) => return outcome,
    };
    let payload = match (cli.format, finished.csv) {
        (Format::Csv, Some(csv)) => csv,
        (Format::Csv, None) => return Outcome::failure(EXIT_USAGE, format!("{name} has no CSV output")),
        (Format::Json, _) => {
            let report = Report {
                schema_version: REPORT_SCHEMA_VERSION,
                manifest: RunManifest {
                    command: name.to_string(),
                    config_hash: config_hash(name, &params),
                    params,
                    seed,
                    tool_version: env!("CARGO_PKG_VERSION").to_string(),
                    wall_time_s: start.elapsed().as_secs_f64(),
                },
                result: finished.result,
            };
            let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
            text.push('\n');
            text
        }
    };
    Outcome { exit_code: finished.exit_code, payload, message: None }
}

fn gradient_check(a: &GradientArgs) -> Result<Finished, Outcome> {
    let k = default_k(a.n, a.k);
    let config =
        ShellConfig::new(a.n, a.d, k, a.masses.clone()).map_err(|e| Outcome::failure(EXIT_USAGE, e.to_string()))?;
    if !config.is_mixed() {
        return Err(Outcome::failure(EXIT_PRECONDITION, "precondition: mixed masses required"));
    }
    let report = quadrature::mixed_mass_min_gradient(&config, a.draws as usize, a.seed)
        .map_err(|e| Outcome::failure(EXIT_PRECONDITION, e.to_string()))?;
    let passed = report.min_norm > tolerance::GRADIENT_FLOOR && report.min_norm >= report.analytic_floor;
    Ok(Finished {
        exit_code: if passed { EXIT_OK } else { EXIT_CHECK_FAILED },
        result: json!({
            "n": a.n, "d": a.d, "k": k, "masses": a.masses,
            "draws": report.draws,
            "min_norm": report.min_norm,
            "analytic_floor": report.analytic_floor,
            "threshold": tolerance::GRADIENT_FLOOR,
            "passed": passed,
        }),
        csv: None,
    })
}

/// Rotation-invariant integrand `prod_j h(omega_j) exp(-|p_j|^2 / 2)` used by scans.
pub fn scan_integrand(n: usize, d: usize, k: usize) -> crate::Result<ShellAdapter> {
    let leg = LegFunction::gaussian(vec![0.0; d - 1], 1.0).with_emult(EnergyMultiplier::default());
    let mut seq = TestFunctionSequence::zero(d);
    seq.push_term(ProductTerm { coeff: Complex64::new(1.0, 0.0), legs: vec![leg; n] })?;
    let signs: Vec<LegSign> = (0..n).map(|j| if j < k { LegSign::Minus } else { LegSign::Plus }).collect();
    Ok(ShellAdapter::new(seq, &signs, SignConvention::Reflected))
}

/// Energy seeds for the scanned ray. Unequal energies keep `dP/d omega_1`
/// away from zero on back-to-back pairs, which otherwise gives the shell
/// estimator an infinite-variance tail.
pub fn scan_energy_seeds(n: usize) -> Vec<f64> {
    (0..n).map(|j| 1.0 + 1.0 * j as f64).collect()
}

fn singularity_scan(a: &ScanArgs, strict: bool) -> Result<Finished, Outcome> {
    let usage = |e: Error| Outcome::failure(EXIT_USAGE, e.to_string());
    let k = default_k(a.n, a.k);
    let masses = a.masses.clone().unwrap_or_else(|| vec![0.0; a.n]);
    let config = ShellConfig::new(a.n, a.d, k, masses).map_err(usage)?;
    if !config.all_massless() {
        return Err(Outcome::failure(EXIT_PRECONDITION, "precondition: all masses must be zero"));
    }
    if a.levels == 0 || a.budget == 0 {
        return Err(Outcome::failure(EXIT_USAGE, "levels and budget must be positive"));
    }
    let mut direction = vec![0.0; a.d - 1];
    direction[0] = 1.0;
    let ray = sample_singular_ray(&config, &direction, &scan_energy_seeds(a.n)).map_err(usage)?;
    let df = DeltaFunctional::new(config, Arc::new(scan_integrand(a.n, a.d, k).map_err(usage)?));
    let scan = annulus_scan(&df, &ray, a.eps, a.levels, a.budget, a.seed).map_err(usage)?;
    let fit = exponent_fit(&scan);
    let exit_code = if strict && fit.verdict == Verdict::Inconclusive { EXIT_INCONCLUSIVE } else { EXIT_OK };
    let mut csv = String::from(SHELL_CSV_HEADER);
    csv.push('\n');
    for s in &scan.shells {
        csv.push_str(&format!("{},{:e},{:e},{:e},{:e}\n", s.level, s.r_lo, s.r_hi, s.integral, s.stderr));
    }
    let predicted = (a.d as i64 - 2) * (a.n as i64 - 2) - 2;
    Ok(Finished {
        exit_code,
        result: json!({
            "n": a.n, "d": a.d, "k": k,
            "ray": scan.ray,
            "eps": scan.eps,
            "shells": scan.shells,
            "ratios": scan.ratios(),
            "exponent": fit.exponent,
            "exponent_stderr": fit.stderr,
            "predicted_exponent": predicted,
            "verdict": fit.verdict.as_str(),
        }),
        csv: Some(csv),
    })
}

fn evaluate(a: &EvaluateArgs) -> Result<Finished, Outcome> {
    let usage = |e: String| Outcome::failure(EXIT_USAGE, e);
    let term: TermFile = read_json(&a.term).map_err(usage)?;
    let seq: TestFunctionSequence = read_json(&a.sequence).map_err(usage)?;
    let est = tn_eval(&term.term, &seq, &term.cutoff, a.budget, a.seed).map_err(|e| usage(e.to_string()))?;
    let mut result = estimate_json(&est);
    result["seed"] = json!(a.seed);
    result["n"] = json!(term.term.n());
    result["signs"] = json!(term.term.signs);
    result["structural_zero"] = json!(term.term.is_structural_zero());
    Ok(Finished { exit_code: EXIT_OK, result, csv: None })
}

fn lsz4(a: &LszArgs) -> Result<Finished, Outcome> {
    let usage = |e: String| Outcome::failure(EXIT_USAGE, e);
    let text =
        std::fs::read_to_string(&a.states).map_err(|e| usage(format!("cannot read {}: {e}", a.states.display())))?;
    let mut req: AmplitudeRequest =
        serde_json::from_str(&text).map_err(|e| usage(format!("invalid {}: {e}", a.states.display())))?;
    if let Some(b) = a.budget {
        req.budget = b;
    }
    if let Some(s) = a.seed {
        req.seed = s;
    }
    let est = scalar_4pt_lsz(&req).map_err(|e| usage(e.to_string()))?;
    let states = serde_json::to_string(&(&req.in_states, &req.out_states)).unwrap_or_default();
    let mut result = estimate_json(&est);
    result["seed"] = json!(req.seed);
    result["states_hash"] = json!(hex::encode(&Sha256::digest(states.as_bytes())[..8]));
    result["convention"] = json!({
        "sign_adapter": req.convention.as_str(),
        "two_point_normalization": "1/(2 omega)",
    });
    Ok(Finished { exit_code: EXIT_OK, result, csv: None })
}
