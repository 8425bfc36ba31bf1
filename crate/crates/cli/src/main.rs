//! `mchr-lab`: exact and simulated analysis of dependent-lifetime models.
//!
//! Subcommands ingest JSON model/system files, run the analytic kernels or
//! the seeded samplers, and emit versioned JSON (or CSV curves) on stdout.
//! Exit codes: 0 success, 2 malformed input or failed validation, 3
//! numerical non-convergence, 64 usage errors. `MCHR_THREADS` caps the
//! worker pool; outputs are independent of the worker count.

mod report;
mod wire;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use mchr_lab::kernel::{self, KernelError};
use mchr_lab::precedence::{self, PrecedenceError};
use mchr_lab::quad::QuadratureError;
use mchr_lab::reliability;
use mchr_lab::simulate;
use mchr_lab::subset::SubsetMask;
use mchr_lab::{KernelConfig, Model};

use report::{classification_value, document, indexed_map, mask_value, method_value, num, num_str};

const EXIT_INVALID: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "mchr-lab", version, about = "Dependent lifetimes via multivariate conditional hazard rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file against every structural invariant.
    Validate(ValidateArgs),
    /// Survival curve and hit probabilities of the minimum over a subset.
    Min(MinArgs),
    /// Pairwise stochastic-precedence matrix and variable classification.
    Precedence(PrecedenceArgs),
    /// Scan for precedence cycles and aggregation/marginalization reversals.
    Paradox(ParadoxArgs),
    /// Seeded Monte Carlo estimates of subset quantities.
    Simulate(SimulateArgs),
    /// Per-path-set importance of components of a coherent system.
    Importance(ImportanceArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct CommonArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Absolute tolerance for quadrature and uniformization.
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Output format; csv is available for tabular payloads (min, simulate).
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct MinArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Subset A as comma-joined 1-based indices; defaults to all variables.
    #[arg(long)]
    subset: Option<String>,
    /// Time grid as comma-joined values; defaults to 21 points down to
    /// survival 1e-3.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
struct PrecedenceArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ParadoxArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Largest subset size the scan enumerates; defaults to n.
    #[arg(long)]
    max_subset_size: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Subset A as comma-joined 1-based indices; defaults to all variables.
    #[arg(long)]
    subset: Option<String>,
    /// Number of Monte Carlo samples.
    #[arg(long)]
    n_samples: u64,
    /// RNG seed; estimates are bit-reproducible given the seed.
    #[arg(long)]
    seed: u64,
    /// Optional survival grid as comma-joined times.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Args)]
struct ImportanceArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// System file (JSON) with minimal path sets.
    #[arg(long)]
    system: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self { code: EXIT_INVALID, message: message.into() }
    }
}

impl From<KernelError> for Failure {
    fn from(e: KernelError) -> Self {
        let code = match &e {
            KernelError::Quadrature(QuadratureError::NonConvergence { .. })
            | KernelError::UniformizationOverflow
            | KernelError::SurvivalUnderflow => EXIT_NUMERIC,
            _ => EXIT_INVALID,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<PrecedenceError> for Failure {
    fn from(e: PrecedenceError) -> Self {
        match e {
            PrecedenceError::Kernel(k) => k.into(),
            other => Failure::invalid(other.to_string()),
        }
    }
}

impl From<reliability::ReliabilityError> for Failure {
    fn from(e: reliability::ReliabilityError) -> Self {
        match e {
            reliability::ReliabilityError::Kernel(k) => k.into(),
            other => Failure::invalid(other.to_string()),
        }
    }
}

impl From<mchr_lab::simulate::SimulateError> for Failure {
    fn from(e: mchr_lab::simulate::SimulateError) -> Self {
        Failure::invalid(e.to_string())
    }
}

struct Output {
    body: String,
    code: u8,
}

fn main() -> ExitCode {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (out_path, result) = match cli.command {
        Command::Validate(args) => (args.common.out.clone(), cmd_validate(&args)),
        Command::Min(args) => (args.common.out.clone(), cmd_min(&args)),
        Command::Precedence(args) => (args.common.out.clone(), cmd_precedence(&args)),
        Command::Paradox(args) => (args.common.out.clone(), cmd_paradox(&args)),
        Command::Simulate(args) => (args.common.out.clone(), cmd_simulate(&args)),
        Command::Importance(args) => (args.common.out.clone(), cmd_importance(&args)),
    };
    match result {
        Ok(output) => {
            if let Some(path) = out_path {
                if let Err(e) = std::fs::write(&path, output.body.as_bytes()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(EXIT_INVALID);
                }
            } else {
                let mut stdout = std::io::stdout().lock();
                let _ = stdout.write_all(output.body.as_bytes());
                let _ = stdout.flush();
            }
            ExitCode::from(output.code)
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("MCHR_THREADS") {
        if let Ok(threads) = raw.trim().parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
            }
        }
    }
}

fn json_output(value: &Value, code: u8) -> Output {
    let mut body = serde_json::to_string_pretty(value).expect("report serialization");
    body.push('\n');
    Output { body, code }
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))
}

fn parse_model(path: &Path) -> Result<wire::ParsedModel, Failure> {
    let text = read_file(path)?;
    let file: wire::ModelFile = serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    Ok(file.build())
}

/// Loads a model and insists it passes validation; used by every command
/// except `validate` itself.
fn load_valid_model(path: &Path) -> Result<Model, Failure> {
    let parsed = parse_model(path)?;
    let mut violations = parsed.violations;
    if let Some(model) = parsed.model {
        violations.extend(model.validate().violations);
        if violations.is_empty() {
            return Ok(model);
        }
    }
    let listing: Vec<String> = violations.iter().map(|v| format!("{v}")).collect();
    Err(Failure::invalid(format!(
        "{} fails validation:\n  {}",
        path.display(),
        listing.join("\n  ")
    )))
}

fn config_for(common: &CommonArgs) -> KernelConfig {
    let mut cfg = KernelConfig::default();
    if let Some(tol) = common.abs_tol {
        cfg.quad.abs_tol = tol;
        cfg.quad.rel_tol = tol * 10.0;
        cfg.uniformization_tol = tol;
    }
    cfg
}

fn parse_subset(raw: &Option<String>, n: usize) -> Result<SubsetMask, Failure> {
    match raw {
        None => Ok(SubsetMask::full(n)),
        Some(text) => {
            let mut indices = Vec::new();
            for part in text.split(',') {
                let idx: usize = part.trim().parse().map_err(|_| {
                    Failure::invalid(format!("--subset '{text}' is not a comma-joined index list"))
                })?;
                indices.push(idx);
            }
            SubsetMask::from_indices(indices, n)
                .map_err(|e| Failure::invalid(format!("--subset '{text}': {e}")))
        }
    }
}

fn parse_grid(raw: &str) -> Result<Vec<f64>, Failure> {
    let mut grid = Vec::new();
    for part in raw.split(',') {
        let t: f64 = part
            .trim()
            .parse()
            .map_err(|_| Failure::invalid(format!("--grid '{raw}' is not a comma-joined time list")))?;
        if !t.is_finite() || t < 0.0 {
            return Err(Failure::invalid("--grid times must be finite and non-negative"));
        }
        grid.push(t);
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Failure::invalid("--grid times must be non-decreasing"));
    }
    Ok(grid)
}

fn reject_csv(common: &CommonArgs, command: &str) -> Result<(), Failure> {
    if common.format == Format::Csv {
        return Err(Failure {
            code: EXIT_USAGE,
            message: format!("--format csv is not available for '{command}'"),
        });
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<Output, Failure> {
    reject_csv(&args.common, "validate")?;
    let parsed = parse_model(&args.common.model)?;
    let mut violations = parsed.violations;
    if let Some(model) = &parsed.model {
        violations.extend(model.validate().violations);
    }
    let valid = violations.is_empty();
    let mut body = Map::new();
    body.insert("valid".into(), Value::from(valid));
    body.insert(
        "violations".into(),
        Value::Array(
            violations
                .iter()
                .map(|v| {
                    let mut m = Map::new();
                    m.insert("path".into(), Value::String(v.path.clone()));
                    m.insert("message".into(), Value::String(v.message.clone()));
                    Value::Object(m)
                })
                .collect(),
        ),
    );
    let code = if valid { 0 } else { EXIT_INVALID };
    Ok(json_output(&document("validate", body), code))
}

fn cmd_min(args: &MinArgs) -> Result<Output, Failure> {
    let model = load_valid_model(&args.common.model)?;
    let cfg = config_for(&args.common);
    let subset = parse_subset(&args.subset, model.n())?;
    if subset.is_empty() {
        return Err(Failure::invalid("--subset must not be empty"));
    }
    let grid = match &args.grid {
        Some(raw) => parse_grid(raw)?,
        None => {
            let horizon = kernel::survival_horizon(&model, subset, 1e-3, &cfg)?;
            (0..=20).map(|k| horizon * k as f64 / 20.0).collect()
        }
    };
    let rep = kernel::min_report(&model, subset, &grid, &cfg)?;
    if args.common.format == Format::Csv {
        let mut csv = String::from("t,survival\n");
        for (t, p) in &rep.survival {
            csv.push_str(&format!("{},{}\n", num_str(*t), num_str(*p)));
        }
        return Ok(Output { body: csv, code: 0 });
    }
    let mut body = Map::new();
    body.insert("subset".into(), mask_value(rep.subset));
    body.insert("method".into(), method_value(rep.method));
    body.insert("abs_error_bound".into(), num(rep.abs_error_bound));
    body.insert(
        "alphas".into(),
        indexed_map(rep.alphas.iter().map(|(j, a)| (j.get(), num(*a)))),
    );
    body.insert(
        "survival".into(),
        Value::Array(
            rep.survival
                .iter()
                .map(|(t, p)| {
                    let mut m = Map::new();
                    m.insert("t".into(), num(*t));
                    m.insert("p".into(), num(*p));
                    Value::Object(m)
                })
                .collect(),
        ),
    );
    Ok(json_output(&document("min", body), 0))
}

fn cmd_precedence(args: &PrecedenceArgs) -> Result<Output, Failure> {
    reject_csv(&args.common, "precedence")?;
    let model = load_valid_model(&args.common.model)?;
    let cfg = config_for(&args.common);
    let matrix = precedence::sp_matrix(&model, &cfg)?;
    let classification = precedence::classify(&model, &cfg, precedence::MAX_SCAN_VARIABLES)?;
    let n = model.n();
    let mut rows = Vec::with_capacity(n);
    for i in 1..=n {
        let mut row = Vec::with_capacity(n);
        for j in 1..=n {
            let iv = model.index(i).map_err(KernelError::from)?;
            let jv = model.index(j).map_err(KernelError::from)?;
            row.push(match matrix.get(iv, jv) {
                Some(p) => num(p),
                None => Value::Null,
            });
        }
        rows.push(Value::Array(row));
    }
    let mut body = Map::new();
    body.insert("n".into(), Value::from(n));
    body.insert("sp_matrix".into(), Value::Array(rows));
    body.insert("classification".into(), classification_value(&classification));
    Ok(json_output(&document("precedence", body), 0))
}

fn cmd_paradox(args: &ParadoxArgs) -> Result<Output, Failure> {
    reject_csv(&args.common, "paradox")?;
    let model = load_valid_model(&args.common.model)?;
    let cfg = config_for(&args.common);
    let cap = args.max_subset_size.unwrap_or(model.n());
    let report = precedence::find_aggregation_paradoxes(&model, cap, &cfg)?;
    let classification = precedence::classify(&model, &cfg, precedence::MAX_SCAN_VARIABLES)?;
    let mut body = Map::new();
    body.insert("max_subset_size".into(), Value::from(cap.min(model.n())));
    body.insert(
        "cycles".into(),
        Value::Array(
            report
                .cycles
                .iter()
                .map(|(i, j, k)| Value::Array(vec![i.get().into(), j.get().into(), k.get().into()]))
                .collect(),
        ),
    );
    body.insert(
        "reversals".into(),
        Value::Array(
            report
                .reversals
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    m.insert("i".into(), Value::from(r.i.get()));
                    m.insert("j".into(), Value::from(r.j.get()));
                    m.insert("a".into(), mask_value(r.a));
                    m.insert("l".into(), Value::from(r.l.get()));
                    Value::Object(m)
                })
                .collect(),
        ),
    );
    body.insert(
        "sp_vs_subset".into(),
        Value::Array(
            report
                .sp_vs_subset
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    m.insert("i".into(), Value::from(r.i.get()));
                    m.insert("j".into(), Value::from(r.j.get()));
                    m.insert("a".into(), mask_value(r.a));
                    Value::Object(m)
                })
                .collect(),
        ),
    );
    body.insert("classification".into(), classification_value(&classification));
    Ok(json_output(&document("paradox", body), 0))
}

fn estimate_value(e: &simulate::Estimate<f64>) -> Value {
    let mut m = Map::new();
    m.insert("value".into(), num(e.value));
    m.insert("half_width_95".into(), num(e.half_width_95));
    Value::Object(m)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Output, Failure> {
    let model = load_valid_model(&args.common.model)?;
    let subset = parse_subset(&args.subset, model.n())?;
    if subset.is_empty() {
        return Err(Failure::invalid("--subset must not be empty"));
    }
    if args.n_samples == 0 {
        return Err(Failure::invalid("--n-samples must be at least 1"));
    }
    let grid = match &args.grid {
        Some(raw) => Some(parse_grid(raw)?),
        None => None,
    };
    // every per-variable estimate reuses the same streams, so the hit
    // frequencies partition unity exactly
    let mut alpha_estimates: Vec<(usize, simulate::Estimate<f64>)> = Vec::new();
    if subset.len() >= 2 {
        for j in subset.members() {
            let est = simulate::estimate_alpha_subset(&model, subset, j, args.n_samples, args.seed)?;
            alpha_estimates.push((j.get(), est));
        }
    } else {
        let j = subset.members().next().expect("non-empty");
        alpha_estimates.push((
            j.get(),
            simulate::Estimate { value: 1.0, half_width_95: 0.0, n_samples: args.n_samples, seed: args.seed },
        ));
    }
    let survival_estimates = match &grid {
        Some(grid) => Some(simulate::estimate_survival(&model, subset, grid, args.n_samples, args.seed)?),
        None => None,
    };

    if args.common.format == Format::Csv {
        let grid = grid.ok_or(Failure {
            code: EXIT_USAGE,
            message: "--format csv for 'simulate' requires --grid".into(),
        })?;
        let ests = survival_estimates.expect("computed with grid");
        let mut csv = String::from("t,value,half_width_95\n");
        for (t, e) in grid.iter().zip(ests.iter()) {
            csv.push_str(&format!("{},{},{}\n", num_str(*t), num_str(e.value), num_str(e.half_width_95)));
        }
        return Ok(Output { body: csv, code: 0 });
    }

    let mut body = Map::new();
    body.insert("subset".into(), mask_value(subset));
    body.insert("n_samples".into(), Value::from(args.n_samples));
    body.insert("seed".into(), Value::from(args.seed));
    body.insert(
        "alpha_estimates".into(),
        indexed_map(alpha_estimates.iter().map(|(j, e)| (*j, estimate_value(e)))),
    );
    if let (Some(grid), Some(ests)) = (&grid, &survival_estimates) {
        body.insert(
            "survival_estimates".into(),
            Value::Array(
                grid.iter()
                    .zip(ests.iter())
                    .map(|(t, e)| {
                        let mut m = Map::new();
                        m.insert("t".into(), num(*t));
                        m.insert("value".into(), num(e.value));
                        m.insert("half_width_95".into(), num(e.half_width_95));
                        Value::Object(m)
                    })
                    .collect(),
            ),
        );
    }
    Ok(json_output(&document("simulate", body), 0))
}

fn cmd_importance(args: &ImportanceArgs) -> Result<Output, Failure> {
    reject_csv(&args.common, "importance")?;
    let model = load_valid_model(&args.common.model)?;
    let cfg = config_for(&args.common);
    let text = read_file(&args.system)?;
    let file: wire::SystemFile = serde_json::from_str(&text)
        .map_err(|e| Failure::invalid(format!("{}: {e}", args.system.display())))?;
    let (system, warnings) = file.build().map_err(Failure::invalid)?;
    if system.n != model.n() {
        return Err(Failure::invalid(format!(
            "system has {} components but the model has {}",
            system.n,
            model.n()
        )));
    }
    let series = reliability::series_importance(&model, &cfg)?;
    let per_path = reliability::path_importance(&model, &system, &cfg)?;
    let reversals = reliability::cross_path_reversals(&model, &system, &cfg)?;
    let mut body = Map::new();
    body.insert("warnings".into(), Value::Array(warnings.into_iter().map(Value::String).collect()));
    body.insert(
        "series".into(),
        indexed_map(series.iter().enumerate().map(|(p, e)| (p + 1, num(e.value)))),
    );
    body.insert(
        "paths".into(),
        Value::Array(
            per_path
                .iter()
                .map(|imp| {
                    let mut m = Map::new();
                    m.insert("path".into(), mask_value(imp.path));
                    m.insert("method".into(), method_value(imp.method));
                    m.insert(
                        "alphas".into(),
                        indexed_map(imp.alphas.iter().map(|(j, a)| (j.get(), num(*a)))),
                    );
                    Value::Object(m)
                })
                .collect(),
        ),
    );
    body.insert(
        "reversals".into(),
        Value::Array(
            reversals
                .iter()
                .map(|r| {
                    let mut m = Map::new();
                    m.insert("i".into(), Value::from(r.i.get()));
                    m.insert("j".into(), Value::from(r.j.get()));
                    m.insert("path_a".into(), Value::from(r.path_a + 1));
                    m.insert("path_b".into(), Value::from(r.path_b + 1));
                    Value::Object(m)
                })
                .collect(),
        ),
    );
    Ok(json_output(&document("importance", body), 0))
}
