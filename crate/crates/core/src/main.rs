use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use cohspec::bounds::{k_zero, Bounds, BoundValue, Constants};
use cohspec::eigen::{full_spectrum, symmetric_spectrum};
use cohspec::experiments::{
    fit_rate, format_summary, read_csv, run_experiment, summarize, write_csv_file, ExperimentConfig,
    ExperimentKind, MuRule, TrialRecord, DEFAULT_RESAMPLES,
};
use cohspec::oracle::{moment_report, Enumerator, DEFAULT_BUDGET};
use cohspec::signal::{scheme_one, scheme_two, vector_coherence, SignalSpec};
use cohspec::noise::DiscreteDist;
use cohspec::{DenseMatrix, DenseVector, Error, RandomSource};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "cohspec", version, about = "Coherence-aware spectral estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a rank-one signal λ u uᵀ with controlled coherence.
    GenSignal(GenSignalArgs),
    /// Print the spectrum of a matrix file.
    Eigen(EigenArgs),
    /// Print bound values for the given noise and signal parameters.
    Bounds(BoundsArgs),
    /// Run the exact-enumeration identity suite and moment-bound table.
    VerifyOracle(OracleArgs),
    /// Run one of the experiments and write its CSV.
    Experiment(ExperimentArgs),
    /// Fit log-log error rates from an experiment CSV.
    Fit(FitArgs),
}

#[derive(Args)]
struct GenSignalArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 1)]
    scheme: u8,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Matrix file to write.
    #[arg(long, short)]
    output: PathBuf,
    /// Also write the unit vector as an n × 1 matrix file.
    #[arg(long)]
    vector_output: Option<PathBuf>,
}

#[derive(Args)]
struct EigenArgs {
    matrix: PathBuf,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Use the symmetric solver (rejects asymmetric input).
    #[arg(long)]
    symmetric: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    n: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long)]
    lambda_star: Option<f64>,
    /// Sup-norm of the test vector; defaults to √(μ/n).
    #[arg(long)]
    a_inf: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    big_c1: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// 2 for Rademacher, 3 for the {−2, 0, 2} law.
    #[arg(long, default_value_t = 2)]
    support: usize,
    /// Custom support values, comma separated (overrides --support).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    values: Option<Vec<f64>>,
    /// Probabilities for --values.
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,
    /// Require a law symmetric about zero.
    #[arg(long)]
    symmetric: bool,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// gauss_denoise, completion or network.
    name: String,
    /// JSON config; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long)]
    mu_constant: Option<f64>,
    #[arg(long)]
    scheme: Option<u8>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    zero_noise: bool,
    #[arg(long)]
    record_timing: bool,
    #[arg(long)]
    side_check: bool,
    /// Print the effective config as canonical JSON and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct FitArgs {
    csv: PathBuf,
    /// Coherence exponents used to group rows; without it rows are grouped
    /// by the experiment's default classes, or by `mu_target` if those do
    /// not match.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Flat config file accepted by `experiment --config`.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_grid: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alphas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scheme: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    zero_noise: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    record_timing: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    side_check: Option<bool>,
}

impl ConfigFile {
    fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            experiment: Some(cfg.experiment.name().to_string()),
            n_grid: Some(cfg.n_grid.clone()),
            alphas: Some(cfg.mu_rule.alphas.clone()),
            mu_constant: Some(cfg.mu_rule.constant),
            trials: Some(cfg.trials),
            seed: Some(cfg.seed),
            scheme: Some(cfg.scheme),
            output_path: cfg.output_path.clone(),
            zero_noise: Some(cfg.zero_noise),
            record_timing: Some(cfg.record_timing),
            side_check: Some(cfg.side_check),
        }
    }
}

/// Failure carrying the process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::BudgetExceeded { .. } => EXIT_BUDGET,
            Error::InvalidInput(_)
            | Error::DimensionMismatch { .. }
            | Error::NotSymmetric { .. }
            | Error::Json(_)
            | Error::Csv(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: message.into(),
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))
}

fn require_seed(seed: Option<u64>) -> Result<u64, Failure> {
    seed.ok_or_else(|| config_error("this command is stochastic; pass --seed"))
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::GenSignal(a) => gen_signal(a, &mut out),
        Command::Eigen(a) => eigen(a, &mut out),
        Command::Bounds(a) => bounds(a, &mut out),
        Command::VerifyOracle(a) => verify_oracle(a, &mut out),
        Command::Experiment(a) => experiment(a, &mut out),
        Command::Fit(a) => fit(a, &mut out),
    };
    let _ = out.flush();
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn io_failure(e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: e.to_string(),
    }
}

fn gen_signal(a: GenSignalArgs, out: &mut impl Write) -> Outcome {
    let seed = require_seed(a.seed)?;
    let mut src = RandomSource::new(seed, 0);
    let u = match a.scheme {
        1 => scheme_one(a.n, a.mu, &mut src)?,
        2 => scheme_two(a.n, a.mu, &mut src)?,
        s => return Err(config_error(format!("scheme must be 1 or 2, got {s}"))),
    };
    let signal = SignalSpec::rank_one(a.lambda, &u)?;
    std::fs::write(&a.output, signal.matrix().to_text()).map_err(io_failure)?;
    if let Some(path) = &a.vector_output {
        let col = DenseMatrix::from_columns(std::slice::from_ref(&u))?;
        std::fs::write(path, col.to_text()).map_err(io_failure)?;
    }
    writeln!(out, "n\t{}\nmu_target\t{}\nmu_realized\t{}\nlambda\t{}", a.n, a.mu, vector_coherence(&u), a.lambda)
        .map_err(io_failure)?;
    Ok(0)
}

fn eigen(a: EigenArgs, out: &mut impl Write) -> Outcome {
    let m = DenseMatrix::from_text(&read_input(&a.matrix)?)?;
    let est = if a.symmetric {
        symmetric_spectrum(&m, a.tol)?
    } else {
        full_spectrum(&m, a.tol)?
    };
    for (i, z) in est.eigenvalues.iter().enumerate() {
        let line = if est.is_real(i) {
            format!("{}", z.re)
        } else {
            format!("{}{:+}i", z.re, z.im)
        };
        writeln!(out, "{line}").map_err(io_failure)?;
    }
    Ok(0)
}

fn bound_row(out: &mut impl Write, name: &str, v: &BoundValue) -> Result<(), Failure> {
    writeln!(out, "{name}\t{:e}\t{:e}\t{:e}", v.total, v.branch_sigma, v.branch_b).map_err(io_failure)
}

fn bounds(a: BoundsArgs, out: &mut impl Write) -> Outcome {
    let bounds = Bounds::new(Constants {
        c1: a.c1,
        big_c1: a.big_c1,
        ..Constants::default()
    });
    let a_inf = a.a_inf.unwrap_or((a.mu / a.n).sqrt());
    writeln!(out, "# {}", bounds.constants.convention()).map_err(io_failure)?;
    writeln!(out, "quantity\ttotal\tsigma_branch\tb_branch").map_err(io_failure)?;
    bound_row(out, "spectral_norm", &bounds.spectral_norm_bound(a.sigma, a.b, a.n)?)?;
    bound_row(out, "prior_eigenvalue", &bounds.prior_eigenvalue_bound(a.sigma, a.b, a.n, a.mu)?)?;
    match k_zero(a.mu, a_inf, a.sigma, a.b, a.n) {
        Ok(k0) => writeln!(out, "k0\t{k0}").map_err(io_failure)?,
        Err(e) => writeln!(out, "k0\tundefined ({e})").map_err(io_failure)?,
    }
    if let Some(lambda) = a.lambda_star {
        let cond = bounds.signal_condition_rank_one(a.sigma, a.b, a.n, lambda)?;
        writeln!(out, "signal_condition\t{}\tlhs={:e}\trhs={:e}", if cond.holds { "holds" } else { "fails" }, cond.lhs, cond.rhs)
            .map_err(io_failure)?;
        if cond.holds {
            bound_row(out, "master_rank_one", &bounds.master_rank_one(a.sigma, a.b, a.n, a.mu, lambda, a_inf)?)?;
            bound_row(out, "eigenvalue_rank_one", &bounds.eigenvalue_rank_one(a.sigma, a.b, a.n, a.mu, lambda)?)?;
        }
    }
    Ok(0)
}

fn oracle_dist(a: &OracleArgs) -> Result<DiscreteDist, Failure> {
    let dist = match (&a.values, &a.probs) {
        (Some(v), Some(p)) => {
            if v.len() != p.len() {
                return Err(config_error("--values and --probs differ in length"));
            }
            DiscreteDist::new(v.iter().copied().zip(p.iter().copied()).collect())?
        }
        (None, None) => match a.support {
            2 => DiscreteDist::rademacher(),
            3 => DiscreteDist::three_point(),
            s => return Err(config_error(format!("--support must be 2 or 3, got {s}"))),
        },
        _ => return Err(config_error("--values and --probs go together")),
    };
    if a.symmetric && !dist.is_symmetric() {
        return Err(config_error("distribution is not symmetric about zero"));
    }
    Ok(dist)
}

fn oracle_vectors(n: usize) -> Result<Vec<(DenseVector, DenseVector)>, Failure> {
    let flat = DenseVector::new(vec![1.0 / (n as f64).sqrt(); n])?;
    let e0 = DenseVector::basis(n, 0);
    let e_last = DenseVector::basis(n, n - 1);
    let ramp = DenseVector::new((0..n).map(|i| i as f64 + 1.0).collect())?.normalize()?;
    Ok(vec![(flat.clone(), flat), (e0.clone(), e_last), (e0, ramp)])
}

fn verify_oracle(a: OracleArgs, out: &mut impl Write) -> Outcome {
    let dist = oracle_dist(&a)?;
    if a.n == 0 {
        return Err(config_error("--n must be positive"));
    }
    let en = Enumerator::new(a.budget);
    let pairs = oracle_vectors(a.n)?;
    // The moment table needs n² free entries; check the budget before any work.
    let states = Enumerator::state_count(&dist, a.n * a.n);
    if states > a.budget as f64 {
        return Err(Error::BudgetExceeded {
            states,
            budget: a.budget,
        }
        .into());
    }

    let mut failures = 0;
    writeln!(out, "identity\tk\tpair\tvalue\texpected\tstatus").map_err(io_failure)?;
    // The identities rely on invariance under sign flips of rows and columns.
    let k_max = if dist.is_symmetric() { 4 } else { 0 };
    let k_range = 1..=k_max;
    if k_range.is_empty() {
        writeln!(out, "# law is not symmetric about zero; identities skipped").map_err(io_failure)?;
    }
    for k in k_range {
        let trace = en.trace_moment(k, &dist, a.n)?;
        for (idx, (x, y)) in pairs.iter().enumerate() {
            let full = en.symmetric_moment(x, y, k, &dist, false)?;
            let off = en.symmetric_moment(x, y, k, &dist, true)?;
            let expected = x.dot(y)? / a.n as f64 * trace;
            let mut rows = vec![("offdiag_zero", off, 0.0), ("trace_identity", full, expected)];
            if k % 2 == 1 {
                rows.push(("odd_zero", full, 0.0));
            }
            for (name, value, target) in rows {
                let ok = (value - target).abs() <= 1e-12 * (1.0 + target.abs());
                failures += usize::from(!ok);
                writeln!(out, "{name}\t{k}\t{idx}\t{value:e}\t{target:e}\t{}", if ok { "PASS" } else { "FAIL" })
                    .map_err(io_failure)?;
            }
        }
    }

    let bounds = Bounds::default();
    writeln!(out, "# moment bound, {}", bounds.constants.convention()).map_err(io_failure)?;
    writeln!(out, "k\tp\tpair\texact\tbound\tratio").map_err(io_failure)?;
    for k in [2usize, 3] {
        for p in [2u32, 4] {
            for (idx, (x, y)) in pairs.iter().enumerate() {
                let r = moment_report(&en, &bounds, x, y, k, p, &dist)?;
                writeln!(out, "{k}\t{p}\t{idx}\t{:e}\t{:e}\t{:e}", r.exact_centered_p, r.bound_value, r.ratio)
                    .map_err(io_failure)?;
            }
        }
    }
    writeln!(out, "# {failures} identity failures").map_err(io_failure)?;
    Ok(if failures == 0 { 0 } else { 1 })
}

fn build_config(a: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let kind = ExperimentKind::parse(&a.name)?;
    let file: ConfigFile = match &a.config {
        Some(path) => serde_json::from_str(&read_input(path)?)
            .map_err(|e| config_error(format!("{}: {e}", path.display())))?,
        None => ConfigFile::default(),
    };
    if let Some(name) = &file.experiment {
        if ExperimentKind::parse(name)? != kind {
            return Err(config_error(format!("config is for '{name}', command asked for '{}'", a.name)));
        }
    }
    let seed = require_seed(a.seed.or(file.seed))?;
    let mut cfg = ExperimentConfig::defaults(kind, seed);
    cfg.n_grid = a.n.clone().or(file.n_grid).unwrap_or(cfg.n_grid);
    cfg.mu_rule = MuRule {
        constant: a.mu_constant.or(file.mu_constant).unwrap_or(cfg.mu_rule.constant),
        alphas: a.alphas.clone().or(file.alphas).unwrap_or(cfg.mu_rule.alphas),
    };
    cfg.trials = a.trials.or(file.trials).unwrap_or(cfg.trials);
    cfg.scheme = a.scheme.or(file.scheme).unwrap_or(cfg.scheme);
    cfg.output_path = a
        .output
        .as_ref()
        .map(|p| p.display().to_string())
        .or(file.output_path)
        .or_else(|| Some(format!("{}.csv", kind.name())));
    cfg.zero_noise = a.zero_noise || file.zero_noise.unwrap_or(false);
    cfg.record_timing = a.record_timing || file.record_timing.unwrap_or(false);
    cfg.side_check = a.side_check || file.side_check.unwrap_or(false);
    cfg.validate()?;
    Ok(cfg)
}

fn experiment(a: ExperimentArgs, out: &mut impl Write) -> Outcome {
    let cfg = build_config(&a)?;
    if a.print_config {
        let json = serde_json::to_string_pretty(&ConfigFile::from_config(&cfg)).map_err(|e| config_error(e.to_string()))?;
        writeln!(out, "{json}").map_err(io_failure)?;
        return Ok(0);
    }
    let outcome = run_experiment(&cfg)?;
    let path = cfg.output_path.clone().expect("output path is always set");
    write_csv_file(&outcome.records, &path)?;
    let fits = summarize(&outcome.records, &cfg.mu_rule, DEFAULT_RESAMPLES, &mut RandomSource::new(cfg.seed, 1))?;
    write!(out, "{}", format_summary(&fits)).map_err(io_failure)?;
    writeln!(
        out,
        "# rows {}, failed trials {}, clipped entries {}, capped trials {}",
        outcome.records.len(),
        outcome.failed_trials,
        outcome.clipped_entries,
        outcome.capped_trials
    )
    .map_err(io_failure)?;
    if let Some((applicable, held)) = outcome.side_check {
        writeln!(out, "# eigenvector check held in {held} of {applicable} applicable trials").map_err(io_failure)?;
    }
    eprintln!("wrote {path}");
    Ok(0)
}

fn fit(a: FitArgs, out: &mut impl Write) -> Outcome {
    let records = read_csv(&a.csv)?;
    if records.is_empty() {
        return Err(config_error("CSV has no rows"));
    }
    let mut src = RandomSource::new(a.seed, 0);
    let explicit = a.alphas.clone();
    let rule = match &explicit {
        Some(alphas) => Some(MuRule::new(1.0, alphas.clone())?),
        None => ExperimentKind::parse(&records[0].experiment)
            .ok()
            .map(|k| MuRule { constant: 1.0, alphas: k.default_alphas() }),
    };
    if let Some(rule) = rule {
        match summarize(&records, &rule, DEFAULT_RESAMPLES, &mut src) {
            Ok(fits) => {
                writeln!(out, "alpha\tslope\tintercept\tr_squared").map_err(io_failure)?;
                for class in fits.iter().filter(|c| !c.cells.is_empty()) {
                    match class.fit {
                        Some(f) => writeln!(out, "{:.4}\t{:.4}\t{:.4}\t{:.4}", class.alpha, f.slope, f.intercept, f.r_squared),
                        None => writeln!(out, "{:.4}\t-\t-\t-", class.alpha),
                    }
                    .map_err(io_failure)?;
                }
                return Ok(0);
            }
            Err(e) if explicit.is_some() => return Err(e.into()),
            Err(_) => {}
        }
    }
    fit_by_mu(&records, out)
}

/// Groups rows by exact `mu_target` and fits mean error against `n`.
fn fit_by_mu(records: &[TrialRecord], out: &mut impl Write) -> Outcome {
    let mut groups: BTreeMap<u64, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in records {
        groups.entry(r.mu_target.to_bits()).or_default().entry(r.n).or_default().push(r.abs_error);
    }
    writeln!(out, "mu\tslope\tintercept\tr_squared").map_err(io_failure)?;
    for (bits, cells) in groups {
        let points: Vec<(f64, f64)> = cells
            .iter()
            .map(|(n, e)| (*n as f64, e.iter().sum::<f64>() / e.len() as f64))
            .collect();
        let mu = f64::from_bits(bits);
        match fit_rate(&points) {
            Ok(f) => writeln!(out, "{mu}\t{:.4}\t{:.4}\t{:.4}", f.slope, f.intercept, f.r_squared),
            Err(_) => writeln!(out, "{mu}\t-\t-\t-"),
        }
        .map_err(io_failure)?;
    }
    Ok(0)
}
