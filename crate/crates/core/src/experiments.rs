//! Monte Carlo harness for the three rank-one estimation experiments.
//!
//! Every trial draws its own seed from `(seed, n, class, trial)`, so results
//! do not depend on scheduling. Records are sorted by `(n, mu_target, trial)`
//! before anything is written.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigen::leading_eigenpair;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::noise::{draw_adjacency, observe_completion, sample_gaussian_hetero};
use crate::rng::{derive_seed, RandomSource};
use crate::signal::{scheme_one, scheme_two, vector_coherence};

pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_RESAMPLES: usize = 2000;
/// Largest fraction of clipped `P` entries tolerated in a network trial.
pub const MAX_CLIP_FRACTION: f64 = 0.01;
pub const CSV_HEADER: &str =
    "experiment,n,mu_target,mu_realized,trial,lambda_star,lambda_hat,abs_error,seed,wall_time_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    GaussDenoise,
    Completion,
    Network,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::GaussDenoise => "gauss_denoise",
            Self::Completion => "completion",
            Self::Network => "network",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gauss_denoise" | "gauss" => Ok(Self::GaussDenoise),
            "completion" => Ok(Self::Completion),
            "network" => Ok(Self::Network),
            other => Err(Error::invalid(format!("unknown experiment '{other}'"))),
        }
    }

    pub fn default_n_grid(self) -> Vec<usize> {
        match self {
            Self::GaussDenoise | Self::Completion => vec![500, 1000, 2000, 4000],
            Self::Network => vec![512, 1024, 2048, 4096],
        }
    }

    pub fn default_alphas(self) -> Vec<f64> {
        match self {
            Self::GaussDenoise => vec![0.0, 0.25, 0.5, 1.0],
            Self::Completion => vec![0.0, 0.1, 0.2, 0.3],
            Self::Network => vec![0.0, 1.0 / 3.0, 0.4],
        }
    }

    pub fn default_scheme(self) -> u8 {
        match self {
            Self::GaussDenoise => 1,
            Self::Completion | Self::Network => 2,
        }
    }

    /// Signal strength used at dimension `n` for coherence `mu`.
    pub fn lambda_star(self, n: usize, mu: f64) -> f64 {
        let ln = (n as f64).ln();
        match self {
            Self::GaussDenoise => (n as f64 * ln).sqrt(),
            Self::Completion => 1.0,
            Self::Network => mu.max(ln),
        }
    }
}

/// `μ = max(1, round(c·n^α))` for each `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuRule {
    #[serde(default = "one")]
    pub constant: f64,
    pub alphas: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

impl MuRule {
    pub fn new(constant: f64, alphas: Vec<f64>) -> Result<Self> {
        let rule = Self { constant, alphas };
        rule.validate()?;
        Ok(rule)
    }

    fn validate(&self) -> Result<()> {
        if !(self.constant > 0.0 && self.constant.is_finite()) {
            return Err(Error::invalid("mu_rule.constant must be positive"));
        }
        if self.alphas.is_empty() {
            return Err(Error::invalid("mu_rule.alphas is empty"));
        }
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid("mu_rule.alphas must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn mu(&self, n: usize, class: usize) -> f64 {
        (self.constant * (n as f64).powf(self.alphas[class])).round().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_grid: Vec<usize>,
    pub mu_rule: MuRule,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    pub scheme: u8,
    #[serde(default)]
    pub output_path: Option<String>,
    /// Removes the noise entirely: `H = 0` for denoising, `p = 1` for
    /// completion and `A = P` for the network model.
    #[serde(default)]
    pub zero_noise: bool,
    /// Writes measured wall time instead of 0 (breaks byte-identical output).
    #[serde(default)]
    pub record_timing: bool,
    /// Also evaluates the eigenvector-distance check on each trial.
    #[serde(default)]
    pub side_check: bool,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

/// Residual tolerance for the power iteration, relative to `|λ|`; far below
/// the smallest errors the experiments measure.
fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    20_000
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentKind, seed: u64) -> Self {
        Self {
            experiment,
            n_grid: experiment.default_n_grid(),
            mu_rule: MuRule {
                constant: 1.0,
                alphas: experiment.default_alphas(),
            },
            trials: DEFAULT_TRIALS,
            seed,
            scheme: experiment.default_scheme(),
            output_path: None,
            zero_noise: false,
            record_timing: false,
            side_check: false,
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.n_grid.is_empty() {
            return Err(Error::invalid("n_grid is empty"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("n_grid must be strictly increasing"));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::invalid("n_grid entries must be at least 2"));
        }
        if !matches!(self.scheme, 1 | 2) {
            return Err(Error::invalid(format!("scheme must be 1 or 2, got {}", self.scheme)));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::invalid("tol and max_iter must be positive"));
        }
        self.mu_rule.validate()?;
        let capped = matches!(self.experiment, ExperimentKind::Completion | ExperimentKind::Network);
        for &n in &self.n_grid {
            let mut seen: Vec<f64> = Vec::new();
            for class in 0..self.mu_rule.alphas.len() {
                let mu = self.mu_rule.mu(n, class);
                if seen.contains(&mu) {
                    return Err(Error::invalid(format!(
                        "two mu classes both give mu = {mu} at n = {n}"
                    )));
                }
                seen.push(mu);
                let cap = if capped { (n as f64).sqrt() } else { n as f64 };
                if mu > cap {
                    return Err(Error::invalid(format!(
                        "mu = {mu} exceeds {} at n = {n}",
                        if capped { "sqrt(n)" } else { "n" }
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub n: usize,
    pub mu_target: f64,
    pub mu_realized: f64,
    #[serde(rename = "trial")]
    pub trial_index: usize,
    pub lambda_star: f64,
    pub lambda_hat: f64,
    pub abs_error: f64,
    #[serde(rename = "seed")]
    pub seed_used: u64,
    pub wall_time_ms: f64,
}

/// Result of the eigenvector-distance check on one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideCheck {
    /// `‖H‖ ≤ |λ*|/4` held, so the inequality applies.
    pub applicable: bool,
    pub distance: f64,
    pub bound: f64,
}

impl SideCheck {
    pub fn holds(&self) -> bool {
        !self.applicable || self.distance <= self.bound
    }
}

/// Rank-one eigenvector check: when `‖H‖ ≤ |λ*|/4`,
/// `min ‖u ± u*‖ ≤ (8√2/3)‖H‖/|λ*|`.
pub fn eigenvector_side_check(
    h_norm: f64,
    lambda_star: f64,
    u_star: &DenseVector,
    u_hat: &DenseVector,
) -> Result<SideCheck> {
    Ok(SideCheck {
        applicable: h_norm <= lambda_star.abs() / 4.0,
        distance: u_hat.sign_invariant_distance(u_star)?,
        bound: 8.0 * std::f64::consts::SQRT_2 / 3.0 * h_norm / lambda_star.abs(),
    })
}

/// Everything a single trial produced, before it is reduced to a record.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub record: TrialRecord,
    pub u_star: DenseVector,
    pub u_hat: DenseVector,
    /// `M − M*`, kept only when the side check is enabled.
    pub noise: Option<DenseMatrix>,
    pub clipped: usize,
    pub obs_prob_capped: bool,
}

/// Seed used for `(n, class, trial)` under `master`.
pub fn trial_seed(master: u64, n: usize, class: usize, trial: usize) -> u64 {
    derive_seed(derive_seed(derive_seed(master, n as u64), class as u64), trial as u64)
}

/// Runs one trial of `cfg.experiment` at dimension `n` in coherence class `class`.
pub fn simulate_trial(cfg: &ExperimentConfig, n: usize, class: usize, trial: usize) -> Result<TrialData> {
    let start = Instant::now();
    let seed = trial_seed(cfg.seed, n, class, trial);
    let mut src = RandomSource::new(seed, 0);
    let mut solver_src = src.split(1);

    let mu_target = cfg.mu_rule.mu(n, class);
    let u_star = match cfg.scheme {
        1 => scheme_one(n, mu_target, &mut src)?,
        _ => scheme_two(n, mu_target, &mut src)?,
    };
    let lambda_star = cfg.experiment.lambda_star(n, mu_target);

    let mut clipped = 0;
    let mut obs_prob_capped = false;
    let keep_noise = cfg.side_check;
    let (observed, noise) = match cfg.experiment {
        ExperimentKind::GaussDenoise => {
            if cfg.zero_noise {
                (rank_one(lambda_star, &u_star, false), keep_noise.then(|| DenseMatrix::zeros(n, n)))
            } else {
                let (h, _) = sample_gaussian_hetero(n, &mut src)?;
                let noise = keep_noise.then(|| h.clone());
                let mut m = h;
                add_rank_one(&mut m, lambda_star, &u_star);
                (m, noise)
            }
        }
        ExperimentKind::Completion => {
            let signal = rank_one(lambda_star, &u_star, false);
            let raw = mu_target * mu_target * (n as f64).ln() / n as f64;
            obs_prob_capped = raw > 1.0;
            let p = if cfg.zero_noise { 1.0 } else { raw.min(1.0) };
            let observed = observe_completion(&signal, p, &mut src)?;
            let noise = if keep_noise { Some(observed.sub(&signal)?) } else { None };
            (observed, noise)
        }
        ExperimentKind::Network => {
            let mut p = rank_one(lambda_star, &u_star, true);
            for v in p.as_mut_slice() {
                if *v > 1.0 {
                    *v = 1.0;
                    clipped += 1;
                }
            }
            if clipped as f64 > MAX_CLIP_FRACTION * (n * n) as f64 {
                return Err(Error::Regime(format!(
                    "{clipped} of {} probabilities exceed 1 at n = {n}, mu = {mu_target}",
                    n * n
                )));
            }
            if cfg.zero_noise {
                (p, keep_noise.then(|| DenseMatrix::zeros(n, n)))
            } else {
                let adjacency = draw_adjacency(&p, &mut src)?;
                let noise = if keep_noise { Some(adjacency.sub(&p)?) } else { None };
                (adjacency, noise)
            }
        }
    };

    let (lambda_hat, u_hat) = leading_eigenpair(&observed, cfg.tol, cfg.max_iter, &mut solver_src)?;
    let wall_time_ms = if cfg.record_timing {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    };
    Ok(TrialData {
        record: TrialRecord {
            experiment: cfg.experiment.name().to_string(),
            n,
            mu_target,
            mu_realized: vector_coherence(&u_star),
            trial_index: trial,
            lambda_star,
            lambda_hat,
            abs_error: (lambda_hat - lambda_star).abs(),
            seed_used: seed,
            wall_time_ms,
        },
        u_star,
        u_hat,
        noise,
        clipped,
        obs_prob_capped,
    })
}

/// `m += λ u uᵀ`.
fn add_rank_one(m: &mut DenseMatrix, lambda: f64, u: &DenseVector) {
    let n = u.len();
    for (row, ui) in m.as_mut_slice().chunks_exact_mut(n).zip(u.iter()) {
        let s = lambda * ui;
        for (x, uj) in row.iter_mut().zip(u.iter()) {
            *x += s * uj;
        }
    }
}

/// `λ u uᵀ`, with `|u|` in place of `u` when `absolute` is set.
fn rank_one(lambda: f64, u: &DenseVector, absolute: bool) -> DenseMatrix {
    let n = u.len();
    let v: Vec<f64> = if absolute {
        u.iter().map(|x| x.abs()).collect()
    } else {
        u.as_slice().to_vec()
    };
    let mut data = vec![0.0; n * n];
    for (i, row) in data.chunks_exact_mut(n).enumerate() {
        let s = lambda * v[i];
        for (x, vj) in row.iter_mut().zip(&v) {
            *x = s * vj;
        }
    }
    DenseMatrix::from_vec_unchecked(n, n, data)
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOutcome {
    pub records: Vec<TrialRecord>,
    /// Trials dropped because the eigensolver did not converge.
    pub failed_trials: usize,
    pub clipped_entries: usize,
    /// Trials whose observation probability `μ² ln n / n` exceeded 1.
    pub capped_trials: usize,
    /// `(applicable, held)` counts when the side check is enabled.
    pub side_check: Option<(usize, usize)>,
}

/// Worker count from `COHSPEC_THREADS`, defaulting to the machine's parallelism.
pub fn worker_count() -> usize {
    std::env::var("COHSPEC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|v| *v > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// A trial reduced to its record, clipped-entry count, cap flag and side check.
type TrialSummary = (TrialRecord, usize, bool, Option<SideCheck>);

/// Runs every `(n, class, trial)` task of `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let tasks: Vec<(usize, usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| {
            (0..cfg.mu_rule.alphas.len())
                .flat_map(move |c| (0..cfg.trials).map(move |t| (n, c, t)))
        })
        .collect();

    // Each worker reduces its trial to a record straight away; the n × n
    // matrices are dropped before the next task starts.
    let run = |&(n, c, t): &(usize, usize, usize)| -> Result<Option<TrialSummary>> {
        let data = match simulate_trial(cfg, n, c, t) {
            Ok(data) => data,
            Err(Error::NoConvergence { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let check = if cfg.side_check {
            let noise = data.noise.as_ref().expect("noise kept for the side check");
            let h_norm = noise.operator_norm(1e-10, 100_000)?;
            Some(eigenvector_side_check(h_norm, data.record.lambda_star, &data.u_star, &data.u_hat)?)
        } else {
            None
        };
        Ok(Some((data.record, data.clipped, data.obs_prob_capped, check)))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let results: Vec<_> = pool.install(|| tasks.par_iter().map(run).collect());

    let mut outcome = ExperimentOutcome {
        side_check: cfg.side_check.then_some((0, 0)),
        ..Default::default()
    };
    for result in results {
        match result? {
            None => outcome.failed_trials += 1,
            Some((record, clipped, capped, check)) => {
                outcome.clipped_entries += clipped;
                outcome.capped_trials += usize::from(capped);
                if let (Some(check), Some((applicable, held))) = (check, outcome.side_check.as_mut()) {
                    if check.applicable {
                        *applicable += 1;
                        *held += usize::from(check.holds());
                    }
                }
                outcome.records.push(record);
            }
        }
    }
    sort_records(&mut outcome.records);
    Ok(outcome)
}

fn require_kind(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    if cfg.experiment != kind {
        return Err(Error::invalid(format!(
            "config is for '{}', not '{}'",
            cfg.experiment.name(),
            kind.name()
        )));
    }
    Ok(())
}

pub fn run_gauss_denoise(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    require_kind(cfg, ExperimentKind::GaussDenoise)?;
    run_experiment(cfg)
}

pub fn run_completion(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    require_kind(cfg, ExperimentKind::Completion)?;
    run_experiment(cfg)
}

pub fn run_network(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    require_kind(cfg, ExperimentKind::Network)?;
    run_experiment(cfg)
}

pub fn sort_records(records: &mut [TrialRecord]) {
    records.sort_by(|a, b| {
        a.n.cmp(&b.n)
            .then(a.mu_target.total_cmp(&b.mu_target))
            .then(a.trial_index.cmp(&b.trial_index))
    });
}

pub fn write_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in records {
        writer.serialize(r)?;
    }
    if records.is_empty() {
        writer.write_record(CSV_HEADER.split(','))?;
    }
    writer.flush()?;
    Ok(())
}

pub fn csv_string(records: &[TrialRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::invalid(e.to_string()))
}

pub fn write_csv_file(records: &[TrialRecord], path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(records, std::io::BufWriter::new(file))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut records = Vec::new();
    for row in reader.deserialize() {
        records.push(row?);
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares line through `(ln n, ln value)`.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 3 {
        return Err(Error::invalid("fit_rate needs at least 3 points"));
    }
    if let Some((n, v)) = points.iter().find(|(n, v)| !(*n > 0.0 && *v > 0.0)) {
        return Err(Error::invalid(format!("non-positive point ({n}, {v})")));
    }
    let xs: Vec<f64> = points.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit_rate needs at least two distinct n"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    // A flat line is fitted perfectly.
    let r_squared = if ss_tot <= 1e-300 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci(
    samples: &[f64],
    level: f64,
    resamples: usize,
    src: &mut RandomSource,
) -> Result<(f64, f64)> {
    if samples.len() < 10 {
        return Err(Error::invalid("bootstrap needs at least 10 samples"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid("level must lie in (0, 1)"));
    }
    if resamples == 0 {
        return Err(Error::invalid("resamples must be positive"));
    }
    let n = samples.len();
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let total: f64 = (0..n)
                .map(|_| samples[(src.next_u64() % n as u64) as usize])
                .sum();
            total / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((
        crate::oracle::quantile_sorted(&means, tail),
        crate::oracle::quantile_sorted(&means, 1.0 - tail),
    ))
}

/// Aggregate of one `(n, μ)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub n: usize,
    pub mu_target: f64,
    pub trials: usize,
    pub mean_error: f64,
    pub ci: Option<(f64, f64)>,
    pub mean_mu_realized: f64,
}

/// Per-class slope of mean error against `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassFit {
    pub alpha: f64,
    pub cells: Vec<CellSummary>,
    pub fit: Option<RateFit>,
}

/// Groups records into coherence classes and fits each.
///
/// A record belongs to the class whose `μ = max(1, round(c·n^α))` matches
/// its `mu_target` at its `n`; the first matching `α` wins.
pub fn summarize(
    records: &[TrialRecord],
    rule: &MuRule,
    resamples: usize,
    src: &mut RandomSource,
) -> Result<Vec<ClassFit>> {
    let mut classes: Vec<BTreeMap<usize, Vec<&TrialRecord>>> = vec![BTreeMap::new(); rule.alphas.len()];
    for r in records {
        let class = (0..rule.alphas.len())
            .find(|&c| rule.mu(r.n, c) == r.mu_target)
            .ok_or_else(|| {
                Error::invalid(format!("record n = {}, mu = {} matches no class", r.n, r.mu_target))
            })?;
        classes[class].entry(r.n).or_default().push(r);
    }
    let mut fits = Vec::with_capacity(rule.alphas.len());
    for (alpha, cells) in rule.alphas.iter().zip(classes) {
        let mut summaries = Vec::new();
        for (n, rows) in cells {
            let errors: Vec<f64> = rows.iter().map(|r| r.abs_error).collect();
            let k = errors.len() as f64;
            let ci = if errors.len() >= 10 {
                Some(bootstrap_ci(&errors, 0.95, resamples, src)?)
            } else {
                None
            };
            summaries.push(CellSummary {
                n,
                mu_target: rows[0].mu_target,
                trials: rows.len(),
                mean_error: errors.iter().sum::<f64>() / k,
                ci,
                mean_mu_realized: rows.iter().map(|r| r.mu_realized).sum::<f64>() / k,
            });
        }
        let points: Vec<(f64, f64)> = summaries.iter().map(|s| (s.n as f64, s.mean_error)).collect();
        let fit = if points.len() >= 3 && points.iter().all(|p| p.1 > 0.0) {
            Some(fit_rate(&points)?)
        } else {
            None
        };
        fits.push(ClassFit {
            alpha: *alpha,
            cells: summaries,
            fit,
        });
    }
    Ok(fits)
}

/// Plain-text table of [`summarize`] output.
pub fn format_summary(fits: &[ClassFit]) -> String {
    let mut out = String::from("alpha\tn\tmu\ttrials\tmean_error\tci_lo\tci_hi\tslope\n");
    for class in fits {
        let slope = class
            .fit
            .map_or_else(|| "-".to_string(), |f| format!("{:.4}", f.slope));
        for cell in &class.cells {
            let (lo, hi) = cell
                .ci
                .map_or(("-".to_string(), "-".to_string()), |(l, h)| (format!("{l:.6}"), format!("{h:.6}")));
            out.push_str(&format!(
                "{:.4}\t{}\t{}\t{}\t{:.6}\t{}\t{}\t{}\n",
                class.alpha, cell.n, cell.mu_target, cell.trials, cell.mean_error, lo, hi, slope
            ));
        }
    }
    out
}
