//! Monte Carlo experiment driver.
//!
//! An [`ExperimentConfig`] names a background model, how its expected value
//! is obtained, an optional signal model with an embedding policy, and one
//! or more detectors. Each trial samples a background (and under H1 embeds a
//! signal), builds the residuals operator once, runs one eigensolve sized for
//! the most demanding detector and then evaluates every detector on it.
//!
//! The configuration is TOML; see the README for the schema.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::detection::{
    calibrate_null, identify_kmeans, identify_threshold, stat_chi2_max, stat_l1_deviation,
    stat_spectral_norm, DetectionOutcome, KmeansParams, NullCalibration, RotationSearch, DEFAULT_CHI2_GRID,
    DEFAULT_THRESHOLD_FRAC,
};
use crate::error::{Error, Result};
use crate::generators::{
    choose_embedding_vertices, sample_signal, EmbeddingPolicy, NoiseModel, RmatModel, SignalModel,
    RMAT_DEFAULT_BASE,
};
use crate::graph::{Graph, Placement, VertexSubset};
use crate::lanczos::{EigenPairs, LanczosOptions};
use crate::linalg::LinearOperator;
use crate::par::{self, Execution};
use crate::residuals::{top_eigenpairs, ExpectedValueMode, ResidualsBuilder, ResidualsOperator};
use crate::rng::{tag, RngSeed};
use crate::roc::{precision_at_recall, roc, RocSummary};
use crate::spca::{identify_sparse, solve_spca, stat_sparse_pca, SpcaConfig, StepSize};

pub const DEFAULT_RECALL: f64 = 0.35;
pub const DEFAULT_TRIALS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmatSpec {
    pub levels: u32,
    #[serde(default = "default_per_vertex")]
    pub per_vertex: u64,
    #[serde(default = "default_base")]
    pub base: [f64; 4],
    #[serde(default = "default_true")]
    pub keep_diagonal: bool,
}

fn default_per_vertex() -> u64 {
    12
}

fn default_base() -> [f64; 4] {
    RMAT_DEFAULT_BASE
}

fn default_true() -> bool {
    true
}

impl RmatSpec {
    pub fn model(&self) -> Result<RmatModel> {
        let mut m = RmatModel::new(self.base, self.levels, self.per_vertex)?;
        m.keep_diagonal = self.keep_diagonal;
        Ok(m)
    }
}

/// Background model as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseSpec {
    /// `p`, else `average_degree / n`, else the average degree of the R-MAT
    /// model with the same `n` and default parameters.
    Er {
        n: usize,
        #[serde(default)]
        p: Option<f64>,
        #[serde(default)]
        average_degree: Option<f64>,
    },
    /// Explicit `weights`, else the expected degrees of an R-MAT model with
    /// the given `levels` and `per_vertex`.
    Cl {
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default)]
        levels: Option<u32>,
        #[serde(default = "default_per_vertex")]
        per_vertex: u64,
    },
    Rmat(RmatSpec),
}

/// Average expected degree of the default R-MAT model on `n` vertices.
pub fn rmat_matched_average_degree(n: usize) -> Result<f64> {
    if !n.is_power_of_two() || n < 2 {
        return Err(Error::Config(format!(
            "ER with no p needs n a power of two to match R-MAT, got {n}"
        )));
    }
    let model = RmatModel::new(RMAT_DEFAULT_BASE, n.trailing_zeros(), default_per_vertex())?;
    Ok(model.expected_degrees().iter().sum::<f64>() / n as f64)
}

impl NoiseSpec {
    pub fn model(&self) -> Result<NoiseModel> {
        match self {
            NoiseSpec::Er { n, p, average_degree } => {
                let p = match (p, average_degree) {
                    (Some(p), _) => *p,
                    (None, Some(d)) => d / *n as f64,
                    (None, None) => rmat_matched_average_degree(*n)? / *n as f64,
                };
                Ok(NoiseModel::Er { n: *n, p })
            }
            NoiseSpec::Cl {
                weights,
                levels,
                per_vertex,
            } => {
                let weights = match (weights, levels) {
                    (Some(w), _) => w.clone(),
                    (None, Some(levels)) => {
                        RmatModel::new(RMAT_DEFAULT_BASE, *levels, *per_vertex)?.expected_degrees()
                    }
                    (None, None) => return Err(Error::Config("cl noise needs weights or levels".into())),
                };
                Ok(NoiseModel::Cl { weights })
            }
            NoiseSpec::Rmat(spec) => Ok(NoiseModel::Rmat(spec.model()?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    #[default]
    Uniform,
    LowDegree,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSpec {
    #[serde(default)]
    pub policy: PolicyKind,
    #[serde(default = "default_degree_threshold")]
    pub threshold: f64,
}

fn default_degree_threshold() -> f64 {
    EmbeddingPolicy::DEFAULT_THRESHOLD
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        EmbeddingSpec {
            policy: PolicyKind::Uniform,
            threshold: default_degree_threshold(),
        }
    }
}

impl EmbeddingSpec {
    pub fn policy(&self) -> EmbeddingPolicy {
        match self.policy {
            PolicyKind::Uniform => EmbeddingPolicy::Uniform,
            PolicyKind::LowDegree => EmbeddingPolicy::LowDegree {
                threshold: self.threshold,
            },
        }
    }
}

fn default_frac() -> f64 {
    DEFAULT_THRESHOLD_FRAC
}

fn default_grid() -> usize {
    DEFAULT_CHI2_GRID
}

fn default_l1_m() -> usize {
    100
}

fn default_calibration_trials() -> usize {
    100
}

fn default_max_iters() -> usize {
    500
}

fn default_obj_tol() -> f64 {
    1e-6
}

/// One detector and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DetectorSpec {
    /// Largest residuals eigenvalue; identification thresholds `u_1`.
    Specnorm {
        #[serde(default = "default_frac")]
        threshold: f64,
    },
    /// Rotation-maximized quadrant χ² of `(u_1, u_2)`; identification by k-means.
    Chi2 {
        #[serde(default = "default_grid")]
        grid: usize,
        #[serde(default)]
        exact: bool,
        #[serde(default)]
        kmeans: KmeansParams,
    },
    /// Largest standardized drop in eigenvector L1 norm; identification
    /// thresholds the selected eigenvector.
    L1 {
        #[serde(default = "default_l1_m")]
        m: usize,
        #[serde(default = "default_calibration_trials")]
        calibration_trials: usize,
        /// Precomputed calibration JSON; computed on the fly when absent.
        #[serde(default)]
        calibration: Option<PathBuf>,
        #[serde(default = "default_frac")]
        threshold: f64,
    },
    /// Negated L1 norm of the sparse principal component.
    Spca {
        /// Fixed penalty.
        #[serde(default)]
        lambda: Option<f64>,
        /// Penalty as a multiple of `λ_max(B)/N`, evaluated per trial.
        #[serde(default)]
        lambda_scale: Option<f64>,
        #[serde(default = "default_max_iters")]
        max_iters: usize,
        #[serde(default = "default_obj_tol")]
        obj_tol: f64,
        #[serde(default)]
        step_size: Option<f64>,
        #[serde(default = "default_frac")]
        threshold: f64,
    },
}

impl DetectorSpec {
    pub fn specnorm() -> DetectorSpec {
        DetectorSpec::Specnorm {
            threshold: DEFAULT_THRESHOLD_FRAC,
        }
    }

    pub fn chi2() -> DetectorSpec {
        DetectorSpec::Chi2 {
            grid: DEFAULT_CHI2_GRID,
            exact: false,
            kmeans: KmeansParams::default(),
        }
    }

    pub fn l1(m: usize, calibration_trials: usize) -> DetectorSpec {
        DetectorSpec::L1 {
            m,
            calibration_trials,
            calibration: None,
            threshold: DEFAULT_THRESHOLD_FRAC,
        }
    }

    pub fn spca_scaled(lambda_scale: f64, max_iters: usize) -> DetectorSpec {
        DetectorSpec::Spca {
            lambda: None,
            lambda_scale: Some(lambda_scale),
            max_iters,
            obj_tol: default_obj_tol(),
            step_size: None,
            threshold: DEFAULT_THRESHOLD_FRAC,
        }
    }

    pub fn default_name(&self) -> String {
        match self {
            DetectorSpec::Specnorm { .. } => "specnorm".into(),
            DetectorSpec::Chi2 { .. } => "chi2".into(),
            DetectorSpec::L1 { .. } => "l1".into(),
            DetectorSpec::Spca {
                lambda, lambda_scale, ..
            } => match (lambda, lambda_scale) {
                (Some(l), _) => format!("spca[lambda={l}]"),
                (None, Some(s)) => format!("spca[scale={s}]"),
                (None, None) => "spca".into(),
            },
        }
    }

    /// Eigenpairs this detector needs from the shared eigensolve.
    fn eigenpairs_needed(&self) -> usize {
        match self {
            DetectorSpec::Specnorm { .. } | DetectorSpec::Spca { .. } => 1,
            DetectorSpec::Chi2 { .. } => 2,
            DetectorSpec::L1 { m, .. } => *m,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            DetectorSpec::L1 { m, .. } if *m == 0 => Err(Error::Config("l1 detector needs m >= 1".into())),
            DetectorSpec::Spca {
                lambda, lambda_scale, ..
            } if lambda.is_some() == lambda_scale.is_some() => Err(Error::Config(
                "spca detector needs exactly one of lambda and lambda_scale".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(flatten)]
    pub spec: DetectorSpec,
}

impl DetectorConfig {
    pub fn new(spec: DetectorSpec) -> DetectorConfig {
        DetectorConfig { name: None, spec }
    }

    pub fn named(name: &str, spec: DetectorSpec) -> DetectorConfig {
        DetectorConfig {
            name: Some(name.to_string()),
            spec,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.spec.default_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Hypotheses {
    #[default]
    Both,
    H0,
    H1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub hypotheses: Hypotheses,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default = "default_recall")]
    pub recall: f64,
}

fn default_recall() -> f64 {
    DEFAULT_RECALL
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            recall: DEFAULT_RECALL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub residuals: ExpectedValueMode,
    #[serde(default)]
    pub signal: Option<SignalModel>,
    #[serde(default)]
    pub embedding: EmbeddingSpec,
    #[serde(rename = "detector")]
    pub detectors: Vec<DetectorConfig>,
    #[serde(default)]
    pub metrics: MetricsSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.experiment.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("at least one [[detector]] is required".into()));
        }
        for d in &self.detectors {
            d.spec.validate()?;
        }
        if let Some(s) = &self.signal {
            s.validate()?;
        }
        if self.experiment.hypotheses != Hypotheses::H0 && self.signal.is_none() {
            return Err(Error::Config("H1 trials need a [signal] section".into()));
        }
        if !(self.metrics.recall > 0.0 && self.metrics.recall <= 1.0) {
            return Err(Error::Config(format!(
                "recall level {} outside (0, 1]",
                self.metrics.recall
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        })
    }
}

/// Result of one detector on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorResult {
    pub detector: String,
    /// Oriented so that larger means more anomalous.
    pub statistic: f64,
    pub flagged: Vec<usize>,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub hypothesis: Hypothesis,
    pub planted: Vec<usize>,
    pub results: Vec<DetectorResult>,
    pub runtime_ms: f64,
}

/// Everything shared across the trials of one experiment.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub model: NoiseModel,
    builder: ResidualsBuilder,
    expected_degrees: Vec<f64>,
    calibrations: Vec<Option<NullCalibration>>,
}

impl Experiment {
    /// Resolves the models and computes or loads any null calibration.
    pub fn prepare(config: ExperimentConfig, exec: Execution) -> Result<Experiment> {
        config.validate()?;
        let model = config.noise.model()?;
        let n = model.n();
        let builder = ResidualsBuilder::new(&model, config.residuals)?;
        let expected_degrees = model.expected_degrees();
        let mut calibrations = Vec::new();
        for d in &config.detectors {
            calibrations.push(match &d.spec {
                DetectorSpec::L1 {
                    m,
                    calibration_trials,
                    calibration,
                    ..
                } => Some(match calibration {
                    Some(path) => NullCalibration::from_json(&std::fs::read_to_string(path)?)?,
                    None => calibrate_null(
                        &model,
                        config.residuals,
                        (*m).min(n - 1),
                        *calibration_trials,
                        RngSeed::new(config.experiment.seed, 0),
                        exec,
                    )?,
                }),
                _ => None,
            });
        }
        Ok(Experiment {
            config,
            model,
            builder,
            expected_degrees,
            calibrations,
        })
    }

    pub fn calibration(&self, detector: usize) -> Option<&NullCalibration> {
        self.calibrations.get(detector).and_then(Option::as_ref)
    }

    fn stream(&self, hypothesis: Hypothesis, trial: usize) -> u64 {
        match hypothesis {
            Hypothesis::H0 => trial as u64,
            Hypothesis::H1 => (self.config.experiment.trials + trial) as u64,
        }
    }

    /// Samples the observed graph of one trial and the planted vertices.
    pub fn sample_trial(&self, hypothesis: Hypothesis, trial: usize) -> Result<(Graph, Vec<usize>)> {
        let seed = RngSeed::new(self.config.experiment.seed, self.stream(hypothesis, trial));
        let background = self.model.sample(seed.derive(tag::BACKGROUND))?;
        match (hypothesis, &self.config.signal) {
            (Hypothesis::H1, Some(signal)) => {
                let sg = sample_signal(signal, seed.derive(tag::SIGNAL))?;
                let chosen = choose_embedding_vertices(
                    &self.expected_degrees,
                    signal.n(),
                    self.config.embedding.policy(),
                    seed.derive(tag::EMBEDDING),
                )?;
                let mut targets = chosen.to_vec();
                targets.shuffle(&mut seed.derive(tag::PLACEMENT).rng());
                let g = background.union(&sg, &Placement::new(targets))?;
                Ok((g, chosen.to_vec()))
            }
            (Hypothesis::H1, None) => Err(Error::Config("H1 trial without a signal model".into())),
            (Hypothesis::H0, _) => Ok((background, Vec::new())),
        }
    }

    /// Evaluates every configured detector on an observed graph.
    pub fn evaluate(&self, g: &Graph, seed: RngSeed) -> Result<Vec<DetectorResult>> {
        let op = self.builder.operator(g)?;
        evaluate_detectors(&op, &self.config.detectors, &self.calibrations, seed)
    }

    pub fn run_trial(&self, hypothesis: Hypothesis, trial: usize) -> Result<TrialRecord> {
        let start = Instant::now();
        let run = || -> Result<TrialRecord> {
            let (g, planted) = self.sample_trial(hypothesis, trial)?;
            let seed = RngSeed::new(self.config.experiment.seed, self.stream(hypothesis, trial));
            let results = self.evaluate(&g, seed)?;
            Ok(TrialRecord {
                trial,
                hypothesis,
                planted,
                results,
                runtime_ms: 0.0,
            })
        };
        let mut rec = run().map_err(|e| e.in_trial(trial))?;
        rec.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(rec)
    }

    /// All trials of one hypothesis, in trial order.
    pub fn run_hypothesis(&self, hypothesis: Hypothesis, exec: Execution) -> Result<Vec<TrialRecord>> {
        par::try_map(exec, self.config.experiment.trials, |t| {
            self.run_trial(hypothesis, t)
        })
    }

    /// The configured hypotheses, H0 records first.
    pub fn run(&self, exec: Execution) -> Result<Vec<TrialRecord>> {
        let mut records = Vec::new();
        if self.config.experiment.hypotheses != Hypotheses::H1 {
            records.extend(self.run_hypothesis(Hypothesis::H0, exec)?);
        }
        if self.config.experiment.hypotheses != Hypotheses::H0 {
            records.extend(self.run_hypothesis(Hypothesis::H1, exec)?);
        }
        Ok(records)
    }
}

/// Runs `detectors` on one residuals operator, sharing a single eigensolve.
/// `calibrations[k]` must be present for every L1 detector `k`.
pub fn evaluate_detectors(
    op: &ResidualsOperator,
    detectors: &[DetectorConfig],
    calibrations: &[Option<NullCalibration>],
    seed: RngSeed,
) -> Result<Vec<DetectorResult>> {
    let n = op.dim();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "graph with {n} vertices is too small"
        )));
    }
    let eig_count = detectors
        .iter()
        .map(|d| d.spec.eigenpairs_needed())
        .max()
        .unwrap_or(1)
        .min(n - 1);
    let opts = LanczosOptions::default().with_seed(seed.derive(tag::EIGEN_START).master);
    let eigs = top_eigenpairs(op, eig_count, &opts)?;
    let mut dense = None;
    let mut out = Vec::with_capacity(detectors.len());
    for (k, d) in detectors.iter().enumerate() {
        let outcome = match &d.spec {
            DetectorSpec::Specnorm { threshold } => {
                let mut o = identify_threshold(&eigs.vectors[0], *threshold)?;
                o.statistic = stat_spectral_norm(&eigs)?;
                o
            }
            DetectorSpec::Chi2 { grid, exact, kmeans } => {
                chi2_outcome(&eigs, *grid, *exact, *kmeans, seed.derive(tag::KMEANS))?
            }
            DetectorSpec::L1 { threshold, .. } => {
                let cal = calibrations.get(k).and_then(Option::as_ref).ok_or_else(|| {
                    Error::Config(format!("detector {} has no null calibration", d.label()))
                })?;
                let (stat, idx) = stat_l1_deviation(&eigs, cal)?;
                let mut o = identify_threshold(&eigs.vectors[idx], *threshold)?;
                o.statistic = stat;
                o
            }
            DetectorSpec::Spca {
                lambda,
                lambda_scale,
                max_iters,
                obj_tol,
                step_size,
                threshold,
            } => {
                let b = dense.get_or_insert_with(|| op.to_dense());
                let n = b.nrows() as f64;
                let lambda = match (lambda, lambda_scale) {
                    (Some(l), _) => *l,
                    (None, Some(s)) => s * eigs.values[0].max(0.0) / n,
                    (None, None) => unreachable!("validated"),
                };
                let cfg = SpcaConfig {
                    lambda,
                    step_size: step_size.map_or(StepSize::Auto, StepSize::Fixed),
                    max_iters: *max_iters,
                    obj_tol: *obj_tol,
                };
                let res = solve_spca(b, &cfg)?;
                let mut o = identify_sparse(&res, *threshold)?;
                o.statistic = -stat_sparse_pca(&res);
                o
            }
        };
        if !outcome.statistic.is_finite() {
            return Err(Error::NonFinite("detection statistic"));
        }
        out.push(DetectorResult {
            detector: d.label(),
            statistic: outcome.statistic,
            flagged: outcome.flagged.to_vec(),
            scores: outcome.scores,
        });
    }
    Ok(out)
}

fn chi2_outcome(
    eigs: &EigenPairs,
    grid: usize,
    exact: bool,
    kmeans: KmeansParams,
    seed: RngSeed,
) -> Result<DetectionOutcome> {
    if eigs.len() < 2 {
        return Err(Error::InvalidParameter("χ² needs two eigenvectors".into()));
    }
    let (u1, u2) = (&eigs.vectors[0], &eigs.vectors[1]);
    let search = if exact {
        RotationSearch::Exact
    } else {
        RotationSearch::Grid(grid)
    };
    let mut o = identify_kmeans(u1, u2, kmeans, seed)?;
    o.statistic = stat_chi2_max(u1, u2, search)?;
    Ok(o)
}

/// Convenience wrapper: prepare and run.
pub fn run_monte_carlo(config: &ExperimentConfig, exec: Execution) -> Result<Vec<TrialRecord>> {
    Experiment::prepare(config.clone(), exec)?.run(exec)
}

/// Statistics of one detector under one hypothesis.
pub fn statistics(records: &[TrialRecord], detector: usize, hypothesis: Hypothesis) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.hypothesis == hypothesis)
        .map(|r| r.results[detector].statistic)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorSummary {
    pub detector: String,
    pub auc: Option<f64>,
    pub eer: Option<f64>,
    pub recall_level: f64,
    /// Mean precision at the recall level over H1 trials.
    pub precision_at_recall: Option<f64>,
    pub h0_trials: usize,
    pub h1_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub version: u32,
    pub seed: u64,
    pub detectors: Vec<DetectorSummary>,
}

pub fn summarize_detector(records: &[TrialRecord], detector: usize, recall: f64) -> Result<DetectorSummary> {
    let h0 = statistics(records, detector, Hypothesis::H0);
    let h1 = statistics(records, detector, Hypothesis::H1);
    let curve: Option<RocSummary> = if h0.is_empty() || h1.is_empty() {
        None
    } else {
        Some(roc(&h0, &h1)?)
    };
    let mut precisions = Vec::new();
    for r in records.iter().filter(|r| r.hypothesis == Hypothesis::H1) {
        let n = r.results[detector].scores.len();
        let truth = VertexSubset::new(r.planted.iter().copied(), n)?;
        precisions.push(precision_at_recall(&r.results[detector].scores, &truth, recall)?);
    }
    let name = records
        .first()
        .map(|r| r.results[detector].detector.clone())
        .unwrap_or_default();
    Ok(DetectorSummary {
        detector: name,
        auc: curve.as_ref().map(|c| c.auc),
        eer: curve.as_ref().map(|c| c.eer),
        recall_level: recall,
        precision_at_recall: (!precisions.is_empty())
            .then(|| precisions.iter().sum::<f64>() / precisions.len() as f64),
        h0_trials: h0.len(),
        h1_trials: h1.len(),
    })
}

pub fn summarize(config: &ExperimentConfig, records: &[TrialRecord]) -> Result<ExperimentSummary> {
    let detectors = (0..config.detectors.len())
        .map(|d| summarize_detector(records, d, config.metrics.recall))
        .collect::<Result<_>>()?;
    Ok(ExperimentSummary {
        version: 1,
        seed: config.experiment.seed,
        detectors,
    })
}

fn join(ids: &[usize]) -> String {
    ids.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

/// One row per trial and detector. `runtime_ms` is wall-clock and is only
/// written when asked for, so default output is byte-reproducible.
pub fn records_csv(records: &[TrialRecord], timing: bool) -> String {
    let mut out = String::from("# specdet trials v1\n");
    out.push_str("trial,hypothesis,detector,statistic,");
    if timing {
        out.push_str("runtime_ms,");
    }
    out.push_str("planted,flagged\n");
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by_key(|r| (r.hypothesis == Hypothesis::H1, r.trial));
    for r in sorted {
        for d in &r.results {
            let _ = write!(
                out,
                "{},{},{},{:e},",
                r.trial, r.hypothesis, d.detector, d.statistic
            );
            if timing {
                let _ = write!(out, "{:.3},", r.runtime_ms);
            }
            let _ = writeln!(out, "{},{}", join(&r.planted), join(&d.flagged));
        }
    }
    out
}
