//! Synthetic experiments: random SEMs, trial execution, scoring and
//! aggregation.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimator::{estimate_targets, Backend, EstimatorConfig};
use crate::oracle::ground_truth;
use crate::pde::CovariancePair;
use crate::sem::{
    check_i_faithfulness, Dag, InterventionModel, InterventionSpec, LinearSem, SubsetPolicy,
};
use crate::{Edge, Error, NodeSet, Result};

/// Regeneration attempts before a trial gives up on finding a faithful instance.
pub const MAX_REGENERATIONS: usize = 100;

/// Tolerance of the faithfulness screen used for exact-backend trials.
pub const FAITHFULNESS_TOL: f64 = 1e-6;

/// Random DAG over a uniformly permuted order: every forward pair is an edge
/// with probability `c / (p - 1)`, weights uniform on `±[lo, hi]`, unit noise
/// variances and zero means.
pub fn generate_er_sem(p: usize, c: f64, weight_range: (f64, f64), seed: u64) -> Result<LinearSem> {
    er_sem_with_rng(p, c, weight_range, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn er_sem_with_rng<R: Rng>(
    p: usize,
    c: f64,
    (lo, hi): (f64, f64),
    rng: &mut R,
) -> Result<LinearSem> {
    if !(c >= 0.0 && (p <= 1 || c <= (p - 1) as f64)) {
        return Err(Error::InvalidConfig(format!(
            "density {c} must lie in [0, p - 1] for p = {p}"
        )));
    }
    if !(0.0 < lo && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidConfig(format!("weight range [{lo}, {hi}]")));
    }
    let prob = if p > 1 { c / (p - 1) as f64 } else { 0.0 };
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for a in 0..p {
        for b in a + 1..p {
            if rng.random::<f64>() < prob {
                let magnitude = rng.random_range(lo..=hi);
                let w = if rng.random::<bool>() { magnitude } else { -magnitude };
                edges.push((order[a], order[b], w));
            }
        }
    }
    LinearSem::from_weighted_edges(p, &edges, vec![1.0; p])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialConfig {
    pub p: usize,
    /// Expected neighbourhood size.
    pub density: f64,
    pub target_count: usize,
    pub model: InterventionModel,
    /// Samples per environment; 0 uses population second moments.
    pub n: usize,
    pub seed: u64,
    /// Subtract column means before forming second moments.
    pub centered: bool,
    pub weight_lo: f64,
    pub weight_hi: f64,
    pub estimator: EstimatorConfig,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            p: 40,
            density: 1.5,
            target_count: 5,
            model: InterventionModel::SHIFT,
            n: 5000,
            seed: 0,
            centered: false,
            weight_lo: 0.25,
            weight_hi: 1.0,
            estimator: EstimatorConfig::default(),
        }
    }
}

impl TrialConfig {
    /// Population version: exact backend, `n = 0`.
    pub fn population(p: usize, density: f64, target_count: usize, model: InterventionModel) -> Self {
        TrialConfig {
            p,
            density,
            target_count,
            model,
            n: 0,
            estimator: EstimatorConfig::population(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::InvalidConfig("p must be positive".into()));
        }
        if self.target_count > self.p {
            return Err(Error::InvalidConfig(format!(
                "{} targets requested in a graph of {} nodes",
                self.target_count, self.p
            )));
        }
        self.estimator.validate()
    }
}

/// A generated instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub sem1: LinearSem,
    pub sem2: LinearSem,
    pub targets: NodeSet,
    pub pair: CovariancePair,
    pub regenerations: usize,
}

fn draw_targets<R: Rng>(p: usize, count: usize, rng: &mut R) -> NodeSet {
    sample_indices(rng, p, count).into_iter().collect()
}

/// Builds the instance for `config`. Exact-backend configurations skip
/// instances that fail the faithfulness screen, moving to the next seed.
pub fn generate_instance(config: &TrialConfig) -> Result<Instance> {
    config.validate()?;
    let screen = config.estimator.backend == Backend::Exact;
    for attempt in 0..=MAX_REGENERATIONS {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(attempt as u64));
        let sem1 = er_sem_with_rng(
            config.p,
            config.density,
            (config.weight_lo, config.weight_hi),
            &mut rng,
        )?;
        let targets = draw_targets(config.p, config.target_count, &mut rng);
        let sem2 = sem1.intervene(&InterventionSpec {
            targets: targets.clone(),
            model: config.model,
        })?;
        if screen
            && !check_i_faithfulness(&sem1, &sem2, SubsetPolicy::Queried, FAITHFULNESS_TOL)?.holds
        {
            continue;
        }
        let pair = if config.n == 0 {
            CovariancePair::population(&sem1, &sem2)?
        } else {
            let x1 = sem1.sample(config.n, rng.random());
            let x2 = sem2.sample(config.n, rng.random());
            CovariancePair::from_samples(&x1, &x2, config.centered)?
        };
        return Ok(Instance {
            sem1,
            sem2,
            targets,
            pair,
            regenerations: attempt,
        });
    }
    Err(Error::InvalidConfig(format!(
        "no faithful instance within {MAX_REGENERATIONS} regenerations"
    )))
}

/// Precision, recall and F1 of an estimated set. An empty estimate has
/// precision 1, an empty truth recall 1, and F1 is 0 if either is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn score<T: Ord>(estimated: &BTreeSet<T>, truth: &BTreeSet<T>) -> Scores {
    let hits = estimated.intersection(truth).count() as f64;
    let precision = if estimated.is_empty() {
        1.0
    } else {
        hits / estimated.len() as f64
    };
    let recall = if truth.is_empty() {
        1.0
    } else {
        hits / truth.len() as f64
    };
    let f1 = if precision == 0.0 || recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores {
        precision,
        recall,
        f1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub targets: Scores,
    pub parents: Scores,
    pub exact_target_match: bool,
    pub exact_parent_match: bool,
}

pub fn evaluate(
    estimated_targets: &NodeSet,
    estimated_parents: &BTreeSet<Edge>,
    true_targets: &NodeSet,
    true_parents: &BTreeSet<Edge>,
) -> Metrics {
    Metrics {
        targets: score(estimated_targets, true_targets),
        parents: score(estimated_parents, true_parents),
        exact_target_match: estimated_targets == true_targets,
        exact_parent_match: estimated_parents == true_parents,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub true_targets: NodeSet,
    pub estimated_targets: NodeSet,
    pub true_parents: BTreeSet<Edge>,
    pub estimated_parents: BTreeSet<Edge>,
    pub metrics: Metrics,
    pub p_delta: usize,
    pub max_class_size: usize,
    pub pde_call_count: usize,
    pub regenerations: usize,
    /// Estimation wall time in seconds.
    pub elapsed: f64,
}

pub fn run_trial(config: &TrialConfig) -> Result<TrialResult> {
    let inst = generate_instance(config)?;
    let truth = ground_truth(inst.sem1.dag(), &inst.targets)?;
    let start = Instant::now();
    let est = estimate_targets(&inst.pair, &config.estimator)?;
    let elapsed = start.elapsed().as_secs_f64();
    Ok(TrialResult {
        seed: config.seed,
        metrics: evaluate(&est.targets, &est.parents, &inst.targets, &truth.parents),
        true_targets: inst.targets,
        estimated_targets: est.targets.clone(),
        true_parents: truth.parents,
        estimated_parents: est.parents.clone(),
        p_delta: est.decomposition.p_delta(),
        max_class_size: est.decomposition.max_class_size(),
        pde_call_count: est.pde_call_count,
        regenerations: inst.regenerations,
        elapsed,
    })
}

/// Seed of trial `trial` in cell `cell`.
pub fn derive_seed(master: u64, cell: usize, trial: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((cell as u64) << 32) | trial as u64);
    rng.random()
}

/// Benchmark input: cells share the trial count and master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkGrid {
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    pub cells: Vec<TrialConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for fewer than two values.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanStd::default();
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        MeanStd { mean, std }
    }
}

/// Aggregate of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub config: TrialConfig,
    pub completed: usize,
    pub failures: Vec<String>,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub parent_precision: MeanStd,
    pub parent_recall: MeanStd,
    pub parent_f1: MeanStd,
    /// Fraction of trials with the exact target set.
    pub p_hat: f64,
    /// Fraction of trials with the exact parent set.
    pub q_hat: f64,
    pub p_delta: MeanStd,
    pub max_class_size: MeanStd,
    pub regenerations: usize,
    pub time: MeanStd,
    pub trials: Vec<TrialResult>,
}

pub fn summarize(cell: usize, config: TrialConfig, outcomes: Vec<Result<TrialResult>>) -> CellSummary {
    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for (t, r) in outcomes.into_iter().enumerate() {
        match r {
            Ok(r) => trials.push(r),
            Err(e) => failures.push(format!("trial {t}: {e}")),
        }
    }
    let col = |f: &dyn Fn(&TrialResult) -> f64| MeanStd::of(&trials.iter().map(f).collect::<Vec<_>>());
    let rate = |f: &dyn Fn(&TrialResult) -> bool| {
        if trials.is_empty() {
            0.0
        } else {
            trials.iter().filter(|t| f(t)).count() as f64 / trials.len() as f64
        }
    };
    CellSummary {
        cell,
        config,
        completed: trials.len(),
        precision: col(&|t| t.metrics.targets.precision),
        recall: col(&|t| t.metrics.targets.recall),
        f1: col(&|t| t.metrics.targets.f1),
        parent_precision: col(&|t| t.metrics.parents.precision),
        parent_recall: col(&|t| t.metrics.parents.recall),
        parent_f1: col(&|t| t.metrics.parents.f1),
        p_hat: rate(&|t| t.metrics.exact_target_match),
        q_hat: rate(&|t| t.metrics.exact_parent_match),
        p_delta: col(&|t| t.p_delta as f64),
        max_class_size: col(&|t| t.max_class_size as f64),
        regenerations: trials.iter().map(|t| t.regenerations).sum(),
        time: col(&|t| t.elapsed),
        failures,
        trials,
    }
}

/// Runs `trials` trials per cell in parallel. Seeds come from
/// [`derive_seed`], so results do not depend on the worker count.
pub fn sweep(grid: &[TrialConfig], trials: usize, seed: u64) -> Result<Vec<CellSummary>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty benchmark grid".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let mut outcomes: Vec<Result<TrialResult>> = jobs
        .par_iter()
        .map(|&(c, t)| {
            run_trial(&TrialConfig {
                seed: derive_seed(seed, c, t),
                ..grid[c]
            })
        })
        .collect();
    let mut cells = Vec::with_capacity(grid.len());
    for (c, config) in grid.iter().enumerate().rev() {
        let rest = outcomes.split_off(c * trials);
        cells.push(summarize(c, *config, rest));
    }
    cells.reverse();
    Ok(cells)
}

const SUMMARY_COLUMNS: &[&str] = &[
    "cell", "p", "density", "targets", "model", "n", "backend", "lambda1", "lambda2", "lambda3",
    "epsilon", "completed", "failed", "precision_mean", "precision_std", "recall_mean",
    "recall_std", "f1_mean", "f1_std", "parent_precision_mean", "parent_precision_std",
    "parent_recall_mean", "parent_recall_std", "parent_f1_mean", "parent_f1_std", "p_hat",
    "q_hat", "p_delta_mean", "max_class_mean", "regenerations",
];

/// One row per cell. Timing columns are appended only when requested.
pub fn summary_csv(cells: &[CellSummary], with_timing: bool) -> String {
    let mut out = SUMMARY_COLUMNS.join(",");
    if with_timing {
        out.push_str(",time_mean,time_std");
    }
    out.push('\n');
    for s in cells {
        let c = &s.config;
        let e = &c.estimator;
        let backend = match e.backend {
            Backend::Admm => "admm",
            Backend::Exact => "exact",
        };
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.cell,
            c.p,
            c.density,
            c.target_count,
            c.model.name(),
            c.n,
            backend,
            e.lambda1,
            e.lambda2,
            e.lambda3,
            e.epsilon,
            s.completed,
            s.failures.len(),
            s.precision.mean,
            s.precision.std,
            s.recall.mean,
            s.recall.std,
            s.f1.mean,
            s.f1.std,
            s.parent_precision.mean,
            s.parent_precision.std,
            s.parent_recall.mean,
            s.parent_recall.std,
            s.parent_f1.mean,
            s.parent_f1.std,
            s.p_hat,
            s.q_hat,
            s.p_delta.mean,
            s.max_class_size.mean,
            s.regenerations,
        );
        if with_timing {
            let _ = write!(out, ",{},{}", s.time.mean, s.time.std);
        }
        out.push('\n');
    }
    out
}

/// One row per trial.
pub fn trials_csv(cells: &[CellSummary], with_timing: bool) -> String {
    let mut out = String::from(
        "cell,seed,true_targets,estimated_targets,precision,recall,f1,parent_precision,parent_recall,exact_targets,exact_parents,p_delta,max_class,pde_calls,regenerations",
    );
    if with_timing {
        out.push_str(",time");
    }
    out.push('\n');
    let set = |s: &NodeSet| s.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    for s in cells {
        for t in &s.trials {
            let m = &t.metrics;
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.cell,
                t.seed,
                set(&t.true_targets),
                set(&t.estimated_targets),
                m.targets.precision,
                m.targets.recall,
                m.targets.f1,
                m.parents.precision,
                m.parents.recall,
                m.exact_target_match,
                m.exact_parent_match,
                t.p_delta,
                t.max_class_size,
                t.pde_call_count,
                t.regenerations,
            );
            if with_timing {
                let _ = write!(out, ",{}", t.elapsed);
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Decomposition sizes from the graph alone (no estimation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityTable {
    pub p_delta: Vec<usize>,
    pub max_class: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileRow {
    pub percentile: u32,
    pub p_delta: usize,
    pub max_class: usize,
}

impl ComplexityTable {
    /// Nearest-rank percentile of each size, `q` in `0..=100`.
    pub fn percentile(&self, q: u32) -> PercentileRow {
        PercentileRow {
            percentile: q,
            p_delta: nearest_rank(&self.p_delta, q),
            max_class: nearest_rank(&self.max_class, q),
        }
    }

    /// Rows at 0, 5, ..., 100.
    pub fn rows(&self) -> Vec<PercentileRow> {
        (0..=100).step_by(5).map(|q| self.percentile(q)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("percentile,p_delta,max_class\n");
        for r in self.rows() {
            let _ = writeln!(out, "{},{},{}", r.percentile, r.p_delta, r.max_class);
        }
        out
    }
}

fn nearest_rank(sorted: &[usize], q: u32) -> usize {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q as f64 / 100.0 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn complexity_stats(
    p: usize,
    c: f64,
    target_count: usize,
    trials: usize,
    seed: u64,
) -> Result<ComplexityTable> {
    if target_count > p {
        return Err(Error::InvalidConfig("more targets than nodes".into()));
    }
    let sizes: Vec<(usize, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, t));
            let sem = er_sem_with_rng(p, c, (0.25, 1.0), &mut rng)?;
            let targets = draw_targets(p, target_count, &mut rng);
            let g = ground_truth(sem.dag(), &targets)?;
            let max_class = g.classes.iter().map(|c| c.members.len()).max().unwrap_or(0);
            Ok((g.s_delta.len(), max_class))
        })
        .collect::<Result<_>>()?;
    let mut p_delta: Vec<usize> = sizes.iter().map(|s| s.0).collect();
    let mut max_class: Vec<usize> = sizes.iter().map(|s| s.1).collect();
    p_delta.sort_unstable();
    max_class.sort_unstable();
    Ok(ComplexityTable { p_delta, max_class })
}

/// Targets drawn the same way a trial draws them.
pub fn random_targets(dag: &Dag, count: usize, seed: u64) -> NodeSet {
    draw_targets(dag.p(), count.min(dag.p()), &mut ChaCha8Rng::seed_from_u64(seed))
}
