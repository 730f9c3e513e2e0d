//! Command-line front end. [`dispatch`] returns the process exit code:
//! 0 success, 1 usage error, 2 data error, 3 internal or solver error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{complexity_stats, generate_instance, summary_csv, sweep, trials_csv, write_text, BenchmarkGrid, TrialConfig};
use crate::estimator::{estimate_targets, Backend, EstimatorConfig, SourceTest};
use crate::io::{ingest_data, parse_matrix_csv, write_json, write_matrix_csv, GraphFile, ResultFile, TruthFile};
use crate::oracle::ground_truth;
use crate::pde::{CovariancePair, MomentKind};
use crate::sem::InterventionModel;
use crate::{Error, NodeSet, Result};

#[derive(Debug, Parser)]
#[command(name = "softint", version, about = "Soft-intervention target estimation for linear SEMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random SEM pair and write the graph and both data sets.
    Simulate(SimulateArgs),
    /// Estimate targets and parents from two data (or moment) files.
    Estimate(EstimateArgs),
    /// Run a grid of synthetic trials.
    Benchmark(BenchmarkArgs),
    /// Print the graph-derived decomposition for known targets.
    Oracle(OracleArgs),
    /// Percentiles of decomposition sizes over random instances.
    Complexity(ComplexityArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Shift,
    Variance,
    Randomized,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Admm,
    Exact,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceTestArg {
    Covariance,
    Pde,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 40)]
    p: usize,
    /// Expected neighbourhood size.
    #[arg(long, default_value_t = 1.5)]
    density: f64,
    /// Number of intervention targets.
    #[arg(long, default_value_t = 5)]
    targets: usize,
    #[arg(long, value_enum, default_value = "shift")]
    model: ModelArg,
    /// Mean shift or new noise variance; defaults to 1.0, 2.0 or 1.5 by model.
    #[arg(long)]
    param: Option<f64>,
    /// Samples per environment; 0 writes population second moments instead.
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_prefix: PathBuf,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Observational data (n x p CSV).
    #[arg(long)]
    obs: PathBuf,
    /// Interventional data (n x p CSV).
    #[arg(long)]
    int: PathBuf,
    /// Inputs are p x p second-moment matrices rather than samples.
    #[arg(long)]
    cov: bool,
    /// Center the data before forming second moments.
    #[arg(long)]
    centered: bool,
    #[arg(long, value_enum, default_value = "admm")]
    backend: BackendArg,
    #[arg(long, default_value_t = 0.1)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.05)]
    lambda2: f64,
    #[arg(long, default_value_t = 0.05)]
    lambda3: f64,
    #[arg(long, default_value_t = 0.015)]
    epsilon: f64,
    /// Parent-decision threshold [default: lambda3, or epsilon with the exact backend].
    #[arg(long)]
    parent_epsilon: Option<f64>,
    /// Relative tolerance of the variance-equality test.
    #[arg(long, default_value_t = 0.05)]
    var_tol: f64,
    #[arg(long, default_value_t = 15)]
    budget: usize,
    #[arg(long, value_enum, default_value = "covariance")]
    source_test: SourceTestArg,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    eps_abs: f64,
    #[arg(long, default_value_t = 1e-4)]
    eps_rel: f64,
    /// Include wall-clock timings in the result file.
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// JSON grid: {"trials": N, "seed": S, "cells": [TrialConfig, ...]}.
    #[arg(long)]
    grid: PathBuf,
    /// Per-cell summary CSV.
    #[arg(long)]
    out: PathBuf,
    /// Optional per-trial CSV.
    #[arg(long)]
    trials_out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    threads: Option<usize>,
    /// Append timing columns.
    #[arg(long)]
    with_timing: bool,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Comma-separated target nodes (0-based).
    #[arg(long, value_delimiter = ',')]
    targets: Vec<usize>,
}

#[derive(Debug, Args)]
struct ComplexityArgs {
    #[arg(long, default_value_t = 100)]
    p: usize,
    #[arg(long, default_value_t = 5.0)]
    density: f64,
    #[arg(long, default_value_t = 5)]
    targets: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV [default: standard output].
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                2
            } else {
                3
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Oracle(a) => oracle(a),
        Command::Complexity(a) => complexity(a),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn model_of(model: ModelArg, param: Option<f64>) -> InterventionModel {
    match (model, param) {
        (ModelArg::Shift, None) => InterventionModel::SHIFT,
        (ModelArg::Shift, Some(delta)) => InterventionModel::Shift { delta },
        (ModelArg::Variance, None) => InterventionModel::VARIANCE,
        (ModelArg::Variance, Some(new_var)) => InterventionModel::Variance { new_var },
        (ModelArg::Randomized, None) => InterventionModel::RANDOMIZED,
        (ModelArg::Randomized, Some(new_var)) => InterventionModel::Randomized { new_var },
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let config = TrialConfig {
        p: a.p,
        density: a.density,
        target_count: a.targets,
        model: model_of(a.model, a.param),
        n: 0,
        seed: a.seed,
        // No screening: simulated data are returned as drawn.
        estimator: EstimatorConfig::default(),
        ..TrialConfig::default()
    };
    let inst = generate_instance(&config)?;
    GraphFile::from_sem(&inst.sem1).write(&with_suffix(&a.out_prefix, ".graph.json"))?;
    write_json(
        &with_suffix(&a.out_prefix, ".truth.json"),
        &TruthFile {
            targets: inst.targets.clone(),
            model: config.model,
            interventional: GraphFile::from_sem(&inst.sem2),
        },
    )?;
    let (obs, int) = if a.n == 0 {
        (inst.pair.sigma1().clone(), inst.pair.sigma2().clone())
    } else {
        (
            inst.sem1.sample(a.n, crate::bench::derive_seed(a.seed, 1, 0)),
            inst.sem2.sample(a.n, crate::bench::derive_seed(a.seed, 1, 1)),
        )
    };
    write_matrix_csv(&with_suffix(&a.out_prefix, ".obs.csv"), &obs)?;
    write_matrix_csv(&with_suffix(&a.out_prefix, ".int.csv"), &int)?;
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let pair = if a.cov {
        let s1 = parse_matrix_csv(&std::fs::read_to_string(&a.obs)?)?;
        let s2 = parse_matrix_csv(&std::fs::read_to_string(&a.int)?)?;
        check_columns(s1.ncols(), s2.ncols())?;
        CovariancePair::new(s1, s2, 0, 0, MomentKind::Population)?
    } else {
        let (x1, _) = ingest_data(&a.obs)?;
        let (x2, _) = ingest_data(&a.int)?;
        check_columns(x1.ncols(), x2.ncols())?;
        CovariancePair::from_samples(&x1, &x2, a.centered)?
    };
    let config = EstimatorConfig {
        backend: match a.backend {
            BackendArg::Admm => Backend::Admm,
            BackendArg::Exact => Backend::Exact,
        },
        lambda1: a.lambda1,
        lambda2: a.lambda2,
        lambda3: a.lambda3,
        epsilon: a.epsilon,
        parent_epsilon: a.parent_epsilon,
        var_tol: a.var_tol,
        budget: a.budget,
        source_test: match a.source_test {
            SourceTestArg::Covariance => SourceTest::CovarianceDiagonal,
            SourceTestArg::Pde => SourceTest::Pde,
        },
        rho: a.rho,
        max_iter: a.max_iter,
        eps_abs: a.eps_abs,
        eps_rel: a.eps_rel,
    };
    let est = estimate_targets(&pair, &config)?;
    ResultFile::new(&est, &config, a.timings).write(&a.out)
}

fn check_columns(p1: usize, p2: usize) -> Result<()> {
    if p1 != p2 {
        return Err(Error::DimensionMismatch(format!(
            "observational file has {p1} columns, interventional file has {p2}"
        )));
    }
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let grid: BenchmarkGrid = serde_json::from_str(&std::fs::read_to_string(&a.grid)?)?;
    let run = || sweep(&grid.cells, grid.trials, grid.seed);
    let cells = match a.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    for s in &cells {
        for f in &s.failures {
            eprintln!("cell {}: {f}", s.cell);
        }
    }
    write_text(&a.out, &summary_csv(&cells, a.with_timing))?;
    if let Some(path) = &a.trials_out {
        write_text(path, &trials_csv(&cells, a.with_timing))?;
    }
    Ok(())
}

fn oracle(a: OracleArgs) -> Result<()> {
    let sem = GraphFile::read(&a.graph)?.to_sem()?;
    let targets: NodeSet = a.targets.into_iter().collect();
    let truth = ground_truth(sem.dag(), &targets)?;
    println!("{}", serde_json::to_string_pretty(&truth)?);
    Ok(())
}

fn complexity(a: ComplexityArgs) -> Result<()> {
    let table = complexity_stats(a.p, a.density, a.targets, a.trials, a.seed)?;
    let csv = table.to_csv();
    match &a.out {
        Some(path) => write_text(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
