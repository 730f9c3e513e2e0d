//! Orienting an observational CPDAG with estimated parents, compared with the
//! interventional equivalence class.

use softint::bench::{generate_instance, TrialConfig};
use softint::estimator::{estimate_targets, refine_cpdag, Cpdag, EstimatorConfig};
use softint::oracle::interventional_cpdag;
use softint::sem::InterventionModel;

fn main() -> softint::Result<()> {
    let inst = generate_instance(&TrialConfig {
        seed: 5,
        ..TrialConfig::population(10, 2.0, 3, InterventionModel::VARIANCE)
    })?;
    let dag = inst.sem1.dag();
    let cpdag = Cpdag::from_dag(dag);
    let est = estimate_targets(&inst.pair, &EstimatorConfig::population())?;
    let refined = refine_cpdag(&cpdag, &est)?;
    let icpdag = interventional_cpdag(dag, &inst.targets)?;

    println!("edges {:?}", dag.edges());
    println!("targets {:?}, parents {:?}", est.targets, est.parents);
    println!("undirected before   {:?}", cpdag.undirected());
    println!("undirected after    {:?}", refined.cpdag.undirected());
    println!("undirected in class {:?}", icpdag.undirected());
    Ok(())
}
