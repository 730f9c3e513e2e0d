//! Five-node example: variance interventions on nodes 2 and 4, population
//! moments, exact backend. Prints every intermediate of the estimator.

use softint::estimator::{estimate_targets, EstimatorConfig};
use softint::sem::{Dag, InterventionModel, InterventionSpec, LinearSem};
use softint::CovariancePair;

fn main() -> softint::Result<()> {
    let dag = Dag::new(5, &[(0, 2), (2, 3), (1, 3), (1, 4), (3, 4)])?;
    let observational = LinearSem::uniform(dag, 1.0);
    let interventional =
        observational.intervene(&InterventionSpec::new([2, 4], InterventionModel::VARIANCE))?;
    let pair = CovariancePair::population(&observational, &interventional)?;

    let est = estimate_targets(&pair, &EstimatorConfig::population())?;
    let d = &est.decomposition;
    println!("changed nodes      {:?}", d.s_delta);
    println!("source nodes       {:?}", d.j0);
    for (k, sources) in &d.source_sets {
        println!("  sources of {k}     {sources:?}");
    }
    for (class, record) in d.classes.iter().zip(&est.classes) {
        println!(
            "class {:?}: conditioning {:?}, intervened {:?}, witnesses {:?}",
            class.members, record.conditioning, record.outcome.intervened, record.outcome.witnesses
        );
    }
    println!("targets            {:?}", est.targets);
    println!("parents            {:?}", est.parents);
    println!("cross-class        {:?}", est.extra_orientations);
    println!("PDE calls          {}", est.pde_call_count);
    Ok(())
}
