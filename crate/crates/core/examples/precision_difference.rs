//! ADMM estimate of a precision difference from samples, compared with the
//! population answer.

use softint::linalg::max_abs;
use softint::pde::{estimate_precision_difference, exact_precision_difference, AdmmConfig};
use softint::sem::{Dag, InterventionModel, InterventionSpec, LinearSem};
use softint::CovariancePair;

fn main() -> softint::Result<()> {
    let dag = Dag::new(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 3)])?;
    let sem1 = LinearSem::uniform(dag, 0.6);
    let sem2 = sem1.intervene(&InterventionSpec::new([3], InterventionModel::SHIFT))?;
    let all: Vec<usize> = (0..6).collect();

    let population = exact_precision_difference(&CovariancePair::population(&sem1, &sem2)?, &all, 1e-8)?;
    let sampled = CovariancePair::from_samples(&sem1.sample(20_000, 1), &sem2.sample(20_000, 2), false)?;
    let config = AdmmConfig::default().with_lambda(0.02).with_threshold(0.05);
    let estimate = estimate_precision_difference(&sampled, &all, &config)?;

    println!("population difference:\n{:.3}", population.delta());
    println!("ADMM estimate:\n{:.3}", estimate.delta());
    println!("diagnostics: {:?}", estimate.diagnostics);
    println!("max abs error {:.4}", max_abs(&(estimate.delta() - population.delta())));
    println!("support (population) {:?}", population.support());
    println!("support (estimate)   {:?}", estimate.support());
    Ok(())
}
