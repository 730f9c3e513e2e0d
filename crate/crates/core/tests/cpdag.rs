//! Refinement of an observational CPDAG with estimated orientations.

use softint::bench::{derive_seed, generate_instance, TrialConfig};
use softint::estimator::{estimate_targets, refine_cpdag, Cpdag, EstimatorConfig};
use softint::oracle::interventional_cpdag;
use softint::sem::InterventionModel;

/// Every orientation produced from exact population answers agrees with the
/// true graph, and the result is never less oriented than the input CPDAG.
#[test]
fn population_refinement_is_sound() {
    let config = EstimatorConfig::population();
    for t in 0..100 {
        let inst = generate_instance(&TrialConfig {
            seed: derive_seed(77, 0, t),
            ..TrialConfig::population(10, 2.0, 3, InterventionModel::VARIANCE)
        })
        .unwrap();
        let dag = inst.sem1.dag();
        let cpdag = Cpdag::from_dag(dag);
        let est = estimate_targets(&inst.pair, &config).unwrap();
        let refined = refine_cpdag(&cpdag, &est).unwrap();
        assert!(refined.conflicts.is_empty(), "trial {t}");
        assert!(refined.skipped.is_empty(), "trial {t}");
        for &(a, b) in refined.cpdag.directed() {
            assert!(dag.has_edge(a, b), "trial {t}: {a}->{b} is not in the graph");
        }
        assert!(cpdag.directed().is_subset(refined.cpdag.directed()));
        assert_eq!(
            refined.cpdag.directed().len() + refined.cpdag.undirected().len(),
            dag.edge_count()
        );
        // Never more oriented than the interventional class allows.
        let icpdag = interventional_cpdag(dag, &inst.targets).unwrap();
        assert!(refined.cpdag.directed().is_subset(icpdag.directed()), "trial {t}");
    }
}
