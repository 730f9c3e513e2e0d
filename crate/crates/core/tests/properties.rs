//! Randomised invariants over generated models.

use nalgebra::DMatrix;
use proptest::prelude::*;

use softint::bench::generate_er_sem;
use softint::io::GraphFile;
use softint::linalg::{max_abs, principal_submatrix, spd_inverse};
use softint::oracle::d_separated;
use softint::pde::postprocess;
use softint::sem::LinearSem;
use softint::NodeSet;

fn model(p: usize, seed: u64, vars: &[f64]) -> LinearSem {
    let base = generate_er_sem(p, 1.5f64.min(p as f64 - 1.0).max(0.0), (0.25, 1.0), seed).unwrap();
    let vars: Vec<f64> = (0..p).map(|i| vars[i % vars.len()]).collect();
    LinearSem::new(base.dag().clone(), base.weights().clone(), vars, vec![0.0; p]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_entries_match_the_matrix_product(
        p in 2usize..12,
        seed in any::<u64>(),
        vars in prop::collection::vec(0.3f64..3.0, 1..6),
    ) {
        let sem = model(p, seed, &vars);
        let theta = sem.precision();
        for i in 0..p {
            for j in 0..p {
                prop_assert!((sem.precision_entry(i, j) - theta[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn covariance_inverts_precision(p in 1usize..15, seed in any::<u64>(), vars in prop::collection::vec(0.3f64..3.0, 1..6)) {
        let sem = model(p, seed, &vars);
        let prod = sem.covariance() * sem.precision();
        prop_assert!(max_abs(&(prod - DMatrix::identity(p, p))) < 1e-9);
    }

    #[test]
    fn graph_json_round_trips(p in 1usize..20, seed in any::<u64>(), vars in prop::collection::vec(0.3f64..3.0, 1..6)) {
        let sem = model(p, seed, &vars);
        let text = serde_json::to_string(&GraphFile::from_sem(&sem)).unwrap();
        let back: GraphFile = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.to_sem().unwrap(), sem);
    }

    #[test]
    fn thresholding_is_idempotent(values in prop::collection::vec(-1.0f64..1.0, 16), eps in 0.0f64..0.8) {
        let raw = DMatrix::from_vec(4, 4, values);
        let once = postprocess(&raw, eps);
        prop_assert_eq!(postprocess(&once, eps), once.clone());
        prop_assert_eq!(once.transpose(), once);
    }

    #[test]
    fn ancestral_restriction_matches_marginal_precision(
        p in 2usize..10,
        seed in any::<u64>(),
        vars in prop::collection::vec(0.3f64..3.0, 1..6),
        picks in prop::collection::vec(any::<bool>(), 10),
    ) {
        let sem = model(p, seed, &vars);
        let chosen: NodeSet = (0..p).filter(|&v| picks[v]).collect();
        prop_assume!(!chosen.is_empty());
        let subset = sem.dag().ancestral_closure(&chosen);
        let nodes: Vec<usize> = subset.iter().copied().collect();
        let r = sem.restricted(&subset).unwrap();
        let marginal = spd_inverse(&principal_submatrix(&sem.covariance(), &nodes), &nodes).unwrap();
        prop_assert!(max_abs(&(r.precision() - marginal)) < 1e-9);
    }

    #[test]
    fn d_separation_is_symmetric(p in 3usize..10, seed in any::<u64>(), picks in prop::collection::vec(any::<bool>(), 10)) {
        let sem = model(p, seed, &[1.0]);
        let z: NodeSet = (2..p).filter(|&v| picks[v]).collect();
        prop_assert_eq!(d_separated(sem.dag(), 0, 1, &z), d_separated(sem.dag(), 1, 0, &z));
    }
}
