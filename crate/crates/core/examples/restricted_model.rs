//! Marginalising nodes out of a linear SEM and checking the restricted
//! parameters against the marginal covariance.

use softint::linalg::{max_abs, principal_submatrix, spd_inverse};
use softint::sem::LinearSem;
use softint::NodeSet;

fn main() -> softint::Result<()> {
    let sem = LinearSem::from_weighted_edges(
        5,
        &[(0, 1, 0.8), (1, 2, -0.5), (0, 3, 0.4), (2, 3, 1.2), (3, 4, 0.7)],
        vec![1.0, 0.5, 2.0, 1.0, 1.5],
    )?;
    for keep in [NodeSet::from([0, 2, 3]), NodeSet::from([1, 3, 4]), NodeSet::from([0, 4]), NodeSet::from([0, 1, 2])] {
        let r = sem.restricted(&keep)?;
        println!("subset {:?}", r.subset());
        println!("  weights\n{:.4}", r.weights());
        println!("  noise variances {:?}", r.noise_var());
        let nodes: Vec<usize> = keep.iter().copied().collect();
        let ancestral = sem.dag().ancestral_closure(&keep) == keep;
        if ancestral {
            let marginal = spd_inverse(&principal_submatrix(&sem.covariance(), &nodes), &nodes)?;
            println!("  ancestral; precision gap {:.2e}", max_abs(&(r.precision() - marginal)));
        }
    }
    Ok(())
}
