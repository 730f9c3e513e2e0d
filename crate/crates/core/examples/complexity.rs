//! Sizes of the changed set and of the largest equivalence class on dense
//! random graphs, from the graph alone.

use softint::bench::complexity_stats;

fn main() -> softint::Result<()> {
    for targets in [5, 10] {
        let table = complexity_stats(100, 5.0, targets, 1000, 0)?;
        println!("{targets} targets");
        for q in [50, 90, 100] {
            let row = table.percentile(q);
            println!("  {q:>3}th percentile: changed {:>3}, largest class {:>2}", row.p_delta, row.max_class);
        }
    }
    Ok(())
}
