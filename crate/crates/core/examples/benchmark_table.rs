//! Finite-sample benchmark: shift interventions on five nodes, n = 5000.
//! Pass a trial count as the first argument (default 10).

use softint::bench::{summary_csv, sweep, TrialConfig};

fn main() -> softint::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let cells = [40, 100].map(|p| TrialConfig {
        p,
        ..TrialConfig::default()
    });
    let summaries = sweep(&cells, trials, 42)?;
    for s in &summaries {
        println!(
            "p={:>3}: precision {:.2}±{:.2}, recall {:.2}±{:.2}, {:.3} s per trial, {} failed",
            s.config.p,
            s.precision.mean,
            s.precision.std,
            s.recall.mean,
            s.recall.std,
            s.time.mean,
            s.failures.len()
        );
    }
    print!("\n{}", summary_csv(&summaries, true));
    Ok(())
}
