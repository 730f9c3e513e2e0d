//! File round trip: write sampled data as CSV, read it back, estimate and
//! save the result JSON.

use softint::estimator::{estimate_targets, EstimatorConfig};
use softint::io::{ingest_data, write_matrix_csv, GraphFile, ResultFile};
use softint::sem::{InterventionModel, InterventionSpec};
use softint::bench::generate_er_sem;
use softint::CovariancePair;

fn main() -> softint::Result<()> {
    let dir = std::env::temp_dir().join("softint-data-files");
    std::fs::create_dir_all(&dir)?;
    let sem1 = generate_er_sem(30, 1.5, (0.25, 1.0), 3)?;
    let sem2 = sem1.intervene(&InterventionSpec::new([4, 11, 20], InterventionModel::SHIFT))?;
    GraphFile::from_sem(&sem1).write(&dir.join("graph.json"))?;
    write_matrix_csv(&dir.join("obs.csv"), &sem1.sample(5000, 1))?;
    write_matrix_csv(&dir.join("int.csv"), &sem2.sample(5000, 2))?;

    let (x1, n1) = ingest_data(&dir.join("obs.csv"))?;
    let (x2, n2) = ingest_data(&dir.join("int.csv"))?;
    let pair = CovariancePair::from_samples(&x1, &x2, false)?;
    let config = EstimatorConfig::default();
    let est = estimate_targets(&pair, &config)?;
    ResultFile::new(&est, &config, false).write(&dir.join("result.json"))?;
    println!("read {n1} + {n2} rows; targets {:?}", est.targets);
    println!("files in {}", dir.display());
    Ok(())
}
