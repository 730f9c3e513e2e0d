//! File formats: graph JSON, result JSON and numeric CSV matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::estimator::{CrossClassOrientation, EstimatorConfig, StageTimings, TargetEstimate};
use crate::sem::{Dag, InterventionModel, LinearSem};
use crate::{Edge, Error, NodeSet, Result};

/// Weighted DAG plus noise parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFile {
    pub p: usize,
    /// `[source, target, weight]`.
    pub edges: Vec<(usize, usize, f64)>,
    /// Noise variances.
    pub sigma: Vec<f64>,
    /// Noise means; absent means all zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
}

impl GraphFile {
    pub fn from_sem(sem: &LinearSem) -> Self {
        let edges = sem
            .dag()
            .edges()
            .iter()
            .map(|&(i, j)| (i, j, sem.weight(i, j)))
            .collect();
        let mu = sem
            .noise_mean()
            .iter()
            .any(|&m| m != 0.0)
            .then(|| sem.noise_mean().to_vec());
        GraphFile {
            p: sem.p(),
            edges,
            sigma: sem.noise_var().to_vec(),
            mu,
        }
    }

    pub fn to_sem(&self) -> Result<LinearSem> {
        let pairs: Vec<Edge> = self.edges.iter().map(|&(i, j, _)| (i, j)).collect();
        let dag = Dag::new(self.p, &pairs)?;
        let mut weights = DMatrix::zeros(self.p, self.p);
        for &(i, j, w) in &self.edges {
            weights[(i, j)] = w;
        }
        let mu = self.mu.clone().unwrap_or_else(|| vec![0.0; self.p]);
        LinearSem::new(dag, weights, self.sigma.clone(), mu)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

/// Ground truth written next to simulated data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub targets: NodeSet,
    pub model: InterventionModel,
    pub interventional: GraphFile,
}

/// Persisted estimator output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub version: String,
    pub targets: NodeSet,
    pub parents: BTreeSet<Edge>,
    pub extra_orientations: Vec<CrossClassOrientation>,
    pub s_delta: NodeSet,
    pub j0: NodeSet,
    pub source_sets: BTreeMap<usize, NodeSet>,
    pub classes: Vec<ClassSummary>,
    pub pde_call_count: usize,
    pub config: EstimatorConfig,
    /// Wall-clock seconds per stage; omitted unless requested so that
    /// repeated runs produce identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub members: Vec<usize>,
    pub sources: NodeSet,
    pub conditioning: Vec<usize>,
    pub intervened: NodeSet,
    pub witnesses: BTreeMap<usize, Vec<usize>>,
}

impl ResultFile {
    pub fn new(estimate: &TargetEstimate, config: &EstimatorConfig, with_timings: bool) -> Self {
        let d = &estimate.decomposition;
        let classes = d
            .classes
            .iter()
            .zip(&estimate.classes)
            .map(|(c, r)| ClassSummary {
                members: c.members.clone(),
                sources: c.sources.clone(),
                conditioning: r.conditioning.clone(),
                intervened: r.outcome.intervened.clone(),
                witnesses: r.outcome.witnesses.clone(),
            })
            .collect();
        ResultFile {
            version: env!("CARGO_PKG_VERSION").to_string(),
            targets: estimate.targets.clone(),
            parents: estimate.parents.clone(),
            extra_orientations: estimate.extra_orientations.clone(),
            s_delta: d.s_delta.clone(),
            j0: d.j0.clone(),
            source_sets: d.source_sets.clone(),
            classes,
            pde_call_count: estimate.pde_call_count,
            config: *config,
            timings: with_timings.then_some(estimate.timings),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Numeric CSV with an optional header, detected as a first row in which no
/// cell parses as a number. Rows and columns in errors are 1-based.
pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (index, record) in reader.records().enumerate() {
        let record = record?;
        let row = index + 1;
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        if index == 0 && record.iter().all(|c| c.parse::<f64>().is_err()) {
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRows {
                row,
                expected,
                found: record.len(),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
                row,
                column: c + 1,
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: c + 1,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            values.push(v);
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

/// Reads a data matrix; `n` is its row count.
pub fn ingest_data(path: &Path) -> Result<(DMatrix<f64>, usize)> {
    let m = parse_matrix_csv(&fs::read_to_string(path)?)?;
    let n = m.nrows();
    Ok((m, n))
}

/// Writes `m` row by row with 17 significant digits.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for r in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols()).map(|c| format!("{:.16e}", m[(r, c)])).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_and_headed_csv() {
        let m = parse_matrix_csv("1,2\n3,4\n5,6\n").unwrap();
        assert_eq!(m, DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let h = parse_matrix_csv("a,b\n1,2\n3,4\n").unwrap();
        assert_eq!(h.shape(), (2, 2));
    }

    #[test]
    fn csv_errors_locate_the_cell() {
        assert!(matches!(
            parse_matrix_csv("1,2\n3,4,5\n"),
            Err(Error::RaggedRows { row: 2, expected: 2, found: 3 })
        ));
        assert!(matches!(
            parse_matrix_csv("1,2\n3,x\n"),
            Err(Error::NonNumericCell { row: 2, column: 2, .. })
        ));
        assert!(matches!(
            parse_matrix_csv("a,b\n1,2,3\n"),
            Err(Error::RaggedRows { row: 2, .. })
        ));
    }

    #[test]
    fn matrix_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = DMatrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, -2.5e-300, 7.0]);
        write_matrix_csv(&path, &m).unwrap();
        assert_eq!(ingest_data(&path).unwrap().0, m);
    }

    #[test]
    fn graph_file_round_trip() {
        let sem = LinearSem::from_weighted_edges(3, &[(0, 1, 0.5), (1, 2, -0.75)], vec![1.0, 2.0, 1.5])
            .unwrap();
        let g = GraphFile::from_sem(&sem);
        let text = serde_json::to_string(&g).unwrap();
        let back: GraphFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_sem().unwrap(), sem);
    }

    #[test]
    fn cyclic_graph_file_is_rejected() {
        let g = GraphFile {
            p: 2,
            edges: vec![(0, 1, 1.0), (1, 0, 1.0)],
            sigma: vec![1.0, 1.0],
            mu: None,
        };
        assert!(matches!(g.to_sem(), Err(Error::CycleDetected(_))));
    }
}
