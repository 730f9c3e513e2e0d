use serde::{Deserialize, Serialize};

use super::LinearSem;
use crate::{Error, NodeSet, Result};

/// How the noise of each target node is perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterventionModel {
    /// Noise mean moves from its current value by `delta`.
    Shift { delta: f64 },
    /// Noise variance set to `new_var`.
    Variance { new_var: f64 },
    /// Incoming weights cut to zero and noise variance set to `new_var`.
    Randomized { new_var: f64 },
}

impl InterventionModel {
    /// Mean shift 0 -> 1.
    pub const SHIFT: InterventionModel = InterventionModel::Shift { delta: 1.0 };
    /// Variance 1 -> 2.
    pub const VARIANCE: InterventionModel = InterventionModel::Variance { new_var: 2.0 };
    /// Parents cut, variance 1 -> 1.5.
    pub const RANDOMIZED: InterventionModel = InterventionModel::Randomized { new_var: 1.5 };

    pub fn name(&self) -> &'static str {
        match self {
            InterventionModel::Shift { .. } => "shift",
            InterventionModel::Variance { .. } => "variance",
            InterventionModel::Randomized { .. } => "randomized",
        }
    }

    /// The standard parameterisation for a model name.
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "shift" => Some(Self::SHIFT),
            "variance" => Some(Self::VARIANCE),
            "randomized" => Some(Self::RANDOMIZED),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub targets: NodeSet,
    pub model: InterventionModel,
}

impl InterventionSpec {
    pub fn new(targets: impl IntoIterator<Item = usize>, model: InterventionModel) -> Self {
        InterventionSpec {
            targets: targets.into_iter().collect(),
            model,
        }
    }
}

impl LinearSem {
    /// Returns the post-intervention model. Non-target parameters and the
    /// edge set are unchanged.
    pub fn intervene(&self, spec: &InterventionSpec) -> Result<LinearSem> {
        let p = self.p();
        if let Some(&index) = spec.targets.iter().find(|&&t| t >= p) {
            return Err(Error::TargetOutOfRange { index, p });
        }
        if let InterventionModel::Variance { new_var } | InterventionModel::Randomized { new_var } =
            spec.model
        {
            if !(new_var > 0.0 && new_var.is_finite()) {
                return Err(Error::InvalidIntervention(format!(
                    "new variance must be positive, got {new_var}"
                )));
            }
            if let Some(&t) = spec.targets.iter().find(|&&t| self.noise_var()[t] == new_var) {
                return Err(Error::InvalidIntervention(format!(
                    "target {t} already has noise variance {new_var}"
                )));
            }
        }
        if let InterventionModel::Shift { delta } = spec.model {
            if !delta.is_finite() {
                return Err(Error::InvalidIntervention("shift must be finite".into()));
            }
        }

        let mut out = self.clone();
        let parents: Vec<(usize, Vec<usize>)> = spec
            .targets
            .iter()
            .map(|&t| (t, self.dag().parents(t).to_vec()))
            .collect();
        let (weights, noise_var, noise_mean) = out.parts_mut();
        for (t, pa) in parents {
            match spec.model {
                InterventionModel::Shift { delta } => noise_mean[t] += delta,
                InterventionModel::Variance { new_var } => noise_var[t] = new_var,
                InterventionModel::Randomized { new_var } => {
                    for k in pa {
                        weights[(k, t)] = 0.0;
                    }
                    noise_var[t] = new_var;
                }
            }
        }
        Ok(out)
    }
}

/// Nodes whose structural equation differs between two SEMs over the same
/// graph: noise variance, noise mean or any incoming weight.
pub fn changed_nodes(sem1: &LinearSem, sem2: &LinearSem) -> NodeSet {
    (0..sem1.p())
        .filter(|&i| {
            sem1.noise_var()[i] != sem2.noise_var()[i]
                || sem1.noise_mean()[i] != sem2.noise_mean()[i]
                || sem1
                    .dag()
                    .parents(i)
                    .iter()
                    .any(|&k| sem1.weight(k, i) != sem2.weight(k, i))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::Dag;

    fn base() -> LinearSem {
        LinearSem::from_weighted_edges(3, &[(0, 2, 0.5), (1, 2, -0.7)], vec![1.0; 3]).unwrap()
    }

    #[test]
    fn shift_moves_only_the_mean() {
        let sem = base();
        let out = sem
            .intervene(&InterventionSpec::new([2], InterventionModel::SHIFT))
            .unwrap();
        assert_eq!(out.noise_mean(), &[0.0, 0.0, 1.0]);
        assert_eq!(out.weights(), sem.weights());
        assert_eq!(out.noise_var(), sem.noise_var());
    }

    #[test]
    fn variance_model_doubles_the_variance() {
        let out = base()
            .intervene(&InterventionSpec::new([2], InterventionModel::VARIANCE))
            .unwrap();
        assert_eq!(out.noise_var(), &[1.0, 1.0, 2.0]);
    }

    #[test]
    fn randomized_model_cuts_parents() {
        let sem = base();
        let out = sem
            .intervene(&InterventionSpec::new([2], InterventionModel::RANDOMIZED))
            .unwrap();
        assert_eq!(out.weight(0, 2), 0.0);
        assert_eq!(out.weight(1, 2), 0.0);
        assert_eq!(out.noise_var()[2], 1.5);
        assert_eq!(out.dag(), sem.dag());
        assert_eq!(changed_nodes(&sem, &out), NodeSet::from([2]));
    }

    #[test]
    fn invalid_interventions() {
        let sem = LinearSem::uniform(Dag::empty(2), 1.0);
        assert!(matches!(
            sem.intervene(&InterventionSpec::new([5], InterventionModel::SHIFT)),
            Err(Error::TargetOutOfRange { index: 5, p: 2 })
        ));
        let same = InterventionModel::Variance { new_var: 1.0 };
        assert!(sem.intervene(&InterventionSpec::new([0], same)).is_err());
        let negative = InterventionModel::Variance { new_var: -1.0 };
        assert!(sem.intervene(&InterventionSpec::new([0], negative)).is_err());
    }
}
