use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassRecord, PdeSettings};
use crate::pde::{CovariancePair, PrecisionDiff};
use crate::{Edge, Error, NodeSet, Result};

/// Nodes sharing a source ancestral set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceClass {
    pub members: Vec<usize>,
    pub sources: NodeSet,
}

/// Result of processing one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassOutcome {
    pub intervened: NodeSet,
    pub non_intervened: NodeSet,
    /// Smallest `A' ⊆ A` zeroing each non-intervened node's diagonal.
    pub witnesses: BTreeMap<usize, Vec<usize>>,
    /// Estimate on `M ∪ A'`, keyed by the sorted `A'`.
    pub cache: BTreeMap<Vec<usize>, PrecisionDiff>,
}

/// Decision about an intervened node `from` in an earlier class and an
/// intervened node `to` whose conditioning set contains it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossClassOrientation {
    pub from: usize,
    pub to: usize,
    pub is_parent: bool,
}

/// Full-graph estimate and the nodes with a nonzero diagonal.
pub fn find_changed_nodes(
    pair: &CovariancePair,
    pde: &PdeSettings,
) -> Result<(NodeSet, PrecisionDiff)> {
    let all: Vec<usize> = (0..pair.p()).collect();
    let diff = pde.run(pair, &all)?;
    Ok((diff.changed_nodes().into_iter().collect(), diff))
}

/// Changed nodes whose marginal second moment is equal in both settings, up
/// to relative tolerance `var_tol`.
pub fn find_source_nodes(pair: &CovariancePair, s_delta: &NodeSet, var_tol: f64) -> NodeSet {
    let (s1, s2) = (pair.sigma1(), pair.sigma2());
    s_delta
        .iter()
        .copied()
        .filter(|&j| {
            let (a, b) = (s1[(j, j)], s2[(j, j)]);
            (a - b).abs() <= var_tol * a.abs().max(b.abs())
        })
        .collect()
}

/// Same as [`find_source_nodes`], deciding with a single-node estimate.
pub fn find_source_nodes_by_pde(
    pair: &CovariancePair,
    s_delta: &NodeSet,
    pde: &PdeSettings,
) -> Result<NodeSet> {
    let nodes: Vec<usize> = s_delta.iter().copied().collect();
    let zero: Vec<bool> = nodes
        .par_iter()
        .map(|&j| pde.run(pair, &[j]).map(|d| d.diagonal(j) == Some(0.0)))
        .collect::<Result<_>>()?;
    Ok(nodes
        .into_iter()
        .zip(zero)
        .filter_map(|(j, z)| z.then_some(j))
        .collect())
}

/// `J₀ᵏ` for every `k ∈ S_Δ \ J₀` from pairwise estimates on `{j, k}`.
pub fn source_ancestral_sets(
    pair: &CovariancePair,
    s_delta: &NodeSet,
    j0: &NodeSet,
    pde: &PdeSettings,
) -> Result<BTreeMap<usize, NodeSet>> {
    let jobs: Vec<(usize, usize)> = s_delta
        .difference(j0)
        .flat_map(|&k| j0.iter().map(move |&j| (k, j)))
        .collect();
    let linked: Vec<bool> = jobs
        .par_iter()
        .map(|&(k, j)| {
            let mut subset = [j, k];
            subset.sort_unstable();
            pde.run(pair, &subset)
                .map(|d| d.entry(j, k).is_some_and(|v| v != 0.0))
        })
        .collect::<Result<_>>()?;
    let mut sets: BTreeMap<usize, NodeSet> =
        s_delta.difference(j0).map(|&k| (k, NodeSet::new())).collect();
    for (&(k, j), hit) in jobs.iter().zip(linked) {
        if hit {
            sets.get_mut(&k).expect("key inserted above").insert(j);
        }
    }
    Ok(sets)
}

/// Groups nodes by source set. Classes are ordered by source-set size, then
/// by the sorted source set, so a class never precedes one whose source set
/// it strictly contains.
pub fn form_equivalence_classes(source_sets: &BTreeMap<usize, NodeSet>) -> Vec<EquivalenceClass> {
    let mut groups: BTreeMap<&NodeSet, Vec<usize>> = BTreeMap::new();
    for (&k, set) in source_sets {
        groups.entry(set).or_default().push(k);
    }
    let mut classes: Vec<EquivalenceClass> = groups
        .into_iter()
        .map(|(sources, members)| EquivalenceClass {
            members,
            sources: sources.clone(),
        })
        .collect();
    classes.sort_by(|a, b| {
        a.sources
            .len()
            .cmp(&b.sources.len())
            .then_with(|| a.sources.iter().cmp(b.sources.iter()))
            .then_with(|| a.members.cmp(&b.members))
    });
    classes
}

/// Evaluates `M ∪ A'` for every `A' ⊆ A` and splits `A` into intervened and
/// non-intervened nodes. Subsets are enumerated by bitmask over sorted `A`.
pub fn process_equivalence_class(
    m: &[usize],
    a: &[usize],
    pair: &CovariancePair,
    pde: &PdeSettings,
    budget: usize,
) -> Result<ClassOutcome> {
    if a.len() > budget {
        return Err(Error::ClassTooLarge {
            size: a.len(),
            budget,
        });
    }
    let mut members = a.to_vec();
    members.sort_unstable();
    members.dedup();
    if members.iter().any(|v| m.contains(v)) {
        return Err(Error::InvalidConfig(
            "class members overlap the conditioning set".into(),
        ));
    }
    let masks: Vec<u32> = (0..1u32 << members.len()).collect();
    let results: Vec<(Vec<usize>, PrecisionDiff)> = masks
        .par_iter()
        .map(|&mask| {
            let chosen = pick(&members, mask);
            let mut subset: Vec<usize> = m.iter().chain(chosen.iter()).copied().collect();
            subset.sort_unstable();
            let diff = if subset.is_empty() {
                PrecisionDiff::empty()
            } else {
                pde.run(pair, &subset)?
            };
            Ok((chosen, diff))
        })
        .collect::<Result<_>>()?;

    let mut intervened = NodeSet::new();
    let mut non_intervened = NodeSet::new();
    let mut witnesses = BTreeMap::new();
    for &k in &members {
        // Smallest zeroing subset: by size, then by mask order.
        let witness = results
            .iter()
            .filter(|(chosen, diff)| chosen.contains(&k) && diff.diagonal(k) == Some(0.0))
            .min_by_key(|(chosen, _)| chosen.len())
            .map(|(chosen, _)| chosen.clone());
        match witness {
            Some(w) => {
                non_intervened.insert(k);
                witnesses.insert(k, w);
            }
            None => {
                intervened.insert(k);
            }
        }
    }
    Ok(ClassOutcome {
        intervened,
        non_intervened,
        witnesses,
        cache: results.into_iter().collect(),
    })
}

fn pick(members: &[usize], mask: u32) -> Vec<usize> {
    members
        .iter()
        .enumerate()
        .filter(|(b, _)| mask & (1 << b) != 0)
        .map(|(_, &v)| v)
        .collect()
}

/// True when no cached estimate of `i`'s class containing `i` has
/// `|Δ[j, i]| < threshold`.
fn survives_every_subset(
    record: &ClassRecord,
    members: &[usize],
    i: usize,
    j: usize,
    threshold: f64,
) -> Result<bool> {
    for mask in 0..1u32 << members.len() {
        let chosen = pick(members, mask);
        if !chosen.contains(&i) {
            continue;
        }
        let diff = record.outcome.cache.get(&chosen).ok_or_else(|| {
            let mut subset: Vec<usize> = record.conditioning.iter().chain(&chosen).copied().collect();
            subset.sort_unstable();
            Error::CacheIncomplete(subset)
        })?;
        let value = diff.entry(j, i).ok_or_else(|| Error::CacheIncomplete(diff.subset().to_vec()))?;
        if value.abs() < threshold {
            return Ok(false);
        }
    }
    Ok(true)
}

fn class_index(classes: &[super::EquivalenceClass], node: usize) -> Option<usize> {
    classes.iter().position(|c| c.members.contains(&node))
}

/// Non-intervened parents of the estimated targets, read from the class caches.
pub fn find_parents(
    targets: &NodeSet,
    classes: &[EquivalenceClass],
    records: &[ClassRecord],
    threshold: f64,
) -> Result<BTreeSet<Edge>> {
    let mut parents = BTreeSet::new();
    for &i in targets {
        let Some(c) = class_index(classes, i) else {
            continue;
        };
        let record = &records[c];
        for &j in &record.conditioning {
            if targets.contains(&j) {
                continue;
            }
            if survives_every_subset(record, &classes[c].members, i, j, threshold)? {
                parents.insert((j, i));
            }
        }
    }
    Ok(parents)
}

/// Decides `k -> i` for intervened `k` in the conditioning set of intervened `i`.
pub fn orient_cross_class_edges(
    targets: &NodeSet,
    classes: &[EquivalenceClass],
    records: &[ClassRecord],
    threshold: f64,
) -> Result<Vec<CrossClassOrientation>> {
    let mut out = Vec::new();
    for &i in targets {
        let Some(c) = class_index(classes, i) else {
            continue;
        };
        let record = &records[c];
        for &k in &record.conditioning {
            if !targets.contains(&k) {
                continue;
            }
            let is_parent = survives_every_subset(record, &classes[c].members, i, k, threshold)?;
            out.push(CrossClassOrientation {
                from: k,
                to: i,
                is_parent,
            });
        }
    }
    Ok(out)
}
