//! SPICE-style tuple F-score with one-to-one matching.
//!
//! A generated tuple may match at most one reference tuple and vice versa, so
//! duplicates in one graph cannot all be credited against a single tuple in the
//! other. The match set is a maximum bipartite matching over the
//! compatibility relation.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::scene_graph::{to_tuples, SceneGraph, Tuple};

/// Maximum-cardinality one-to-one matching between `generated` and `reference`.
///
/// Kuhn's augmenting-path algorithm: generated items are tried in index order,
/// each searching reference items in index order, so the result is
/// deterministic. Returns `(generated index, reference index)` pairs sorted by
/// generated index.
pub fn match_with<T, F>(generated: &[T], reference: &[T], compatible: F) -> Vec<(usize, usize)>
where
    F: Fn(&T, &T) -> bool,
{
    let adjacency: Vec<Vec<usize>> = generated
        .iter()
        .map(|g| {
            reference
                .iter()
                .enumerate()
                .filter(|(_, r)| compatible(g, r))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    let mut owner: Vec<Option<usize>> = vec![None; reference.len()];
    let mut visited = vec![0usize; reference.len()];
    for g in 0..generated.len() {
        if adjacency[g].is_empty() {
            continue;
        }
        // stamp g + 1 marks reference nodes visited in this search
        augment(g, g + 1, &adjacency, &mut owner, &mut visited);
    }

    let mut pairs: Vec<(usize, usize)> = owner
        .iter()
        .enumerate()
        .filter_map(|(r, g)| g.map(|g| (g, r)))
        .collect();
    pairs.sort_unstable();
    pairs
}

fn augment(
    g: usize,
    stamp: usize,
    adjacency: &[Vec<usize>],
    owner: &mut [Option<usize>],
    visited: &mut [usize],
) -> bool {
    for &r in &adjacency[g] {
        if visited[r] == stamp {
            continue;
        }
        visited[r] = stamp;
        let free = match owner[r] {
            None => true,
            Some(other) => augment(other, stamp, adjacency, owner, visited),
        };
        if free {
            owner[r] = Some(g);
            return true;
        }
    }
    false
}

/// [`match_with`] under exact tuple equality.
pub fn match_tuples(generated: &[Tuple], reference: &[Tuple]) -> Vec<(usize, usize)> {
    match_with(generated, reference, |a, b| a == b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matches: Vec<(usize, usize)>,
    pub generated_size: usize,
    pub reference_size: usize,
}

impl EvalReport {
    /// Builds the report from a match count.
    ///
    /// Both sides empty scores 1 everywhere. One side empty scores 0.
    pub fn from_matches(
        matches: Vec<(usize, usize)>,
        generated_size: usize,
        reference_size: usize,
    ) -> Self {
        let m = matches.len() as f64;
        let (precision, recall, f1) = match (generated_size, reference_size) {
            (0, 0) => (1.0, 1.0, 1.0),
            (0, _) | (_, 0) => (0.0, 0.0, 0.0),
            (g, r) => {
                let p = m / g as f64;
                let r = m / r as f64;
                let f1 = if p + r > 0.0 {
                    2.0 * p * r / (p + r)
                } else {
                    0.0
                };
                (p, r, f1)
            }
        };
        EvalReport {
            precision,
            recall,
            f1,
            matches,
            generated_size,
            reference_size,
        }
    }
}

/// Scores `generated` against `reference` with exact tuple matching.
pub fn f_score(generated: &SceneGraph, reference: &SceneGraph) -> EvalReport {
    f_score_with(generated, reference, |a, b| a == b)
}

/// Scores with a custom compatibility predicate (e.g. synonym-aware matching).
/// Tuples of different arity are never compared.
pub fn f_score_with<F>(generated: &SceneGraph, reference: &SceneGraph, compatible: F) -> EvalReport
where
    F: Fn(&Tuple, &Tuple) -> bool,
{
    let g = to_tuples(generated);
    let r = to_tuples(reference);
    let matches = match_with(&g, &r, |a, b| a.arity() == b.arity() && compatible(a, b));
    EvalReport::from_matches(matches, g.len(), r.len())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionScore {
    pub region_id: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub mean_f1: f64,
    pub region_count: usize,
    /// Sorted by region id.
    pub per_region: Vec<RegionScore>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("cannot evaluate an empty corpus")]
    EmptyCorpus,
}

/// Scores every region and averages F1 over regions.
pub fn evaluate_corpus(
    pairs: &[(String, SceneGraph, SceneGraph)],
) -> Result<CorpusReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyCorpus);
    }
    let mut per_region: Vec<RegionScore> = pairs
        .par_iter()
        .map(|(id, generated, reference)| RegionScore {
            region_id: id.clone(),
            report: f_score(generated, reference),
        })
        .collect();
    per_region.sort_by(|a, b| a.region_id.cmp(&b.region_id));
    let mean_f1 = per_region.iter().map(|s| s.report.f1).sum::<f64>() / per_region.len() as f64;
    Ok(CorpusReport {
        mean_f1,
        region_count: per_region.len(),
        per_region,
    })
}
