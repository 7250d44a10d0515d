//! Image retrieval by scene-graph F-score similarity.
//!
//! An image's score for a query is the best F1 between the query graph and any
//! of the image's region graphs. Images are ranked by score, ties broken by
//! ascending image id, and the ranks of the gold images are summarised as
//! Recall@k and median rank.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::f_score;
use crate::scene_graph::SceneGraph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RetrievalError {
    #[error("duplicate image id `{0}` in index")]
    DuplicateImage(String),
    #[error("image `{0}` has no region graphs")]
    ImageWithoutRegions(String),
    #[error("the index holds no images")]
    EmptyIndex,
    #[error("gold image `{gold}` for query `{query}` is not in the index")]
    UnknownGoldImage { query: String, gold: String },
    #[error("no retrieval results to aggregate")]
    EmptyResults,
}

/// One line of an index file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedImage {
    pub image_id: String,
    pub regions: Vec<SceneGraph>,
}

#[derive(Debug, Clone)]
pub struct RetrievalIndex {
    images: Vec<IndexedImage>,
    by_id: HashMap<String, usize>,
}

impl RetrievalIndex {
    pub fn new(images: Vec<IndexedImage>) -> Result<Self, RetrievalError> {
        if images.is_empty() {
            return Err(RetrievalError::EmptyIndex);
        }
        let mut by_id = HashMap::with_capacity(images.len());
        for (i, image) in images.iter().enumerate() {
            if image.regions.is_empty() {
                return Err(RetrievalError::ImageWithoutRegions(image.image_id.clone()));
            }
            if by_id.insert(image.image_id.clone(), i).is_some() {
                return Err(RetrievalError::DuplicateImage(image.image_id.clone()));
            }
        }
        Ok(RetrievalIndex { images, by_id })
    }

    pub fn images(&self) -> &[IndexedImage] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn contains(&self, image_id: &str) -> bool {
        self.by_id.contains_key(image_id)
    }
}

/// Best F1 between the query and any region.
pub fn score_image(query: &SceneGraph, regions: &[SceneGraph]) -> f64 {
    regions
        .iter()
        .map(|region| f_score(query, region).f1)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub gold_image_id: String,
    pub scene_graph: SceneGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedResult {
    pub query_id: String,
    /// `(image id, score)`, best first.
    pub ranking: Vec<(String, f64)>,
    pub gold_image_id: String,
    /// 1-based.
    pub gold_rank: usize,
}

pub fn rank(query: &Query, index: &RetrievalIndex) -> Result<RankedResult, RetrievalError> {
    if !index.contains(&query.gold_image_id) {
        return Err(RetrievalError::UnknownGoldImage {
            query: query.query_id.clone(),
            gold: query.gold_image_id.clone(),
        });
    }
    let mut ranking: Vec<(String, f64)> = index
        .images
        .iter()
        .map(|image| {
            (
                image.image_id.clone(),
                score_image(&query.scene_graph, &image.regions),
            )
        })
        .collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let gold_rank = ranking
        .iter()
        .position(|(id, _)| *id == query.gold_image_id)
        .expect("gold image is indexed")
        + 1;
    Ok(RankedResult {
        query_id: query.query_id.clone(),
        ranking,
        gold_image_id: query.gold_image_id.clone(),
        gold_rank,
    })
}

/// Ranks every query, in parallel, keeping input order.
pub fn rank_all(
    queries: &[Query],
    index: &RetrievalIndex,
) -> Result<Vec<RankedResult>, RetrievalError> {
    queries.par_iter().map(|q| rank(q, index)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalMetrics {
    /// Fraction of queries with gold rank `<= k`, keyed by `k`.
    pub recall_at: BTreeMap<usize, f64>,
    pub median_rank: usize,
    pub queries: usize,
}

/// Lower median: for an even count, the smaller of the two middle values.
pub fn lower_median(values: &[usize]) -> Option<usize> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    Some(sorted[(sorted.len() - 1) / 2])
}

pub fn aggregate_metrics(
    results: &[RankedResult],
    ks: &[usize],
) -> Result<RetrievalMetrics, RetrievalError> {
    if results.is_empty() {
        return Err(RetrievalError::EmptyResults);
    }
    let ranks: Vec<usize> = results.iter().map(|r| r.gold_rank).collect();
    let n = ranks.len() as f64;
    let recall_at = ks
        .iter()
        .map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / n))
        .collect();
    Ok(RetrievalMetrics {
        recall_at,
        median_rank: lower_median(&ranks).expect("non-empty"),
        queries: results.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sg(objects: &[&str]) -> SceneGraph {
        SceneGraph::from_strs(objects, &[], &[]).unwrap()
    }

    fn image(id: &str, regions: Vec<SceneGraph>) -> IndexedImage {
        IndexedImage {
            image_id: id.into(),
            regions,
        }
    }

    fn result(rank: usize) -> RankedResult {
        RankedResult {
            query_id: String::new(),
            ranking: Vec::new(),
            gold_image_id: String::new(),
            gold_rank: rank,
        }
    }

    #[test]
    fn score_is_best_region() {
        let q = sg(&["dog", "cat"]);
        assert_eq!(score_image(&q, &[sg(&["x"]), sg(&["dog", "cat"])]), 1.0);
        assert_eq!(score_image(&q, &[sg(&["x"]), sg(&["y"])]), 0.0);
        // F1 2/3 (1 of 2 vs 1 of 1) and 0.5 (1 of 2 vs 1 of 2)
        let s = score_image(&q, &[sg(&["dog"]), sg(&["cat", "mouse"])]);
        assert!((s - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gold_ranks_first_when_only_match() {
        let index = RetrievalIndex::new(vec![
            image("a", vec![sg(&["tree"])]),
            image("b", vec![sg(&["dog"])]),
            image("c", vec![sg(&["car"])]),
        ])
        .unwrap();
        let q = Query {
            query_id: "q".into(),
            gold_image_id: "b".into(),
            scene_graph: sg(&["dog"]),
        };
        let r = rank(&q, &index).unwrap();
        assert_eq!(r.gold_rank, 1);
        assert_eq!(r.ranking[0], ("b".to_string(), 1.0));
    }

    #[test]
    fn ties_break_by_id() {
        let index = RetrievalIndex::new(vec![
            image("c", vec![sg(&["tree"])]),
            image("a", vec![sg(&["dog"])]),
            image("b", vec![sg(&["car"])]),
        ])
        .unwrap();
        let q = Query {
            query_id: "q".into(),
            gold_image_id: "b".into(),
            scene_graph: sg(&["zebra"]),
        };
        let r = rank(&q, &index).unwrap();
        let order: Vec<_> = r.ranking.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(order, ["a", "b", "c"]);
        assert_eq!(r.gold_rank, 2);
    }

    #[test]
    fn unknown_gold_and_bad_index() {
        let index = RetrievalIndex::new(vec![image("a", vec![sg(&["dog"])])]).unwrap();
        let q = Query {
            query_id: "q".into(),
            gold_image_id: "zz".into(),
            scene_graph: sg(&["dog"]),
        };
        assert!(matches!(
            rank(&q, &index),
            Err(RetrievalError::UnknownGoldImage { .. })
        ));
        assert_eq!(
            RetrievalIndex::new(vec![]).unwrap_err(),
            RetrievalError::EmptyIndex
        );
        assert!(matches!(
            RetrievalIndex::new(vec![image("a", vec![])]),
            Err(RetrievalError::ImageWithoutRegions(_))
        ));
        assert!(matches!(
            RetrievalIndex::new(vec![
                image("a", vec![sg(&["x"])]),
                image("a", vec![sg(&["y"])])
            ]),
            Err(RetrievalError::DuplicateImage(_))
        ));
    }

    #[test]
    fn metrics_examples() {
        let all_first: Vec<_> = (0..7).map(|_| result(1)).collect();
        let m = aggregate_metrics(&all_first, &[5, 10]).unwrap();
        assert_eq!(m.recall_at[&5], 1.0);
        assert_eq!(m.recall_at[&10], 1.0);
        assert_eq!(m.median_rank, 1);

        let mixed: Vec<_> = [1, 6, 11, 2].into_iter().map(result).collect();
        let m = aggregate_metrics(&mixed, &[5, 10]).unwrap();
        assert_eq!(m.recall_at[&5], 0.5);
        assert_eq!(m.recall_at[&10], 0.75);
        assert_eq!(m.median_rank, 2);

        assert_eq!(
            aggregate_metrics(&[], &[5]),
            Err(RetrievalError::EmptyResults)
        );
    }

    #[test]
    fn lower_median_matches_percentile_rule() {
        // nearest-rank 50th percentile: ceil(0.5 * n)-th smallest
        let nearest_rank = |v: &[usize]| {
            let mut s = v.to_vec();
            s.sort_unstable();
            s[(s.len() as f64 * 0.5).ceil() as usize - 1]
        };
        for v in [
            vec![1, 6, 11, 2],
            vec![3],
            vec![5, 1, 4],
            vec![9, 9, 1, 1, 2, 8],
        ] {
            assert_eq!(lower_median(&v), Some(nearest_rank(&v)));
        }
    }
}
