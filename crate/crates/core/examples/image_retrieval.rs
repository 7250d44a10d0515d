//! Rank images for scene-graph queries and report Recall@k and median rank.

use amrsg::retrieval::{rank_all, IndexedImage, Query};
use amrsg::{aggregate_metrics, parse_sg_text, RetrievalIndex};

fn image(id: &str, regions: &[&str]) -> IndexedImage {
    IndexedImage {
        image_id: id.into(),
        regions: regions.iter().map(|r| parse_sg_text(r).unwrap()).collect(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let index = RetrievalIndex::new(vec![
        image(
            "beach",
            &[
                "( dog ) ( sand )",
                "( man ) ( surfboard ) ( man , hold , surfboard )",
            ],
        ),
        image(
            "kitchen",
            &[
                "( cup ) ( table ) ( cup , on , table )",
                "( man ) ( apron )",
            ],
        ),
        image(
            "park",
            &[
                "( dog ) ( frisbee ) ( dog , catch , frisbee )",
                "( tree ) ( tree , green )",
            ],
        ),
    ])?;
    let queries = vec![
        Query {
            query_id: "q1".into(),
            gold_image_id: "park".into(),
            scene_graph: parse_sg_text("( dog ) ( frisbee ) ( dog , catch , frisbee )")?,
        },
        Query {
            query_id: "q2".into(),
            gold_image_id: "beach".into(),
            scene_graph: parse_sg_text("( man ) ( board )")?,
        },
    ];

    let results = rank_all(&queries, &index)?;
    for r in &results {
        let top: Vec<String> = r
            .ranking
            .iter()
            .map(|(id, s)| format!("{id} {s:.2}"))
            .collect();
        println!(
            "{}: gold {} at rank {}  [{}]",
            r.query_id,
            r.gold_image_id,
            r.gold_rank,
            top.join(", ")
        );
    }
    let metrics = aggregate_metrics(&results, &[1, 2])?;
    println!(
        "R@1 {:.2}  R@2 {:.2}  median rank {}",
        metrics.recall_at[&1], metrics.recall_at[&2], metrics.median_rank
    );
    Ok(())
}
