//! Load region records, drop ungrounded tuples, and summarize the corpus.
//!
//! `cargo run --example corpus_filter -- regions.jsonl`

use amrsg::corpus::{corpus_stats, filter_ungrounded, load_records, parse_records};

const SAMPLE: &str = r#"{"image_id": "1", "region_id": "1", "description": "A person holding on umbrella", "scene_graph": {"objects": ["person", "umbrella", "bus"], "attributes": [["bus", "red"]], "relations": [["person", "hold", "umbrella"]]}}
{"image_id": "1", "region_id": "2", "description": "dogs running on grass", "scene_graph": {"objects": ["dog", "grass"], "attributes": [], "relations": [["dog", "run on", "grass"]]}}
not a record
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let loaded = match std::env::args().nth(1) {
        Some(path) => load_records(path)?,
        None => parse_records(SAMPLE),
    };
    for e in &loaded.errors {
        eprintln!("skipped line {}: {}", e.line, e.message);
    }
    for record in &loaded.records {
        let kept = filter_ungrounded(record);
        println!("{}: {}", record.description, record.scene_graph);
        println!(
            "{}  -> {}",
            " ".repeat(record.description.len()),
            kept.scene_graph
        );
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&corpus_stats(&loaded.records))?
    );
    Ok(())
}
