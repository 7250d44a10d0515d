//! Write seq2seq training pairs (linearized AMR, target scene graph) as JSON lines.

use amrsg::corpus::{parse_records, RegionRecord};
use amrsg::{export_training_pairs, Strategy};

const CORPUS: &str = r#"{"image_id": "1", "region_id": "a", "description": "a golden retriever standing in the snow", "scene_graph": {"objects": ["retriever", "snow", "fence"], "attributes": [["retriever", "gold"]], "relations": [["retriever", "stand in", "snow"]]}, "amr": "(z0 / stand-01 :ARG1 (z1 / retriever :mod (z2 / gold)) :ARG2 (z3 / snow))"}
{"image_id": "1", "region_id": "b", "description": "white fence", "scene_graph": {"objects": ["fence"], "attributes": [["fence", "white"]], "relations": []}}
"#;

fn main() {
    let records: Vec<RegionRecord> = parse_records(CORPUS).records;
    for strategy in Strategy::ALL {
        let export = export_training_pairs(&records, strategy);
        for pair in &export.pairs {
            println!("{}", serde_json::to_string(pair).unwrap());
        }
        for skipped in &export.skipped {
            eprintln!("{}: skipped ({:?})", skipped.region_id, skipped.reason);
        }
    }
}
