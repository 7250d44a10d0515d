//! Drive an external seq2seq model over the line protocol: one linearized
//! graph per request line, one target-grammar scene graph per response line.
//!
//! `cargo run --example external_adapter -- "python serve_t5.py --ckpt out/"`
//!
//! Without an argument a shell stub stands in for the model.

use std::time::Duration;

use amrsg::convert::AdapterError;
use amrsg::{linearize, parse_penman, ExternalAdapter, Strategy};

fn main() {
    let command = std::env::args()
        .nth(1)
        .unwrap_or_else(|| r#"sh -c 'while IFS= read -r l; do echo "( retriever ) ( snow ) ( retriever , stand in , snow )"; done'"#.into());
    let mut adapter = ExternalAdapter::from_command_line(&command, Duration::from_secs(30))
        .unwrap_or_else(|e| {
            eprintln!("{e}");
            std::process::exit(1)
        });

    let graph =
        parse_penman("(z0 / stand-01 :ARG1 (z1 / retriever :mod (z2 / gold)) :ARG2 (z3 / snow))")
            .unwrap();
    let seq = linearize(&graph, Strategy::Dfs);
    println!("request:  {}", seq.text);
    match adapter.convert(&seq) {
        Ok(sg) => println!("response: {sg}"),
        Err(e @ AdapterError::MalformedModelOutput { .. }) => {
            eprintln!(
                "model answered `{}`: {e}",
                e.raw_response().unwrap_or_default()
            );
            std::process::exit(2);
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
