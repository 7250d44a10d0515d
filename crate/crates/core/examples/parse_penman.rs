//! Parse a PENMAN graph, inspect it, and print the canonical form.
//!
//! `cargo run --example parse_penman -- '(w / want-01 :ARG0 (d / dog) :ARG1 (e / eat-01 :ARG0 d))'`

use amrsg::amr::{parse_penman, serialize_penman, validate, Target};

fn main() {
    let text = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "(w / want-01 :ARG0 (d / dog) :ARG1 (e / eat-01 :ARG0 d))".to_string());
    let graph = match parse_penman(&text) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("{e}");
            eprintln!("{text}");
            eprintln!("{}^", " ".repeat(e.offset()));
            std::process::exit(1);
        }
    };

    println!("root: {}", graph.root());
    for (var, concept) in graph.nodes() {
        let kind = if concept.is_frame() {
            "frame"
        } else {
            "concept"
        };
        println!("  {var:<4} {concept:<12} {kind}");
    }
    for edge in graph.edges() {
        let target = match &edge.target {
            Target::Variable(v) if edge.tree => format!("{v}"),
            Target::Variable(v) => format!("{v} (re-entrant)"),
            Target::Constant(c) => format!("{c} (constant)"),
        };
        println!("  {} {} {}", edge.source, edge.role, target);
    }
    assert!(validate(&graph).is_empty());
    println!("{}", serialize_penman(&graph));
}
