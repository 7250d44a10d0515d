//! Print the three linearizations of a graph with their model tokens.

use amrsg::{linearize, parse_penman, Strategy};

fn main() {
    let text = std::env::args().nth(1).unwrap_or_else(|| {
        "(z0 / stand-01 :ARG1 (z1 / retriever :mod (z2 / gold)) :ARG2 (z3 / snow))".into()
    });
    let graph = parse_penman(&text).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(1)
    });
    for strategy in Strategy::ALL {
        let seq = linearize(&graph, strategy);
        println!("{:<8} {}", strategy.as_str(), seq.text);
        println!("{:<8} {:?}", "", seq.tokens);
    }
}
