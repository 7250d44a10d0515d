//! Turn AMR graphs into scene graphs with the rule-based converter.

use amrsg::{convert_rules, parse_penman, serialize_sg, RuleConfig};

const GRAPHS: &[&str] = &[
    "(z0 / stand-01 :ARG1 (z1 / retriever :mod (z2 / gold)) :ARG2 (z3 / snow))",
    "(h / hold-01 :ARG0 (p / person) :ARG1 (u / umbrella :mod (b / black)))",
    "(s / sit-01 :ARG0 (c / cat) :location (t / table))",
    "(s / stand-01 :ARG1 (d / dog))",
];

fn main() {
    let config = RuleConfig::default();
    for text in GRAPHS {
        let graph = parse_penman(text).expect("example graphs parse");
        println!(
            "{text}\n  -> {}",
            serialize_sg(&convert_rules(&graph, &config))
        );
    }

    // treat :location as plain "at"
    let mut at = RuleConfig::default();
    at.locative_roles.insert(":location".into(), "at".into());
    let graph = parse_penman(GRAPHS[2]).unwrap();
    println!(
        "with :location -> at\n  -> {}",
        serialize_sg(&convert_rules(&graph, &at))
    );
}
