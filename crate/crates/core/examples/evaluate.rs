//! Score generated scene graphs against references, per region and overall.

use amrsg::{evaluate_corpus, f_score, parse_sg_text};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let generated = parse_sg_text("( dog ) ( dog ) ( frisbee ) ( dog , catch , frisbee )")?;
    let reference =
        parse_sg_text("( dog ) ( frisbee ) ( frisbee , red ) ( dog , catch , frisbee )")?;

    // the second "( dog )" finds no partner: matching is one-to-one
    let report = f_score(&generated, &reference);
    println!(
        "P {:.3}  R {:.3}  F1 {:.3}  ({} of {} generated matched)",
        report.precision,
        report.recall,
        report.f1,
        report.matches.len(),
        report.generated_size
    );

    let corpus = vec![
        ("r1".to_string(), generated, reference),
        (
            "r2".to_string(),
            parse_sg_text("( cat )")?,
            parse_sg_text("( cat ) ( cat , black )")?,
        ),
        (
            "r3".to_string(),
            parse_sg_text("( car )")?,
            parse_sg_text("( bus )")?,
        ),
    ];
    let summary = evaluate_corpus(&corpus)?;
    for region in &summary.per_region {
        println!("{}  F1 {:.3}", region.region_id, region.report.f1);
    }
    println!(
        "mean F1 over {} regions: {:.4}",
        summary.region_count, summary.mean_f1
    );
    Ok(())
}
