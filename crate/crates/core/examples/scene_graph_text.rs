//! Build a scene graph, write it in the target grammar and as JSON, and read both back.

use amrsg::scene_graph::{parse_sg_text, serialize_sg, SceneGraph};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // "A" is dropped by normalization; "umbrella" is added by closure
    let sg = SceneGraph::from_strs(
        &["A Person"],
        &[("umbrella", "black")],
        &[("person", "holding", "umbrella")],
    )?;

    let text = serialize_sg(&sg);
    println!("target: {text}");
    assert_eq!(parse_sg_text(&text)?, sg);

    let json = serde_json::to_string(&sg)?;
    println!("json:   {json}");
    assert_eq!(serde_json::from_str::<SceneGraph>(&json)?, sg);

    match parse_sg_text("( a , b , c , d )") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
