//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use amrsg::amr::{AmrEdge, AmrGraph, Concept, Target, Variable};
use amrsg::scene_graph::{
    to_tuples, AttributeTuple, ObjectTuple, RelationTuple, SceneGraph, Tuple,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RETRIEVER: &str =
    "(z0 / stand-01 :ARG1 (z1 / retriever :mod (z2 / gold)) :ARG2 (z3 / snow))";
pub const WANT: &str = "(z0 / want-01 :ARG0 (z1 / dog) :ARG1 (z2 / eat-01 :ARG0 z1))";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const PLAIN: &[&str] = &[
    "dog",
    "cat",
    "retriever",
    "snow",
    "gold",
    "man",
    "red",
    "table",
    "tree",
    "ball",
    "the",
    "Cup",
];
const FRAMES: &[&str] = &[
    "stand-01", "want-01", "eat-01", "hold-01", "run-02", "sit-01",
];
const ROLES: &[&str] = &[
    ":ARG0",
    ":ARG1",
    ":ARG2",
    ":mod",
    ":mod",
    ":location",
    ":quant",
    ":time",
    ":ARG0-of",
];
const CONSTANTS: &[&str] = &[
    "5",
    "-",
    "\"New York\"",
    "\"red\"",
    "\"a\"",
    "\"x, y\"",
    "2.5",
];

enum Slot {
    Child(usize),
    Ref(usize),
    Const(&'static str),
}

/// A random valid graph with edges in textual (preorder) order.
pub fn random_graph(rng: &mut impl Rng, max_nodes: usize, max_reentrancies: usize) -> AmrGraph {
    let n = rng.gen_range(1..=max_nodes);
    let letters = b"abcdefghijklmnopqrstuvwxyz";
    let vars: Vec<Variable> = (0..n)
        .map(|i| {
            let letter = letters[rng.gen_range(0..letters.len())] as char;
            Variable::new(format!("{letter}{i}"))
        })
        .collect();
    let concepts: Vec<Concept> = (0..n)
        .map(|_| {
            let pool = if rng.gen_bool(0.35) { FRAMES } else { PLAIN };
            Concept::new(*pool.choose(rng).unwrap())
        })
        .collect();

    let mut slots: Vec<Vec<(Slot, &'static str)>> = (0..n).map(|_| Vec::new()).collect();
    let insert = |slots: &mut Vec<Vec<(Slot, &'static str)>>,
                  at: usize,
                  slot: Slot,
                  rng: &mut dyn rand::RngCore| {
        let role = *ROLES.choose(rng).unwrap();
        let pos = rng.gen_range(0..=slots[at].len());
        slots[at].insert(pos, (slot, role));
    };
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        insert(&mut slots, parent, Slot::Child(i), rng);
    }
    for i in 0..n {
        if rng.gen_bool(0.15) {
            insert(
                &mut slots,
                i,
                Slot::Const(CONSTANTS.choose(rng).unwrap()),
                rng,
            );
        }
    }
    if n >= 2 {
        for _ in 0..rng.gen_range(0..=max_reentrancies) {
            let source = rng.gen_range(0..n);
            let mut target = rng.gen_range(0..n);
            if target == source {
                target = (target + 1) % n;
            }
            insert(&mut slots, source, Slot::Ref(target), rng);
        }
    }

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    fn emit(
        i: usize,
        vars: &[Variable],
        concepts: &[Concept],
        slots: &[Vec<(Slot, &'static str)>],
        nodes: &mut Vec<(Variable, Concept)>,
        edges: &mut Vec<AmrEdge>,
    ) {
        nodes.push((vars[i].clone(), concepts[i].clone()));
        for (slot, role) in &slots[i] {
            match slot {
                Slot::Child(c) => {
                    edges.push(AmrEdge::tree(vars[i].clone(), role, vars[*c].clone()));
                    emit(*c, vars, concepts, slots, nodes, edges);
                }
                Slot::Ref(t) => {
                    edges.push(AmrEdge::reentrant(vars[i].clone(), role, vars[*t].clone()))
                }
                Slot::Const(lit) => edges.push(AmrEdge::constant(vars[i].clone(), role, lit)),
            }
        }
    }
    emit(0, &vars, &concepts, &slots, &mut nodes, &mut edges);
    AmrGraph::new(vars[0].clone(), nodes, edges).expect("generator builds valid graphs")
}

const OBJECTS: &[&str] = &["dog", "cat", "man", "tree", "cup", "hat"];
const ATTRS: &[&str] = &["red", "big", "old"];
const PREDS: &[&str] = &["on", "near", "hold"];

/// A random scene graph over a small vocabulary, so collisions are common.
pub fn random_sg(rng: &mut impl Rng, max_each: usize) -> SceneGraph {
    let objects = (0..rng.gen_range(0..=max_each))
        .map(|_| ObjectTuple::new(OBJECTS.choose(rng).unwrap()).unwrap())
        .collect();
    let attributes = (0..rng.gen_range(0..=max_each))
        .map(|_| {
            AttributeTuple::new(OBJECTS.choose(rng).unwrap(), ATTRS.choose(rng).unwrap()).unwrap()
        })
        .collect();
    let relations = (0..rng.gen_range(0..=max_each))
        .map(|_| {
            RelationTuple::new(
                OBJECTS.choose(rng).unwrap(),
                PREDS.choose(rng).unwrap(),
                OBJECTS.choose(rng).unwrap(),
            )
            .unwrap()
        })
        .collect();
    SceneGraph::new(objects, attributes, relations)
}

/// Size of the multiset intersection of the two tuple bags.
pub fn multiset_intersection(a: &SceneGraph, b: &SceneGraph) -> usize {
    let mut counts: HashMap<Tuple, usize> = HashMap::new();
    for t in to_tuples(a) {
        *counts.entry(t).or_default() += 1;
    }
    let mut shared = 0;
    for t in to_tuples(b) {
        if let Some(c) = counts.get_mut(&t) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    shared
}

/// Largest one-to-one matching by exhaustive search (small inputs only).
pub fn brute_force_matching(generated: &[Tuple], reference: &[Tuple]) -> usize {
    fn go(i: usize, g: &[Tuple], r: &[Tuple], used: &mut Vec<bool>) -> usize {
        if i == g.len() {
            return 0;
        }
        let mut best = go(i + 1, g, r, used);
        for j in 0..r.len() {
            if !used[j] && g[i] == r[j] {
                used[j] = true;
                best = best.max(1 + go(i + 1, g, r, used));
                used[j] = false;
            }
        }
        best
    }
    go(0, generated, reference, &mut vec![false; reference.len()])
}

/// Surface text: quotes stripped, lowercased, one leading article removed,
/// none if empty or holding a reserved character.
fn oracle_surface(text: &str) -> Option<String> {
    let text = if text.len() >= 2 && text.starts_with('"') && text.ends_with('"') {
        &text[1..text.len() - 1]
    } else {
        text
    };
    let lower = text.to_lowercase();
    let mut words: Vec<&str> = lower.split_whitespace().collect();
    if matches!(words.first(), Some(&"a") | Some(&"an") | Some(&"the")) {
        words.remove(0);
    }
    let joined = words.join(" ");
    if joined.is_empty() || joined.contains(['(', ')', ',']) {
        None
    } else {
        Some(joined)
    }
}

fn oracle_is_frame(label: &str) -> bool {
    let chars: Vec<char> = label.chars().collect();
    let n = chars.len();
    n >= 4 && chars[n - 3] == '-' && chars[n - 2].is_ascii_digit() && chars[n - 1].is_ascii_digit()
}

/// Rule interpreter that tests every (node, edge) pair for every rule
/// separately, with the default role sets hard-coded.
pub fn rules_oracle(graph: &AmrGraph) -> SceneGraph {
    let nodes = graph.nodes();
    let edges = graph.edges();
    let entity = |v: &Variable| -> Option<String> {
        let (_, c) = nodes.iter().find(|(w, _)| w == v)?;
        if oracle_is_frame(c.as_str()) {
            None
        } else {
            oracle_surface(c.as_str())
        }
    };
    // (object, value) when the edge fires the attribute rule
    let attribute_firing = |e: &AmrEdge| -> Option<(String, String)> {
        if e.role != ":mod" {
            return None;
        }
        let object = entity(&e.source)?;
        let value = match &e.target {
            Target::Variable(v) => entity(v)?,
            Target::Constant(c) => oracle_surface(c)?,
        };
        Some((object, value))
    };

    let mut objects = Vec::new();
    let mut attributes = Vec::new();
    let mut relations = Vec::new();
    for (v, _) in nodes {
        let Some(name) = entity(v) else { continue };
        let mut is_value = false;
        for e in edges {
            if e.target == Target::Variable(v.clone()) && attribute_firing(e).is_some() {
                is_value = true;
            }
        }
        if !is_value {
            objects.push(ObjectTuple { name });
        }
    }
    for e in edges {
        if let Some((object, attribute)) = attribute_firing(e) {
            attributes.push(AttributeTuple { object, attribute });
        }
    }
    for (v, c) in nodes {
        if !oracle_is_frame(c.as_str()) {
            continue;
        }
        let label = c.as_str();
        let Some(lemma) = oracle_surface(&label[..label.len() - 3]) else {
            continue;
        };
        let mut has_arg0 = false;
        for e in edges {
            if e.source == *v
                && e.role == ":ARG0"
                && matches!(&e.target, Target::Variable(t) if entity(t).is_some())
            {
                has_arg0 = true;
            }
        }
        // (rank, position, name) for core, (position, name) for locative
        let mut core: Vec<(usize, usize, String)> = Vec::new();
        let mut locative: Vec<(usize, String)> = Vec::new();
        for (pos, e) in edges.iter().enumerate() {
            if e.source != *v {
                continue;
            }
            let Target::Variable(t) = &e.target else {
                continue;
            };
            let Some(name) = entity(t) else { continue };
            match e.role.as_str() {
                ":location" => locative.push((pos, name)),
                ":ARG2" if !has_arg0 => locative.push((pos, name)),
                ":ARG0" => core.push((0, pos, name)),
                ":ARG1" => core.push((1, pos, name)),
                ":ARG2" => core.push((2, pos, name)),
                _ => {}
            }
        }
        core.sort();
        locative.sort();
        if core.is_empty() {
            continue;
        }
        if core.len() == 1 && locative.is_empty() {
            attributes.push(AttributeTuple {
                object: core[0].2.clone(),
                attribute: lemma,
            });
        } else if core.len() >= 2 {
            relations.push(RelationTuple {
                subject: core[0].2.clone(),
                predicate: lemma,
                object: core[1].2.clone(),
            });
        } else {
            relations.push(RelationTuple {
                subject: core[0].2.clone(),
                predicate: format!("{lemma} in"),
                object: locative[0].1.clone(),
            });
        }
    }
    SceneGraph::new(objects, attributes, relations)
}

/// 1-based rank of `gold` by counting the images that must precede it:
/// strictly higher score, or equal score and smaller id.
pub fn counting_rank(scores: &[(String, f64)], gold: &str) -> usize {
    let gold_score = scores
        .iter()
        .find(|(id, _)| id == gold)
        .expect("gold scored")
        .1;
    1 + scores
        .iter()
        .filter(|(id, s)| *s > gold_score || (*s == gold_score && id.as_str() < gold))
        .count()
}

/// Runs the CLI in-process.
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("amrsg").chain(args.iter().copied());
    let code = amrsg::cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).expect("utf-8 stdout"),
        String::from_utf8(err).expect("utf-8 stderr"),
    )
}

pub fn write(dir: &tempfile::TempDir, name: &str, content: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, content).expect("write fixture");
    path.to_str().expect("utf-8 path").to_string()
}

/// F1 from the multiset-intersection count, with the empty-side conventions.
pub fn oracle_f1(g: &SceneGraph, r: &SceneGraph) -> f64 {
    let (gn, rn) = (g.tuple_count(), r.tuple_count());
    if gn == 0 && rn == 0 {
        return 1.0;
    }
    let m = multiset_intersection(g, r) as f64;
    if gn == 0 || rn == 0 || m == 0.0 {
        return 0.0;
    }
    let (p, rec) = (m / gn as f64, m / rn as f64);
    2.0 * p * rec / (p + rec)
}

/// `images` images of `regions` regions each. Every region carries an object
/// unique to it, so a region used as a query scores 1.0 only on its image.
pub fn synthetic_images(
    rng: &mut impl Rng,
    images: usize,
    regions: usize,
) -> Vec<amrsg::retrieval::IndexedImage> {
    (0..images)
        .map(|i| amrsg::retrieval::IndexedImage {
            image_id: format!("img{i:03}"),
            regions: (0..regions)
                .map(|j| {
                    let base = random_sg(rng, 3);
                    let mut objects = base.objects().to_vec();
                    objects.push(ObjectTuple::new(&format!("tag{i}r{j}")).unwrap());
                    SceneGraph::new(
                        objects,
                        base.attributes().to_vec(),
                        base.relations().to_vec(),
                    )
                })
                .collect(),
        })
        .collect()
}

/// A query sharing part of one region of the gold image plus random noise.
pub fn planted_query(rng: &mut impl Rng, region: &SceneGraph) -> SceneGraph {
    let keep = |rng: &mut dyn rand::RngCore| rng.gen_bool(0.6);
    let noise = random_sg(rng, 2);
    let objects = region
        .objects()
        .iter()
        .filter(|o| !o.name.starts_with("tag"))
        .filter(|_| keep(rng))
        .chain(noise.objects())
        .cloned()
        .collect();
    let attributes = region
        .attributes()
        .iter()
        .filter(|_| keep(rng))
        .chain(noise.attributes())
        .cloned()
        .collect();
    let relations = region
        .relations()
        .iter()
        .filter(|_| keep(rng))
        .chain(noise.relations())
        .cloned()
        .collect();
    SceneGraph::new(objects, attributes, relations)
}

/// Ranking by exhaustive scoring and a plain sort: score descending, id ascending.
pub fn oracle_ranking(
    query: &SceneGraph,
    images: &[amrsg::retrieval::IndexedImage],
) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = images
        .iter()
        .map(|img| {
            let mut best = 0.0f64;
            for region in &img.regions {
                let f = oracle_f1(query, region);
                if f > best {
                    best = f;
                }
            }
            (img.image_id.clone(), best)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored
}

/// Twenty hand-written regions: `(id, AMR, reference target)`. Every AMR has
/// at least one non-frame concept, so the rules always emit a tuple.
pub const SMOKE: [(&str, &str, &str); 20] = [
    (
        "r01",
        RETRIEVER,
        "( retriever ) ( snow ) ( retriever , gold ) ( retriever , stand in , snow )",
    ),
    (
        "r02",
        "(d / dog :mod (b / brown))",
        "( dog ) ( dog , brown )",
    ),
    (
        "r03",
        "(s / sit-01 :ARG0 (c / cat) :location (t / table))",
        "( cat ) ( table ) ( cat , sit on , table )",
    ),
    (
        "r04",
        "(h / hold-01 :ARG0 (m / man) :ARG1 (u / umbrella))",
        "( man ) ( umbrella ) ( man , hold , umbrella )",
    ),
    (
        "r05",
        "(t / tree :mod (g / green))",
        "( tree ) ( tree , green )",
    ),
    (
        "r06",
        "(w / wear-01 :ARG0 (w2 / woman) :ARG1 (h / hat :mod (r / red)))",
        "( woman ) ( hat ) ( hat , red ) ( woman , wear , hat )",
    ),
    (
        "r07",
        "(p / park-01 :ARG1 (c / car) :ARG2 (s / street))",
        "( car ) ( street ) ( car , park on , street )",
    ),
    ("r08", "(c / cup)", "( cup ) ( table )"),
    (
        "r09",
        "(r / ride-01 :ARG0 (b / boy) :ARG1 (b2 / bike))",
        "( boy ) ( bike ) ( boy , ride , bike )",
    ),
    ("r10", "(s / sky :mod (b / blue))", "( sky ) ( sky , blue )"),
    (
        "r11",
        "(e / eat-01 :ARG0 (g / giraffe) :ARG1 (l / leaf))",
        "( giraffe ) ( leaves ) ( giraffe , eat , leaves )",
    ),
    (
        "r12",
        "(s / stand-01 :ARG1 (z / zebra) :ARG2 (g / grass))",
        "( zebra ) ( grass ) ( zebra , stand in , grass )",
    ),
    (
        "r13",
        "(b / building :mod (t / tall))",
        "( building ) ( building , tall )",
    ),
    (
        "r14",
        "(l / lie-07 :ARG1 (d / dog) :location (b / bed))",
        "( dog ) ( bed ) ( dog , lie on , bed )",
    ),
    (
        "r15",
        "(p / plate :mod (w / white))",
        "( plate ) ( plate , white )",
    ),
    (
        "r16",
        "(f / fly-01 :ARG1 (k / kite))",
        "( kite ) ( kite , flying )",
    ),
    (
        "r17",
        "(c / cover-01 :ARG1 (m / mountain) :ARG2 (s / snow))",
        "( mountain ) ( snow ) ( mountain , covered in , snow )",
    ),
    (
        "r18",
        "(s / sign :mod (s2 / stop))",
        "( sign ) ( sign , stop )",
    ),
    (
        "r19",
        "(w / want-01 :ARG0 (d / dog) :ARG1 (e / eat-01 :ARG0 d))",
        "( dog ) ( food )",
    ),
    (
        "r20",
        "(w / walk-01 :ARG0 (p / person) :location (b / beach))",
        "( person ) ( beach ) ( person , walk on , beach )",
    ),
];

/// The smoke regions as a PENMAN file with `::id` metadata.
pub fn smoke_penman() -> String {
    SMOKE
        .iter()
        .map(|(id, amr, _)| format!("# ::id {id}\n{amr}\n"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// The smoke references as `{"region_id", "target"}` lines.
pub fn smoke_reference() -> String {
    SMOKE
        .iter()
        .map(|(id, _, target)| {
            serde_json::json!({"region_id": id, "target": target}).to_string() + "\n"
        })
        .collect()
}
