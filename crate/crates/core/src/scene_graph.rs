//! Scene graphs as multisets of object, attribute and relation tuples.
//!
//! The text form is the seq2seq target and the evaluator input:
//!
//! ```text
//! ( retriever ) ( snow ) ( retriever , golden ) ( retriever , standing in , snow )
//! ```
//!
//! One parenthesized group per tuple, fields separated by ` , `, groups
//! separated by a single space, objects first, then attributes, then
//! relations, each section sorted lexicographically. The arity of a group
//! decides its kind. Attribute tuples are written object first.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Version of the target-string grammar, bumped on any wire change.
pub const GRAMMAR_VERSION: u32 = 1;

const ARTICLES: [&str; 3] = ["a", "an", "the"];
const RESERVED: [char; 3] = ['(', ')', ','];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneGraphError {
    #[error("term `{0}` is empty after normalization")]
    EmptyAfterNormalization(String),
    #[error("term `{0}` contains one of the reserved characters `(`, `)`, `,`")]
    ReservedCharacter(String),
    #[error("tuple at byte {offset} has {arity} fields (expected 1, 2 or 3)")]
    BadArity { arity: usize, offset: usize },
    #[error("unbalanced parentheses at byte {offset}")]
    UnbalancedParentheses { offset: usize },
    #[error("unexpected text outside a tuple at byte {offset}")]
    UnexpectedText { offset: usize },
    #[error("{0}")]
    Json(String),
}

/// Lowercases, collapses whitespace and drops one leading article.
pub fn normalize(term: &str) -> Result<String, SceneGraphError> {
    let lower = term.to_lowercase();
    let mut words: Vec<&str> = lower.split_whitespace().collect();
    if words.first().is_some_and(|w| ARTICLES.contains(w)) {
        words.remove(0);
    }
    if words.is_empty() {
        return Err(SceneGraphError::EmptyAfterNormalization(term.to_string()));
    }
    Ok(words.join(" "))
}

fn field(term: &str) -> Result<String, SceneGraphError> {
    let n = normalize(term)?;
    if n.contains(RESERVED) {
        return Err(SceneGraphError::ReservedCharacter(term.to_string()));
    }
    Ok(n)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectTuple {
    pub name: String,
}

impl ObjectTuple {
    pub fn new(name: &str) -> Result<Self, SceneGraphError> {
        Ok(ObjectTuple { name: field(name)? })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeTuple {
    pub object: String,
    pub attribute: String,
}

impl AttributeTuple {
    pub fn new(object: &str, attribute: &str) -> Result<Self, SceneGraphError> {
        Ok(AttributeTuple {
            object: field(object)?,
            attribute: field(attribute)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationTuple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl RelationTuple {
    pub fn new(subject: &str, predicate: &str, object: &str) -> Result<Self, SceneGraphError> {
        Ok(RelationTuple {
            subject: field(subject)?,
            predicate: field(predicate)?,
            object: field(object)?,
        })
    }
}

/// Any tuple, tagged by arity. Tuples of different kinds never compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tuple {
    Object(ObjectTuple),
    Attribute(AttributeTuple),
    Relation(RelationTuple),
}

impl Tuple {
    pub fn arity(&self) -> usize {
        match self {
            Tuple::Object(_) => 1,
            Tuple::Attribute(_) => 2,
            Tuple::Relation(_) => 3,
        }
    }

    /// The object the tuple is about: the object itself, the attributed
    /// object, or the relation subject.
    pub fn head(&self) -> &str {
        match self {
            Tuple::Object(o) => &o.name,
            Tuple::Attribute(a) => &a.object,
            Tuple::Relation(r) => &r.subject,
        }
    }
}

impl fmt::Display for Tuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tuple::Object(o) => write!(f, "( {} )", o.name),
            Tuple::Attribute(a) => write!(f, "( {} , {} )", a.object, a.attribute),
            Tuple::Relation(r) => write!(f, "( {} , {} , {} )", r.subject, r.predicate, r.object),
        }
    }
}

/// Objects, attributes and relations, each a multiset.
///
/// Every object named by an attribute or relation is present in `objects`;
/// missing ones are inserted once on construction.
#[derive(Debug, Clone, Default)]
pub struct SceneGraph {
    objects: Vec<ObjectTuple>,
    attributes: Vec<AttributeTuple>,
    relations: Vec<RelationTuple>,
}

impl SceneGraph {
    pub fn new(
        mut objects: Vec<ObjectTuple>,
        attributes: Vec<AttributeTuple>,
        relations: Vec<RelationTuple>,
    ) -> Self {
        let mentioned = attributes
            .iter()
            .map(|a| &a.object)
            .chain(relations.iter().flat_map(|r| [&r.subject, &r.object]));
        for name in mentioned {
            if !objects.iter().any(|o| &o.name == name) {
                objects.push(ObjectTuple { name: name.clone() });
            }
        }
        SceneGraph {
            objects,
            attributes,
            relations,
        }
    }

    /// Builds a graph from raw strings, normalizing every field.
    pub fn from_strs(
        objects: &[&str],
        attributes: &[(&str, &str)],
        relations: &[(&str, &str, &str)],
    ) -> Result<Self, SceneGraphError> {
        Ok(SceneGraph::new(
            objects
                .iter()
                .map(|o| ObjectTuple::new(o))
                .collect::<Result<_, _>>()?,
            attributes
                .iter()
                .map(|(o, a)| AttributeTuple::new(o, a))
                .collect::<Result<_, _>>()?,
            relations
                .iter()
                .map(|(s, p, o)| RelationTuple::new(s, p, o))
                .collect::<Result<_, _>>()?,
        ))
    }

    pub fn objects(&self) -> &[ObjectTuple] {
        &self.objects
    }

    pub fn attributes(&self) -> &[AttributeTuple] {
        &self.attributes
    }

    pub fn relations(&self) -> &[RelationTuple] {
        &self.relations
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty() && self.attributes.is_empty() && self.relations.is_empty()
    }

    pub fn tuple_count(&self) -> usize {
        self.objects.len() + self.attributes.len() + self.relations.len()
    }

    /// The same graph with each section sorted.
    pub fn canonical(&self) -> SceneGraph {
        let mut sg = self.clone();
        sg.objects.sort();
        sg.attributes.sort();
        sg.relations.sort();
        sg
    }

    /// Keeps only the tuples accepted by `keep`, then drops attributes and
    /// relations whose objects no longer exist.
    pub fn retain_objects(&self, mut keep: impl FnMut(&ObjectTuple) -> bool) -> SceneGraph {
        let objects: Vec<ObjectTuple> = self.objects.iter().filter(|o| keep(o)).cloned().collect();
        let present = |name: &String| objects.iter().any(|o| &o.name == name);
        let attributes = self
            .attributes
            .iter()
            .filter(|a| present(&a.object))
            .cloned()
            .collect();
        let relations = self
            .relations
            .iter()
            .filter(|r| present(&r.subject) && present(&r.object))
            .cloned()
            .collect();
        SceneGraph {
            objects,
            attributes,
            relations,
        }
    }
}

/// Multiset equality.
impl PartialEq for SceneGraph {
    fn eq(&self, other: &Self) -> bool {
        let a = self.canonical();
        let b = other.canonical();
        a.objects == b.objects && a.attributes == b.attributes && a.relations == b.relations
    }
}

impl Eq for SceneGraph {}

impl fmt::Display for SceneGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_sg(self))
    }
}

impl std::str::FromStr for SceneGraph {
    type Err = SceneGraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_sg_text(s)
    }
}

/// All tuples: objects, then attributes, then relations, in stored order.
pub fn to_tuples(sg: &SceneGraph) -> Vec<Tuple> {
    sg.objects
        .iter()
        .cloned()
        .map(Tuple::Object)
        .chain(sg.attributes.iter().cloned().map(Tuple::Attribute))
        .chain(sg.relations.iter().cloned().map(Tuple::Relation))
        .collect()
}

pub fn serialize_sg(sg: &SceneGraph) -> String {
    to_tuples(&sg.canonical())
        .iter()
        .map(Tuple::to_string)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn parse_sg_text(text: &str) -> Result<SceneGraph, SceneGraphError> {
    let mut objects = Vec::new();
    let mut attributes = Vec::new();
    let mut relations = Vec::new();
    let mut rest = text.char_indices();
    while let Some((start, c)) = rest.next() {
        match c {
            c if c.is_whitespace() => continue,
            '(' => {
                let mut end = None;
                for (i, c) in rest.by_ref() {
                    match c {
                        ')' => {
                            end = Some(i);
                            break;
                        }
                        '(' => return Err(SceneGraphError::UnbalancedParentheses { offset: i }),
                        _ => {}
                    }
                }
                let end = end.ok_or(SceneGraphError::UnbalancedParentheses { offset: start })?;
                let inner = &text[start + 1..end];
                let fields: Vec<&str> = if inner.trim().is_empty() {
                    Vec::new()
                } else {
                    inner.split(',').collect()
                };
                match fields.as_slice() {
                    [o] => objects.push(ObjectTuple::new(o)?),
                    [o, a] => attributes.push(AttributeTuple::new(o, a)?),
                    [s, p, o] => relations.push(RelationTuple::new(s, p, o)?),
                    _ => {
                        return Err(SceneGraphError::BadArity {
                            arity: fields.len(),
                            offset: start,
                        })
                    }
                }
            }
            ')' => return Err(SceneGraphError::UnbalancedParentheses { offset: start }),
            _ => return Err(SceneGraphError::UnexpectedText { offset: start }),
        }
    }
    Ok(SceneGraph::new(objects, attributes, relations))
}

/// JSON form: `{"objects": [["dog"]], "attributes": [["dog", "brown"]], "relations": [["dog", "on", "grass"]]}`.
/// Objects may also be given as bare strings on input.
#[derive(Serialize, Deserialize)]
struct SceneGraphJson {
    #[serde(default)]
    objects: Vec<ObjectJson>,
    #[serde(default)]
    attributes: Vec<Vec<String>>,
    #[serde(default)]
    relations: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ObjectJson {
    Fields(Vec<String>),
    Name(String),
}

impl TryFrom<SceneGraphJson> for SceneGraph {
    type Error = SceneGraphError;

    fn try_from(json: SceneGraphJson) -> Result<Self, Self::Error> {
        let arity =
            |n: usize| SceneGraphError::Json(format!("tuple with {n} fields in wrong section"));
        let objects = json
            .objects
            .iter()
            .map(|o| match o {
                ObjectJson::Name(n) => ObjectTuple::new(n),
                ObjectJson::Fields(f) if f.len() == 1 => ObjectTuple::new(&f[0]),
                ObjectJson::Fields(f) => Err(arity(f.len())),
            })
            .collect::<Result<_, _>>()?;
        let attributes = json
            .attributes
            .iter()
            .map(|f| match f.as_slice() {
                [o, a] => AttributeTuple::new(o, a),
                _ => Err(arity(f.len())),
            })
            .collect::<Result<_, _>>()?;
        let relations = json
            .relations
            .iter()
            .map(|f| match f.as_slice() {
                [s, p, o] => RelationTuple::new(s, p, o),
                _ => Err(arity(f.len())),
            })
            .collect::<Result<_, _>>()?;
        Ok(SceneGraph::new(objects, attributes, relations))
    }
}

impl Serialize for SceneGraph {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let sg = self.canonical();
        SceneGraphJson {
            objects: sg
                .objects
                .into_iter()
                .map(|o| ObjectJson::Fields(vec![o.name]))
                .collect(),
            attributes: sg
                .attributes
                .into_iter()
                .map(|a| vec![a.object, a.attribute])
                .collect(),
            relations: sg
                .relations
                .into_iter()
                .map(|r| vec![r.subject, r.predicate, r.object])
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SceneGraph {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        SceneGraphJson::deserialize(deserializer)?
            .try_into()
            .map_err(serde::de::Error::custom)
    }
}
