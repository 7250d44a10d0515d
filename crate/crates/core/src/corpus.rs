//! Region records: a region description, its ground-truth scene graph and an
//! optional AMR graph.
//!
//! Records are stored one JSON object per line:
//!
//! ```json
//! {"image_id":"1","region_id":"1-1","description":"Golden retriever standing in the snow","scene_graph":{...},"amr":"(z0 / stand-01 ...)"}
//! ```
//!
//! Malformed lines are skipped and reported, not fatal.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::scene_graph::SceneGraph;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("reading {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid Visual Genome JSON: {0}")]
    VisualGenome(String),
}

/// A line that could not be loaded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based.
    pub line: usize,
    pub message: String,
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    match Value::deserialize(d)? {
        Value::String(s) => Ok(s),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!(
            "expected string or number, got {other}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    #[serde(deserialize_with = "string_or_number")]
    pub image_id: String,
    #[serde(deserialize_with = "string_or_number")]
    pub region_id: String,
    pub description: String,
    pub scene_graph: SceneGraph,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amr: Option<String>,
}

impl RegionRecord {
    fn check(&self) -> Result<(), String> {
        if self.image_id.trim().is_empty() {
            return Err("empty image_id".into());
        }
        if self.region_id.trim().is_empty() {
            return Err("empty region_id".into());
        }
        if self.description.trim().is_empty() {
            return Err("empty description".into());
        }
        Ok(())
    }

    /// One JSON line with a fixed key order and canonical tuple order.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadedRecords {
    pub records: Vec<RegionRecord>,
    pub errors: Vec<LineError>,
}

impl LoadedRecords {
    pub fn skipped(&self) -> usize {
        self.errors.len()
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => CorpusError::FileNotFound(path.to_path_buf()),
        _ => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
    })
}

/// Parses JSON lines into values of `T`, collecting per-line errors. Blank
/// lines are ignored.
pub fn parse_json_lines<T, F>(text: &str, mut check: F) -> (Vec<T>, Vec<LineError>)
where
    T: for<'de> Deserialize<'de>,
    F: FnMut(&T) -> Result<(), String>,
{
    let mut items = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(line)
            .map_err(|e| e.to_string())
            .and_then(|item| check(&item).map(|_| item))
        {
            Ok(item) => items.push(item),
            Err(message) => {
                log::warn!("line {}: {message}", i + 1);
                errors.push(LineError {
                    line: i + 1,
                    message,
                });
            }
        }
    }
    (items, errors)
}

pub fn parse_records(text: &str) -> LoadedRecords {
    let (records, errors) = parse_json_lines(text, RegionRecord::check);
    LoadedRecords { records, errors }
}

pub fn load_records(path: impl AsRef<Path>) -> Result<LoadedRecords, CorpusError> {
    Ok(parse_records(&read_file(path.as_ref())?))
}

/// Lowercased alphanumeric words.
fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

/// The word and every form left after stripping a final `s`, `es` or `ing`
/// (keeping at least two characters).
fn stems(word: &str) -> impl Iterator<Item = &str> {
    std::iter::once(word).chain(["s", "es", "ing"].into_iter().filter_map(move |suffix| {
        word.strip_suffix(suffix)
            .filter(|stem| stem.chars().count() >= 2)
    }))
}

fn stem_set(text: &str) -> HashSet<String> {
    words(text)
        .flat_map(|w| stems(&w).map(str::to_string).collect::<Vec<_>>())
        .collect()
}

/// Whether any word of `name` shares a stem with any word of `description`.
pub fn is_grounded(name: &str, description: &HashSet<String>) -> bool {
    words(name).any(|w| stems(&w).any(|s| description.contains(s)))
}

/// Drops objects that share no word (up to naive suffix stemming) with the
/// region description, along with every attribute and relation that refers to
/// a dropped object.
pub fn filter_ungrounded(record: &RegionRecord) -> RegionRecord {
    let description = stem_set(&record.description);
    RegionRecord {
        scene_graph: record
            .scene_graph
            .retain_objects(|o| is_grounded(&o.name, &description)),
        ..record.clone()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TupleHistogram {
    pub total: usize,
    /// Tuples per region → number of regions with that many.
    pub per_region: BTreeMap<usize, usize>,
}

impl TupleHistogram {
    fn add(&mut self, count: usize) {
        self.total += count;
        *self.per_region.entry(count).or_default() += 1;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CorpusStats {
    pub images: usize,
    pub regions: usize,
    pub mean_regions_per_image: f64,
    pub with_amr: usize,
    pub objects: TupleHistogram,
    pub attributes: TupleHistogram,
    pub relations: TupleHistogram,
}

pub fn corpus_stats(records: &[RegionRecord]) -> CorpusStats {
    let mut stats = CorpusStats::default();
    let images: BTreeSet<&str> = records.iter().map(|r| r.image_id.as_str()).collect();
    stats.images = images.len();
    stats.regions = records.len();
    if stats.images > 0 {
        stats.mean_regions_per_image = stats.regions as f64 / stats.images as f64;
    }
    for r in records {
        stats.with_amr += usize::from(r.amr.is_some());
        stats.objects.add(r.scene_graph.objects().len());
        stats.attributes.add(r.scene_graph.attributes().len());
        stats.relations.add(r.scene_graph.relations().len());
    }
    stats
}

/// Converts Visual Genome region-graph JSON into region records.
///
/// Accepts the `region_graphs.json` layout: an array of images, each with
/// `image_id` and `regions`; each region carries `region_id`, `phrase`,
/// `objects` (`object_id` plus `name` or `names`, optional `attributes`),
/// optional region-level `attributes` (`object_id` plus `attribute` or
/// `attributes`) and `relationships` (`subject_id`, `predicate`, `object_id`).
/// Tuples whose terms normalize to nothing are dropped; regions with an empty
/// phrase are skipped. When `images` is given, only those image ids are kept.
pub fn import_visual_genome(
    json: &str,
    images: Option<&HashSet<String>>,
) -> Result<Vec<RegionRecord>, CorpusError> {
    let root: Value =
        serde_json::from_str(json).map_err(|e| CorpusError::VisualGenome(e.to_string()))?;
    let list = match &root {
        Value::Array(a) => a.as_slice(),
        Value::Object(_) => std::slice::from_ref(&root),
        _ => {
            return Err(CorpusError::VisualGenome(
                "expected an array of images".into(),
            ))
        }
    };
    let mut out = Vec::new();
    for image in list {
        let Some(image_id) = image.get("image_id").and_then(id_string) else {
            return Err(CorpusError::VisualGenome("image without image_id".into()));
        };
        if images.is_some_and(|keep| !keep.contains(&image_id)) {
            continue;
        }
        let regions = image
            .get("regions")
            .and_then(Value::as_array)
            .map(Vec::as_slice)
            .unwrap_or(&[]);
        for region in regions {
            if let Some(record) = vg_region(&image_id, region)? {
                out.push(record);
            }
        }
    }
    Ok(out)
}

fn id_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn strings(v: Option<&Value>) -> Vec<String> {
    match v {
        Some(Value::String(s)) => vec![s.clone()],
        Some(Value::Array(a)) => a
            .iter()
            .filter_map(|x| x.as_str().map(str::to_string))
            .collect(),
        _ => Vec::new(),
    }
}

fn vg_region(image_id: &str, region: &Value) -> Result<Option<RegionRecord>, CorpusError> {
    use crate::scene_graph::{AttributeTuple, ObjectTuple, RelationTuple};

    let region_id = region
        .get("region_id")
        .or_else(|| region.get("id"))
        .and_then(id_string)
        .ok_or_else(|| {
            CorpusError::VisualGenome(format!("region without region_id in image {image_id}"))
        })?;
    let phrase = region
        .get("phrase")
        .and_then(Value::as_str)
        .unwrap_or("")
        .trim();
    if phrase.is_empty() {
        return Ok(None);
    }

    let mut names: BTreeMap<String, String> = BTreeMap::new();
    let mut objects = Vec::new();
    let mut attributes = Vec::new();
    let empty = Vec::new();
    for object in region
        .get("objects")
        .and_then(Value::as_array)
        .unwrap_or(&empty)
    {
        let Some(id) = object
            .get("object_id")
            .or_else(|| object.get("id"))
            .and_then(id_string)
        else {
            continue;
        };
        let mut candidates = strings(object.get("names"));
        candidates.extend(strings(object.get("name")));
        let Some(name) = candidates.iter().find_map(|n| ObjectTuple::new(n).ok()) else {
            continue;
        };
        for attr in strings(object.get("attributes")) {
            if let Ok(a) = AttributeTuple::new(&name.name, &attr) {
                attributes.push(a);
            }
        }
        names.insert(id, name.name.clone());
        objects.push(name);
    }
    for attr in region
        .get("attributes")
        .and_then(Value::as_array)
        .unwrap_or(&empty)
    {
        let Some(name) = attr
            .get("object_id")
            .and_then(id_string)
            .and_then(|id| names.get(&id))
        else {
            continue;
        };
        let mut values = strings(attr.get("attributes"));
        values.extend(strings(attr.get("attribute")));
        for value in values {
            if let Ok(a) = AttributeTuple::new(name, &value) {
                attributes.push(a);
            }
        }
    }
    let mut relations = Vec::new();
    for rel in region
        .get("relationships")
        .and_then(Value::as_array)
        .unwrap_or(&empty)
    {
        let endpoint = |key: &str| {
            rel.get(key)
                .and_then(id_string)
                .and_then(|id| names.get(&id))
        };
        let (Some(s), Some(o)) = (endpoint("subject_id"), endpoint("object_id")) else {
            continue;
        };
        let predicate = rel.get("predicate").and_then(Value::as_str).unwrap_or("");
        if let Ok(r) = RelationTuple::new(s, predicate, o) {
            relations.push(r);
        }
    }
    Ok(Some(RegionRecord {
        image_id: image_id.to_string(),
        region_id,
        description: phrase.to_string(),
        scene_graph: SceneGraph::new(objects, attributes, relations),
        amr: None,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(description: &str, sg: SceneGraph) -> RegionRecord {
        RegionRecord {
            image_id: "1".into(),
            region_id: "1-1".into(),
            description: description.into(),
            scene_graph: sg,
            amr: None,
        }
    }

    #[test]
    fn bus_example() {
        let sg =
            SceneGraph::from_strs(&["person", "umbrella", "bus"], &[("bus", "red")], &[]).unwrap();
        let filtered = filter_ungrounded(&record("A person holding on umbrella", sg));
        assert_eq!(
            filtered.scene_graph,
            SceneGraph::from_strs(&["person", "umbrella"], &[], &[]).unwrap()
        );
    }

    #[test]
    fn grounded_record_unchanged() {
        let sg = SceneGraph::from_strs(
            &["dog", "frisbee"],
            &[("dog", "brown")],
            &[("dog", "catching", "frisbee")],
        )
        .unwrap();
        let r = record("brown dog catching a frisbee", sg);
        assert_eq!(filter_ungrounded(&r), r);
    }

    #[test]
    fn stemming_grounds_plurals() {
        let r = record(
            "dogs running",
            SceneGraph::from_strs(&["dog"], &[], &[]).unwrap(),
        );
        assert_eq!(filter_ungrounded(&r).scene_graph.objects().len(), 1);
        let r = record(
            "two buses",
            SceneGraph::from_strs(&["bus"], &[], &[]).unwrap(),
        );
        assert_eq!(filter_ungrounded(&r).scene_graph.objects().len(), 1);
    }

    #[test]
    fn relations_drop_with_either_endpoint() {
        let sg = SceneGraph::from_strs(
            &[],
            &[],
            &[("man", "riding", "horse"), ("man", "near", "fence")],
        )
        .unwrap();
        let out = filter_ungrounded(&record("a man riding a horse", sg));
        assert_eq!(out.scene_graph.relations().len(), 1);
        assert_eq!(out.scene_graph.relations()[0].object, "horse");
    }

    #[test]
    fn loads_and_skips() {
        let text = r#"{"image_id":"1","region_id":"a","description":"a dog","scene_graph":{"objects":[["dog"]]}}
{"image_id":2,"region_id":7,"description":"the cat","scene_graph":{"objects":["cat"]},"amr":"(z0 / cat)"}
not json
{"image_id":"3","region_id":"c","description":"  ","scene_graph":{}}
"#;
        let loaded = parse_records(text);
        assert_eq!(loaded.records.len(), 2);
        assert_eq!(loaded.skipped(), 2);
        assert_eq!(loaded.errors[0].line, 3);
        assert_eq!(loaded.errors[1].line, 4);
        assert_eq!(loaded.records[1].image_id, "2");
        assert_eq!(loaded.records[1].amr.as_deref(), Some("(z0 / cat)"));
    }

    #[test]
    fn reemit_is_byte_stable() {
        let line = r#"{"image_id":"1","region_id":"a","description":"a dog","scene_graph":{"objects":[["mat"],["dog"]],"relations":[["dog","on","mat"]]}}"#;
        let once = parse_records(line).records[0].to_json_line();
        let twice = parse_records(&once).records[0].to_json_line();
        assert_eq!(once, twice);
        assert_eq!(
            once,
            r#"{"image_id":"1","region_id":"a","description":"a dog","scene_graph":{"objects":[["dog"],["mat"]],"attributes":[],"relations":[["dog","on","mat"]]}}"#
        );
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_records("/nonexistent/records.jsonl"),
            Err(CorpusError::FileNotFound(_))
        ));
    }

    #[test]
    fn stats() {
        assert_eq!(corpus_stats(&[]), CorpusStats::default());
        let mut records = Vec::new();
        for image in ["a", "b"] {
            for region in 0..3 {
                let mut r = record(
                    "a dog",
                    SceneGraph::from_strs(&["dog"], &[("dog", "big")], &[]).unwrap(),
                );
                r.image_id = image.into();
                r.region_id = format!("{image}{region}");
                records.push(r);
            }
        }
        let s = corpus_stats(&records);
        assert_eq!((s.images, s.regions), (2, 6));
        assert_eq!(s.mean_regions_per_image, 3.0);
        assert_eq!(s.objects.total, 6);
        assert_eq!(s.attributes.per_region[&1], 6);
        assert_eq!(s.relations.per_region[&0], 6);
    }

    #[test]
    fn imports_visual_genome_layout() {
        let json = r#"[{"image_id": 10, "regions": [
            {"region_id": 100, "image_id": 10, "phrase": "A red bus on the street",
             "objects": [{"object_id": 1, "names": ["Bus"], "attributes": ["red"]},
                         {"object_id": 2, "name": "street"}],
             "attributes": [{"object_id": 2, "attribute": "wet"}],
             "relationships": [{"subject_id": 1, "object_id": 2, "predicate": "ON"},
                               {"subject_id": 1, "object_id": 99, "predicate": "near"}]},
            {"region_id": 101, "phrase": "", "objects": []}
        ]}, {"image_id": 11, "regions": [{"region_id": 5, "phrase": "sky", "objects": [{"object_id": 3, "names": ["sky"]}]}]}]"#;
        let all = import_visual_genome(json, None).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].region_id, "100");
        assert_eq!(
            all[0].scene_graph,
            SceneGraph::from_strs(
                &["bus", "street"],
                &[("bus", "red"), ("street", "wet")],
                &[("bus", "on", "street")]
            )
            .unwrap()
        );
        let keep: HashSet<String> = ["11".to_string()].into();
        let some = import_visual_genome(json, Some(&keep)).unwrap();
        assert_eq!(some.len(), 1);
        assert_eq!(some[0].image_id, "11");
        assert!(import_visual_genome("{", None).is_err());
    }
}
