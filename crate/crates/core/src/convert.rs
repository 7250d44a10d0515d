//! AMR graph → scene graph.
//!
//! Two producers share one output type: a deterministic rule-based baseline
//! ([`convert_rules`]) and an external seq2seq model driven over a line
//! protocol ([`ExternalAdapter`]). [`export_training_pairs`] writes the
//! `(linearized AMR, target string)` pairs such a model is trained on.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, ExitStatus, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amr::{parse_penman, AmrGraph, Target, Variable};
use crate::corpus::{filter_ungrounded, RegionRecord};
use crate::linearize::{linearize, LinearizedSequence, Strategy};
use crate::scene_graph::{
    normalize, parse_sg_text, serialize_sg, AttributeTuple, ObjectTuple, RelationTuple, SceneGraph,
    SceneGraphError,
};

/// Role sets driving [`convert_rules`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleConfig {
    /// Edges that attach an attribute to an object.
    pub attribute_roles: BTreeSet<String>,
    /// Relation argument roles, most preferred subject first.
    pub core_roles: Vec<String>,
    /// Roles that always mark a location, with the preposition appended to the predicate.
    pub locative_roles: BTreeMap<String, String>,
    /// A core role read as locative when the frame has no child on the first
    /// core role (an intransitive use, as in `stand-01 :ARG1 x :ARG2 y`).
    pub intransitive_locative: Option<(String, String)>,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            attribute_roles: [":mod".to_string()].into(),
            core_roles: vec![":ARG0".into(), ":ARG1".into(), ":ARG2".into()],
            locative_roles: [(":location".to_string(), "in".to_string())].into(),
            intransitive_locative: Some((":ARG2".into(), "in".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("role `{0}` must start with `:` and name a role")]
pub struct InvalidRole(pub String);

impl RuleConfig {
    pub fn validate(&self) -> Result<(), InvalidRole> {
        let roles = self
            .attribute_roles
            .iter()
            .chain(&self.core_roles)
            .chain(self.locative_roles.keys())
            .chain(self.intransitive_locative.iter().map(|(r, _)| r));
        for role in roles {
            if role.len() < 2 || !role.starts_with(':') {
                return Err(InvalidRole(role.clone()));
            }
        }
        Ok(())
    }
}

/// Normalized surface form of a concept or constant, if it has one.
fn surface(text: &str) -> Option<String> {
    let unquoted = text
        .strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .unwrap_or(text);
    ObjectTuple::new(unquoted).ok().map(|o| o.name)
}

/// Rule-based conversion:
///
/// 1. Every non-frame concept becomes an object, unless it only serves as an
///    attribute value (rule 2).
/// 2. An attribute-role edge from a non-frame node to a non-frame node or
///    constant becomes `(source, target)`.
/// 3. A frame with a core child and at least two core-or-locative children
///    becomes `(subject, lemma[ prep], object)`: the subject is the most
///    preferred core child, the object the next core child or else the first
///    locative child, whose preposition is appended to the lemma.
/// 4. A frame with exactly one core child and no locative child becomes the
///    attribute `(child, lemma)`.
/// 5. Frames without core children produce nothing.
///
/// Only edges into non-frame nodes count as frame children.
pub fn convert_rules(graph: &AmrGraph, config: &RuleConfig) -> SceneGraph {
    let names: BTreeMap<&Variable, String> = graph
        .nodes()
        .iter()
        .filter(|(_, c)| !c.is_frame())
        .filter_map(|(v, c)| surface(c.as_str()).map(|s| (v, s)))
        .collect();

    let mut attributes = Vec::new();
    let mut attribute_values: HashSet<&Variable> = HashSet::new();
    for edge in graph.edges() {
        if !config.attribute_roles.contains(&edge.role) {
            continue;
        }
        let Some(object) = names.get(&edge.source) else {
            continue;
        };
        let value = match &edge.target {
            Target::Variable(v) => names.get(v).cloned().inspect(|_| {
                attribute_values.insert(v);
            }),
            Target::Constant(c) => surface(c),
        };
        if let Some(value) = value {
            attributes.push(AttributeTuple {
                object: object.clone(),
                attribute: value,
            });
        }
    }

    let mut objects: Vec<ObjectTuple> = graph
        .nodes()
        .iter()
        .filter(|(v, _)| !attribute_values.contains(v))
        .filter_map(|(v, _)| names.get(v).map(|n| ObjectTuple { name: n.clone() }))
        .collect();

    let mut relations = Vec::new();
    for (var, concept) in graph.nodes().iter().filter(|(_, c)| c.is_frame()) {
        let Some(lemma) = normalize(concept.lemma())
            .ok()
            .filter(|l| !l.contains(['(', ')', ',']))
        else {
            continue;
        };
        let children: Vec<(&str, &String)> = graph
            .outgoing(var)
            .filter_map(|e| {
                let v = e.target.as_variable()?;
                names.get(v).map(|n| (e.role.as_str(), n))
            })
            .collect();
        let intransitive = config
            .core_roles
            .first()
            .is_none_or(|first| !children.iter().any(|(r, _)| r == first));

        let mut core: Vec<(usize, &String)> = Vec::new();
        let mut locative: Vec<(&str, &String)> = Vec::new();
        for &(role, name) in &children {
            if let Some(prep) = config.locative_roles.get(role) {
                locative.push((prep, name));
            } else if let Some((_, prep)) = config
                .intransitive_locative
                .as_ref()
                .filter(|(r, _)| intransitive && r == role)
            {
                locative.push((prep, name));
            } else if let Some(rank) = config.core_roles.iter().position(|r| r == role) {
                core.push((rank, name));
            }
        }
        // stable: equal ranks keep attachment order
        core.sort_by_key(|&(rank, _)| rank);

        match (core.len(), locative.len()) {
            (0, _) => {}
            (1, 0) => attributes.push(AttributeTuple {
                object: core[0].1.clone(),
                attribute: lemma,
            }),
            _ => {
                let (predicate, object) = match core.get(1) {
                    Some(&(_, object)) => (lemma, object),
                    None => (format!("{lemma} {}", locative[0].0), locative[0].1),
                };
                relations.push(RelationTuple {
                    subject: core[0].1.clone(),
                    predicate,
                    object: object.clone(),
                });
            }
        }
    }

    objects.sort();
    SceneGraph::new(objects, attributes, relations)
}

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("adapter command is empty")]
    EmptyCommand,
    #[error("adapter timeout must be positive")]
    InvalidTimeout,
    #[error("could not parse adapter command `{0}`")]
    BadCommand(String),
    #[error("failed to start adapter `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("adapter did not answer within {timeout:?}")]
    AdapterTimeout { timeout: Duration, raw: String },
    #[error("adapter exited ({status:?}) without answering")]
    AdapterCrashed {
        status: Option<ExitStatus>,
        raw: String,
    },
    #[error("adapter returned malformed output `{raw}`: {source}")]
    MalformedModelOutput {
        raw: String,
        source: SceneGraphError,
    },
    #[error("adapter i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl AdapterError {
    /// The model's raw response, when one was (partially) read.
    pub fn raw_response(&self) -> Option<&str> {
        match self {
            AdapterError::AdapterTimeout { raw, .. }
            | AdapterError::AdapterCrashed { raw, .. }
            | AdapterError::MalformedModelOutput { raw, .. } => Some(raw),
            _ => None,
        }
    }
}

struct Running {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

/// A child process speaking the adapter protocol: one UTF-8 request line (the
/// linearized graph) in, one response line (a scene-graph target string) out.
///
/// The process is started on first use and kept alive across requests. A
/// timed-out or crashed process is discarded and restarted on the next
/// request. One adapter serves one caller at a time.
pub struct ExternalAdapter {
    command: Vec<String>,
    timeout: Duration,
    running: Option<Running>,
}

impl std::fmt::Debug for ExternalAdapter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalAdapter")
            .field("command", &self.command)
            .field("timeout", &self.timeout)
            .field("running", &self.running.is_some())
            .finish()
    }
}

impl ExternalAdapter {
    pub fn new(command: Vec<String>, timeout: Duration) -> Result<Self, AdapterError> {
        if command.is_empty() {
            return Err(AdapterError::EmptyCommand);
        }
        if timeout.is_zero() {
            return Err(AdapterError::InvalidTimeout);
        }
        Ok(ExternalAdapter {
            command,
            timeout,
            running: None,
        })
    }

    /// Splits a shell-style command line (`python model.py --beam 4`).
    pub fn from_command_line(command: &str, timeout: Duration) -> Result<Self, AdapterError> {
        let argv =
            shlex::split(command).ok_or_else(|| AdapterError::BadCommand(command.to_string()))?;
        Self::new(argv, timeout)
    }

    pub fn command(&self) -> &[String] {
        &self.command
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    fn start(&mut self) -> Result<&mut Running, AdapterError> {
        if self.running.is_none() {
            let mut child = Command::new(&self.command[0])
                .args(&self.command[1..])
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()
                .map_err(|source| AdapterError::Spawn {
                    command: self.command.join(" "),
                    source,
                })?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            let (tx, rx) = mpsc::channel();
            thread::spawn(move || {
                let mut reader = BufReader::new(stdout);
                loop {
                    let mut line = String::new();
                    match reader.read_line(&mut line) {
                        Ok(0) => break,
                        Ok(_) => {
                            if tx.send(Ok(line)).is_err() {
                                break;
                            }
                        }
                        Err(e) => {
                            let _ = tx.send(Err(e));
                            break;
                        }
                    }
                }
            });
            self.running = Some(Running {
                child,
                stdin,
                lines: rx,
            });
        }
        Ok(self.running.as_mut().expect("just started"))
    }

    fn shutdown(&mut self) -> Option<ExitStatus> {
        let mut running = self.running.take()?;
        drop(running.stdin);
        match running.child.try_wait() {
            Ok(Some(status)) => Some(status),
            _ => {
                let _ = running.child.kill();
                running.child.wait().ok()
            }
        }
    }

    /// Sends one request line and returns the raw response line.
    pub fn request(&mut self, line: &str) -> Result<String, AdapterError> {
        let timeout = self.timeout;
        let running = self.start()?;
        let request = line.replace(['\n', '\r'], " ");
        let sent = writeln!(running.stdin, "{request}").and_then(|_| running.stdin.flush());
        let reply = match sent {
            Ok(()) => running.lines.recv_timeout(timeout),
            // broken pipe: the process is gone, report it as a crash below
            Err(_) => Err(RecvTimeoutError::Disconnected),
        };
        match reply {
            Ok(Ok(raw)) => Ok(raw.trim_end_matches(['\n', '\r']).to_string()),
            Ok(Err(e)) => {
                self.shutdown();
                Err(AdapterError::Io(e))
            }
            Err(RecvTimeoutError::Timeout) => {
                self.shutdown();
                Err(AdapterError::AdapterTimeout {
                    timeout,
                    raw: String::new(),
                })
            }
            Err(RecvTimeoutError::Disconnected) => {
                // give the process a moment to exit so its status is available
                let status = self.running.as_mut().and_then(|r| {
                    for _ in 0..50 {
                        if let Ok(Some(s)) = r.child.try_wait() {
                            return Some(s);
                        }
                        thread::sleep(Duration::from_millis(10));
                    }
                    None
                });
                let status = status.or_else(|| self.shutdown());
                self.running = None;
                Err(AdapterError::AdapterCrashed {
                    status,
                    raw: String::new(),
                })
            }
        }
    }

    /// Sends the linearized text and parses the reply as a scene graph.
    pub fn convert(&mut self, seq: &LinearizedSequence) -> Result<SceneGraph, AdapterError> {
        let raw = self.request(&seq.text)?;
        parse_sg_text(&raw).map_err(|source| AdapterError::MalformedModelOutput { raw, source })
    }
}

impl Drop for ExternalAdapter {
    fn drop(&mut self) {
        self.shutdown();
    }
}

pub fn convert_external(
    seq: &LinearizedSequence,
    adapter: &mut ExternalAdapter,
) -> Result<SceneGraph, AdapterError> {
    adapter.convert(seq)
}

/// One line of the training-pair export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub input: String,
    pub target: String,
    pub region_id: String,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SkipReason {
    MissingAmr,
    BadAmr(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    pub region_id: String,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrainingExport {
    pub pairs: Vec<TrainingPair>,
    pub skipped: Vec<SkippedRecord>,
}

impl TrainingExport {
    pub fn skip_count(&self) -> usize {
        self.skipped.len()
    }
}

/// Builds one pair per record that carries a parseable AMR graph: the
/// linearized graph as input and the grounding-filtered ground truth as target.
pub fn export_training_pairs(records: &[RegionRecord], strategy: Strategy) -> TrainingExport {
    let mut export = TrainingExport::default();
    for record in records {
        let Some(amr) = record.amr.as_deref() else {
            log::warn!("region {}: no AMR graph, skipped", record.region_id);
            export.skipped.push(SkippedRecord {
                region_id: record.region_id.clone(),
                reason: SkipReason::MissingAmr,
            });
            continue;
        };
        let graph = match parse_penman(amr) {
            Ok(g) => g,
            Err(e) => {
                log::warn!("region {}: {e}", record.region_id);
                export.skipped.push(SkippedRecord {
                    region_id: record.region_id.clone(),
                    reason: SkipReason::BadAmr(e.to_string()),
                });
                continue;
            }
        };
        export.pairs.push(TrainingPair {
            input: linearize(&graph, strategy).text,
            target: serialize_sg(&filter_ungrounded(record).scene_graph),
            region_id: record.region_id.clone(),
            strategy,
        });
    }
    export
}
