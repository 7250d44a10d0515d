//! Flattening AMR graphs into token sequences for a seq2seq model.
//!
//! Three orders are supported:
//!
//! * **DFS**: the canonical PENMAN string itself, slash and nesting intact.
//! * **BFS**: every node re-parenthesized on its own as `(var / concept)`,
//!   emitted level by level, each preceded by the role that reaches it.
//! * **In-order**: left-root-right over the spanning tree. The first child is
//!   the left subtree and every other child is on the right, so a child is
//!   printed before its parent with the connecting role in between.
//!
//! Re-entrant references print as a bare `(var)` in BFS and in-order and are
//! never expanded twice. Constants print as `(literal)`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amr::lex::{self, Kind};
use crate::amr::{serialize_penman, AmrEdge, AmrGraph, Target, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Dfs,
    Bfs,
    #[serde(rename = "inorder")]
    InOrder,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Dfs, Strategy::Bfs, Strategy::InOrder];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Dfs => "dfs",
            Strategy::Bfs => "bfs",
            Strategy::InOrder => "inorder",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown linearization strategy `{0}` (expected dfs, bfs or inorder)")]
pub struct UnknownStrategy(pub String);

impl FromStr for Strategy {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dfs" => Ok(Strategy::Dfs),
            "bfs" => Ok(Strategy::Bfs),
            "inorder" | "in-order" | "in_order" => Ok(Strategy::InOrder),
            _ => Err(UnknownStrategy(s.to_string())),
        }
    }
}

/// A linearized graph: the printable text and the model-facing tokens.
///
/// `tokens` is always `tokenize(text, strategy)`, so joining the tokens with
/// single spaces gives `text` with the spaces around each `/` removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearizedSequence {
    pub strategy: Strategy,
    pub tokens: Vec<String>,
    pub text: String,
}

impl LinearizedSequence {
    fn from_text(text: String, strategy: Strategy) -> Self {
        let tokens = tokenize(&text, strategy).expect("linearizers emit balanced text");
        LinearizedSequence {
            strategy,
            tokens,
            text,
        }
    }

    /// Tokens joined by single spaces.
    pub fn token_text(&self) -> String {
        self.tokens.join(" ")
    }
}

impl fmt::Display for LinearizedSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

pub fn linearize(graph: &AmrGraph, strategy: Strategy) -> LinearizedSequence {
    match strategy {
        Strategy::Dfs => linearize_dfs(graph),
        Strategy::Bfs => linearize_bfs(graph),
        Strategy::InOrder => linearize_inorder(graph),
    }
}

pub fn linearize_dfs(graph: &AmrGraph) -> LinearizedSequence {
    LinearizedSequence::from_text(serialize_penman(graph), Strategy::Dfs)
}

fn push_node(out: &mut Vec<String>, graph: &AmrGraph, var: &Variable) {
    let concept = graph.concept(var).map(|c| c.as_str()).unwrap_or_default();
    out.push(format!("({var} / {concept})"));
}

/// The unit printed for an edge target: a full node for a tree edge, a bare
/// `(var)` for a re-entrancy, `(literal)` for a constant. Returns the variable
/// to descend into, if any.
fn push_target<'g>(
    out: &mut Vec<String>,
    graph: &AmrGraph,
    edge: &'g AmrEdge,
) -> Option<&'g Variable> {
    match &edge.target {
        Target::Variable(v) if edge.tree => {
            push_node(out, graph, v);
            Some(v)
        }
        target => {
            out.push(format!("({target})"));
            None
        }
    }
}

pub fn linearize_bfs(graph: &AmrGraph) -> LinearizedSequence {
    let mut parts = Vec::with_capacity(graph.node_count() + 2 * graph.edges().len());
    push_node(&mut parts, graph, graph.root());
    let mut queue = VecDeque::from([graph.root()]);
    while let Some(var) = queue.pop_front() {
        for edge in graph.outgoing(var) {
            parts.push(edge.role.clone());
            if let Some(child) = push_target(&mut parts, graph, edge) {
                queue.push_back(child);
            }
        }
    }
    LinearizedSequence::from_text(parts.join(" "), Strategy::Bfs)
}

pub fn linearize_inorder(graph: &AmrGraph) -> LinearizedSequence {
    let mut parts = Vec::with_capacity(graph.node_count() + 2 * graph.edges().len());
    inorder(graph, graph.root(), &mut parts);
    LinearizedSequence::from_text(parts.join(" "), Strategy::InOrder)
}

fn inorder(graph: &AmrGraph, var: &Variable, out: &mut Vec<String>) {
    let mut children = graph.outgoing(var);
    if let Some(first) = children.next() {
        subtree(graph, first, out);
        out.push(first.role.clone());
    }
    push_node(out, graph, var);
    for edge in children {
        out.push(edge.role.clone());
        subtree(graph, edge, out);
    }
}

fn subtree(graph: &AmrGraph, edge: &AmrEdge, out: &mut Vec<String>) {
    match &edge.target {
        Target::Variable(v) if edge.tree => inorder(graph, v, out),
        target => out.push(format!("({target})")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed linearization at byte {offset}: {reason}")]
pub struct MalformedLinearization {
    pub offset: usize,
    pub reason: &'static str,
}

/// Splits a linearization into model tokens.
///
/// DFS: an opening node fuses with its variable, slash and concept
/// (`(z1/retriever`), and closing parentheses fuse onto the token before them
/// (`(z2/gold))`). Roles stand alone. BFS and in-order: each `(var / concept)`
/// unit becomes one `(var/concept)` token and each role is one token.
pub fn tokenize(text: &str, strategy: Strategy) -> Result<Vec<String>, MalformedLinearization> {
    let lexed = lex::tokenize(text).map_err(|e| MalformedLinearization {
        offset: e.offset(),
        reason: "unterminated string literal",
    })?;
    let mut tokens: Vec<String> = Vec::new();
    let mut depth = 0usize;
    let mut i = 0;
    while i < lexed.len() {
        let t = lexed[i];
        match t.kind {
            Kind::Open => {
                // `(` atom [`/` concept]
                let mut unit = String::from("(");
                let atom = lexed
                    .get(i + 1)
                    .filter(|a| matches!(a.kind, Kind::Symbol | Kind::Quoted));
                let Some(atom) = atom else {
                    return Err(MalformedLinearization {
                        offset: t.offset,
                        reason: "`(` must be followed by a variable or literal",
                    });
                };
                unit.push_str(atom.text);
                i += 2;
                if lexed.get(i).map(|s| s.kind) == Some(Kind::Slash) {
                    match lexed.get(i + 1) {
                        Some(c) if c.kind == Kind::Symbol => {
                            unit.push('/');
                            unit.push_str(c.text);
                            i += 2;
                        }
                        _ => {
                            return Err(MalformedLinearization {
                                offset: lexed[i].offset,
                                reason: "`/` must be followed by a concept",
                            })
                        }
                    }
                }
                depth += 1;
                if strategy != Strategy::Dfs {
                    match lexed.get(i) {
                        Some(c) if c.kind == Kind::Close => {
                            unit.push(')');
                            depth -= 1;
                            i += 1;
                        }
                        _ => {
                            return Err(MalformedLinearization {
                                offset: t.offset,
                                reason: "node unit must close immediately",
                            })
                        }
                    }
                }
                tokens.push(unit);
            }
            Kind::Close => {
                if depth == 0 {
                    return Err(MalformedLinearization {
                        offset: t.offset,
                        reason: "unbalanced `)`",
                    });
                }
                let Some(last) = tokens.last_mut().filter(|l| !l.starts_with(':')) else {
                    return Err(MalformedLinearization {
                        offset: t.offset,
                        reason: "`)` must follow a node or value",
                    });
                };
                last.push(')');
                depth -= 1;
                i += 1;
            }
            Kind::Slash => {
                return Err(MalformedLinearization {
                    offset: t.offset,
                    reason: "stray `/`",
                })
            }
            Kind::Symbol | Kind::Quoted => {
                tokens.push(t.text.to_string());
                i += 1;
            }
        }
    }
    if depth != 0 {
        return Err(MalformedLinearization {
            offset: text.len(),
            reason: "unclosed `(`",
        });
    }
    Ok(tokens)
}
