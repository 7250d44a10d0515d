//! AMR graphs in PENMAN notation.
//!
//! An [`AmrGraph`] is a rooted graph of variables labelled with concepts and
//! connected by role edges. Each non-root variable is introduced by exactly one
//! *tree edge* (the place where PENMAN nests `(var / concept ...)`); any further
//! reference to the same variable is a re-entrant non-tree edge. Edges keep the
//! order in which they were attached in the source text, and every traversal in
//! this crate breaks ties by that order.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// Nesting depth at which the parser gives up rather than recurse further.
pub const MAX_NESTING_DEPTH: usize = 512;

/// A node identifier such as `z0` or `b2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        Variable(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// `[a-z][a-zA-Z0-9]*`
    pub fn is_valid_name(name: &str) -> bool {
        let mut chars = name.chars();
        match chars.next() {
            Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_alphanumeric()),
            _ => false,
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Variable {
    fn from(s: &str) -> Self {
        Variable::new(s)
    }
}

/// A concept label, either plain (`retriever`) or a frame (`stand-01`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Concept(String);

impl Concept {
    pub fn new(label: impl Into<String>) -> Self {
        Concept(label.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// True when the label ends in a two-digit sense suffix like `-01`.
    pub fn is_frame(&self) -> bool {
        self.frame_split().is_some()
    }

    /// The label with any sense suffix removed: `stand-01` becomes `stand`.
    pub fn lemma(&self) -> &str {
        self.frame_split().unwrap_or(&self.0)
    }

    fn frame_split(&self) -> Option<&str> {
        let b = self.0.as_bytes();
        let n = b.len();
        if n >= 4 && b[n - 3] == b'-' && b[n - 2].is_ascii_digit() && b[n - 1].is_ascii_digit() {
            Some(&self.0[..n - 3])
        } else {
            None
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Concept {
    fn from(s: &str) -> Self {
        Concept::new(s)
    }
}

/// What an edge points at.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Target {
    Variable(Variable),
    /// A literal leaf kept exactly as written, quotes included (`"Paris"`, `5`, `-`).
    Constant(String),
}

impl Target {
    pub fn as_variable(&self) -> Option<&Variable> {
        match self {
            Target::Variable(v) => Some(v),
            Target::Constant(_) => None,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Variable(v) => v.fmt(f),
            Target::Constant(c) => f.write_str(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AmrEdge {
    pub source: Variable,
    pub role: String,
    pub target: Target,
    /// Whether this edge introduces its target variable (spanning-tree edge).
    pub tree: bool,
}

impl AmrEdge {
    pub fn tree(source: impl Into<Variable>, role: &str, target: impl Into<Variable>) -> Self {
        AmrEdge {
            source: source.into(),
            role: role.to_string(),
            target: Target::Variable(target.into()),
            tree: true,
        }
    }

    pub fn reentrant(source: impl Into<Variable>, role: &str, target: impl Into<Variable>) -> Self {
        AmrEdge {
            source: source.into(),
            role: role.to_string(),
            target: Target::Variable(target.into()),
            tree: false,
        }
    }

    pub fn constant(source: impl Into<Variable>, role: &str, literal: &str) -> Self {
        AmrEdge {
            source: source.into(),
            role: role.to_string(),
            target: Target::Constant(literal.to_string()),
            tree: false,
        }
    }
}

fn is_valid_role(role: &str) -> bool {
    role.len() >= 2 && role.starts_with(':')
}

/// A rooted AMR graph.
///
/// Construct through [`parse_penman`] or [`AmrGraph::new`], both of which
/// guarantee the graph invariants. [`AmrGraph::from_parts`] skips the checks
/// so that [`validate`] can be run on arbitrary data.
#[derive(Debug, Clone)]
pub struct AmrGraph {
    root: Variable,
    nodes: Vec<(Variable, Concept)>,
    edges: Vec<AmrEdge>,
    index: HashMap<Variable, usize>,
    outgoing: HashMap<Variable, Vec<usize>>,
}

impl PartialEq for AmrGraph {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Eq for AmrGraph {}

impl AmrGraph {
    /// Builds a graph and checks every invariant, returning the diagnostics on failure.
    pub fn new(
        root: Variable,
        nodes: Vec<(Variable, Concept)>,
        edges: Vec<AmrEdge>,
    ) -> Result<Self, Vec<Diagnostic>> {
        let graph = Self::from_parts(root, nodes, edges);
        let diagnostics = validate(&graph);
        if diagnostics.is_empty() {
            Ok(graph)
        } else {
            Err(diagnostics)
        }
    }

    /// Builds a graph without checking invariants.
    pub fn from_parts(
        root: Variable,
        nodes: Vec<(Variable, Concept)>,
        edges: Vec<AmrEdge>,
    ) -> Self {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, (var, _)) in nodes.iter().enumerate() {
            index.entry(var.clone()).or_insert(i);
        }
        let mut outgoing: HashMap<Variable, Vec<usize>> = HashMap::new();
        for (i, edge) in edges.iter().enumerate() {
            outgoing.entry(edge.source.clone()).or_default().push(i);
        }
        AmrGraph {
            root,
            nodes,
            edges,
            index,
            outgoing,
        }
    }

    pub fn root(&self) -> &Variable {
        &self.root
    }

    /// Nodes in declaration order.
    pub fn nodes(&self) -> &[(Variable, Concept)] {
        &self.nodes
    }

    /// Edges in attachment order.
    pub fn edges(&self) -> &[AmrEdge] {
        &self.edges
    }

    pub fn tree_edges(&self) -> impl Iterator<Item = &AmrEdge> {
        self.edges.iter().filter(|e| e.tree)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn concept(&self, var: &Variable) -> Option<&Concept> {
        self.index.get(var).map(|&i| &self.nodes[i].1)
    }

    pub fn contains(&self, var: &Variable) -> bool {
        self.index.contains_key(var)
    }

    /// Outgoing edges of `var` in attachment order.
    pub fn outgoing(&self, var: &Variable) -> impl Iterator<Item = &AmrEdge> {
        self.outgoing
            .get(var)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(move |&i| &self.edges[i])
    }

    /// A copy of the graph with the edge at `index` removed. Mostly useful for
    /// building invalid graphs in tests and tooling.
    pub fn without_edge(&self, index: usize) -> AmrGraph {
        let mut edges = self.edges.clone();
        edges.remove(index);
        AmrGraph::from_parts(self.root.clone(), self.nodes.clone(), edges)
    }
}

impl fmt::Display for AmrGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_penman(self))
    }
}

impl std::str::FromStr for AmrGraph {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_penman(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty input at byte {offset}")]
    EmptyInput { offset: usize },
    #[error("unbalanced parentheses at byte {offset}")]
    UnbalancedParentheses { offset: usize },
    #[error("variable `{variable}` declared twice (second declaration at byte {offset})")]
    DuplicateVariableDeclaration { variable: String, offset: usize },
    #[error("reference to undeclared variable `{variable}` at byte {offset}")]
    UndeclaredVariableReference { variable: String, offset: usize },
    #[error("invalid variable name `{name}` at byte {offset}")]
    InvalidVariable { name: String, offset: usize },
    #[error("expected {expected} at byte {offset}, found {found}")]
    UnexpectedToken {
        expected: &'static str,
        found: String,
        offset: usize,
    },
    #[error("unterminated string literal starting at byte {offset}")]
    UnterminatedString { offset: usize },
    #[error("nesting deeper than {MAX_NESTING_DEPTH} at byte {offset}")]
    NestingTooDeep { offset: usize },
    #[error("unexpected input after the graph at byte {offset}")]
    TrailingInput { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::EmptyInput { offset }
            | ParseError::UnbalancedParentheses { offset }
            | ParseError::DuplicateVariableDeclaration { offset, .. }
            | ParseError::UndeclaredVariableReference { offset, .. }
            | ParseError::InvalidVariable { offset, .. }
            | ParseError::UnexpectedToken { offset, .. }
            | ParseError::UnterminatedString { offset }
            | ParseError::NestingTooDeep { offset }
            | ParseError::TrailingInput { offset } => *offset,
        }
    }
}

pub(crate) mod lex {
    use super::ParseError;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum Kind {
        Open,
        Close,
        Slash,
        Symbol,
        Quoted,
    }

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub struct Token<'a> {
        pub kind: Kind,
        pub text: &'a str,
        pub offset: usize,
    }

    fn is_delimiter(c: char) -> bool {
        c.is_whitespace() || matches!(c, '(' | ')' | '/' | '"')
    }

    pub fn tokenize(input: &str) -> Result<Vec<Token<'_>>, ParseError> {
        let mut tokens = Vec::new();
        let mut chars = input.char_indices().peekable();
        while let Some(&(start, c)) = chars.peek() {
            let kind = match c {
                c if c.is_whitespace() => {
                    chars.next();
                    continue;
                }
                '(' => Kind::Open,
                ')' => Kind::Close,
                '/' => Kind::Slash,
                '"' => {
                    chars.next();
                    let mut escaped = false;
                    let mut end = None;
                    for (i, c) in chars.by_ref() {
                        if escaped {
                            escaped = false;
                        } else if c == '\\' {
                            escaped = true;
                        } else if c == '"' {
                            end = Some(i + 1);
                            break;
                        }
                    }
                    let end = end.ok_or(ParseError::UnterminatedString { offset: start })?;
                    tokens.push(Token {
                        kind: Kind::Quoted,
                        text: &input[start..end],
                        offset: start,
                    });
                    continue;
                }
                _ => {
                    let mut end = input.len();
                    while let Some(&(i, c)) = chars.peek() {
                        if is_delimiter(c) {
                            end = i;
                            break;
                        }
                        chars.next();
                    }
                    tokens.push(Token {
                        kind: Kind::Symbol,
                        text: &input[start..end],
                        offset: start,
                    });
                    continue;
                }
            };
            chars.next();
            tokens.push(Token {
                kind,
                text: &input[start..start + c.len_utf8()],
                offset: start,
            });
        }
        Ok(tokens)
    }
}

use lex::{Kind, Token};

/// Roles whose bare symbolic values (`imperative`, `expressive`) are constants
/// rather than variable references.
const SYMBOLIC_CONSTANT_ROLES: &[&str] = &[":mode"];

fn is_constant_symbol(text: &str) -> bool {
    if text == "-" || text == "+" {
        return true;
    }
    let digits = text.strip_prefix(['-', '+']).unwrap_or(text);
    digits.starts_with(|c: char| c.is_ascii_digit()) || !Variable::is_valid_name(text)
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end: usize,
    nodes: Vec<(Variable, Concept)>,
    declared: HashSet<Variable>,
    edges: Vec<AmrEdge>,
    references: Vec<(Variable, usize)>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<Token<'a>> {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn found(token: Option<Token<'_>>) -> String {
        match token {
            Some(t) => format!("`{}`", t.text),
            None => "end of input".to_string(),
        }
    }

    fn expect(
        &mut self,
        kind: Kind,
        expected: &'static str,
        open: usize,
    ) -> Result<Token<'a>, ParseError> {
        match self.next() {
            Some(t) if t.kind == kind => Ok(t),
            None => Err(ParseError::UnbalancedParentheses { offset: open }),
            other => Err(ParseError::UnexpectedToken {
                expected,
                found: Self::found(other),
                offset: other.map_or(self.end, |t| t.offset),
            }),
        }
    }

    /// Parses `(var / concept (:role target)*)`. `parent` is the edge that
    /// introduces this node, pushed before any of the node's own edges.
    fn node(
        &mut self,
        parent: Option<(Variable, String)>,
        depth: usize,
    ) -> Result<Variable, ParseError> {
        let open = self.expect(Kind::Open, "`(`", self.end)?;
        if depth >= MAX_NESTING_DEPTH {
            return Err(ParseError::NestingTooDeep {
                offset: open.offset,
            });
        }
        let var_tok = self.expect(Kind::Symbol, "a variable", open.offset)?;
        if !Variable::is_valid_name(var_tok.text) {
            return Err(ParseError::InvalidVariable {
                name: var_tok.text.to_string(),
                offset: var_tok.offset,
            });
        }
        let var = Variable::new(var_tok.text);
        if !self.declared.insert(var.clone()) {
            return Err(ParseError::DuplicateVariableDeclaration {
                variable: var.0,
                offset: var_tok.offset,
            });
        }
        if let Some((source, role)) = parent {
            self.edges.push(AmrEdge {
                source,
                role,
                target: Target::Variable(var.clone()),
                tree: true,
            });
        }
        self.expect(Kind::Slash, "`/`", open.offset)?;
        let concept = self.expect(Kind::Symbol, "a concept", open.offset)?;
        self.nodes.push((var.clone(), Concept::new(concept.text)));

        loop {
            match self.next() {
                None => {
                    return Err(ParseError::UnbalancedParentheses {
                        offset: open.offset,
                    })
                }
                Some(t) if t.kind == Kind::Close => return Ok(var),
                Some(t) if t.kind == Kind::Symbol && is_valid_role(t.text) => {
                    let role = t.text.to_string();
                    match self.peek() {
                        None => {
                            return Err(ParseError::UnbalancedParentheses {
                                offset: open.offset,
                            })
                        }
                        Some(next) if next.kind == Kind::Open => {
                            self.node(Some((var.clone(), role)), depth + 1)?;
                        }
                        Some(next) if next.kind == Kind::Quoted => {
                            self.pos += 1;
                            self.edges.push(AmrEdge {
                                source: var.clone(),
                                role,
                                target: Target::Constant(next.text.to_string()),
                                tree: false,
                            });
                        }
                        Some(next) if next.kind == Kind::Symbol && !next.text.starts_with(':') => {
                            self.pos += 1;
                            let target = if is_constant_symbol(next.text)
                                || SYMBOLIC_CONSTANT_ROLES.contains(&role.as_str())
                            {
                                Target::Constant(next.text.to_string())
                            } else {
                                let v = Variable::new(next.text);
                                self.references.push((v.clone(), next.offset));
                                Target::Variable(v)
                            };
                            self.edges.push(AmrEdge {
                                source: var.clone(),
                                role,
                                target,
                                tree: false,
                            });
                        }
                        other => {
                            return Err(ParseError::UnexpectedToken {
                                expected: "a role target",
                                found: Self::found(other),
                                offset: other.map_or(self.end, |t| t.offset),
                            })
                        }
                    }
                }
                other => {
                    return Err(ParseError::UnexpectedToken {
                        expected: "a role or `)`",
                        found: Self::found(other),
                        offset: other.map_or(self.end, |t| t.offset),
                    })
                }
            }
        }
    }
}

/// Parses one PENMAN graph.
///
/// Nested `(var / concept)` targets become tree edges; bare variables become
/// re-entrant edges and may refer to a variable declared later in the text.
/// Quoted strings, numbers, `-` and `+` are constants.
pub fn parse_penman(text: &str) -> Result<AmrGraph, ParseError> {
    let tokens = lex::tokenize(text)?;
    let Some(first) = tokens.first() else {
        return Err(ParseError::EmptyInput { offset: text.len() });
    };
    if first.kind == Kind::Close {
        return Err(ParseError::UnbalancedParentheses {
            offset: first.offset,
        });
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        nodes: Vec::new(),
        declared: HashSet::new(),
        edges: Vec::new(),
        references: Vec::new(),
    };
    let root = parser.node(None, 0)?;
    if let Some(extra) = parser.peek() {
        return Err(match extra.kind {
            Kind::Close => ParseError::UnbalancedParentheses {
                offset: extra.offset,
            },
            _ => ParseError::TrailingInput {
                offset: extra.offset,
            },
        });
    }
    if let Some((var, offset)) = parser
        .references
        .iter()
        .find(|(v, _)| !parser.declared.contains(v))
    {
        return Err(ParseError::UndeclaredVariableReference {
            variable: var.0.clone(),
            offset: *offset,
        });
    }
    Ok(AmrGraph::from_parts(root, parser.nodes, parser.edges))
}

/// Writes the graph as canonical single-line PENMAN.
pub fn serialize_penman(graph: &AmrGraph) -> String {
    let mut out = String::new();
    write_node(graph, &graph.root, &mut out, &mut HashSet::new());
    out
}

fn write_node(graph: &AmrGraph, var: &Variable, out: &mut String, seen: &mut HashSet<Variable>) {
    seen.insert(var.clone());
    out.push('(');
    out.push_str(var.as_str());
    out.push_str(" / ");
    if let Some(c) = graph.concept(var) {
        out.push_str(c.as_str());
    }
    for edge in graph.outgoing(var) {
        out.push(' ');
        out.push_str(&edge.role);
        out.push(' ');
        match &edge.target {
            Target::Variable(v) if edge.tree && !seen.contains(v) => {
                write_node(graph, v, out, seen)
            }
            target => out.push_str(&target.to_string()),
        }
    }
    out.push(')');
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Diagnostic {
    RootNotDeclared(Variable),
    DuplicateVariable(Variable),
    InvalidVariableName(Variable),
    EmptyConcept(Variable),
    InvalidRole {
        source: Variable,
        role: String,
    },
    /// An edge leaves a variable that has no node.
    DanglingEdgeSource(Variable),
    UndeclaredVariableReference(Variable),
    TreeEdgeToConstant {
        source: Variable,
        role: String,
    },
    /// Not reachable from the root along any edge.
    UnreachableNode(Variable),
    /// Reachable, but no tree edge introduces it.
    MissingTreeEdge(Variable),
    MultipleTreeEdges(Variable),
    RootHasTreeEdge(Variable),
    /// Reachable through edges but not through tree edges (tree edges form a cycle).
    TreeCycle(Variable),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::RootNotDeclared(v) => write!(f, "root `{v}` is not a declared node"),
            Diagnostic::DuplicateVariable(v) => write!(f, "variable `{v}` declared more than once"),
            Diagnostic::InvalidVariableName(v) => write!(f, "invalid variable name `{v}`"),
            Diagnostic::EmptyConcept(v) => write!(f, "node `{v}` has an empty concept"),
            Diagnostic::InvalidRole { source, role } => {
                write!(f, "edge from `{source}` has invalid role `{role}`")
            }
            Diagnostic::DanglingEdgeSource(v) => {
                write!(f, "edge source `{v}` is not a declared node")
            }
            Diagnostic::UndeclaredVariableReference(v) => {
                write!(f, "edge targets undeclared variable `{v}`")
            }
            Diagnostic::TreeEdgeToConstant { source, role } => {
                write!(f, "tree edge `{role}` from `{source}` points at a constant")
            }
            Diagnostic::UnreachableNode(v) => write!(f, "node `{v}` is unreachable from the root"),
            Diagnostic::MissingTreeEdge(v) => write!(f, "node `{v}` has no introducing tree edge"),
            Diagnostic::MultipleTreeEdges(v) => write!(f, "node `{v}` has more than one tree edge"),
            Diagnostic::RootHasTreeEdge(v) => write!(f, "root `{v}` has an incoming tree edge"),
            Diagnostic::TreeCycle(v) => write!(f, "node `{v}` lies on a tree-edge cycle"),
        }
    }
}

/// Checks every graph invariant. Returns an empty list for a valid graph.
pub fn validate(graph: &AmrGraph) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (var, concept) in &graph.nodes {
        if !seen.insert(var) {
            out.push(Diagnostic::DuplicateVariable(var.clone()));
        }
        if !Variable::is_valid_name(var.as_str()) {
            out.push(Diagnostic::InvalidVariableName(var.clone()));
        }
        if concept.as_str().is_empty() {
            out.push(Diagnostic::EmptyConcept(var.clone()));
        }
    }
    if !graph.contains(&graph.root) {
        out.push(Diagnostic::RootNotDeclared(graph.root.clone()));
    }

    let mut tree_in: HashMap<&Variable, usize> = HashMap::new();
    for edge in &graph.edges {
        if !is_valid_role(&edge.role) {
            out.push(Diagnostic::InvalidRole {
                source: edge.source.clone(),
                role: edge.role.clone(),
            });
        }
        if !graph.contains(&edge.source) {
            out.push(Diagnostic::DanglingEdgeSource(edge.source.clone()));
        }
        match &edge.target {
            Target::Variable(v) => {
                if !graph.contains(v) {
                    out.push(Diagnostic::UndeclaredVariableReference(v.clone()));
                } else if edge.tree {
                    *tree_in.entry(v).or_default() += 1;
                }
            }
            Target::Constant(_) if edge.tree => out.push(Diagnostic::TreeEdgeToConstant {
                source: edge.source.clone(),
                role: edge.role.clone(),
            }),
            Target::Constant(_) => {}
        }
    }

    let reach_all = reachable(graph, false);
    let reach_tree = reachable(graph, true);
    let mut reported = HashSet::new();
    for (var, _) in &graph.nodes {
        if !reported.insert(var) {
            continue;
        }
        let count = tree_in.get(var).copied().unwrap_or(0);
        if *var == graph.root {
            if count > 0 {
                out.push(Diagnostic::RootHasTreeEdge(var.clone()));
            }
            continue;
        }
        if !reach_all.contains(var) {
            out.push(Diagnostic::UnreachableNode(var.clone()));
        } else if count == 0 {
            out.push(Diagnostic::MissingTreeEdge(var.clone()));
        } else if count > 1 {
            out.push(Diagnostic::MultipleTreeEdges(var.clone()));
        } else if !reach_tree.contains(var) {
            out.push(Diagnostic::TreeCycle(var.clone()));
        }
    }
    out
}

fn reachable(graph: &AmrGraph, tree_only: bool) -> HashSet<&Variable> {
    let mut seen = HashSet::new();
    if !graph.contains(&graph.root) {
        return seen;
    }
    let mut queue = VecDeque::from([&graph.root]);
    seen.insert(&graph.root);
    while let Some(v) = queue.pop_front() {
        for edge in graph.outgoing(v) {
            if tree_only && !edge.tree {
                continue;
            }
            if let Target::Variable(t) = &edge.target {
                if graph.contains(t) && seen.insert(t) {
                    queue.push_back(t);
                }
            }
        }
    }
    seen
}

/// One blank-line-separated block of a PENMAN file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PenmanBlock {
    /// `::key value` pairs from `#` comment lines, in order.
    pub metadata: Vec<(String, String)>,
    /// The graph text with comment lines removed.
    pub graph: String,
    /// 1-based line number where the block starts.
    pub line: usize,
}

impl PenmanBlock {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// The `::id` value, if any.
    pub fn id(&self) -> Option<&str> {
        self.get("id")
    }

    /// The `::snt` value (the sentence the graph was parsed from), if any.
    pub fn sentence(&self) -> Option<&str> {
        self.get("snt")
    }

    pub fn parse(&self) -> Result<AmrGraph, ParseError> {
        parse_penman(&self.graph)
    }
}

fn parse_metadata(comment: &str, into: &mut Vec<(String, String)>) {
    let mut parts = comment.split("::").skip(1);
    for part in parts.by_ref() {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, value) = part.split_once(char::is_whitespace).unwrap_or((part, ""));
        into.push((key.to_string(), value.trim().to_string()));
    }
}

/// Splits PENMAN file contents into blocks. Blocks holding only comments are skipped.
pub fn read_penman_blocks(text: &str) -> Vec<PenmanBlock> {
    let mut blocks = Vec::new();
    let mut current: Option<PenmanBlock> = None;
    let flush = |block: Option<PenmanBlock>, blocks: &mut Vec<PenmanBlock>| {
        if let Some(mut b) = block {
            if !b.graph.trim().is_empty() {
                b.graph = b.graph.trim().to_string();
                blocks.push(b);
            }
        }
    };
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(current.take(), &mut blocks);
            continue;
        }
        let block = current.get_or_insert_with(|| PenmanBlock {
            metadata: Vec::new(),
            graph: String::new(),
            line: i + 1,
        });
        if let Some(comment) = trimmed.strip_prefix('#') {
            parse_metadata(comment, &mut block.metadata);
        } else {
            if !block.graph.is_empty() {
                block.graph.push('\n');
            }
            block.graph.push_str(line);
        }
    }
    flush(current, &mut blocks);
    blocks
}
