//! The `amrsg` command line.
//!
//! Exit codes: 0 on success, 1 on configuration or fatal input errors, 2 when
//! some records failed but the rest were processed.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::amr::{read_penman_blocks, PenmanBlock};
use crate::convert::{convert_rules, export_training_pairs, ExternalAdapter, RuleConfig};
use crate::corpus::{
    corpus_stats, filter_ungrounded, import_visual_genome, load_records, parse_json_lines,
    read_file, CorpusError,
};
use crate::eval::evaluate_corpus;
use crate::linearize::{linearize, Strategy};
use crate::retrieval::{aggregate_metrics, rank_all, IndexedImage, Query, RetrievalIndex};
use crate::scene_graph::{parse_sg_text, serialize_sg, SceneGraph};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FATAL: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

/// Environment variable holding the default `--adapter` command.
pub const ADAPTER_ENV: &str = "AMRSG_ADAPTER";

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (scene-graph grammar v1, training-pair format v1)"
);

#[derive(Debug, Parser)]
#[command(name = "amrsg", version = VERSION, about = "AMR linearization, AMR-to-scene-graph conversion and scene-graph evaluation")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Linearize every graph of a PENMAN file, one per line.
    Linearize(LinearizeArgs),
    /// Convert every graph of a PENMAN file into a scene graph.
    Convert(ConvertArgs),
    /// Score generated scene graphs against references.
    Eval(EvalArgs),
    /// Rank images for scene-graph queries and report Recall@k and median rank.
    Retrieve(RetrieveArgs),
    /// Write seq2seq training pairs from a region-record corpus.
    Export(ExportArgs),
    /// Drop ground-truth tuples not grounded in the region description.
    Filter(CorpusArgs),
    /// Print corpus statistics as JSON.
    Stats(CorpusArgs),
    /// Convert Visual Genome region-graph JSON into region records.
    ImportVg(ImportVgArgs),
    /// Answer adapter requests on standard input with the rule-based
    /// converter: a deterministic stand-in model that accepts DFS input.
    ServeRules,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Dfs,
    Bfs,
    Inorder,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Dfs => Strategy::Dfs,
            StrategyArg::Bfs => Strategy::Bfs,
            StrategyArg::Inorder => Strategy::InOrder,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LinearEmit {
    /// The joined linearization.
    Text,
    /// Tab-separated model tokens.
    Tokens,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphEmit {
    /// One target string per line.
    Text,
    /// `{"region_id": ..., "target": ...}` per line.
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Rules,
    External,
}

#[derive(Debug, Args)]
struct Output {
    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LinearizeArgs {
    /// PENMAN file, one graph per blank-line-separated block.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "dfs")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "text")]
    emit: LinearEmit,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "rules")]
    engine: Engine,
    /// Model command for the external engine.
    #[arg(long, env = ADAPTER_ENV)]
    adapter: Option<String>,
    /// Seconds to wait for each model response.
    #[arg(long, default_value_t = 30.0)]
    timeout: f64,
    /// Linearization sent to the external model.
    #[arg(long, value_enum, default_value = "dfs")]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value = "text")]
    emit: GraphEmit,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// JSONL with `region_id` and `scene_graph` or `target` per line.
    #[arg(long)]
    generated: PathBuf,
    /// JSONL in the same form (region-record files qualify).
    #[arg(long)]
    reference: PathBuf,
    /// Emit one JSON line per region before the summary.
    #[arg(long)]
    per_region: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    /// JSONL, one `{"image_id": ..., "regions": [scene graphs]}` per line.
    #[arg(long)]
    index: PathBuf,
    /// JSONL queries: `query_id` (or `region_id`), `scene_graph` or `target`,
    /// and `gold_image_id` (or `image_id`) unless given by `--gold`.
    #[arg(long)]
    queries: PathBuf,
    /// Tab-separated `query_id<TAB>image_id` lines overriding the gold image.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Recall cutoffs.
    #[arg(long, value_delimiter = ',', default_value = "5,10")]
    k: Vec<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Region-record JSONL with `amr` fields.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "dfs")]
    strategy: StrategyArg,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ImportVgArgs {
    /// Visual Genome `region_graphs.json`.
    #[arg(long, short)]
    input: PathBuf,
    /// File of image ids to keep, one per line.
    #[arg(long)]
    split: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

/// A fatal error: message for standard error, exit code 1.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

type CmdResult = Result<i32, Fatal>;

struct Ctx<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn sink(&mut self, output: &Output) -> Result<Box<dyn Write + '_>, Fatal> {
        Ok(match &output.out {
            Some(path) => {
                Box::new(BufWriter::new(File::create(path).map_err(|e| {
                    Fatal(format!("cannot create {}: {e}", path.display()))
                })?))
            }
            None => Box::new(&mut *self.stdout),
        })
    }

    fn warn(&mut self, msg: impl std::fmt::Display) {
        let _ = writeln!(self.stderr, "warning: {msg}");
    }
}

fn require_file(path: &Path) -> Result<(), Fatal> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Fatal(format!("input not found: {}", path.display())))
    }
}

fn read_blocks(path: &Path) -> Result<Vec<PenmanBlock>, Fatal> {
    require_file(path)?;
    Ok(read_penman_blocks(&read_file(path)?))
}

fn block_id(block: &PenmanBlock, index: usize) -> String {
    block
        .id()
        .map_or_else(|| (index + 1).to_string(), str::to_string)
}

fn cmd_linearize(ctx: &mut Ctx<'_>, args: &LinearizeArgs) -> CmdResult {
    let blocks = read_blocks(&args.input)?;
    let strategy = Strategy::from(args.strategy);
    let results: Vec<_> = blocks
        .par_iter()
        .map(|b| b.parse().map(|g| linearize(&g, strategy)))
        .collect();
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    for (i, (block, result)) in blocks.iter().zip(results).enumerate() {
        match result {
            Ok(seq) => lines.push(match args.emit {
                LinearEmit::Text => seq.text,
                LinearEmit::Tokens => seq.tokens.join("\t"),
            }),
            Err(e) => failures.push(format!(
                "graph {} (line {}): {e}",
                block_id(block, i),
                block.line
            )),
        }
    }
    let mut out = ctx.sink(&args.output)?;
    for line in &lines {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    drop(out);
    for f in &failures {
        ctx.warn(f);
    }
    Ok(if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}

#[derive(Serialize)]
struct TargetLine<'a> {
    region_id: &'a str,
    target: String,
}

fn cmd_convert(ctx: &mut Ctx<'_>, args: &ConvertArgs) -> CmdResult {
    let mut adapter = match args.engine {
        Engine::Rules => None,
        Engine::External => {
            let Some(command) = args.adapter.as_deref().filter(|c| !c.trim().is_empty()) else {
                return Err(Fatal(format!(
                    "the external engine needs --adapter <cmd> or {ADAPTER_ENV}"
                )));
            };
            if !(args.timeout.is_finite() && args.timeout > 0.0) {
                return Err(Fatal(
                    "--timeout must be a positive number of seconds".into(),
                ));
            }
            Some(ExternalAdapter::from_command_line(
                command,
                Duration::from_secs_f64(args.timeout),
            )?)
        }
    };
    let blocks = read_blocks(&args.input)?;
    let strategy = Strategy::from(args.strategy);
    let config = RuleConfig::default();

    let results: Vec<Result<SceneGraph, String>> = match adapter.as_mut() {
        None => blocks
            .par_iter()
            .map(|b| {
                b.parse()
                    .map(|g| convert_rules(&g, &config))
                    .map_err(|e| e.to_string())
            })
            .collect(),
        Some(adapter) => blocks
            .iter()
            .map(|b| {
                let graph = b.parse().map_err(|e| e.to_string())?;
                adapter
                    .convert(&linearize(&graph, strategy))
                    .map_err(|e| e.to_string())
            })
            .collect(),
    };

    let mut out = ctx.sink(&args.output)?;
    let mut failures = Vec::new();
    for (i, (block, result)) in blocks.iter().zip(results).enumerate() {
        let id = block_id(block, i);
        match result {
            Ok(sg) => match args.emit {
                GraphEmit::Text => writeln!(out, "{}", serialize_sg(&sg))?,
                GraphEmit::Jsonl => writeln!(
                    out,
                    "{}",
                    serde_json::to_string(&TargetLine {
                        region_id: &id,
                        target: serialize_sg(&sg),
                    })?
                )?,
            },
            Err(e) => failures.push(format!("graph {id} (line {}): {e}", block.line)),
        }
    }
    out.flush()?;
    drop(out);
    for f in &failures {
        ctx.warn(f);
    }
    Ok(if failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_PARTIAL
    })
}

/// A scene graph keyed by region, from either JSON or the target grammar.
#[derive(Deserialize)]
struct GraphLine {
    #[serde(alias = "query_id")]
    region_id: serde_json::Value,
    #[serde(default)]
    scene_graph: Option<SceneGraph>,
    #[serde(default)]
    target: Option<String>,
}

fn id_text(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) if !s.is_empty() => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

impl GraphLine {
    fn resolve(&self) -> Result<(String, SceneGraph), String> {
        let id =
            id_text(&self.region_id).ok_or("region_id must be a non-empty string or number")?;
        let graph = match (&self.scene_graph, &self.target) {
            (Some(sg), _) => sg.clone(),
            (None, Some(t)) => parse_sg_text(t).map_err(|e| e.to_string())?,
            (None, None) => return Err("line has neither scene_graph nor target".into()),
        };
        Ok((id, graph))
    }
}

fn load_graph_lines(path: &Path) -> Result<Vec<(String, SceneGraph)>, Fatal> {
    let text = read_file(path)?;
    let (lines, errors) = parse_json_lines::<GraphLine, _>(&text, |l| l.resolve().map(|_| ()));
    if let Some(e) = errors.first() {
        return Err(Fatal(format!(
            "{}:{}: {}",
            path.display(),
            e.line,
            e.message
        )));
    }
    Ok(lines
        .iter()
        .map(|l| l.resolve().expect("checked"))
        .collect())
}

fn cmd_eval(ctx: &mut Ctx<'_>, args: &EvalArgs) -> CmdResult {
    require_file(&args.generated)?;
    require_file(&args.reference)?;
    let generated = load_graph_lines(&args.generated)?;
    let reference = load_graph_lines(&args.reference)?;

    let mut refs: HashMap<&str, &SceneGraph> = HashMap::new();
    for (id, sg) in &reference {
        if refs.insert(id, sg).is_some() {
            return Err(Fatal(format!("duplicate region id `{id}` in reference")));
        }
    }
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    let mut missing = BTreeSet::new();
    for (id, sg) in &generated {
        if !seen.insert(id.as_str()) {
            return Err(Fatal(format!("duplicate region id `{id}` in generated")));
        }
        match refs.get(id.as_str()) {
            Some(r) => pairs.push((id.clone(), sg.clone(), (*r).clone())),
            None => {
                missing.insert(id.as_str());
            }
        }
    }
    let unmatched_refs: BTreeSet<&str> = refs
        .keys()
        .copied()
        .filter(|id| !seen.contains(id))
        .collect();
    if !missing.is_empty() || !unmatched_refs.is_empty() {
        let mut msg = String::from("region ids are not aligned");
        if !missing.is_empty() {
            msg += &format!(
                "; only in generated: {}",
                missing.into_iter().collect::<Vec<_>>().join(", ")
            );
        }
        if !unmatched_refs.is_empty() {
            msg += &format!(
                "; only in reference: {}",
                unmatched_refs.into_iter().collect::<Vec<_>>().join(", ")
            );
        }
        return Err(Fatal(msg));
    }

    let report = evaluate_corpus(&pairs)?;
    let mut out = ctx.sink(&args.output)?;
    if args.per_region {
        for region in &report.per_region {
            let r = &region.report;
            writeln!(
                out,
                "{}",
                json!({
                    "region_id": region.region_id,
                    "precision": r.precision,
                    "recall": r.recall,
                    "f1": r.f1,
                    "matched": r.matches.len(),
                    "generated": r.generated_size,
                    "reference": r.reference_size,
                })
            )?;
        }
    }
    writeln!(
        out,
        "{}",
        json!({"mean_f1": report.mean_f1, "regions": report.region_count})
    )?;
    out.flush()?;
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
struct QueryLine {
    #[serde(flatten)]
    graph: GraphLine,
    #[serde(default, alias = "image_id")]
    gold_image_id: Option<serde_json::Value>,
}

fn cmd_retrieve(ctx: &mut Ctx<'_>, args: &RetrieveArgs) -> CmdResult {
    require_file(&args.index)?;
    require_file(&args.queries)?;
    if let Some(g) = &args.gold {
        require_file(g)?;
    }
    if args.k.is_empty() || args.k.contains(&0) {
        return Err(Fatal("--k needs positive cutoffs".into()));
    }

    let (images, errors) =
        parse_json_lines::<IndexedImage, _>(&read_file(&args.index)?, |_| Ok(()));
    if let Some(e) = errors.first() {
        return Err(Fatal(format!(
            "{}:{}: {}",
            args.index.display(),
            e.line,
            e.message
        )));
    }
    let index = RetrievalIndex::new(images)?;

    let gold_map: HashMap<String, String> = match &args.gold {
        Some(path) => read_file(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_once('\t')
                    .map(|(q, g)| (q.trim().to_string(), g.trim().to_string()))
                    .ok_or_else(|| {
                        Fatal(format!(
                            "{}: expected `query<TAB>image`: {l}",
                            path.display()
                        ))
                    })
            })
            .collect::<Result<_, _>>()?,
        None => HashMap::new(),
    };

    let (lines, errors) = parse_json_lines::<QueryLine, _>(&read_file(&args.queries)?, |q| {
        q.graph.resolve().map(|_| ())
    });
    if let Some(e) = errors.first() {
        return Err(Fatal(format!(
            "{}:{}: {}",
            args.queries.display(),
            e.line,
            e.message
        )));
    }
    if lines.is_empty() {
        return Err(Fatal("no queries".into()));
    }
    let mut queries = Vec::with_capacity(lines.len());
    for line in &lines {
        let (query_id, scene_graph) = line.graph.resolve().expect("checked");
        let gold = gold_map
            .get(&query_id)
            .cloned()
            .or_else(|| line.gold_image_id.as_ref().and_then(id_text))
            .ok_or_else(|| Fatal(format!("query `{query_id}` has no gold image")))?;
        queries.push(Query {
            query_id,
            gold_image_id: gold,
            scene_graph,
        });
    }

    let results = rank_all(&queries, &index)?;
    let metrics = aggregate_metrics(&results, &args.k)?;
    let recall: serde_json::Map<String, serde_json::Value> = metrics
        .recall_at
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    let mut out = ctx.sink(&args.output)?;
    writeln!(
        out,
        "{}",
        json!({"recall_at": recall, "median_rank": metrics.median_rank, "queries": metrics.queries})
    )?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn load_corpus(ctx: &mut Ctx<'_>, path: &Path) -> Result<Vec<crate::corpus::RegionRecord>, Fatal> {
    let loaded = load_records(path).map_err(|e| match e {
        CorpusError::FileNotFound(p) => Fatal(format!("corpus not found: {}", p.display())),
        e => Fatal(e.to_string()),
    })?;
    for e in &loaded.errors {
        ctx.warn(format!("{}:{}: {}", path.display(), e.line, e.message));
    }
    Ok(loaded.records)
}

fn cmd_export(ctx: &mut Ctx<'_>, args: &ExportArgs) -> CmdResult {
    let records = load_corpus(ctx, &args.corpus)?;
    let export = export_training_pairs(&records, args.strategy.into());
    let mut out = ctx.sink(&args.output)?;
    for pair in &export.pairs {
        writeln!(out, "{}", serde_json::to_string(pair)?)?;
    }
    out.flush()?;
    drop(out);
    let _ = writeln!(
        ctx.stderr,
        "exported {} pairs, skipped {}",
        export.pairs.len(),
        export.skip_count()
    );
    Ok(EXIT_OK)
}

fn cmd_filter(ctx: &mut Ctx<'_>, args: &CorpusArgs) -> CmdResult {
    let records = load_corpus(ctx, &args.corpus)?;
    let mut out = ctx.sink(&args.output)?;
    for record in &records {
        writeln!(out, "{}", filter_ungrounded(record).to_json_line())?;
    }
    out.flush()?;
    Ok(EXIT_OK)
}

fn cmd_stats(ctx: &mut Ctx<'_>, args: &CorpusArgs) -> CmdResult {
    let records = load_corpus(ctx, &args.corpus)?;
    let stats = corpus_stats(&records);
    let mut out = ctx.sink(&args.output)?;
    writeln!(out, "{}", serde_json::to_string(&stats)?)?;
    out.flush()?;
    Ok(EXIT_OK)
}

fn cmd_import_vg(ctx: &mut Ctx<'_>, args: &ImportVgArgs) -> CmdResult {
    require_file(&args.input)?;
    let split: Option<HashSet<String>> = match &args.split {
        Some(path) => {
            require_file(path)?;
            Some(
                read_file(path)?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(str::to_string)
                    .collect(),
            )
        }
        None => None,
    };
    let records = import_visual_genome(&read_file(&args.input)?, split.as_ref())?;
    let mut out = ctx.sink(&args.output)?;
    for record in &records {
        writeln!(out, "{}", record.to_json_line())?;
    }
    out.flush()?;
    Ok(EXIT_OK)
}

fn cmd_serve_rules(ctx: &mut Ctx<'_>) -> CmdResult {
    let config = RuleConfig::default();
    let stdin = io::stdin();
    for line in stdin.lock().lines() {
        let line = line?;
        let reply = match crate::amr::parse_penman(&line) {
            Ok(graph) => serialize_sg(&convert_rules(&graph, &config)),
            Err(e) => {
                let _ = writeln!(ctx.stderr, "serve-rules: {e}");
                String::new()
            }
        };
        writeln!(ctx.stdout, "{reply}")?;
        ctx.stdout.flush()?;
    }
    Ok(EXIT_OK)
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Error,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("AMRSG_LOG")
        .try_init();
}

/// Runs the command line with explicit output streams and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FATAL } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    init_logging(cli.verbose);
    let mut ctx = Ctx { stdout, stderr };
    let result = match &cli.command {
        Command::Linearize(a) => cmd_linearize(&mut ctx, a),
        Command::Convert(a) => cmd_convert(&mut ctx, a),
        Command::Eval(a) => cmd_eval(&mut ctx, a),
        Command::Retrieve(a) => cmd_retrieve(&mut ctx, a),
        Command::Export(a) => cmd_export(&mut ctx, a),
        Command::Filter(a) => cmd_filter(&mut ctx, a),
        Command::Stats(a) => cmd_stats(&mut ctx, a),
        Command::ImportVg(a) => cmd_import_vg(&mut ctx, a),
        Command::ServeRules => cmd_serve_rules(&mut ctx),
    };
    match result {
        Ok(code) => code,
        Err(Fatal(msg)) => {
            let _ = writeln!(ctx.stderr, "error: {msg}");
            EXIT_FATAL
        }
    }
}

/// Entry point for the binary.
pub fn main() -> ! {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code)
}
