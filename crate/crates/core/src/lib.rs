//! Non-neural machinery for scene graph parsing through Abstract Meaning
//! Representation.
//!
//! * [`amr`]: PENMAN parsing, serialization and validation of AMR graphs.
//! * [`linearize`]: DFS, BFS and in-order linearizations and their tokenizer.
//! * [`scene_graph`]: scene graphs as tuple multisets and their text/JSON forms.
//! * [`convert`]: rule-based AMR-to-scene-graph baseline, an external model
//!   adapter, and training-pair export.
//! * [`eval`]: SPICE-style F-score with one-to-one tuple matching.
//! * [`retrieval`]: image ranking by F-score similarity, Recall@k and median rank.
//! * [`corpus`]: region-record I/O, grounding filter, statistics, Visual Genome import.
//! * [`cli`]: the `amrsg` command line.
//!
//! ```
//! use amrsg::amr::parse_penman;
//! use amrsg::linearize::linearize_bfs;
//!
//! let graph = parse_penman("(z0 / stand-01 :ARG1 (z1 / retriever :mod (z2 / gold)) :ARG2 (z3 / snow))").unwrap();
//! assert_eq!(
//!     linearize_bfs(&graph).text,
//!     "(z0 / stand-01) :ARG1 (z1 / retriever) :ARG2 (z3 / snow) :mod (z2 / gold)"
//! );
//! ```

pub mod amr;
pub mod cli;
pub mod convert;
pub mod corpus;
pub mod eval;
pub mod linearize;
pub mod retrieval;
pub mod scene_graph;

pub use amr::{parse_penman, serialize_penman, validate, AmrGraph};
pub use convert::{convert_rules, export_training_pairs, ExternalAdapter, RuleConfig};
pub use eval::{evaluate_corpus, f_score, match_tuples, CorpusReport, EvalReport};
pub use linearize::{linearize, tokenize, LinearizedSequence, Strategy};
pub use retrieval::{aggregate_metrics, rank, score_image, RetrievalIndex};
pub use scene_graph::{parse_sg_text, serialize_sg, SceneGraph};
