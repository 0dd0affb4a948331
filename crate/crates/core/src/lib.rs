//! Static detection of injected code inside function implementations.
//!
//! Every implementation of a function type (all `get` functions, all `log`
//! functions, ...) is parsed into an AST, turned into a bag of leaf-to-leaf
//! AST paths, and embedded as a fixed-dimension vector. Vectors of one type
//! are clustered with DBSCAN; points left as noise are ranked by their
//! distance to the nearest cluster border point. ECOD scoring is available
//! as a baseline.
//!
//! The crate also ships an injection-campaign simulator and the evaluation
//! harness (precision@k, AP, TPR, cross-validated parameter tuning,
//! Spearman correlation and 2-D PCA projections).

pub mod astpath;
pub mod config;
pub mod corpus;
pub mod detect;
pub mod embed;
pub mod eval;
pub mod inject;
pub mod io;
pub mod pipeline;
pub mod synth;

pub use astpath::{extract_ast_paths, parse_function, serialize_path, AstNode, AstPath, NodeKind};
pub use corpus::{
    load_corpus, normalize_source, top_k_function_types, CorpusFormat, CorpusIndex, FunctionRecord, Label, SkipEntry,
    SkipReport,
};
pub use detect::{
    dbscan, detect_function_type, ecod_scores, rank_outliers, AnomalyRanking, ClusteringResult, DetectParams, Method,
    Role,
};
pub use embed::{embed_hashed, import_embeddings, pairwise_distance, EmbeddingVector};
pub use inject::{
    inject_function, make_payload, simulate_campaign, AttackType, CampaignConfig, PayloadSpec, Placement,
};

/// Version stamp written next to every run artifact.
pub const TOOL_VERSION: &str = concat!("injdetect ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("corpus: {0}")]
    Corpus(#[from] corpus::CorpusError),
    #[error("astpath: {0}")]
    Parse(#[from] astpath::ParseError),
    #[error("embed: {0}")]
    Embed(#[from] embed::EmbedError),
    #[error("inject: {0}")]
    Inject(#[from] inject::InjectError),
    #[error("detect: {0}")]
    Detect(#[from] detect::DetectError),
    #[error("eval: {0}")]
    Eval(#[from] eval::EvalError),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
