//! Static consistency auditing for mini-app packages: data practices
//! derived from program code are compared with those stated in the
//! privacy policy.

pub mod consistency;
pub mod ddg;
pub mod diag;
pub mod ingest;
pub mod js;
pub mod lexicon;
pub mod pipeline;
pub mod policy;
pub mod scalar;
pub mod scope;
pub mod taint;
pub mod text;

pub use consistency::{compare, compare_projections, ConsistencyResult, Pattern, Strength};
pub use diag::{Diagnostic, Stage};
pub use lexicon::{DataPractice, Lexicons, Operation};
pub use pipeline::{analyze_app, analyze_corpus, AppReport, CorpusSummary, PipelineError};
pub use scalar::Scalar;

pub type Analyzer64 = pipeline::Analyzer<f64>;
pub type Analyzer32 = pipeline::Analyzer<f32>;
pub type PolicyEngine64 = policy::PolicyEngine<f64>;
pub type Mlp64 = policy::Mlp<f64>;
pub type Mlp32 = policy::Mlp<f32>;
pub type Classifier64 = policy::Classifier<f64>;
pub type Similarity64 = policy::SimilarityConfig<f64>;
