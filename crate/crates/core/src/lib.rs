//! Mass compilation of JVM-language source corpora.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] discovers projects under a corpus root.
//! * [`jarstore`] harvests the archives bundled with those projects into a
//!   deduplicated, sharded central store.
//! * [`fqnindex`] builds an inverted index from fully-qualified type names
//!   (and their prefixes) to the archives that contain them.
//! * [`buildkit`] renders build plans and drives a compiler adapter.
//! * [`diagnostics`] turns raw compiler output into classified diagnostics.
//! * [`resolver`] repairs failed builds: encoding detection plus greedy
//!   maximum-cover selection of archives for missing packages.
//! * [`pipeline`] runs the two compile rounds per project over a worker pool.
//! * [`report`] computes success splits, error tables and binned
//!   success-ratio correlations.
//!
//! Statistics in [`report`] are generic over the floating-point type; the
//! `*F64` aliases below are what the command-line driver uses.

pub mod buildkit;
pub mod corpus;
pub mod diagnostics;
pub mod fqnindex;
pub mod jarstore;
pub mod num;
pub mod pipeline;
pub mod report;
pub mod resolver;
pub(crate) mod tsv;

pub use buildkit::{BuildPlan, CompileResult, CompileStatus, CompilerAdapter, FakeCompiler, JavacCompiler};
pub use corpus::{NativeBuild, ProjectRecord, ScanSummary};
pub use diagnostics::{Category, Diagnostic, PatternTable};
pub use fqnindex::{FqnIndex, FqnKey};
pub use jarstore::{JarEntry, JarId, SignatureStatus};
pub use num::Real;
pub use pipeline::{BuildOutcome, OutcomeStatus, PipelineOptions};
pub use resolver::{ResolutionPlan, Source};

/// Binned success ratios in double precision.
pub type BinF64 = report::Bin<f64>;
/// Binning result in double precision.
pub type BinningF64 = report::Binning<f64>;
/// Corpus statistics in double precision.
pub type CorpusStatsF64 = report::CorpusStats<f64>;
/// Pearson correlation result in double precision.
pub type CorrelationF64 = report::Correlation<f64>;
/// Binned success ratios in single precision.
pub type BinF32 = report::Bin<f32>;
