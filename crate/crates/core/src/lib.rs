//! Corpus-to-bias attribution for GloVe embeddings.
//!
//! The pipeline: [`corpus`] ingests documents and builds a vocabulary,
//! [`cooc`] extracts the co-occurrence matrix and per-document deltas,
//! [`glove`] trains embeddings, [`metrics`] measures WEAT bias, and
//! [`influence`] estimates for every document how much removing it would
//! change that bias without retraining. [`bias_gradient`] gives the
//! first-order sensitivity of bias to each co-occurrence, [`ppmi`] is the
//! count-based baseline, and [`harness`] runs the retraining experiments
//! that check the estimates.

pub mod bias_gradient;
pub mod cooc;
pub mod corpus;
pub mod error;
pub mod glove;
pub mod harness;
pub mod influence;
pub mod linalg;
pub mod metrics;
pub mod ppmi;
pub mod synth;

pub use cooc::{CoocDelta, CoocMatrix, WordMask};
pub use corpus::{Corpus, Document, LoadOptions, RecordSeparator, Vocabulary};
pub use error::{Error, Result};
pub use glove::{GloveModel, Hyperparams};
pub use harness::{ExperimentReport, PerturbationSet, ProtocolConfig};
pub use influence::{DiffBiasRecord, InfluenceEngine, InfluenceOptions};
pub use metrics::{ResolvedWeat, WeatSpec};
