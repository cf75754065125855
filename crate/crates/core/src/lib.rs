//! Co-citation novelty and conventionality analysis.
//!
//! Journal-pair co-citation frequencies of a corpus are compared against
//! Monte Carlo null models that shuffle citations within reference-year
//! groups. The resulting z-scores classify publications by novelty and
//! conventionality, hit rates are tested per class, and divergence and
//! composition diagnostics measure how well a null model fits.

pub mod classify;
pub mod cocite;
pub mod config;
pub mod corpus;
pub mod diverge;
pub mod error;
pub mod impact;
pub mod ingest;
pub mod manifest;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod shuffle;
pub mod simulate;
pub mod synth;

pub use classify::{Category, ClassifyConfig, NoveltyPercentile, PubSummary};
pub use cocite::{JournalPair, JournalPairTable};
pub use config::RunConfig;
pub use corpus::{Background, Catalog, Corpus, CorpusSummary, Publication, ReferenceRecord};
pub use error::{Error, Result};
pub use impact::{HitConfig, HitReport};
pub use shuffle::{Algorithm, GroupSet, PermutationGroup, ShuffleOutcome};
pub use simulate::{PairMoments, PairStats, SimConfig, SimulationResult};
pub use synth::{SynthConfig, SynthCorpus};
