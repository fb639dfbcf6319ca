//! Corpus-level statistics: correlations, random-forest importance and
//! checkpoint leading-indicator fits.

pub mod corpus;
pub mod correlation;
pub mod forest;
pub mod leading;

pub use corpus::{
    corpus_analysis, corpus_importance, AccuracyUnit, Corpus, CorrelationReport, ImportanceReport, MetricCorrelation,
    ModelRecord, Target,
};
pub use correlation::{correlation_pvalue, partial_correlation, partial_from_pairwise, pearson, pearson_pvalue};
pub use forest::{rf_fit, rf_importance, ForestModel, ForestParams};
pub use leading::{leading_indicator, series_from_path, series_from_reader, Checkpoint, EpochFit, ModelSeries};
