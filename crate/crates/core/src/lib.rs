//! Maximum-entropy marginal estimation, divergence-based feature ranking and
//! naive-Bayes classification.
//!
//! Each feature is modelled per class by the maximum-entropy density that
//! matches a few empirical moments. Features are ranked by the Jeffreys
//! divergence between those marginals (two classes), by its prior-weighted
//! one-vs-all average, or by the geometric-mean Jensen–Shannon divergence
//! (many classes), and the top K feed a naive-Bayes decision rule.

pub mod classifier;
pub mod data;
pub mod divergence;
pub mod error;
pub mod harness;
pub mod maxent;
pub mod selection;
pub mod synthetic;

pub use classifier::{fit, ClassifierConfig, Method, NaiveBayesModel};
pub use data::{Corpus, Dataset, Document, Features, LabelMap, Row, SparseRow, Vocabulary};
pub use divergence::{DiscreteDistribution, WeightVector};
pub use error::{ErrorKind, MemdError, Result};
pub use harness::{
    cross_validate, DataSource, ExperimentConfig, ExperimentReport, FoldPlan, KSelection,
};
pub use maxent::{FeatureFunctionSpec, FitOptions, MaxEntDensity, MomentVector, SupportSpec};
pub use selection::{MarginalGrid, RankedFeatures, RankingMethod};
