//! Naive-Bayes decision layer over the top-K ranked marginals.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Features, LabelMap};
use crate::divergence::WeightVector;
use crate::error::{MemdError, Result};
use crate::maxent::{FeatureFunctionSpec, FitOptions, SupportSpec};
use crate::selection::{rank, MarginalGrid, RankedFeatures, RankingMethod};

pub const MODEL_FORMAT: &str = "memd-model";
pub const MODEL_VERSION: u32 = 1;

/// Multi-class ranking strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// One-vs-all J divergence (binary J when there are two classes).
    MeMdJ,
    /// Geometric-mean Jensen–Shannon divergence.
    MeMdJs,
}

impl Method {
    pub fn ranking_for(self, classes: usize) -> RankingMethod {
        match self {
            Method::MeMdJ if classes == 2 => RankingMethod::BinaryJ,
            Method::MeMdJ => RankingMethod::OneVsAllJ,
            Method::MeMdJs => RankingMethod::JsGm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierConfig {
    pub spec: FeatureFunctionSpec,
    pub support: SupportSpec,
    pub fit: FitOptions,
    pub method: Method,
    /// Number of top-ranked features kept; `None` keeps all of them.
    pub k: Option<usize>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            spec: FeatureFunctionSpec::mean(),
            support: SupportSpec::HalfLineNonNegative,
            fit: FitOptions::default(),
            method: Method::MeMdJs,
            k: None,
        }
    }
}

/// Class priors plus the marginals of the selected features.
///
/// `grid` holds one row per entry of `selected`, in ranked order;
/// `selected` refers to columns of the training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    dim: usize,
    selected: Vec<usize>,
    grid: MarginalGrid,
    labels: LabelMap,
    feature_names: Vec<String>,
    ranking: RankedFeatures,
    fitted_marginals: usize,
    /// Training vocabulary of a text model, needed to vectorize new documents.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocabulary: Option<Vec<String>>,
}

/// Ranks the training features and keeps every marginal. Used by
/// [`fit`] and by K selection, which evaluates many prefixes of one ranking.
#[derive(Debug, Clone)]
pub struct RankedGrid {
    pub grid: MarginalGrid,
    pub ranking: RankedFeatures,
    pub fitted_marginals: usize,
}

impl RankedGrid {
    pub fn fit(train: &Dataset, config: &ClassifierConfig) -> Result<Self> {
        if train.is_empty() {
            return Err(MemdError::EmptyClass("training set is empty".into()));
        }
        let m = train.num_classes();
        if m < 2 {
            return Err(MemdError::InvalidConfig(format!(
                "need at least two classes, got {m}"
            )));
        }
        let method = config.method.ranking_for(m);
        let grid = MarginalGrid::fit(
            train,
            &config.spec,
            &config.support,
            &config.fit,
            method == RankingMethod::OneVsAllJ,
        )?;
        let ranking = rank(&grid, method)?;
        let fitted_marginals = grid.density_count();
        Ok(RankedGrid {
            grid: grid.without_complement(),
            ranking,
            fitted_marginals,
        })
    }

    /// Per-instance, per-class log-likelihood contributions of the ranked
    /// features, accumulated over ranking prefixes: `out[K-1][c]` is the log
    /// posterior using the top `K` features.
    pub fn prefix_log_posteriors<F: Features + ?Sized>(
        &self,
        x: &F,
        max_k: usize,
    ) -> Vec<Vec<f64>> {
        let log_priors: Vec<f64> = self
            .grid
            .priors()
            .as_slice()
            .iter()
            .map(|p| p.ln())
            .collect();
        let mut running = log_priors;
        let mut out = Vec::with_capacity(max_k);
        for &feature in self.ranking.top(max_k) {
            let value = x.value(feature);
            for (c, acc) in running.iter_mut().enumerate() {
                *acc += self.grid.marginal(feature, c).log_density(value);
            }
            out.push(running.clone());
        }
        out
    }

    pub fn into_model(self, train: &Dataset, k: usize) -> Result<NaiveBayesModel> {
        let d = self.grid.dim();
        if k == 0 || k > d {
            return Err(MemdError::InvalidK { k, d });
        }
        let selected = self.ranking.top(k).to_vec();
        Ok(NaiveBayesModel {
            dim: d,
            grid: self.grid.select(&selected),
            feature_names: selected
                .iter()
                .map(|&i| train.feature_names()[i].clone())
                .collect(),
            selected,
            labels: train.label_map().clone(),
            ranking: self.ranking,
            fitted_marginals: self.fitted_marginals,
            vocabulary: None,
        })
    }
}

/// Fits per-(feature, class) marginals, ranks features and keeps the top K.
pub fn fit(train: &Dataset, config: &ClassifierConfig) -> Result<NaiveBayesModel> {
    let k = config.k.unwrap_or(train.dim());
    if k == 0 || k > train.dim() {
        return Err(MemdError::InvalidK { k, d: train.dim() });
    }
    RankedGrid::fit(train, config)?.into_model(train, k)
}

impl NaiveBayesModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn grid(&self) -> &MarginalGrid {
        &self.grid
    }

    pub fn priors(&self) -> &WeightVector {
        self.grid.priors()
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.grid.num_classes()
    }

    /// Names of the selected features, aligned with [`Self::selected`].
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn ranking(&self) -> &RankedFeatures {
        &self.ranking
    }

    /// Densities estimated during training, complement models included.
    pub fn fitted_marginals(&self) -> usize {
        self.fitted_marginals
    }

    pub fn vocabulary(&self) -> Option<&[String]> {
        self.vocabulary.as_deref()
    }

    /// Attaches the vocabulary the training documents were vectorized with.
    pub fn with_vocabulary(mut self, words: Vec<String>) -> Result<Self> {
        if words.len() != self.dim {
            return Err(MemdError::Model(format!(
                "vocabulary has {} words for {} features",
                words.len(),
                self.dim
            )));
        }
        self.vocabulary = Some(words);
        Ok(self)
    }

    /// Assembles a model from parts; `grid` rows align with `selected`.
    pub fn from_parts(
        dim: usize,
        selected: Vec<usize>,
        grid: MarginalGrid,
        labels: LabelMap,
    ) -> Result<Self> {
        let model = NaiveBayesModel {
            dim,
            feature_names: selected.iter().map(|i| (i + 1).to_string()).collect(),
            ranking: RankedFeatures {
                order: selected.clone(),
                scores: vec![0.0; dim],
                method: RankingMethod::JsGm,
            },
            fitted_marginals: grid.density_count(),
            vocabulary: None,
            selected,
            grid,
            labels,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.dim];
        for &i in &self.selected {
            if i >= self.dim || std::mem::replace(&mut seen[i], true) {
                return Err(MemdError::Model(format!(
                    "selected feature {i} is out of range or repeated"
                )));
            }
        }
        if self.grid.dim() != self.selected.len() {
            return Err(MemdError::Model(format!(
                "{} marginal rows for {} selected features",
                self.grid.dim(),
                self.selected.len()
            )));
        }
        if self
            .vocabulary
            .as_ref()
            .is_some_and(|v| v.len() != self.dim)
        {
            return Err(MemdError::Model("vocabulary size differs from dim".into()));
        }
        if self.labels.len() != self.grid.num_classes() {
            return Err(MemdError::Model(format!(
                "{} labels for {} classes",
                self.labels.len(),
                self.grid.num_classes()
            )));
        }
        if self.priors().as_slice().iter().any(|&p| p <= 0.0) {
            return Err(MemdError::Model("class priors must be positive".into()));
        }
        Ok(())
    }

    /// `ln P(c_j) + Σ_{i ∈ selected} ln P_{c_j}^{(i)}(x_i)` for every class.
    pub fn log_posterior<F: Features + ?Sized>(&self, x: &F) -> Vec<f64> {
        let mut out: Vec<f64> = self.priors().as_slice().iter().map(|p| p.ln()).collect();
        for (row, &feature) in self.selected.iter().enumerate() {
            let value = x.value(feature);
            for (c, acc) in out.iter_mut().enumerate() {
                *acc += self.grid.marginal(row, c).log_density(value);
            }
        }
        out
    }

    /// Bayes decision: the class with the largest log posterior, lowest index
    /// on ties, priors alone when every class has zero likelihood.
    pub fn predict<F: Features + ?Sized>(&self, x: &F) -> usize {
        let scores = self.log_posterior(x);
        if scores.iter().all(|s| *s == f64::NEG_INFINITY) {
            return argmax(self.priors().as_slice());
        }
        argmax(&scores)
    }

    /// Two-class decision written as the multiplier inequality
    /// `Σ_i (λ₀_{i2} − λ₀_{i1} + Σ_k (λ_{k,i2} − λ_{k,i1}) φ_k(x_i)) > ln P(c₂) − ln P(c₁)`,
    /// which selects class 0 when it holds.
    pub fn binary_decision_lambda_form<F: Features + ?Sized>(&self, x: &F) -> Result<usize> {
        if self.num_classes() != 2 {
            return Err(MemdError::WrongArity {
                expected: 2,
                got: self.num_classes(),
            });
        }
        let priors = self.priors().as_slice();
        let threshold = priors[1].ln() - priors[0].ln();
        let mut lhs = 0.0;
        for (row, &feature) in self.selected.iter().enumerate() {
            let first = self.grid.marginal(row, 0);
            let second = self.grid.marginal(row, 1);
            let value = x.value(feature);
            if !first.support().contains(value) {
                // both classes share the support, so both likelihoods vanish
                return Ok(if threshold > 0.0 { 1 } else { 0 });
            }
            lhs += second.log_normalizer() - first.log_normalizer();
            for ((l2, l1), &order) in second
                .lambdas()
                .iter()
                .zip(first.lambdas())
                .zip(first.spec().orders())
            {
                lhs += (l2 - l1) * value.powi(order as i32);
            }
        }
        Ok(if lhs > threshold {
            0
        } else if lhs < threshold {
            1
        } else {
            0
        })
    }

    /// Fraction of `data` predicted correctly.
    pub fn accuracy(&self, data: &Dataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let correct = data
            .rows()
            .iter()
            .zip(data.labels())
            .filter(|(row, &label)| self.predict(*row) == label)
            .count();
        correct as f64 / data.len() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFileRef {
            format: MODEL_FORMAT,
            version: MODEL_VERSION,
            model: self,
        };
        serde_json::to_string_pretty(&file).map_err(|e| MemdError::Model(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| MemdError::Parse {
            line: e.line(),
            message: e.to_string(),
        })?;
        if file.format != MODEL_FORMAT {
            return Err(MemdError::Model(format!(
                "unknown format {:?}",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(MemdError::Model(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        file.model.validate()?;
        Ok(file.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Serialize)]
struct ModelFileRef<'a> {
    format: &'a str,
    version: u32,
    model: &'a NaiveBayesModel,
}

#[derive(Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: NaiveBayesModel,
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxent::{fit_exponential_halfline, MaxEntDensity, MomentVector};
    use approx::assert_abs_diff_eq;

    fn exp_rate(rate: f64) -> MaxEntDensity {
        fit_exponential_halfline(&MomentVector::new(vec![1.0 / rate], 1), 0.0).unwrap()
    }

    fn two_class_model(rates: (f64, f64), priors: Vec<f64>) -> NaiveBayesModel {
        let grid = MarginalGrid::new(
            vec![vec![exp_rate(rates.0), exp_rate(rates.1)]],
            None,
            WeightVector::new(priors).unwrap(),
        )
        .unwrap();
        NaiveBayesModel::from_parts(
            1,
            vec![0],
            grid,
            LabelMap::new(vec!["c1".into(), "c2".into()]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn log_posterior_examples() {
        let model = two_class_model((1.0, 2.0), vec![0.5, 0.5]);
        let half = 0.5f64.ln();
        let scores = model.log_posterior(&vec![1.0]);
        assert_abs_diff_eq!(scores[0], half - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(scores[1], half + 2f64.ln() - 2.0, epsilon = 1e-15);
        assert_eq!(model.predict(&vec![1.0]), 0);
        assert_eq!(model.binary_decision_lambda_form(&vec![1.0]).unwrap(), 0);
        assert_eq!(model.predict(&vec![0.2]), 1);
        assert_eq!(model.binary_decision_lambda_form(&vec![0.2]).unwrap(), 1);
    }

    #[test]
    fn identical_marginals_fall_back_to_priors() {
        let model = two_class_model((1.5, 1.5), vec![0.3, 0.7]);
        let scores = model.log_posterior(&vec![0.4]);
        assert_abs_diff_eq!(
            scores[1] - scores[0],
            0.7f64.ln() - 0.3f64.ln(),
            epsilon = 1e-14
        );
        assert_eq!(model.predict(&vec![0.4]), 1);

        let tie = two_class_model((1.5, 1.5), vec![0.5, 0.5]);
        assert_eq!(tie.predict(&vec![0.4]), 0);
        assert_eq!(tie.binary_decision_lambda_form(&vec![0.4]).unwrap(), 0);
    }

    #[test]
    fn out_of_support_uses_priors() {
        let model = two_class_model((1.0, 2.0), vec![0.4, 0.6]);
        let scores = model.log_posterior(&vec![-1.0]);
        assert!(scores.iter().all(|s| *s == f64::NEG_INFINITY));
        assert_eq!(model.predict(&vec![-1.0]), 1);
        assert_eq!(model.binary_decision_lambda_form(&vec![-1.0]).unwrap(), 1);
    }

    #[test]
    fn lambda_form_requires_two_classes() {
        let grid = MarginalGrid::new(
            vec![vec![exp_rate(1.0), exp_rate(2.0), exp_rate(3.0)]],
            None,
            WeightVector::uniform(3).unwrap(),
        )
        .unwrap();
        let labels = LabelMap::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let model = NaiveBayesModel::from_parts(1, vec![0], grid, labels).unwrap();
        assert!(matches!(
            model.binary_decision_lambda_form(&vec![1.0]),
            Err(MemdError::WrongArity { .. })
        ));
    }

    fn toy_data() -> Dataset {
        let labels = LabelMap::new(vec!["a".into(), "b".into()]).unwrap();
        let mut rows = Vec::new();
        let mut ys = Vec::new();
        for i in 0..40 {
            let class = usize::from(i >= 30);
            let t = i as f64 / 40.0;
            rows.push(vec![
                0.1 + 0.05 * t,
                if class == 0 { 0.1 + 0.1 * t } else { 2.0 + t },
                0.5 + 0.1 * (i % 3) as f64,
            ]);
            ys.push(class);
        }
        Dataset::from_dense(rows, ys, labels).unwrap()
    }

    #[test]
    fn fit_examples() {
        let data = toy_data();
        let config = ClassifierConfig {
            k: Some(3),
            ..ClassifierConfig::default()
        };
        let model = fit(&data, &config).unwrap();
        assert_eq!(model.priors().as_slice(), &[0.75, 0.25]);
        assert_eq!(model.selected(), model.ranking().order.as_slice());
        assert_eq!(model.selected()[0], 1);
        assert!(model.accuracy(&data) > 0.9);

        let too_many = ClassifierConfig {
            k: Some(4),
            ..config.clone()
        };
        assert!(matches!(
            fit(&data, &too_many),
            Err(MemdError::InvalidK { .. })
        ));
        let zero = ClassifierConfig {
            k: Some(0),
            ..config
        };
        assert!(matches!(fit(&data, &zero), Err(MemdError::InvalidK { .. })));
    }

    #[test]
    fn fit_rejects_empty_class() {
        let labels = LabelMap::new(vec!["a".into(), "b".into()]).unwrap();
        let data = Dataset::from_dense(vec![vec![1.0], vec![2.0]], vec![0, 0], labels).unwrap();
        assert!(matches!(
            fit(&data, &ClassifierConfig::default()),
            Err(MemdError::EmptyClass(_))
        ));
    }

    #[test]
    fn prefix_posteriors_match_models() {
        let data = toy_data();
        let ranked = RankedGrid::fit(&data, &ClassifierConfig::default()).unwrap();
        let x = data.row(5);
        let prefixes = ranked.prefix_log_posteriors(x, 3);
        for k in 1..=3 {
            let model = ranked.clone().into_model(&data, k).unwrap();
            assert_eq!(prefixes[k - 1], model.log_posterior(x));
        }
    }

    #[test]
    fn model_file_round_trip_is_exact() {
        let data = toy_data();
        let config = ClassifierConfig {
            k: Some(2),
            spec: FeatureFunctionSpec::mean_and_second(),
            support: SupportSpec::RealLine,
            ..ClassifierConfig::default()
        };
        let model = fit(&data, &config).unwrap();
        let text = model.to_json().unwrap();
        assert!(text.contains("\"format\": \"memd-model\""));
        let back = NaiveBayesModel::from_json(&text).unwrap();
        assert_eq!(back, model);
        for (a, b) in back
            .grid()
            .feature_marginals(0)
            .iter()
            .zip(model.grid().feature_marginals(0))
        {
            assert_eq!(a.log_normalizer().to_bits(), b.log_normalizer().to_bits());
            for (x, y) in a.lambdas().iter().zip(b.lambdas()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        let bad = text.replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(
            NaiveBayesModel::from_json(&bad),
            Err(MemdError::Model(_))
        ));
        assert!(matches!(
            NaiveBayesModel::from_json("{ not json"),
            Err(MemdError::Parse { .. })
        ));
    }
}
