//! Cross-validation, K selection and experiment reports.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifier::{ClassifierConfig, Method, NaiveBayesModel, RankedGrid};
use crate::data::{build_vocabulary, Corpus, Dataset};
use crate::error::{MemdError, Result};
use crate::maxent::{FeatureFunctionSpec, FitOptions, SupportSpec};

/// Every K up to this bound is tried, then the grid grows geometrically.
pub const DENSE_K_LIMIT: usize = 200;
pub const K_GROWTH: f64 = 1.5;
/// Share of the training data used for ranking during K selection.
pub const RANKING_SHARE: f64 = 0.8;
pub const SPLIT_RETRIES: usize = 10;

/// Fold id of every instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Seeded random permutation cut into `k` folds whose sizes differ by at
/// most one (the first `n mod k` folds get the extra instance).
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(MemdError::InvalidFolds { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n];
    let (base, extra) = (n / k, n % k);
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &order[pos..pos + size] {
            assignments[i] = fold;
        }
        pos += size;
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// Like [`kfold_split`] but deals each class round-robin over the folds.
pub fn stratified_kfold_split(labels: &[usize], k: usize, seed: u64) -> Result<FoldPlan> {
    let n = labels.len();
    if k < 2 || k > n {
        return Err(MemdError::InvalidFolds { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut assignments = vec![0; n];
    let mut next = 0;
    for class in 0..classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSelection {
    Fixed(usize),
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub spec: FeatureFunctionSpec,
    pub support: SupportSpec,
    pub fit: FitOptions,
    /// Corpus frequency cut-off for the vocabulary.
    pub gamma: usize,
    pub stopwords: HashSet<String>,
    pub k: KSelection,
    pub folds: usize,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: Method::MeMdJs,
            spec: FeatureFunctionSpec::mean(),
            support: SupportSpec::HalfLineNonNegative,
            fit: FitOptions::default(),
            gamma: 2,
            stopwords: HashSet::new(),
            k: KSelection::Auto,
            folds: 10,
            seed: 0,
            stratified: false,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(MemdError::InvalidConfig(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        if self.gamma == 0 {
            return Err(MemdError::InvalidConfig("gamma must be at least 1".into()));
        }
        if self.k == KSelection::Fixed(0) {
            return Err(MemdError::InvalidConfig("K must be at least 1".into()));
        }
        self.support.validate(&self.spec)
    }

    pub fn classifier(&self, k: Option<usize>) -> ClassifierConfig {
        ClassifierConfig {
            spec: self.spec.clone(),
            support: self.support,
            fit: self.fit,
            method: self.method,
            k,
        }
    }
}

/// Input to an experiment: ready-made feature rows, or raw documents that
/// are vectorized per training split.
#[derive(Debug, Clone)]
pub enum DataSource {
    Table(Dataset),
    Corpus(Corpus),
}

impl DataSource {
    pub fn len(&self) -> usize {
        match self {
            DataSource::Table(d) => d.len(),
            DataSource::Corpus(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> &[usize] {
        match self {
            DataSource::Table(d) => d.labels(),
            DataSource::Corpus(c) => &c.labels,
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            DataSource::Table(d) => d.num_classes(),
            DataSource::Corpus(c) => c.label_map.len(),
        }
    }

    /// Feature count of the table, or of the vocabulary built on all
    /// documents.
    pub fn dim(&self, config: &ExperimentConfig) -> Result<usize> {
        match self {
            DataSource::Table(d) => Ok(d.dim()),
            DataSource::Corpus(c) => {
                Ok(build_vocabulary(&c.docs, &config.stopwords, config.gamma)?.len())
            }
        }
    }

    /// Training and test tables for one split. For a corpus the vocabulary
    /// comes from the training documents only.
    pub fn split(
        &self,
        train: &[usize],
        test: &[usize],
        config: &ExperimentConfig,
    ) -> Result<(Dataset, Dataset)> {
        match self {
            DataSource::Table(d) => Ok((d.subset(train), d.subset(test))),
            DataSource::Corpus(c) => {
                let train_docs = c.subset(train);
                let vocab = build_vocabulary(&train_docs.docs, &config.stopwords, config.gamma)?;
                let (train_data, flagged) = train_docs.vectorize(&vocab)?;
                if flagged > 0 {
                    log::debug!("{flagged} training documents have no vocabulary words");
                }
                let (test_data, _) = c.subset(test).vectorize(&vocab)?;
                Ok((train_data, test_data))
            }
        }
    }

    /// The whole source as one table.
    pub fn to_table(&self, config: &ExperimentConfig) -> Result<Dataset> {
        let all: Vec<usize> = (0..self.len()).collect();
        Ok(self.split(&all, &[], config)?.0)
    }
}

/// `1..=min(d, 200)`, then steps of ×1.5 (rounded up), always ending at `d`.
pub fn k_grid(d: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (1..=d.min(DENSE_K_LIMIT)).collect();
    let mut k = d.min(DENSE_K_LIMIT);
    while k < d {
        k = ((k as f64 * K_GROWTH).ceil() as usize).min(d);
        grid.push(k);
    }
    grid
}

/// Smallest K attaining the largest accuracy on an accuracy-vs-K curve.
pub fn select_k_from_curve(curve: &[(usize, f64)]) -> usize {
    let best = curve
        .iter()
        .map(|&(_, acc)| acc)
        .fold(f64::NEG_INFINITY, f64::max);
    curve
        .iter()
        .filter(|&&(_, acc)| acc == best)
        .map(|&(k, _)| k)
        .min()
        .unwrap_or(1)
}

/// Outcome of K selection.
#[derive(Debug, Clone, PartialEq)]
pub struct KChoice {
    pub k: usize,
    /// Validation accuracy for every K on the grid.
    pub curve: Vec<(usize, f64)>,
    /// Seed of the split that was finally used.
    pub split_seed: u64,
}

/// Picks K on a seeded 80/20 split of `train`: features are ranked on the
/// larger part and accuracy is measured on the smaller part for every K on
/// [`k_grid`].
pub fn choose_k(train: &Dataset, config: &ExperimentConfig, seed: u64) -> Result<usize> {
    choose_k_detailed(train, config, seed).map(|c| c.k)
}

pub fn choose_k_detailed(train: &Dataset, config: &ExperimentConfig, seed: u64) -> Result<KChoice> {
    let m = train.num_classes();
    let n = train.len();
    let cut = ((n as f64) * RANKING_SHARE).round() as usize;
    for attempt in 0..SPLIT_RETRIES {
        let split_seed = seed.wrapping_add(attempt as u64);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
        let (rank_idx, val_idx) = order.split_at(cut);
        let covers = |idx: &[usize]| {
            let mut seen = vec![false; m];
            idx.iter().for_each(|&i| seen[train.labels()[i]] = true);
            seen.iter().all(|&s| s)
        };
        if !covers(rank_idx) || !covers(val_idx) {
            continue;
        }
        let rank_part = train.subset(rank_idx);
        let val_part = train.subset(val_idx);
        let ranked = RankedGrid::fit(&rank_part, &config.classifier(None))?;
        let curve = validation_curve(&ranked, &val_part);
        return Ok(KChoice {
            k: select_k_from_curve(&curve),
            curve,
            split_seed,
        });
    }
    Err(MemdError::StratificationError {
        attempts: SPLIT_RETRIES,
    })
}

fn validation_curve(ranked: &RankedGrid, validation: &Dataset) -> Vec<(usize, f64)> {
    let grid = k_grid(ranked.grid.dim());
    let max_k = grid.last().copied().unwrap_or(0);
    let priors = ranked.grid.priors().as_slice();
    let mut correct = vec![0usize; grid.len()];
    let hits: Vec<Vec<bool>> = validation
        .rows()
        .par_iter()
        .zip(validation.labels().par_iter())
        .map(|(row, &label)| {
            let prefixes = ranked.prefix_log_posteriors(row, max_k);
            grid.iter()
                .map(|&k| decide(&prefixes[k - 1], priors) == label)
                .collect()
        })
        .collect();
    for row in hits {
        for (c, hit) in correct.iter_mut().zip(row) {
            *c += usize::from(hit);
        }
    }
    let n = validation.len().max(1) as f64;
    grid.iter()
        .zip(correct)
        .map(|(&k, c)| (k, c as f64 / n))
        .collect()
}

/// Same rule as [`NaiveBayesModel::predict`] on precomputed scores.
fn decide(scores: &[f64], priors: &[f64]) -> usize {
    let pick = |v: &[f64]| {
        let mut best = 0;
        for (i, x) in v.iter().enumerate().skip(1) {
            if *x > v[best] {
                best = i;
            }
        }
        best
    };
    if scores.iter().all(|s| *s == f64::NEG_INFINITY) {
        pick(priors)
    } else {
        pick(scores)
    }
}

/// Result of training on one split and testing on the held-out part.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub k: usize,
    pub accuracy: f64,
    /// Selected features as `(feature index, feature name, score)`, ranked.
    pub selected: Vec<(usize, String, f64)>,
    pub elapsed: Duration,
}

/// Trains on `train`, choosing K internally when configured, and scores
/// the model on `test`.
pub fn evaluate_split(
    data: &DataSource,
    train: &[usize],
    test: &[usize],
    config: &ExperimentConfig,
    fold: usize,
) -> Result<(FoldReport, NaiveBayesModel)> {
    let started = Instant::now();
    let (train_data, test_data) = data.split(train, test, config)?;
    let k = match config.k {
        KSelection::Fixed(k) => k,
        KSelection::Auto => choose_k(&train_data, config, fold_seed(config.seed, fold))?,
    };
    let model = crate::classifier::fit(&train_data, &config.classifier(Some(k)))?;
    let accuracy = model.accuracy(&test_data);
    let selected = model
        .selected()
        .iter()
        .zip(model.feature_names())
        .map(|(&i, name)| (i, name.clone(), model.ranking().scores[i]))
        .collect();
    let report = FoldReport {
        fold,
        n_train: train_data.len(),
        n_test: test_data.len(),
        k,
        accuracy,
        selected,
        elapsed: started.elapsed(),
    };
    Ok((report, model))
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(1 + fold as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub folds: Vec<FoldReport>,
    pub mean_accuracy: f64,
    pub n_instances: usize,
    pub n_classes: usize,
    pub plan: FoldPlan,
}

/// K-fold cross-validation; folds run in parallel and are reported in
/// fold order.
pub fn cross_validate(data: &DataSource, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let n = data.len();
    let mut counts = vec![0usize; data.num_classes()];
    data.labels().iter().for_each(|&l| counts[l] += 1);
    if let Some(c) = counts.iter().position(|&c| c < config.folds) {
        return Err(MemdError::InvalidConfig(format!(
            "class {c} has {} instances, fewer than {} folds",
            counts[c], config.folds
        )));
    }
    let plan = if config.stratified {
        stratified_kfold_split(data.labels(), config.folds, config.seed)?
    } else {
        kfold_split(n, config.folds, config.seed)?
    };
    let mut folds = (0..config.folds)
        .into_par_iter()
        .map(|fold| {
            evaluate_split(
                data,
                &plan.train_indices(fold),
                &plan.test_indices(fold),
                config,
                fold,
            )
            .map(|(report, _)| report)
            .map_err(|e| MemdError::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    folds.sort_by_key(|f| f.fold);
    let mean_accuracy = folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len() as f64;
    Ok(ExperimentReport {
        folds,
        mean_accuracy,
        n_instances: n,
        n_classes: data.num_classes(),
        plan,
    })
}

impl ExperimentReport {
    /// CSV sections introduced by `#` comment lines. Timings are left out
    /// unless asked for, so that reruns with one seed are byte-identical.
    pub fn render(&self, config: &ExperimentConfig, include_timings: bool) -> String {
        let mut out = String::new();
        let method = match config.method {
            Method::MeMdJ => "j",
            Method::MeMdJs => "js",
        };
        let orders: Vec<String> = config.spec.orders().iter().map(u32::to_string).collect();
        let support = match config.support {
            SupportSpec::HalfLineNonNegative => "halfline".to_string(),
            SupportSpec::RealLine => "real".to_string(),
            SupportSpec::Interval { lower, upper } => format!("interval[{lower};{upper}]"),
        };
        let k = match config.k {
            KSelection::Fixed(k) => k.to_string(),
            KSelection::Auto => "auto".to_string(),
        };
        let _ = writeln!(out, "# memd cross-validation report v1");
        let _ = writeln!(
            out,
            "# method={method} orders={} support={support} smoothing={} variance_floor={} gamma={} k={k} folds={} seed={} stratified={}",
            orders.join(";"),
            config.fit.smoothing,
            config.fit.variance_floor,
            config.gamma,
            config.folds,
            config.seed,
            config.stratified
        );
        let _ = writeln!(
            out,
            "# instances={} classes={}",
            self.n_instances, self.n_classes
        );
        let _ = writeln!(out, "# section: folds");
        let _ = writeln!(out, "fold,n_train,n_test,k,accuracy");
        for f in &self.folds {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                f.fold, f.n_train, f.n_test, f.k, f.accuracy
            );
        }
        let _ = writeln!(out, "# section: selected features");
        let _ = writeln!(out, "fold,rank,feature_id,score");
        for f in &self.folds {
            for (rank, (_, name, score)) in f.selected.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{}", f.fold, rank + 1, csv_field(name), score);
            }
        }
        if include_timings {
            let _ = writeln!(out, "# section: timings");
            let _ = writeln!(out, "fold,seconds");
            for f in &self.folds {
                let _ = writeln!(out, "{},{}", f.fold, f.elapsed.as_secs_f64());
            }
        }
        let _ = writeln!(out, "# section: summary");
        let _ = writeln!(out, "folds,mean_accuracy");
        let _ = writeln!(out, "{},{}", self.folds.len(), self.mean_accuracy);
        out
    }
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
pub fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{separable, PlantedGaussian};

    #[test]
    fn kfold_examples() {
        let plan = kfold_split(10, 5, 3).unwrap();
        assert_eq!(plan.fold_sizes(), vec![2; 5]);
        let mut covered: Vec<usize> = (0..5).flat_map(|f| plan.test_indices(f)).collect();
        covered.sort_unstable();
        assert_eq!(covered, (0..10).collect::<Vec<_>>());

        let plan = kfold_split(7, 3, 1).unwrap();
        assert_eq!(plan.fold_sizes(), vec![3, 2, 2]);
        assert_eq!(kfold_split(7, 3, 1).unwrap(), plan);
        assert_ne!(
            kfold_split(50, 3, 2).unwrap(),
            kfold_split(50, 3, 1).unwrap()
        );

        assert!(matches!(
            kfold_split(3, 4, 0),
            Err(MemdError::InvalidFolds { .. })
        ));
        assert!(matches!(
            kfold_split(3, 1, 0),
            Err(MemdError::InvalidFolds { .. })
        ));
    }

    #[test]
    fn stratified_folds_balance_classes() {
        let labels: Vec<usize> = (0..30).map(|i| usize::from(i >= 20)).collect();
        let plan = stratified_kfold_split(&labels, 5, 9).unwrap();
        for fold in 0..5 {
            let test = plan.test_indices(fold);
            assert_eq!(test.len(), 6);
            assert_eq!(test.iter().filter(|&&i| labels[i] == 1).count(), 2);
        }
    }

    #[test]
    fn k_grid_shape() {
        assert_eq!(k_grid(5), vec![1, 2, 3, 4, 5]);
        let g = k_grid(1000);
        assert_eq!(&g[..3], &[1, 2, 3]);
        assert_eq!(g[199], 200);
        assert_eq!(&g[200..], &[300, 450, 675, 1000]);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn curve_selection_examples() {
        let curve: Vec<(usize, f64)> = (1..=5).zip([0.6, 0.8, 0.9, 0.9, 0.9]).collect();
        assert_eq!(select_k_from_curve(&curve), 3);
        let flat: Vec<(usize, f64)> = (1..=5).map(|k| (k, 0.7)).collect();
        assert_eq!(select_k_from_curve(&flat), 1);
    }

    fn gaussian_config() -> ExperimentConfig {
        ExperimentConfig {
            spec: FeatureFunctionSpec::mean_and_second(),
            support: SupportSpec::RealLine,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn choose_k_on_planted_features() {
        let generator = PlantedGaussian::binary(100, 50, 5, 2.0);
        let mut small = 0;
        for seed in 0..10 {
            let data = generator.generate(seed).unwrap();
            if choose_k(&data, &gaussian_config(), seed).unwrap() <= 15 {
                small += 1;
            }
        }
        assert!(small >= 9, "{small}/10");
    }

    #[test]
    fn choose_k_gives_up_on_unsplittable_data() {
        let labels = crate::synthetic::class_names(2);
        let data =
            Dataset::from_dense(vec![vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1], labels)
                .unwrap();
        assert!(matches!(
            choose_k(&data, &gaussian_config(), 0),
            Err(MemdError::StratificationError {
                attempts: SPLIT_RETRIES
            })
        ));
    }

    #[test]
    fn separable_data_is_classified_perfectly() {
        let data = DataSource::Table(separable(20, 4, 5).unwrap());
        let config = ExperimentConfig {
            folds: 4,
            k: KSelection::Fixed(2),
            ..gaussian_config()
        };
        let report = cross_validate(&data, &config).unwrap();
        assert_eq!(report.mean_accuracy, 1.0);
        assert_eq!(report.folds.len(), 4);
    }

    #[test]
    fn two_folds_on_four_instances() {
        let labels = crate::synthetic::class_names(2);
        let data = Dataset::from_dense(
            vec![vec![0.1], vec![0.2], vec![2.0], vec![2.2]],
            vec![0, 0, 1, 1],
            labels,
        )
        .unwrap();
        let config = ExperimentConfig {
            folds: 2,
            k: KSelection::Fixed(1),
            stratified: true,
            ..ExperimentConfig::default()
        };
        let report = cross_validate(&DataSource::Table(data), &config).unwrap();
        assert_eq!(
            report.folds.iter().map(|f| f.n_test).collect::<Vec<_>>(),
            vec![2, 2]
        );
    }

    #[test]
    fn mean_is_average_of_folds_and_rerun_is_identical() {
        let data = DataSource::Table(PlantedGaussian::binary(40, 10, 2, 1.0).generate(4).unwrap());
        let config = ExperimentConfig {
            folds: 3,
            seed: 11,
            ..gaussian_config()
        };
        let a = cross_validate(&data, &config).unwrap();
        let b = cross_validate(&data, &config).unwrap();
        let mean = a.folds.iter().map(|f| f.accuracy).sum::<f64>() / 3.0;
        assert_eq!(a.mean_accuracy, mean);
        assert!(a.folds.iter().all(|f| (0.0..=1.0).contains(&f.accuracy)));
        assert_eq!(a.render(&config, false), b.render(&config, false));
    }

    #[test]
    fn held_out_fold_does_not_influence_training() {
        let base = PlantedGaussian::binary(30, 8, 2, 2.0).generate(2).unwrap();
        let plan = kfold_split(base.len(), 3, 5).unwrap();
        let (train, test) = (plan.train_indices(0), plan.test_indices(0));
        // scramble the held-out rows and labels
        let mut rows: Vec<Vec<f64>> = (0..base.len()).map(|i| base.row(i).to_dense(8)).collect();
        let mut labels = base.labels().to_vec();
        for &i in &test {
            rows[i].iter_mut().for_each(|v| *v = -*v * 7.0 + 3.0);
            labels[i] = 1 - labels[i];
        }
        let scrambled = Dataset::from_dense(rows, labels, base.label_map().clone()).unwrap();
        let config = gaussian_config();
        let (_, a) = evaluate_split(&DataSource::Table(base), &train, &test, &config, 0).unwrap();
        let (_, b) =
            evaluate_split(&DataSource::Table(scrambled), &train, &test, &config, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corpus_vocabulary_comes_from_training_documents() {
        use crate::data::{tokenize, LabelMap};
        let texts = [
            ("a", "apple apple banana"),
            ("a", "apple banana banana"),
            ("b", "cherry cherry date"),
            ("b", "cherry date date"),
            ("b", "zebra zebra zebra"),
        ];
        let mut label_map = LabelMap::default();
        let labels = texts.iter().map(|(l, _)| label_map.intern(l)).collect();
        let corpus = Corpus {
            docs: texts.iter().map(|(_, t)| tokenize(t)).collect(),
            labels,
            label_map,
        };
        let source = DataSource::Corpus(corpus);
        let config = ExperimentConfig::default();
        let (train, test) = source.split(&[0, 1, 2, 3], &[4], &config).unwrap();
        assert_eq!(
            train.feature_names(),
            &["apple", "banana", "cherry", "date"]
        );
        assert_eq!(test.dim(), 4);
        assert_eq!(test.row(0).to_dense(4), vec![0.0; 4]);
    }

    #[test]
    fn report_rendering() {
        let data = DataSource::Table(separable(20, 2, 1).unwrap());
        let config = ExperimentConfig {
            folds: 2,
            k: KSelection::Fixed(1),
            ..gaussian_config()
        };
        let report = cross_validate(&data, &config).unwrap();
        let text = report.render(&config, false);
        assert!(text.starts_with("# memd cross-validation report v1\n"));
        assert!(text.contains("fold,n_train,n_test,k,accuracy\n0,"));
        assert!(text.ends_with("folds,mean_accuracy\n2,1\n"), "{text}");
        assert!(!text.contains("timings"));
        assert!(report.render(&config, true).contains("# section: timings"));
        assert_eq!(csv_field("a,b"), "\"a,b\"");
    }

    #[test]
    fn too_few_instances_per_class() {
        let data = DataSource::Table(separable(2, 2, 1).unwrap());
        let config = ExperimentConfig {
            folds: 3,
            ..gaussian_config()
        };
        assert!(matches!(
            cross_validate(&data, &config),
            Err(MemdError::InvalidConfig(_))
        ));
    }
}
