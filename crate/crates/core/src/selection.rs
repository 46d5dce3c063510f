//! Feature ranking by divergence between per-class marginals.
//!
//! Because the class-conditional model factorizes over features, the
//! Jeffreys divergence of the product model over a feature subset is the
//! sum of per-feature divergences. The best size-K subset is therefore the
//! top K of a single sort, which [`brute_force_subset_oracle`] checks by
//! enumeration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::divergence::{j_divergence, WeightVector};
use crate::error::{MemdError, Result};
use crate::maxent::{
    fit_marginal, FeatureFunctionSpec, FitOptions, MaxEntDensity, MomentAccumulator, SupportSpec,
};

/// Upper clamp on any ranking score.
pub const MAX_SCORE: f64 = 1e12;
/// Largest feature count the exhaustive oracle accepts.
pub const ORACLE_MAX_FEATURES: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingMethod {
    BinaryJ,
    OneVsAllJ,
    JsGm,
}

/// Per-feature, per-class marginals (`marginals[feature][class]`) and the
/// class priors. `rest_marginals[feature][class]` holds the marginal of the
/// pooled complement of `class`, needed only by one-vs-all ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalGrid {
    marginals: Vec<Vec<MaxEntDensity>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rest_marginals: Option<Vec<Vec<MaxEntDensity>>>,
    priors: WeightVector,
}

impl MarginalGrid {
    pub fn new(
        marginals: Vec<Vec<MaxEntDensity>>,
        rest_marginals: Option<Vec<Vec<MaxEntDensity>>>,
        priors: WeightVector,
    ) -> Result<Self> {
        let m = priors.len();
        let check_rows = |rows: &[Vec<MaxEntDensity>]| -> Result<()> {
            for (i, row) in rows.iter().enumerate() {
                if row.len() != m {
                    return Err(MemdError::InvalidConfig(format!(
                        "feature {i} has {} marginals for {m} classes",
                        row.len()
                    )));
                }
                if row.windows(2).any(|w| !w[0].is_compatible(&w[1])) {
                    return Err(MemdError::IncompatibleDensities(format!(
                        "marginals of feature {i} differ in support or feature functions"
                    )));
                }
            }
            Ok(())
        };
        check_rows(&marginals)?;
        if let Some(rest) = &rest_marginals {
            if rest.len() != marginals.len() {
                return Err(MemdError::InvalidConfig(
                    "complement marginals do not cover every feature".into(),
                ));
            }
            check_rows(rest)?;
            for (i, (row, rest_row)) in marginals.iter().zip(rest).enumerate() {
                if let (Some(a), Some(b)) = (row.first(), rest_row.first()) {
                    if !a.is_compatible(b) {
                        return Err(MemdError::IncompatibleDensities(format!(
                            "complement marginals of feature {i} differ from class marginals"
                        )));
                    }
                }
            }
        }
        Ok(MarginalGrid {
            marginals,
            rest_marginals,
            priors,
        })
    }

    /// Fits every (feature, class) marginal of `data`. With
    /// `with_complement`, also fits each class's pooled complement.
    pub fn fit(
        data: &Dataset,
        spec: &FeatureFunctionSpec,
        support: &SupportSpec,
        options: &FitOptions,
        with_complement: bool,
    ) -> Result<Self> {
        support.validate(spec)?;
        let m = data.num_classes();
        let counts = data.class_counts();
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(MemdError::EmptyClass(format!(
                "class {:?} has no training instances",
                data.label_map().name(empty)
            )));
        }
        let stats = class_statistics(data, spec);
        let priors =
            WeightVector::normalized(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>())?;

        let fit_cell = |acc: &MomentAccumulator, feature: usize| -> Result<MaxEntDensity> {
            let moments = acc.finish()?;
            fit_marginal(&moments, spec, support, options).map_err(|e| match e {
                MemdError::SolverDiverged { .. } | MemdError::InvalidMoment(_) => {
                    log::warn!("feature {feature}: {e}");
                    e
                }
                other => other,
            })
        };

        let marginals = stats
            .par_iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|acc| fit_cell(acc, i)).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let rest_marginals = if with_complement {
            let rest = stats
                .par_iter()
                .enumerate()
                .map(|(i, row)| {
                    (0..row.len())
                        .map(|j| {
                            // summing the other classes avoids cancellation in total - own
                            let mut complement = MomentAccumulator::new(spec);
                            row.iter()
                                .enumerate()
                                .filter(|&(k, _)| k != j)
                                .for_each(|(_, acc)| complement.merge(acc));
                            if complement.count() == 0 {
                                return Err(MemdError::EmptyClass(
                                    "complement class is empty".into(),
                                ));
                            }
                            fit_cell(&complement, i)
                        })
                        .collect()
                })
                .collect::<Result<Vec<Vec<_>>>>()?;
            Some(rest)
        } else {
            None
        };
        debug_assert!(marginals.iter().all(|row: &Vec<_>| row.len() == m));
        Self::new(marginals, rest_marginals, priors)
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn num_classes(&self) -> usize {
        self.priors.len()
    }

    pub fn marginal(&self, feature: usize, class: usize) -> &MaxEntDensity {
        &self.marginals[feature][class]
    }

    pub fn feature_marginals(&self, feature: usize) -> &[MaxEntDensity] {
        &self.marginals[feature]
    }

    pub fn rest_marginals(&self) -> Option<&[Vec<MaxEntDensity>]> {
        self.rest_marginals.as_deref()
    }

    pub fn priors(&self) -> &WeightVector {
        &self.priors
    }

    /// Same marginals with different priors.
    pub fn with_priors(&self, priors: WeightVector) -> Result<Self> {
        Self::new(self.marginals.clone(), self.rest_marginals.clone(), priors)
    }

    /// Grid without complement marginals (they are not needed to predict).
    pub fn without_complement(&self) -> Self {
        MarginalGrid {
            marginals: self.marginals.clone(),
            rest_marginals: None,
            priors: self.priors.clone(),
        }
    }

    /// Number of fitted densities, complement models included.
    pub fn density_count(&self) -> usize {
        let own: usize = self.marginals.iter().map(Vec::len).sum();
        let rest: usize = self
            .rest_marginals
            .as_ref()
            .map_or(0, |r| r.iter().map(Vec::len).sum());
        own + rest
    }

    /// Restricts the grid to `features`, in the given order.
    pub fn select(&self, features: &[usize]) -> Self {
        MarginalGrid {
            marginals: features
                .iter()
                .map(|&i| self.marginals[i].clone())
                .collect(),
            rest_marginals: self
                .rest_marginals
                .as_ref()
                .map(|r| features.iter().map(|&i| r[i].clone()).collect()),
            priors: self.priors.clone(),
        }
    }
}

/// Power sums per (feature, class).
fn class_statistics(data: &Dataset, spec: &FeatureFunctionSpec) -> Vec<Vec<MomentAccumulator>> {
    let m = data.num_classes();
    let mut stats = vec![vec![MomentAccumulator::new(spec); m]; data.dim()];
    for (row, &label) in data.rows().iter().zip(data.labels()) {
        for (i, v) in row.entries() {
            if v != 0.0 {
                stats[i][label].add_nonzero(spec, v);
            }
        }
    }
    let counts = data.class_counts();
    for row in &mut stats {
        for (acc, &n) in row.iter_mut().zip(&counts) {
            acc.add_count(n);
        }
    }
    stats
}

/// Features sorted by descending score, ties by ascending index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeatures {
    pub order: Vec<usize>,
    pub scores: Vec<f64>,
    pub method: RankingMethod,
}

impl RankedFeatures {
    pub fn from_scores(scores: Vec<f64>, method: RankingMethod) -> Self {
        let scores: Vec<f64> = scores
            .into_iter()
            .enumerate()
            .map(|(i, s)| clamp_score(i, s))
            .collect();
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        RankedFeatures {
            order,
            scores,
            method,
        }
    }

    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

fn clamp_score(feature: usize, score: f64) -> f64 {
    if score.is_nan() {
        log::warn!("feature {feature}: NaN divergence score replaced by 0");
        0.0
    } else if score > MAX_SCORE {
        log::warn!("feature {feature}: divergence score {score} clamped to {MAX_SCORE}");
        MAX_SCORE
    } else {
        score.max(0.0)
    }
}

/// Per-feature J divergence between the two class marginals.
pub fn score_binary_j(grid: &MarginalGrid) -> Result<RankedFeatures> {
    if grid.num_classes() != 2 {
        return Err(MemdError::WrongArity {
            expected: 2,
            got: grid.num_classes(),
        });
    }
    let scores = grid
        .marginals
        .par_iter()
        .map(|row| j_divergence(&row[0], &row[1]))
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedFeatures::from_scores(scores, RankingMethod::BinaryJ))
}

/// Prior-weighted J divergence between each class and its complement.
pub fn score_one_vs_all_j(grid: &MarginalGrid) -> Result<RankedFeatures> {
    let rest = grid
        .rest_marginals
        .as_ref()
        .ok_or(MemdError::MissingComplementModels)?;
    let priors = grid.priors.as_slice();
    let scores = grid
        .marginals
        .par_iter()
        .zip(rest.par_iter())
        .map(|(row, rest_row)| {
            row.iter()
                .zip(rest_row)
                .zip(priors)
                .map(|((own, other), pi)| Ok(pi * j_divergence(own, other)?))
                .sum::<Result<f64>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedFeatures::from_scores(
        scores,
        RankingMethod::OneVsAllJ,
    ))
}

/// `Σ_j Σ_{k≠j} P(c_j) P(c_k) J(P_{c_j} ‖ P_{c_k})` per feature. The double
/// sum visits each unordered pair twice, so this is twice the JS_GM value.
pub fn score_js_gm(grid: &MarginalGrid) -> Result<RankedFeatures> {
    let priors = grid.priors.as_slice();
    let scores = grid
        .marginals
        .par_iter()
        .map(|row| {
            let mut total = 0.0;
            for j in 0..row.len() {
                for k in 0..row.len() {
                    if j != k {
                        total += priors[j] * priors[k] * j_divergence(&row[j], &row[k])?;
                    }
                }
            }
            Ok(total)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RankedFeatures::from_scores(scores, RankingMethod::JsGm))
}

pub fn rank(grid: &MarginalGrid, method: RankingMethod) -> Result<RankedFeatures> {
    match method {
        RankingMethod::BinaryJ => score_binary_j(grid),
        RankingMethod::OneVsAllJ => score_one_vs_all_j(grid),
        RankingMethod::JsGm => score_js_gm(grid),
    }
}

/// Exhaustive search for the size-`k` subset with the largest summed
/// per-feature J divergence. Returned indices are ascending.
pub fn brute_force_subset_oracle(grid: &MarginalGrid, k: usize) -> Result<Vec<usize>> {
    if grid.num_classes() != 2 {
        return Err(MemdError::WrongArity {
            expected: 2,
            got: grid.num_classes(),
        });
    }
    let d = grid.dim();
    if d > ORACLE_MAX_FEATURES {
        return Err(MemdError::OracleTooLarge {
            max: ORACLE_MAX_FEATURES,
            got: d,
        });
    }
    if k > d {
        return Err(MemdError::InvalidK { k, d });
    }
    let per_feature = grid
        .marginals
        .iter()
        .map(|row| j_divergence(&row[0], &row[1]))
        .collect::<Result<Vec<_>>>()?;
    let mut best_mask = 0u32;
    let mut best = f64::NEG_INFINITY;
    for mask in 0u32..(1u32 << d) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let total: f64 = (0..d)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| per_feature[i])
            .sum();
        if total > best {
            best = total;
            best_mask = mask;
        }
    }
    Ok((0..d).filter(|i| best_mask & (1 << i) != 0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxent::{fit_exponential_halfline, MomentVector};
    use approx::assert_abs_diff_eq;

    pub(crate) fn exp(mean: f64) -> MaxEntDensity {
        fit_exponential_halfline(&MomentVector::new(vec![mean], 1), 0.0).unwrap()
    }

    /// Binary grid whose feature `i` has J divergence `js[i]` between the
    /// classes: means 1 and `m` with `m + 1/m − 2 = J`.
    fn grid_with_j(js: &[f64]) -> MarginalGrid {
        let rows = js
            .iter()
            .map(|&j| {
                let m = 1.0 + 0.5 * j + (j + 0.25 * j * j).sqrt();
                vec![exp(1.0), exp(m)]
            })
            .collect();
        MarginalGrid::new(rows, None, WeightVector::uniform(2).unwrap()).unwrap()
    }

    #[test]
    fn binary_ranking_examples() {
        let grid = grid_with_j(&[0.2, 0.9, 0.5]);
        let ranked = score_binary_j(&grid).unwrap();
        assert_eq!(ranked.order, vec![1, 2, 0]);
        for (s, j) in ranked.scores.iter().zip([0.2, 0.9, 0.5]) {
            assert_abs_diff_eq!(*s, j, epsilon = 1e-12);
        }
        let flat = grid_with_j(&[0.0; 4]);
        let ranked = score_binary_j(&flat).unwrap();
        assert_eq!(ranked.order, vec![0, 1, 2, 3]);
        assert!(ranked.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn binary_ranking_requires_two_classes() {
        let grid = MarginalGrid::new(
            vec![vec![exp(1.0), exp(2.0), exp(3.0)]],
            None,
            WeightVector::uniform(3).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            score_binary_j(&grid),
            Err(MemdError::WrongArity {
                expected: 2,
                got: 3
            })
        ));
        assert!(brute_force_subset_oracle(&grid, 1).is_err());
    }

    #[test]
    fn oracle_examples() {
        let grid = grid_with_j(&[0.1, 0.4, 0.3, 0.2]);
        assert_eq!(brute_force_subset_oracle(&grid, 2).unwrap(), vec![1, 2]);
        assert_eq!(
            brute_force_subset_oracle(&grid, 4).unwrap(),
            vec![0, 1, 2, 3]
        );
        assert!(matches!(
            brute_force_subset_oracle(&grid, 5),
            Err(MemdError::InvalidK { .. })
        ));
        let big = grid_with_j(&[0.1; 16]);
        assert!(matches!(
            brute_force_subset_oracle(&big, 2),
            Err(MemdError::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn one_vs_all_needs_complement_models() {
        let grid = grid_with_j(&[0.3]);
        assert!(matches!(
            score_one_vs_all_j(&grid),
            Err(MemdError::MissingComplementModels)
        ));
    }

    #[test]
    fn one_vs_all_reduces_to_binary_for_two_classes() {
        let rows = vec![vec![exp(1.0), exp(2.5)], vec![exp(0.7), exp(0.6)]];
        let rest: Vec<Vec<_>> = rows
            .iter()
            .map(|r| vec![r[1].clone(), r[0].clone()])
            .collect();
        let grid = MarginalGrid::new(rows, Some(rest), WeightVector::uniform(2).unwrap()).unwrap();
        let ova = score_one_vs_all_j(&grid).unwrap();
        let bin = score_binary_j(&grid).unwrap();
        for (a, b) in ova.scores.iter().zip(&bin.scores) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert_eq!(ova.order, bin.order);
    }

    #[test]
    fn one_vs_all_term_by_term() {
        let rows = vec![
            vec![exp(1.0), exp(2.0), exp(0.5)],
            vec![exp(1.0), exp(1.0), exp(1.0)],
        ];
        let rest = vec![
            vec![exp(1.2), exp(0.8), exp(1.5)],
            vec![exp(1.0), exp(1.0), exp(1.0)],
        ];
        let priors = WeightVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let grid = MarginalGrid::new(rows.clone(), Some(rest.clone()), priors).unwrap();
        let ranked = score_one_vs_all_j(&grid).unwrap();
        // J(Exp mean a, Exp mean b) = a/b + b/a − 2
        let j = |a: f64, b: f64| a / b + b / a - 2.0;
        let expected = 0.5 * j(1.0, 1.2) + 0.3 * j(2.0, 0.8) + 0.2 * j(0.5, 1.5);
        assert_abs_diff_eq!(ranked.scores[0], expected, epsilon = 1e-12);
        assert_eq!(ranked.scores[1], 0.0);
        assert_eq!(ranked.order, vec![0, 1]);
    }

    #[test]
    fn js_gm_scores_examples() {
        let grid = grid_with_j(&[0.2, 0.9, 0.5]);
        let js = score_js_gm(&grid).unwrap();
        for (s, j) in js.scores.iter().zip([0.2, 0.9, 0.5]) {
            assert_abs_diff_eq!(*s, 0.5 * j, epsilon = 1e-12);
        }
        assert_eq!(js.order, score_binary_j(&grid).unwrap().order);

        let same = MarginalGrid::new(
            vec![vec![exp(2.0); 4]],
            None,
            WeightVector::uniform(4).unwrap(),
        )
        .unwrap();
        assert_eq!(score_js_gm(&same).unwrap().scores, vec![0.0]);

        let row = vec![exp(1.0), exp(2.0), exp(0.3)];
        let priors = WeightVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let grid = MarginalGrid::new(vec![row.clone()], None, priors.clone()).unwrap();
        let expected = 2.0 * crate::divergence::js_gm(&row, &priors).unwrap();
        assert_abs_diff_eq!(
            score_js_gm(&grid).unwrap().scores[0],
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn scores_are_clamped() {
        let ranked = RankedFeatures::from_scores(
            vec![f64::NAN, 1e20, f64::INFINITY, 0.5],
            RankingMethod::JsGm,
        );
        assert_eq!(ranked.scores, vec![0.0, MAX_SCORE, MAX_SCORE, 0.5]);
        assert_eq!(ranked.order, vec![1, 2, 3, 0]);
    }

    #[test]
    fn grid_rejects_mixed_rows() {
        let gauss =
            crate::maxent::fit_gaussian_realline(&MomentVector::new(vec![0.0, 1.0], 1), 0.0)
                .unwrap();
        let err = MarginalGrid::new(
            vec![vec![exp(1.0), gauss]],
            None,
            WeightVector::uniform(2).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, MemdError::IncompatibleDensities(_)));
    }

    #[test]
    fn fitted_grid_counts_and_priors() {
        use crate::data::{Dataset, LabelMap};
        let labels = LabelMap::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let rows = vec![
            vec![0.1, 1.0],
            vec![0.2, 2.0],
            vec![0.9, 0.0],
            vec![0.8, 0.5],
            vec![0.4, 0.4],
            vec![0.5, 0.6],
        ];
        let data = Dataset::from_dense(rows, vec![0, 0, 1, 1, 2, 2], labels).unwrap();
        let spec = FeatureFunctionSpec::mean();
        let opts = FitOptions::default();
        let plain = MarginalGrid::fit(
            &data,
            &spec,
            &SupportSpec::HalfLineNonNegative,
            &opts,
            false,
        )
        .unwrap();
        assert_eq!(plain.density_count(), 2 * 3);
        let full = MarginalGrid::fit(&data, &spec, &SupportSpec::HalfLineNonNegative, &opts, true)
            .unwrap();
        assert_eq!(full.density_count(), 2 * 2 * 3);
        // class b's complement on feature 0 pools a and c: mean of 0.1,0.2,0.4,0.5
        let rest = &full.rest_marginals().unwrap()[0][1];
        assert_abs_diff_eq!(rest.moments().values[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(
            full.marginal(1, 1).moments().values[0],
            0.25,
            epsilon = 1e-15
        );
    }
}
