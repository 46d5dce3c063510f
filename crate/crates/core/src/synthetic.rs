//! Seeded synthetic datasets with known informative features.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, LabelMap};
use crate::error::Result;

/// Gaussian classes that differ only on a planted subset of features.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedGaussian {
    pub classes: usize,
    pub per_class: usize,
    pub features: usize,
    /// Informative features per class. Class `c` shifts its own block of
    /// this many features by `shift`; with two classes only class 1 does.
    pub informative: usize,
    pub shift: f64,
    pub sigma: f64,
}

impl PlantedGaussian {
    /// Two classes, `per_class` each, `informative` features shifted by
    /// `shift` in units of `sigma`.
    pub fn binary(per_class: usize, features: usize, informative: usize, shift: f64) -> Self {
        PlantedGaussian {
            classes: 2,
            per_class,
            features,
            informative,
            shift,
            sigma: 1.0,
        }
    }

    /// Indices of the shifted features. They are scattered across the
    /// feature range so ranking cannot succeed by position alone.
    pub fn informative_features(&self, seed: u64) -> Vec<usize> {
        let blocks = if self.classes == 2 { 1 } else { self.classes };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_f00d);
        let mut all: Vec<usize> = (0..self.features).collect();
        all.shuffle(&mut rng);
        let mut picked = all[..(blocks * self.informative).min(self.features)].to_vec();
        picked.sort_unstable();
        picked
    }

    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        let planted = self.informative_features(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, self.sigma).expect("sigma is positive");
        let mut shifts = vec![vec![0.0; self.features]; self.classes];
        if self.classes == 2 {
            for &f in &planted {
                shifts[1][f] = self.shift;
            }
        } else {
            for (c, block) in planted.chunks(self.informative.max(1)).enumerate() {
                for &f in block {
                    shifts[c][f] = self.shift;
                }
            }
        }
        let mut rows = Vec::with_capacity(self.classes * self.per_class);
        let mut labels = Vec::with_capacity(rows.capacity());
        for _ in 0..self.per_class {
            for (c, shift) in shifts.iter().enumerate() {
                rows.push(
                    shift
                        .iter()
                        .map(|s| s + noise.sample(&mut rng))
                        .collect::<Vec<f64>>(),
                );
                labels.push(c);
            }
        }
        Dataset::from_dense(rows, labels, class_names(self.classes))
    }
}

/// Two classes on disjoint supports: class 0 in `[0, 1)`, class 1 in
/// `[2, 3)`, on every feature.
pub fn separable(per_class: usize, features: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..per_class {
        for c in 0..2 {
            let offset = 2.0 * c as f64;
            rows.push(
                (0..features)
                    .map(|_| offset + rng.random::<f64>())
                    .collect(),
            );
            labels.push(c);
        }
    }
    Dataset::from_dense(rows, labels, class_names(2))
}

/// Random term-weight-like rows: class-dependent exponential rates on the
/// first `informative` features, shared rates elsewhere.
pub fn exponential_classes(
    per_class: usize,
    features: usize,
    informative: usize,
    seed: u64,
) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..per_class {
        for c in 0..2 {
            let row = (0..features)
                .map(|f| {
                    let mean = if f < informative && c == 1 { 0.3 } else { 0.1 };
                    let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                    -mean * u.ln()
                })
                .collect();
            rows.push(row);
            labels.push(c);
        }
    }
    Dataset::from_dense(rows, labels, class_names(2))
}

pub fn class_names(m: usize) -> LabelMap {
    LabelMap::new((0..m).map(|c| format!("class{c}")).collect()).expect("names are unique")
}
