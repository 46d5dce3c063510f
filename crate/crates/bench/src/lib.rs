//! Fixtures shared by the benchmarks.

use memd_core::maxent::{FeatureFunctionSpec, FitOptions, SupportSpec};
use memd_core::synthetic::PlantedGaussian;
use memd_core::{ClassifierConfig, Dataset, MarginalGrid, Method};

/// Binary planted-Gaussian table with `features` columns, 5 informative.
pub fn planted(per_class: usize, features: usize) -> Dataset {
    PlantedGaussian::binary(per_class, features, 5, 2.0)
        .generate(7)
        .expect("valid generator")
}

/// Four-class planted-Gaussian table.
pub fn planted_multiclass(per_class: usize, features: usize) -> Dataset {
    PlantedGaussian {
        classes: 4,
        per_class,
        features,
        informative: 3,
        shift: 1.5,
        sigma: 1.0,
    }
    .generate(7)
    .expect("valid generator")
}

pub fn gaussian_config(method: Method, k: Option<usize>) -> ClassifierConfig {
    ClassifierConfig {
        spec: FeatureFunctionSpec::mean_and_second(),
        support: SupportSpec::RealLine,
        method,
        k,
        ..ClassifierConfig::default()
    }
}

pub fn gaussian_grid(data: &Dataset, with_complement: bool) -> MarginalGrid {
    MarginalGrid::fit(
        data,
        &FeatureFunctionSpec::mean_and_second(),
        &SupportSpec::RealLine,
        &FitOptions::default(),
        with_complement,
    )
    .expect("fit succeeds")
}
