//! Per-feature maximum-entropy marginals.
//!
//! A marginal has the exponential-family form
//! `p(x) = exp(-λ₀ - Σ_k λ_k x^{o_k})` on its support, where the `o_k` are
//! monomial orders and the multipliers are chosen so that the expected
//! monomials match the empirical moments. The one-moment half-line and
//! two-moment real-line cases have closed forms (exponential and
//! Gaussian); everything else goes through [`fit_numeric`].

pub mod quadrature;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MemdError, Result};
use quadrature::QuadratureRule;

pub const DEFAULT_SMOOTHING: f64 = 1e-6;
pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-4;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100;

/// Domain the marginal density lives on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SupportSpec {
    HalfLineNonNegative,
    RealLine,
    Interval { lower: f64, upper: f64 },
}

impl SupportSpec {
    pub const UNIT: SupportSpec = SupportSpec::Interval {
        lower: 0.0,
        upper: 1.0,
    };

    /// Checks the support on its own and against the monomial orders.
    pub fn validate(&self, spec: &FeatureFunctionSpec) -> Result<()> {
        match *self {
            SupportSpec::Interval { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(MemdError::InvalidConfig(format!(
                        "interval support needs finite lower < upper, got [{lower}, {upper}]"
                    )));
                }
            }
            SupportSpec::RealLine => {
                if !spec.contains(2) {
                    return Err(MemdError::InvalidConfig(
                        "real-line support needs a second-order moment to be normalizable".into(),
                    ));
                }
            }
            SupportSpec::HalfLineNonNegative => {}
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            SupportSpec::HalfLineNonNegative => x >= 0.0,
            SupportSpec::RealLine => x.is_finite(),
            SupportSpec::Interval { lower, upper } => x >= lower && x <= upper,
        }
    }
}

/// Monomial feature functions `φ_k(x) = x^{o_k}`, orders strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct FeatureFunctionSpec {
    orders: Vec<u32>,
}

impl FeatureFunctionSpec {
    pub fn new(orders: Vec<u32>) -> Result<Self> {
        if orders.is_empty() {
            return Err(MemdError::InvalidConfig("no moment orders given".into()));
        }
        if orders[0] == 0 || orders.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MemdError::InvalidConfig(format!(
                "moment orders must be positive and strictly increasing, got {orders:?}"
            )));
        }
        Ok(FeatureFunctionSpec { orders })
    }

    /// `{1}`: the mean only.
    pub fn mean() -> Self {
        FeatureFunctionSpec { orders: vec![1] }
    }

    /// `{1, 2}`: mean and raw second moment.
    pub fn mean_and_second() -> Self {
        FeatureFunctionSpec { orders: vec![1, 2] }
    }

    /// `{1, .., max_order}`.
    pub fn up_to(max_order: u32) -> Result<Self> {
        Self::new((1..=max_order).collect())
    }

    pub fn orders(&self) -> &[u32] {
        &self.orders
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn contains(&self, order: u32) -> bool {
        self.orders.contains(&order)
    }

    pub fn position(&self, order: u32) -> Option<usize> {
        self.orders.iter().position(|&o| o == order)
    }

    /// `(φ_1(x), .., φ_l(x))` written into `out`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        for (slot, &order) in out.iter_mut().zip(&self.orders) {
            *slot = x.powi(order as i32);
        }
    }

    fn is_exactly(&self, orders: &[u32]) -> bool {
        self.orders == orders
    }
}

impl TryFrom<Vec<u32>> for FeatureFunctionSpec {
    type Error = MemdError;

    fn try_from(orders: Vec<u32>) -> Result<Self> {
        Self::new(orders)
    }
}

impl From<FeatureFunctionSpec> for Vec<u32> {
    fn from(spec: FeatureFunctionSpec) -> Self {
        spec.orders
    }
}

/// Empirical expectations of the feature functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub values: Vec<f64>,
    pub sample_count: usize,
}

impl MomentVector {
    pub fn new(values: Vec<f64>, sample_count: usize) -> Self {
        MomentVector {
            values,
            sample_count,
        }
    }

    fn order_value(&self, spec: &FeatureFunctionSpec, order: u32) -> Option<f64> {
        spec.position(order).map(|i| self.values[i])
    }
}

/// Running power sums for one (feature, class) cell.
///
/// Zeros contribute nothing to any positive-order power sum, so sparse rows
/// only need to feed their stored entries plus the total instance count.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccumulator {
    sums: Vec<f64>,
    count: usize,
}

impl MomentAccumulator {
    pub fn new(spec: &FeatureFunctionSpec) -> Self {
        MomentAccumulator {
            sums: vec![0.0; spec.len()],
            count: 0,
        }
    }

    pub fn add(&mut self, spec: &FeatureFunctionSpec, x: f64) {
        self.add_nonzero(spec, x);
        self.count += 1;
    }

    /// Adds `x` to the power sums without counting an instance.
    pub fn add_nonzero(&mut self, spec: &FeatureFunctionSpec, x: f64) {
        for (sum, &order) in self.sums.iter_mut().zip(spec.orders()) {
            *sum += x.powi(order as i32);
        }
    }

    pub fn add_count(&mut self, n: usize) {
        self.count += n;
    }

    pub fn merge(&mut self, other: &MomentAccumulator) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        self.count += other.count;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self) -> Result<MomentVector> {
        if self.count == 0 {
            return Err(MemdError::EmptyClass(
                "no samples to estimate moments from".into(),
            ));
        }
        let n = self.count as f64;
        Ok(MomentVector::new(
            self.sums.iter().map(|s| s / n).collect(),
            self.count,
        ))
    }
}

/// Sample means of the feature functions.
pub fn empirical_moments(samples: &[f64], spec: &FeatureFunctionSpec) -> Result<MomentVector> {
    let mut acc = MomentAccumulator::new(spec);
    for &x in samples {
        acc.add(spec, x);
    }
    acc.finish()
}

/// A fitted maximum-entropy marginal. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEntDensity {
    support: SupportSpec,
    spec: FeatureFunctionSpec,
    lambdas: Vec<f64>,
    log_normalizer: f64,
    moments: MomentVector,
    fit_tolerance: f64,
}

impl MaxEntDensity {
    /// Assembles a density from already-known parameters. The caller is
    /// responsible for `lambdas`, `log_normalizer` and `moments` being
    /// mutually consistent.
    pub fn from_parts(
        support: SupportSpec,
        spec: FeatureFunctionSpec,
        lambdas: Vec<f64>,
        log_normalizer: f64,
        moments: MomentVector,
        fit_tolerance: f64,
    ) -> Result<Self> {
        support.validate(&spec)?;
        if lambdas.len() != spec.len() || moments.values.len() != spec.len() {
            return Err(MemdError::InvalidConfig(format!(
                "expected {} multipliers and moments, got {} and {}",
                spec.len(),
                lambdas.len(),
                moments.values.len()
            )));
        }
        if !lambdas
            .iter()
            .chain([&log_normalizer])
            .all(|v| v.is_finite())
        {
            return Err(MemdError::InvalidMoment(
                "non-finite maximum-entropy parameters".into(),
            ));
        }
        Ok(MaxEntDensity {
            support,
            spec,
            lambdas,
            log_normalizer,
            moments,
            fit_tolerance,
        })
    }

    pub fn support(&self) -> &SupportSpec {
        &self.support
    }

    pub fn spec(&self) -> &FeatureFunctionSpec {
        &self.spec
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn moments(&self) -> &MomentVector {
        &self.moments
    }

    pub fn fit_tolerance(&self) -> f64 {
        self.fit_tolerance
    }

    /// Shares support and feature functions with `other`.
    pub fn is_compatible(&self, other: &MaxEntDensity) -> bool {
        self.support == other.support && self.spec == other.spec
    }

    /// `-λ₀ - Σ λ_k x^{o_k}`; negative infinity outside the support.
    pub fn log_density(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return f64::NEG_INFINITY;
        }
        self.log_kernel(x) - self.log_normalizer
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }

    fn log_kernel(&self, x: f64) -> f64 {
        -self
            .lambdas
            .iter()
            .zip(self.spec.orders())
            .map(|(l, &o)| l * x.powi(o as i32))
            .sum::<f64>()
    }

    /// Quadrature rule adapted to where this density puts its mass.
    pub fn quadrature_rule(&self) -> QuadratureRule {
        let (center, scale) = location_hint(&self.support, &self.spec, &self.moments);
        QuadratureRule::for_support(&self.support, center, scale)
    }

    /// `E[f(X)]` by quadrature.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        let rule = self.quadrature_rule();
        rule.integrate(|x| {
            let p = self.density(x);
            if p == 0.0 {
                0.0
            } else {
                p * f(x)
            }
        })
    }

    /// Total mass by quadrature; 1 for a well-formed density.
    pub fn total_mass(&self) -> f64 {
        self.expect(|_| 1.0)
    }
}

/// Smoothing and solver settings for [`fit_marginal`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub smoothing: f64,
    pub variance_floor: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            smoothing: DEFAULT_SMOOTHING,
            variance_floor: DEFAULT_VARIANCE_FLOOR,
            tol: DEFAULT_TOLERANCE,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// One-moment maximum-entropy density on `[0, ∞)`: the exponential with
/// rate `1 / max(μ₁, smoothing)`.
pub fn fit_exponential_halfline(moments: &MomentVector, smoothing: f64) -> Result<MaxEntDensity> {
    let mean = match moments.values.as_slice() {
        [m] => *m,
        other => {
            return Err(MemdError::InvalidConfig(format!(
                "exponential fit takes exactly one moment, got {}",
                other.len()
            )))
        }
    };
    if !mean.is_finite() || mean < 0.0 {
        return Err(MemdError::InvalidMoment(format!(
            "half-line mean must be non-negative, got {mean}"
        )));
    }
    let mean = mean.max(smoothing);
    if mean <= 0.0 {
        return Err(MemdError::InvalidMoment(
            "zero mean with no smoothing floor".into(),
        ));
    }
    let rate = 1.0 / mean;
    MaxEntDensity::from_parts(
        SupportSpec::HalfLineNonNegative,
        FeatureFunctionSpec::mean(),
        vec![rate],
        -rate.ln(),
        MomentVector::new(vec![mean], moments.sample_count),
        0.0,
    )
}

/// Two-moment maximum-entropy density on the real line: the Gaussian with
/// the matching mean and (floored) variance.
pub fn fit_gaussian_realline(moments: &MomentVector, variance_floor: f64) -> Result<MaxEntDensity> {
    let (mean, second) = match moments.values.as_slice() {
        [m, s] => (*m, *s),
        other => {
            return Err(MemdError::InvalidConfig(format!(
                "Gaussian fit takes two moments, got {}",
                other.len()
            )))
        }
    };
    if !(mean.is_finite() && second.is_finite()) {
        return Err(MemdError::InvalidMoment("non-finite moments".into()));
    }
    let raw_variance = second - mean * mean;
    let slack = 1e-9 * second.abs().max(1.0);
    if raw_variance < -slack {
        return Err(MemdError::InvalidMoment(format!(
            "second moment {second} is below the squared mean {}",
            mean * mean
        )));
    }
    let variance = raw_variance.max(variance_floor);
    if variance <= 0.0 {
        return Err(MemdError::InvalidMoment(
            "zero variance with no variance floor".into(),
        ));
    }
    let lambda2 = 1.0 / (2.0 * variance);
    let lambda1 = -mean / variance;
    let log_normalizer =
        mean * mean / (2.0 * variance) + 0.5 * (2.0 * std::f64::consts::PI * variance).ln();
    MaxEntDensity::from_parts(
        SupportSpec::RealLine,
        FeatureFunctionSpec::mean_and_second(),
        vec![lambda1, lambda2],
        log_normalizer,
        MomentVector::new(vec![mean, variance + mean * mean], moments.sample_count),
        0.0,
    )
}

/// Moment matching by damped Newton on the convex dual
/// `D(λ) = ln Z(λ) + Σ λ_k μ_k`, with expectations by quadrature.
pub fn fit_numeric(
    moments: &MomentVector,
    spec: &FeatureFunctionSpec,
    support: &SupportSpec,
    tol: f64,
    max_iter: usize,
) -> Result<MaxEntDensity> {
    fit_numeric_traced(moments, spec, support, tol, max_iter).map(|(density, _)| density)
}

/// [`fit_numeric`] that also returns the dual objective after each
/// accepted iterate (starting with the initial point).
pub fn fit_numeric_traced(
    moments: &MomentVector,
    spec: &FeatureFunctionSpec,
    support: &SupportSpec,
    tol: f64,
    max_iter: usize,
) -> Result<(MaxEntDensity, Vec<f64>)> {
    support.validate(spec)?;
    if moments.values.len() != spec.len() {
        return Err(MemdError::InvalidConfig(format!(
            "{} moments for {} feature functions",
            moments.values.len(),
            spec.len()
        )));
    }
    check_moment_hull(&moments.values, spec, support)?;

    let (center, scale) = location_hint(support, spec, moments);
    let rule = QuadratureRule::for_support(support, center, scale);
    let phi: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&x| {
            let mut row = vec![0.0; spec.len()];
            spec.eval_into(x, &mut row);
            row
        })
        .collect();
    let log_weights: Vec<f64> = rule.weights.iter().map(|w| w.ln()).collect();
    let target = &moments.values;

    let mut lambdas = initial_multipliers(&moments.values, spec, support);
    let mut state = DualState::evaluate(&lambdas, target, &phi, &log_weights);
    let mut trace = vec![state.objective];

    for _ in 0..max_iter {
        if state.residual <= tol {
            break;
        }
        let step = newton_direction(&state);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = lambdas
                .iter()
                .zip(&step)
                .map(|(l, s)| l + scale * s)
                .collect();
            let next = DualState::evaluate(&trial, target, &phi, &log_weights);
            if next.objective.is_finite() {
                let flat = (next.objective - state.objective).abs()
                    <= 8.0 * f64::EPSILON * state.objective.abs().max(1.0);
                if next.objective < state.objective || (flat && next.residual < state.residual) {
                    accepted = Some((trial, next));
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some((trial, next)) => {
                lambdas = trial;
                state = next;
                trace.push(state.objective);
            }
            None => break,
        }
    }

    // a NaN residual also lands here
    if state.residual.is_nan() || state.residual > tol {
        return Err(MemdError::SolverDiverged {
            iterations: trace.len() - 1,
            residual: state.residual,
        });
    }
    let density = MaxEntDensity::from_parts(
        *support,
        spec.clone(),
        lambdas,
        state.log_partition,
        moments.clone(),
        tol,
    )?;
    Ok((density, trace))
}

/// Fits one marginal, choosing the closed form when one exists and
/// applying the smoothing and variance floors so that degenerate cells
/// (a feature that is constant or absent within a class) stay finite.
pub fn fit_marginal(
    moments: &MomentVector,
    spec: &FeatureFunctionSpec,
    support: &SupportSpec,
    options: &FitOptions,
) -> Result<MaxEntDensity> {
    match support {
        SupportSpec::HalfLineNonNegative if spec.is_exactly(&[1]) => {
            fit_exponential_halfline(moments, options.smoothing)
        }
        SupportSpec::RealLine if spec.is_exactly(&[1, 2]) => {
            fit_gaussian_realline(moments, options.variance_floor)
        }
        _ => {
            let floored = floor_moments(moments, spec, support, options)?;
            fit_numeric(&floored, spec, support, options.tol, options.max_iter)
        }
    }
}

/// Pulls moments off the boundary of the feasible set.
fn floor_moments(
    moments: &MomentVector,
    spec: &FeatureFunctionSpec,
    support: &SupportSpec,
    options: &FitOptions,
) -> Result<MomentVector> {
    let mut values = moments.values.clone();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(MemdError::InvalidMoment("non-finite moments".into()));
    }
    let first = spec.position(1);
    let second = spec.position(2);
    if let Some(i) = first {
        match *support {
            SupportSpec::Interval { lower, upper } => {
                let margin = options.smoothing * (upper - lower);
                values[i] = values[i].clamp(lower + margin, upper - margin);
            }
            SupportSpec::HalfLineNonNegative => {
                values[i] = values[i].max(options.smoothing);
            }
            SupportSpec::RealLine => {}
        }
    }
    if let (Some(i), Some(j)) = (first, second) {
        let mean = values[i];
        let mut variance = (values[j] - mean * mean).max(options.variance_floor);
        let ceiling = match *support {
            SupportSpec::Interval { lower, upper } => Some((upper - mean) * (mean - lower)),
            // the exponential sits on the boundary μ₂ = 2μ₁²
            SupportSpec::HalfLineNonNegative => Some(mean * mean),
            SupportSpec::RealLine => None,
        };
        if let Some(ceiling) = ceiling {
            variance = variance.min(ceiling * (1.0 - options.smoothing.max(1e-9)));
            variance = variance.max(ceiling * 1e-12);
        }
        values[j] = mean * mean + variance;
    } else if let Some(j) = second {
        values[j] = values[j].max(options.variance_floor);
    }
    Ok(MomentVector::new(values, moments.sample_count))
}

fn check_moment_hull(
    values: &[f64],
    spec: &FeatureFunctionSpec,
    support: &SupportSpec,
) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(MemdError::InvalidMoment("non-finite moments".into()));
    }
    let outside = |what: String| Err(MemdError::InvalidMoment(what));
    let first = spec.position(1).map(|i| values[i]);
    let second = spec.position(2).map(|i| values[i]);
    match *support {
        SupportSpec::Interval { lower, upper } => {
            if let Some(m) = first {
                if !(m > lower && m < upper) {
                    return outside(format!("mean {m} outside ({lower}, {upper})"));
                }
                if let Some(s) = second {
                    if s >= (lower + upper) * m - lower * upper {
                        return outside(format!(
                            "second moment {s} too large for mean {m} on [{lower}, {upper}]"
                        ));
                    }
                }
            }
        }
        SupportSpec::HalfLineNonNegative => {
            for (&v, &o) in values.iter().zip(spec.orders()) {
                if v <= 0.0 {
                    return outside(format!("moment of order {o} must be positive, got {v}"));
                }
            }
        }
        SupportSpec::RealLine => {
            for (&v, &o) in values.iter().zip(spec.orders()) {
                if o % 2 == 0 && v <= 0.0 {
                    return outside(format!(
                        "even moment of order {o} must be positive, got {v}"
                    ));
                }
            }
        }
    }
    if let (Some(m), Some(s)) = (first, second) {
        if s <= m * m {
            return outside(format!(
                "second moment {s} not above squared mean {}",
                m * m
            ));
        }
    }
    Ok(())
}

/// Location and length scale used to place quadrature panels.
fn location_hint(
    support: &SupportSpec,
    spec: &FeatureFunctionSpec,
    moments: &MomentVector,
) -> (f64, f64) {
    let mean = moments.order_value(spec, 1);
    let second = moments.order_value(spec, 2);
    let (center, scale) = match (mean, second) {
        (Some(m), Some(s)) => (m, (s - m * m).max(0.0).sqrt()),
        (Some(m), None) => match *support {
            SupportSpec::Interval { lower, upper } => (
                m,
                (m - lower)
                    .min(upper - m)
                    .max(0.0)
                    .min(0.25 * (upper - lower)),
            ),
            _ => (m, m.abs()),
        },
        (None, Some(s)) => (0.0, s.abs().sqrt()),
        (None, None) => (0.0, 1.0),
    };
    let fallback = match *support {
        SupportSpec::Interval { lower, upper } => 0.25 * (upper - lower),
        _ => 1.0,
    };
    let scale = if scale.is_finite() && scale > 0.0 {
        scale
    } else {
        fallback
    };
    (center, scale)
}

fn initial_multipliers(
    values: &[f64],
    spec: &FeatureFunctionSpec,
    support: &SupportSpec,
) -> Vec<f64> {
    let mut lambdas = vec![0.0; spec.len()];
    let first = spec.position(1);
    let second = spec.position(2);
    match *support {
        SupportSpec::Interval { lower, upper } => {
            if let (Some(i), None) = (first, second) {
                // truncated exponential asymptotics at either endpoint
                let m = values[i];
                lambdas[i] = 1.0 / (m - lower) - 1.0 / (upper - m);
                if spec.len() > 1 {
                    lambdas[i] = 0.0;
                }
            }
        }
        SupportSpec::HalfLineNonNegative => match (first, second) {
            (Some(i), None) => lambdas[i] = 1.0 / values[i],
            (_, Some(j)) => lambdas[j] = 1.0 / (2.0 * values[j]),
            _ => {}
        },
        SupportSpec::RealLine => match (first, second) {
            (Some(i), Some(j)) => {
                let variance = values[j] - values[i] * values[i];
                lambdas[i] = -values[i] / variance;
                lambdas[j] = 1.0 / (2.0 * variance);
            }
            (None, Some(j)) => lambdas[j] = 1.0 / (2.0 * values[j]),
            _ => {}
        },
    }
    lambdas
}

struct DualState {
    objective: f64,
    log_partition: f64,
    /// `E_λ[φ] − μ`
    gap: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    residual: f64,
}

impl DualState {
    fn evaluate(lambdas: &[f64], target: &[f64], phi: &[Vec<f64>], log_weights: &[f64]) -> Self {
        let l = lambdas.len();
        let exponents: Vec<f64> = phi
            .iter()
            .zip(log_weights)
            .map(|(row, lw)| lw - row.iter().zip(lambdas).map(|(p, l)| p * l).sum::<f64>())
            .collect();
        let peak = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return DualState {
                objective: f64::INFINITY,
                log_partition: f64::INFINITY,
                gap: vec![f64::INFINITY; l],
                covariance: vec![vec![0.0; l]; l],
                residual: f64::INFINITY,
            };
        }
        let probs: Vec<f64> = exponents.iter().map(|e| (e - peak).exp()).collect();
        let total: f64 = probs.iter().sum();
        let log_partition = peak + total.ln();

        let mut mean = vec![0.0; l];
        for (p, row) in probs.iter().zip(phi) {
            for (m, f) in mean.iter_mut().zip(row) {
                *m += p * f;
            }
        }
        mean.iter_mut().for_each(|m| *m /= total);
        let mut covariance = vec![vec![0.0; l]; l];
        for (p, row) in probs.iter().zip(phi) {
            for (a, cov_row) in covariance.iter_mut().enumerate() {
                for (b, c) in cov_row.iter_mut().enumerate() {
                    // same operand order for (a, b) and (b, a) keeps it symmetric
                    let (i, j) = (a.min(b), a.max(b));
                    *c += p * (row[i] - mean[i]) * (row[j] - mean[j]);
                }
            }
        }
        covariance.iter_mut().flatten().for_each(|c| *c /= total);
        let gap: Vec<f64> = mean.iter().zip(target).map(|(m, t)| m - t).collect();
        let residual = gap.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
        let objective = log_partition + lambdas.iter().zip(target).map(|(l, m)| l * m).sum::<f64>();
        DualState {
            objective,
            log_partition,
            gap,
            covariance,
            residual,
        }
    }
}

/// Solves `Cov · Δ = E[φ] − μ`, the Newton step for the dual.
fn newton_direction(state: &DualState) -> Vec<f64> {
    let l = state.gap.len();
    let hessian = DMatrix::from_fn(l, l, |a, b| state.covariance[a][b]);
    let rhs = DVector::from_column_slice(&state.gap);
    if let Some(chol) = hessian.clone().cholesky() {
        let step = chol.solve(&rhs);
        if step.iter().all(|s| s.is_finite()) {
            return step.iter().copied().collect();
        }
    }
    // diagonal fallback for a numerically singular covariance
    (0..l)
        .map(|a| {
            let h = hessian[(a, a)];
            if h > 0.0 {
                state.gap[a] / h
            } else {
                state.gap[a]
            }
        })
        .collect()
}
