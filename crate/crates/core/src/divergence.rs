//! Divergences between fitted marginals and between discrete distributions.
//!
//! For two maximum-entropy densities built on the same feature functions
//! the KL and Jeffreys divergences reduce to inner products of multiplier
//! and moment differences, so ranking never integrates anything. The
//! quadrature and discrete routines here are the independent references
//! those closed forms are checked against.

use serde::{Deserialize, Serialize};

use crate::error::{MemdError, Result};
use crate::maxent::quadrature::QuadratureRule;
use crate::maxent::MaxEntDensity;

const SUM_TOLERANCE: f64 = 1e-12;

/// Mixture weights `π₁..π_M`, each in `[0, 1]`, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(MemdError::InvalidConfig("empty weight vector".into()));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(MemdError::InvalidConfig(format!(
                "weights must lie in [0, 1]: {weights:?}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(MemdError::InvalidConfig(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(WeightVector { weights })
    }

    /// Rescales non-negative raw weights to sum to one.
    pub fn normalized(raw: &[f64]) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        let valid = |w: f64| w.is_finite() && w >= 0.0;
        if !(valid(total) && total > 0.0) || !raw.iter().all(|&w| valid(w)) {
            return Err(MemdError::InvalidConfig(format!(
                "cannot normalize weights {raw:?}"
            )));
        }
        let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        // absorb rounding so the sum invariant holds tightly
        let drift: f64 = 1.0 - weights.iter().sum::<f64>();
        if let Some(max) = weights.iter_mut().max_by(|a, b| a.total_cmp(b)) {
            *max = (*max + drift).clamp(0.0, 1.0);
        }
        Self::new(weights)
    }

    pub fn uniform(m: usize) -> Result<Self> {
        Self::normalized(&vec![1.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = MemdError;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.weights
    }
}

/// Probability vector over a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probabilities: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.is_empty() || !probabilities.iter().all(|&p| p >= 0.0) {
            return Err(MemdError::InvalidConfig(
                "probabilities must be non-negative and non-empty".into(),
            ));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(MemdError::InvalidConfig(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(DiscreteDistribution { probabilities })
    }

    pub fn normalized(raw: &[f64]) -> Result<Self> {
        let w = WeightVector::normalized(raw)?;
        Self::new(w.into())
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }
}

fn check_compatible(p: &MaxEntDensity, q: &MaxEntDensity) -> Result<()> {
    if p.is_compatible(q) {
        Ok(())
    } else {
        Err(MemdError::IncompatibleDensities(format!(
            "{:?} with orders {:?} vs {:?} with orders {:?}",
            p.support(),
            p.spec().orders(),
            q.support(),
            q.spec().orders()
        )))
    }
}

/// `KL(p ‖ q) = (λ₀' − λ₀) + Σ_k (λ_k' − λ_k) μ_k` with primes on `q` and
/// `μ` the moments of `p`. Clamped at zero.
pub fn kl_closed_form(p: &MaxEntDensity, q: &MaxEntDensity) -> Result<f64> {
    check_compatible(p, q)?;
    let inner: f64 = q
        .lambdas()
        .iter()
        .zip(p.lambdas())
        .zip(&p.moments().values)
        .map(|((lq, lp), mu)| (lq - lp) * mu)
        .sum();
    Ok((q.log_normalizer() - p.log_normalizer() + inner).max(0.0))
}

/// Jeffreys divergence `Σ_k (λ_k' − λ_k)(μ_k − μ_k')`.
pub fn j_divergence(p: &MaxEntDensity, q: &MaxEntDensity) -> Result<f64> {
    check_compatible(p, q)?;
    let value: f64 = q
        .lambdas()
        .iter()
        .zip(p.lambdas())
        .zip(p.moments().values.iter().zip(&q.moments().values))
        .map(|((lq, lp), (mp, mq))| (lq - lp) * (mp - mq))
        .sum();
    Ok(value.max(0.0))
}

/// `∫ p ln(p / q)` by quadrature over the region where `p` has its mass.
pub fn kl_numeric(p: &MaxEntDensity, q: &MaxEntDensity) -> Result<f64> {
    let rule = p.quadrature_rule();
    kl_numeric_with(p, q, &rule)
}

/// [`kl_numeric`] with a caller-chosen rule.
pub fn kl_numeric_with(p: &MaxEntDensity, q: &MaxEntDensity, rule: &QuadratureRule) -> Result<f64> {
    check_compatible(p, q)?;
    Ok(rule.integrate(|x| {
        let lp = p.log_density(x);
        if lp == f64::NEG_INFINITY {
            return 0.0;
        }
        lp.exp() * (lp - q.log_density(x))
    }))
}

/// `Σ_s p_s ln(p_s / q_s)` with `0 ln 0 = 0`.
pub fn kl_discrete(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(MemdError::InvalidConfig(format!(
            "support sizes differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    Ok(p.probabilities
        .iter()
        .zip(&q.probabilities)
        .map(|(&a, &b)| {
            if a == 0.0 {
                0.0
            } else if b == 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum())
}

fn check_discrete_family(ps: &[DiscreteDistribution], w: &WeightVector) -> Result<usize> {
    if ps.len() != w.len() {
        return Err(MemdError::InvalidConfig(format!(
            "{} distributions but {} weights",
            ps.len(),
            w.len()
        )));
    }
    let size = ps.first().map_or(0, DiscreteDistribution::len);
    if ps.iter().any(|p| p.len() != size) {
        return Err(MemdError::InvalidConfig(
            "distributions have different support sizes".into(),
        ));
    }
    Ok(size)
}

/// Jensen–Shannon divergence `Σ_i π_i KL(P_i ‖ P̄)`, `P̄ = Σ_i π_i P_i`.
pub fn js_divergence_discrete(ps: &[DiscreteDistribution], w: &WeightVector) -> Result<f64> {
    let size = check_discrete_family(ps, w)?;
    let mixture: Vec<f64> = (0..size)
        .map(|s| {
            ps.iter()
                .zip(w.as_slice())
                .map(|(p, pi)| pi * p.probabilities[s])
                .sum()
        })
        .collect();
    let mut total = 0.0;
    for (p, &pi) in ps.iter().zip(w.as_slice()) {
        if pi == 0.0 {
            continue;
        }
        for (&a, &m) in p.probabilities.iter().zip(&mixture) {
            if a > 0.0 {
                total += pi * a * (a / m).ln();
            }
        }
    }
    Ok(total.max(0.0))
}

/// Geometric-mean Jensen–Shannon divergence of discrete distributions in
/// its pairwise form `Σ_i Σ_{j≠i} π_i π_j KL(P_i ‖ P_j)`.
pub fn js_gm_discrete(ps: &[DiscreteDistribution], w: &WeightVector) -> Result<f64> {
    check_discrete_family(ps, w)?;
    let pi = w.as_slice();
    let mut total = 0.0;
    for i in 0..ps.len() {
        for j in 0..ps.len() {
            if i != j && pi[i] > 0.0 && pi[j] > 0.0 {
                total += pi[i] * pi[j] * kl_discrete(&ps[i], &ps[j])?;
            }
        }
    }
    Ok(total)
}

/// Mutual information of a joint table `joint[z][x]`.
pub fn mutual_information_discrete(joint: &[Vec<f64>]) -> f64 {
    let rows: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let width = joint.iter().map(Vec::len).max().unwrap_or(0);
    let cols: Vec<f64> = (0..width)
        .map(|x| joint.iter().map(|r| r.get(x).copied().unwrap_or(0.0)).sum())
        .collect();
    let mut total = 0.0;
    for (row, &pz) in joint.iter().zip(&rows) {
        for (&pzx, &px) in row.iter().zip(&cols) {
            if pzx > 0.0 {
                total += pzx * (pzx / (pz * px)).ln();
            }
        }
    }
    total
}

/// Joint table `π_z P_z(x)` induced by a labelled mixture.
pub fn induced_joint(ps: &[DiscreteDistribution], w: &WeightVector) -> Result<Vec<Vec<f64>>> {
    check_discrete_family(ps, w)?;
    Ok(ps
        .iter()
        .zip(w.as_slice())
        .map(|(p, pi)| p.probabilities.iter().map(|v| pi * v).collect())
        .collect())
}

/// `½ Σ_i Σ_{j≠i} π_i π_j J(P_i ‖ P_j)`.
pub fn js_gm(ps: &[MaxEntDensity], w: &WeightVector) -> Result<f64> {
    if ps.len() != w.len() {
        return Err(MemdError::InvalidConfig(format!(
            "{} densities but {} weights",
            ps.len(),
            w.len()
        )));
    }
    let pi = w.as_slice();
    let mut total = 0.0;
    for i in 0..ps.len() {
        for j in (i + 1)..ps.len() {
            // each unordered pair appears twice in the double sum
            total += pi[i] * pi[j] * j_divergence(&ps[i], &ps[j])?;
        }
    }
    Ok(total)
}
