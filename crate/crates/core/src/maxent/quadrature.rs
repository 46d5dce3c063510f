//! Gauss–Legendre quadrature and the composite rules used to integrate
//! maximum-entropy densities over their support.
//!
//! Bounded supports are split into panels that shrink geometrically toward
//! each endpoint and around a location hint, so densities that pile up at
//! an endpoint (large rates) or are much narrower than the support are
//! still resolved. Unbounded supports are truncated far into the tail of
//! the hinted scale.

use std::sync::OnceLock;

use super::SupportSpec;

/// Nodes per panel of the composite rule.
const PANEL_ORDER: usize = 20;
/// Endpoint grading stops at this fraction of the support width.
const ENDPOINT_GRADING_LEVELS: i32 = 34;
/// Panels around the location hint span `scale * 2^k` for `k` in this range.
const CENTER_GRADING: std::ops::RangeInclusive<i32> = -6..=6;
/// Half-line truncation, in units of the scale hint.
const HALF_LINE_SPAN: f64 = 64.0;
/// Real-line truncation, in units of the scale hint on each side.
const REAL_LINE_SPAN: f64 = 40.0;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

/// A fixed set of abscissae and weights on (a truncation of) a support.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Plain Gauss–Legendre rule mapped onto `[lower, upper]`.
    pub fn legendre(lower: f64, upper: f64, n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let half = 0.5 * (upper - lower);
        let mid = 0.5 * (upper + lower);
        QuadratureRule {
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|w| half * w).collect(),
        }
    }

    /// Composite rule over `support`, refined around `center` at length
    /// scale `scale`.
    pub fn for_support(support: &SupportSpec, center: f64, scale: f64) -> Self {
        let scale = if scale.is_finite() && scale > 0.0 {
            scale
        } else {
            1.0
        };
        let center = if center.is_finite() { center } else { 0.0 };
        let (lower, upper, grade_lower, grade_upper) = match *support {
            SupportSpec::Interval { lower, upper } => (lower, upper, true, true),
            SupportSpec::HalfLineNonNegative => {
                (0.0, center.max(0.0) + HALF_LINE_SPAN * scale, true, false)
            }
            SupportSpec::RealLine => (
                center - REAL_LINE_SPAN * scale,
                center + REAL_LINE_SPAN * scale,
                false,
                false,
            ),
        };
        let width = upper - lower;
        let mut breaks = vec![lower, upper];
        for level in 1..=ENDPOINT_GRADING_LEVELS {
            let offset = width * 0.5f64.powi(level);
            if grade_lower {
                breaks.push(lower + offset);
            }
            if grade_upper {
                breaks.push(upper - offset);
            }
        }
        if !grade_lower && !grade_upper {
            breaks.push(center);
        }
        for k in CENTER_GRADING {
            let offset = scale * 2f64.powi(k);
            breaks.push(center - offset);
            breaks.push(center + offset);
        }
        if (lower..=upper).contains(&center) {
            breaks.push(center);
        }
        breaks.retain(|b| b.is_finite() && *b >= lower && *b <= upper);
        breaks.sort_by(|a, b| a.total_cmp(b));
        let min_width = width * 1e-15;
        breaks.dedup_by(|b, a| (*b - *a).abs() <= min_width);
        if let Some(last) = breaks.last_mut() {
            *last = upper;
        }

        let (x, w) = panel_rule();
        let panels = breaks.len().saturating_sub(1);
        let mut nodes = Vec::with_capacity(panels * x.len());
        let mut weights = Vec::with_capacity(panels * x.len());
        for pair in breaks.windows(2) {
            let half = 0.5 * (pair[1] - pair[0]);
            let mid = 0.5 * (pair[1] + pair[0]);
            for (t, wt) in x.iter().zip(w) {
                nodes.push(mid + half * t);
                weights.push(half * wt);
            }
        }
        QuadratureRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}
