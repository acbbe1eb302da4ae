//! Gauss–Legendre rules and geometrically graded composite quadrature.
//!
//! The graded rules cluster panels toward an endpoint where the integrand has
//! an integrable power or logarithmic singularity, or a near-singularity at a
//! known distance outside the interval.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on P_n starting from the Chebyshev-like guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Pushes mapped (node, weight) pairs for [a, b] into `out`.
    pub fn push_mapped(&self, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            out.push((mid + half * x, w * half));
        }
    }
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
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gl2() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(2))
}

pub fn gl4() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(4))
}

pub fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

pub fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

pub fn gl32() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(32))
}

/// Number of halving levels needed so that an endpoint singularity of
/// strength `exponent` (integrand ~ t^exponent, exponent > -1) leaves an
/// uncovered piece of relative size below roughly 1e-15.
pub fn levels_for_exponent(exponent: f64) -> usize {
    let s = (exponent + 1.0).max(1e-3);
    ((50.0 / s).ceil() as usize).clamp(4, 2000)
}

/// Composite rule on [a, b] with panels growing geometrically away from `a`:
/// [a, a+first], [a+first, a+2 first], [a+2 first, a+4 first], ...
/// The first panel has width `first` (clamped to the interval).
pub fn graded_from_left(a: f64, b: f64, first: f64, rule: &GaussLegendre) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let len = b - a;
    if len <= 0.0 {
        return out;
    }
    let mut edge = first.min(len).max(len * 1e-300);
    rule.push_mapped(a, a + edge, &mut out);
    while edge < len {
        let next = (2.0 * edge).min(len);
        if len - next < 0.25 * (next - edge) {
            rule.push_mapped(a + edge, b, &mut out);
            break;
        }
        rule.push_mapped(a + edge, a + next, &mut out);
        edge = next;
    }
    out
}

/// Mirror image of [`graded_from_left`]: panels shrink toward `b`.
pub fn graded_from_right(a: f64, b: f64, first: f64, rule: &GaussLegendre) -> Vec<(f64, f64)> {
    graded_from_left(0.0, b - a, first, rule)
        .into_iter()
        .map(|(x, w)| (b - x, w))
        .collect()
}

/// Graded rule for an endpoint singularity of known strength at `a`.
pub fn singular_left(a: f64, b: f64, exponent: f64) -> Vec<(f64, f64)> {
    let levels = levels_for_exponent(exponent);
    let first = ((b - a) * 0.5f64.powi(levels as i32)).max(16.0 * f64::EPSILON * a.abs());
    graded_from_left(a, b, first, gl8())
}

pub fn singular_right(a: f64, b: f64, exponent: f64) -> Vec<(f64, f64)> {
    let levels = levels_for_exponent(exponent);
    let first = ((b - a) * 0.5f64.powi(levels as i32)).max(16.0 * f64::EPSILON * b.abs());
    graded_from_right(a, b, first, gl8())
}

/// Integrates `f` over [a, b] with a singularity of strength `exponent` at
/// the left endpoint and, optionally, another at the right endpoint.
pub fn integrate_singular<F: FnMut(f64) -> f64>(
    a: f64,
    b: f64,
    left: Option<f64>,
    right: Option<f64>,
    mut f: F,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let nodes = match (left, right) {
        (Some(el), Some(er)) => {
            let mid = 0.5 * (a + b);
            let mut v = singular_left(a, mid, el);
            v.extend(singular_right(mid, b, er));
            v
        }
        (Some(el), None) => singular_left(a, b, el),
        (None, Some(er)) => singular_right(a, b, er),
        (None, None) => {
            let mut v = Vec::new();
            gl16().push_mapped(a, b, &mut v);
            v
        }
    };
    nodes.into_iter().map(|(x, w)| w * f(x)).sum()
}

/// Fixed-order pairwise summation; deterministic for a given slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [2, 4, 8, 16, 32] {
            let rule = GaussLegendre::new(n);
            let sum: f64 = rule.weights.iter().sum();
            assert!((sum - 2.0).abs() < 1e-14, "n={n} weights sum {sum}");
            let deg = 2 * n - 1;
            let got = rule.integrate(0.0, 1.0, |x| x.powi(deg as i32));
            assert!((got - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn graded_rule_handles_endpoint_power_singularity() {
        for p in [-0.9, -0.5, 0.3] {
            let got = integrate_singular(0.0, 2.0, Some(p), None, |x| x.powf(p));
            let exact = 2f64.powf(p + 1.0) / (p + 1.0);
            assert!((got - exact).abs() < 1e-9 * exact, "p={p}: {got} vs {exact}");
        }
        let got = integrate_singular(0.0, 1.0, Some(0.0), Some(0.0), |x| x.ln() + (1.0 - x).ln());
        assert!((got + 2.0).abs() < 1e-10, "{got}");
    }

    #[test]
    fn graded_panels_cover_interval() {
        let nodes = graded_from_right(1.0, 3.0, 1e-4, gl8());
        let total: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((total - 2.0).abs() < 1e-13);
        assert!(nodes.iter().all(|(x, _)| *x > 1.0 && *x < 3.0));
    }

    #[test]
    fn pairwise_sum_matches_naive_on_small_inputs() {
        let v: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 4950.0);
    }
}
