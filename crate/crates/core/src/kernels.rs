//! Interaction kernels W(x) = w(|x|) and internal-energy densities U.

use std::path::Path;
use std::sync::Arc;

use crate::{Error, Result};

/// Radial interaction profile.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// w(s) = s^beta / beta. `PowerLaw(0.0)` is treated as the logarithm.
    PowerLaw(f64),
    /// w(s) = log s.
    Logarithmic,
    /// Tabulated profile with a cubic Hermite interpolant.
    Tabulated(Arc<TabulatedKernel>),
}

/// Limit of w'(s) s as s -> infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    Finite(f64),
    PlusInfinity,
    /// Finite data cannot decide the limit.
    Undetermined,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Shape {
    Power(f64),
    Log,
    Table,
}

impl KernelSpec {
    /// Power law, mapping beta = 0 to the logarithm.
    pub fn power(beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be finite, got {beta}")));
        }
        Ok(if beta == 0.0 { KernelSpec::Logarithmic } else { KernelSpec::PowerLaw(beta) })
    }

    pub fn tabulated(table: TabulatedKernel) -> Self {
        KernelSpec::Tabulated(Arc::new(table))
    }

    pub(crate) fn shape(&self) -> Shape {
        match self {
            KernelSpec::PowerLaw(b) if *b != 0.0 => Shape::Power(*b),
            KernelSpec::PowerLaw(_) | KernelSpec::Logarithmic => Shape::Log,
            KernelSpec::Tabulated(_) => Shape::Table,
        }
    }

    /// Homogeneity degree: Some(beta) for power laws, Some(0) for the log.
    pub fn homogeneity(&self) -> Option<f64> {
        match self.shape() {
            Shape::Power(b) => Some(b),
            Shape::Log => Some(0.0),
            Shape::Table => None,
        }
    }

    /// Largest admissible argument (the table cap for tabulated profiles).
    pub fn reach(&self) -> f64 {
        match self {
            KernelSpec::Tabulated(t) => t.r_max(),
            _ => f64::INFINITY,
        }
    }

    pub(crate) fn check_reach(&self, s: f64) -> Result<()> {
        let r_max = self.reach();
        if s > r_max * (1.0 + 1e-12) {
            return Err(Error::BeyondTable { s, r_max });
        }
        Ok(())
    }

    /// W(x) is locally integrable in R^d.
    pub fn check_integrable(&self, d: usize) -> Result<()> {
        if let Shape::Power(b) = self.shape() {
            if b <= -(d as f64) {
                return Err(Error::NonIntegrableKernel { beta: b, d });
            }
        }
        Ok(())
    }

    /// w(s), with +∞ at s = 0 for beta < 0 and −∞ for the logarithm.
    pub fn kernel_value(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::InvalidParameter(format!("kernel argument must be nonnegative, got {s}")));
        }
        self.check_reach(s)?;
        Ok(self.w(s))
    }

    /// Unchecked evaluation; callers have verified the reach.
    pub(crate) fn w(&self, s: f64) -> f64 {
        match self {
            KernelSpec::Tabulated(t) => t.value(s),
            _ => match self.shape() {
                Shape::Power(b) => {
                    if s == 0.0 {
                        if b > 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    } else {
                        s.powf(b) / b
                    }
                }
                _ => s.ln(),
            },
        }
    }

    /// w(0) in extended arithmetic.
    pub fn value_at_origin(&self) -> f64 {
        self.w(0.0)
    }

    /// w'(s) for s > 0.
    pub fn derivative(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("derivative needs s > 0, got {s}")));
        }
        self.check_reach(s)?;
        Ok(self.dw(s))
    }

    pub(crate) fn dw(&self, s: f64) -> f64 {
        match self {
            KernelSpec::Tabulated(t) => t.derivative(s),
            _ => match self.shape() {
                Shape::Power(b) => s.powf(b - 1.0),
                _ => 1.0 / s,
            },
        }
    }

    /// w'(s) s, which equals ∇W(x)·x at |x| = s.
    pub fn radial_virial(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::InvalidParameter(format!("radial virial needs s > 0, got {s}")));
        }
        self.check_reach(s)?;
        Ok(self.virial(s))
    }

    pub(crate) fn virial(&self, s: f64) -> f64 {
        match self.shape() {
            Shape::Power(b) => s.powf(b),
            Shape::Log => 1.0,
            Shape::Table => self.dw(s) * s,
        }
    }

    /// L = lim w'(s) s.
    pub fn asymptotic_slope(&self) -> Slope {
        match self {
            KernelSpec::Tabulated(t) => t.asymptotic_slope(),
            _ => match self.shape() {
                Shape::Power(b) if b > 0.0 => Slope::PlusInfinity,
                Shape::Power(_) => Slope::Finite(0.0),
                _ => Slope::Finite(1.0),
            },
        }
    }

    /// ∫_0^t w, finite whenever w is integrable near 0 in one dimension.
    pub(crate) fn first_antiderivative(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self {
            KernelSpec::Tabulated(k) => k.first_integral(t),
            _ => match self.shape() {
                Shape::Power(b) => t.powf(b + 1.0) / (b * (b + 1.0)),
                _ => t * t.ln() - t,
            },
        }
    }

    /// ∫_0^t ∫_0^u w.
    pub(crate) fn second_antiderivative(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self {
            KernelSpec::Tabulated(k) => k.second_integral(t),
            _ => match self.shape() {
                Shape::Power(b) => t.powf(b + 2.0) / (b * (b + 1.0) * (b + 2.0)),
                _ => 0.5 * t * t * t.ln() - 0.75 * t * t,
            },
        }
    }

    /// (inf, sup) of w over [0, s_max]; infinite bounds for unbounded kernels.
    pub fn range_on(&self, s_max: f64) -> Result<(f64, f64)> {
        self.check_reach(s_max)?;
        Ok(match self {
            KernelSpec::Tabulated(t) => t.range_on(s_max),
            _ => match self.shape() {
                Shape::Power(b) if b > 0.0 => (0.0, self.w(s_max)),
                Shape::Power(_) => (self.w(s_max), f64::INFINITY),
                _ => (f64::NEG_INFINITY, self.w(s_max)),
            },
        })
    }
}

/// Kernel given by samples (r_j, w_j), r_0 = 0, with derivatives from
/// fourth-order finite differences and a C¹ cubic Hermite interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl TabulatedKernel {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidParameter("table columns differ in length".into()));
        }
        if nodes.len() < 5 {
            return Err(Error::InvalidParameter(format!("table needs at least 5 nodes, got {}", nodes.len())));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidParameter(format!("table must start at r = 0, starts at {}", nodes[0])));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes.iter().any(|r| !r.is_finite()) {
            return Err(Error::InvalidParameter("table radii must be finite and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("table values must be finite".into()));
        }
        let n = nodes.len();
        let slopes: Vec<f64> = (0..n)
            .map(|j| {
                let lo = j.saturating_sub(2).min(n - 5);
                let stencil = &nodes[lo..lo + 5];
                let weights = fornberg_first_derivative(nodes[j], stencil);
                weights.iter().zip(&values[lo..lo + 5]).map(|(c, v)| c * v).sum()
            })
            .collect();
        let mut first = vec![0.0; n];
        let mut second = vec![0.0; n];
        for j in 0..n - 1 {
            let h = nodes[j + 1] - nodes[j];
            let (i1, i2) = hermite_integrals(values[j], slopes[j], values[j + 1], slopes[j + 1], h, 1.0);
            first[j + 1] = first[j] + i1;
            second[j + 1] = second[j] + first[j] * h + i2;
        }
        Ok(Self { nodes, values, slopes, first, second })
    }

    /// Reads a two-column CSV with header `r,w`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || headers[0].trim() != "r" || headers[1].trim() != "w" {
            return Err(Error::InvalidParameter(format!("{}: expected header `r,w`", path.display())));
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let field = |k: usize| -> Result<f64> {
                rec.get(k).unwrap_or("").trim().parse::<f64>().map_err(|_| Error::Config {
                    line: i + 2,
                    message: format!("{}: not a number", path.display()),
                })
            };
            nodes.push(field(0)?);
            values.push(field(1)?);
        }
        Self::new(nodes, values)
    }

    /// Samples `f` at the given nodes.
    pub fn from_fn<F: Fn(f64) -> f64>(nodes: Vec<f64>, f: F) -> Result<Self> {
        let values = nodes.iter().map(|&r| f(r)).collect();
        Self::new(nodes, values)
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Finite-difference derivatives at the nodes.
    pub fn node_slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn locate(&self, s: f64) -> (usize, f64, f64) {
        let n = self.nodes.len();
        let j = self.nodes.partition_point(|&r| r <= s).saturating_sub(1).min(n - 2);
        let h = self.nodes[j + 1] - self.nodes[j];
        (j, h, (s - self.nodes[j]) / h)
    }

    pub fn value(&self, s: f64) -> f64 {
        if s > self.r_max() * (1.0 + 1e-12) {
            return f64::NAN;
        }
        let (j, h, u) = self.locate(s);
        let (u2, u3) = (u * u, u * u * u);
        self.values[j] * (2.0 * u3 - 3.0 * u2 + 1.0)
            + h * self.slopes[j] * (u3 - 2.0 * u2 + u)
            + self.values[j + 1] * (-2.0 * u3 + 3.0 * u2)
            + h * self.slopes[j + 1] * (u3 - u2)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        if s > self.r_max() * (1.0 + 1e-12) {
            return f64::NAN;
        }
        let (j, h, u) = self.locate(s);
        let u2 = u * u;
        (self.values[j] * (6.0 * u2 - 6.0 * u) + self.values[j + 1] * (-6.0 * u2 + 6.0 * u)) / h
            + self.slopes[j] * (3.0 * u2 - 4.0 * u + 1.0)
            + self.slopes[j + 1] * (3.0 * u2 - 2.0 * u)
    }

    fn first_integral(&self, s: f64) -> f64 {
        if s > self.r_max() * (1.0 + 1e-12) {
            return f64::NAN;
        }
        let (j, h, u) = self.locate(s);
        let (i1, _) = hermite_integrals(self.values[j], self.slopes[j], self.values[j + 1], self.slopes[j + 1], h, u);
        self.first[j] + i1
    }

    fn second_integral(&self, s: f64) -> f64 {
        if s > self.r_max() * (1.0 + 1e-12) {
            return f64::NAN;
        }
        let (j, h, u) = self.locate(s);
        let (_, i2) = hermite_integrals(self.values[j], self.slopes[j], self.values[j + 1], self.slopes[j + 1], h, u);
        self.second[j] + self.first[j] * (s - self.nodes[j]) + i2
    }

    /// Richardson extrapolation of w'(s) s over the last decade of the table,
    /// assuming w'(s) s = L + c/s + ….
    pub fn asymptotic_slope(&self) -> Slope {
        let top = self.r_max();
        let lo = (top / 10.0).max(self.nodes[1]);
        let samples: Vec<(f64, f64)> = (0..9)
            .map(|k| {
                let s = lo * (top / lo).powf(k as f64 / 8.0);
                (s, self.derivative(s) * s)
            })
            .collect();
        let estimates: Vec<f64> =
            samples.windows(2).map(|p| (p[1].0 * p[1].1 - p[0].0 * p[0].1) / (p[1].0 - p[0].0)).collect();
        let l = *estimates.last().unwrap();
        let lo_e = estimates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi_e = estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !l.is_finite() || hi_e - lo_e > 1e-3 * l.abs().max(1.0) {
            Slope::Undetermined
        } else {
            Slope::Finite(l)
        }
    }

    /// (inf, sup) of the interpolant over [0, s_max], sampled at the nodes
    /// and at interior points of each interval.
    fn range_on(&self, s_max: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut visit = |v: f64| {
            lo = lo.min(v);
            hi = hi.max(v);
        };
        for j in 0..self.nodes.len() - 1 {
            let a = self.nodes[j];
            if a > s_max {
                break;
            }
            let b = self.nodes[j + 1].min(s_max);
            for k in 0..8 {
                visit(self.value(a + (b - a) * k as f64 / 8.0));
            }
        }
        visit(self.value(s_max));
        (lo, hi)
    }
}

/// ∫_0^u and ∫_0^u∫_0^t of the Hermite cubic on an interval of width h,
/// in the local variable u ∈ [0, 1].
fn hermite_integrals(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, u: f64) -> (f64, f64) {
    let (u2, u3, u4, u5) = (u * u, u * u * u, u.powi(4), u.powi(5));
    let single = y0 * (0.5 * u4 - u3 + u)
        + h * d0 * (0.25 * u4 - 2.0 * u3 / 3.0 + 0.5 * u2)
        + y1 * (-0.5 * u4 + u3)
        + h * d1 * (0.25 * u4 - u3 / 3.0);
    let double = y0 * (u5 / 10.0 - 0.25 * u4 + 0.5 * u2)
        + h * d0 * (u5 / 20.0 - u4 / 6.0 + u3 / 6.0)
        + y1 * (-u5 / 10.0 + 0.25 * u4)
        + h * d1 * (u5 / 20.0 - u4 / 12.0);
    (h * single, h * h * double)
}

/// Fornberg weights for the first derivative at `x0` on arbitrary nodes.
fn fornberg_first_derivative(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    // c[j][k]: weight of node j for derivative order k (k = 0, 1).
    let mut c = vec![[0.0f64; 2]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Internal-energy density U.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropySpec {
    /// U(r) = r^m / (m - 1), m > 0, m ≠ 1.
    Power(f64),
    /// U(r) = r log r.
    Linear,
}

impl EntropySpec {
    pub fn power(m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) || m == 1.0 {
            return Err(Error::InvalidParameter(format!("entropy exponent must be positive and not 1, got {m}")));
        }
        Ok(EntropySpec::Power(m))
    }

    /// Exponent m, with 1 for the linear case.
    pub fn exponent(&self) -> f64 {
        match self {
            EntropySpec::Power(m) => *m,
            EntropySpec::Linear => 1.0,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        match self {
            EntropySpec::Power(m) => r.powf(*m) / (m - 1.0),
            EntropySpec::Linear => r * r.ln(),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            EntropySpec::Power(m) => m * r.powf(m - 1.0) / (m - 1.0),
            EntropySpec::Linear => 1.0 + r.ln(),
        }
    }

    /// P(r) = r U'(r) - U(r).
    pub fn pressure(&self, r: f64) -> f64 {
        match self {
            EntropySpec::Power(m) => {
                if r == 0.0 {
                    0.0
                } else {
                    r.powf(*m)
                }
            }
            EntropySpec::Linear => r,
        }
    }

    /// limsup U(r)/r as r -> ∞, the cost per unit of singular mass.
    pub fn singular_slope(&self) -> f64 {
        match self {
            EntropySpec::Power(m) if *m < 1.0 => 0.0,
            _ => f64::INFINITY,
        }
    }

    /// u(r) = r^d U(r^{-d}), the entropy of the uniform ball of volume r^d.
    pub fn mccann_u(&self, d: usize, r: f64) -> Result<f64> {
        check_radius(r)?;
        let d = d as f64;
        Ok(match self {
            EntropySpec::Power(m) => r.powf((1.0 - m) * d) / (m - 1.0),
            EntropySpec::Linear => -d * r.ln(),
        })
    }

    /// v(r) = -r u'(r).
    pub fn scaling_v(&self, d: usize, r: f64) -> Result<f64> {
        check_radius(r)?;
        let d = d as f64;
        Ok(match self {
            EntropySpec::Power(m) => d * r.powf((1.0 - m) * d),
            EntropySpec::Linear => d,
        })
    }
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("scaling argument must be positive, got {r}")));
    }
    Ok(())
}

/// Log-spaced table nodes: 0, then `per_decade` points per decade on [lo, hi].
pub fn log_nodes(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    let mut v = Vec::with_capacity(n + 2);
    v.push(0.0);
    for k in 0..=n {
        v.push(lo * (hi / lo).powf(k as f64 / n as f64));
    }
    v
}
