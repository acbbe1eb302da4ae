//! Dilation rays through uniform balls, the regime classifier, and the
//! dilation optimum for the slow-diffusion existence region.

use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dyadic::{certify_unbounded, DEFAULT_K_MAX};
use crate::energy::{ball_interaction, ball_virial, entropy_energy, interaction_energy};
use crate::kernels::{EntropySpec, KernelSpec, Shape, Slope};
use crate::measures::RadialDensity;
use crate::{check_dimension, unit_ball_volume, Error, Result};

/// Tolerance for deciding that ε sits exactly on a critical value.
pub const CRITICAL_TOL: f64 = 1e-9;
/// Tolerance for β sitting on the line β = d(1 - m).
const LINE_TOL: f64 = 1e-12;
/// Energy level a dyadic certificate must reach.
pub const CERTIFICATE_BOUND: f64 = 1e3;
const GRID_POINTS: usize = 500;
const GRID_LO: f64 = 1e-6;
const GRID_HI: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    UnboundedBelowAtInfinity,
    UnboundedBelowAtZero,
    MinimizerExists,
    Critical { epsilon_c: f64 },
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::UnboundedBelowAtInfinity => write!(f, "UnboundedBelowAtInfinity"),
            Verdict::UnboundedBelowAtZero => write!(f, "UnboundedBelowAtZero"),
            Verdict::MinimizerExists => write!(f, "MinimizerExists"),
            Verdict::Critical { epsilon_c } => write!(f, "Critical(epsilon_c={epsilon_c:.16e})"),
            Verdict::Inconclusive => write!(f, "Inconclusive"),
        }
    }
}

/// A verdict with the evidence behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeVerdict {
    pub verdict: Verdict,
    pub trace: String,
}

impl RegimeVerdict {
    fn new(verdict: Verdict, trace: String) -> Self {
        RegimeVerdict { verdict, trace }
    }
}

/// `n` log-spaced points on [lo, hi], endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || n < 2 {
        return Err(Error::InvalidParameter(format!("log grid needs 0 < lo < hi and n >= 2, got [{lo}, {hi}], n = {n}")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

fn check_eps(epsilon: f64) -> Result<()> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be finite and non-negative, got {epsilon}")));
    }
    Ok(())
}

fn ball_radius_scale(d: usize) -> f64 {
    unit_ball_volume(d).powf(1.0 / d as f64)
}

/// E_ε along the ray of normalized uniform balls B_r, one value per radius.
pub fn dilation_energy_scan(
    kernel: &KernelSpec,
    entropy: &EntropySpec,
    epsilon: f64,
    d: usize,
    r_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    check_dimension(d)?;
    check_eps(epsilon)?;
    kernel.check_integrable(d)?;
    if r_grid.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter("scan radii must be positive and finite".into()));
    }
    if r_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("scan radii must be sorted".into()));
    }
    let scale = ball_radius_scale(d);
    let entropy_at = |r: f64| -> Result<f64> {
        if epsilon == 0.0 {
            Ok(0.0)
        } else {
            Ok(epsilon * entropy.mccann_u(d, r * scale)?)
        }
    };
    match kernel.shape() {
        Shape::Power(b) => {
            let unit = ball_interaction(kernel, d, 1.0)?;
            r_grid.iter().map(|&r| Ok((r, r.powf(b) * unit + entropy_at(r)?))).collect()
        }
        Shape::Log => {
            let unit = ball_interaction(kernel, d, 1.0)?;
            r_grid.iter().map(|&r| Ok((r, unit + 0.5 * r.ln() + entropy_at(r)?))).collect()
        }
        Shape::Table => r_grid
            .par_iter()
            .map(|&r| Ok((r, ball_interaction(kernel, d, r)? + entropy_at(r)?)))
            .collect(),
    }
}

/// d/dr E_ε(ρ_r) = (1/r) [ (1/2)⟨∇W(z)·z⟩ over B_r × B_r − ε v(r ω_d^{1/d}) ].
pub fn dilation_derivative(kernel: &KernelSpec, entropy: &EntropySpec, epsilon: f64, d: usize, r: f64) -> Result<f64> {
    check_dimension(d)?;
    check_eps(epsilon)?;
    kernel.check_integrable(d)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation radius must be positive, got {r}")));
    }
    let virial = match kernel.shape() {
        Shape::Power(b) => b * r.powf(b) * ball_interaction(kernel, d, 1.0)?,
        Shape::Log => 0.5,
        Shape::Table => ball_virial(kernel, d, r)?,
    };
    let pressure = if epsilon == 0.0 { 0.0 } else { epsilon * entropy.scaling_v(d, r * ball_radius_scale(d))? };
    Ok((virial - pressure) / r)
}

/// Threshold 2^{β-1} / (d ω_d^{1-m}) separating the two sides of the
/// fair-competition line β = d(1 - m).
pub fn fair_competition_threshold(beta: f64, m: f64, d: usize) -> f64 {
    2f64.powf(beta - 1.0) / (d as f64 * unit_ball_volume(d).powf(1.0 - m))
}

/// Existence / non-existence verdict for E_ε.
pub fn classify_regime(kernel: &KernelSpec, entropy: &EntropySpec, epsilon: f64, d: usize) -> RegimeVerdict {
    let mut trace = String::new();
    if d == 0 || !(epsilon > 0.0 && epsilon.is_finite()) {
        let _ = write!(trace, "unsupported input: d = {d}, epsilon = {epsilon}");
        return RegimeVerdict::new(Verdict::Inconclusive, trace);
    }
    if let Err(e) = kernel.check_integrable(d) {
        let _ = write!(trace, "{e}");
        return RegimeVerdict::new(Verdict::Inconclusive, trace);
    }
    match (kernel.shape(), entropy) {
        (Shape::Log, EntropySpec::Linear) => classify_log_linear(epsilon, d, trace),
        (Shape::Log, EntropySpec::Power(m)) => classify_log_power(*m, epsilon, d, trace),
        (Shape::Power(b), EntropySpec::Linear) => classify_power_linear(b, epsilon, trace),
        (Shape::Power(b), EntropySpec::Power(m)) => classify_power_power(b, *m, epsilon, d, trace),
        (Shape::Table, _) => classify_tabulated(kernel, entropy, epsilon, d, trace),
    }
}

fn classify_log_linear(epsilon: f64, d: usize, mut trace: String) -> RegimeVerdict {
    // E(ρ_r) is affine in log r with slope 1/2 - εd: bounded below only on the critical value.
    let epsilon_c = 1.0 / (2.0 * d as f64);
    let slope = 0.5 - epsilon * d as f64;
    let _ = write!(trace, "logarithmic kernel, linear entropy: dE(rho_r)/dlog r = 1/2 - eps d = {slope:.6e}; eps_c = 1/(2d) = {epsilon_c:.16e}");
    let verdict = if (epsilon - epsilon_c).abs() <= CRITICAL_TOL {
        Verdict::Critical { epsilon_c }
    } else if epsilon > epsilon_c {
        let _ = write!(trace, "; spreading test holds: 1/2 - eps d < 0 for every r");
        Verdict::UnboundedBelowAtInfinity
    } else {
        let _ = write!(trace, "; concentration test holds: 1/2 - eps d > 0 for every r");
        Verdict::UnboundedBelowAtZero
    };
    RegimeVerdict::new(verdict, trace)
}

fn classify_log_power(m: f64, epsilon: f64, d: usize, mut trace: String) -> RegimeVerdict {
    let coeff = epsilon * d as f64 * unit_ball_volume(d).powf(1.0 - m);
    let _ = write!(
        trace,
        "logarithmic kernel, m = {m}: (1/2) grad W.z = 1/2 against eps v = {coeff:.6e} r^{:.6}",
        (1.0 - m) * d as f64
    );
    if m < 1.0 {
        let _ = write!(trace, "; spreading test holds as r -> inf and concentration test holds as r -> 0; reporting the spreading ray");
        RegimeVerdict::new(Verdict::UnboundedBelowAtInfinity, trace)
    } else {
        let _ = write!(trace, "; neither dilation test holds");
        RegimeVerdict::new(Verdict::Inconclusive, trace)
    }
}

fn classify_power_linear(beta: f64, epsilon: f64, mut trace: String) -> RegimeVerdict {
    if beta < 0.0 {
        let _ = write!(trace, "beta = {beta} < 0 with linear entropy: inf over B_2r of grad W.z = (2r)^beta -> inf as r -> 0 while eps v = eps d; concentration test holds");
        RegimeVerdict::new(Verdict::UnboundedBelowAtZero, trace)
    } else {
        let _ = write!(trace, "beta = {beta} > 0 with linear entropy: L = +inf so eps = {epsilon} < L/(2d)");
        RegimeVerdict::new(Verdict::MinimizerExists, trace)
    }
}

fn classify_power_power(beta: f64, m: f64, epsilon: f64, d: usize, mut trace: String) -> RegimeVerdict {
    let df = d as f64;
    let line = df * (1.0 - m);
    let threshold = fair_competition_threshold(beta, m, d);
    let _ = write!(
        trace,
        "beta = {beta}, m = {m}, d(1-m) = {line:.6}; homogeneous test 2^(beta-1) r^beta - eps d w_d^(1-m) r^(d(1-m)), threshold 2^(beta-1)/(d w_d^(1-m)) = {threshold:.16e}"
    );
    if (beta - line).abs() <= LINE_TOL {
        let _ = write!(trace, "; fair competition");
        if m < 1.0 {
            if epsilon > threshold {
                let _ = write!(trace, "; eps = {epsilon} above threshold: spreading test holds");
                return RegimeVerdict::new(Verdict::UnboundedBelowAtInfinity, trace);
            }
            return fast_diffusion(beta, m, epsilon, d, trace);
        }
        if epsilon < threshold {
            let _ = write!(trace, "; eps = {epsilon} below threshold: concentration test holds");
            return RegimeVerdict::new(Verdict::UnboundedBelowAtZero, trace);
        }
        let _ = write!(trace, "; eps = {epsilon} not below threshold: no dilation verdict");
        return RegimeVerdict::new(Verdict::Inconclusive, trace);
    }
    if beta < line {
        let _ = write!(trace, "; aggregation-dominated (beta < d(1-m))");
        if beta > 0.0 {
            let _ = write!(trace, ": spreading test holds as r -> inf");
            return RegimeVerdict::new(Verdict::UnboundedBelowAtInfinity, trace);
        }
        let _ = write!(trace, ": concentration test holds as r -> 0");
        return RegimeVerdict::new(Verdict::UnboundedBelowAtZero, trace);
    }
    if m > 1.0 && beta < 0.0 {
        let _ = write!(trace, "; d(1-m) < beta < 0 < m-1: global minimizer exists");
        return RegimeVerdict::new(Verdict::MinimizerExists, trace);
    }
    if m < 1.0 && beta > 0.0 && beta < line / m {
        let _ = write!(trace, "; fast-diffusion window d(1-m) < beta < d(1-m)/m = {:.6}", line / m);
        return fast_diffusion(beta, m, epsilon, d, trace);
    }
    let _ = write!(trace, "; no criterion applies");
    RegimeVerdict::new(Verdict::Inconclusive, trace)
}

/// Dyadic construction halfway inside its admissible γ-window.
fn fast_diffusion(beta: f64, m: f64, epsilon: f64, d: usize, mut trace: String) -> RegimeVerdict {
    let gamma = 0.5 * (beta + d as f64 * (1.0 - m) / m);
    match certify_unbounded(gamma, beta, m, d, epsilon, CERTIFICATE_BOUND, DEFAULT_K_MAX) {
        Ok(cert) if cert.certified() => {
            let _ = write!(
                trace,
                "; dyadic density with gamma = {gamma:.6} reaches energy {:.6e} < -{CERTIFICATE_BOUND:e} at K = {}",
                cert.min_energy,
                cert.k.unwrap_or(0)
            );
            RegimeVerdict::new(Verdict::UnboundedBelowAtZero, trace)
        }
        Ok(cert) => {
            let _ = write!(trace, "; dyadic density with gamma = {gamma:.6} not certified (lowest energy {:.6e})", cert.min_energy);
            RegimeVerdict::new(Verdict::Inconclusive, trace)
        }
        Err(e) => {
            let _ = write!(trace, "; dyadic certification failed: {e}");
            RegimeVerdict::new(Verdict::Inconclusive, trace)
        }
    }
}

fn classify_tabulated(kernel: &KernelSpec, entropy: &EntropySpec, epsilon: f64, d: usize, mut trace: String) -> RegimeVerdict {
    let KernelSpec::Tabulated(table) = kernel else {
        unreachable!("tabulated shape without a table")
    };
    let slope = kernel.asymptotic_slope();
    let _ = write!(trace, "tabulated kernel on [0, {:.6e}], asymptotic slope {slope:?}", table.r_max());
    if let (EntropySpec::Linear, Slope::Finite(l)) = (entropy, slope) {
        let epsilon_c = l / (2.0 * d as f64);
        if l > 0.0 && (epsilon - epsilon_c).abs() <= CRITICAL_TOL {
            let _ = write!(trace, "; eps on L/(2d) = {epsilon_c:.16e}");
            return RegimeVerdict::new(Verdict::Critical { epsilon_c }, trace);
        }
    }

    // Radii whose doubled ball stays inside the table.
    let radii: Vec<f64> = log_grid(GRID_LO, GRID_HI, GRID_POINTS)
        .expect("static grid")
        .into_iter()
        .filter(|r| 2.0 * r <= table.r_max())
        .collect();
    if radii.len() < 2 {
        let _ = write!(trace, "; table too short for the dilation test");
        return RegimeVerdict::new(Verdict::Inconclusive, trace);
    }
    let virial = |s: f64| kernel.virial(s);
    let scale = ball_radius_scale(d);
    let nodes: Vec<f64> = table.nodes().iter().copied().filter(|s| *s > 0.0).collect();
    // Running extrema of w'(s)s over the table nodes below 2r, plus 2r itself.
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut next = 0;
    let mut upper = Vec::with_capacity(radii.len());
    let mut lower = Vec::with_capacity(radii.len());
    for &r in &radii {
        let s = 2.0 * r;
        while next < nodes.len() && nodes[next] <= s {
            let g = virial(nodes[next]);
            hi = hi.max(g);
            lo = lo.min(g);
            next += 1;
        }
        let g = virial(s);
        let v = epsilon * entropy.scaling_v(d, r * scale).unwrap_or(f64::NAN);
        upper.push(0.5 * hi.max(g) - v);
        lower.push(0.5 * lo.min(g) - v);
    }
    let last = *radii.last().unwrap();
    let first = radii[0];
    let tail: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] >= last / 10.0).collect();
    let head: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] <= first * 10.0).collect();
    let worst_tail = tail.iter().map(|&i| upper[i]).fold(f64::NEG_INFINITY, f64::max);
    let worst_head = head.iter().map(|&i| lower[i]).fold(f64::INFINITY, f64::min);
    let _ = write!(
        trace,
        "; spreading test max over r in [{:.3e}, {last:.3e}] = {worst_tail:.6e}; concentration test min over r in [{first:.3e}, {:.3e}] = {worst_head:.6e}",
        last / 10.0,
        first * 10.0
    );
    if worst_tail < 0.0 {
        let _ = write!(trace, "; spreading test holds on the final decade");
        return RegimeVerdict::new(Verdict::UnboundedBelowAtInfinity, trace);
    }
    if worst_head > 0.0 {
        let _ = write!(trace, "; concentration test holds on the first decade");
        return RegimeVerdict::new(Verdict::UnboundedBelowAtZero, trace);
    }
    match (entropy, slope) {
        (EntropySpec::Linear, Slope::Finite(l)) => {
            let epsilon_c = l / (2.0 * d as f64);
            if epsilon < epsilon_c {
                let _ = write!(trace, "; eps = {epsilon} < L/(2d) = {epsilon_c:.6e}");
                RegimeVerdict::new(Verdict::MinimizerExists, trace)
            } else {
                let _ = write!(trace, "; eps = {epsilon} > L/(2d) = {epsilon_c:.6e}");
                RegimeVerdict::new(Verdict::UnboundedBelowAtInfinity, trace)
            }
        }
        (EntropySpec::Linear, Slope::PlusInfinity) => {
            let _ = write!(trace, "; L = +inf");
            RegimeVerdict::new(Verdict::MinimizerExists, trace)
        }
        _ => {
            let _ = write!(trace, "; neither hypothesis fires");
            RegimeVerdict::new(Verdict::Inconclusive, trace)
        }
    }
}

/// Best dilation of a density in the slow-diffusion existence region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalDilation {
    pub r0: f64,
    /// |W(ρ_{r0}) - εd(m-1)/β · E_m(ρ_{r0})| / |W(ρ_{r0})|.
    pub virial_residual: f64,
    /// E_ε(ρ_{r0}).
    pub energy: f64,
}

/// Minimizes r ↦ E_ε(ρ_r) = r^β W(ρ) + ε r^{d(1-m)} E_m(ρ) in closed form
/// and checks the first-order identity on the dilated density.
pub fn optimal_dilation(rho: &RadialDensity, beta: f64, m: f64, epsilon: f64) -> Result<OptimalDilation> {
    let d = rho.dimension();
    let line = d as f64 * (1.0 - m);
    if !(m > 1.0 && beta > line && beta < 0.0) {
        return Err(Error::Precondition(format!("need m > 1 and d(1-m) < beta < 0, got beta = {beta}, m = {m}, d = {d}")));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Precondition(format!("need epsilon > 0, got {epsilon}")));
    }
    let kernel = KernelSpec::PowerLaw(beta);
    let entropy = EntropySpec::Power(m);
    let w = interaction_energy(rho, &kernel)?;
    let e_m = entropy_energy(rho, &entropy);
    if !(w < 0.0) || !(e_m > 0.0 && e_m.is_finite()) {
        return Err(Error::Precondition(format!("need W(rho) < 0 < E_m(rho), got W = {w}, E_m = {e_m}")));
    }
    let r0 = (-epsilon * line * e_m / (beta * w)).powf(1.0 / (beta - line));
    let dilated = rho.dilate(r0)?;
    let w0 = interaction_energy(&dilated, &kernel)?;
    let e0 = entropy_energy(&dilated, &entropy);
    let virial_residual = (w0 - epsilon * d as f64 * (m - 1.0) / beta * e0).abs() / w0.abs();
    let energy = w0 + epsilon * e0;
    if !(energy < 0.0) {
        return Err(Error::Precondition(format!("energy at the optimal dilation is {energy}, expected negative")));
    }
    Ok(OptimalDilation { r0, virial_residual, energy })
}
