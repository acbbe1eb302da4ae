//! Euler–Lagrange steady states for linear diffusion on a ball B_R.
//!
//! The fixed-point map sends ρ to Z^{-1} exp(-W * ρ / ε) restricted to B_R,
//! damped with a factor θ that halves when the iteration starts to oscillate.

use crate::energy::{potential, PotentialOperator};
use crate::kernels::{EntropySpec, KernelSpec};
use crate::measures::RadialDensity;
use crate::{check_dimension, unit_ball_volume, Error, Result};

pub const FP_TOL: f64 = 1e-10;
pub const EL_TOL: f64 = 1e-3;
pub const DEFAULT_THETA: f64 = 0.5;
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Relative floor below which cells are not counted as support.
pub const SUPPORT_FLOOR: f64 = 1e-12;
/// Cells this many spacings outside the support form the near-support band.
const NEAR_SUPPORT_CELLS: usize = 4;
/// Largest exponent spread exp can take without leaving double range.
const MAX_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone)]
pub struct SteadyStateReport {
    pub density: RadialDensity,
    /// Lagrange constant C with ε(1 + log ρ) + W * ρ = C on the support.
    pub multiplier: f64,
    pub el_residual_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    pub flatness_bound: f64,
}

impl SteadyStateReport {
    pub const CSV_HEADER: &'static str = "C,residual,iters,converged,flatness_bound";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.16e},{:.16e},{},{},{:.16e}",
            self.multiplier, self.el_residual_sup, self.iterations, self.converged, self.flatness_bound
        )
    }
}

/// Euler–Lagrange diagnostics of a density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElResidual {
    /// ρ-weighted mean of εU'(ρ) + W * ρ over the support.
    pub multiplier: f64,
    /// sup over the support of |εU'(ρ) + W * ρ - C|.
    pub equality_sup: f64,
    /// min of εU'(ρ) + W * ρ - C over the band just outside the support; +∞ if empty.
    pub near_support_margin: f64,
}

/// Gibbs map: normalized exp(-(V - min V)/ε) on the grid, with the constant
/// ε log Z so that ε log ρ + V = min V - ε log Z.
fn gibbs(v: &[f64], epsilon: f64, volumes: &[f64]) -> Result<(Vec<f64>, f64)> {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Overflow { sup_over_eps: f64::INFINITY });
    }
    let spread = (hi - lo) / epsilon;
    if spread > MAX_EXPONENT {
        return Err(Error::Overflow { sup_over_eps: spread });
    }
    let mut rho: Vec<f64> = v.iter().map(|x| (-(x - lo) / epsilon).exp()).collect();
    let z: f64 = rho.iter().zip(volumes).map(|(r, vol)| r * vol).sum();
    rho.iter_mut().for_each(|r| *r /= z);
    Ok((rho, lo - epsilon * z.ln()))
}

/// Damped fixed-point iteration for ρ = Z^{-1} exp(-W * ρ / ε) on B_R.
pub fn solve_fixed_point(
    kernel: &KernelSpec,
    epsilon: f64,
    d: usize,
    radius: f64,
    cells: usize,
    theta: f64,
    max_iter: usize,
) -> Result<SteadyStateReport> {
    check_dimension(d)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!("damping must lie in (0, 1], got {theta}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("domain radius must be positive, got {radius}")));
    }
    let start = RadialDensity::uniform_ball(radius, d, cells)?;
    let volumes: Vec<f64> = (0..cells).map(|i| start.shell_volume(i)).collect();
    let op = PotentialOperator::new(kernel, d, radius, cells)?;

    let mut rho = start.values().to_vec();
    let mut theta = theta;
    let mut previous: Option<Vec<f64>> = None;
    let mut flips = 0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let (target, _) = gibbs(&op.apply(&rho), epsilon, &volumes)?;
        let step: Vec<f64> = target.iter().zip(&rho).map(|(t, r)| theta * (t - r)).collect();
        let size = step.iter().fold(0.0f64, |acc, s| acc.max(s.abs()));
        for (r, s) in rho.iter_mut().zip(&step) {
            *r += s;
        }
        // Renormalize away rounding drift in the mass.
        let mass: f64 = rho.iter().zip(&volumes).map(|(r, v)| r * v).sum();
        rho.iter_mut().for_each(|r| *r /= mass);
        if size < FP_TOL {
            converged = true;
            break;
        }
        if let Some(prev) = &previous {
            let dot: f64 = prev.iter().zip(&step).map(|(a, b)| a * b).sum();
            if dot < 0.0 {
                flips += 1;
                if flips == 2 {
                    theta *= 0.5;
                    flips = 0;
                }
            }
        }
        previous = Some(step);
    }

    // The damped iterate keeps a geometric remnant of the start in the far
    // tail; one undamped application replaces it by the Gibbs profile.
    let (rho, _) = gibbs(&op.apply(&rho), epsilon, &volumes)?;
    let density = RadialDensity::new(d, radius, rho, 0.0)?;
    let residual = el_residual(&density, kernel, &EntropySpec::Linear, epsilon)?;
    Ok(SteadyStateReport {
        converged: converged && residual.equality_sup <= EL_TOL,
        multiplier: residual.multiplier,
        el_residual_sup: residual.equality_sup,
        iterations,
        flatness_bound: flatness_bound(kernel, epsilon, d, radius),
        density,
    })
}

/// Equality residual on the support and inequality margin just outside it.
pub fn el_residual(rho: &RadialDensity, kernel: &KernelSpec, entropy: &EntropySpec, epsilon: f64) -> Result<ElResidual> {
    if rho.atom_mass() > 0.0 {
        return Err(Error::AtomNotSupported("Euler–Lagrange residual"));
    }
    let v = potential(rho, kernel)?;
    let values = rho.values();
    let floor = SUPPORT_FLOOR * rho.sup();
    let support: Vec<bool> = values.iter().map(|&r| r > floor).collect();
    let lhs: Vec<f64> = values
        .iter()
        .zip(&v)
        .map(|(&r, &vi)| if r > 0.0 { epsilon * entropy.derivative(r) + vi } else { f64::NAN })
        .collect();
    let (mut weighted, mut mass) = (0.0, 0.0);
    for i in (0..values.len()).filter(|&i| support[i]) {
        let w = rho.cell_mass(i);
        weighted += w * lhs[i];
        mass += w;
    }
    if !(mass > 0.0) {
        return Err(Error::EmptySupport);
    }
    let multiplier = weighted / mass;
    let equality_sup = (0..values.len())
        .filter(|&i| support[i])
        .map(|i| (lhs[i] - multiplier).abs())
        .fold(0.0f64, f64::max);
    let near = |i: usize| {
        let lo = i.saturating_sub(NEAR_SUPPORT_CELLS);
        let hi = (i + NEAR_SUPPORT_CELLS).min(values.len() - 1);
        (lo..=hi).any(|j| support[j])
    };
    let near_support_margin = (0..values.len())
        .filter(|&i| !support[i] && near(i) && lhs[i].is_finite())
        .map(|i| lhs[i] - multiplier)
        .fold(f64::INFINITY, f64::min);
    Ok(ElResidual { multiplier, equality_sup, near_support_margin })
}

/// |B_R|^{-1} exp((sup w - inf w)/ε) over [0, 2R]; +∞ for unbounded kernels.
pub fn flatness_bound(kernel: &KernelSpec, epsilon: f64, d: usize, radius: f64) -> f64 {
    let volume = unit_ball_volume(d) * radius.powi(d as i32);
    match kernel.range_on(2.0 * radius) {
        Ok((lo, hi)) if lo.is_finite() && hi.is_finite() => ((hi - lo) / epsilon).exp() / volume,
        _ => f64::INFINITY,
    }
}
