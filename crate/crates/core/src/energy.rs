//! Interaction and internal energies of radial densities.
//!
//! In one dimension the interaction of two piecewise-constant cells is
//! integrated exactly through the second antiderivative of w. In higher
//! dimensions the potential of a shell is the difference of two ball
//! potentials, each a one-dimensional integral over the distance t weighted
//! by the fraction of the sphere of radius t lying inside the ball.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::kernels::{EntropySpec, KernelSpec, Shape};
use crate::measures::{RadialDensity, RadialMeasure};
use crate::quadrature::{gl16, gl8, graded_from_left, levels_for_exponent, pairwise_sum, singular_left};
use crate::{check_dimension, unit_ball_volume, unit_sphere_area, Error, Result};

/// Free energy and its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub interaction: f64,
    pub entropy: f64,
    pub epsilon: f64,
    pub total: f64,
    pub quadrature_error_estimate: f64,
}

impl EnergyBreakdown {
    pub fn new(interaction: f64, entropy: f64, epsilon: f64, quadrature_error_estimate: f64) -> Self {
        Self { interaction, entropy, epsilon, total: combine(interaction, entropy, epsilon), quadrature_error_estimate }
    }

    pub const CSV_HEADER: &'static str = "interaction,entropy,epsilon,total,err_est";

    pub fn csv_row(&self) -> String {
        use crate::config::fmt17;
        format!(
            "{},{},{},{},{}",
            fmt17(self.interaction),
            fmt17(self.entropy),
            fmt17(self.epsilon),
            fmt17(self.total),
            fmt17(self.quadrature_error_estimate)
        )
    }
}

/// interaction + eps * entropy, with eps = 0 dropping the entropy even when
/// it is infinite.
pub fn combine(interaction: f64, entropy: f64, epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        interaction
    } else {
        interaction + epsilon * entropy
    }
}

/// ∫_0^α sin^n φ dφ.
fn sin_power_integral(n: usize, alpha: f64) -> f64 {
    match n {
        0 => alpha,
        1 => 1.0 - alpha.cos(),
        _ => {
            let nf = n as f64;
            -alpha.sin().powi(n as i32 - 1) * alpha.cos() / nf + (nf - 1.0) / nf * sin_power_integral(n - 2, alpha)
        }
    }
}

/// Fraction of the unit sphere S^{d-1} where the cosine to a fixed axis is
/// at most c.
fn cap_fraction(d: usize, c: f64) -> f64 {
    if c >= 1.0 {
        1.0
    } else if c <= -1.0 {
        0.0
    } else {
        1.0 - sin_power_integral(d - 2, c.acos()) / sin_power_integral(d - 2, PI)
    }
}

/// Spherical average of w(|r e - s η|) over unit vectors η, e fixed.
pub fn angular_kernel(kernel: &KernelSpec, d: usize, r: f64, s: f64) -> Result<f64> {
    check_dimension(d)?;
    kernel.check_integrable(d)?;
    if !(r >= 0.0 && s >= 0.0) {
        return Err(Error::InvalidParameter(format!("radii must be nonnegative, got ({r}, {s})")));
    }
    kernel.check_reach(r + s)?;
    if d == 1 {
        return Ok(0.5 * (kernel.w((r - s).abs()) + kernel.w(r + s)));
    }
    if r == 0.0 || s == 0.0 {
        return Ok(kernel.w(r.max(s)));
    }
    let gap = (r - s).abs();
    let nodes = if gap == 0.0 {
        let p = match kernel.shape() {
            Shape::Power(b) => b + d as f64 - 2.0,
            _ => d as f64 - 2.0,
        };
        if p <= -1.0 {
            return Ok(f64::INFINITY);
        }
        singular_left(0.0, PI, p)
    } else {
        let scale = gap / (r * s).sqrt();
        graded_from_left(0.0, PI, (0.25 * scale).min(PI), gl16())
    };
    let norm = sin_power_integral(d - 2, PI);
    let sum: f64 = nodes
        .iter()
        .map(|&(theta, wt)| {
            let half = (0.5 * theta).sin();
            let dist = (gap * gap + 4.0 * r * s * half * half).sqrt();
            wt * kernel.w(dist) * theta.sin().powi(d as i32 - 2)
        })
        .sum();
    Ok(sum / norm)
}

/// Potentials of uniform balls in R^d, d >= 2.
pub(crate) struct BallPotential<'a> {
    kernel: &'a KernelSpec,
    d: usize,
    area: f64,
    cumulative: Vec<f64>,
}

impl<'a> BallPotential<'a> {
    pub(crate) fn new(kernel: &'a KernelSpec, d: usize) -> Self {
        let mut cumulative = Vec::new();
        if let KernelSpec::Tabulated(t) = kernel {
            let nodes = t.nodes();
            cumulative.push(0.0);
            for j in 0..nodes.len() - 1 {
                let piece = gl8().integrate(nodes[j], nodes[j + 1], |x| t.value(x) * x.powi(d as i32 - 1));
                cumulative.push(cumulative[j] + piece);
            }
        }
        Self { kernel, d, area: unit_sphere_area(d), cumulative }
    }

    /// ∫_{B_t} w(|y|) dy.
    pub(crate) fn radial(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        let d = self.d as f64;
        let core = match self.kernel {
            KernelSpec::Tabulated(tab) => {
                let nodes = tab.nodes();
                let j = nodes.partition_point(|&r| r <= t).saturating_sub(1).min(nodes.len() - 2);
                self.cumulative[j]
                    + gl8().integrate(nodes[j], t, |x| tab.value(x) * x.powi(self.d as i32 - 1))
            }
            _ => match self.kernel.shape() {
                Shape::Power(b) => t.powf(b + d) / (b * (b + d)),
                _ => t.powi(self.d as i32) * (t.ln() / d - 1.0 / (d * d)),
            },
        };
        self.area * core
    }

    /// ∫_{B_s} w(|x - y|) dy at |x| = r.
    pub(crate) fn ball(&self, r: f64, s: f64) -> f64 {
        if s == 0.0 {
            return 0.0;
        }
        if r == 0.0 {
            return self.radial(s);
        }
        let mut total = if s > r { self.radial(s - r) } else { 0.0 };
        let tmin = (r - s).abs();
        let tmax = r + s;
        let half_span = 0.5 * (tmax - tmin);
        let d = self.d;
        let nodes = if tmin == 0.0 {
            let exponent = match self.kernel.shape() {
                Shape::Power(b) => 2.0 * (b + d as f64) - 1.0,
                _ => 2.0 * d as f64 - 1.0,
            };
            let levels = levels_for_exponent(exponent);
            graded_from_left(0.0, PI, PI * 0.5f64.powi(levels as i32), gl16())
        } else {
            graded_from_left(0.0, PI, (0.5 * (tmin / tmax).sqrt()).min(PI), gl16())
        };
        let diff = (s - r) * (s + r);
        let partial: f64 = nodes
            .iter()
            .map(|&(u, wt)| {
                let t = tmin + half_span * (1.0 - u.cos());
                if t <= 0.0 {
                    return 0.0;
                }
                let c = (diff - t * t) / (2.0 * r * t);
                wt * self.kernel.w(t) * t.powi(d as i32 - 1) * cap_fraction(d, c) * half_span * u.sin()
            })
            .sum();
        total += self.area * partial;
        total
    }
}

/// Linear map from cell values to the potential W * ρ at cell midpoints.
pub struct PotentialOperator {
    d: usize,
    cells: usize,
    repr: OperatorRepr,
}

enum OperatorRepr {
    /// Toeplitz and Hankel tables: V_i = Σ_j ρ_j (T[|i-j|] signed + T[i+j+1]).
    Line { table: Vec<f64> },
    Dense { matrix: Vec<f64> },
}

impl PotentialOperator {
    pub fn new(kernel: &KernelSpec, d: usize, r_max: f64, cells: usize) -> Result<Self> {
        check_dimension(d)?;
        kernel.check_integrable(d)?;
        kernel.check_reach(2.0 * r_max)?;
        let h = r_max / cells as f64;
        let repr = if d == 1 {
            let odd = |t: f64| if t >= 0.0 { kernel.first_antiderivative(t) } else { -kernel.first_antiderivative(-t) };
            // T[k] = ∫_{(k-1/2)h}^{(k+1/2)h} w(|t|) dt for k = 0..2M.
            let table = (0..=2 * cells)
                .map(|k| {
                    let k = k as f64;
                    odd((k + 0.5) * h) - odd((k - 0.5) * h)
                })
                .collect();
            OperatorRepr::Line { table }
        } else {
            let balls = BallPotential::new(kernel, d);
            let matrix: Vec<f64> = (0..cells)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let r = (i as f64 + 0.5) * h;
                    let phi: Vec<f64> = (0..=cells).map(|j| balls.ball(r, j as f64 * h)).collect();
                    (0..cells).map(move |j| phi[j + 1] - phi[j]).collect::<Vec<_>>()
                })
                .collect();
            OperatorRepr::Dense { matrix }
        };
        Ok(Self { d, cells, repr })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// Potential of the absolutely continuous part at the cell midpoints.
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.cells, "operator built for a different grid");
        let m = self.cells;
        match &self.repr {
            OperatorRepr::Line { table } => (0..m)
                .into_par_iter()
                .map(|i| {
                    let mut acc = 0.0;
                    for (j, v) in values.iter().enumerate() {
                        acc += v * (table[i.abs_diff(j)] + table[i + j + 1]);
                    }
                    acc
                })
                .collect(),
            OperatorRepr::Dense { matrix } => (0..m)
                .into_par_iter()
                .map(|i| matrix[i * m..(i + 1) * m].iter().zip(values).map(|(a, b)| a * b).sum())
                .collect(),
        }
    }
}

/// W * ρ at the cell midpoints, including the atom's contribution.
pub fn potential(rho: &RadialMeasure, kernel: &KernelSpec) -> Result<Vec<f64>> {
    let op = PotentialOperator::new(kernel, rho.dimension(), rho.r_max(), rho.cells())?;
    let mut v = op.apply(rho.values());
    if rho.atom_mass() > 0.0 {
        for (i, vi) in v.iter_mut().enumerate() {
            *vi += rho.atom_mass() * kernel.w(rho.midpoint(i));
        }
    }
    Ok(v)
}

/// (1/2) ∬ W(x - y) dρ(x) dρ(y).
pub fn interaction_energy(rho: &RadialMeasure, kernel: &KernelSpec) -> Result<f64> {
    let d = rho.dimension();
    kernel.check_integrable(d)?;
    kernel.check_reach(2.0 * rho.r_max())?;
    let atom = rho.atom_mass();
    let self_term = if atom > 0.0 {
        let w0 = kernel.value_at_origin();
        if w0 == f64::INFINITY {
            return Err(Error::InfiniteSelfInteraction);
        }
        0.5 * atom * atom * w0
    } else {
        0.0
    };
    let values = rho.values();
    let h = rho.spacing();
    let m = rho.cells();

    let (ac, cross) = if d == 1 {
        let table = line_pair_table(kernel, h, 2 * m + 1);
        let rows: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for (j, v) in values.iter().enumerate() {
                    acc += v * (table[i.abs_diff(j)] + table[i + j + 1]);
                }
                values[i] * acc
            })
            .collect();
        let cross = if atom > 0.0 {
            let w1 = |t: f64| kernel.first_antiderivative(t);
            let parts: Vec<f64> =
                (0..m).map(|j| values[j] * 2.0 * (w1(rho.node(j + 1)) - w1(rho.node(j)))).collect();
            atom * pairwise_sum(&parts)
        } else {
            0.0
        };
        (pairwise_sum(&rows), cross)
    } else {
        let balls = BallPotential::new(kernel, d);
        let rows: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| {
                if values[i] == 0.0 {
                    return 0.0;
                }
                let r = rho.midpoint(i);
                let mut prev = 0.0;
                let mut acc = 0.0;
                for (j, v) in values.iter().enumerate() {
                    let next = balls.ball(r, rho.node(j + 1));
                    if *v != 0.0 {
                        acc += v * (next - prev);
                    }
                    prev = next;
                }
                0.5 * rho.cell_mass(i) * acc
            })
            .collect();
        let cross = if atom > 0.0 {
            let parts: Vec<f64> = (0..m)
                .map(|j| values[j] * (balls.radial(rho.node(j + 1)) - balls.radial(rho.node(j))))
                .collect();
            atom * pairwise_sum(&parts)
        } else {
            0.0
        };
        (pairwise_sum(&rows), cross)
    };
    Ok(ac + cross + self_term)
}

/// D[k] = ∫∫ w(|x - y|) over two cells of width h whose left ends are k h
/// apart, for k = 0..n.
fn line_pair_table(kernel: &KernelSpec, h: f64, n: usize) -> Vec<f64> {
    let f2 = |t: f64| kernel.second_antiderivative(t);
    (0..n)
        .map(|k| {
            if k <= 4 {
                let kf = k as f64;
                let lower = if k == 0 { f2(h) } else { f2((kf - 1.0) * h) };
                f2((kf + 1.0) * h) - 2.0 * f2(kf * h) + lower
            } else {
                let c = k as f64 * h;
                let rule = gl8();
                rule.integrate(-h, 0.0, |t| (h + t) * kernel.w(c + t))
                    + rule.integrate(0.0, h, |t| (h - t) * kernel.w(c + t))
            }
        })
        .collect()
}

/// ∫ U(ρ_ac) dx + atom · U_s, in extended arithmetic.
pub fn entropy_energy(rho: &RadialMeasure, entropy: &EntropySpec) -> f64 {
    let parts: Vec<f64> =
        (0..rho.cells()).map(|i| entropy.value(rho.values()[i]) * rho.shell_volume(i)).collect();
    let ac = pairwise_sum(&parts);
    if rho.atom_mass() > 0.0 {
        let us = entropy.singular_slope();
        if us.is_infinite() {
            return f64::INFINITY;
        }
        ac + rho.atom_mass() * us
    } else {
        ac
    }
}

fn free_energy_parts(rho: &RadialMeasure, kernel: &KernelSpec, entropy: &EntropySpec) -> Result<(f64, f64)> {
    Ok((interaction_energy(rho, kernel)?, entropy_energy(rho, entropy)))
}

/// E_ε = interaction + ε · entropy, with a grid-halving error estimate
/// (NaN when the grid cannot be halved).
pub fn free_energy(
    rho: &RadialMeasure,
    kernel: &KernelSpec,
    entropy: &EntropySpec,
    epsilon: f64,
) -> Result<EnergyBreakdown> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let (w, u) = free_energy_parts(rho, kernel, entropy)?;
    let err = match rho.coarsen() {
        Some(coarse) => {
            let (wc, uc) = free_energy_parts(&coarse, kernel, entropy)?;
            (combine(w, u, epsilon) - combine(wc, uc, epsilon)).abs()
        }
        None => f64::NAN,
    };
    Ok(EnergyBreakdown::new(w, u, epsilon, err))
}

/// Like [`free_energy`] without the error estimate.
pub fn free_energy_total(rho: &RadialMeasure, kernel: &KernelSpec, entropy: &EntropySpec, epsilon: f64) -> Result<f64> {
    let (w, u) = free_energy_parts(rho, kernel, entropy)?;
    Ok(combine(w, u, epsilon))
}

/// ∫ ρ^p dx over the absolutely continuous part.
pub fn lp_integral(rho: &RadialMeasure, p: f64) -> f64 {
    let parts: Vec<f64> = (0..rho.cells())
        .map(|i| {
            let v = rho.values()[i];
            if v == 0.0 {
                0.0
            } else {
                v.powf(p) * rho.shell_volume(i)
            }
        })
        .collect();
    pairwise_sum(&parts)
}

/// ∬ |x - y|^α dρ dρ for α ≠ 0.
pub fn pair_moment(rho: &RadialMeasure, alpha: f64) -> Result<f64> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!("pair moment order must be finite and nonzero, got {alpha}")));
    }
    Ok(2.0 * alpha * interaction_energy(rho, &KernelSpec::PowerLaw(alpha))?)
}

/// ∬ |x-y|^λ dρ dρ / ∫ ρ^{1 - λ/d} dx for λ ∈ (-d, 0).
pub fn hls_ratio(rho: &RadialMeasure, lambda: f64) -> Result<f64> {
    let d = rho.dimension() as f64;
    if !(lambda > -d && lambda < 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must lie in (-{d}, 0), got {lambda}")));
    }
    if rho.atom_mass() > 0.0 {
        return Err(Error::AtomNotSupported("HLS ratio"));
    }
    let num = pair_moment(rho, lambda)?;
    Ok(num / lp_integral(rho, 1.0 - lambda / d))
}

/// (1/d) ∫ ρ log ρ + ∬ log|x - y| dρ dρ.
pub fn log_hls_gap(rho: &RadialMeasure) -> Result<f64> {
    if rho.atom_mass() > 0.0 {
        return Err(Error::AtomNotSupported("logarithmic HLS gap"));
    }
    let d = rho.dimension() as f64;
    let e = entropy_energy(rho, &EntropySpec::Linear);
    let w = interaction_energy(rho, &KernelSpec::Logarithmic)?;
    Ok(e / d + 2.0 * w)
}

/// Density of |X - Y| for X, Y independent uniform on the unit ball.
pub fn unit_ball_distance_density(d: usize, t: f64) -> f64 {
    if !(0.0..2.0).contains(&t) {
        return 0.0;
    }
    let omega = unit_ball_volume(d);
    let lens = 2.0 * unit_ball_volume(d - 1) * sin_power_integral(d, (0.5 * t).acos());
    d as f64 * omega * t.powi(d as i32 - 1) * lens / (omega * omega)
}

/// ∫_0^2 g(r t) f(t) dt with f the unit-ball distance density.
fn unit_ball_average<G: Fn(f64) -> f64>(kernel: &KernelSpec, d: usize, g: G) -> f64 {
    let left = match kernel.shape() {
        Shape::Power(b) => b.min(0.0) + d as f64 - 1.0,
        _ => d as f64 - 1.0,
    };
    let right = 0.5 * (d as f64 + 1.0);
    crate::quadrature::integrate_singular(0.0, 2.0, Some(left), Some(right), |t| {
        let f = unit_ball_distance_density(d, t);
        if f == 0.0 {
            0.0
        } else {
            g(t) * f
        }
    })
}

/// Interaction energy of the normalized uniform ball of radius r.
pub fn ball_interaction(kernel: &KernelSpec, d: usize, r: f64) -> Result<f64> {
    check_dimension(d)?;
    kernel.check_integrable(d)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {r}")));
    }
    kernel.check_reach(2.0 * r)?;
    Ok(0.5 * unit_ball_average(kernel, d, |t| kernel.w(r * t)))
}

/// (1/2) ∬ ∇W(x - y)·(x - y) over the normalized uniform ball of radius r.
pub fn ball_virial(kernel: &KernelSpec, d: usize, r: f64) -> Result<f64> {
    check_dimension(d)?;
    kernel.check_integrable(d)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {r}")));
    }
    if 2.0 * r > kernel.reach() * (1.0 + 1e-12) {
        return Err(Error::DerivativeUnavailable(format!(
            "tabulated kernel needed at {} beyond its cap {}",
            2.0 * r,
            kernel.reach()
        )));
    }
    Ok(0.5 * unit_ball_average(kernel, d, |t| kernel.virial(r * t)))
}

/// Convenience: interaction of a probability density.
pub fn density_interaction(rho: &RadialDensity, kernel: &KernelSpec) -> Result<f64> {
    interaction_energy(rho, kernel)
}
