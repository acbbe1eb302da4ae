//! Dyadic-ring densities for fast diffusion (m < 1).
//!
//! Ring k is A_k = B_{2^{k+1}} \ B_{2^k}, k = 0..=K, carrying mass
//! ρ_k = 2^{-kγ} / Σ_ℓ 2^{-ℓγ}. The moment and entropy integrals are exact
//! geometric sums. The interaction uses the scaling A_k = 2^k A_0: the
//! average of |x - y|^β over A_k × A_l (k <= l) equals 2^{lβ} σ_{l-k}, where
//! σ_n is the average over A_{-n} × A_0.

use rayon::prelude::*;

use crate::energy::BallPotential;
use crate::kernels::KernelSpec;
use crate::measures::RadialDensity;
use crate::quadrature::integrate_singular;
use crate::{check_dimension, unit_ball_volume, Error, Result};

/// Beyond this ring separation σ_n is constant to double precision.
const SIGMA_SATURATION: usize = 64;

/// Largest truncation tried by [`certify_unbounded`].
pub const DEFAULT_K_MAX: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicDensity {
    gamma: f64,
    d: usize,
    k: usize,
    /// log2 of the ring masses.
    log_masses: Vec<f64>,
}

impl DyadicDensity {
    pub fn new(gamma: f64, d: usize, k: usize) -> Result<Self> {
        check_dimension(d)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        // Σ_{ℓ=0}^{K} 2^{-ℓγ} in closed form.
        let q = 2f64.powf(-gamma);
        let z = (1.0 - q.powi(k as i32 + 1)) / (1.0 - q);
        let log_z = z.log2();
        let log_masses = (0..=k).map(|j| -(j as f64) * gamma - log_z).collect();
        Ok(Self { gamma, d, k, log_masses })
    }

    pub fn rings(&self) -> usize {
        self.k + 1
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn ring_mass(&self, k: usize) -> f64 {
        self.log_masses[k].exp2()
    }

    pub fn total_mass(&self) -> f64 {
        (0..self.rings()).map(|k| self.ring_mass(k)).sum()
    }

    /// log2 |A_k|.
    fn log_ring_volume(&self, k: usize) -> f64 {
        let d = self.d as f64;
        (unit_ball_volume(self.d) * (2f64.powf(d) - 1.0)).log2() + k as f64 * d
    }

    /// ∫ ρ^m over each ring.
    pub fn entropy_terms(&self, m: f64) -> Vec<f64> {
        (0..self.rings()).map(|k| (m * self.log_masses[k] + (1.0 - m) * self.log_ring_volume(k)).exp2()).collect()
    }

    /// ∫_{A_k} |x|^β dρ for each ring.
    pub fn moment_terms(&self, beta: f64) -> Vec<f64> {
        let d = self.d as f64;
        let shape = d * (2f64.powf(beta + d) - 1.0) / ((beta + d) * (2f64.powf(d) - 1.0));
        (0..self.rings()).map(|k| shape * (self.log_masses[k] + k as f64 * beta).exp2()).collect()
    }

    /// (1/2) ∬ |x - y|^β / β dρ dρ.
    pub fn interaction(&self, beta: f64) -> Result<f64> {
        let sigma = ring_pair_averages(beta, self.d, self.k.min(SIGMA_SATURATION))?;
        let sigma_at = |n: usize| sigma[n.min(sigma.len() - 1)];
        let k = self.rings();
        let rows: Vec<f64> = (0..k)
            .into_par_iter()
            .map(|l| {
                // Pairs (j, l) with j <= l; off-diagonal pairs counted twice.
                let mut acc = 0.0;
                for j in 0..=l {
                    let weight = if j == l { 1.0 } else { 2.0 };
                    let log_term = self.log_masses[j] + self.log_masses[l] + l as f64 * beta;
                    acc += weight * log_term.exp2() * sigma_at(l - j);
                }
                acc
            })
            .collect();
        Ok(crate::quadrature::pairwise_sum(&rows) / (2.0 * beta))
    }

    /// Piecewise-constant realization on a uniform grid over [0, 2^{K+1}]
    /// with `per_unit` cells per unit length (ring edges fall on nodes).
    pub fn to_radial_density(&self, per_unit: usize) -> Result<RadialDensity> {
        let r_max = 2f64.powi(self.k as i32 + 1);
        let cells = r_max as usize * per_unit;
        let h = 1.0 / per_unit as f64;
        let values: Vec<f64> = (0..cells)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                if r < 1.0 {
                    0.0
                } else {
                    let ring = r.log2().floor() as usize;
                    (self.log_masses[ring] - self.log_ring_volume(ring)).exp2()
                }
            })
            .collect();
        let m = crate::measures::RadialMeasure::new(self.d, r_max, values, 0.0)?;
        let mass = m.mass();
        RadialDensity::try_from(m.rescale_mass(1.0 / mass)?)
    }
}

/// σ_n = average of |x - y|^β over A_{-n} × A_0, n = 0..=n_max.
fn ring_pair_averages(beta: f64, d: usize, n_max: usize) -> Result<Vec<f64>> {
    let kernel = KernelSpec::power(beta)?;
    kernel.check_integrable(d)?;
    let vol = |a: f64, b: f64| crate::measures::shell_volume(d, a, b);
    let outer_volume = vol(1.0, 2.0);
    Ok((0..=n_max)
        .into_par_iter()
        .map(|n| {
            let (a, b) = (2f64.powi(-(n as i32)), 2f64.powi(1 - n as i32));
            let total = if d == 1 {
                // Both rings are pairs of intervals; integrate interval pairs exactly.
                let f2 = |t: f64| kernel.second_antiderivative(t.abs());
                let block = |a1: f64, a2: f64, b1: f64, b2: f64| f2(a2 - b1) - f2(a2 - b2) - f2(a1 - b1) + f2(a1 - b2);
                2.0 * (block(1.0, 2.0, a, b) + block(1.0, 2.0, -b, -a))
            } else {
                let balls = BallPotential::new(&kernel, d);
                let area = crate::unit_sphere_area(d);
                integrate_singular(1.0, 2.0, Some(0.5), Some(0.5), |r| {
                    area * r.powi(d as i32 - 1) * (balls.ball(r, b) - balls.ball(r, a))
                })
            };
            // Kernel is s^β/β; rescale to |x - y|^β.
            let kernel_scale = if beta == 0.0 { 1.0 } else { beta };
            kernel_scale * total / (outer_volume * vol(a, b))
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicSeries {
    pub moment_terms: Vec<f64>,
    pub moment_partial_sums: Vec<f64>,
    pub entropy_terms: Vec<f64>,
    pub entropy_partial_sums: Vec<f64>,
    pub admissible: bool,
}

/// β < γ < d(1 - m)/m.
pub fn is_admissible(gamma: f64, beta: f64, m: f64, d: usize) -> bool {
    beta < gamma && m * gamma < d as f64 * (1.0 - m)
}

fn check_triple(beta: f64, m: f64) -> Result<()> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Precondition(format!("dyadic construction needs 0 < m < 1, got {m}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Precondition(format!("dyadic construction needs beta > 0, got {beta}")));
    }
    Ok(())
}

/// Ring-wise terms and partial sums of ∫|x|^β dρ and ∫ρ^m for the
/// K-truncated density.
pub fn dyadic_series(gamma: f64, beta: f64, m: f64, d: usize, k: usize) -> Result<DyadicSeries> {
    check_triple(beta, m)?;
    let rho = DyadicDensity::new(gamma, d, k)?;
    let moment_terms = rho.moment_terms(beta);
    let entropy_terms = rho.entropy_terms(m);
    let running = |v: &[f64]| {
        v.iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect::<Vec<f64>>()
    };
    Ok(DyadicSeries {
        moment_partial_sums: running(&moment_terms),
        entropy_partial_sums: running(&entropy_terms),
        moment_terms,
        entropy_terms,
        admissible: is_admissible(gamma, beta, m, d),
    })
}

/// E_ε of the K-truncated dyadic density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicEnergy {
    pub k: usize,
    pub moment: f64,
    pub entropy_integral: f64,
    pub interaction: f64,
    pub energy: f64,
}

pub fn dyadic_energy(gamma: f64, beta: f64, m: f64, d: usize, epsilon: f64, k: usize) -> Result<DyadicEnergy> {
    check_triple(beta, m)?;
    let rho = DyadicDensity::new(gamma, d, k)?;
    let moment: f64 = rho.moment_terms(beta).iter().sum();
    let entropy_integral: f64 = rho.entropy_terms(m).iter().sum();
    let interaction = rho.interaction(beta)?;
    let energy = interaction + epsilon * entropy_integral / (m - 1.0);
    Ok(DyadicEnergy { k, moment, entropy_integral, interaction, energy })
}

/// Outcome of a certification attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// First truncation with energy below -bound.
    pub k: Option<usize>,
    pub admissible: bool,
    pub evaluations: Vec<DyadicEnergy>,
    /// Lowest energy reached (NaN when nothing was evaluated).
    pub min_energy: f64,
}

impl Certificate {
    pub fn certified(&self) -> bool {
        self.k.is_some()
    }
}

/// Doubles K = 8, 16, … up to `k_max` until E_ε < -bound. Inadmissible
/// triples are not evaluated.
pub fn certify_unbounded(
    gamma: f64,
    beta: f64,
    m: f64,
    d: usize,
    epsilon: f64,
    bound: f64,
    k_max: usize,
) -> Result<Certificate> {
    check_triple(beta, m)?;
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("certification needs epsilon > 0, got {epsilon}")));
    }
    if !(bound > 0.0) {
        return Err(Error::Precondition(format!("certification needs a positive bound, got {bound}")));
    }
    let admissible = is_admissible(gamma, beta, m, d);
    let mut cert = Certificate { k: None, admissible, evaluations: Vec::new(), min_energy: f64::NAN };
    if !admissible {
        return Ok(cert);
    }
    let mut k = 8;
    while k <= k_max {
        let e = dyadic_energy(gamma, beta, m, d, epsilon, k)?;
        cert.min_energy = if cert.min_energy.is_nan() { e.energy } else { cert.min_energy.min(e.energy) };
        cert.evaluations.push(e);
        if e.energy < -bound {
            cert.k = Some(k);
            break;
        }
        k *= 2;
    }
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{entropy_energy, interaction_energy};
    use crate::kernels::EntropySpec;

    #[test]
    fn masses_sum_to_one() {
        for (g, k) in [(1.5, 40), (0.3, 7), (2.0, 4096)] {
            let rho = DyadicDensity::new(g, 2, k).unwrap();
            assert!((rho.total_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn admissible_series() {
        let s = dyadic_series(1.5, 1.0, 0.5, 2, 40).unwrap();
        assert!(s.admissible);
        let n = s.moment_partial_sums.len();
        assert!(s.moment_partial_sums[n - 1] - s.moment_partial_sums[n - 2] < 1e-6);
        let growth = 2f64.powf(0.25);
        for k in 2..n {
            let ratio = s.entropy_terms[k] / s.entropy_terms[k - 1];
            assert!((ratio - growth).abs() < 1e-12);
            let mratio = s.moment_terms[k] / s.moment_terms[k - 1];
            assert!((mratio - 2f64.powf(-0.5)).abs() < 1e-12);
        }
        let s = dyadic_series(0.9, 1.0, 0.5, 2, 40).unwrap();
        assert!(!s.admissible);
        for k in 1..s.moment_terms.len() {
            assert!(s.moment_terms[k] > s.moment_terms[k - 1]);
        }
    }

    #[test]
    fn closed_forms_match_grid_quadrature() {
        for d in [1usize, 2] {
            let dy = DyadicDensity::new(1.5, d, 3).unwrap();
            let rho = dy.to_radial_density(32).unwrap();
            let m = 0.5;
            let ent: f64 = dy.entropy_terms(m).iter().sum();
            assert!((ent - (m - 1.0) * entropy_energy(&rho, &EntropySpec::Power(m))).abs() < 1e-10 * ent);
            let mom: f64 = dy.moment_terms(1.0).iter().sum();
            assert!((mom - rho.moment(1.0).unwrap()).abs() < 1e-10 * mom);
            let w = dy.interaction(1.0).unwrap();
            let grid = interaction_energy(&rho, &KernelSpec::PowerLaw(1.0)).unwrap();
            if d == 1 {
                assert!((w - grid).abs() < 1e-10 * w, "{w} vs {grid}");
            } else {
                // Midpoint outer rule: second-order convergence toward the ring-pair value.
                let finer = interaction_energy(&dy.to_radial_density(64).unwrap(), &KernelSpec::PowerLaw(1.0)).unwrap();
                let (e1, e2) = ((w - grid).abs(), (w - finer).abs());
                assert!(e1 < 1e-4 * w && e2 < 0.35 * e1, "{w}: {grid} ({e1}), {finer} ({e2})");
            }
        }
    }

    #[test]
    fn interaction_below_triangle_bound() {
        let dy = DyadicDensity::new(1.5, 2, 40).unwrap();
        let pair = 2.0 * dy.interaction(1.0).unwrap();
        let mom: f64 = dy.moment_terms(1.0).iter().sum();
        assert!(pair > 0.0 && pair <= 2.0 * mom + 1e-9);
    }

    #[test]
    fn certification() {
        let c = certify_unbounded(1.5, 1.0, 0.5, 2, 1.0, 1e3, DEFAULT_K_MAX).unwrap();
        assert!(c.certified(), "{c:?}");
        let weak = certify_unbounded(1.5, 1.0, 0.5, 2, 1e-3, 1e3, DEFAULT_K_MAX).unwrap();
        assert!(weak.k.unwrap() >= c.k.unwrap());
        let bad = certify_unbounded(0.9, 1.0, 0.5, 2, 1.0, 1e3, DEFAULT_K_MAX).unwrap();
        assert!(!bad.certified() && !bad.admissible && bad.evaluations.is_empty());
        assert!(certify_unbounded(1.5, 1.0, 1.5, 2, 1.0, 1e3, 64).is_err());
    }

    #[test]
    fn convergent_series_does_not_certify() {
        // γ above d(1-m)/m: both series converge and the energy stays bounded.
        let c = certify_unbounded(4.0, 1.0, 0.5, 2, 1.0, 1e3, 256).unwrap();
        assert!(!c.admissible && !c.certified());
        let e32 = dyadic_energy(4.0, 1.0, 0.5, 2, 1.0, 32).unwrap().energy;
        let e64 = dyadic_energy(4.0, 1.0, 0.5, 2, 1.0, 64).unwrap().energy;
        assert!((e64 - e32).abs() < 1e-6 && e64 > -1e3, "{e32} {e64}");
    }
}
