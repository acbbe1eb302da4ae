//! Euler–Maruyama simulation of the interacting particle system
//!
//! ```text
//! dX_i = -(1/N) Σ_{j≠i} ∇W(X_i - X_j) dt + sqrt(2ε) dB_i
//! ```
//!
//! and free-energy estimates on the empirical measure.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::energy::EnergyBreakdown;
use crate::kernels::{EntropySpec, KernelSpec, Shape};
use crate::measures::{ParticleEnsemble, RadialDensity};
use crate::{check_dimension, Error, Result};

/// Smallest histogram resolution accepted per axis.
pub const MIN_BINS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub d: usize,
    pub kernel: KernelSpec,
    pub epsilon: f64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub snapshot_stride: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_dimension(self.d)?;
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("need N >= 2 particles, got {}", self.n)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be at least dt, got {}", self.horizon)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be non-negative, got {}", self.epsilon)));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParameter("snapshot stride must be positive".into()));
        }
        self.kernel.check_integrable(self.d)
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round().max(1.0) as usize
    }

    /// N points drawn from the uniform unit ball with the run's seed.
    pub fn initial_ensemble(&self) -> Result<ParticleEnsemble> {
        RadialDensity::uniform_ball(1.0, self.d, 256)?.sample_particles(self.n, self.seed)
    }
}

/// ∇W(z) = w'(|z|) z/|z|, written as (w'(s) s / s²) z. The scale factor is
/// resolved once per step so the pair loop avoids dispatch and `powf` where it can.
enum ForceLaw<'a> {
    Quadratic,
    Power(f64),
    Log,
    General(&'a KernelSpec),
}

impl<'a> ForceLaw<'a> {
    fn new(kernel: &'a KernelSpec) -> Self {
        match kernel.shape() {
            Shape::Power(b) if b == 2.0 => ForceLaw::Quadratic,
            Shape::Power(b) => ForceLaw::Power(0.5 * (b - 2.0)),
            Shape::Log => ForceLaw::Log,
            Shape::Table => ForceLaw::General(kernel),
        }
    }

    fn scale(&self, s2: f64) -> Result<f64> {
        Ok(match self {
            ForceLaw::Quadratic => 1.0,
            ForceLaw::Power(e) => s2.powf(*e),
            ForceLaw::Log => 1.0 / s2,
            ForceLaw::General(k) => k.radial_virial(s2.sqrt())? / s2,
        })
    }

    /// Adds the force of z into `out`; false for a coincident pair.
    fn accumulate(&self, z: &[f64], out: &mut [f64]) -> Result<bool> {
        let s2: f64 = z.iter().map(|c| c * c).sum();
        if s2 == 0.0 {
            return Ok(false);
        }
        let scale = self.scale(s2)?;
        out.iter_mut().zip(z).for_each(|(o, c)| *o += scale * c);
        Ok(true)
    }
}

/// One Euler–Maruyama step. Returns the number of coincident pairs whose
/// force was set to zero.
pub fn step(ensemble: &mut ParticleEnsemble, config: &SimConfig) -> Result<usize> {
    let d = ensemble.dimension();
    let n = ensemble.len();
    let index = (ensemble.time() / config.dt).round() as usize + 1;
    // Noise drawn up front, particle-major, so the stream order is fixed.
    let amplitude = (2.0 * config.epsilon * config.dt).sqrt();
    let noise: Vec<f64> = if config.epsilon > 0.0 {
        (0..n * d).map(|_| ensemble.rng.sample::<f64, _>(StandardNormal) * amplitude).collect()
    } else {
        vec![0.0; n * d]
    };
    let x = ensemble.positions();
    let law = ForceLaw::new(&config.kernel);
    let forces: Vec<(Vec<f64>, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut f = vec![0.0; d];
            let mut z = vec![0.0; d];
            let mut coincident = 0;
            let xi = &x[i * d..(i + 1) * d];
            for j in (0..n).filter(|&j| j != i) {
                let xj = &x[j * d..(j + 1) * d];
                z.iter_mut().zip(xi.iter().zip(xj)).for_each(|(c, (a, b))| *c = a - b);
                if !law.accumulate(&z, &mut f)? {
                    coincident += 1;
                }
            }
            Ok((f, coincident))
        })
        .collect::<Result<_>>()?;
    let coincident = forces.iter().map(|(_, c)| c).sum::<usize>() / 2;
    let drift = config.dt / n as f64;
    let positions = ensemble.positions_mut();
    for (i, (f, _)) in forces.iter().enumerate() {
        for k in 0..d {
            positions[i * d + k] += -drift * f[k] + noise[i * d + k];
        }
    }
    if positions.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite { step: index });
    }
    let t = ensemble.time() + config.dt;
    ensemble.set_time(t);
    Ok(coincident)
}

/// Snapshot positions, particle-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub t: f64,
    pub interaction: f64,
    pub variance_about_com: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub summary: Vec<SummaryRow>,
    pub coincident_pairs: usize,
    pub last: ParticleEnsemble,
}

impl Trajectory {
    /// Mean variance about the center of mass over summary rows with t >= t0.
    pub fn mean_variance_after(&self, t0: f64) -> f64 {
        let tail: Vec<f64> = self.summary.iter().filter(|r| r.t >= t0).map(|r| r.variance_about_com).collect();
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Runs from [`SimConfig::initial_ensemble`].
pub fn run(config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    run_from(config.initial_ensemble()?, config)
}

/// Runs from a given ensemble, recording a snapshot and a summary row every
/// `snapshot_stride` steps (and at t = 0).
pub fn run_from(mut ensemble: ParticleEnsemble, config: &SimConfig) -> Result<Trajectory> {
    config.validate()?;
    if ensemble.dimension() != config.d {
        return Err(Error::InvalidParameter("ensemble dimension differs from the configuration".into()));
    }
    let record = |e: &ParticleEnsemble| -> Result<(Snapshot, SummaryRow)> {
        let (interaction, _) = empirical_interaction(e, &config.kernel)?;
        Ok((
            Snapshot { t: e.time(), positions: e.positions().to_vec() },
            SummaryRow { t: e.time(), interaction, variance_about_com: e.variance_about_com() },
        ))
    };
    let mut snapshots = Vec::new();
    let mut summary = Vec::new();
    let (s, r) = record(&ensemble)?;
    snapshots.push(s);
    summary.push(r);
    let mut coincident_pairs = 0;
    for k in 1..=config.steps() {
        coincident_pairs += step(&mut ensemble, config)?;
        if k % config.snapshot_stride == 0 {
            let (s, r) = record(&ensemble)?;
            snapshots.push(s);
            summary.push(r);
        }
    }
    Ok(Trajectory { snapshots, summary, coincident_pairs, last: ensemble })
}

/// (1/(2N²)) Σ_{i≠j} W(X_i - X_j) and the number of coincident pairs left
/// out because W is infinite at the origin.
pub fn empirical_interaction(ensemble: &ParticleEnsemble, kernel: &KernelSpec) -> Result<(f64, usize)> {
    let d = ensemble.dimension();
    let n = ensemble.len();
    let x = ensemble.positions();
    let singular = kernel.value_at_origin().is_infinite();
    let rows: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &x[i * d..(i + 1) * d];
            let mut acc = 0.0;
            let mut excluded = 0;
            for j in i + 1..n {
                let xj = &x[j * d..(j + 1) * d];
                let s = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if s == 0.0 && singular {
                    excluded += 1;
                    continue;
                }
                acc += kernel.kernel_value(s)?;
            }
            Ok((acc, excluded))
        })
        .collect::<Result<_>>()?;
    let sum: f64 = rows.iter().map(|r| r.0).sum();
    let excluded = rows.iter().map(|r| r.1).sum();
    Ok((sum / (n as f64 * n as f64), excluded))
}

/// Default bins per axis: max(16, ⌈N^{1/(d+1)}⌉).
pub fn default_bins(n: usize, d: usize) -> usize {
    ((n as f64).powf(1.0 / (d as f64 + 1.0)).ceil() as usize).max(MIN_BINS)
}

/// Σ U(ρ̂) vol over an equal-width histogram on the bounding box.
pub fn histogram_entropy(ensemble: &ParticleEnsemble, entropy: &EntropySpec, bins: usize) -> Result<f64> {
    if bins < MIN_BINS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_BINS} bins per axis, got {bins}")));
    }
    let d = ensemble.dimension();
    let n = ensemble.len();
    let total = bins
        .checked_pow(d as u32)
        .filter(|t| *t <= 1 << 26)
        .ok_or_else(|| Error::InvalidParameter(format!("{bins}^{d} histogram cells is too many")))?;
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in ensemble.positions().chunks(d) {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let width: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (b - a) / bins as f64).collect();
    if width.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::DegenerateDensity);
    }
    let volume: f64 = width.iter().product();
    let mut counts = vec![0usize; total];
    for p in ensemble.positions().chunks(d) {
        let mut idx = 0;
        for k in 0..d {
            let b = (((p[k] - lo[k]) / width[k]) as usize).min(bins - 1);
            idx = idx * bins + b;
        }
        counts[idx] += 1;
    }
    Ok(counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| entropy.value(c as f64 / (n as f64 * volume)) * volume)
        .sum())
}

/// Free energy of the empirical measure with a histogram entropy estimate.
/// The second value counts coincident pairs left out of the interaction.
pub fn empirical_energy(
    ensemble: &ParticleEnsemble,
    kernel: &KernelSpec,
    entropy: &EntropySpec,
    epsilon: f64,
    bins: usize,
) -> Result<(EnergyBreakdown, usize)> {
    let (interaction, excluded) = empirical_interaction(ensemble, kernel)?;
    let u = if epsilon == 0.0 { 0.0 } else { histogram_entropy(ensemble, entropy, bins)? };
    Ok((EnergyBreakdown::new(interaction, u, epsilon, f64::NAN), excluded))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize, d: usize, kernel: KernelSpec, epsilon: f64, dt: f64, horizon: f64, seed: u64) -> SimConfig {
        SimConfig { n, d, kernel, epsilon, dt, horizon, seed, snapshot_stride: 1 }
    }

    #[test]
    fn two_body_contraction() {
        let cfg = config(2, 1, KernelSpec::PowerLaw(2.0), 0.0, 0.01, 1.0, 0);
        let mut e = ParticleEnsemble::from_positions(1, vec![-1.0, 1.0], 0).unwrap();
        step(&mut e, &cfg).unwrap();
        assert!(((e.positions()[1] - e.positions()[0]) - 2.0 * 0.99).abs() < 1e-15);
        let traj = run_from(ParticleEnsemble::from_positions(1, vec![-1.0, 1.0], 0).unwrap(), &cfg).unwrap();
        let gap = traj.last.positions()[1] - traj.last.positions()[0];
        assert!((gap - 2.0 * (-1f64).exp()).abs() < 2.0 * cfg.dt, "{gap}");
    }

    #[test]
    fn center_of_mass_is_conserved_without_noise() {
        for kernel in [KernelSpec::PowerLaw(2.0), KernelSpec::PowerLaw(-0.5), KernelSpec::Logarithmic] {
            let cfg = config(40, 2, kernel, 0.0, 1e-3, 0.05, 3);
            let e0 = cfg.initial_ensemble().unwrap();
            let traj = run(&cfg).unwrap();
            let (a, b) = (e0.center_of_mass(), traj.last.center_of_mass());
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12), "{a:?} {b:?}");
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let cfg = SimConfig { snapshot_stride: 5, ..config(30, 2, KernelSpec::PowerLaw(1.5), 0.3, 0.01, 0.5, 9) };
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.snapshots, b.snapshots);
        assert_eq!(a.summary, b.summary);
        let c = run(&SimConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a.snapshots.last(), c.snapshots.last());
    }

    #[test]
    fn gradient_flow_decreases_energy() {
        for kernel in [KernelSpec::PowerLaw(2.0), KernelSpec::PowerLaw(3.0)] {
            let cfg = config(25, 2, kernel, 0.0, 1e-3, 0.2, 1);
            let traj = run(&cfg).unwrap();
            assert!(traj.summary.windows(2).all(|w| w[1].interaction <= w[0].interaction + 1e-15));
        }
    }

    #[test]
    fn hand_sums() {
        let e = ParticleEnsemble::from_positions(1, vec![0.0, 2.0], 0).unwrap();
        let (w, excluded) = empirical_interaction(&e, &KernelSpec::PowerLaw(2.0)).unwrap();
        assert!((w - 0.5).abs() < 1e-15 && excluded == 0);
        let e = ParticleEnsemble::from_positions(1, vec![1.0, 1.0, 3.0], 0).unwrap();
        let (_, excluded) = empirical_interaction(&e, &KernelSpec::PowerLaw(-0.5)).unwrap();
        assert_eq!(excluded, 1);
    }

    #[test]
    fn coincident_pairs_are_counted() {
        let cfg = config(3, 1, KernelSpec::PowerLaw(-0.5), 0.0, 1e-3, 1e-3, 0);
        let mut e = ParticleEnsemble::from_positions(1, vec![0.0, 0.0, 1.0], 0).unwrap();
        assert_eq!(step(&mut e, &cfg).unwrap(), 1);
        assert!(e.positions().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn sampled_ball_interaction() {
        let e = RadialDensity::uniform_ball(1.0, 1, 512).unwrap().sample_particles(10_000, 5).unwrap();
        let (w, _) = empirical_interaction(&e, &KernelSpec::PowerLaw(2.0)).unwrap();
        assert!((w - 1.0 / 6.0).abs() < 0.03 / 6.0, "{w}");
    }

    #[test]
    fn histogram_entropy_of_uniform_samples() {
        let e = RadialDensity::uniform_ball(1.0, 1, 512).unwrap().sample_particles(20_000, 2).unwrap();
        let h = histogram_entropy(&e, &EntropySpec::Linear, 32).unwrap();
        assert!((h - 0.5f64.ln()).abs() < 0.02, "{h}");
        assert!(histogram_entropy(&e, &EntropySpec::Linear, 8).is_err());
    }

    #[test]
    fn mean_performs_brownian_motion() {
        // The mean of the positions is driven by noise alone: variance 2εT/N per axis.
        let (n, eps, horizon) = (10, 0.5, 1.0);
        let drifts: Vec<f64> = (0..32)
            .map(|seed| {
                let cfg = SimConfig { snapshot_stride: 1000, ..config(n, 1, KernelSpec::PowerLaw(2.0), eps, 0.01, horizon, seed) };
                let start = cfg.initial_ensemble().unwrap().center_of_mass()[0];
                run(&cfg).unwrap().last.center_of_mass()[0] - start
            })
            .collect();
        let k = drifts.len() as f64;
        let mean = drifts.iter().sum::<f64>() / k;
        let var = drifts.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
        let expected = 2.0 * eps * horizon / n as f64;
        assert!(mean.abs() < 3.0 * (expected / k).sqrt(), "{mean}");
        // Sample variance of 32 normals has relative standard error sqrt(2/31).
        assert!((var / expected - 1.0).abs() < 3.0 * (2.0 / 31.0f64).sqrt(), "{var} vs {expected}");
    }
}
