//! Radially symmetric measures on uniform radial grids.
//!
//! A [`RadialMeasure`] is piecewise constant on the shells
//! `{r_i <= |x| < r_{i+1}}` of a uniform grid `r_i = i h`, `h = r_max / M`,
//! plus an optional atom at the origin. [`RadialDensity`] adds the
//! probability normalization.

use std::cmp::Ordering;
use std::io::Write;
use std::ops::Deref;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{check_dimension, unit_ball_volume, Error, Result};

/// Tolerance on the total mass of a probability density.
pub const MASS_TOL: f64 = 1e-10;

/// Minimum number of cells accepted by the constructors.
pub const MIN_CELLS: usize = 8;

/// Default grid size.
pub const DEFAULT_CELLS: usize = 4096;

/// Nonnegative radial measure, not necessarily normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMeasure {
    d: usize,
    r_max: f64,
    values: Vec<f64>,
    atom: f64,
}

impl RadialMeasure {
    pub fn new(d: usize, r_max: f64, values: Vec<f64>, atom: f64) -> Result<Self> {
        check_dimension(d)?;
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid radius must be positive, got {r_max}")));
        }
        if values.len() < 2 {
            return Err(Error::GridTooCoarse { cells: values.len(), min: 2 });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("density value {v} is not a nonnegative number")));
        }
        if !(atom.is_finite() && atom >= 0.0) {
            return Err(Error::InvalidParameter(format!("atom mass {atom} must be nonnegative")));
        }
        Ok(Self { d, r_max, values, atom })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn spacing(&self) -> f64 {
        self.r_max / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn atom_mass(&self) -> f64 {
        self.atom
    }

    /// Grid node r_i.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Midpoint of cell i.
    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing()
    }

    /// Volume of the shell {r_i <= |x| < r_{i+1}} in R^d.
    pub fn shell_volume(&self, i: usize) -> f64 {
        shell_volume(self.d, self.node(i), self.node(i + 1))
    }

    /// Mass carried by cell i.
    pub fn cell_mass(&self, i: usize) -> f64 {
        self.values[i] * self.shell_volume(i)
    }

    pub fn mass(&self) -> f64 {
        self.atom + (0..self.cells()).map(|i| self.cell_mass(i)).sum::<f64>()
    }

    /// ∫|x|^alpha dρ, integrating |x|^alpha exactly on each shell. The atom
    /// contributes nothing.
    pub fn moment(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("moment order must be positive, got {alpha}")));
        }
        let d = self.d as f64;
        let c = d * unit_ball_volume(self.d) / (alpha + d);
        Ok((0..self.cells())
            .map(|i| {
                let (a, b) = (self.node(i), self.node(i + 1));
                self.values[i] * c * (b.powf(alpha + d) - a.powf(alpha + d))
            })
            .sum())
    }

    /// Push-forward under x -> r x: values scale by r^{-d}, the grid by r.
    pub fn dilate(&self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("dilation factor must be positive, got {r}")));
        }
        let scale = r.powi(-(self.d as i32));
        Ok(Self {
            d: self.d,
            r_max: self.r_max * r,
            values: self.values.iter().map(|v| v * scale).collect(),
            atom: self.atom,
        })
    }

    /// Multiplies values and atom by c, so the mass scales by c.
    pub fn rescale_mass(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass factor must be positive, got {c}")));
        }
        Ok(Self {
            d: self.d,
            r_max: self.r_max,
            values: self.values.iter().map(|v| v * c).collect(),
            atom: self.atom * c,
        })
    }

    /// Merges pairs of neighbouring cells, preserving the mass of each pair.
    /// Returns `None` for an odd number of cells.
    pub fn coarsen(&self) -> Option<Self> {
        if self.cells() % 2 != 0 || self.cells() < 4 {
            return None;
        }
        let values = (0..self.cells() / 2)
            .map(|k| {
                let (i, j) = (2 * k, 2 * k + 1);
                let m = self.cell_mass(i) + self.cell_mass(j);
                m / shell_volume(self.d, self.node(i), self.node(j + 1))
            })
            .collect();
        Some(Self { d: self.d, r_max: self.r_max, values, atom: self.atom })
    }

    /// Largest cell value.
    pub fn sup(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    fn is_nonincreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }
}

pub fn shell_volume(d: usize, a: f64, b: f64) -> f64 {
    unit_ball_volume(d) * (b.powi(d as i32) - a.powi(d as i32))
}

/// Probability density: a [`RadialMeasure`] of mass 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialDensity(RadialMeasure);

impl Deref for RadialDensity {
    type Target = RadialMeasure;
    fn deref(&self) -> &RadialMeasure {
        &self.0
    }
}

impl RadialDensity {
    /// Validates nonnegativity and unit mass.
    pub fn new(d: usize, r_max: f64, values: Vec<f64>, atom: f64) -> Result<Self> {
        Self::try_from(RadialMeasure::new(d, r_max, values, atom)?)
    }

    /// Samples `profile` at cell midpoints and scales the result so that the
    /// absolutely continuous part carries mass `1 - atom`.
    pub fn from_profile<F: Fn(f64) -> f64>(
        d: usize,
        r_max: f64,
        cells: usize,
        atom: f64,
        profile: F,
    ) -> Result<Self> {
        if cells < MIN_CELLS {
            return Err(Error::GridTooCoarse { cells, min: MIN_CELLS });
        }
        if !(0.0..=1.0).contains(&atom) {
            return Err(Error::InvalidParameter(format!("atom mass {atom} outside [0, 1]")));
        }
        let h = r_max / cells as f64;
        let raw: Vec<f64> = (0..cells).map(|i| profile((i as f64 + 0.5) * h)).collect();
        let probe = RadialMeasure::new(d, r_max, raw, 0.0)?;
        let ac = probe.mass();
        if !(ac > 0.0) {
            if atom == 1.0 {
                return Self::new(d, r_max, vec![0.0; cells], 1.0);
            }
            return Err(Error::DegenerateDensity);
        }
        let scale = (1.0 - atom) / ac;
        let values = probe.values.iter().map(|v| v * scale).collect();
        Self::new(d, r_max, values, atom)
    }

    /// The normalized indicator of the ball of radius r, on a grid of `cells`
    /// cells spanning exactly [0, r].
    pub fn uniform_ball(r: f64, d: usize, cells: usize) -> Result<Self> {
        check_dimension(d)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {r}")));
        }
        if cells < MIN_CELLS {
            return Err(Error::GridTooCoarse { cells, min: MIN_CELLS });
        }
        let value = 1.0 / (unit_ball_volume(d) * r.powi(d as i32));
        Self::new(d, r, vec![value; cells], 0.0)
    }

    pub fn measure(&self) -> &RadialMeasure {
        &self.0
    }

    pub fn into_measure(self) -> RadialMeasure {
        self.0
    }

    pub fn dilate(&self, r: f64) -> Result<Self> {
        Ok(Self(self.0.dilate(r)?))
    }

    /// Radially symmetric decreasing rearrangement.
    ///
    /// Cells are sorted by value and refilled from the origin outward; when
    /// all shells have equal volume (d = 1) this is an exact permutation,
    /// otherwise a refilled block may straddle a shell boundary and that shell
    /// receives the mass-weighted average.
    pub fn rearrange_decreasing(&self) -> Result<Self> {
        if self.atom > 0.0 {
            return Err(Error::AtomNotSupported("rearrangement"));
        }
        if self.is_nonincreasing() {
            return Ok(self.clone());
        }
        let m = &self.0;
        let mut order: Vec<usize> = (0..m.cells()).collect();
        order.sort_by(|&a, &b| m.values[b].partial_cmp(&m.values[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));

        if m.d == 1 {
            let values = order.iter().map(|&i| m.values[i]).collect();
            return Ok(Self(RadialMeasure { values, ..m.clone() }));
        }

        // Sorted blocks occupy consecutive volume intervals starting at 0;
        // shell i occupies [V(r_i), V(r_{i+1})].
        let omega = unit_ball_volume(m.d);
        let di = m.d as i32;
        let mut values = vec![0.0; m.cells()];
        let mut block = 0usize;
        let mut block_end = m.shell_volume(order[0]);
        for (i, slot) in values.iter_mut().enumerate() {
            let lo = omega * m.node(i).powi(di);
            let hi = omega * m.node(i + 1).powi(di);
            let mut mass = 0.0;
            let mut cursor = lo;
            while cursor < hi && block < order.len() {
                let top = block_end.min(hi);
                if top > cursor {
                    mass += m.values[order[block]] * (top - cursor);
                    cursor = top;
                }
                if block_end <= hi {
                    block += 1;
                    if block < order.len() {
                        block_end += m.shell_volume(order[block]);
                    }
                } else {
                    break;
                }
            }
            *slot = mass / (hi - lo);
        }
        for i in 1..values.len() {
            if values[i] > values[i - 1] {
                values[i] = values[i - 1];
            }
        }
        Ok(Self(RadialMeasure { values, ..m.clone() }))
    }

    /// Draws N i.i.d. points: radius by inverse CDF with linear interpolation
    /// of the cumulative radial mass, direction uniform on the sphere.
    pub fn sample_particles(&self, n: usize, seed: u64) -> Result<ParticleEnsemble> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 particles, got {n}")));
        }
        let m = &self.0;
        let mut cumulative = Vec::with_capacity(m.cells() + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..m.cells() {
            acc += m.cell_mass(i);
            cumulative.push(acc);
        }
        if !(acc > 0.0) && m.atom <= 0.0 {
            return Err(Error::DegenerateDensity);
        }
        let total = acc + m.atom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = m.d;
        let mut positions = Vec::with_capacity(n * d);
        let mut direction = vec![0.0; d];
        for _ in 0..n {
            let u: f64 = rng.random::<f64>() * total;
            if u >= acc {
                positions.extend(std::iter::repeat_n(0.0, d));
                continue;
            }
            let k = cumulative.partition_point(|&c| c <= u).saturating_sub(1).min(m.cells() - 1);
            let width = cumulative[k + 1] - cumulative[k];
            let frac = if width > 0.0 { (u - cumulative[k]) / width } else { 0.5 };
            let radius = m.node(k) + frac * m.spacing();
            random_direction(&mut rng, &mut direction);
            positions.extend(direction.iter().map(|c| c * radius));
        }
        Ok(ParticleEnsemble { d, positions, rng, time: 0.0 })
    }

    /// Writes `r,value` rows (cell midpoints) and a `<path>.meta` sidecar
    /// holding `d` and `atom_mass`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["r", "value"])?;
        for i in 0..self.cells() {
            w.write_record([crate::config::fmt17(self.midpoint(i)), crate::config::fmt17(self.values[i])])?;
        }
        w.flush()?;
        let mut meta = std::fs::File::create(sidecar_path(path))?;
        writeln!(meta, "d = {}", self.d)?;
        writeln!(meta, "atom_mass = {}", crate::config::fmt17(self.atom))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let meta_text = std::fs::read_to_string(sidecar_path(path))?;
        let mut d = None;
        let mut atom = 0.0;
        for (lineno, line) in meta_text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Config {
                line: lineno + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let parse_err = |what: &str| Error::Config { line: lineno + 1, message: format!("bad {what}: `{}`", v.trim()) };
            match k.trim() {
                "d" => d = Some(v.trim().parse::<usize>().map_err(|_| parse_err("d"))?),
                "atom_mass" => atom = v.trim().parse::<f64>().map_err(|_| parse_err("atom_mass"))?,
                other => {
                    return Err(Error::Config { line: lineno + 1, message: format!("unknown key `{other}`") })
                }
            }
        }
        let d = d.ok_or(Error::Config { line: 0, message: "sidecar missing `d`".into() })?;

        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let r: f64 = rec.get(0).unwrap_or("").trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("bad radius in {}", path.display()))
            })?;
            let v: f64 = rec.get(1).unwrap_or("").trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("bad value in {}", path.display()))
            })?;
            radii.push(r);
            values.push(v);
        }
        if radii.len() < 2 {
            return Err(Error::GridTooCoarse { cells: radii.len(), min: 2 });
        }
        let h = 2.0 * radii[0];
        for (i, r) in radii.iter().enumerate() {
            if ((i as f64 + 0.5) * h - r).abs() > 1e-9 * h.max(r.abs()) {
                return Err(Error::InvalidParameter(format!(
                    "radii in {} are not midpoints of a uniform grid starting at 0",
                    path.display()
                )));
            }
        }
        Self::new(d, h * radii.len() as f64, values, atom)
    }
}

impl TryFrom<RadialMeasure> for RadialDensity {
    type Error = Error;
    fn try_from(m: RadialMeasure) -> Result<Self> {
        if m.atom > 1.0 {
            return Err(Error::InvalidParameter(format!("atom mass {} exceeds 1", m.atom)));
        }
        let mass = m.mass();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::MassNotNormalized { mass, tol: MASS_TOL });
        }
        Ok(Self(m))
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

fn random_direction<R: Rng>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        let mut norm2 = 0.0;
        for c in out.iter_mut() {
            *c = rng.sample(StandardNormal);
            norm2 += *c * *c;
        }
        if norm2 > 1e-300 {
            let inv = norm2.sqrt().recip();
            out.iter_mut().for_each(|c| *c *= inv);
            return;
        }
    }
}

/// N particles in R^d with their random stream.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    d: usize,
    positions: Vec<f64>,
    pub(crate) rng: ChaCha8Rng,
    time: f64,
}

impl ParticleEnsemble {
    /// Particle-major flat positions, length N·d.
    pub fn from_positions(d: usize, positions: Vec<f64>, seed: u64) -> Result<Self> {
        check_dimension(d)?;
        if positions.len() % d != 0 || positions.len() / d < 2 {
            return Err(Error::InvalidParameter("need at least 2 particles with d coordinates each".into()));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { step: 0 });
        }
        Ok(Self { d, positions, rng: ChaCha8Rng::seed_from_u64(seed), time: 0.0 })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.d..(i + 1) * self.d]
    }

    pub fn center_of_mass(&self) -> Vec<f64> {
        let n = self.len() as f64;
        let mut com = vec![0.0; self.d];
        for p in self.positions.chunks(self.d) {
            com.iter_mut().zip(p).for_each(|(c, x)| *c += x);
        }
        com.iter_mut().for_each(|c| *c /= n);
        com
    }

    /// (1/N) Σ |X_i - X̄|².
    pub fn variance_about_com(&self) -> f64 {
        let com = self.center_of_mass();
        let sum: f64 = self
            .positions
            .chunks(self.d)
            .map(|p| p.iter().zip(&com).map(|(x, c)| (x - c) * (x - c)).sum::<f64>())
            .sum();
        sum / self.len() as f64
    }

    pub(crate) fn positions_mut(&mut self) -> &mut Vec<f64> {
        &mut self.positions
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    /// Concatenates ensembles (same dimension), each shifted so its center of
    /// mass sits at the origin. Used to pool stationary samples.
    pub fn pooled_centered(parts: &[ParticleEnsemble], seed: u64) -> Result<Self> {
        let d = parts.first().ok_or(Error::EmptySupport)?.d;
        let mut positions = Vec::new();
        for p in parts {
            if p.d != d {
                return Err(Error::InvalidParameter("cannot pool ensembles of different dimensions".into()));
            }
            let com = p.center_of_mass();
            for x in p.positions.chunks(d) {
                positions.extend(x.iter().zip(&com).map(|(a, c)| a - c));
            }
        }
        Self::from_positions(d, positions, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bumpy(d: usize) -> RadialDensity {
        RadialDensity::from_profile(d, 3.0, 240, 0.0, |r| (1.0 + (3.0 * r).sin().powi(2)) * (-r * r).exp()).unwrap()
    }

    #[test]
    fn uniform_ball_values() {
        let b = RadialDensity::uniform_ball(1.0, 1, 64).unwrap();
        assert!(b.values().iter().all(|v| (*v - 0.5).abs() < 1e-15));
        let b = RadialDensity::uniform_ball(2.0, 2, 64).unwrap();
        assert!(b.values().iter().all(|v| (*v - 1.0 / (4.0 * PI)).abs() < 1e-15));
        for r in [0.5, 1.0, 3.0] {
            for d in 1..=3 {
                let b = RadialDensity::uniform_ball(r, d, 100).unwrap();
                assert!((b.mass() - 1.0).abs() < MASS_TOL);
            }
        }
    }

    #[test]
    fn uniform_ball_rejects_bad_input() {
        assert!(matches!(RadialDensity::uniform_ball(0.0, 2, 64), Err(Error::InvalidParameter(_))));
        assert!(matches!(RadialDensity::uniform_ball(-1.0, 2, 64), Err(Error::InvalidParameter(_))));
        assert!(matches!(RadialDensity::uniform_ball(1.0, 2, 7), Err(Error::GridTooCoarse { .. })));
    }

    #[test]
    fn dilation_of_unit_ball_is_ball() {
        for d in 1..=3 {
            let r = 2.7;
            let a = RadialDensity::uniform_ball(1.0, d, 50).unwrap().dilate(r).unwrap();
            let b = RadialDensity::uniform_ball(r, d, 50).unwrap();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() < 1e-10);
            }
            assert!((a.r_max() - b.r_max()).abs() < 1e-12);
        }
    }

    #[test]
    fn dilation_identity_and_errors() {
        let rho = bumpy(2);
        assert_eq!(rho.dilate(1.0).unwrap(), rho);
        assert!(rho.dilate(0.0).is_err());
        assert!(rho.dilate(-2.0).is_err());
    }

    #[test]
    fn moments_scale_under_dilation() {
        for d in 1..=3 {
            let rho = bumpy(d);
            let m2 = rho.moment(2.0).unwrap();
            let m2r = rho.dilate(2.0).unwrap().moment(2.0).unwrap();
            assert!((m2r - 4.0 * m2).abs() < 1e-8 * m2.max(1.0));
            let m = rho.moment(0.7).unwrap();
            let mr = rho.dilate(0.3).unwrap().moment(0.7).unwrap();
            assert!((mr - 0.3f64.powf(0.7) * m).abs() < 1e-10);
        }
    }

    #[test]
    fn unit_ball_second_moments() {
        let m = RadialDensity::uniform_ball(1.0, 1, 64).unwrap().moment(2.0).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-14);
        // Oracle: 3 ∫_0^1 r^4 dr = 3/5 (normalized radial law of the 3-ball).
        let oracle = crate::quadrature::gl8().integrate(0.0, 1.0, |r| 3.0 * r.powi(4));
        let m = RadialDensity::uniform_ball(1.0, 3, 64).unwrap().moment(2.0).unwrap();
        assert!((m - oracle).abs() < 1e-13);
        assert!((m - 0.6).abs() < 1e-13);
    }

    #[test]
    fn rescale_mass_is_linear() {
        let rho = bumpy(3);
        assert_eq!(rho.rescale_mass(1.0).unwrap(), *rho.measure());
        assert!((rho.rescale_mass(0.5).unwrap().mass() - 0.5).abs() < 1e-12);
        assert!(rho.rescale_mass(0.0).is_err());
    }

    #[test]
    fn rearrangement_of_annulus_is_ball() {
        // d = 1, value 1/2 on [1, 2), zero on [0, 1).
        let rho = RadialDensity::from_profile(1, 2.0, 200, 0.0, |r| if r >= 1.0 { 0.5 } else { 0.0 }).unwrap();
        let star = rho.rearrange_decreasing().unwrap();
        for (i, v) in star.values().iter().enumerate() {
            let expected = if i < 100 { 0.5 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12, "cell {i}: {v}");
        }
    }

    #[test]
    fn rearrangement_fixes_decreasing_densities() {
        let rho = RadialDensity::from_profile(3, 2.0, 64, 0.0, |r| (-r).exp()).unwrap();
        assert_eq!(rho.rearrange_decreasing().unwrap(), rho);
    }

    #[test]
    fn rearrangement_rejects_atoms() {
        let rho = RadialDensity::from_profile(2, 1.0, 64, 0.25, |_| 1.0).unwrap();
        assert!(matches!(rho.rearrange_decreasing(), Err(Error::AtomNotSupported(_))));
    }

    #[test]
    fn rearrangement_in_higher_dimension_is_monotone_and_mass_preserving() {
        for d in 2..=3 {
            let rho = bumpy(d);
            let star = rho.rearrange_decreasing().unwrap();
            assert!(star.values().windows(2).all(|w| w[1] <= w[0]));
            assert!((star.mass() - 1.0).abs() < MASS_TOL);
            assert_eq!(star.rearrange_decreasing().unwrap(), star);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_matches_cdf() {
        let rho = bumpy(2);
        let a = rho.sample_particles(10_000, 7).unwrap();
        let b = rho.sample_particles(10_000, 7).unwrap();
        assert_eq!(a.positions(), b.positions());
        let n = a.len() as f64;
        for &radius in &[0.5, 1.0, 1.5] {
            let inside = (0..a.len())
                .filter(|&i| a.particle(i).iter().map(|x| x * x).sum::<f64>().sqrt() < radius)
                .count() as f64;
            // CDF oracle: mass of the cells below `radius`, which is a grid node here.
            let k = (radius / rho.spacing()).round() as usize;
            let cdf: f64 = (0..k).map(|i| rho.cell_mass(i)).sum();
            assert!((inside / n - cdf).abs() < 3.0 / n.sqrt(), "B_{radius}: {} vs {cdf}", inside / n);
        }
        let two = rho.sample_particles(2, 1).unwrap();
        assert_eq!(two.len(), 2);
        assert!(two.positions().iter().all(|x| x.is_finite()));
        assert!(rho.sample_particles(1, 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rho.csv");
        let rho = RadialDensity::from_profile(2, 1.5, 32, 0.2, |r| 1.0 + r).unwrap();
        rho.write_csv(&path).unwrap();
        let back = RadialDensity::read_csv(&path).unwrap();
        assert_eq!(back.dimension(), 2);
        assert_eq!(back.atom_mass(), rho.atom_mass());
        for (x, y) in back.values().iter().zip(rho.values()) {
            assert_eq!(x, y);
        }
        assert!((back.r_max() - rho.r_max()).abs() < 1e-14);
    }
}
