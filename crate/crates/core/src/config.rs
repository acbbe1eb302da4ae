//! Flat `key = value` run configuration with dotted keys.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::kernels::{EntropySpec, KernelSpec, TabulatedKernel};
use crate::measures::{RadialDensity, DEFAULT_CELLS, MIN_CELLS};
use crate::{Error, Result};

/// Round-trip float formatting: 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Every recognised key, in serialization order.
pub const KEYS: &[&str] = &[
    "command",
    "d",
    "epsilon",
    "seed",
    "output",
    "threads",
    "kernel.variant",
    "kernel.beta",
    "kernel.path",
    "entropy.variant",
    "entropy.m",
    "grid.cells",
    "density.shape",
    "density.radius",
    "density.path",
    "scan.r_min",
    "scan.r_max",
    "scan.points",
    "steady.radius",
    "steady.theta",
    "steady.max_iter",
    "particles.n",
    "particles.dt",
    "particles.horizon",
    "particles.stride",
    "dyadic.gamma",
    "dyadic.bound",
    "dyadic.k_max",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Energy,
    Scan,
    Classify,
    Steady,
    Particles,
    Counterexample,
    Properties,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Energy,
        Command::Scan,
        Command::Classify,
        Command::Steady,
        Command::Particles,
        Command::Counterexample,
        Command::Properties,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Energy => "energy",
            Command::Scan => "scan",
            Command::Classify => "classify",
            Command::Steady => "steady",
            Command::Particles => "particles",
            Command::Counterexample => "counterexample",
            Command::Properties => "properties",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelChoice {
    Power(f64),
    Log,
    Tabulated(PathBuf),
}

impl KernelChoice {
    pub fn build(&self) -> Result<KernelSpec> {
        match self {
            KernelChoice::Power(b) => KernelSpec::power(*b),
            KernelChoice::Log => Ok(KernelSpec::Logarithmic),
            KernelChoice::Tabulated(p) => Ok(KernelSpec::tabulated(TabulatedKernel::from_csv(p)?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityChoice {
    /// Normalized indicator of the ball of this radius.
    Ball(f64),
    /// Centered Gaussian with this standard deviation, cut at six of them.
    Gaussian(f64),
    File(PathBuf),
}

impl DensityChoice {
    pub fn build(&self, d: usize, cells: usize) -> Result<RadialDensity> {
        match self {
            DensityChoice::Ball(r) => RadialDensity::uniform_ball(*r, d, cells),
            DensityChoice::Gaussian(s) => {
                RadialDensity::from_profile(d, 6.0 * s, cells, 0.0, |r| (-0.5 * r * r / (s * s)).exp())
            }
            DensityChoice::File(p) => {
                let rho = RadialDensity::read_csv(p)?;
                if rho.dimension() != d {
                    return Err(Error::Validation(format!(
                        "density.path: file holds a d = {} density but d = {d}",
                        rho.dimension()
                    )));
                }
                Ok(rho)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanParams {
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyParams {
    pub radius: f64,
    pub theta: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleParams {
    pub n: usize,
    pub dt: f64,
    pub horizon: f64,
    pub stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicParams {
    pub gamma: f64,
    pub bound: f64,
    pub k_max: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub d: usize,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub output: PathBuf,
    /// Worker threads; 0 means one per core.
    pub threads: usize,
    pub kernel: Option<KernelChoice>,
    pub entropy: EntropySpec,
    pub cells: usize,
    pub density: DensityChoice,
    pub scan: ScanParams,
    pub steady: SteadyParams,
    pub particles: ParticleParams,
    pub dyadic: DyadicParams,
}

/// Where a raw value came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag,
}

/// Raw key/value pairs before typing. Later insertions override earlier ones.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Origin)>,
}

fn error_at(origin: Option<Origin>, key: &str, message: String) -> Error {
    match origin {
        Some(Origin::Line(line)) => Error::Config { line, message: format!("{key}: {message}") },
        Some(Origin::Flag) => Error::Validation(format!("--{key}: {message}")),
        None => Error::Validation(format!("{key}: {message}")),
    }
}

impl RawConfig {
    /// Reads `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config { line: line_no, message: format!("expected `key = value`, got `{line}`") });
            };
            let key = key.trim();
            if raw.entries.contains_key(key) {
                return Err(Error::Config { line: line_no, message: format!("duplicate key `{key}`") });
            }
            raw.insert(key, value.trim(), Origin::Line(line_no))?;
        }
        Ok(raw)
    }

    pub fn insert(&mut self, key: &str, value: &str, origin: Origin) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(error_at(Some(origin), key, "unknown key".into()));
        }
        self.entries.insert(key.to_string(), (value.to_string(), origin));
        Ok(())
    }

    fn origin(&self, key: &str) -> Option<Origin> {
        self.entries.get(key).map(|e| e.1)
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.0.as_str())
    }

    fn typed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, o)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| error_at(Some(*o), key, format!("expected {what}, got `{v}`"))),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        self.typed(key, "a number")
    }

    fn integer(&self, key: &str) -> Result<Option<usize>> {
        self.typed(key, "a non-negative integer")
    }

    fn forbid(&self, key: &str, reason: &str) -> Result<()> {
        match self.origin(key) {
            Some(o) => Err(error_at(Some(o), key, format!("not used {reason}"))),
            None => Ok(()),
        }
    }

    /// Types the entries and validates them against the command.
    pub fn into_config(self) -> Result<RunConfig> {
        let command_text = self.text("command").ok_or_else(|| error_at(None, "command", "missing required key".into()))?;
        let command = Command::parse(command_text).ok_or_else(|| {
            let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
            error_at(self.origin("command"), "command", format!("unknown command `{command_text}` (expected one of {})", names.join(", ")))
        })?;
        let d = self.integer("d")?.ok_or_else(|| error_at(None, "d", "missing required key `d`".into()))?;

        let kernel = match self.text("kernel.variant") {
            None => {
                self.forbid("kernel.beta", "without kernel.variant")?;
                self.forbid("kernel.path", "without kernel.variant")?;
                None
            }
            Some("power") => {
                self.forbid("kernel.path", "by the power kernel")?;
                let beta = self.float("kernel.beta")?.ok_or_else(|| {
                    error_at(self.origin("kernel.variant"), "kernel.beta", "power kernel needs kernel.beta".into())
                })?;
                Some(KernelChoice::Power(beta))
            }
            Some("log") => {
                self.forbid("kernel.beta", "by the logarithmic kernel")?;
                self.forbid("kernel.path", "by the logarithmic kernel")?;
                Some(KernelChoice::Log)
            }
            Some("tabulated") => {
                self.forbid("kernel.beta", "by a tabulated kernel")?;
                let path = self.text("kernel.path").ok_or_else(|| {
                    error_at(self.origin("kernel.variant"), "kernel.path", "tabulated kernel needs kernel.path".into())
                })?;
                Some(KernelChoice::Tabulated(PathBuf::from(path)))
            }
            Some(other) => {
                return Err(error_at(
                    self.origin("kernel.variant"),
                    "kernel.variant",
                    format!("expected power, log or tabulated, got `{other}`"),
                ))
            }
        };

        let entropy = match self.text("entropy.variant") {
            None | Some("linear") => {
                self.forbid("entropy.m", "by the linear entropy")?;
                EntropySpec::Linear
            }
            Some("power") => {
                let m = self.float("entropy.m")?.ok_or_else(|| {
                    error_at(self.origin("entropy.variant"), "entropy.m", "power entropy needs entropy.m".into())
                })?;
                EntropySpec::Power(m)
            }
            Some(other) => {
                return Err(error_at(
                    self.origin("entropy.variant"),
                    "entropy.variant",
                    format!("expected linear or power, got `{other}`"),
                ))
            }
        };

        let density = match self.text("density.shape") {
            None | Some("ball") => {
                self.forbid("density.path", "by a ball density")?;
                DensityChoice::Ball(self.float("density.radius")?.unwrap_or(1.0))
            }
            Some("gaussian") => {
                self.forbid("density.path", "by a Gaussian density")?;
                DensityChoice::Gaussian(self.float("density.radius")?.unwrap_or(1.0))
            }
            Some("file") => {
                self.forbid("density.radius", "by a file density")?;
                let path = self.text("density.path").ok_or_else(|| {
                    error_at(self.origin("density.shape"), "density.path", "file density needs density.path".into())
                })?;
                DensityChoice::File(PathBuf::from(path))
            }
            Some(other) => {
                return Err(error_at(
                    self.origin("density.shape"),
                    "density.shape",
                    format!("expected ball, gaussian or file, got `{other}`"),
                ))
            }
        };

        let config = RunConfig {
            command,
            d,
            epsilon: self.float("epsilon")?,
            seed: self.typed("seed", "a non-negative integer")?.unwrap_or(0),
            output: PathBuf::from(self.text("output").unwrap_or("aggdiff-out")),
            threads: self.integer("threads")?.unwrap_or(0),
            kernel,
            entropy,
            cells: self.integer("grid.cells")?.unwrap_or(DEFAULT_CELLS),
            density,
            scan: ScanParams {
                r_min: self.float("scan.r_min")?.unwrap_or(1e-3),
                r_max: self.float("scan.r_max")?.unwrap_or(1e3),
                points: self.integer("scan.points")?.unwrap_or(61),
            },
            steady: SteadyParams {
                radius: self.float("steady.radius")?.unwrap_or(8.0),
                theta: self.float("steady.theta")?.unwrap_or(crate::steady::DEFAULT_THETA),
                max_iter: self.integer("steady.max_iter")?.unwrap_or(crate::steady::DEFAULT_MAX_ITER),
            },
            particles: ParticleParams {
                n: self.integer("particles.n")?.unwrap_or(200),
                dt: self.float("particles.dt")?.unwrap_or(0.01),
                horizon: self.float("particles.horizon")?.unwrap_or(10.0),
                stride: self.integer("particles.stride")?.unwrap_or(10),
            },
            dyadic: DyadicParams {
                gamma: self.float("dyadic.gamma")?.unwrap_or(1.5),
                bound: self.float("dyadic.bound")?.unwrap_or(1e3),
                k_max: self.integer("dyadic.k_max")?.unwrap_or(crate::dyadic::DEFAULT_K_MAX),
            },
        };
        config.validate(&|key| self.origin(key))?;
        Ok(config)
    }
}

type OriginOf<'a> = dyn Fn(&str) -> Option<Origin> + 'a;

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        RawConfig::parse(text)?.into_config()
    }

    /// Canonical text form; `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("command", self.command.name().into());
        put("d", self.d.to_string());
        if let Some(e) = self.epsilon {
            put("epsilon", fmt17(e));
        }
        put("seed", self.seed.to_string());
        put("output", self.output.display().to_string());
        put("threads", self.threads.to_string());
        match &self.kernel {
            Some(KernelChoice::Power(b)) => {
                put("kernel.variant", "power".into());
                put("kernel.beta", fmt17(*b));
            }
            Some(KernelChoice::Log) => put("kernel.variant", "log".into()),
            Some(KernelChoice::Tabulated(p)) => {
                put("kernel.variant", "tabulated".into());
                put("kernel.path", p.display().to_string());
            }
            None => {}
        }
        match self.entropy {
            EntropySpec::Linear => put("entropy.variant", "linear".into()),
            EntropySpec::Power(m) => {
                put("entropy.variant", "power".into());
                put("entropy.m", fmt17(m));
            }
        }
        put("grid.cells", self.cells.to_string());
        match &self.density {
            DensityChoice::Ball(r) => {
                put("density.shape", "ball".into());
                put("density.radius", fmt17(*r));
            }
            DensityChoice::Gaussian(s) => {
                put("density.shape", "gaussian".into());
                put("density.radius", fmt17(*s));
            }
            DensityChoice::File(p) => {
                put("density.shape", "file".into());
                put("density.path", p.display().to_string());
            }
        }
        put("scan.r_min", fmt17(self.scan.r_min));
        put("scan.r_max", fmt17(self.scan.r_max));
        put("scan.points", self.scan.points.to_string());
        put("steady.radius", fmt17(self.steady.radius));
        put("steady.theta", fmt17(self.steady.theta));
        put("steady.max_iter", self.steady.max_iter.to_string());
        put("particles.n", self.particles.n.to_string());
        put("particles.dt", fmt17(self.particles.dt));
        put("particles.horizon", fmt17(self.particles.horizon));
        put("particles.stride", self.particles.stride.to_string());
        put("dyadic.gamma", fmt17(self.dyadic.gamma));
        put("dyadic.bound", fmt17(self.dyadic.bound));
        put("dyadic.k_max", self.dyadic.k_max.to_string());
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical form.
    /// Digest of the canonical form. `output` and `threads` are left out since
    /// they do not change any computed value.
    pub fn hash(&self) -> String {
        let canonical: String = self
            .serialize()
            .lines()
            .filter(|l| !l.starts_with("output =") && !l.starts_with("threads ="))
            .flat_map(|l| [l, "\n"])
            .collect();
        Sha256::digest(canonical.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// `# <version>, <config-hash>` line closing every emitted CSV.
    pub fn metadata_line(&self) -> String {
        format!("# {}, {}", env!("CARGO_PKG_VERSION"), self.hash())
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        self.kernel.as_ref().ok_or_else(|| Error::Validation("kernel.variant: missing required key".into()))?.build()
    }

    fn validate(&self, origin: &OriginOf<'_>) -> Result<()> {
        let fail = |key: &str, message: String| Err(error_at(origin(key), key, message));
        let positive = |key: &str, x: f64| if x > 0.0 && x.is_finite() { Ok(()) } else { fail(key, format!("must be positive and finite, got {x}")) };
        if self.d == 0 {
            return fail("d", "dimension must be at least 1".into());
        }
        let df = self.d as f64;
        match &self.kernel {
            Some(KernelChoice::Power(b)) => {
                if !b.is_finite() {
                    return fail("kernel.beta", format!("must be finite, got {b}"));
                }
                if *b <= -df {
                    return fail("kernel.beta", format!("beta must exceed -d (beta = {b}, d = {})", self.d));
                }
            }
            Some(KernelChoice::Tabulated(p)) if !p.is_file() => {
                return fail("kernel.path", format!("file `{}` does not exist", p.display()));
            }
            _ => {}
        }
        if let EntropySpec::Power(m) = self.entropy {
            if !(m > 0.0 && m.is_finite()) || m == 1.0 {
                return fail("entropy.m", format!("must be positive and different from 1, got {m}"));
            }
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return fail("epsilon", format!("must be non-negative and finite, got {e}"));
            }
        }
        if self.cells < MIN_CELLS {
            return fail("grid.cells", format!("need at least {MIN_CELLS} cells, got {}", self.cells));
        }
        match &self.density {
            DensityChoice::Ball(r) | DensityChoice::Gaussian(r) => positive("density.radius", *r)?,
            DensityChoice::File(p) if !p.is_file() => {
                return fail("density.path", format!("file `{}` does not exist", p.display()));
            }
            _ => {}
        }

        let need_kernel = || if self.kernel.is_none() { fail("kernel.variant", format!("required by `{}`", self.command.name())) } else { Ok(()) };
        let need_eps = |strict: bool| match self.epsilon {
            None => fail("epsilon", format!("required by `{}`", self.command.name())),
            Some(e) if strict && e == 0.0 => fail("epsilon", format!("must be positive for `{}`", self.command.name())),
            _ => Ok(()),
        };
        match self.command {
            Command::Energy => {
                need_kernel()?;
                need_eps(false)?;
            }
            Command::Scan => {
                need_kernel()?;
                need_eps(false)?;
                positive("scan.r_min", self.scan.r_min)?;
                positive("scan.r_max", self.scan.r_max)?;
                if self.scan.r_max <= self.scan.r_min {
                    return fail("scan.r_max", format!("must exceed scan.r_min = {}", self.scan.r_min));
                }
                if self.scan.points < 2 {
                    return fail("scan.points", "need at least 2 points".into());
                }
            }
            Command::Classify => {
                need_kernel()?;
                need_eps(true)?;
            }
            Command::Steady => {
                need_kernel()?;
                need_eps(true)?;
                if self.entropy != EntropySpec::Linear {
                    return fail("entropy.variant", "the steady-state solver handles linear diffusion only".into());
                }
                positive("steady.radius", self.steady.radius)?;
                if !(self.steady.theta > 0.0 && self.steady.theta <= 1.0) {
                    return fail("steady.theta", format!("damping must lie in (0, 1], got {}", self.steady.theta));
                }
                if self.steady.max_iter == 0 {
                    return fail("steady.max_iter", "must be at least 1".into());
                }
            }
            Command::Particles => {
                need_kernel()?;
                need_eps(false)?;
                let p = self.particles;
                if p.n < 2 {
                    return fail("particles.n", format!("need at least 2 particles, got {}", p.n));
                }
                positive("particles.dt", p.dt)?;
                if !(p.horizon >= p.dt && p.horizon.is_finite()) {
                    return fail("particles.horizon", format!("must be at least particles.dt, got {}", p.horizon));
                }
                if p.stride == 0 {
                    return fail("particles.stride", "must be at least 1".into());
                }
            }
            Command::Counterexample => {
                need_kernel()?;
                need_eps(true)?;
                match self.kernel {
                    Some(KernelChoice::Power(b)) if b > 0.0 => {}
                    _ => return fail("kernel.beta", "the dyadic construction needs a power kernel with beta > 0".into()),
                }
                match self.entropy {
                    EntropySpec::Power(m) if m < 1.0 => {}
                    _ => return fail("entropy.m", "the dyadic construction needs a power entropy with m < 1".into()),
                }
                positive("dyadic.gamma", self.dyadic.gamma)?;
                positive("dyadic.bound", self.dyadic.bound)?;
                if self.dyadic.k_max < 8 {
                    return fail("dyadic.k_max", format!("must be at least 8, got {}", self.dyadic.k_max));
                }
            }
            Command::Properties => {}
        }
        Ok(())
    }
}

/// Reads a config file.
pub fn load(path: &Path) -> Result<RawConfig> {
    RawConfig::parse(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn keller_segel_example_parses() {
        let c = RunConfig::parse("command = classify\nkernel.variant = log\nentropy.variant = linear\nd = 2\nepsilon = 0.25\n").unwrap();
        assert_eq!(c.command, Command::Classify);
        assert_eq!(c.kernel, Some(KernelChoice::Log));
        assert_eq!(c.epsilon, Some(0.25));
    }

    #[test]
    fn missing_dimension_is_named() {
        let err = RunConfig::parse("command = classify\nkernel.variant = log\nepsilon = 0.25\n").unwrap_err();
        assert!(err.to_string().contains("`d`"), "{err}");
    }

    #[test]
    fn beta_below_minus_d() {
        let err = RunConfig::parse("command = energy\nd = 2\nepsilon = 1\nkernel.variant = power\nkernel.beta = -3\n").unwrap_err();
        assert!(err.to_string().contains("beta must exceed -d"), "{err}");
        assert!(matches!(err, Error::Config { line: 5, .. }), "{err:?}");
    }

    #[test]
    fn unknown_and_malformed_lines() {
        let err = RunConfig::parse("command = energy\nd = 2\nkernel.colour = red\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err:?}");
        let err = RunConfig::parse("command = energy\nd 2\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        let err = RunConfig::parse("command = energy\nd = two\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        let err = RunConfig::parse("command = energy\nd = 2\nd = 3\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn command_preconditions() {
        let err = RunConfig::parse("command = steady\nd = 1\nepsilon = 0.5\nkernel.variant = power\nkernel.beta = 2\nentropy.variant = power\nentropy.m = 2\n").unwrap_err();
        assert!(err.to_string().contains("linear diffusion"));
        let err = RunConfig::parse("command = classify\nd = 1\nepsilon = 0\nkernel.variant = log\n").unwrap_err();
        assert!(err.to_string().contains("epsilon"));
        let err = RunConfig::parse("command = energy\nd = 1\nepsilon = 1\nkernel.variant = tabulated\nkernel.path = /no/such/file.csv\n").unwrap_err();
        assert!(err.to_string().contains("does not exist"));
        assert!(RunConfig::parse("command = properties\nd = 1\n").is_ok());
    }

    #[test]
    fn flags_override_file_values() {
        let mut raw = RawConfig::parse("command = classify\nd = 2\nkernel.variant = log\nepsilon = 0.1\n").unwrap();
        raw.insert("epsilon", "0.25", Origin::Flag).unwrap();
        assert_eq!(raw.into_config().unwrap().epsilon, Some(0.25));
        let mut raw = RawConfig::default();
        assert!(raw.insert("nonsense", "1", Origin::Flag).unwrap_err().to_string().contains("--nonsense"));
    }

    fn any_config() -> impl Strategy<Value = RunConfig> {
        let kernel = prop_oneof![
            Just(None),
            Just(Some(KernelChoice::Log)),
            (-0.99f64..4.0).prop_filter("nonzero", |b| *b != 0.0).prop_map(|b| Some(KernelChoice::Power(b))),
        ];
        let entropy = prop_oneof![Just(EntropySpec::Linear), (0.1f64..3.0).prop_filter("not one", |m| *m != 1.0).prop_map(EntropySpec::Power)];
        let density = prop_oneof![(0.1f64..5.0).prop_map(DensityChoice::Ball), (0.1f64..5.0).prop_map(DensityChoice::Gaussian)];
        (
            1usize..4,
            proptest::option::of(0.0f64..10.0),
            any::<u64>(),
            0usize..9,
            kernel,
            entropy,
            8usize..5000,
            density,
            (1e-6f64..1.0, 1.5f64..1e6, 2usize..1000),
            (0.1f64..20.0, 0.01f64..1.0, 1usize..100_000),
            (2usize..10_000, 1e-4f64..0.1, 1usize..100, 1usize..100),
            (0.1f64..3.0, 1.0f64..1e6, 8usize..10_000),
        )
            .prop_map(|(d, epsilon, seed, threads, kernel, entropy, cells, density, s, st, p, dy)| RunConfig {
                command: Command::Properties,
                d,
                epsilon,
                seed,
                output: PathBuf::from("out dir/x"),
                threads,
                kernel,
                entropy,
                cells,
                density,
                scan: ScanParams { r_min: s.0, r_max: s.1, points: s.2 },
                steady: SteadyParams { radius: st.0, theta: st.1, max_iter: st.2 },
                particles: ParticleParams { n: p.0, dt: p.1, horizon: p.1 * p.2 as f64, stride: p.3 },
                dyadic: DyadicParams { gamma: dy.0, bound: dy.1, k_max: dy.2 },
            })
    }

    proptest! {
        #[test]
        fn serialize_round_trips(c in any_config()) {
            let text = c.serialize();
            let back = RunConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &c);
            prop_assert_eq!(back.hash(), c.hash());
            prop_assert_eq!(c.hash().len(), 16);
        }
    }
}
