//! Command-line front end: argument handling, dispatch and artifact output.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use clap::{Arg, ArgAction};

use crate::config::{fmt17, load, Command, Origin, RawConfig, RunConfig, KEYS};
use crate::dyadic::{dyadic_energy, is_admissible};
use crate::energy::free_energy;
use crate::kernels::EntropySpec;
use crate::particles::{run as run_particles, SimConfig};
use crate::properties::run_all;
use crate::scaling::{classify_regime, dilation_derivative, dilation_energy_scan, log_grid};
use crate::steady::{solve_fixed_point, SteadyStateReport};
use crate::{EnergyBreakdown, Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

/// Result of a successful dispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// One line for standard output.
    pub summary: String,
    /// Set when a check ran but did not pass.
    pub failed: bool,
}

fn open(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_table(dir: &Path, name: &str, header: &str, rows: &[String], meta: &str) -> Result<()> {
    let mut w = open(dir, name)?;
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    writeln!(w, "{meta}")?;
    w.flush()?;
    Ok(())
}

fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = OpenOptions::new().append(true).open(path)?;
    writeln!(f, "{line}")?;
    Ok(())
}

/// Runs the configured command and writes its artifacts into `config.output`.
pub fn execute(config: &RunConfig) -> Result<Outcome> {
    let dir = config.output.as_path();
    fs::create_dir_all(dir)?;
    let meta = config.metadata_line();
    let d = config.d;
    let ok = |summary: String| Ok(Outcome { summary, failed: false });
    match config.command {
        Command::Energy => {
            let kernel = config.kernel_spec()?;
            let rho = config.density.build(d, config.cells)?;
            let e = free_energy(&rho, &kernel, &config.entropy, config.epsilon.unwrap_or(0.0))?;
            write_table(dir, "energy.csv", EnergyBreakdown::CSV_HEADER, &[e.csv_row()], &meta)?;
            ok(format!("energy {}", fmt17(e.total)))
        }
        Command::Scan => {
            let kernel = config.kernel_spec()?;
            let eps = config.epsilon.unwrap_or(0.0);
            let grid = log_grid(config.scan.r_min, config.scan.r_max, config.scan.points)?;
            let scan = dilation_energy_scan(&kernel, &config.entropy, eps, d, &grid)?;
            let rows = scan
                .iter()
                .map(|&(r, e)| {
                    let g = dilation_derivative(&kernel, &config.entropy, eps, d, r)?;
                    Ok(format!("{},{},{}", fmt17(r), fmt17(e), fmt17(g)))
                })
                .collect::<Result<Vec<_>>>()?;
            write_table(dir, "scan.csv", "r,energy,derivative", &rows, &meta)?;
            ok(format!("scan {} radii", rows.len()))
        }
        Command::Classify => {
            let kernel = config.kernel_spec()?;
            let v = classify_regime(&kernel, &config.entropy, config.epsilon.unwrap_or(0.0), d);
            let mut w = open(dir, "classify.txt")?;
            writeln!(w, "{}", v.verdict)?;
            writeln!(w, "trace: {}", v.trace)?;
            writeln!(w, "{meta}")?;
            w.flush()?;
            ok(v.verdict.to_string())
        }
        Command::Steady => {
            let kernel = config.kernel_spec()?;
            let s = config.steady;
            let rep = solve_fixed_point(&kernel, config.epsilon.unwrap_or(0.0), d, s.radius, config.cells, s.theta, s.max_iter)?;
            let density_path = dir.join("steady_density.csv");
            rep.density.write_csv(&density_path)?;
            append_line(&density_path, &meta)?;
            write_table(dir, "steady_report.csv", SteadyStateReport::CSV_HEADER, &[rep.csv_row()], &meta)?;
            Ok(Outcome {
                summary: format!("steady converged={} residual={}", rep.converged, fmt17(rep.el_residual_sup)),
                failed: !rep.converged,
            })
        }
        Command::Particles => {
            let p = config.particles;
            let sim = SimConfig {
                n: p.n,
                d,
                kernel: config.kernel_spec()?,
                epsilon: config.epsilon.unwrap_or(0.0),
                dt: p.dt,
                horizon: p.horizon,
                seed: config.seed,
                snapshot_stride: p.stride,
            };
            let traj = run_particles(&sim)?;
            let coords: Vec<String> = (1..=d).map(|k| format!("x_{k}")).collect();
            let mut w = open(dir, "particles_snapshots.csv")?;
            writeln!(w, "t,particle_id,{}", coords.join(","))?;
            for snap in &traj.snapshots {
                for (i, x) in snap.positions.chunks(d).enumerate() {
                    let xs: Vec<String> = x.iter().map(|v| fmt17(*v)).collect();
                    writeln!(w, "{},{i},{}", fmt17(snap.t), xs.join(","))?;
                }
            }
            writeln!(w, "{meta}")?;
            w.flush()?;
            let rows: Vec<String> = traj
                .summary
                .iter()
                .map(|r| format!("{},{},{}", fmt17(r.t), fmt17(r.interaction), fmt17(r.variance_about_com)))
                .collect();
            write_table(dir, "particles_summary.csv", "t,interaction,variance_about_com", &rows, &meta)?;
            ok(format!("particles {} snapshots, {} coincident pairs", traj.snapshots.len(), traj.coincident_pairs))
        }
        Command::Counterexample => {
            let beta = match config.kernel_spec()?.homogeneity() {
                Some(b) => b,
                None => return Err(Error::Validation("kernel.variant: power kernel required".into())),
            };
            let EntropySpec::Power(m) = config.entropy else {
                return Err(Error::Validation("entropy.variant: power entropy required".into()));
            };
            let eps = config.epsilon.unwrap_or(0.0);
            let dy = config.dyadic;
            let mut rows = Vec::new();
            let mut reached = None;
            let mut k = 8;
            while k <= dy.k_max {
                let e = dyadic_energy(dy.gamma, beta, m, d, eps, k)?;
                rows.push(format!("{k},{},{},{}", fmt17(e.moment), fmt17(e.entropy_integral), fmt17(e.energy)));
                if e.energy < -dy.bound {
                    reached = Some(k);
                    break;
                }
                k *= 2;
            }
            write_table(dir, "counterexample.csv", "K,moment_sum,entropy_sum,energy", &rows, &meta)?;
            let admissible = is_admissible(dy.gamma, beta, m, d);
            let summary = match reached {
                Some(k) => format!("certified at K = {k} (admissible = {admissible})"),
                None => format!("not certified up to K = {} (admissible = {admissible})", dy.k_max),
            };
            ok(summary)
        }
        Command::Properties => {
            let outcomes = run_all(config.seed)?;
            let mut w = open(dir, "properties.txt")?;
            for o in &outcomes {
                writeln!(w, "{o}")?;
            }
            writeln!(w, "{meta}")?;
            w.flush()?;
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            Ok(Outcome { summary: format!("properties: {} passed, {failed} failed", outcomes.len() - failed), failed: failed > 0 })
        }
    }
}

fn command_line() -> clap::Command {
    let mut cmd = clap::Command::new("aggdiff")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Free-energy toolkit for aggregation-diffusion equations")
        .arg(Arg::new("positional_command").value_name("COMMAND").help("energy, scan, classify, steady, particles, counterexample or properties"))
        .arg(Arg::new("config").long("config").value_name("PATH").help("config file with `key = value` lines"));
    for key in KEYS {
        cmd = cmd.arg(Arg::new(*key).long(*key).value_name("VALUE").allow_negative_numbers(true).action(ArgAction::Set));
    }
    cmd
}

fn single_line(s: &str) -> String {
    s.replace('\n', " ")
}

/// Parses arguments, runs, and returns the process exit status. Errors are
/// reported on stderr as `code,message`.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match command_line().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            eprintln!("{EXIT_VALIDATION},{}", single_line(e.to_string().trim()));
            return EXIT_VALIDATION;
        }
    };
    let result = (|| -> Result<Outcome> {
        let mut raw = match matches.get_one::<String>("config") {
            Some(p) => load(Path::new(p))?,
            None => RawConfig::default(),
        };
        for key in KEYS {
            if let Some(v) = matches.get_one::<String>(key) {
                raw.insert(key, v, Origin::Flag)?;
            }
        }
        if let Some(c) = matches.get_one::<String>("positional_command") {
            raw.insert("command", c, Origin::Flag)?;
        }
        let config = raw.into_config()?;
        let mut pool = rayon::ThreadPoolBuilder::new();
        if config.threads > 0 {
            pool = pool.num_threads(config.threads);
        }
        let pool = pool.build().map_err(|e| Error::Validation(format!("threads: {e}")))?;
        pool.install(|| execute(&config))
    })();
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.failed {
                eprintln!("{EXIT_NUMERICAL},{}", single_line(&outcome.summary));
                EXIT_NUMERICAL
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{code},{}", single_line(&e.to_string()));
            code
        }
    }
}
