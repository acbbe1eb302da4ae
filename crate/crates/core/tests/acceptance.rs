//! Acceptance suite: one PASS/FAIL line per criterion, each with a time budget.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use aggdiff::dyadic::{certify_unbounded, dyadic_series, DEFAULT_K_MAX};
use aggdiff::energy::free_energy_total;
use aggdiff::kernels::{log_nodes, EntropySpec, KernelSpec, Slope, TabulatedKernel};
use aggdiff::measures::{ParticleEnsemble, RadialDensity};
use aggdiff::particles::{default_bins, empirical_energy, run, SimConfig};
use aggdiff::properties::{derivative_consistency, moment_sandwich, riesz_rearrangement, scan_minimum, virial_identity};
use aggdiff::scaling::{classify_regime, fair_competition_threshold, Verdict};
use aggdiff::steady::{flatness_bound, solve_fixed_point, DEFAULT_THETA, EL_TOL};
use rayon::prelude::*;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn keller_segel() -> Result<String, String> {
    let v2 = classify_regime(&KernelSpec::Logarithmic, &EntropySpec::Linear, 0.25, 2);
    ensure(v2.verdict == Verdict::Critical { epsilon_c: 0.25 }, || format!("d = 2: {}", v2.verdict))?;
    let v3 = classify_regime(&KernelSpec::Logarithmic, &EntropySpec::Linear, 1.0 / 6.0, 3);
    match v3.verdict {
        Verdict::Critical { epsilon_c } if (epsilon_c - 1.0 / 6.0).abs() < 1e-12 => {}
        other => return Err(format!("d = 3: {other}")),
    }
    Ok(format!("d = 2: {}, d = 3: {}", v2.verdict, v3.verdict))
}

fn general_kernel_critical() -> Result<String, String> {
    let nodes = log_nodes(1e-4, 1e4, 40);
    let table = TabulatedKernel::from_fn(nodes, |r| 3.0 * (1.0 + r).ln()).map_err(|e| e.to_string())?;
    let k = KernelSpec::tabulated(table);
    let Slope::Finite(l) = k.asymptotic_slope() else {
        return Err(format!("slope {:?}", k.asymptotic_slope()));
    };
    ensure((l - 3.0).abs() < 1e-3, || format!("L = {l}"))?;
    let below = classify_regime(&k, &EntropySpec::Linear, 0.4, 2);
    ensure(below.verdict == Verdict::MinimizerExists, || format!("eps = 0.4: {} ({})", below.verdict, below.trace))?;
    let above = classify_regime(&k, &EntropySpec::Linear, 1.0, 2);
    ensure(above.verdict == Verdict::UnboundedBelowAtInfinity, || format!("eps = 1: {} ({})", above.verdict, above.trace))?;
    Ok(format!("L = {l:.6}; eps = 0.4 -> {}, eps = 1 -> {}", below.verdict, above.verdict))
}

fn regime_table() -> Result<String, String> {
    use Verdict::*;
    let d = 2;
    // (beta, m, eps, expected): aggregation-dominated, both sides of fair
    // competition, the slow-diffusion existence region and the fast-diffusion window.
    let grid = [
        (-1.5, 1.5, 0.05, UnboundedBelowAtZero),
        (-1.5, 1.5, 2.0, UnboundedBelowAtZero),
        (-1.0, 1.5, 0.05, UnboundedBelowAtZero),
        (-1.0, 1.5, 2.0, Inconclusive),
        (1.0, 1.5, 0.05, Inconclusive),
        (1.0, 1.5, 2.0, Inconclusive),
        (-1.5, 1.75, 0.05, UnboundedBelowAtZero),
        (-1.5, 1.75, 2.0, Inconclusive),
        (-1.0, 1.75, 0.05, MinimizerExists),
        (-1.0, 1.75, 2.0, MinimizerExists),
        (1.0, 1.75, 0.05, Inconclusive),
        (1.0, 1.75, 2.0, Inconclusive),
        (-1.5, 0.5, 0.05, UnboundedBelowAtZero),
        (-1.5, 0.5, 2.0, UnboundedBelowAtZero),
        (-1.0, 0.5, 0.05, UnboundedBelowAtZero),
        (-1.0, 0.5, 2.0, UnboundedBelowAtZero),
        (1.0, 0.5, 0.05, UnboundedBelowAtZero),
        (1.0, 0.5, 2.0, UnboundedBelowAtInfinity),
    ];
    let mut corroborated = 0;
    for (beta, m, eps, expected) in grid {
        let k = KernelSpec::PowerLaw(beta);
        let s = EntropySpec::Power(m);
        let v = classify_regime(&k, &s, eps, d);
        ensure(v.verdict == expected, || {
            format!("beta = {beta}, m = {m}, eps = {eps}: got {} expected {expected} ({})", v.verdict, v.trace)
        })?;
        if !matches!(expected, UnboundedBelowAtZero | UnboundedBelowAtInfinity) {
            continue;
        }
        let line = d as f64 * (1.0 - m);
        let fast_window = m < 1.0 && beta >= line - 1e-12 && beta > 0.0 && eps <= fair_competition_threshold(beta, m, d);
        let min = if fast_window {
            // Certified by the dyadic density rather than by a dilation ray.
            let gamma = 0.5 * (beta + line / m);
            let c = certify_unbounded(gamma, beta, m, d, eps, 1e3, DEFAULT_K_MAX).map_err(|e| e.to_string())?;
            c.min_energy
        } else {
            scan_minimum(&k, &s, eps, d, expected).map_err(|e| e.to_string())?.unwrap_or(f64::NAN)
        };
        ensure(min < -1e3, || format!("beta = {beta}, m = {m}, eps = {eps}: {expected} but lowest energy {min:.3e}"))?;
        corroborated += 1;
    }
    Ok(format!("{} cells match, {corroborated} unbounded verdicts reach energy < -1e3", grid.len()))
}

fn gaussian_steady_state() -> Result<String, String> {
    let eps = 0.5;
    let rep = solve_fixed_point(&KernelSpec::PowerLaw(2.0), eps, 1, 8.0, 4096, DEFAULT_THETA, 10_000).map_err(|e| e.to_string())?;
    let rho = &rep.density;
    let err = (0..rho.cells())
        .map(|i| {
            let x = rho.midpoint(i);
            (rho.values()[i] - (2.0 * PI * eps).powf(-0.5) * (-x * x / (2.0 * eps)).exp()).abs()
        })
        .fold(0.0f64, f64::max);
    ensure(rep.converged, || format!("not converged after {} iterations", rep.iterations))?;
    ensure(err < 1e-3, || format!("sup error {err:.3e}"))?;
    ensure(rep.el_residual_sup < EL_TOL, || format!("residual {:.3e}", rep.el_residual_sup))?;
    Ok(format!("sup error {err:.2e}, residual {:.2e}, {} iterations", rep.el_residual_sup, rep.iterations))
}

fn flatness() -> Result<String, String> {
    let nodes: Vec<f64> = (0..=1000).map(|i| 40.0 * i as f64 / 1000.0).collect();
    let k = KernelSpec::tabulated(TabulatedKernel::from_fn(nodes, |r| (r * r).min(4.0)).map_err(|e| e.to_string())?);
    let (eps, d) = (1.0, 2);
    let mut sups = Vec::new();
    for radius in [2.0, 4.0, 8.0, 16.0] {
        let rep = solve_fixed_point(&k, eps, d, radius, 256, DEFAULT_THETA, 10_000).map_err(|e| e.to_string())?;
        let bound = flatness_bound(&k, eps, d, radius);
        ensure(rep.converged, || format!("R = {radius}: not converged"))?;
        ensure(rep.density.sup() <= bound + 1e-10, || format!("R = {radius}: sup {} > bound {bound}", rep.density.sup()))?;
        sups.push(rep.density.sup());
    }
    ensure(sups.windows(2).all(|w| w[1] < w[0]), || format!("sup-norms not decreasing: {sups:?}"))?;
    let shown: Vec<String> = sups.iter().map(|s| format!("{s:.3e}")).collect();
    Ok(format!("sup-norms at R = 2, 4, 8, 16: {}", shown.join(", ")))
}

fn virial() -> Result<String, String> {
    let o = virial_identity(10, 2024).map_err(|e| e.to_string())?;
    ensure(o.passed, || o.detail.clone())?;
    Ok(o.detail)
}

fn riesz_and_moments() -> Result<String, String> {
    let r = riesz_rearrangement(100, 7).map_err(|e| e.to_string())?;
    let m = moment_sandwich(100, 8).map_err(|e| e.to_string())?;
    ensure(r.passed, || r.detail.clone())?;
    ensure(m.passed, || m.detail.clone())?;
    Ok(format!("{}; {}", r.detail, m.detail))
}

fn dyadic() -> Result<String, String> {
    let (beta, m, d) = (1.0, 0.5, 2);
    let c = certify_unbounded(1.5, beta, m, d, 1.0, 1e3, DEFAULT_K_MAX).map_err(|e| e.to_string())?;
    let k = c.k.ok_or_else(|| format!("not certified, lowest energy {:.3e}", c.min_energy))?;
    let s = dyadic_series(1.5, beta, m, d, 64).map_err(|e| e.to_string())?;
    let n = s.moment_partial_sums.len();
    // Geometric tail beyond the last ring with ratio 2^{-(γ-β)}.
    let ratio = 2f64.powf(-(1.5 - beta));
    let tail = s.moment_terms[n - 1] * ratio / (1.0 - ratio);
    let step = s.moment_partial_sums[n - 1] - s.moment_partial_sums[n - 2];
    ensure(step < 1e-6 && tail < 1e-6, || format!("moment partial sums not settled: step {step:.2e}, tail {tail:.2e}"))?;
    let bad = certify_unbounded(0.9, beta, m, d, 1.0, 1e3, DEFAULT_K_MAX).map_err(|e| e.to_string())?;
    ensure(!bad.certified() && !bad.admissible, || "gamma = 0.9 was certified".into())?;
    Ok(format!("certified at K = {k} (energy {:.3e}); moment tail {tail:.1e}; gamma = 0.9 rejected", c.min_energy))
}

fn particle_stationarity() -> Result<String, String> {
    let (eps, n, horizon) = (0.5, 200, 50.0);
    let runs: Vec<_> = (0..32u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = SimConfig { n, d: 1, kernel: KernelSpec::PowerLaw(2.0), epsilon: eps, dt: 0.01, horizon, seed, snapshot_stride: 10 };
            run(&cfg).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let variance = runs.iter().map(|t| t.mean_variance_after(horizon / 2.0)).sum::<f64>() / runs.len() as f64;
    let expected = eps * (n as f64 - 1.0) / n as f64;
    ensure((variance - expected).abs() < 0.1 * expected, || format!("variance {variance:.4} vs {expected}"))?;

    let finals: Vec<ParticleEnsemble> = runs.into_iter().map(|t| t.last).collect();
    let pooled = ParticleEnsemble::pooled_centered(&finals, 0).map_err(|e| e.to_string())?;
    let bins = default_bins(pooled.len(), 1);
    let (empirical, _) = empirical_energy(&pooled, &KernelSpec::PowerLaw(2.0), &EntropySpec::Linear, eps, bins).map_err(|e| e.to_string())?;
    let gaussian = RadialDensity::from_profile(1, 8.0, 4096, 0.0, |x| (-x * x / (2.0 * eps)).exp()).map_err(|e| e.to_string())?;
    let analytic = free_energy_total(&gaussian, &KernelSpec::PowerLaw(2.0), &EntropySpec::Linear, eps).map_err(|e| e.to_string())?;
    let rel = (empirical.total - analytic).abs() / analytic.abs();
    ensure(rel < 0.05, || format!("empirical free energy {:.4} vs Gaussian {analytic:.4}", empirical.total))?;
    Ok(format!(
        "variance {variance:.4} (expected {expected}); free energy {:.4} vs {analytic:.4} ({:.1}%)",
        empirical.total,
        100.0 * rel
    ))
}

fn derivative() -> Result<String, String> {
    let o = derivative_consistency(20, 99).map_err(|e| e.to_string())?;
    ensure(o.passed, || o.detail.clone())?;
    Ok(o.detail)
}

fn main() {
    let checks: [(u32, &str, u64, Check); 10] = [
        (1, "Keller-Segel criticality", 1, keller_segel),
        (2, "general-kernel critical diffusion", 5, general_kernel_critical),
        (3, "homogeneous regime table", 60, regime_table),
        (4, "Gaussian steady state", 10, gaussian_steady_state),
        (5, "flatness and spreading", 60, flatness),
        (6, "virial identity at the optimal dilation", 30, virial),
        (7, "Riesz and moment suites", 60, riesz_and_moments),
        (8, "dyadic counterexample", 30, dyadic),
        (9, "particle stationarity", 120, particle_stationarity),
        (10, "dilation derivative consistency", 10, derivative),
    ];
    let mut failures = 0;
    for (id, name, budget, check) in checks {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("over the {budget} s budget; {d}")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("{status} [{id}] {name} ({:.2} s / {budget} s): {detail}", elapsed.as_secs_f64());
    }
    println!("acceptance: {} passed, {failures} failed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
