//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness so the lines are always printed; exits nonzero when any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use calabi_bergman::center_of_mass::{center_of_mass, mu_outside, three_term_integral, two_term_integral, CenterOfMassReport};
use calabi_bergman::fiber_integrals::{band, critical_point, gaussian_table, log_ia_derivatives, neck_coefficients, Regime};
use calabi_bergman::profile::{double_root_residuals, factor_check, MomentumProfile, ProfileParams};
use calabi_bergman::riemann_roch::{sigma_identity, GeometryData};
use calabi_bergman::transforms::CoordinateChart;

type Outcome = Result<(bool, String), String>;

fn profile(n: u32, s: f64) -> Result<MomentumProfile, String> {
    let p = ProfileParams::new(n, s).map_err(|e| e.to_string())?;
    MomentumProfile::new(p).map_err(|e| e.to_string())
}

fn chart(n: u32, s: f64) -> Result<CoordinateChart, String> {
    CoordinateChart::new(profile(n, s)?).map_err(|e| e.to_string())
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn c1_closed_form() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for s in [-0.5, -1.0, -2.0, -5.0] {
        let mp = profile(1, s)?;
        let c0 = s - 4.0 / 3.0 + (2.0 / 3.0) * (4.0 - 6.0 * s).sqrt();
        let tau0 = 3.0 * (s - c0) / (2.0 * c0);
        worst = worst.max((mp.c0() - c0).abs()).max((mp.tau0() - tau0).abs());
    }
    let t = start.elapsed();
    Ok((worst < 1e-9 && within(t, 1.0), format!("max residual {worst:.2e}, {t:.2?}")))
}

fn c2_double_root() -> Outcome {
    let start = Instant::now();
    let (mut min_f, mut worst) = (f64::INFINITY, 0.0f64);
    for n in 1..=4 {
        for s in [-0.5, -2.0] {
            let mp = profile(n, s)?;
            let rec = factor_check(&mp, 10_000);
            min_f = min_f.min(-rec.residual);
            let (a, b) = double_root_residuals(&mp);
            worst = worst.max(a).max(b);
        }
    }
    let t = start.elapsed();
    Ok((
        min_f > 0.0 && worst < 1e-8 && within(t, 5.0),
        format!("min f {min_f:.4e}, max |phi|,|phi'| at tau0 {worst:.2e}, {t:.2?}"),
    ))
}

fn c3_sigma() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (g, d) in [(2, 2), (3, 4)] {
        let gd = GeometryData::curve(g, d).map_err(|e| e.to_string())?;
        let mp = MomentumProfile::new(gd.profile_params().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        worst = worst.max(sigma_identity(&gd, &mp).residual);
    }
    let t = start.elapsed();
    Ok((worst < 1e-8 && within(t, 1.0), format!("max |c0/2 + sigma| {worst:.2e}, {t:.2?}")))
}

fn c4_gaussian() -> Outcome {
    let rows = gaussian_table().map_err(|e| e.to_string())?;
    let worst = rows.iter().map(|&(_, _, v, e)| ((v - e) / e).abs()).fold(0.0, f64::max);
    let moments = rows.iter().map(|r| r.0).max().unwrap_or(0);
    let mut bs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    bs.dedup();
    Ok((
        worst < 1e-12 && moments == 4 && bs.len() == 3,
        format!("{} entries, max relative residual {worst:.2e}", rows.len()),
    ))
}

fn c5_laplace_decay() -> Outcome {
    let start = Instant::now();
    let ch = chart(1, -2.0)?;
    let mut ratios = Vec::new();
    for a in [2.0, 3.0, 5.0] {
        let e200 = band(&ch, a, 200.0, 1e-12).map_err(|e| e.to_string())?.rel_err();
        let e400 = band(&ch, a, 400.0, 1e-12).map_err(|e| e.to_string())?.rel_err();
        ratios.push(e400 / e200);
    }
    let t = start.elapsed();
    let ok = ratios.iter().all(|r| (0.3..=0.8).contains(r)) && within(t, 30.0);
    Ok((ok, format!("error ratios k=400/k=200 {ratios:.4?}, {t:.2?}")))
}

fn c6_critical_point() -> Outcome {
    let ch = chart(1, -2.0)?;
    let mut worst = 0.0f64;
    for k in [200.0f64, 400.0] {
        for a in 1..=(k.sqrt().floor() as usize) {
            let a = a as f64;
            let cp = critical_point(&ch, a, k).map_err(|e| e.to_string())?;
            worst = worst.max((cp.gap_a - a / k).abs() * k * k / a);
        }
    }
    Ok((worst <= 10.0, format!("max |(tau0 - tau_a) - a/k| k^2/a = {worst:.4}")))
}

fn c7_neck() -> Outcome {
    let ch = chart(1, -2.0)?;
    let k = 400.0f64;
    let mut ok = true;
    let mut parts = Vec::new();
    for a0 in [(k.sqrt() / 2.0).ceil(), k.sqrt().ceil()] {
        let nc = neck_coefficients(&ch, k, a0).map_err(|e| e.to_string())?;
        let (d1, d2) = log_ia_derivatives(&ch, k, a0, 1.0).map_err(|e| e.to_string())?;
        let r1 = ((nc.c1 - d1) / d1).abs();
        let r2 = ((2.0 * nc.c2 - d2) / d2).abs();
        let q = nc.i4 / (3.0 * nc.i2 * nc.i2);
        ok &= r1 <= 5e-3 && r2 <= 5e-2 && (0.9..=1.1).contains(&q);
        parts.push(format!("a0={a0}: c1 rel {r1:.2e}, c2 rel {r2:.2e}, i4/(3 i2^2) {q:.5}"));
    }
    Ok((ok, parts.join("; ")))
}

fn c8_integrals() -> Outcome {
    let three = three_term_integral(1.0, 1e-6).map_err(|e| e.to_string())?.quadrature;
    let mut worst = 0.0f64;
    for aa in [1.0, 10.0, 1e3] {
        worst = worst.max((two_term_integral(aa).map_err(|e| e.to_string())? - 0.5).abs());
    }
    Ok((
        (0.99..=1.01).contains(&three) && worst <= 1e-12,
        format!("three-term {three:.8}, max |two-term - 1/2| {worst:.2e}"),
    ))
}

fn c9_mu_regimes() -> Outcome {
    let start = Instant::now();
    let gd = GeometryData::curve(2, 1).map_err(|e| e.to_string())?;
    let ch = CoordinateChart::new(MomentumProfile::new(gd.profile_params().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let k = 400.0;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(8).build().map_err(|e| e.to_string())?;
    let r = pool.install(|| center_of_mass(&ch, &gd, k, 1e-10)).map_err(|e| e.to_string())?;
    let mu1 = r.entries[0].mu_fiber;
    let inside = [3usize, 5, 10].iter().map(|&a| (r.entries[a - 1].mu_fiber - 1.0).abs()).fold(0.0, f64::max);
    let a_star = Regime::neck_limit(k).floor() as usize;
    let boundary = r.entry(a_star).map(|e| (e.mu_fiber - e.mu_outside).abs()).unwrap_or(f64::INFINITY);
    let t = start.elapsed();
    let ok = (mu1 - 0.5).abs() <= 10.0 / k && inside <= 10.0 / k && boundary <= 10.0 * r.c0.abs() / k && within(t, 300.0);
    Ok((
        ok,
        format!(
            "|mu_1 - 1/2| {:.2e}, max |mu_a - 1| {inside:.2e}, boundary mismatch at a={a_star} {boundary:.2e} (bound {:.2e}), {} bands, {t:.2?}",
            (mu1 - 0.5).abs(),
            10.0 * r.c0.abs() / k,
            r.entries.len()
        ),
    ))
}

fn canonical_reports() -> Result<(CoordinateChart, Vec<CenterOfMassReport>), String> {
    let gd = GeometryData::curve(2, 2).map_err(|e| e.to_string())?;
    let ch = CoordinateChart::new(MomentumProfile::new(gd.profile_params().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let reports = [100.0, 200.0, 400.0]
        .iter()
        .map(|&k| center_of_mass(&ch, &gd, k, 1e-10).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((ch, reports))
}

fn c10_sigma_cancellation(ch: &CoordinateChart, reports: &[CenterOfMassReport]) -> Outcome {
    let dev: Vec<f64> = reports.iter().map(|r| (mu_outside(ch.profile(), r.k) - r.energy.v) * r.k * r.k).collect();
    let ratio = (dev[2] / dev[0]).abs();
    Ok((ratio <= 2.0 && dev.iter().all(|d| d.is_finite()), format!("(mu_outside - v) k^2 = {dev:.6?}, ratio k=400/k=100 {ratio:.4}")))
}

fn c11_energy_trend(reports: &[CenterOfMassReport]) -> Outcome {
    let per_dim: Vec<f64> = reports.iter().map(|r| r.energy.diag_energy / r.dim_hk).collect();
    let ok = per_dim.windows(2).all(|w| w[1] < w[0]);
    let rate: Vec<f64> = reports.iter().zip(&per_dim).map(|(r, e)| e * r.k.sqrt()).collect();
    let show = |xs: &[f64]| xs.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(", ");
    Ok((ok, format!("energy/dim [{}]; informational energy/dim * sqrt(k) [{}]", show(&per_dim), show(&rate))))
}

fn c12_determinism() -> Outcome {
    let run = |threads: &str| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_calabi-bergman"))
            .args(["verify", "--seed", "7", "--threads", threads])
            .output()
            .map_err(|e| e.to_string())?;
        if out.status.code() != Some(0) {
            return Err(format!("verify exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
        }
        Ok(out.stdout)
    };
    let one = run("1")?;
    let eight = run("8")?;
    Ok((one == eight && !one.is_empty(), format!("{} bytes with --threads 1, {} with --threads 8", one.len(), eight.len())))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "n=1 closed-form c0 and tau0", c1_closed_form()),
        (2, "double-root factorization", c2_double_root()),
        (3, "sigma identity", c3_sigma()),
        (4, "Gaussian moment table", c4_gaussian()),
        (5, "Laplace error decay", c5_laplace_decay()),
        (6, "critical-point law", c6_critical_point()),
        (7, "neck coefficients", c7_neck()),
        (8, "three- and two-term integrals", c8_integrals()),
        (9, "mu regimes", c9_mu_regimes()),
    ];
    match canonical_reports() {
        Ok((ch, reports)) => {
            results.push((10, "sigma cancellation", c10_sigma_cancellation(&ch, &reports)));
            results.push((11, "energy trend", c11_energy_trend(&reports)));
        }
        Err(e) => {
            results.push((10, "sigma cancellation", Err(e.clone())));
            results.push((11, "energy trend", Err(e)));
        }
    }
    results.push((12, "determinism across --threads", c12_determinism()));

    let mut failures = 0;
    for (id, title, outcome) in &results {
        let (pass, detail) = match outcome {
            Ok((pass, detail)) => (*pass, detail.clone()),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!("criterion {id:>2} {}: {title}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria passed", results.len() - failures, results.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
