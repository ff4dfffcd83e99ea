use std::f64::consts::PI;

use calabi_bergman::fiber_integrals::{
    band, band_sweep, critical_point, ia_exact, neck_coefficients, Regime,
};
use calabi_bergman::numerics::{finite_diff_richardson, integrate};
use calabi_bergman::profile::{MomentumProfile, ProfileParams};
use calabi_bergman::riemann_roch::band_count;
use calabi_bergman::transforms::{CoordinateChart, FiberPoint};
use proptest::prelude::*;

/// Frozen from [`midpoint_log`] with 10^6 nodes (unchanged at 5 * 10^5).
const LOG_INT_A1_K10: f64 = 226.963806397573;
const LOG_I_A5_K100: f64 = 3101.539707504029;

fn chart(n: u32, s: f64) -> CoordinateChart {
    CoordinateChart::new(MomentumProfile::new(ProfileParams::new(n, s).unwrap()).unwrap()).unwrap()
}

/// `log ∫_0^tau0 (1+tau) exp(-2a t - k g) dtau` by the composite midpoint
/// rule in `tau`, summed with a common shift.
fn midpoint_log(ch: &CoordinateChart, a: f64, k: f64, nodes: usize) -> f64 {
    let tau0 = ch.tau0();
    let h = tau0 / nodes as f64;
    let logs: Vec<f64> = (0..nodes)
        .map(|i| {
            let tau = (i as f64 + 0.5) * h;
            let p = FiberPoint { tau, gap: tau0 - tau };
            tau.ln_1p() - 2.0 * a * ch.t_at(p) - k * ch.g_at(p)
        })
        .collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + (logs.iter().map(|l| (l - m).exp()).sum::<f64>() * h).ln()
}

#[test]
fn brute_force_oracle_pins_the_integrals() {
    let ch = chart(1, -2.0);
    assert!((midpoint_log(&ch, 1.0, 10.0, 1_000_000) - LOG_INT_A1_K10).abs() < 1e-9);
    assert!((midpoint_log(&ch, 5.0, 100.0, 1_000_000) + (2.0 * PI).ln() - LOG_I_A5_K100).abs() < 1e-9);
}

#[test]
fn library_matches_frozen_values() {
    let ch = chart(1, -2.0);
    let tau0 = ch.tau0();
    let f = |tau: f64| {
        let p = FiberPoint { tau, gap: tau0 - tau };
        (tau.ln_1p() - 2.0 * ch.t_at(p) - 10.0 * ch.g_at(p)).exp()
    };
    let q = integrate(f, 0.0, tau0, 1e-11).unwrap();
    assert!((q.value.ln() - LOG_INT_A1_K10).abs() < 1e-9);
    assert!((ia_exact(&ch, 5.0, 100.0, 1e-12).unwrap() - LOG_I_A5_K100).abs() < 1e-9);
}

#[test]
fn every_band_is_certified_and_log_i_is_convex() {
    let ch = chart(1, -2.0);
    let k = 100.0;
    let count = band_count(k, ch.tau0());
    assert_eq!(count, 300);
    let a: Vec<f64> = (1..=count).map(|a| a as f64).collect();
    let bands: Vec<_> = band_sweep(&ch, k, &a, 1e-10).into_iter().map(|b| b.unwrap()).collect();
    for b in &bands {
        assert!(b.certificate.tail_rel <= 1e-11, "a = {}: {}", b.a, b.certificate.tail_rel);
        assert!(b.quad_rel_error <= 1e-9, "a = {}", b.a);
    }
    for w in bands.windows(3) {
        let d2 = w[0].log_i_exact - 2.0 * w[1].log_i_exact + w[2].log_i_exact;
        assert!(d2 > 0.0, "a = {}: {d2}", w[1].a);
    }
}

#[test]
fn laplace_error_is_uniformly_order_one_over_k() {
    let ch = chart(1, -2.0);
    let scaled: Vec<f64> = [100.0f64, 200.0, 400.0]
        .iter()
        .map(|&k| {
            let last = (k.sqrt() / k.ln()).floor() as usize;
            (1..=last)
                .map(|a| k * band(&ch, a as f64, k, 1e-12).unwrap().rel_err())
                .fold(0.0, f64::max)
        })
        .collect();
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    assert!(hi < 1.0 && hi / lo < 1.5, "{scaled:?}");
}

#[test]
fn ratios_are_gauge_invariant() {
    let ch = chart(2, -1.0);
    let other = ch.regauge(0.2 * ch.tau0()).unwrap();
    let k = 150.0;
    let pairs = [(1.0, 2.0), (3.0, 17.0), (10.0, 40.0)];
    for (a, b) in pairs {
        let (xa, xb) = (band(&ch, a, k, 1e-12).unwrap(), band(&ch, b, k, 1e-12).unwrap());
        let (ya, yb) = (band(&other, a, k, 1e-12).unwrap(), band(&other, b, k, 1e-12).unwrap());
        let lhs = (xa.log_i_exact - xb.log_i_exact) - (xa.e_a0 - xb.e_a0);
        let rhs = (ya.log_i_exact - yb.log_i_exact) - (ya.e_a0 - yb.e_a0);
        assert!((lhs - rhs).abs() < 1e-8, "({a}, {b})");
        assert!(((xa.e_a0 - xa.log_i_exact) - (ya.e_a0 - ya.log_i_exact)).abs() < 1e-8);
        // The gauge moves every t by the same constant.
        assert!(((xa.t_a - ya.t_a) - (xb.t_a - yb.t_a)).abs() < 1e-8 * xa.t_a.abs().max(1.0));
    }
}

#[test]
fn first_neck_coefficient_matches_finite_difference() {
    let ch = chart(1, -2.0);
    let k = 400.0f64;
    let a0 = k.sqrt().ceil();
    let nc = neck_coefficients(&ch, k, a0).unwrap();
    let fd = finite_diff_richardson(|a| ia_exact(&ch, a, k, 1e-13).unwrap(), a0, 1, 1.0).unwrap();
    assert!(((nc.c1 - fd) / fd).abs() < 5e-3);
    assert!((nc.c1 + 2.0 * (nc.t_a + nc.i1)).abs() < 1e-12 * nc.c1.abs());
    // c2 = (1 + o(1)) 2/(-E'').
    assert!(nc.c2 > 0.0);
    assert!((nc.c2 * -nc.e_a2 / 2.0 - 1.0).abs() < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn critical_gap_follows_a_over_k(s in -5.0f64..-0.5, k in 50.0f64..600.0, frac in 0.0f64..1.0) {
        let ch = chart(1, s);
        let a = 1.0 + frac * (k.sqrt() - 1.0);
        let cp = critical_point(&ch, a, k).unwrap();
        prop_assert!((cp.gap_a - a / k).abs() * k * k / a <= 10.0);
    }

    #[test]
    fn regimes_are_ordered(k in 20.0f64..2000.0, s in -5.0f64..-0.5) {
        let tau0 = chart(1, s).tau0();
        let tags: Vec<Regime> = (1..=band_count(k, tau0)).map(|a| Regime::classify(a as f64, k, tau0)).collect();
        prop_assert!(tags.windows(2).all(|w| w[0] <= w[1]));
    }
}
