use calabi_bergman::numerics::bisect_predicate;
use calabi_bergman::profile::{double_root_residuals, eval_phi, factor_check, solve_c0, MomentumProfile, ProfileParams};
use proptest::prelude::*;

fn closed_form_n1(s: f64) -> (f64, f64) {
    let c0 = s - 4.0 / 3.0 + (2.0 / 3.0) * (4.0 - 6.0 * s).sqrt();
    (c0, 3.0 * (s - c0) / (2.0 * c0))
}

/// Minimum of `phi(.; c)` on a dense grid of `[0, 2 tau0]`.
fn grid_min(p: &ProfileParams, c: f64, tau0: f64) -> f64 {
    let m = 20_000;
    (1..=m)
        .map(|i| eval_phi(p, c, 2.0 * tau0 * i as f64 / m as f64))
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn n1_agrees_with_closed_form() {
    for s in [-0.5, -1.0, -2.0, -5.0] {
        let sol = solve_c0(&ProfileParams::new(1, s).unwrap()).unwrap();
        let (c0, tau0) = closed_form_n1(s);
        assert!((sol.c0 - c0).abs() < 1e-9, "S = {s}");
        assert!((sol.tau0 - tau0).abs() < 1e-9, "S = {s}");
    }
}

#[test]
fn n2_matches_bisection_oracle() {
    let p = ProfileParams::new(2, -1.0).unwrap();
    let mp = MomentumProfile::new(p.clone()).unwrap();
    // Largest c whose grid minimum stays nonnegative, independent of the
    // solver's root polishing.
    let tau_hi = 4.0 * mp.tau0();
    let oracle = bisect_predicate(
        |c| (1..=40_000).all(|i| eval_phi(&p, c, tau_hi * i as f64 / 40_000.0) >= 0.0),
        -5.0,
        0.0,
        1e-12,
    );
    assert!((mp.c0() - oracle).abs() < 1e-7);
    let (phi0, dphi0) = double_root_residuals(&mp);
    assert!(phi0 < 1e-10 && dphi0 < 1e-8);
}

#[test]
fn grid_minimum_decreases_past_c0() {
    for (n, s) in [(1, -2.0), (2, -1.0), (3, -0.5)] {
        let p = ProfileParams::new(n, s).unwrap();
        let mp = MomentumProfile::new(p.clone()).unwrap();
        let (c0, tau0) = (mp.c0(), mp.tau0());
        for j in 3..=8 {
            let d = 10f64.powi(-j);
            // Larger c lowers phi for tau > 0; the minimum turns negative past c0.
            assert!(grid_min(&p, c0 + d, tau0) < grid_min(&p, c0 - d, tau0), "n = {n}, d = {d}");
        }
        assert!(grid_min(&p, c0 + 1e-3, tau0) < 0.0);
        assert!(grid_min(&p, c0 - 1e-3, tau0) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phi_is_affine_in_c(
        n in 1u32..=4,
        s in -6.0f64..-0.1,
        c1 in -3.0f64..1.0,
        c2 in -3.0f64..1.0,
        tau in 0.0f64..8.0,
    ) {
        let p = ProfileParams::new(n, s).unwrap();
        let mid = eval_phi(&p, 0.5 * (c1 + c2), tau);
        let avg = 0.5 * (eval_phi(&p, c1, tau) + eval_phi(&p, c2, tau));
        prop_assert!((mid - avg).abs() <= 1e-12 * (1.0 + avg.abs()));
    }

    #[test]
    fn double_root_has_multiplicity_two(n in 1u32..=4, s in -6.0f64..-0.2) {
        let mp = MomentumProfile::new(ProfileParams::new(n, s).unwrap()).unwrap();
        prop_assert!(mp.phi_second_at_tau0().abs() > 1e-6);
        prop_assert!(mp.eta2_at_tau0().unwrap() > 0.0);
        let rec = factor_check(&mp, 2_000);
        prop_assert!(rec.pass, "{}", rec.detail);
        let (phi0, dphi0) = double_root_residuals(&mp);
        prop_assert!(phi0 < 1e-8 && dphi0 < 1e-8);
    }

    #[test]
    fn phi_starts_with_slope_two(n in 1u32..=4, s in -6.0f64..-0.2, c in -3.0f64..0.0) {
        let p = ProfileParams::new(n, s).unwrap();
        let h = 1e-6;
        let d = (eval_phi(&p, c, h) - eval_phi(&p, c, -h)) / (2.0 * h);
        prop_assert!(eval_phi(&p, c, 0.0).abs() < 1e-15);
        prop_assert!((d - 2.0).abs() < 1e-6);
    }
}
