use calabi_bergman::fiber_integrals::e_at;
use calabi_bergman::numerics::integrate;
use calabi_bergman::profile::{MomentumProfile, ProfileParams};
use calabi_bergman::transforms::{CoordinateChart, FiberPoint};
use proptest::prelude::*;

fn chart(n: u32, s: f64) -> CoordinateChart {
    CoordinateChart::new(MomentumProfile::new(ProfileParams::new(n, s).unwrap()).unwrap()).unwrap()
}

#[test]
fn t_and_g_match_quadrature_of_the_defining_integrands() {
    let ch = chart(2, -1.0);
    let mp = ch.profile();
    let r = ch.tau_ref();
    for tau in [0.05 * ch.tau0(), 0.3 * ch.tau0(), 0.9 * ch.tau0(), 0.999 * ch.tau0()] {
        let t = integrate(|x| 1.0 / mp.phi(x), r.min(tau), r.max(tau), 1e-12).unwrap().value * (tau - r).signum();
        let g = 2.0 * integrate(|x| (x - ch.tau0()) / mp.phi(x), r.min(tau), r.max(tau), 1e-12).unwrap().value * (tau - r).signum();
        assert!((ch.t_of_tau(tau).unwrap() - t).abs() < 1e-9 * t.abs().max(1.0), "tau = {tau}");
        assert!((ch.g_of_tau(tau).unwrap() - g).abs() < 1e-9 * g.abs().max(1.0), "tau = {tau}");
    }
}

#[test]
fn large_t_inverse_asymptotics() {
    let ch = chart(1, -2.0);
    let t = 1e3;
    let gap = ch.tau0() - ch.tau_of_t(t);
    let predicted = 1.0 / (ch.profile().eta2_at_tau0().unwrap() * t);
    assert!((gap / predicted - 1.0).abs() < 0.05);
}

#[test]
fn g_grows_like_log_gap() {
    let ch = chart(1, -2.0);
    let ratios: Vec<f64> = (2..=6)
        .map(|j| {
            let gap = 10f64.powi(-j);
            ch.g_at(FiberPoint { tau: ch.tau0() - gap, gap }) / gap.ln()
        })
        .collect();
    assert!(ratios.iter().all(|r| *r > 0.0));
    // Converges to 2/eta2(tau0) = 12 at rate 1/log(gap).
    let limit = 2.0 / ch.profile().eta2_at_tau0().unwrap();
    let last = ratios[ratios.len() - 1];
    assert!((last - limit).abs() < 1.0, "{ratios:?}");
    assert!(ratios.windows(2).all(|w| (w[1] - limit).abs() < (w[0] - limit).abs()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauge_shifts_are_constant(
        n in 1u32..=3,
        s in -4.0f64..-0.3,
        r1 in 0.05f64..0.95,
        r2 in 0.05f64..0.95,
        x in prop::collection::vec(-20.0f64..20.0, 4),
    ) {
        let a = chart(n, s);
        let tau0 = a.tau0();
        let b = a.regauge(r2 * tau0).unwrap();
        let a = a.regauge(r1 * tau0).unwrap();
        let p0 = FiberPoint::from_logit(tau0, x[0]);
        let (dt, dg) = (b.t_at(p0) - a.t_at(p0), b.g_at(p0) - a.g_at(p0));
        for &s in &x[1..] {
            let p = FiberPoint::from_logit(tau0, s);
            let st = 1.0 + a.t_at(p).abs() + a.t_at(p0).abs();
            let sg = 1.0 + a.g_at(p).abs() + a.g_at(p0).abs();
            prop_assert!(((b.t_at(p) - a.t_at(p)) - dt).abs() < 1e-9 * st);
            prop_assert!(((b.g_at(p) - a.g_at(p)) - dg).abs() < 1e-9 * sg);
        }
    }

    #[test]
    fn t_is_increasing(n in 1u32..=3, s in -4.0f64..-0.3, u in 0.001f64..0.999, v in 0.001f64..0.999) {
        prop_assume!((u - v).abs() > 1e-6);
        let ch = chart(n, s);
        let (lo, hi) = if u < v { (u, v) } else { (v, u) };
        prop_assert!(ch.t_of_tau(lo * ch.tau0()).unwrap() < ch.t_of_tau(hi * ch.tau0()).unwrap());
    }

    #[test]
    fn round_trip(t in -50.0f64..50.0) {
        let ch = chart(1, -2.0);
        let p = ch.point_of_t(t);
        prop_assert!((ch.t_at(p) - t).abs() < 1e-10 * t.abs().max(1.0));
    }

    #[test]
    fn dg_dt_is_twice_the_gap(n in 1u32..=3, s in -4.0f64..-0.3, x in -6.0f64..6.0) {
        let ch = chart(n, s);
        let p = FiberPoint::from_logit(ch.tau0(), x);
        let t = ch.t_at(p);
        let h = 1e-4 * t.abs().max(1.0);
        let (gp, gm) = (ch.g_at(ch.point_of_t(t + h)), ch.g_at(ch.point_of_t(t - h)));
        let dg = (gp - gm) / (2.0 * h);
        prop_assert!((dg + 2.0 * p.gap).abs() < 1e-5 * (1.0 + p.gap));
        // The -k g term contributes +2k(tau0 - tau) to E_a'.
        let k = 50.0;
        let (_, e1, _) = e_at(&ch, 1.0, k, p);
        let (_, e1_k0, _) = e_at(&ch, 1.0, 0.0, p);
        prop_assert!(((e1 - e1_k0) - 2.0 * k * p.gap).abs() < 1e-9 * (1.0 + e1.abs()));
    }
}
