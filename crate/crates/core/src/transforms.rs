//! Fiber coordinates: `t(tau) = ∫_{tau_ref}^tau dx/phi(x)` and the potential
//! weight `g(tau) = 2 ∫_{tau_ref}^tau (x - tau0)/phi(x) dx`.
//!
//! At `c0` the integrands have a double pole at `tau0` and a simple pole at
//! `0`. Writing `phi = delta^2 Dn / N` with `delta = x - tau0`,
//! `N = (1+x)^n` and `Dn = 2x f(x)`, the rational function `h = N/Dn` is
//! expanded around `tau0` and `0`:
//!
//! ```text
//! 1/phi          = h0/delta^2 + h1/delta + r0/x + Wt(x)/(2 f(x))
//! (x - tau0)/phi = h0/delta            + rg0/x + Wg(x)/(2 f(x))
//! ```
//!
//! with polynomials `Wt`, `Wg`. The singular parts integrate in closed form
//! and the smooth remainders are integrated with a cached panel sum.

use crate::numerics::{find_root, kronrod15};
use crate::poly::Poly;
use crate::profile::MomentumProfile;
use crate::verify::VerificationRecord;
use crate::{Error, Result};

const PANELS: usize = 256;

#[derive(Debug, Clone)]
struct Antiderivatives {
    tau0: f64,
    h0: f64,
    h1: f64,
    r0: f64,
    rg0: f64,
    f: Poly,
    wt: Poly,
    wg: Poly,
    panel: f64,
    prefix_t: Vec<f64>,
    prefix_g: Vec<f64>,
}

impl Antiderivatives {
    fn new(mp: &MomentumProfile) -> Result<Self> {
        let f = mp.cofactor()?.clone();
        let tau0 = mp.tau0();
        let n = mp.n();
        let num = Poly::one_plus_x_pow(n);
        let den = &Poly(vec![0.0, 2.0]) * &f;
        let (nv, nd) = (num.eval(tau0), num.derivative().eval(tau0));
        let (dv, dd) = (den.eval(tau0), den.derivative().eval(tau0));
        let h0 = nv / dv;
        let h1 = (nd * dv - nv * dd) / (dv * dv);

        let lin = Poly(vec![h0 - h1 * tau0, h1]);
        let qt = &num - &(&lin * &den);
        let qt = qt.deflate(tau0).0.deflate(tau0).0;
        let qg = (&num - &den.scale(h0)).deflate(tau0).0;
        let f_at_0 = f.eval(0.0);
        let r0 = qt.eval(0.0) / (2.0 * f_at_0);
        let rg0 = qg.eval(0.0) / (2.0 * f_at_0);
        let wt = (&qt - &f.scale(2.0 * r0)).div_x().0;
        let wg = (&qg - &f.scale(2.0 * rg0)).div_x().0;

        let mut out = Antiderivatives {
            tau0,
            h0,
            h1,
            r0,
            rg0,
            f,
            wt,
            wg,
            panel: tau0 / PANELS as f64,
            prefix_t: Vec::with_capacity(PANELS + 1),
            prefix_g: Vec::with_capacity(PANELS + 1),
        };
        let (mut st, mut sg) = (0.0, 0.0);
        out.prefix_t.push(0.0);
        out.prefix_g.push(0.0);
        for i in 0..PANELS {
            let (lo, hi) = (i as f64 * out.panel, (i + 1) as f64 * out.panel);
            st += kronrod15(|x| out.smooth_t(x), lo, hi);
            sg += kronrod15(|x| out.smooth_g(x), lo, hi);
            out.prefix_t.push(st);
            out.prefix_g.push(sg);
        }
        Ok(out)
    }

    fn smooth_t(&self, x: f64) -> f64 {
        self.wt.eval(x) / (2.0 * self.f.eval(x))
    }

    fn smooth_g(&self, x: f64) -> f64 {
        self.wg.eval(x) / (2.0 * self.f.eval(x))
    }

    fn prefix(&self, tau: f64, table: &[f64], integrand: impl Fn(f64) -> f64) -> f64 {
        let i = ((tau / self.panel) as usize).min(PANELS - 1);
        let lo = i as f64 * self.panel;
        table[i] + kronrod15(integrand, lo, tau)
    }

    /// Antiderivative of `1/phi`, given `tau` and `gap = tau0 - tau`.
    fn t_raw(&self, tau: f64, gap: f64) -> f64 {
        self.h0 / gap + self.h1 * gap.ln() + self.r0 * tau.ln() + self.prefix(tau, &self.prefix_t, |x| self.smooth_t(x))
    }

    /// Antiderivative of `(x - tau0)/phi`.
    fn g_raw(&self, tau: f64, gap: f64) -> f64 {
        self.h0 * gap.ln() + self.rg0 * tau.ln() + self.prefix(tau, &self.prefix_g, |x| self.smooth_g(x))
    }
}

/// A point of the open fiber interval, carried with its distance to `tau0`
/// so that neither end loses relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberPoint {
    pub tau: f64,
    pub gap: f64,
}

impl FiberPoint {
    /// Point with logit coordinate `s = log(tau / (tau0 - tau))`.
    pub fn from_logit(tau0: f64, s: f64) -> Self {
        if s >= 0.0 {
            let e = (-s).exp();
            FiberPoint {
                tau: tau0 / (1.0 + e),
                gap: tau0 * e / (1.0 + e),
            }
        } else {
            let e = s.exp();
            FiberPoint {
                tau: tau0 * e / (1.0 + e),
                gap: tau0 / (1.0 + e),
            }
        }
    }

    pub fn logit(&self) -> f64 {
        self.tau.ln() - self.gap.ln()
    }
}

/// `t`, `g` and their inverse for a complete profile, in the gauge where both
/// vanish at `tau_ref`.
#[derive(Debug, Clone)]
pub struct CoordinateChart {
    profile: MomentumProfile,
    anti: Antiderivatives,
    tau_ref: f64,
    t_ref: f64,
    g_ref: f64,
}

impl CoordinateChart {
    /// Chart with the default gauge point `tau_ref = tau0 / 2`.
    pub fn new(profile: MomentumProfile) -> Result<Self> {
        let tau_ref = 0.5 * profile.tau0();
        Self::with_tau_ref(profile, tau_ref)
    }

    pub fn with_tau_ref(profile: MomentumProfile, tau_ref: f64) -> Result<Self> {
        let anti = Antiderivatives::new(&profile)?;
        let mut ch = CoordinateChart {
            profile,
            anti,
            tau_ref: 0.0,
            t_ref: 0.0,
            g_ref: 0.0,
        };
        ch.set_gauge(tau_ref)?;
        Ok(ch)
    }

    /// Same chart in another gauge, reusing the cached integrals.
    pub fn regauge(&self, tau_ref: f64) -> Result<Self> {
        let mut ch = self.clone();
        ch.set_gauge(tau_ref)?;
        Ok(ch)
    }

    fn set_gauge(&mut self, tau_ref: f64) -> Result<()> {
        let tau0 = self.profile.tau0();
        if !(tau_ref > 0.0 && tau_ref < tau0) {
            return Err(Error::Domain {
                what: "tau_ref",
                value: tau_ref,
                domain: format!("(0, {tau0})"),
            });
        }
        let gap = tau0 - tau_ref;
        self.tau_ref = tau_ref;
        self.t_ref = self.anti.t_raw(tau_ref, gap);
        self.g_ref = self.anti.g_raw(tau_ref, gap);
        Ok(())
    }

    pub fn profile(&self) -> &MomentumProfile {
        &self.profile
    }

    pub fn tau0(&self) -> f64 {
        self.anti.tau0
    }

    pub fn tau_ref(&self) -> f64 {
        self.tau_ref
    }

    /// `1/eta2(tau0)`, the coefficient of the Poincaré end `t ~ h0/(tau0 - tau)`.
    pub fn poincare_coefficient(&self) -> f64 {
        self.anti.h0
    }

    fn point(&self, tau: f64) -> Result<FiberPoint> {
        let tau0 = self.tau0();
        if !(tau > 0.0 && tau < tau0) {
            return Err(Error::Domain {
                what: "tau",
                value: tau,
                domain: format!("(0, {tau0})"),
            });
        }
        Ok(FiberPoint { tau, gap: tau0 - tau })
    }

    pub fn t_of_tau(&self, tau: f64) -> Result<f64> {
        Ok(self.t_at(self.point(tau)?))
    }

    pub fn g_of_tau(&self, tau: f64) -> Result<f64> {
        Ok(self.g_at(self.point(tau)?))
    }

    pub fn t_at(&self, p: FiberPoint) -> f64 {
        self.anti.t_raw(p.tau, p.gap) - self.t_ref
    }

    pub fn g_at(&self, p: FiberPoint) -> f64 {
        2.0 * (self.anti.g_raw(p.tau, p.gap) - self.g_ref)
    }

    /// Inverse of `t`, solved in the logit variable.
    pub fn point_of_t(&self, t: f64) -> FiberPoint {
        let tau0 = self.tau0();
        let scale = t.abs().max(1.0);
        let resid = |s: f64| (self.t_at(FiberPoint::from_logit(tau0, s)) - t) / scale;
        let s_ref = FiberPoint { tau: self.tau_ref, gap: tau0 - self.tau_ref }.logit();
        let (mut lo, mut hi) = (s_ref - 1.0, s_ref + 1.0);
        let mut step = 1.0;
        while resid(lo) > 0.0 {
            step *= 2.0;
            lo -= step;
        }
        step = 1.0;
        while resid(hi) < 0.0 {
            step *= 2.0;
            hi += step;
        }
        match find_root(resid, lo, hi, 1e-14) {
            Ok(r) => FiberPoint::from_logit(tau0, r.root),
            Err(_) => FiberPoint::from_logit(tau0, 0.5 * (lo + hi)),
        }
    }

    pub fn tau_of_t(&self, t: f64) -> f64 {
        self.point_of_t(t).tau
    }
}

/// `phi(tau(t)) t^2` at `t = 1e2, 1e3, 1e4` against its limit `1/eta2(tau0)`.
pub fn poincare_check(ch: &CoordinateChart) -> VerificationRecord {
    let limit = ch.poincare_coefficient();
    let samples: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&t| ch.profile().phi(ch.tau_of_t(t)) * t * t)
        .collect();
    let monotone = samples.windows(2).all(|w| (w[1] - limit).abs() < (w[0] - limit).abs());
    VerificationRecord::new(
        "poincare_limit",
        "phi(tau(t)) t^2 -> 1/eta2(tau0) (Poincare-type fiber end)",
        (samples[2] / limit - 1.0).abs(),
        0.01,
    )
    .with_detail(format!(
        "limit {limit:.12}; samples {:.10} {:.10} {:.10}; monotone approach: {monotone}",
        samples[0], samples[1], samples[2]
    ))
}
