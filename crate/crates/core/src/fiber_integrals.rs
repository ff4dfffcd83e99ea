//! Per-band fiber integrals
//!
//! ```text
//! I_a = 2 pi ∫ exp(E_a(t)) dt,
//! E_a = -2 a t + n log(1+tau) - k g(tau) + log phi(tau),
//! ```
//!
//! their Laplace approximations, the critical point `t_a`, neck-region
//! Taylor coefficients of `a -> log I_a` and the concave tail bound used to
//! certify truncation.
//!
//! Quadrature runs in the logit variable `s = log(tau/(tau0 - tau))`, where
//! `exp(E_a) dt = (1+tau)^n exp(-2at - kg) tau (tau0 - tau)/tau0 ds` is free of
//! the `log phi` singularities and both ends decay at least exponentially.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::numerics::{find_root, integrate, integrate_with_breaks, DEFAULT_REL_TOL};
use crate::transforms::{CoordinateChart, FiberPoint};
use crate::verify::VerificationRecord;
use crate::{Error, Result};

/// Band window a band index falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    Inside,
    Neck,
    Outside,
    DeepOutside,
}

impl Regime {
    /// `a <= sqrt(k)/log k` is inside, `a <= 4 sqrt(k) log k` is neck, and
    /// bands within `4 sqrt(k) log k` of `k tau0` are deep-outside.
    pub fn classify(a: f64, k: f64, tau0: f64) -> Regime {
        let (rk, lk) = (k.sqrt(), k.ln());
        if a <= rk / lk {
            Regime::Inside
        } else if a <= Self::neck_limit(k) {
            Regime::Neck
        } else if a > k * tau0 - 4.0 * rk * lk {
            Regime::DeepOutside
        } else {
            Regime::Outside
        }
    }

    /// Last neck band index `4 sqrt(k) log k`.
    pub fn neck_limit(k: f64) -> f64 {
        4.0 * k.sqrt() * k.ln()
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Inside => "inside",
            Regime::Neck => "neck",
            Regime::Outside => "outside",
            Regime::DeepOutside => "deep-outside",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

fn check_band(ch: &CoordinateChart, a: f64, k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain {
            what: "k",
            value: k,
            domain: "(0, inf)".into(),
        });
    }
    let top = k * ch.tau0();
    if !(a > 0.0 && a <= top * (1.0 + 1e-12)) {
        return Err(Error::Domain {
            what: "a",
            value: a,
            domain: format!("(0, {top}]"),
        });
    }
    Ok(())
}

/// `(E, dE/dt, d^2E/dt^2)` at a fiber point.
pub fn e_at(ch: &CoordinateChart, a: f64, k: f64, p: FiberPoint) -> (f64, f64, f64) {
    let n = ch.profile().n() as f64;
    let (phi, dphi, ddphi) = ch.profile().phi_derivs_at(p.tau, p.gap);
    let w = 1.0 + p.tau;
    let e = -2.0 * a * ch.t_at(p) + n * p.tau.ln_1p() - k * ch.g_at(p) + phi.ln();
    let e1 = -2.0 * a + n * phi / w + 2.0 * k * p.gap + dphi;
    let e2 = phi * (n * (w * dphi - phi) / (w * w) - 2.0 * k + ddphi);
    (e, e1, e2)
}

/// `(E, E', E'')` at `tau` in `(0, tau0)`.
pub fn e_and_derivs(ch: &CoordinateChart, a: f64, k: f64, tau: f64) -> Result<(f64, f64, f64)> {
    check_band(ch, a, k)?;
    if !(tau > 0.0 && tau < ch.tau0()) {
        return Err(Error::Domain {
            what: "tau",
            value: tau,
            domain: format!("(0, {})", ch.tau0()),
        });
    }
    Ok(e_at(ch, a, k, FiberPoint { tau, gap: ch.tau0() - tau }))
}

/// Logarithm of the quadrature density in `s`, i.e. `E + log(dt/ds)`.
fn log_density(ch: &CoordinateChart, a: f64, k: f64, p: FiberPoint) -> f64 {
    let n = ch.profile().n() as f64;
    n * p.tau.ln_1p() - 2.0 * a * ch.t_at(p) - k * ch.g_at(p) + p.tau.ln() + p.gap.ln() - ch.tau0().ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub t_a: f64,
    pub tau_a: f64,
    /// `tau0 - tau_a`.
    pub gap_a: f64,
    /// First-order prediction `a/k` of the gap.
    pub predicted_gap: f64,
}

/// Unique zero of `E_a'`, solved in the logit variable.
pub fn critical_point(ch: &CoordinateChart, a: f64, k: f64) -> Result<CriticalPoint> {
    check_band(ch, a, k)?;
    let tau0 = ch.tau0();
    let slope = |s: f64| e_at(ch, a, k, FiberPoint::from_logit(tau0, s)).1;
    let guess_gap = (a / k).min(0.5 * tau0);
    let s0 = (tau0 - guess_gap).ln() - guess_gap.ln();
    let (mut lo, mut hi) = (s0 - 0.5, s0 + 0.5);
    let mut step = 0.5;
    while slope(lo) <= 0.0 {
        step *= 2.0;
        lo -= step;
        if lo < -1e3 {
            return Err(Error::OutOfRegime(format!("no critical point for a = {a}, k = {k}")));
        }
    }
    step = 0.5;
    while slope(hi) >= 0.0 {
        step *= 2.0;
        hi += step;
        if hi > 7e2 {
            return Err(Error::OutOfRegime(format!("no critical point for a = {a}, k = {k}")));
        }
    }
    let r = find_root(slope, lo, hi, 0.0)?;
    let p = FiberPoint::from_logit(tau0, r.root);
    Ok(CriticalPoint {
        t_a: ch.t_at(p),
        tau_a: p.tau,
        gap_a: p.gap,
        predicted_gap: a / k,
    })
}

/// `e^{f(x0)} / (-f'(x0))`, an upper bound for `∫_{x0}^inf e^f` when `f` is
/// concave. The slope is estimated by a central difference.
pub fn tail_bound<F: Fn(f64) -> f64>(f: F, x0: f64) -> Result<f64> {
    let h = 1e-6 * x0.abs().max(1.0);
    let slope = (f(x0 + h) - f(x0 - h)) / (2.0 * h);
    tail_bound_from(f(x0), slope)
}

/// [`tail_bound`] from a known value and slope.
pub fn tail_bound_from(value: f64, slope: f64) -> Result<f64> {
    if !(slope < 0.0) {
        return Err(Error::Domain {
            what: "slope",
            value: slope,
            domain: "(-inf, 0)".into(),
        });
    }
    Ok(value.exp() / -slope)
}

/// Where the quadrature was cut and how much mass the cut can have removed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationCertificate {
    pub s_lo: f64,
    pub s_hi: f64,
    /// Drop of `E` below `E_a(t_a)` required at both cuts.
    pub drop: f64,
    /// Certified bound of the discarded mass relative to the retained one.
    pub tail_rel: f64,
}

/// Critical data and both values of one band.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberBand {
    pub a: f64,
    pub k: f64,
    pub t_a: f64,
    pub tau_a: f64,
    pub gap_a: f64,
    /// `E_a(t_a)`.
    pub e_a0: f64,
    /// `E_a''(t_a)`.
    pub e_a2: f64,
    pub log_i_exact: f64,
    pub log_i_laplace: f64,
    pub quad_rel_error: f64,
    pub certificate: TruncationCertificate,
    pub regime: Regime,
}

impl FiberBand {
    /// `|I_laplace / I_exact - 1|`.
    pub fn rel_err(&self) -> f64 {
        (self.log_i_laplace - self.log_i_exact).exp_m1().abs()
    }
}

/// `log(2 pi) + E_a(t_a) + log(sqrt(2 pi / -E_a''(t_a)))`.
pub fn ia_laplace(e_a0: f64, e_a2: f64) -> f64 {
    (2.0 * PI).ln() + e_a0 + 0.5 * (2.0 * PI / -e_a2).ln()
}

struct Window {
    cp: CriticalPoint,
    s_a: f64,
    e0: f64,
    e2: f64,
    shift: f64,
    cert: TruncationCertificate,
}

/// Moves from `s_a` in direction `dir` until `E` has dropped by `drop`.
/// Returns the cut and the tail bound there relative to `exp(E0)`.
fn find_cut(ch: &CoordinateChart, a: f64, k: f64, s_a: f64, e0: f64, dir: f64, drop: f64) -> Result<(f64, f64)> {
    let tau0 = ch.tau0();
    let (mut s, mut step) = (s_a, 0.25);
    for _ in 0..400 {
        let cand = s + dir * step;
        let (e, e1, _) = e_at(ch, a, k, FiberPoint::from_logit(tau0, cand));
        if !e.is_finite() || !e1.is_finite() {
            step *= 0.5;
            if step < 1e-8 {
                break;
            }
            continue;
        }
        if e - e0 <= -drop {
            let tail = tail_bound_from(e - e0, dir * e1)?;
            return Ok((cand, tail));
        }
        s = cand;
        step *= 2.0;
    }
    Err(Error::OutOfRegime(format!("no truncation point found for a = {a}, k = {k}")))
}

fn window(ch: &CoordinateChart, a: f64, k: f64, drop: f64) -> Result<Window> {
    let cp = critical_point(ch, a, k)?;
    let pa = FiberPoint { tau: cp.tau_a, gap: cp.gap_a };
    let (e0, _, e2) = e_at(ch, a, k, pa);
    let s_a = pa.logit();
    let (s_lo, tail_lo) = find_cut(ch, a, k, s_a, e0, -1.0, drop)?;
    let (s_hi, tail_hi) = find_cut(ch, a, k, s_a, e0, 1.0, drop)?;
    Ok(Window {
        cp,
        s_a,
        e0,
        e2,
        shift: log_density(ch, a, k, pa),
        cert: TruncationCertificate {
            s_lo,
            s_hi,
            drop,
            tail_rel: tail_lo + tail_hi,
        },
    })
}

fn certified_window(ch: &CoordinateChart, a: f64, k: f64) -> Result<Window> {
    let base = k.ln().powi(2).max(40.0);
    let mut w = window(ch, a, k, base)?;
    // tail_rel is relative to exp(E0); the retained mass is about sqrt(2 pi/-E'').
    let scale = (2.0 * PI / -w.e2).sqrt();
    let mut drop = base;
    while w.cert.tail_rel > 1e-12 * scale && drop < base + 200.0 {
        drop += 20.0;
        w = window(ch, a, k, drop)?;
    }
    Ok(w)
}

/// Computes one band: critical point, exact integral with truncation
/// certificate and the Laplace value.
pub fn band(ch: &CoordinateChart, a: f64, k: f64, rel_tol: f64) -> Result<FiberBand> {
    let w = certified_window(ch, a, k)?;
    let tau0 = ch.tau0();
    let q = integrate_with_breaks(
        |s| {
            let v = log_density(ch, a, k, FiberPoint::from_logit(tau0, s)) - w.shift;
            if v == f64::NEG_INFINITY {
                0.0
            } else {
                v.exp()
            }
        },
        w.cert.s_lo,
        w.cert.s_hi,
        &[w.s_a],
        rel_tol,
    )?;
    let retained = q.value * (w.shift - w.e0).exp();
    let mut cert = w.cert;
    cert.tail_rel /= retained;
    Ok(FiberBand {
        a,
        k,
        t_a: w.cp.t_a,
        tau_a: w.cp.tau_a,
        gap_a: w.cp.gap_a,
        e_a0: w.e0,
        e_a2: w.e2,
        log_i_exact: (2.0 * PI).ln() + w.shift + q.value.ln(),
        log_i_laplace: ia_laplace(w.e0, w.e2),
        quad_rel_error: q.error_estimate / q.value,
        certificate: cert,
        regime: Regime::classify(a, k, tau0),
    })
}

/// `log I_a` by certified quadrature.
pub fn ia_exact(ch: &CoordinateChart, a: f64, k: f64, rel_tol: f64) -> Result<f64> {
    Ok(band(ch, a, k, rel_tol)?.log_i_exact)
}

/// Bands for every `a` in `a_values`, computed in parallel on the current
/// rayon pool. Output order follows the input.
pub fn band_sweep(ch: &CoordinateChart, k: f64, a_values: &[f64], rel_tol: f64) -> Vec<Result<FiberBand>> {
    a_values.par_iter().map(|&a| band(ch, a, k, rel_tol)).collect()
}

/// Taylor coefficients of `x -> log I_{a0 + x}` from the moments of
/// `exp(E_{a0}) dt` centered at `t_{a0}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeckCoefficients {
    pub a0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    pub i4: f64,
    pub t_a: f64,
    pub e_a2: f64,
}

pub fn neck_coefficients(ch: &CoordinateChart, k: f64, a0: f64) -> Result<NeckCoefficients> {
    let w = certified_window(ch, a0, k)?;
    let tau0 = ch.tau0();
    let t_a = w.cp.t_a;
    // Each side has a fixed sign, so odd moments do not cancel inside the quadrature.
    let moment = |m: i32| -> Result<f64> {
        let f = |s: f64| {
            let p = FiberPoint::from_logit(tau0, s);
            let v = log_density(ch, a0, k, p) - w.shift;
            if v == f64::NEG_INFINITY {
                0.0
            } else {
                (ch.t_at(p) - t_a).powi(m) * v.exp()
            }
        };
        let left = integrate(f, w.cert.s_lo, w.s_a, 1e-12)?.value;
        let right = integrate(f, w.s_a, w.cert.s_hi, 1e-12)?.value;
        Ok(left + right)
    };
    let z = moment(0)?;
    let (i1, i2, i3, i4) = (moment(1)? / z, moment(2)? / z, moment(3)? / z, moment(4)? / z);
    Ok(NeckCoefficients {
        a0,
        c1: -2.0 * (t_a + i1),
        c2: 2.0 * (i2 - i1 * i1),
        c3: -4.0 / 3.0 * (2.0 * i1.powi(3) - 3.0 * i2 * i1 + i3),
        c4: 2.0 / 3.0 * (-6.0 * i1.powi(4) + 12.0 * i1 * i1 * i2 - 3.0 * i2 * i2 - 4.0 * i1 * i3 + i4),
        i1,
        i2,
        i3,
        i4,
        t_a,
        e_a2: w.e2,
    })
}

/// First and second derivatives of `a -> log I_a` at `a0` by Richardson
/// extrapolated central differences with step `h`.
pub fn log_ia_derivatives(ch: &CoordinateChart, k: f64, a0: f64, h: f64) -> Result<(f64, f64)> {
    let offsets = [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0];
    let vals: Vec<f64> = offsets
        .par_iter()
        .map(|&o| ia_exact(ch, a0 + o * h, k, 1e-13))
        .collect::<Result<Vec<_>>>()?;
    let at = |o: f64| vals[offsets.iter().position(|&x| x == o).unwrap_or(3)];
    let d1 = |s: f64| (at(s) - at(-s)) / (2.0 * s * h);
    let d2 = |s: f64| (at(s) - 2.0 * at(0.0) + at(-s)) / (s * s * h * h);
    let first = (4.0 * d1(1.0) - d1(2.0)) / 3.0;
    let second = (4.0 * d2(0.5) - d2(1.0)) / 3.0;
    Ok((first, second))
}

/// Per-band quantities of the two- and three-term lemmas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub a: f64,
    /// `(E_{a,0} - E_{a+1,0} - 2k eta(tau_a) log((a+1)/a)) / log k`.
    pub two_term_scaled: f64,
    /// `2E_{a+1,0} - E_{a,0} - E_{a+2,0}`.
    pub three_term_exponent: f64,
}

pub fn ratio_rows(ch: &CoordinateChart, k: f64, a_range: &[f64]) -> Result<Vec<RatioRow>> {
    a_range
        .iter()
        .map(|&a| {
            let e = |b: f64| -> Result<(f64, CriticalPoint)> {
                let cp = critical_point(ch, b, k)?;
                Ok((e_at(ch, b, k, FiberPoint { tau: cp.tau_a, gap: cp.gap_a }).0, cp))
            };
            let (e0, cp) = e(a)?;
            let (e1, _) = e(a + 1.0)?;
            let (e2, _) = e(a + 2.0)?;
            let eta = 1.0 / ch.profile().eta2(cp.tau_a)?;
            Ok(RatioRow {
                a,
                two_term_scaled: (e0 - e1 - 2.0 * k * eta * ((a + 1.0) / a).ln()) / k.ln(),
                three_term_exponent: 2.0 * e1 - e0 - e2,
            })
        })
        .collect()
}

/// Two-term residuals bounded by 20 and three-term exponents at most
/// `-(log k)^2` over `a_range`.
pub fn ratio_lemma_check(ch: &CoordinateChart, k: f64, a_range: &[f64]) -> VerificationRecord {
    const NAME: &str = "ratio_lemmas";
    const ANCHOR: &str = "E_a0 - E_(a+1)0 = 2k eta(tau_a) log((a+1)/a) + O(log k); exp(2E_(a+1)0 - E_a0 - E_(a+2)0) negligible";
    let rows = match ratio_rows(ch, k, a_range) {
        Ok(r) => r,
        Err(e) => return VerificationRecord::new(NAME, ANCHOR, f64::INFINITY, 0.0).with_detail(e.to_string()),
    };
    let l2 = k.ln().powi(2);
    let worst_two = rows.iter().map(|r| r.two_term_scaled.abs() - 20.0).fold(f64::NEG_INFINITY, f64::max);
    let worst_three = rows
        .iter()
        .filter(|r| r.a <= k.sqrt() / k.ln())
        .map(|r| r.three_term_exponent + l2)
        .fold(f64::NEG_INFINITY, f64::max);
    let residual = worst_two.max(worst_three).max(0.0);
    let detail = rows
        .iter()
        .map(|r| format!("a={}: two-term/log k = {:.4}, three-term = {:.4}", r.a, r.two_term_scaled, r.three_term_exponent))
        .collect::<Vec<_>>()
        .join("; ");
    VerificationRecord::new(NAME, ANCHOR, residual, 0.0).with_detail(format!("k = {k}; {detail}"))
}

/// Relative residuals of `∫ x^(2m) e^(-b x^2) sqrt(b/pi) dx = (2m-1)!!/(2b)^m`
/// for `m = 1..4`, `b in {0.5, 1, 7}`.
pub fn gaussian_table() -> Result<Vec<(u32, f64, f64, f64)>> {
    let mut out = Vec::new();
    for b in [0.5, 1.0, 7.0] {
        for m in 1..=4u32 {
            let q = integrate(
                |x| x.powi(2 * m as i32) * (-b * x * x).exp() * (b / PI).sqrt(),
                f64::NEG_INFINITY,
                f64::INFINITY,
                1e-13,
            )?;
            let double_fact: f64 = (1..=m).map(|j| (2 * j - 1) as f64).product();
            let expect = double_fact / (2.0 * b).powi(m as i32);
            out.push((m, b, q.value, expect));
        }
    }
    Ok(out)
}

pub fn gaussian_table_check() -> VerificationRecord {
    const NAME: &str = "gaussian_table";
    const ANCHOR: &str = "Gaussian moments 1/(2b), 3/(4b^2), 15/(8b^3), 105/(16b^4)";
    match gaussian_table() {
        Ok(rows) => {
            let worst = rows.iter().map(|&(_, _, v, e)| ((v - e) / e).abs()).fold(0.0, f64::max);
            VerificationRecord::new(NAME, ANCHOR, worst, 1e-12).with_detail(format!("{} moments, max relative residual", rows.len()))
        }
        Err(e) => VerificationRecord::new(NAME, ANCHOR, f64::INFINITY, 1e-12).with_detail(e.to_string()),
    }
}

/// Default quadrature tolerance for band integrals.
pub const BAND_REL_TOL: f64 = DEFAULT_REL_TOL;
