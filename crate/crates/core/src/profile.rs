//! The momentum profile of the Calabi ansatz.
//!
//! With `Q = (1+tau)^n` and `R = S_M/(1+tau)` the profile solving the
//! constant-scalar-curvature ODE with `phi(0) = 0`, `phi'(0) = 2` is
//!
//! ```text
//! phi(tau) = 2/(1+tau)^n * P(tau),
//! P(tau)   = tau + S_M * A(tau) + c * B(tau),
//! A(tau)   = [(1+tau)^(n+1) - 1 - (n+1) tau] / (n (n+1)),
//! B(tau)   = [1 + (n+2) tau - (1+tau)^(n+2)] / ((n+1)(n+2)).
//! ```
//!
//! `A` and `B` have rational coefficients, built exactly before conversion.
//! The completeness constant `c0` is the largest `c` with `P >= 0` on
//! `[0, inf)`; at `c0` the numerator factors as `tau (tau - tau0)^2 f(tau)`
//! with `f > 0` on `[0, tau0]`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::numerics::{bisect_predicate, find_root};
use crate::poly::Poly;
use crate::verify::VerificationRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileParams {
    n: u32,
    s_m: f64,
}

impl ProfileParams {
    pub fn new(n: u32, s_m: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if !s_m.is_finite() || s_m >= 0.0 {
            return Err(Error::InvalidParams(format!(
                "S_M must be negative (got {s_m}); the S_M >= 0 branch has c0 = 0 and infinite fiber area"
            )));
        }
        Ok(ProfileParams { n, s_m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn s_m(&self) -> f64 {
        self.s_m
    }
}

fn binomial_expansion(m: u32) -> Vec<BigRational> {
    let mut row = vec![BigInt::one()];
    for _ in 0..m {
        let mut next = vec![BigInt::one(); row.len() + 1];
        for j in 1..row.len() {
            next[j] = &row[j - 1] + &row[j];
        }
        row = next;
    }
    row.into_iter().map(BigRational::from_integer).collect()
}

/// Exact coefficient vectors of `A` and `B` (ascending powers).
pub fn exact_parts(n: u32) -> (Vec<BigRational>, Vec<BigRational>) {
    let ni = BigInt::from(n);

    let mut a = binomial_expansion(n + 1);
    a[0] -= BigRational::one();
    a[1] -= BigRational::from_integer(&ni + 1);
    let da = BigRational::from_integer(&ni * (&ni + 1));
    let a: Vec<BigRational> = a.into_iter().map(|c| c / &da).collect();

    let mut b: Vec<BigRational> = binomial_expansion(n + 2).into_iter().map(|c| -c).collect();
    b[0] += BigRational::one();
    b[1] += BigRational::from_integer(&ni + 2);
    let db = BigRational::from_integer((&ni + 1) * (&ni + 2));
    let b: Vec<BigRational> = b.into_iter().map(|c| c / &db).collect();

    debug_assert!(a[0].is_zero() && b[0].is_zero() && a[1].is_zero() && b[1].is_zero());
    (a, b)
}

fn to_poly(coeffs: &[BigRational]) -> Poly {
    Poly(coeffs.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect())
}

/// The two `c`-independent pieces of the numerator: `tau + S_M A(tau)` and `B(tau)`.
fn numerator_parts(p: &ProfileParams) -> (Poly, Poly) {
    let (a, b) = exact_parts(p.n);
    let mut base = to_poly(&a).scale(p.s_m);
    base.0[1] += 1.0;
    (base, to_poly(&b))
}

/// Numerator `P = (1+tau)^n phi / 2`, a polynomial of degree `n + 2`.
pub fn numerator(p: &ProfileParams, c: f64) -> Poly {
    let (base, b) = numerator_parts(p);
    &base + &b.scale(c)
}

/// `phi(tau; c)` from the expanded numerator.
pub fn eval_phi(p: &ProfileParams, c: f64, tau: f64) -> f64 {
    2.0 * numerator(p, c).eval(tau) / (1.0 + tau).powi(p.n as i32)
}

/// Output of the completeness-constant search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C0Solution {
    pub c0: f64,
    pub tau0: f64,
    /// Width of the final `c` bracket of the bisection.
    pub bracket_width: f64,
}

/// Minimum of the numerator over `tau > 0` on the convex branch, together with
/// its location. `None` when `P` is increasing on all of `[0, inf)`.
fn convex_branch_minimum(p: &ProfileParams, c: f64) -> Option<(f64, f64)> {
    if c <= p.s_m {
        // P'' = (1+tau)^(n-1) (S_M - c (1+tau)) >= 0 everywhere and P'(0) = 1.
        return None;
    }
    let num = numerator(p, c);
    let d1 = num.derivative();
    let inflection = p.s_m / c - 1.0;
    if d1.eval(inflection) >= 0.0 {
        return None;
    }
    let mut hi = 2.0 * inflection.max(1.0);
    while d1.eval(hi) <= 0.0 {
        hi *= 2.0;
        if !hi.is_finite() {
            return None;
        }
    }
    let r = find_root(|x| d1.eval(x), inflection, hi, 0.0).ok()?;
    Some((r.root, num.eval(r.root)))
}

/// Completeness constant `c0` and fiber area `tau0`.
///
/// Bisects the feasibility predicate `min_{tau >= 0} P(tau; c) >= 0` over
/// `c` in `[S_M (n+2), 0]`, then locates `tau0` as the critical point of the
/// numerator and polishes the pair `(c0, tau0)` with Newton steps on
/// `P = P' = 0`.
pub fn solve_c0(p: &ProfileParams) -> Result<C0Solution> {
    let feasible = |c: f64| match convex_branch_minimum(p, c) {
        None => true,
        Some((_, m)) => m >= 0.0,
    };
    let lo = p.s_m * (p.n as f64 + 2.0);
    if !feasible(lo) {
        return Err(Error::InvalidParams(format!("c0 bracket failure at c = {lo}")));
    }
    let width = 1e-13 * p.s_m.abs().max(1.0);
    let c_bis = bisect_predicate(feasible, lo, 0.0, width);

    let (tau_bis, _) = convex_branch_minimum(p, c_bis + width)
        .or_else(|| convex_branch_minimum(p, c_bis))
        .ok_or_else(|| Error::InvalidParams("no double root found at the bisected c0".into()))?;

    // Newton on (P, P') = 0 in the unknowns (tau, c).
    let (base, b) = numerator_parts(p);
    let (db, ddb) = (b.derivative(), b.derivative().derivative());
    let (dbase, ddbase) = (base.derivative(), base.derivative().derivative());
    let (mut tau, mut c) = (tau_bis, c_bis);
    for _ in 0..8 {
        let f0 = base.eval(tau) + c * b.eval(tau);
        let f1 = dbase.eval(tau) + c * db.eval(tau);
        let j11 = f1;
        let j12 = b.eval(tau);
        let j21 = ddbase.eval(tau) + c * ddb.eval(tau);
        let j22 = db.eval(tau);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dtau = (f0 * j22 - j12 * f1) / det;
        let dc = (j11 * f1 - j21 * f0) / det;
        tau -= dtau;
        c -= dc;
        if dtau.abs() <= 1e-16 * tau.abs() && dc.abs() <= 1e-16 * c.abs() {
            break;
        }
    }
    if !(c.is_finite() && tau.is_finite()) || (c - c_bis).abs() > 1e3 * width || tau <= 0.0 {
        c = c_bis;
        tau = tau_bis;
    }
    if c >= 0.0 {
        return Err(Error::InvalidParams("completeness constant is not negative".into()));
    }
    Ok(C0Solution {
        c0: c,
        tau0: tau,
        bracket_width: width,
    })
}

/// Momentum profile at a fixed `c` together with the completeness data of its
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumProfile {
    params: ProfileParams,
    c: f64,
    numerator: Poly,
    c0: f64,
    tau0: f64,
    /// Cofactor `f` in `P = tau (tau - tau0)^2 f`, present iff `c == c0`.
    cofactor: Option<Poly>,
    /// Remainders dropped while deflating `P / tau` by `(tau - tau0)^2`.
    deflation_remainders: [f64; 2],
}

impl MomentumProfile {
    /// Profile at the completeness constant.
    pub fn new(params: ProfileParams) -> Result<Self> {
        let sol = solve_c0(&params)?;
        let numerator = numerator(&params, sol.c0);
        let (reduced, _) = numerator.div_x();
        let (q1, r1) = reduced.deflate(sol.tau0);
        let (f, r2) = q1.deflate(sol.tau0);
        Ok(MomentumProfile {
            params,
            c: sol.c0,
            numerator,
            c0: sol.c0,
            tau0: sol.tau0,
            cofactor: Some(f),
            deflation_remainders: [r1, r2],
        })
    }

    /// Profile at an arbitrary `c` (not complete unless `c == c0`).
    pub fn with_c(params: ProfileParams, c: f64) -> Result<Self> {
        let mut mp = MomentumProfile::new(params)?;
        if c != mp.c0 {
            mp.c = c;
            mp.numerator = numerator(&params, c);
            mp.cofactor = None;
        }
        Ok(mp)
    }

    pub fn params(&self) -> &ProfileParams {
        &self.params
    }
    pub fn n(&self) -> u32 {
        self.params.n
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn tau0(&self) -> f64 {
        self.tau0
    }
    pub fn is_complete(&self) -> bool {
        self.cofactor.is_some()
    }
    pub fn numerator(&self) -> &Poly {
        &self.numerator
    }
    pub fn cofactor(&self) -> Result<&Poly> {
        self.cofactor.as_ref().ok_or(Error::NotAtC0)
    }
    pub fn deflation_remainders(&self) -> [f64; 2] {
        self.deflation_remainders
    }

    /// `phi(tau)`. At `c0` this uses the factored form, which keeps full
    /// relative accuracy near the double root.
    pub fn phi(&self, tau: f64) -> f64 {
        self.phi_derivs(tau).0
    }

    /// `(phi, phi', phi'')` at `tau`.
    pub fn phi_derivs(&self, tau: f64) -> (f64, f64, f64) {
        self.phi_derivs_at(tau, self.tau0 - tau)
    }

    /// As [`phi_derivs`](Self::phi_derivs), with `gap = tau0 - tau` supplied
    /// by the caller (ignored off `c0`).
    pub fn phi_derivs_at(&self, tau: f64, gap: f64) -> (f64, f64, f64) {
        let (u, du, ddu) = match &self.cofactor {
            Some(f) => {
                let d = -gap;
                let p = tau * d * d;
                let dp = d * (3.0 * tau - self.tau0);
                let ddp = 6.0 * tau - 4.0 * self.tau0;
                let (f0, f1, f2) = (f.eval(tau), f.derivative().eval(tau), f.derivative().derivative().eval(tau));
                (p * f0, dp * f0 + p * f1, ddp * f0 + 2.0 * dp * f1 + p * f2)
            }
            None => {
                let d1 = self.numerator.derivative();
                (self.numerator.eval(tau), d1.eval(tau), d1.derivative().eval(tau))
            }
        };
        let n = self.params.n as f64;
        let w = 1.0 + tau;
        let q = w.powi(self.params.n as i32);
        let phi = 2.0 * u / q;
        let dphi = 2.0 * (du - n * u / w) / q;
        let ddphi = 2.0 * (ddu - 2.0 * n * du / w + n * (n + 1.0) * u / (w * w)) / q;
        (phi, dphi, ddphi)
    }

    /// `eta2(tau) = phi(tau) / (tau - tau0)^2 = 2 tau f(tau) / (1+tau)^n`.
    pub fn eta2(&self, tau: f64) -> Result<f64> {
        let f = self.cofactor()?;
        Ok(2.0 * tau * f.eval(tau) / (1.0 + tau).powi(self.params.n as i32))
    }

    /// `eta2(tau0)`; positive at `c0`.
    pub fn eta2_at_tau0(&self) -> Result<f64> {
        self.eta2(self.tau0)
    }

    /// `phi''(tau0)` from the expanded numerator; nonzero because the double
    /// root has multiplicity exactly two.
    pub fn phi_second_at_tau0(&self) -> f64 {
        let d2 = numerator(&self.params, self.c).derivative().derivative();
        2.0 * d2.eval(self.tau0) / (1.0 + self.tau0).powi(self.params.n as i32)
    }
}

/// Positivity of the cofactor `f` on a grid of `grid_size` points in
/// `[0, tau0]`, plus the double-root residuals of the expanded numerator.
pub fn factor_check(mp: &MomentumProfile, grid_size: usize) -> VerificationRecord {
    const NAME: &str = "factor_check";
    const ANCHOR: &str = "phi at c0 = 2 tau (tau - tau0)^2 f(tau) / (1+tau)^n with f > 0";
    let Some(f) = mp.cofactor.as_ref() else {
        return VerificationRecord::not_applicable(NAME, ANCHOR, format!("profile built at c = {} != c0 = {}", mp.c, mp.c0));
    };
    let grid_size = grid_size.max(2);
    let tau0 = mp.tau0;
    let min_f = (0..grid_size)
        .map(|i| f.eval(tau0 * i as f64 / (grid_size - 1) as f64))
        .fold(f64::INFINITY, f64::min);
    let (phi0, dphi0) = double_root_residuals(mp);
    VerificationRecord::new(NAME, ANCHOR, -min_f, -f64::MIN_POSITIVE).with_detail(format!(
        "min f = {min_f:.6e} over {grid_size} points; |phi(tau0)| = {phi0:.3e}, |phi'(tau0)| = {dphi0:.3e}; f(0) tau0^2 = {:.12}",
        f.eval(0.0) * tau0 * tau0
    ))
}

/// `(|phi(tau0)|, |phi'(tau0)|)` evaluated through the expanded numerator at
/// `c0`, i.e. independently of the factored form.
pub fn double_root_residuals(mp: &MomentumProfile) -> (f64, f64) {
    let num = numerator(&mp.params, mp.c0);
    let tau0 = mp.tau0;
    let n = mp.params.n as i32;
    let w = 1.0 + tau0;
    let phi = 2.0 * num.eval(tau0) / w.powi(n);
    let dphi = 2.0 * (num.derivative().eval(tau0) - mp.params.n as f64 * num.eval(tau0) / w) / w.powi(n);
    (phi.abs(), dphi.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn closed_form_n1(s: f64) -> (f64, f64) {
        let c0 = s - 4.0 / 3.0 + (2.0 / 3.0) * (4.0 - 6.0 * s).sqrt();
        (c0, 3.0 * (s - c0) / (2.0 * c0))
    }

    fn second_derivative(c: &[BigRational]) -> Vec<BigRational> {
        c.iter()
            .enumerate()
            .skip(2)
            .map(|(j, v)| v * BigRational::from_integer(BigInt::from(j * (j - 1))))
            .collect()
    }

    #[test]
    fn exact_parts_solve_the_integral_form() {
        // P = tau + int_0^tau (tau - x)(S_M/(1+x) - c)(1+x)^n dx, so
        // A'' = (1+tau)^(n-1), B'' = -(1+tau)^n and both vanish to order 2 at 0.
        for n in 1..=3 {
            let (a, b) = exact_parts(n);
            assert!(a[0].is_zero() && a[1].is_zero() && b[0].is_zero() && b[1].is_zero());
            assert_eq!(second_derivative(&a), binomial_expansion(n - 1));
            let neg: Vec<BigRational> = binomial_expansion(n).into_iter().map(|c| -c).collect();
            assert_eq!(second_derivative(&b), neg);
        }
    }

    #[test]
    fn rejects_nonnegative_curvature() {
        assert!(ProfileParams::new(1, 0.5).is_err());
        assert!(ProfileParams::new(1, 0.0).is_err());
        assert!(ProfileParams::new(0, -1.0).is_err());
    }

    #[test]
    fn n1_values() {
        let p = ProfileParams::new(1, -2.0).unwrap();
        let c = -2.0 / 3.0;
        assert_eq!(eval_phi(&p, c, 0.0), 0.0);
        assert!((eval_phi(&p, c, 1.0) - 4.0 / 9.0).abs() < 1e-14);
        let mp = MomentumProfile::new(p).unwrap();
        assert!((mp.c0() + 2.0 / 3.0).abs() < 1e-12);
        assert!((mp.tau0() - 3.0).abs() < 1e-10);
        assert!((mp.eta2(3.0).unwrap() - 1.0 / 6.0).abs() < 1e-10);
        assert!((mp.eta2(1.0).unwrap() - 1.0 / 9.0).abs() < 1e-10);
        assert!((mp.phi(1.0) - 4.0 / 9.0).abs() < 1e-10);
    }

    #[test]
    fn n1_second_closed_form() {
        let p = ProfileParams::new(1, -1.0).unwrap();
        let sol = solve_c0(&p).unwrap();
        assert!((sol.c0 - (-0.2251482)).abs() < 5e-8);
        assert!((sol.tau0 - 5.1622777).abs() < 5e-7);
        let (c0, tau0) = closed_form_n1(-1.0);
        assert!((sol.c0 - c0).abs() < 1e-12 && (sol.tau0 - tau0).abs() < 1e-10);
    }

    #[test]
    fn phi_prime_at_zero_is_two() {
        for (n, s, c) in [(1, -2.0, -0.3), (2, -1.0, -1.7), (3, -0.5, -0.1), (4, -5.0, -2.0)] {
            let p = ProfileParams::new(n, s).unwrap();
            let d = crate::numerics::finite_diff(|t| eval_phi(&p, c, t), 0.0, 1, 1e-6).unwrap();
            assert!((d - 2.0).abs() < 1e-8, "n={n}: {d}");
        }
    }

    #[test]
    fn factor_check_n1_minimum_is_one_over_tau0_squared() {
        let mp = MomentumProfile::new(ProfileParams::new(1, -2.0).unwrap()).unwrap();
        let rec = factor_check(&mp, 1000);
        assert!(rec.pass);
        assert!((-rec.residual - 1.0 / 9.0).abs() < 1e-10, "{}", rec.residual);
    }

    #[test]
    fn factor_check_off_c0_not_applicable() {
        let p = ProfileParams::new(2, -1.0).unwrap();
        let mp = MomentumProfile::with_c(p, -3.0).unwrap();
        let rec = factor_check(&mp, 100);
        assert!(!rec.applicable && !rec.pass && !rec.is_hard_failure());
        assert_eq!(mp.eta2(1.0), Err(Error::NotAtC0));
    }

    #[test]
    fn factored_and_expanded_forms_agree_off_the_root() {
        let p = ProfileParams::new(3, -0.7).unwrap();
        let mp = MomentumProfile::new(p).unwrap();
        for i in 1..20 {
            let tau = mp.tau0() * i as f64 / 20.0;
            let a = mp.phi(tau);
            let b = eval_phi(&p, mp.c0(), tau);
            assert!((a - b).abs() < 1e-11 * (1.0 + b.abs()), "{tau}: {a} vs {b}");
        }
    }
}
