//! Diagonal of the center of mass of the induced embedding.
//!
//! For band `a` the fiber factor is
//!
//! ```text
//! F_a(x) = sum_c q_c x^c,   q_c = (rho_(a+c)/rho_a) (I_a/I_(a+c)),
//! mu_a   = ∫ (q_0/F_a) (log F_a)_uu du,   x = e^u,
//! ```
//!
//! normalized so that the Fubini-Study sphere `F = 1 + x` has total mass 1.
//! `(log F)_uu` is the variance of `c` under the weights `q_c x^c / F`, and
//! `log F` is evaluated by a log-sum-exp around the dominant term.

use rayon::prelude::*;

use crate::fiber_integrals::{band_sweep, Regime};
use crate::numerics::integrate_with_breaks;
use crate::profile::MomentumProfile;
use crate::riemann_roch::{self, FiberArea, GeometryData};
use crate::transforms::CoordinateChart;
use crate::{Error, Result};

/// Terms more than this far below the dominant one are dropped.
const LSE_CUTOFF: f64 = 50.0;
/// Half-width added around the outermost crossing points.
const U_MARGIN: f64 = 60.0;

/// Constant-density Bergman surrogate `rho_b = (N-b)^n [1 + S_M/(2(N-b))]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BergmanSurrogate {
    n: u32,
    s_m: f64,
    k: f64,
    tau0: f64,
    big_n: f64,
}

impl BergmanSurrogate {
    pub fn new(n: u32, s_m: f64, tau0: f64, k: f64) -> Result<Self> {
        let big_n = k * (1.0 + tau0);
        let s = BergmanSurrogate { n, s_m, k, tau0, big_n };
        let last = riemann_roch::band_count(k, tau0) as f64;
        // N - b is smallest at the last band.
        let r = big_n - last.max(1.0);
        if !(r > 0.0 && 1.0 + s_m / (2.0 * r) > 0.0) {
            return Err(Error::OutOfRegime(format!("Bergman density not positive at k = {k}")));
        }
        Ok(s)
    }

    pub fn from_profile(mp: &MomentumProfile, k: f64) -> Result<Self> {
        Self::new(mp.n(), mp.params().s_m(), mp.tau0(), k)
    }

    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn big_n(&self) -> f64 {
        self.big_n
    }
    pub fn band_count(&self) -> usize {
        riemann_roch::band_count(self.k, self.tau0)
    }

    pub fn log_rho(&self, b: f64) -> f64 {
        let r = self.big_n - b;
        self.n as f64 * r.ln() + (self.s_m / (2.0 * r)).ln_1p()
    }

    /// `rho_b / rho_a`.
    pub fn ratio(&self, a: f64, b: f64) -> f64 {
        (self.log_rho(b) - self.log_rho(a)).exp()
    }
}

/// Weighted statistics of the exponents at one `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumStats {
    /// `log F`.
    pub log_f: f64,
    pub mean: f64,
    pub var: f64,
    /// Weight of the `c = 0` term, `q_0 x^0 / F`.
    pub w0: f64,
}

/// Exponential sum `F(x) = sum_c q_c x^c` with `log q_c` concave in `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSum {
    c_min: i64,
    log_q: Vec<f64>,
}

impl BandSum {
    /// Sum with coefficients `log_q[j]` for exponent `c_min + j`; must contain
    /// the exponent 0.
    pub fn from_log_coeffs(c_min: i64, log_q: Vec<f64>) -> Result<Self> {
        let c_max = c_min + log_q.len() as i64 - 1;
        if log_q.is_empty() || c_min > 0 || c_max < 0 {
            return Err(Error::InvalidParams("exponent range must contain 0".into()));
        }
        Ok(BandSum { c_min, log_q })
    }

    /// `F_a` from `log I_b` for `b = 1..=log_i.len()`.
    pub fn new(surrogate: &BergmanSurrogate, log_i: &[f64], a: usize) -> Result<Self> {
        if a == 0 || a > log_i.len() {
            return Err(Error::InvalidParams(format!("band {a} missing from {} bands", log_i.len())));
        }
        let af = a as f64;
        let log_q = (1..=log_i.len())
            .map(|b| log_i[a - 1] - log_i[b - 1] + surrogate.log_rho(b as f64) - surrogate.log_rho(af))
            .collect();
        Self::from_log_coeffs(1 - a as i64, log_q)
    }

    pub fn c_min(&self) -> i64 {
        self.c_min
    }

    pub fn c_max(&self) -> i64 {
        self.c_min + self.log_q.len() as i64 - 1
    }

    pub fn log_q(&self, c: i64) -> f64 {
        self.log_q[(c - self.c_min) as usize]
    }

    fn term(&self, j: usize, u: f64) -> f64 {
        self.log_q[j] + (self.c_min + j as i64) as f64 * u
    }

    /// Index of the dominant term, by bisection on the decreasing increments.
    fn argmax(&self, u: f64) -> usize {
        let (mut lo, mut hi) = (0usize, self.log_q.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.term(mid + 1, u) > self.term(mid, u) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    pub fn stats(&self, u: f64) -> SumStats {
        let j0 = self.argmax(u);
        let top = self.term(j0, u);
        let (mut s0, mut s1, mut s2) = (1.0, 0.0, 0.0);
        let mut accumulate = |j: usize| -> bool {
            let d = self.term(j, u) - top;
            if d < -LSE_CUTOFF {
                return false;
            }
            let w = d.exp();
            let dc = j as f64 - j0 as f64;
            s0 += w;
            s1 += w * dc;
            s2 += w * dc * dc;
            true
        };
        for j in (0..j0).rev() {
            if !accumulate(j) {
                break;
            }
        }
        for j in j0 + 1..self.log_q.len() {
            if !accumulate(j) {
                break;
            }
        }
        let m = s1 / s0;
        let log_f = top + s0.ln();
        let zero = (-self.c_min) as usize;
        SumStats {
            log_f,
            mean: (self.c_min + j0 as i64) as f64 + m,
            var: (s2 / s0 - m * m).max(0.0),
            w0: (self.term(zero, u) - log_f).exp(),
        }
    }

    /// `log F(e^u)`.
    pub fn log_f(&self, u: f64) -> f64 {
        self.stats(u).log_f
    }

    /// `u` where the `c = -1` and `c = +1` terms cross the `c = 0` term.
    pub fn crossings(&self) -> (Option<f64>, Option<f64>) {
        let l0 = self.log_q(0);
        let left = (self.c_min < 0).then(|| self.log_q(-1) - l0);
        let right = (self.c_max() > 0).then(|| l0 - self.log_q(1));
        (left, right)
    }

    /// Values of `log F` on a uniform `u` grid with `per_unit` points per unit.
    pub fn grid(&self, u_lo: f64, u_hi: f64, per_unit: usize) -> Vec<(f64, f64)> {
        let m = (((u_hi - u_lo) * per_unit as f64).ceil() as usize).max(1);
        (0..=m)
            .map(|i| {
                let u = u_lo + (u_hi - u_lo) * i as f64 / m as f64;
                (u, self.log_f(u))
            })
            .collect()
    }

    /// Relative weight of the terms with `|c| >= 2` at `u`.
    pub fn outer_mass(&self, u: f64) -> f64 {
        let s = self.stats(u);
        let near: f64 = (-1..=1)
            .filter(|c| *c >= self.c_min && *c <= self.c_max())
            .map(|c| (self.log_q(c) + c as f64 * u - s.log_f).exp())
            .sum();
        (1.0 - near).max(0.0)
    }

    /// `∫ (q_0 / F) (log F)_uu du`.
    pub fn mu(&self) -> Result<f64> {
        let (left, right) = self.crossings();
        let (lo, hi) = match (left, right) {
            (Some(l), Some(r)) => (l.min(r), l.max(r)),
            (Some(l), None) => (l, l),
            (None, Some(r)) => (r, r),
            (None, None) => return Err(Error::OutOfRegime("band sum has a single term".into())),
        };
        let mut breaks = vec![lo - 20.0, lo, lo + 20.0, hi - 20.0, hi, hi + 20.0];
        breaks.retain(|&b| b > lo - U_MARGIN && b < hi + U_MARGIN);
        breaks.sort_by(f64::total_cmp);
        let q = integrate_with_breaks(
            |u| {
                let s = self.stats(u);
                s.w0 * s.var
            },
            lo - U_MARGIN,
            hi + U_MARGIN,
            &breaks,
            1e-10,
        )?;
        Ok(q.value)
    }
}

/// Fiber factor of band `a`.
pub fn mu_fiber(band_sum: &BandSum) -> Result<f64> {
    band_sum.mu()
}

/// Value of the standardized three-term integral by quadrature, and the
/// closed form as printed (`None` when it is not a real number).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeTermValue {
    pub quadrature: f64,
    pub printed_closed_form: Option<f64>,
}

/// `∫_0^inf a x (a + 4bx + abx^2)/(1 + ax + bx^2)^3 dx` for the middle
/// monomial of `Q = 1 + ax + bx^2`.
pub fn three_term_integral(aa: f64, bb: f64) -> Result<ThreeTermValue> {
    if !(aa > 0.0 && bb > 0.0 && bb < aa * aa / 4.0) {
        return Err(Error::Domain {
            what: "bb",
            value: bb,
            domain: format!("(0, aa^2/4) with aa = {aa} > 0"),
        });
    }
    let sum = BandSum::from_log_coeffs(-1, vec![0.0, aa.ln(), bb.ln()])?;
    let quadrature = sum.mu()?;
    let d = (aa * aa - 4.0 * bb).sqrt();
    let printed = aa * (aa * d.sqrt() - 2.0 * bb * ((1.0 + aa / d).ln() - (1.0 - aa / d).ln())) / d.powi(3);
    Ok(ThreeTermValue {
        quadrature,
        printed_closed_form: printed.is_finite().then_some(printed),
    })
}

/// `∫_0^inf a/(1 + ax)^3 dx`, the constant monomial of `Q = 1 + ax`.
pub fn two_term_integral(aa: f64) -> Result<f64> {
    if !(aa > 0.0) {
        return Err(Error::Domain {
            what: "aa",
            value: aa,
            domain: "(0, inf)".into(),
        });
    }
    BandSum::from_log_coeffs(0, vec![0.0, aa.ln()])?.mu()
}

/// `1 - c0/(2k)`.
pub fn mu_outside(mp: &MomentumProfile, k: f64) -> f64 {
    1.0 - mp.c0() / (2.0 * k)
}

/// Diagonal entry over `D` for the `a = 1` band, `(N-1)^n / rho_1`.
pub fn mu_d_band1(s: &BergmanSurrogate) -> f64 {
    1.0 / (1.0 + s.s_m / (2.0 * (s.big_n - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEntry {
    pub a: usize,
    pub m_a: f64,
    pub regime: Regime,
    /// Entry used in the assembly.
    pub mu_a: f64,
    /// Band-sum value (present for every band).
    pub mu_fiber: f64,
    pub mu_outside: f64,
    /// Contribution over `D` (nonzero only for `a = 1`).
    pub mu_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySummary {
    /// `(Vol L^ + Vol D / 2) / dim H_k`.
    pub v: f64,
    /// `sum_a m_a (mu_a + mu_D,a / 2 - v)^2`.
    pub diag_energy: f64,
    /// `sum_a m_a (mu_a + mu_D,a / 2 - v)`.
    pub trace_residual: f64,
    /// `m_total^2 (1/k^2)^2`, never added to the diagonal energy.
    pub modeled_offdiag: f64,
}

/// Assembles the `lambda = 2/3` diagonal against `v`.
pub fn assemble_energy(entries: &[(f64, f64, f64)], vol_lhat: f64, vol_d: f64, dim_hk: f64, k: f64) -> EnergySummary {
    let v = (vol_lhat + 0.5 * vol_d) / dim_hk;
    let (mut energy, mut trace, mut total) = (0.0, 0.0, 0.0);
    for &(m, mu, mu_d) in entries {
        let dev = mu + 0.5 * mu_d - v;
        energy += m * dev * dev;
        trace += m * dev;
        total += m;
    }
    EnergySummary {
        v,
        diag_energy: energy,
        trace_residual: trace,
        modeled_offdiag: total * total / k.powi(4),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenterOfMassReport {
    pub k: f64,
    pub c0: f64,
    pub sigma: f64,
    pub dim_hk: f64,
    pub vol_lhat: f64,
    pub vol_d: f64,
    pub entries: Vec<BandEntry>,
    pub energy: EnergySummary,
}

impl CenterOfMassReport {
    pub fn entry(&self, a: usize) -> Option<&BandEntry> {
        self.entries.get(a.checked_sub(1)?)
    }
}

/// Sweeps every band at `k`, evaluates all per-band entries in parallel on the
/// current rayon pool and assembles the energy.
pub fn center_of_mass(ch: &CoordinateChart, gd: &GeometryData, k: f64, rel_tol: f64) -> Result<CenterOfMassReport> {
    let mp = ch.profile();
    let tau0 = mp.tau0();
    let surrogate = BergmanSurrogate::from_profile(mp, k)?;
    let count = surrogate.band_count();
    if count < 2 {
        return Err(Error::OutOfRegime(format!("k = {k} gives {count} band(s)")));
    }
    let a_values: Vec<f64> = (1..=count).map(|a| a as f64).collect();
    let log_i: Vec<f64> = band_sweep(ch, k, &a_values, rel_tol)
        .into_iter()
        .map(|b| b.map(|b| b.log_i_exact))
        .collect::<Result<_>>()?;
    let multiplicities = riemann_roch::band_multiplicities(gd, tau0, k)?;
    let mu_out = mu_outside(mp, k);
    let mu_d1 = mu_d_band1(&surrogate);
    let entries: Vec<BandEntry> = (1..=count)
        .into_par_iter()
        .map(|a| {
            let regime = Regime::classify(a as f64, k, tau0);
            let fiber = BandSum::new(&surrogate, &log_i, a)?.mu()?;
            let mu_a = match regime {
                Regime::Inside | Regime::Neck => fiber,
                Regime::Outside | Regime::DeepOutside => mu_out,
            };
            Ok(BandEntry {
                a,
                m_a: multiplicities[a - 1],
                regime,
                mu_a,
                mu_fiber: fiber,
                mu_outside: mu_out,
                mu_d: if a == 1 { mu_d1 } else { 0.0 },
            })
        })
        .collect::<Result<_>>()?;
    let dims = riemann_roch::dimension_report(gd, &FiberArea::Approx(tau0), k)?;
    let triples: Vec<(f64, f64, f64)> = entries.iter().map(|e| (e.m_a, e.mu_a, e.mu_d)).collect();
    let energy = assemble_energy(&triples, dims.vol_lhat, dims.vol_d, dims.dim_hk, k);
    Ok(CenterOfMassReport {
        k,
        c0: mp.c0(),
        sigma: dims.sigma,
        dim_hk: dims.dim_hk,
        vol_lhat: dims.vol_lhat,
        vol_d: dims.vol_d,
        entries,
        energy,
    })
}
