//! Intersection arithmetic on the completed bundle: the two leading
//! coefficients of `chi(kA - D)`, volumes, `sigma` and the band
//! multiplicities `m_a = h^0(D, kA - aD)`.
//!
//! Every formula is generic over [`Scalar`], so the same code runs in exact
//! rational arithmetic (rational `tau0`) and in floating point.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, ToPrimitive};

use crate::profile::{MomentumProfile, ProfileParams};
use crate::verify::VerificationRecord;
use crate::{Error, Result};

pub trait Scalar: Clone + Num {
    fn from_int(v: i64) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_int(v: i64) -> Self {
        v as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

fn pow<T: Scalar>(x: &T, e: u32) -> T {
    num_traits::pow::pow(x.clone(), e as usize)
}

fn factorial<T: Scalar>(m: u32) -> T {
    (1..=m as i64).fold(T::one(), |acc, j| acc * T::from_int(j))
}

/// Discrete invariants of `(D, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeometryData {
    n: u32,
    ln: i64,
    lk: i64,
    genus: Option<i64>,
}

impl GeometryData {
    /// `n = dim D`, `ln = L^n`, `lk = L^(n-1).K_D`.
    pub fn new(n: u32, ln: i64, lk: i64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("n must be at least 1".into()));
        }
        if ln <= 0 {
            return Err(Error::InvalidParams(format!("L^n must be positive (got {ln})")));
        }
        Ok(GeometryData { n, ln, lk, genus: None })
    }

    /// Curve of genus `genus` with a line bundle of degree `degree`.
    pub fn curve(genus: i64, degree: i64) -> Result<Self> {
        if genus < 2 {
            return Err(Error::InvalidParams(format!("genus must be at least 2 (got {genus})")));
        }
        if degree < 1 {
            return Err(Error::InvalidParams(format!("degree must be positive (got {degree})")));
        }
        Ok(GeometryData {
            n: 1,
            ln: degree,
            lk: 2 * genus - 2,
            genus: Some(genus),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }
    pub fn ln(&self) -> i64 {
        self.ln
    }
    pub fn lk(&self) -> i64 {
        self.lk
    }

    /// Genus of the curve (`1 + LK/2` when only intersection data was given).
    pub fn genus(&self) -> Option<f64> {
        match (self.n, self.genus) {
            (_, Some(g)) => Some(g as f64),
            (1, None) => Some(1.0 + self.lk as f64 / 2.0),
            _ => None,
        }
    }

    /// `S_M = -n (L^(n-1).K_D) / L^n`.
    pub fn s_m(&self) -> f64 {
        -(self.n as f64) * self.lk as f64 / self.ln as f64
    }

    pub fn profile_params(&self) -> Result<ProfileParams> {
        ProfileParams::new(self.n, self.s_m())
    }
}

/// `(a0, a1)` with `chi(kA - D) = (a0 k^(n+1) + a1 k^n)/(n+1)! + O(k^(n-1))`.
pub fn chi_coefficients<T: Scalar>(gd: &GeometryData, tau0: &T) -> (T, T) {
    let n = gd.n;
    let one_t = T::one() + tau0.clone();
    let ln = T::from_int(gd.ln);
    let lk = T::from_int(gd.lk);
    let a0 = (pow(&one_t, n + 1) - T::one()) * ln.clone();
    let half_n1 = T::from_int(n as i64 + 1) / T::from_int(2);
    let a1 = T::zero() - half_n1 * (pow(&one_t, n) - T::one()) * (ln + lk);
    (a0, a1)
}

/// `(b0, b1)`, the leading coefficients of `Vol L^ + Vol D / 2` in `k`.
pub fn b_coefficients<T: Scalar>(gd: &GeometryData, tau0: &T) -> (T, T) {
    let (a0, _) = chi_coefficients(gd, tau0);
    let one_t = T::one() + tau0.clone();
    let half_n1 = T::from_int(gd.n as i64 + 1) / T::from_int(2);
    let b1 = T::zero() - half_n1 * pow(&one_t, gd.n) * T::from_int(gd.ln);
    (a0, b1)
}

/// `sigma = (b1 - a1)/a0`.
pub fn sigma<T: Scalar>(gd: &GeometryData, tau0: &T) -> T {
    let (a0, a1) = chi_coefficients(gd, tau0);
    let (_, b1) = b_coefficients(gd, tau0);
    (b1 - a1) / a0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Volumes<T> {
    pub vol_lhat: T,
    pub vol_d: T,
    pub b0: T,
    pub b1: T,
}

/// `Vol L^ = [(N-1)^(n+1) - k^(n+1)] L^n/(n+1)!` and `Vol D = (N-1)^n L^n/n!`
/// with `N = k(1 + tau0)`.
pub fn volumes<T: Scalar>(gd: &GeometryData, tau0: &T, k: &T) -> Volumes<T> {
    let n = gd.n;
    let ln = T::from_int(gd.ln);
    let nm1 = k.clone() * (T::one() + tau0.clone()) - T::one();
    let vol_lhat = (pow(&nm1, n + 1) - pow(k, n + 1)) * ln.clone() / factorial(n + 1);
    let vol_d = pow(&nm1, n) * ln / factorial(n);
    let (b0, b1) = b_coefficients(gd, tau0);
    Volumes { vol_lhat, vol_d, b0, b1 }
}

/// Two-term `chi(kA - D) = (a0 k^(n+1) + a1 k^n)/(n+1)!`.
pub fn chi_two_term<T: Scalar>(gd: &GeometryData, tau0: &T, k: &T) -> T {
    let (a0, a1) = chi_coefficients(gd, tau0);
    (a0 * pow(k, gd.n + 1) + a1 * pow(k, gd.n)) / factorial(gd.n + 1)
}

/// Number of bands `floor(k tau0)` (a small tolerance absorbs rounding when
/// `k tau0` is an integer).
pub fn band_count(k: f64, tau0: f64) -> usize {
    let x = k * tau0;
    (x + 1e-9 * x.max(1.0)).floor().max(0.0) as usize
}

/// `m_a` for `a = 1..=floor(k tau0)`. Curve Riemann-Roch for `n = 1`,
/// leading term `(N - a)^n L^n / n!` otherwise.
pub fn band_multiplicities(gd: &GeometryData, tau0: f64, k: f64) -> Result<Vec<f64>> {
    let big_n = k * (1.0 + tau0);
    let count = band_count(k, tau0);
    let ln = gd.ln as f64;
    let fact: f64 = factorial::<f64>(gd.n);
    (1..=count)
        .map(|a| {
            let r = big_n - a as f64;
            match gd.genus() {
                Some(g) if gd.n == 1 => {
                    if r * ln <= 2.0 * g - 2.0 {
                        Err(Error::OutOfRegime(format!(
                            "band {a}: degree {} <= 2g - 2 = {}",
                            r * ln,
                            2.0 * g - 2.0
                        )))
                    } else {
                        Ok(r * ln + 1.0 - g)
                    }
                }
                _ => Ok(r.powi(gd.n as i32) * ln / fact),
            }
        })
        .collect()
}

/// Fiber area supplied either exactly or as a float.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberArea {
    Exact(BigRational),
    Approx(f64),
}

impl FiberArea {
    pub fn value(&self) -> f64 {
        match self {
            FiberArea::Exact(q) => Scalar::to_f64(q),
            FiberArea::Approx(x) => *x,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionReport {
    pub k: f64,
    pub exact: bool,
    /// Two-term Riemann-Roch dimension.
    pub dim_hk: f64,
    /// `sum_a m_a`.
    pub band_total: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
    pub vol_lhat: f64,
    pub vol_d: f64,
    pub sigma: f64,
    pub band_multiplicities: Vec<f64>,
}

impl DimensionReport {
    /// `(Vol L^ + Vol D / 2) / dim H_k`.
    pub fn normalized_volume(&self) -> f64 {
        (self.vol_lhat + 0.5 * self.vol_d) / self.dim_hk
    }
}

pub fn dimension_report(gd: &GeometryData, area: &FiberArea, k: f64) -> Result<DimensionReport> {
    if !(k >= 1.0 && k.is_finite()) {
        return Err(Error::Domain {
            what: "k",
            value: k,
            domain: "[1, inf)".into(),
        });
    }
    let tau0 = area.value();
    let band_multiplicities = band_multiplicities(gd, tau0, k)?;
    let band_total = band_multiplicities.iter().sum();
    let (exact, a0, a1, b0, b1, vol_lhat, vol_d, sigma_v, dim_hk) = match area {
        FiberArea::Exact(q) => {
            let kq = BigRational::from_float(k).ok_or(Error::InvalidParams("k is not finite".into()))?;
            let (a0, a1) = chi_coefficients(gd, q);
            let v = volumes(gd, q, &kq);
            let s = sigma(gd, q);
            let d = chi_two_term(gd, q, &kq);
            let f = |x: &BigRational| Scalar::to_f64(x);
            (true, f(&a0), f(&a1), f(&v.b0), f(&v.b1), f(&v.vol_lhat), f(&v.vol_d), f(&s), f(&d))
        }
        FiberArea::Approx(t) => {
            let (a0, a1) = chi_coefficients(gd, t);
            let v = volumes(gd, t, &k);
            (false, a0, a1, v.b0, v.b1, v.vol_lhat, v.vol_d, sigma(gd, t), chi_two_term(gd, t, &k))
        }
    };
    Ok(DimensionReport {
        k,
        exact,
        dim_hk,
        band_total,
        a0,
        a1,
        b0,
        b1,
        vol_lhat,
        vol_d,
        sigma: sigma_v,
        band_multiplicities,
    })
}

/// `|c0/2 + sigma|` with `sigma` evaluated at the profile's `tau0`.
pub fn sigma_identity(gd: &GeometryData, mp: &MomentumProfile) -> VerificationRecord {
    let s = sigma(gd, &mp.tau0());
    let residual = (0.5 * mp.c0() + s).abs();
    let consistent = (mp.params().s_m() - gd.s_m()).abs() <= 1e-12 * gd.s_m().abs() && mp.n() == gd.n;
    let rec = VerificationRecord::new("sigma_identity", "c0/2 = -sigma", residual, 1e-8).with_detail(format!(
        "c0 = {:.12}, tau0 = {:.12}, sigma = {:.12}, S_M(geometry) = {}, S_M(profile) = {}{}",
        mp.c0(),
        mp.tau0(),
        s,
        gd.s_m(),
        mp.params().s_m(),
        if consistent { "" } else { " (profile not built from this geometry)" }
    ));
    if gd.n == 1 {
        rec
    } else {
        rec.soft()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    #[test]
    fn exact_examples() {
        let gd = GeometryData::curve(2, 2).unwrap();
        let (a0, a1) = chi_coefficients(&gd, &q(3));
        assert_eq!((a0, a1), (q(30), q(-12)));
        let v = volumes(&gd, &q(3), &q(10));
        assert_eq!(v.vol_lhat, q(1421));
        assert_eq!(v.vol_d, q(78));
        assert_eq!(v.b0, q(30));
        let (a0, _) = chi_coefficients(&gd, &q(0));
        assert_eq!(a0, q(0));
    }

    #[test]
    fn multiplicities_example() {
        let gd = GeometryData::curve(2, 2).unwrap();
        let m = band_multiplicities(&gd, 3.0, 10.0).unwrap();
        assert_eq!(m.len(), 30);
        assert_eq!(m[0], 77.0);
        let direct: f64 = (1..=30).map(|a| ((40 - a) * 2 - 1) as f64).sum();
        assert_eq!(m.iter().sum::<f64>(), direct);
        assert_eq!(direct, 1440.0);
        assert!(m.windows(2).all(|w| w[1] < w[0]));
        let rep = dimension_report(&gd, &FiberArea::Exact(q(3)), 10.0).unwrap();
        assert!(rep.exact);
        assert_eq!(rep.dim_hk, rep.band_total);
    }

    #[test]
    fn sigma_vanishes_when_numerator_does() {
        // tau0 (2g - 2) = d
        let gd = GeometryData::curve(3, 4).unwrap();
        assert_eq!(sigma(&gd, &q(1)), q(0));
    }

    #[test]
    fn low_degree_band_is_rejected() {
        let gd = GeometryData::curve(5, 1).unwrap();
        assert!(band_multiplicities(&gd, 3.0, 2.0).is_err());
    }

    #[test]
    fn canonical_sigma_identity() {
        for (g, d) in [(2, 2), (3, 4)] {
            let gd = GeometryData::curve(g, d).unwrap();
            assert_eq!(gd.s_m(), -1.0);
            let mp = MomentumProfile::new(gd.profile_params().unwrap()).unwrap();
            let rec = sigma_identity(&gd, &mp);
            assert!(rec.pass, "{rec:?}");
            let s = sigma(&gd, &mp.tau0());
            assert!((s - 0.1125741).abs() < 1e-7, "{s}");
        }
    }

    #[test]
    fn mismatched_profile_fails() {
        let gd = GeometryData::curve(2, 2).unwrap();
        let mp = MomentumProfile::new(ProfileParams::new(1, -2.0).unwrap()).unwrap();
        let rec = sigma_identity(&gd, &mp);
        assert!(!rec.pass && rec.residual > 1e-3);
    }
}
