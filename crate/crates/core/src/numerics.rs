//! Shared numerical kernel.
//!
//! Everything here is a pure function of its inputs. The quadrature is a
//! globally adaptive 7/15-point Gauss-Kronrod scheme with interval bisection;
//! semi-infinite and infinite ranges are mapped onto finite ones before the
//! rule is applied. Integrands that are exponentials of large (positive or
//! negative) exponents go through [`integrate_logdomain`], which factors out
//! the interior maximum so that nothing overflows or underflows.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use thiserror::Error;

/// Default relative tolerance for every quadrature in the crate.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Absolute floor in the convergence test.
pub const ABS_FLOOR: f64 = 1e-300;
/// Default evaluation budget for [`integrate`].
pub const DEFAULT_MAX_EVALS: usize = 150_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("quadrature did not converge after {evaluations} evaluations (partial value {partial:e}, error estimate {error_estimate:e})")]
    NotConverged {
        partial: f64,
        error_estimate: f64,
        evaluations: usize,
    },
    #[error("integrand returned NaN at x = {x:e}")]
    NanIntegrand { x: f64 },
    #[error("no sign change on [{lo:e}, {hi:e}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("invalid interval [{lo:e}, {hi:e}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("finite-difference order {0} not supported (1..=4)")]
    UnsupportedOrder(u32),
}

pub type Result<T> = std::result::Result<T, NumericsError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// Absolute error estimate.
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Result of a log-domain quadrature: the integral equals `exp(log_value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogQuadratureResult {
    pub log_value: f64,
    /// Relative error estimate of `exp(log_value)`.
    pub rel_error: f64,
    pub evaluations: usize,
    /// The shift that was factored out of the integrand.
    pub shift: f64,
}

impl LogQuadratureResult {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub root: f64,
    /// |f(root)|
    pub residual: f64,
    pub bracket_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupResult {
    pub argmax: f64,
    pub max_value: f64,
    pub bracket_width: f64,
}

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    // Largest error first; ties broken by position so the heap order is
    // fully deterministic.
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.lo.total_cmp(&self.lo))
    }
}

/// One application of the 15-point Kronrod rule with the embedded 7-point
/// Gauss estimate. Returns (value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |x: f64| -> Result<f64> {
        let y = f(x);
        if y.is_nan() {
            Err(NumericsError::NanIntegrand { x })
        } else {
            Ok(y)
        }
    };

    let fc = eval(center)?;
    let mut resk = fc * WGK[7];
    let mut resg = fc * WG[3];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx)?;
        let f2 = eval(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let value = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    if !value.is_finite() {
        return Err(NumericsError::NanIntegrand { x: center });
    }
    Ok((value, err))
}

/// Fixed 15-point Kronrod rule on a finite panel (no error estimate). Exact for
/// polynomials up to degree 22.
pub fn kronrod15<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut acc = WGK[7] * f(center);
    for j in 0..7 {
        let dx = half * XGK[j];
        acc += WGK[j] * (f(center - dx) + f(center + dx));
    }
    acc * half
}

/// Adaptive quadrature on a finite parameter interval with optional interior
/// breakpoints. All the public entry points funnel through here.
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    points: &[f64],
    rel_tol: f64,
    max_evals: usize,
) -> Result<QuadratureResult> {
    let tol = rel_tol.max(50.0 * f64::EPSILON);
    let mut heap = BinaryHeap::new();
    let mut evaluations = 0;
    for w in points.windows(2) {
        let (value, error) = gk15(f, w[0], w[1])?;
        evaluations += 15;
        heap.push(Segment {
            lo: w[0],
            hi: w[1],
            value,
            error,
        });
    }

    let mut running_value: f64 = heap.iter().map(|s| s.value).sum();
    let mut running_error: f64 = heap.iter().map(|s| s.error).sum();
    loop {
        if running_error <= (tol * running_value.abs()).max(ABS_FLOOR) {
            // Final totals are summed in positional order so the result does
            // not depend on the heap's internal layout.
            let mut segs: Vec<&Segment> = heap.iter().collect();
            segs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
            let value: f64 = segs.iter().map(|s| s.value).sum();
            let error_estimate: f64 = segs.iter().map(|s| s.error).sum();
            if error_estimate <= (tol * value.abs()).max(ABS_FLOOR) {
                return Ok(QuadratureResult {
                    value,
                    error_estimate,
                    evaluations,
                });
            }
            running_value = value;
            running_error = error_estimate;
        }
        if evaluations + 30 > max_evals {
            return Err(NumericsError::NotConverged {
                partial: running_value,
                error_estimate: running_error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        running_value -= worst.value;
        running_error -= worst.error;
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval can no longer be split in floating point; accept it.
            running_value += worst.value;
            heap.push(Segment { error: 0.0, ..worst });
            continue;
        }
        for (lo, hi) in [(worst.lo, mid), (mid, worst.hi)] {
            let (value, error) = gk15(f, lo, hi)?;
            evaluations += 15;
            running_value += value;
            running_error += error;
            heap.push(Segment { lo, hi, value, error });
        }
    }
}

/// Map of an interval with possibly infinite ends onto a finite parameter
/// range. `x = u/(1-u)` on half lines, `x = u/(1-u^2)` on the whole line.
#[derive(Debug, Clone, Copy)]
enum Chart {
    Finite,
    Upper(f64),
    Lower(f64),
    Whole,
}

impl Chart {
    fn new(lo: f64, hi: f64) -> Result<(Self, f64, f64)> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(NumericsError::InvalidInterval { lo, hi });
        }
        Ok(match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (Chart::Finite, lo, hi),
            (true, false) => (Chart::Upper(lo), 0.0, 1.0),
            (false, true) => (Chart::Lower(hi), 0.0, 1.0),
            (false, false) => (Chart::Whole, -1.0, 1.0),
        })
    }

    /// Returns (x, dx/du).
    fn map(self, u: f64) -> (f64, f64) {
        match self {
            Chart::Finite => (u, 1.0),
            Chart::Upper(a) => {
                let s = 1.0 - u;
                (a + u / s, 1.0 / (s * s))
            }
            Chart::Lower(b) => {
                let s = 1.0 - u;
                (b - u / s, 1.0 / (s * s))
            }
            Chart::Whole => {
                let s = 1.0 - u * u;
                (u / s, (1.0 + u * u) / (s * s))
            }
        }
    }

    fn inverse(self, x: f64) -> f64 {
        match self {
            Chart::Finite => x,
            Chart::Upper(a) => {
                let y = x - a;
                y / (1.0 + y)
            }
            Chart::Lower(b) => {
                let y = b - x;
                y / (1.0 + y)
            }
            Chart::Whole => {
                if x == 0.0 {
                    0.0
                } else {
                    (-1.0 + (1.0 + 4.0 * x * x).sqrt()) / (2.0 * x)
                }
            }
        }
    }
}

fn mapped<F: Fn(f64) -> f64>(chart: Chart, f: F) -> impl Fn(f64) -> f64 {
    move |u| {
        let (x, jac) = chart.map(u);
        if !x.is_finite() {
            return 0.0;
        }
        let y = f(x);
        if y == 0.0 {
            0.0
        } else {
            y * jac
        }
    }
}

fn breakpoints(chart: Chart, ulo: f64, uhi: f64, interior: &[f64]) -> Vec<f64> {
    let mut pts = vec![ulo];
    let mut inner: Vec<f64> = interior
        .iter()
        .map(|&x| chart.inverse(x))
        .filter(|&u| u > ulo && u < uhi)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(uhi);
    pts
}

/// Integrate `f` over `[lo, hi]`; either end may be infinite.
///
/// Converges when the summed error estimate is at most
/// `rel_tol * |value| + 1e-300`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<QuadratureResult> {
    integrate_with_breaks(f, lo, hi, &[], rel_tol)
}

/// As [`integrate`], seeding the adaptive partition with interior points
/// (peak locations, kinks).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    interior: &[f64],
    rel_tol: f64,
) -> Result<QuadratureResult> {
    let (chart, ulo, uhi) = Chart::new(lo, hi)?;
    let pts = breakpoints(chart, ulo, uhi, interior);
    let g = mapped(chart, &f);
    adaptive(&g, &pts, rel_tol, DEFAULT_MAX_EVALS).map_err(|e| match e {
        NumericsError::NanIntegrand { x } => NumericsError::NanIntegrand { x: chart.map(x).0 },
        other => other,
    })
}

/// Integral of `exp(logf(x) - shift)` times `exp(shift)`, with a caller-chosen
/// shift (normally the interior maximum of `logf`).
pub fn integrate_shifted<F: Fn(f64) -> f64>(
    logf: F,
    lo: f64,
    hi: f64,
    shift: f64,
    interior: &[f64],
    rel_tol: f64,
) -> Result<LogQuadratureResult> {
    let q = integrate_with_breaks(
        |x| {
            let l = logf(x);
            if l == f64::NEG_INFINITY {
                0.0
            } else {
                (l - shift).exp()
            }
        },
        lo,
        hi,
        interior,
        rel_tol,
    )?;
    Ok(LogQuadratureResult {
        log_value: shift + q.value.ln(),
        rel_error: q.error_estimate / q.value.abs(),
        evaluations: q.evaluations,
        shift,
    })
}

/// Integral of `exp(logf)`, computed as `exp(M) * ∫ exp(logf - M)` with `M`
/// the interior maximum of `logf` (located by sampling plus golden section).
pub fn integrate_logdomain<F: Fn(f64) -> f64>(
    logf: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<LogQuadratureResult> {
    let (chart, ulo, uhi) = Chart::new(lo, hi)?;
    const SAMPLES: usize = 256;
    let h = (uhi - ulo) / SAMPLES as f64;
    let at = |u: f64| {
        let (x, _) = chart.map(u);
        if x.is_finite() {
            logf(x)
        } else {
            f64::NEG_INFINITY
        }
    };
    let mut best = (f64::NEG_INFINITY, 0usize);
    for i in 1..SAMPLES {
        let v = at(ulo + h * i as f64);
        if v.is_nan() {
            return Err(NumericsError::NanIntegrand { x: chart.map(ulo + h * i as f64).0 });
        }
        if v > best.0 {
            best = (v, i);
        }
    }
    if best.0 == f64::NEG_INFINITY {
        return Ok(LogQuadratureResult {
            log_value: f64::NEG_INFINITY,
            rel_error: 0.0,
            evaluations: SAMPLES,
            shift: 0.0,
        });
    }
    let i = best.1;
    let a = ulo + h * (i - 1) as f64;
    let b = ulo + h * (i + 1) as f64;
    let refined = sup_search(&at, a, b, 1e-12);
    let shift = refined.max_value.max(best.0);
    let peak = chart.map(refined.argmax).0;
    let mut out = integrate_shifted(&logf, lo, hi, shift, &[peak], rel_tol)?;
    out.evaluations += SAMPLES + 60;
    Ok(out)
}

/// Brent's method on a sign-changing bracket.
///
/// Stops when `|f(root)| <= tol` or the bracket is narrower than
/// `tol * max(1, |root|)`.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<RootResult> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa.is_nan() {
        return Err(NumericsError::NanIntegrand { x: a });
    }
    if fb.is_nan() {
        return Err(NumericsError::NanIntegrand { x: b });
    }
    if fa == 0.0 {
        return Ok(RootResult { root: a, residual: 0.0, bracket_width: 0.0 });
    }
    if fb == 0.0 {
        return Ok(RootResult { root: b, residual: 0.0, bracket_width: 0.0 });
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::NoSignChange { lo, hi, f_lo: fa, f_hi: fb });
    }

    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let xtol = 0.5 * tol * b.abs().max(1.0);
        let xtol = xtol.max(2.0 * f64::EPSILON * b.abs());
        let m = 0.5 * (c - b);
        if fb.abs() <= tol || m.abs() <= xtol || fb == 0.0 {
            return Ok(RootResult {
                root: b,
                residual: fb.abs(),
                bracket_width: (c - b).abs(),
            });
        }
        if e.abs() >= xtol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (xtol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > xtol { d } else { xtol.copysign(m) };
        fb = f(b);
        if fb.is_nan() {
            return Err(NumericsError::NanIntegrand { x: b });
        }
    }
    Ok(RootResult {
        root: b,
        residual: fb.abs(),
        bracket_width: (c - b).abs(),
    })
}

/// Golden-section search for the maximizer of a unimodal function on
/// `[lo, hi]`, to a bracket width of `tol * max(1, |x|)`.
pub fn sup_search<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> SupResult {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while (b - a) > tol * 0.5 * (a.abs() + b.abs()).max(1.0) && iterations < 400 {
        iterations += 1;
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let (argmax, max_value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    SupResult {
        argmax,
        max_value,
        bracket_width: b - a,
    }
}

/// Bisection on a monotone predicate: `pred(lo)` true, `pred(hi)` false.
/// Returns the last point known to satisfy the predicate once the bracket is
/// narrower than `width`.
pub fn bisect_predicate<P: Fn(f64) -> bool>(pred: P, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Central-difference estimate of the `order`-th derivative at `x0`,
/// truncation error O(h^2).
pub fn finite_diff<F: Fn(f64) -> f64>(f: F, x0: f64, order: u32, h: f64) -> Result<f64> {
    Ok(match order {
        1 => (f(x0 + h) - f(x0 - h)) / (2.0 * h),
        2 => (f(x0 + h) - 2.0 * f(x0) + f(x0 - h)) / (h * h),
        3 => (f(x0 + 2.0 * h) - 2.0 * f(x0 + h) + 2.0 * f(x0 - h) - f(x0 - 2.0 * h)) / (2.0 * h * h * h),
        4 => {
            (f(x0 + 2.0 * h) - 4.0 * f(x0 + h) + 6.0 * f(x0) - 4.0 * f(x0 - h) + f(x0 - 2.0 * h))
                / (h * h * h * h)
        }
        m => return Err(NumericsError::UnsupportedOrder(m)),
    })
}

/// One Richardson step on [`finite_diff`]: combines steps `h` and `h/2` to
/// cancel the O(h^2) term.
pub fn finite_diff_richardson<F: Fn(f64) -> f64>(f: F, x0: f64, order: u32, h: f64) -> Result<f64> {
    let coarse = finite_diff(&f, x0, order, h)?;
    let fine = finite_diff(&f, x0, order, 0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `log(sum(exp(xs)))` without overflow. Empty input gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_infinite() {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}
