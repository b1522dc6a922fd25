//! Real-valued special functions underpinning the fading distributions.
//!
//! Everything here is deterministic, table-free beyond compile-time
//! constants, and re-entrant. Provided functions:
//!
//! * [`gamma_fn`] — Gamma function Γ(x), x > 0 (Lanczos, g = 7, n = 9)
//! * [`ln_gamma`] — ln Γ(x), x > 0
//! * [`upper_incomplete_gamma`] — Γ(a, x) for real a with x ≥ 0, and the
//!   exact finite-series continuation for integer a with x < 0
//! * [`exp_integral_en`] — two-argument exponential integral
//!   E_n(a, r) = ∫₁^∞ e^{−rt} t^{−a} dt
//! * [`erf`] / [`erfc`] — error function and complement
//!
//! The negative-argument continuation of Γ(a, x) exists because the combined
//! fog/pointing distribution evaluates Γ(k, m·ln u) with m = z − ρ², which is
//! negative for most realistic link geometries. For integer k the finite
//! series (k−1)!·e^{−x}·Σ_{n<k} x^n/n! is exact at any real x.

use crate::real::c;
use crate::{Error, Real, Result};

/// Series/continued-fraction evaluation controls.
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Relative termination tolerance for series and continued fractions.
    pub rel_tol: f64,
    /// Hard cap on series terms / CF iterations.
    pub max_terms: usize,
}

impl EvalOptions {
    /// Validated constructor: `rel_tol` in (0, 1e-3], `max_terms` >= 50.
    pub fn new(rel_tol: f64, max_terms: usize) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-3) {
            return Err(Error::Domain(format!(
                "EvalOptions rel_tol must be in (0, 1e-3], got {rel_tol:e}"
            )));
        }
        if max_terms < 50 {
            return Err(Error::Domain(format!(
                "EvalOptions max_terms must be >= 50, got {max_terms}"
            )));
        }
        Ok(Self { rel_tol, max_terms })
    }
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-14,
            max_terms: 400,
        }
    }
}

// Lanczos approximation, g = 7, n = 9 (Godfrey coefficients).
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
];

fn lanczos_sum<R: Real>(z: R) -> R {
    let mut sum = c::<R>(LANCZOS_COEFFS[0]);
    for (i, &coef) in LANCZOS_COEFFS[1..].iter().enumerate() {
        sum += c::<R>(coef) / (z + c::<R>((i + 1) as f64));
    }
    sum
}

/// Gamma function Γ(x) for x > 0.
///
/// Relative error is at the 1e-13 level over the range used by the channel
/// model. Overflows to +∞ for x ≳ 171.6.
pub fn gamma_fn<R: Real>(x: R) -> Result<R> {
    if !(x > R::zero()) {
        return Err(Error::Domain(format!(
            "gamma_fn requires x > 0, got {}",
            x.as_f64()
        )));
    }
    let half = c::<R>(0.5);
    if x < half {
        // Reflection keeps the Lanczos argument >= 0.5 (used only by tests;
        // channel shapes are >= 0.5 in practice).
        let pi = c::<R>(std::f64::consts::PI);
        return Ok(pi / ((pi * x).sin() * gamma_fn(R::one() - x)?));
    }
    let z = x - R::one();
    let t = z + c::<R>(LANCZOS_G) + half;
    let sqrt_2pi = c::<R>((2.0 * std::f64::consts::PI).sqrt());
    Ok(sqrt_2pi * t.powf(z + half) * (-t).exp() * lanczos_sum(z))
}

/// Natural log of Γ(x) for x > 0.
pub fn ln_gamma<R: Real>(x: R) -> Result<R> {
    if !(x > R::zero()) {
        return Err(Error::Domain(format!(
            "ln_gamma requires x > 0, got {}",
            x.as_f64()
        )));
    }
    let half = c::<R>(0.5);
    if x < half {
        let pi = c::<R>(std::f64::consts::PI);
        return Ok((pi / (pi * x).sin()).ln() - ln_gamma(R::one() - x)?);
    }
    let z = x - R::one();
    let t = z + c::<R>(LANCZOS_G) + half;
    let ln_sqrt_2pi = c::<R>(0.5 * (2.0 * std::f64::consts::PI).ln());
    Ok(ln_sqrt_2pi + (z + half) * t.ln() - t + lanczos_sum(z).ln())
}

/// Regularized lower incomplete gamma P(a, x) = γ(a, x)/Γ(a), a > 0, x >= 0.
///
/// Series for x < a + 1, continued fraction otherwise; the pair avoids
/// cancellation on both sides.
pub(crate) fn regularized_lower<R: Real>(a: R, x: R, opts: &EvalOptions) -> Result<R> {
    debug_assert!(a > R::zero() && x >= R::zero());
    if x == R::zero() {
        return Ok(R::zero());
    }
    if x < a + R::one() {
        gamma_p_series(a, x, opts)
    } else {
        Ok(R::one() - gamma_q_cf(a, x, opts)?)
    }
}

fn gamma_scale<R: Real>(a: R, x: R) -> R {
    // e^{-x} x^a / Γ(a), assembled in log space.
    (a * x.ln() - x - ln_gamma(a).unwrap_or_else(|_| R::infinity())).exp()
}

fn gamma_p_series<R: Real>(a: R, x: R, opts: &EvalOptions) -> Result<R> {
    let tol = c::<R>(opts.rel_tol);
    let mut ap = a;
    let mut del = R::one() / a;
    let mut sum = del;
    for _ in 0..opts.max_terms {
        ap += R::one();
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * tol {
            return Ok(sum * gamma_scale(a, x));
        }
    }
    Err(Error::EvaluationFailure {
        context: "incomplete gamma series".into(),
        abscissa: x.as_f64(),
    })
}

fn gamma_q_cf<R: Real>(a: R, x: R, opts: &EvalOptions) -> Result<R> {
    // Modified Lentz on the standard continued fraction for Q(a, x).
    let tol = c::<R>(opts.rel_tol);
    let fpmin = c::<R>(1e-300);
    let mut b = x + R::one() - a;
    let mut cc = R::one() / fpmin;
    let mut d = R::one() / b;
    let mut h = d;
    for i in 1..=opts.max_terms {
        let an = -c::<R>(i as f64) * (c::<R>(i as f64) - a);
        b += c::<R>(2.0);
        d = an * d + b;
        if d.abs() < fpmin {
            d = fpmin;
        }
        cc = b + an / cc;
        if cc.abs() < fpmin {
            cc = fpmin;
        }
        d = R::one() / d;
        let del = d * cc;
        h *= del;
        if (del - R::one()).abs() < tol {
            return Ok(h * gamma_scale(a, x));
        }
    }
    Err(Error::EvaluationFailure {
        context: "incomplete gamma continued fraction".into(),
        abscissa: x.as_f64(),
    })
}

/// Treat `a` as an integer shape when it is within 1e-9 of one.
pub(crate) fn is_integer_shape<R: Real>(a: R) -> Option<u32> {
    let r = a.round();
    if (a - r).abs() < c::<R>(1e-9) && r >= R::zero() && r < c::<R>(4.0e9) {
        r.to_u32()
    } else {
        None
    }
}

/// Upper incomplete gamma Γ(a, x) = ∫ₓ^∞ s^{a−1} e^{−s} ds.
///
/// * real `a`, `x >= 0`: series / continued fraction, with downward
///   recurrence Γ(a−1, x) = (Γ(a, x) − x^{a−1}e^{−x})/(a−1) for a <= 0;
/// * integer `a >= 1`, `x < 0`: the exact finite series
///   (a−1)!·e^{−x}·Σ_{n=0}^{a−1} x^n/n!;
/// * anything else with `x < 0` is a domain error (the continuation is not
///   real-valued there).
pub fn upper_incomplete_gamma<R: Real>(a: R, x: R, opts: &EvalOptions) -> Result<R> {
    if x < R::zero() {
        return match is_integer_shape(a) {
            Some(k) if k >= 1 => Ok(finite_series_upper(k, x)),
            _ => Err(Error::Domain(format!(
                "upper_incomplete_gamma with x < 0 requires positive integer a, got a = {}, x = {}",
                a.as_f64(),
                x.as_f64()
            ))),
        };
    }
    if x == R::zero() {
        if a > R::zero() {
            return gamma_fn(a);
        }
        return Err(Error::Domain(
            "upper_incomplete_gamma(a <= 0, 0) diverges".into(),
        ));
    }
    if a > R::zero() {
        if x < a + R::one() {
            let p = gamma_p_series(a, x, opts)?;
            Ok(gamma_fn(a)? * (R::one() - p))
        } else {
            Ok(gamma_q_cf(a, x, opts)? * gamma_fn(a)?)
        }
    } else {
        // Descend from a base shape in (0, 1], or from Γ(0, x) = E1(x) when
        // a is a non-positive integer.
        let (mut shape, mut value) = if is_integer_shape(-a).is_some() || a == R::zero() {
            (R::zero(), exp_integral_e1(x, opts)?)
        } else {
            let base = a - a.floor();
            (base, upper_incomplete_gamma(base, x, opts)?)
        };
        while shape > a + c::<R>(0.5) {
            let prev = shape - R::one();
            value = (value - ((shape - R::one()) * x.ln() - x).exp()) / prev;
            shape = prev;
        }
        Ok(value)
    }
}

/// Γ(k, x) for integer k >= 1 via the finite series, exact for any real x.
fn finite_series_upper<R: Real>(k: u32, x: R) -> R {
    let mut term = R::one();
    let mut sum = R::one();
    let mut factorial = R::one();
    for n in 1..k {
        term *= x / c::<R>(n as f64);
        sum += term;
        factorial *= c::<R>(n as f64);
    }
    factorial * (-x).exp() * sum
}

/// Exponential integral E1(x) = ∫ₓ^∞ e^{−t}/t dt, x > 0.
fn exp_integral_e1<R: Real>(x: R, opts: &EvalOptions) -> Result<R> {
    debug_assert!(x > R::zero());
    let tol = c::<R>(opts.rel_tol);
    if x <= R::one() {
        // -gamma_E - ln x + sum (-1)^{n+1} x^n / (n n!)
        let euler = c::<R>(0.577_215_664_901_532_9);
        let mut sum = R::zero();
        let mut term = R::one();
        for n in 1..=opts.max_terms {
            let nf = c::<R>(n as f64);
            term *= -x / nf;
            let contrib = -term / nf;
            sum += contrib;
            if contrib.abs() < (sum.abs() + tol) * tol {
                return Ok(sum - euler - x.ln());
            }
        }
        Err(Error::EvaluationFailure {
            context: "E1 series".into(),
            abscissa: x.as_f64(),
        })
    } else {
        // Continued fraction e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        let fpmin = c::<R>(1e-300);
        let mut b = x + R::one();
        let mut cc = R::one() / fpmin;
        let mut d = R::one() / b;
        let mut h = d;
        for i in 1..=opts.max_terms {
            let an = -c::<R>((i * i) as f64);
            b += c::<R>(2.0);
            d = an * d + b;
            if d.abs() < fpmin {
                d = fpmin;
            }
            cc = b + an / cc;
            if cc.abs() < fpmin {
                cc = fpmin;
            }
            d = R::one() / d;
            let del = d * cc;
            h *= del;
            if (del - R::one()).abs() < tol {
                return Ok(h * (-x).exp());
            }
        }
        Err(Error::EvaluationFailure {
            context: "E1 continued fraction".into(),
            abscissa: x.as_f64(),
        })
    }
}

/// Two-argument exponential integral E_n(a, r) = ∫₁^∞ e^{−rt} t^{−a} dt.
///
/// Evaluated through E_n(a, r) = r^{a−1}·Γ(1−a, r). Requires r > 0 (the
/// integral diverges for r < 0, and for r = 0 unless a > 1, in which case it
/// equals 1/(a−1)).
pub fn exp_integral_en<R: Real>(a: R, r: R, opts: &EvalOptions) -> Result<R> {
    if r < R::zero() {
        return Err(Error::Domain(format!(
            "exp_integral_en diverges for r < 0 (a = {}, r = {})",
            a.as_f64(),
            r.as_f64()
        )));
    }
    if r == R::zero() {
        if a > R::one() {
            return Ok(R::one() / (a - R::one()));
        }
        return Err(Error::Domain(
            "exp_integral_en(a <= 1, 0) diverges".into(),
        ));
    }
    let g = upper_incomplete_gamma(R::one() - a, r, opts)?;
    Ok(((a - R::one()) * r.ln()).exp() * g)
}

/// Error function, odd, with erf(±∞) = ±1.
///
/// Uses erf(x) = sign(x)·P(1/2, x²); relative error is at machine level.
pub fn erf<R: Real>(x: R) -> R {
    if x == R::zero() {
        return R::zero();
    }
    let opts = EvalOptions::default();
    let p = regularized_lower(c::<R>(0.5), x * x, &opts).unwrap_or_else(|_| R::one());
    if x > R::zero() {
        p
    } else {
        -p
    }
}

/// Complementary error function erfc(x) = 1 − erf(x).
pub fn erfc<R: Real>(x: R) -> R {
    let opts = EvalOptions::default();
    if x <= R::zero() {
        return c::<R>(2.0) - erfc(-x);
    }
    let xx = x * x;
    if xx < c::<R>(1.5) {
        R::one() - erf(x)
    } else {
        gamma_q_cf(c::<R>(0.5), xx, &opts).unwrap_or_else(|_| R::zero())
    }
}

/// Inverse error function on (-1, 1), by bisection-seeded Newton.
pub(crate) fn erf_inv<R: Real>(y: R) -> Result<R> {
    if !(y > -R::one() && y < R::one()) {
        return Err(Error::Domain(format!(
            "erf_inv requires |y| < 1, got {}",
            y.as_f64()
        )));
    }
    if y == R::zero() {
        return Ok(R::zero());
    }
    if y < R::zero() {
        return Ok(-erf_inv(-y)?);
    }
    let two_over_sqrt_pi = c::<R>(2.0 / std::f64::consts::PI.sqrt());
    // Bracket, then Newton.
    let mut lo = R::zero();
    let mut hi = c::<R>(1.0);
    while erf(hi) < y {
        hi *= c::<R>(2.0);
        if hi > c::<R>(40.0) {
            return Err(Error::Domain("erf_inv argument too close to 1".into()));
        }
    }
    for _ in 0..80 {
        let mid = (lo + hi) * c::<R>(0.5);
        if erf(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = (lo + hi) * c::<R>(0.5);
    for _ in 0..8 {
        let f = erf(t) - y;
        let df = two_over_sqrt_pi * (-t * t).exp();
        if df == R::zero() {
            break;
        }
        t = t - f / df;
    }
    Ok(t)
}
