//! End-to-end metrics for the dual-hop AF link.
//!
//! Three evaluation routes coexist:
//!
//! * exact-by-quadrature: the end-to-end SNR density from the inverse-sum
//!   convolution ([`e2e_pdf_exact`]) and the metric integrals over it;
//! * the min-bound route: γ_e2e ≈ min(γ1, γ2) gives the inclusion–exclusion
//!   CDF/PDF ([`e2e_cdf_bound`], [`e2e_pdf_bound`]) with fully analytic
//!   evaluation, plus the closed-form outage approximation
//!   ([`outage_closed_form`]), the general-shape average-SNR/rate
//!   approximations ([`avg_snr_closed`], [`ergodic_rate_closed`]) and the
//!   exact light-fog (k = 2) forms ([`avg_snr_k2`], [`ergodic_rate_k2`]);
//! * the direct-transmission baseline ([`direct_metrics`]).
//!
//! Closed forms that assume equal hops return [`Error::NotSymmetric`] on
//! asymmetric configurations instead of extrapolating; asymmetric links are
//! served by the quadrature and Monte Carlo routes.

use crate::channel::{depth_kernel_integral, snr_cdf, snr_pdf, DomainMode, FogParams, LinkParams};
use crate::quadrature::{integrate, Bound, QuadSpec, Singularity};
use crate::real::c;
use crate::specfun::{gamma_fn, is_integer_shape, EvalOptions};
use crate::{Error, Real, Result};

/// Below this |m| = |z_r − ρ²| the closed forms divide by an effectively
/// singular parameter and refuse to evaluate; callers fall back to
/// quadrature, where the distribution itself is perfectly regular.
pub const EPS_M: f64 = 1e-6;

/// Two-hop configuration.
#[derive(Debug, Clone, Copy)]
pub struct RelayConfig<R> {
    pub hop1: LinkParams<R>,
    pub hop2: LinkParams<R>,
    /// True when both hops share identical derived constants.
    pub symmetric: bool,
}

impl<R: Real> RelayConfig<R> {
    pub fn new(hop1: LinkParams<R>, hop2: LinkParams<R>) -> Self {
        let symmetric = hop1 == hop2;
        Self {
            hop1,
            hop2,
            symmetric,
        }
    }

    /// Relay at the midpoint: both hops identical.
    pub fn symmetric(hop: LinkParams<R>) -> Self {
        Self {
            hop1: hop,
            hop2: hop,
            symmetric: true,
        }
    }

    /// Total source–destination distance in km.
    pub fn total_distance(&self) -> R {
        self.hop1.d_km + self.hop2.d_km
    }

    /// Upper edge of the min-bound support: min of the hop caps.
    pub fn min_cap(&self) -> R {
        self.hop1.support_cap().min(self.hop2.support_cap())
    }

    /// Upper edge of the half-harmonic-mean support,
    /// (1/cap1 + 1/cap2)^{-1}.
    pub fn harmonic_cap(&self) -> R {
        let c1 = self.hop1.support_cap();
        let c2 = self.hop2.support_cap();
        c1 * c2 / (c1 + c2)
    }
}

/// Which end-to-end model an outage/metric integral uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutageMode {
    /// min(γ1, γ2) bound (inclusion–exclusion CDF).
    Bound,
    /// Half-harmonic-mean density via the convolution integral.
    Harmonic,
}

/// Evaluation route of a [`MetricReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

/// One route's outage / average SNR / ergodic rate triple.
#[derive(Debug, Clone, Copy)]
pub struct MetricReport<R> {
    pub method: Method,
    pub outage: R,
    pub avg_snr: R,
    /// Bits per channel use.
    pub ergodic_rate: R,
    pub outage_uncertainty: R,
    pub avg_snr_uncertainty: R,
    pub rate_uncertainty: R,
    /// Set when the rate value is a lower bound that went negative.
    pub bound_invalid: bool,
}

impl<R: Real> MetricReport<R> {
    pub fn avg_snr_db(&self) -> R {
        c::<R>(10.0) * self.avg_snr.log10()
    }
}

/// Quadrature tolerances for the metric integrals.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<R> {
    pub rel_tol: R,
    pub abs_tol: R,
    pub max_subdivisions: usize,
}

impl<R: Real> Default for Tolerances<R> {
    fn default() -> Self {
        Self {
            rel_tol: c(1e-9),
            abs_tol: c(1e-12),
            max_subdivisions: 2000,
        }
    }
}

impl<R: Real> Tolerances<R> {
    fn inner_rel(&self) -> R {
        (self.rel_tol * c(0.1)).max(c(1e-12))
    }
}

/// base^exp, extended to negative bases for integer exponents.
fn signed_powf<R: Real>(base: R, exp: R) -> Result<R> {
    if base >= R::zero() {
        return Ok(base.powf(exp));
    }
    match is_integer_shape(exp.abs()) {
        Some(n) if n <= i32::MAX as u32 => {
            let n = if exp < R::zero() { -(n as i32) } else { n as i32 };
            Ok(base.powi(n))
        }
        _ => Err(Error::ClosedFormInvalid(format!(
            "({})^({}) is not real; the closed form needs an integer fog shape when z < rho^2",
            base.as_f64(),
            exp.as_f64()
        ))),
    }
}

fn require_symmetric<R: Real>(cfg: &RelayConfig<R>) -> Result<&LinkParams<R>> {
    if !cfg.symmetric {
        return Err(Error::NotSymmetric);
    }
    Ok(&cfg.hop1)
}

fn check_m<R: Real>(m: R) -> Result<()> {
    if m.abs() < c(EPS_M) {
        return Err(Error::SingularParameter {
            name: "m = z_r - rho^2",
            value: m.as_f64(),
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Min-bound route: analytic CDF/PDF
// ---------------------------------------------------------------------------

/// Inclusion–exclusion combination F1 + F2 − F1·F2.
pub fn bound_cdf_combine<R: Real>(f1: R, f2: R) -> R {
    f1 + f2 - f1 * f2
}

/// CDF of min(γ1, γ2) at `gamma`.
pub fn e2e_cdf_bound<R: Real>(gamma: R, cfg: &RelayConfig<R>, mode: DomainMode) -> Result<R> {
    let f1 = snr_cdf(gamma, &cfg.hop1, mode)?;
    let f2 = snr_cdf(gamma, &cfg.hop2, mode)?;
    Ok(bound_cdf_combine(f1, f2))
}

/// Density of min(γ1, γ2) at `gamma`: f1 + f2 − f1·F2 − f2·F1.
pub fn e2e_pdf_bound<R: Real>(gamma: R, cfg: &RelayConfig<R>, mode: DomainMode) -> Result<R> {
    let f1 = snr_pdf(gamma, &cfg.hop1, mode)?;
    let f2 = snr_pdf(gamma, &cfg.hop2, mode)?;
    let cf1 = snr_cdf(gamma, &cfg.hop1, mode)?;
    let cf2 = snr_cdf(gamma, &cfg.hop2, mode)?;
    Ok(f1 + f2 - f1 * cf2 - f2 * cf1)
}

// ---------------------------------------------------------------------------
// Exact route: half-harmonic-mean density by convolution
// ---------------------------------------------------------------------------

/// Density of γ1γ2/(γ1+γ2) at `gamma`:
///
/// f(γ) = γ·∫_{t_min}^{t_max} f1(γ/t)·f2(γ/(1−t)) / (t²(1−t)²) dt,
///
/// where the limits come from the per-hop support caps: t_min = γ/cap1 and
/// t_max = 1 − γ/cap2. Both endpoints are integrand support edges and get
/// graded treatment.
pub fn e2e_pdf_exact<R: Real>(gamma: R, cfg: &RelayConfig<R>, tol: &Tolerances<R>) -> Result<R> {
    match e2e_pdf_exact_opt(gamma, cfg, tol)? {
        Some(v) => Ok(v),
        None => Err(Error::Domain(format!(
            "e2e_pdf_exact: gamma = {} has empty convolution range (outside support)",
            gamma.as_f64()
        ))),
    }
}

/// Tolerant variant used inside metric integrals: zero outside support.
///
/// The convolution range (t_min, t_max) has support-edge structure at both
/// ends on the scale of t_min and 1 − t_max. For small γ that scale drops
/// below the f64 ulp at 1, so the upper half is integrated in its own
/// variable v = 1 − t, where the edge sits at a small representable number;
/// the two halves meet at the range midpoint.
fn e2e_pdf_exact_opt<R: Real>(
    gamma: R,
    cfg: &RelayConfig<R>,
    tol: &Tolerances<R>,
) -> Result<Option<R>> {
    if !(gamma > R::zero()) {
        return Ok(None);
    }
    let t_min = gamma / cfg.hop1.support_cap();
    let v_min = gamma / cfg.hop2.support_cap();
    // t_max = 1 − v_min; nonempty range means t_min + v_min < 1.
    if !(t_min + v_min < R::one()) {
        return Ok(None);
    }
    let half = c::<R>(0.5);
    // Upper limits of the two half-ranges; in exact arithmetic
    // t_hi = (t_min + t_max)/2 and v_hi = 1 − t_hi.
    let t_hi = (t_min + R::one() - v_min) * half;
    let v_hi = (v_min + R::one() - t_min) * half;

    let hop1 = cfg.hop1;
    let hop2 = cfg.hop2;
    let lower_half = move |t: R| {
        let f1 = snr_pdf(gamma / t, &hop1, DomainMode::Tolerant).unwrap_or_else(|_| R::nan());
        if f1 == R::zero() {
            return R::zero();
        }
        let one_m_t = R::one() - t;
        let f2 =
            snr_pdf(gamma / one_m_t, &hop2, DomainMode::Tolerant).unwrap_or_else(|_| R::nan());
        let tt = t * one_m_t;
        f1 * f2 / (tt * tt)
    };
    let upper_half = move |v: R| {
        let f2 = snr_pdf(gamma / v, &hop2, DomainMode::Tolerant).unwrap_or_else(|_| R::nan());
        if f2 == R::zero() {
            return R::zero();
        }
        let one_m_v = R::one() - v;
        let f1 =
            snr_pdf(gamma / one_m_v, &hop1, DomainMode::Tolerant).unwrap_or_else(|_| R::nan());
        let vv = v * one_m_v;
        f1 * f2 / (vv * vv)
    };

    let mut total = R::zero();
    for (lo, hi, fun) in [
        (t_min, t_hi, &lower_half as &dyn Fn(R) -> R),
        (v_min, v_hi, &upper_half as &dyn Fn(R) -> R),
    ] {
        if !(lo < hi) {
            continue;
        }
        let spec = QuadSpec::new(lo, Bound::Finite(hi))?
            .with_tol(tol.inner_rel(), c(1e-290))
            .with_max_subdivisions(tol.max_subdivisions)
            .with_singularity(Singularity::Lower);
        total += integrate(fun, &spec)?.value;
    }
    Ok(Some(gamma * total))
}

// ---------------------------------------------------------------------------
// Outage
// ---------------------------------------------------------------------------

/// Outage probability P(γ_e2e < γ_th) by numerical integration of the
/// selected end-to-end density.
pub fn outage_exact<R: Real>(
    gamma_th: R,
    cfg: &RelayConfig<R>,
    mode: OutageMode,
    tol: &Tolerances<R>,
) -> Result<R> {
    if !(gamma_th > R::zero()) {
        return Err(Error::Domain("gamma_th must be positive".into()));
    }
    let cap = match mode {
        OutageMode::Bound => cfg.min_cap(),
        OutageMode::Harmonic => cfg.harmonic_cap(),
    };
    if gamma_th >= cap {
        return Ok(R::one());
    }
    let spec = QuadSpec::new(R::zero(), Bound::Finite(gamma_th))?
        .with_tol(tol.rel_tol, tol.abs_tol)
        .with_max_subdivisions(tol.max_subdivisions)
        .with_singularity(Singularity::Lower);
    let value = match mode {
        OutageMode::Bound => {
            integrate(
                |g: R| e2e_pdf_bound(g, cfg, DomainMode::Tolerant).unwrap_or_else(|_| R::nan()),
                &spec,
            )?
            .value
        }
        OutageMode::Harmonic => {
            let inner = Tolerances {
                rel_tol: tol.inner_rel(),
                ..*tol
            };
            integrate(
                |g: R| match e2e_pdf_exact_opt(g, cfg, &inner) {
                    Ok(Some(v)) => v,
                    Ok(None) => R::zero(),
                    Err(_) => R::nan(),
                },
                &spec,
            )?
            .value
        }
    };
    Ok(value.max(R::zero()).min(R::one()))
}

/// Closed-form outage approximation for the symmetric relay:
/// P_out = 2·P' − P'², with P' the four-term expansion of the single-hop
/// CDF at γ_th under the tail approximation Γ(k, m·ln u) ≈ u^{−m}(m·ln u)^{k−1}.
///
/// Accuracy degrades when |m|·ln u is small (it is an asymptotic tail form);
/// validated against the quadrature oracle in the acceptance suite.
pub fn outage_closed_form<R: Real>(gamma_th: R, cfg: &RelayConfig<R>) -> Result<R> {
    let hop = require_symmetric(cfg)?;
    let cap = hop.support_cap();
    if !(gamma_th > R::zero() && gamma_th < cap) {
        return Err(Error::Domain(format!(
            "outage_closed_form: gamma_th = {} outside (0, {})",
            gamma_th.as_f64(),
            cap.as_f64()
        )));
    }
    check_m(hop.m)?;
    let k = hop.fog_k;
    let z = hop.z;
    let l = c::<R>(0.5) * (cap / gamma_th).ln(); // ln u at the threshold
    let zl = z * l;
    let gamma_k = gamma_fn(k)?;
    let u_rho = (-hop.rho2 * l).exp();
    let u_z = (-zl).exp();

    let t1 = signed_powf(z / hop.m, k)? * u_rho;
    let t2 = -(k * z.ln()).exp() / (gamma_k * hop.m) * ((k - R::one()) * l.ln()).exp() * u_z;
    let t3 = ((k - R::one()) * zl.ln()).exp() * u_z / gamma_k;
    let t4 = (k - R::one()) * ((k - c(2.0)) * zl.ln()).exp() * u_z / gamma_k;

    let p_hop = t1 + t2 + t3 + t4;
    let p_out = c::<R>(2.0) * p_hop - p_hop * p_hop;
    Ok(p_out.max(R::zero()).min(R::one()))
}

/// High-SNR diversity order of the symmetric relay link, z_r/2 = 2.1715/(β·d_r).
pub fn diversity_order<R: Real>(fog: &FogParams<R>, d_r_km: R) -> R {
    c::<R>(2.1715) / (fog.beta * d_r_km)
}

// ---------------------------------------------------------------------------
// Average SNR and ergodic rate: closed forms
// ---------------------------------------------------------------------------

/// General-shape closed-form approximation of the min-bound average SNR.
///
/// Transcribed term-for-term from the published expression. Its derivation
/// leans on the same incomplete-gamma tail approximation as
/// [`outage_closed_form`] but applies it inside integrals whose mass sits at
/// small arguments, where the approximation does not hold; see the k = 2
/// exact form [`avg_snr_k2`] for the validated route. Kept for
/// completeness and exposed so the validation suite can measure the gap.
pub fn avg_snr_closed<R: Real>(cfg: &RelayConfig<R>) -> Result<R> {
    let hop = require_symmetric(cfg)?;
    check_m(hop.m)?;
    let k = hop.fog_k;
    if k <= c(0.5) {
        return Err(Error::Domain(
            "avg_snr_closed requires k > 1/2 (Gamma(k - 1/2) pole)".into(),
        ));
    }
    let (z, r2, m) = (hop.z, hop.rho2, hop.m);
    let one = R::one();
    let two = c::<R>(2.0);
    let a0sq = hop.a0 * hop.a0;
    let sqrt_pi = c::<R>(std::f64::consts::PI.sqrt());

    let atom1 = signed_powf((two + m + two * r2) / m, -k)?;
    let piece_a = (one - two * atom1) * z.powf(k) / (one + r2);

    let atom2 = signed_powf((two + m + r2) / m, -k)?;
    let atom3 = ((two + r2 + z) / z).powf(one - k);
    let piece_b = signed_powf(m, k)?
        * (-two * z.powf(k - one) * (two + r2 + z).powf(-k)
            + (-two - c::<R>(3.0) * r2 + two * (one + r2) * atom2 + two * (one + r2) * atom3)
                / (two + c::<R>(3.0) * r2 + r2 * r2));

    let piece_c = z.powf(k - two)
        * (one + z).powf(one - two * k)
        * (m + two * m * z - z * z)
        * gamma_fn(k - c(0.5))?
        / (m * m * sqrt_pi * gamma_fn(k)?);

    let bracket = signed_powf(m, -two * k)? * (piece_a + piece_b) + piece_c;
    Ok(a0sq * r2 * z.powf(k) * hop.gamma0 * bracket)
}

/// General-shape closed-form ergodic-rate lower bound, bits per channel use.
///
/// Same provenance and caveats as [`avg_snr_closed`]. The boolean is true
/// when the bound came out negative (reported as-is, not clamped).
pub fn ergodic_rate_closed<R: Real>(cfg: &RelayConfig<R>) -> Result<(R, bool)> {
    let hop = require_symmetric(cfg)?;
    check_m(hop.m)?;
    let k = hop.fog_k;
    if k <= c(0.5) {
        return Err(Error::Domain(
            "ergodic_rate_closed requires k > 1/2".into(),
        ));
    }
    let (z, r2, m) = (hop.z, hop.rho2, hop.m);
    let one = R::one();
    let two = c::<R>(2.0);
    let r4 = r2 * r2;
    let ln_a0 = hop.a0.ln();
    let ln_g0 = hop.gamma0.ln();
    let sqrt_pi = c::<R>(std::f64::consts::PI.sqrt());
    let gamma_k = gamma_fn(k)?;

    let t1 = two * (-one + r2 * ln_a0) / r4;
    let t2 = two * z.powf(k - one) * (r2 + z).powf(-one - k) * (k - (r2 + z) * ln_a0);
    let t3 = two / r4
        * (-one
            + r2 * ln_a0
            + signed_powf((m + r2) / m, -one - k)?
                * (m + (one + k) * r2 - r2 * (m + r2) * ln_a0)
                / m);
    let t4 = z.powf(k) * signed_powf(m, -k)? / r4
        * (-one
            + two * r2 * ln_a0
            + signed_powf(one + two * r2 / m, -k)?
                * (m + two * (one + k) * r2 - two * r2 * (m + two * r2) * ln_a0)
                / (m + two * r2));
    let t5 = two / r4
        * (one - r2 * ln_a0
            + ((z + r2) / z).powf(-k) * (-z - k * r2 + r2 * (z + r2) * ln_a0) / z);
    let t6 = ln_g0 / r2;
    let t7 = (-one + signed_powf((m + r2) / m, -k)?) * ln_g0 / r2;
    let t8 = (one - signed_powf(one + two * r2 / m, -k)?) * z.powf(k) * signed_powf(m, -k)?
        * ln_g0
        / r2;
    let t9 = z.powf(k - one) * (r2 + z).powf(-k) * ln_g0;
    let t10 = (one - ((z + r2) / z).powf(one - k)) * ln_g0 / r2;

    let group = two * signed_powf(m, -k)? * r2 * z.powf(k)
        * (t1 + t2 - t3 + t4 + t5 + t6 + t7 + t8 - t9 - t10);

    let u1 = signed_powf(m, -two * k)? * z.powf(two * k)
        * (-one + r2 * (two * ln_a0 + ln_g0))
        / (r2 * gamma_k);
    let u2 = r2 * gamma_fn(k - c(0.5))?
        * ((c::<R>(-3.0) + c::<R>(4.0) * k) * m + z - two * k * z
            + z * (-two * m + z) * (two * ln_a0 + ln_g0))
        / (m * m * sqrt_pi * z * gamma_k);

    let rate = (group - u1 - u2) / c::<R>(std::f64::consts::LN_2);
    Ok((rate, rate < R::zero()))
}

/// Exact min-bound average SNR for light fog, k = 2.
pub fn avg_snr_k2<R: Real>(cfg: &RelayConfig<R>) -> Result<R> {
    let hop = require_symmetric(cfg)?;
    require_k2(hop)?;
    let (z, r2) = (hop.z, hop.rho2);
    let one = R::one();
    let two = c::<R>(2.0);
    let a0sq = hop.a0 * hop.a0;

    let first = one / ((two + r2) * (two + z) * (two + z));
    let zp1 = one + z;
    let zp1_3 = zp1 * zp1 * zp1;
    let num = two * zp1_3
        + r2 * r2 * (one + two * z)
        + r2 * (c::<R>(3.0) + c::<R>(4.0) * z * (two + z));
    let den = c::<R>(4.0) * (one + r2) * zp1_3 * (two + r2 + z) * (two + r2 + z);
    Ok(two * a0sq * r2 * z * z * hop.gamma0 * (first - num / den))
}

/// Ergodic-rate lower bound for k = 2, bits per channel use.
/// Boolean flags a negative (invalid) bound.
pub fn ergodic_rate_k2<R: Real>(cfg: &RelayConfig<R>) -> Result<(R, bool)> {
    let hop = require_symmetric(cfg)?;
    require_k2(hop)?;
    let (z, r2) = (hop.z, hop.rho2);
    let two = c::<R>(2.0);
    let ln_a0 = hop.a0.ln();
    let ln_g0 = hop.gamma0.ln();

    let group_a = (r2 * z * (two * ln_a0 + ln_g0) - two * (two * r2 + z))
        / (r2 * z * c::<R>(std::f64::consts::LN_2));
    let rz = r2 + z;
    let group_b = r2 / (rz * rz) - two / r2 - c::<R>(5.0) / z - c::<R>(3.0) / rz
        + c::<R>(4.0) * ln_a0
        + two * ln_g0;
    let rate = two * (group_a - c::<R>(0.36) * group_b);
    Ok((rate, rate < R::zero()))
}

fn require_k2<R: Real>(hop: &LinkParams<R>) -> Result<()> {
    if (hop.fog_k - c(2.0)).abs() > c(1e-9) {
        return Err(Error::Domain(format!(
            "light-fog closed form requires k = 2, got k = {}",
            hop.fog_k.as_f64()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Average SNR and ergodic rate: quadrature
// ---------------------------------------------------------------------------

/// Average end-to-end SNR by integrating γ against the selected density.
pub fn avg_snr_quad<R: Real>(
    cfg: &RelayConfig<R>,
    mode: OutageMode,
    tol: &Tolerances<R>,
) -> Result<R> {
    metric_quad(cfg, mode, tol, |g: R| g)
}

/// Ergodic rate E[log2(1+γ)] by integrating against the selected density.
pub fn rate_quad<R: Real>(
    cfg: &RelayConfig<R>,
    mode: OutageMode,
    tol: &Tolerances<R>,
) -> Result<R> {
    metric_quad(cfg, mode, tol, |g: R| (R::one() + g).log2())
}

fn metric_quad<R: Real>(
    cfg: &RelayConfig<R>,
    mode: OutageMode,
    tol: &Tolerances<R>,
    weight: impl Fn(R) -> R + Copy,
) -> Result<R> {
    let cap = match mode {
        OutageMode::Bound => cfg.min_cap(),
        OutageMode::Harmonic => cfg.harmonic_cap(),
    };
    let spec = QuadSpec::new(R::zero(), Bound::Finite(cap))?
        .with_tol(tol.rel_tol, tol.abs_tol)
        .with_max_subdivisions(tol.max_subdivisions)
        .with_singularity(Singularity::Lower);
    let value = match mode {
        OutageMode::Bound => {
            integrate(
                |g: R| {
                    weight(g)
                        * e2e_pdf_bound(g, cfg, DomainMode::Tolerant).unwrap_or_else(|_| R::nan())
                },
                &spec,
            )?
            .value
        }
        OutageMode::Harmonic => {
            let inner = Tolerances {
                rel_tol: tol.inner_rel(),
                ..*tol
            };
            integrate(
                |g: R| match e2e_pdf_exact_opt(g, cfg, &inner) {
                    Ok(Some(v)) => weight(g) * v,
                    Ok(None) => R::zero(),
                    Err(_) => R::nan(),
                },
                &spec,
            )?
            .value
        }
    };
    Ok(value)
}

// ---------------------------------------------------------------------------
// Direct-transmission baseline
// ---------------------------------------------------------------------------

/// Exact average SNR of the direct link for k = 2:
/// z²·A0²·ρ²·γ0 / ((2+ρ²)(2+z)²).
pub fn direct_avg_snr_closed<R: Real>(link: &LinkParams<R>) -> Result<R> {
    require_k2(link)?;
    let (z, r2) = (link.z, link.rho2);
    let two = c::<R>(2.0);
    Ok(z * z * link.a0 * link.a0 * r2 * link.gamma0 / ((two + r2) * (two + z) * (two + z)))
}

/// Ergodic-rate lower bound of the direct link for k = 2 (half the leading
/// relay-rate term evaluated at the full-link exponent).
pub fn direct_rate_closed<R: Real>(link: &LinkParams<R>) -> Result<(R, bool)> {
    require_k2(link)?;
    let (z, r2) = (link.z, link.rho2);
    let two = c::<R>(2.0);
    let rate = (r2 * z * (two * link.a0.ln() + link.gamma0.ln()) - two * (two * r2 + z))
        / (r2 * z * c::<R>(std::f64::consts::LN_2));
    Ok((rate, rate < R::zero()))
}

/// Direct-link average SNR by quadrature (any k).
pub fn direct_avg_snr_quad<R: Real>(link: &LinkParams<R>, tol: &Tolerances<R>) -> Result<R> {
    direct_metric_quad(link, tol, |g: R| g)
}

/// Direct-link ergodic rate by quadrature (any k).
pub fn direct_rate_quad<R: Real>(link: &LinkParams<R>, tol: &Tolerances<R>) -> Result<R> {
    direct_metric_quad(link, tol, |g: R| (R::one() + g).log2())
}

fn direct_metric_quad<R: Real>(
    link: &LinkParams<R>,
    tol: &Tolerances<R>,
    weight: impl Fn(R) -> R + Copy,
) -> Result<R> {
    let spec = QuadSpec::new(R::zero(), Bound::Finite(link.support_cap()))?
        .with_tol(tol.rel_tol, tol.abs_tol)
        .with_max_subdivisions(tol.max_subdivisions)
        .with_singularity(Singularity::Lower);
    Ok(integrate(
        |g: R| weight(g) * snr_pdf(g, link, DomainMode::Tolerant).unwrap_or_else(|_| R::nan()),
        &spec,
    )?
    .value)
}

/// Baseline numbers for relay-vs-direct comparisons. Outage comes from the
/// single-hop CDF; average SNR and rate use the k = 2 closed forms when
/// applicable and fall back to quadrature otherwise.
pub fn direct_metrics<R: Real>(
    link: &LinkParams<R>,
    gamma_th: R,
    tol: &Tolerances<R>,
) -> Result<MetricReport<R>> {
    let outage = snr_cdf(gamma_th, link, DomainMode::Tolerant)?;
    let (avg_snr, ergodic_rate, bound_invalid) = if is_k2(link) {
        let (rate, invalid) = direct_rate_closed(link)?;
        (direct_avg_snr_closed(link)?, rate, invalid)
    } else {
        (
            direct_avg_snr_quad(link, tol)?,
            direct_rate_quad(link, tol)?,
            false,
        )
    };
    Ok(MetricReport {
        method: Method::ClosedForm,
        outage,
        avg_snr,
        ergodic_rate,
        outage_uncertainty: R::zero(),
        avg_snr_uncertainty: R::zero(),
        rate_uncertainty: R::zero(),
        bound_invalid,
    })
}

fn is_k2<R: Real>(link: &LinkParams<R>) -> bool {
    (link.fog_k - c(2.0)).abs() <= c(1e-9)
}

/// The depth-kernel form of the single-hop density bracket, re-exported for
/// validation code that wants to integrate custom weights.
pub fn hop_density_kernel<R: Real>(k: R, m: R, l: R, shift: R) -> Result<R> {
    depth_kernel_integral(k, m, l, shift, &EvalOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{make_link, SystemParams};
    use crate::geometry::{pointing_params, PointingGeometry, WzeqConvention};

    fn geom() -> PointingGeometry<f64> {
        PointingGeometry::new(0.1, 0.005, 650e-9, 0.28, 2.5, 1000.0, WzeqConvention::Paper)
            .unwrap()
    }

    fn hop(d_km: f64, pt_dbm: f64) -> LinkParams<f64> {
        let fog = FogParams::new(2.0, 13.12).unwrap();
        let sys = SystemParams::new(pt_dbm, 0.41, 1e-14).unwrap();
        let pp = pointing_params(d_km * 1000.0, &geom()).unwrap();
        make_link(d_km, &fog, &pp, &sys).unwrap()
    }

    fn symmetric_cfg(d_total_km: f64, pt_dbm: f64) -> RelayConfig<f64> {
        RelayConfig::symmetric(hop(d_total_km / 2.0, pt_dbm))
    }

    fn gamma_th_6db() -> f64 {
        10f64.powf(0.6)
    }

    #[test]
    fn inclusion_exclusion_half_half() {
        assert_eq!(bound_cdf_combine(0.5, 0.5), 0.75);
        assert_eq!(bound_cdf_combine(0.0, 0.3), 0.3);
        assert_eq!(bound_cdf_combine(1.0, 0.3), 1.0);
    }

    #[test]
    fn symmetric_reduction_matches_general_formula() {
        let cfg = symmetric_cfg(1.0, 15.0);
        let cap = cfg.min_cap();
        for i in 1..=20 {
            let g = cap * (i as f64 / 21.0).powi(2);
            let f1 = snr_cdf(g, &cfg.hop1, DomainMode::Strict).unwrap();
            let reduced = 2.0 * f1 - f1 * f1;
            let general = e2e_cdf_bound(g, &cfg, DomainMode::Strict).unwrap();
            assert!((reduced - general).abs() < 1e-14);
            let d1 = snr_pdf(g, &cfg.hop1, DomainMode::Strict).unwrap();
            let reduced_pdf = 2.0 * d1 * (1.0 - f1);
            let general_pdf = e2e_pdf_bound(g, &cfg, DomainMode::Strict).unwrap();
            // Tolerance relative to the uncancelled scale 2·f1: the two
            // groupings differ by rounding where 1 − F1 is tiny.
            assert!((reduced_pdf - general_pdf).abs() <= 1e-12 * (2.0 * d1).abs());
        }
    }

    #[test]
    fn bound_pdf_normalizes() {
        let cfg = symmetric_cfg(1.0, 15.0);
        let spec = QuadSpec::new(0.0, Bound::Finite(cfg.min_cap()))
            .unwrap()
            .with_tol(1e-10, 1e-14)
            .with_singularity(Singularity::Lower);
        let total = integrate(
            |g: f64| e2e_pdf_bound(g, &cfg, DomainMode::Tolerant).unwrap(),
            &spec,
        )
        .unwrap()
        .value;
        assert!((total - 1.0).abs() < 1e-6, "mass {total}");
    }

    #[test]
    fn exact_pdf_normalizes_and_is_symmetric_in_t() {
        let cfg = symmetric_cfg(1.0, 15.0);
        let tol = Tolerances::default();
        // Normalization over the harmonic support.
        let spec = QuadSpec::new(0.0, Bound::Finite(cfg.harmonic_cap()))
            .unwrap()
            .with_tol(1e-7, 1e-12)
            .with_singularity(Singularity::Lower);
        let inner = Tolerances {
            rel_tol: 1e-9,
            ..tol
        };
        let total = integrate(
            |g: f64| match e2e_pdf_exact_opt(g, &cfg, &inner).unwrap() {
                Some(v) => v,
                None => 0.0,
            },
            &spec,
        )
        .unwrap()
        .value;
        assert!((total - 1.0).abs() < 1e-5, "mass {total}");

        // Symmetric configuration: integrating over (t_min, 1/2) and
        // doubling reproduces the full convolution.
        let gamma = 0.01 * cfg.harmonic_cap();
        let t_min = gamma / cfg.hop1.support_cap();
        let integrand = |t: f64| {
            let f1 = snr_pdf(gamma / t, &cfg.hop1, DomainMode::Tolerant).unwrap();
            let f2 = snr_pdf(gamma / (1.0 - t), &cfg.hop2, DomainMode::Tolerant).unwrap();
            f1 * f2 / (t * t * (1.0 - t) * (1.0 - t))
        };
        let half_spec = QuadSpec::new(t_min, Bound::Finite(0.5))
            .unwrap()
            .with_tol(1e-11, 1e-290)
            .with_singularity(Singularity::Lower);
        let half = integrate(integrand, &half_spec).unwrap().value;
        let full = e2e_pdf_exact(gamma, &cfg, &tol).unwrap();
        assert!(
            (2.0 * gamma * half - full).abs() <= 1e-9 * full.abs(),
            "half-doubling {} vs {}",
            2.0 * gamma * half,
            full
        );
    }

    #[test]
    fn harmonic_mean_below_min_bound() {
        let cfg = symmetric_cfg(1.0, 15.0);
        let tol = Tolerances {
            rel_tol: 1e-7,
            ..Tolerances::default()
        };
        let e_harm = avg_snr_quad(&cfg, OutageMode::Harmonic, &tol).unwrap();
        let e_min = avg_snr_quad(&cfg, OutageMode::Bound, &tol).unwrap();
        assert!(
            e_harm <= e_min,
            "E[harmonic] = {e_harm} must not exceed E[min] = {e_min}"
        );
        assert!(e_harm > 0.4 * e_min);
    }

    #[test]
    fn outage_bound_integral_matches_cdf() {
        let cfg = symmetric_cfg(1.0, 15.0);
        let tol = Tolerances::default();
        let th = gamma_th_6db();
        let by_pdf = outage_exact(th, &cfg, OutageMode::Bound, &tol).unwrap();
        let by_cdf = e2e_cdf_bound(th, &cfg, DomainMode::Strict).unwrap();
        assert!(
            (by_pdf - by_cdf).abs() <= 1e-7 * by_cdf.abs(),
            "{by_pdf} vs {by_cdf}"
        );
    }

    #[test]
    fn harmonic_outage_dominates_bound_outage() {
        let cfg = symmetric_cfg(1.0, 15.0);
        let tol = Tolerances {
            rel_tol: 1e-7,
            ..Tolerances::default()
        };
        for &th_db in &[0.0, 6.0, 12.0] {
            let th = 10f64.powf(th_db / 10.0);
            let harm = outage_exact(th, &cfg, OutageMode::Harmonic, &tol).unwrap();
            let bound = outage_exact(th, &cfg, OutageMode::Bound, &tol).unwrap();
            assert!(
                harm >= bound - 1e-9,
                "th_db={th_db}: harmonic {harm} < bound {bound}"
            );
        }
    }

    #[test]
    fn closed_form_outage_fixed_points() {
        let cfg = symmetric_cfg(1.0, 15.0);
        // Vanishing threshold drives the outage to zero.
        let tiny = cfg.hop1.support_cap() * 1e-40;
        let p = outage_closed_form(tiny, &cfg).unwrap();
        assert!(p < 1e-6, "outage at vanishing threshold: {p}");
        // The two-branch combination maps p' = 1 to 1 and stays in [0, 1].
        let p1 = 1.0f64;
        assert_eq!(2.0 * p1 - p1 * p1, 1.0);
        let th = gamma_th_6db();
        let p = outage_closed_form(th, &cfg).unwrap();
        assert!((0.0..=1.0).contains(&p));
        // Frozen spot value (hand-derived from the four-term expansion).
        assert!((p - 0.1600).abs() < 0.002, "p = {p}");
    }

    #[test]
    fn closed_form_outage_tracks_quadrature_at_long_range() {
        // d = 1.6 km, pt = 15 dBm: |m|·ln u is large and the tail
        // approximation is tight against the bound-mode oracle.
        let cfg = symmetric_cfg(1.6, 15.0);
        let tol = Tolerances::default();
        let th = gamma_th_6db();
        let cf = outage_closed_form(th, &cfg).unwrap();
        let quad = outage_exact(th, &cfg, OutageMode::Bound, &tol).unwrap();
        assert!(
            (cf - quad).abs() <= 0.10 * quad,
            "closed form {cf} vs quadrature {quad}"
        );
    }

    #[test]
    fn asymmetric_configs_rejected_by_closed_forms() {
        let cfg = RelayConfig::new(hop(0.4, 15.0), hop(0.6, 15.0));
        assert!(!cfg.symmetric);
        assert!(matches!(
            outage_closed_form(gamma_th_6db(), &cfg),
            Err(Error::NotSymmetric)
        ));
        assert!(matches!(avg_snr_k2(&cfg), Err(Error::NotSymmetric)));
        // But the bound CDF and harmonic density serve them fine.
        assert!(e2e_cdf_bound(gamma_th_6db(), &cfg, DomainMode::Strict).is_ok());
        assert!(e2e_pdf_exact(1e3, &cfg, &Tolerances::default()).is_ok());
    }

    #[test]
    fn swapping_hops_leaves_bound_metrics_unchanged() {
        let a = hop(0.4, 15.0);
        let b = hop(0.6, 15.0);
        let cfg_ab = RelayConfig::new(a, b);
        let cfg_ba = RelayConfig::new(b, a);
        let th = gamma_th_6db();
        let f_ab = e2e_cdf_bound(th, &cfg_ab, DomainMode::Strict).unwrap();
        let f_ba = e2e_cdf_bound(th, &cfg_ba, DomainMode::Strict).unwrap();
        assert_eq!(f_ab, f_ba);
        let tol = Tolerances::default();
        let s_ab = avg_snr_quad(&cfg_ab, OutageMode::Bound, &tol).unwrap();
        let s_ba = avg_snr_quad(&cfg_ba, OutageMode::Bound, &tol).unwrap();
        assert!((s_ab - s_ba).abs() <= 1e-9 * s_ab.abs());
    }

    #[test]
    fn degenerate_relay_collapses_to_single_hop() {
        // The fog tail decays like (γ0 ratio)^{-z/2} with z/2 ≈ 0.33 here,
        // so F2 forces a ratio near 1e12 before the pointwise gap drops
        // below 1e-3; check monotone approach along the way.
        let h1 = hop(0.5, 15.0);
        let mut prev_worst = f64::INFINITY;
        for &ratio in &[1e3, 1e6, 1e12] {
            let mut h2 = h1;
            h2.gamma0 = h1.gamma0 * ratio;
            let cfg = RelayConfig::new(h1, h2);
            let mut worst: f64 = 0.0;
            for i in 1..=10 {
                let g = h1.support_cap() * (i as f64 / 11.0).powi(2);
                let f1 = snr_cdf(g, &h1, DomainMode::Strict).unwrap();
                let fb = e2e_cdf_bound(g, &cfg, DomainMode::Strict).unwrap();
                worst = worst.max((fb - f1).abs());
            }
            assert!(worst < prev_worst, "gap must shrink with the ratio");
            prev_worst = worst;
        }
        assert!(prev_worst < 1e-3, "gap at ratio 1e12: {prev_worst}");
    }

    #[test]
    fn lemma_matches_bound_quadrature_exactly() {
        let cfg = symmetric_cfg(1.0, 15.0);
        let tol = Tolerances {
            rel_tol: 1e-11,
            abs_tol: 1e-16,
            max_subdivisions: 4000,
        };
        let closed = avg_snr_k2(&cfg).unwrap();
        let quad = avg_snr_quad(&cfg, OutageMode::Bound, &tol).unwrap();
        assert!(
            (closed - quad).abs() <= 1e-6 * quad.abs(),
            "closed {closed} vs quad {quad}"
        );
        // Frozen ballpark from an independent hand evaluation of the
        // closed form: ~2.46e4 at 15 dBm, d = 1 km.
        assert!((closed / 2.459e4 - 1.0).abs() < 0.01, "closed {closed}");
    }

    #[test]
    fn lemma_scales_linearly_in_gamma0() {
        let cfg = symmetric_cfg(1.0, 15.0);
        let mut hop2 = cfg.hop1;
        hop2.gamma0 *= 7.5;
        let cfg2 = RelayConfig::symmetric(hop2);
        let a = avg_snr_k2(&cfg).unwrap();
        let b = avg_snr_k2(&cfg2).unwrap();
        assert!((b / a - 7.5).abs() < 1e-12);
    }

    #[test]
    fn first_lemma_term_is_twice_direct_average() {
        // With d_r = d the leading term equals twice the direct-link
        // average SNR.
        let link = hop(1.0, 15.0);
        let cfg = RelayConfig::symmetric(link);
        let (z, r2) = (link.z, link.rho2);
        let first_term = 2.0 * link.a0 * link.a0 * r2 * z * z * link.gamma0
            / ((2.0 + r2) * (2.0 + z) * (2.0 + z));
        let direct = direct_avg_snr_closed(&cfg.hop1).unwrap();
        assert!((first_term - 2.0 * direct).abs() <= 1e-12 * first_term.abs());
    }

    #[test]
    fn direct_average_matches_quadrature() {
        let link = hop(1.0, 15.0);
        let tol = Tolerances {
            rel_tol: 1e-11,
            abs_tol: 1e-16,
            max_subdivisions: 4000,
        };
        let closed = direct_avg_snr_closed(&link).unwrap();
        let quad = direct_avg_snr_quad(&link, &tol).unwrap();
        assert!(
            (closed - quad).abs() <= 1e-6 * quad.abs(),
            "closed {closed} vs quad {quad}"
        );
    }

    #[test]
    fn relay_beats_direct_average_snr() {
        for &(d, pt) in &[(0.6f64, 10.0), (1.0, 15.0), (1.0, 25.0), (2.0, 30.0)] {
            let cfg = symmetric_cfg(d, pt);
            let relay = avg_snr_k2(&cfg).unwrap();
            let direct = direct_avg_snr_closed(&hop(d, pt)).unwrap();
            assert!(relay > direct, "d={d} pt={pt}: {relay} vs {direct}");
        }
    }

    #[test]
    fn rate_bound_sits_below_quadrature_rate() {
        let cfg = symmetric_cfg(1.0, 15.0);
        let tol = Tolerances::default();
        let (bound, invalid) = ergodic_rate_k2(&cfg).unwrap();
        assert!(!invalid);
        let quad = rate_quad(&cfg, OutageMode::Bound, &tol).unwrap();
        assert!(bound <= quad, "bound {bound} vs quadrature {quad}");
        // And the direct-link rate bound sits below its quadrature too.
        let link = hop(1.0, 15.0);
        let (db, _) = direct_rate_closed(&link).unwrap();
        let dq = direct_rate_quad(&link, &tol).unwrap();
        assert!(db <= dq, "direct bound {db} vs {dq}");
    }

    #[test]
    fn diversity_order_formula() {
        let fog = FogParams::<f64>::new(2.0, 13.12).unwrap();
        let m = diversity_order(&fog, 0.8);
        assert!((m - 2.1715 / (13.12 * 0.8)).abs() < 1e-15);
        assert!((m - 0.2069).abs() < 1e-4);
        let m_half = diversity_order(&fog, 0.4);
        assert!((m_half - 2.0 * m).abs() < 1e-12);
    }

    #[test]
    fn high_power_outage_slope_approaches_diversity() {
        // Fitted log-log slope of the closed-form outage against γ0 at
        // high power; d_r = 0.4 km keeps the asymptotic regime reachable.
        let fog = FogParams::new(2.0, 13.12).unwrap();
        let d_r = 0.4;
        let slope_at = |pt: f64| {
            let cfg = RelayConfig::symmetric(hop(d_r, pt));
            outage_closed_form(gamma_th_6db(), &cfg).unwrap()
        };
        let (p1, p2) = (40.0, 42.0);
        let o1 = slope_at(p1);
        let o2 = slope_at(p2);
        // dB of γ0 per dB of pt is 2 (optical square law).
        let slope = (o2.log10() - o1.log10()) / ((p2 - p1) * 2.0 / 10.0);
        let fitted_diversity = -slope;
        let predicted = diversity_order(&fog, d_r);
        assert!(
            (fitted_diversity - predicted).abs() <= 0.10 * predicted,
            "fitted {fitted_diversity} vs z_r/2 = {predicted}"
        );
    }

    #[test]
    fn singular_m_is_reported() {
        let mut h = hop(0.5, 15.0);
        h.m = 1e-9;
        let cfg = RelayConfig::symmetric(h);
        assert!(matches!(
            avg_snr_closed(&cfg),
            Err(Error::SingularParameter { .. })
        ));
    }

    #[test]
    fn signed_power_rules() {
        assert_eq!(signed_powf(-2.0f64, 2.0).unwrap(), 4.0);
        assert_eq!(signed_powf(-2.0f64, 3.0).unwrap(), -8.0);
        assert!((signed_powf(-2.0f64, -2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(signed_powf(-2.0f64, 1.5).is_err());
        assert!((signed_powf(2.0f64, 1.5).unwrap() - 2.0f64.powf(1.5)).abs() < 1e-15);
    }
}
