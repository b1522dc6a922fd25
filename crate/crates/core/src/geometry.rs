//! Pointing-error parameters from Gaussian-beam optics.
//!
//! Experimental (ρ, A0) pairs are only available at a few link ranges, so
//! other distances are covered by a beam-optics pipeline: beyond the Rayleigh
//! distance π·w0²/λ the beam waist grows linearly, w_z = θ·d, with θ fixed by
//! a reference waist (2.5 m at 1 km by default). From w_z:
//!
//! * υ = √(π/2)·a/w_z            (aperture-to-beam ratio)
//! * A0 = erf(υ)²                (collected power fraction at zero offset)
//! * w_zeq = w_z·erf(υ)/(2υ·e^{−υ²})   — the `Paper` convention, or
//!   w_zeq² = w_z²·√π·erf(υ)/(2υ·e^{−υ²}) — the `Literature` convention
//! * ρ = w_zeq/(2σ_s)            (equivalent beam radius over jitter spread)
//!
//! The two w_zeq conventions genuinely disagree; [`WzeqConvention`] keeps
//! both, defaulting to `Paper`. A direct (ρ, A0) entry path for measured
//! parameters is provided by [`PointingParams::from_rho_a0`].

use crate::real::c;
use crate::specfun::{erf, erf_inv};
use crate::{Error, Real, Result};

/// Which equivalent-beam-radius formula to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WzeqConvention {
    /// w_zeq = w_z·erf(υ)/(2υ·exp(−υ²))
    #[default]
    Paper,
    /// w_zeq² = w_z²·√π·erf(υ)/(2υ·exp(−υ²))
    Literature,
}

/// Transmitter/receiver geometry, all lengths in metres.
#[derive(Debug, Clone, Copy)]
pub struct PointingGeometry<R> {
    /// Receiver aperture radius a.
    pub aperture_radius: R,
    /// Beam waist w0 at the transmitter focal point.
    pub waist_w0: R,
    /// Optical wavelength λ.
    pub wavelength: R,
    /// Jitter displacement deviation σ_s at the receiver, distance-independent.
    pub jitter_sigma: R,
    /// Beam waist at the reference distance (anchors the linear-growth model).
    pub beam_waist_at_ref: R,
    /// Reference distance for `beam_waist_at_ref`.
    pub ref_distance: R,
    /// Equivalent-beam-radius convention.
    pub convention: WzeqConvention,
}

impl<R: Real> PointingGeometry<R> {
    pub fn new(
        aperture_radius: R,
        waist_w0: R,
        wavelength: R,
        jitter_sigma: R,
        beam_waist_at_ref: R,
        ref_distance: R,
        convention: WzeqConvention,
    ) -> Result<Self> {
        let geom = Self {
            aperture_radius,
            waist_w0,
            wavelength,
            jitter_sigma,
            beam_waist_at_ref,
            ref_distance,
            convention,
        };
        for (name, v) in [
            ("aperture_radius", aperture_radius),
            ("waist_w0", waist_w0),
            ("wavelength", wavelength),
            ("jitter_sigma", jitter_sigma),
            ("beam_waist_at_ref", beam_waist_at_ref),
            ("ref_distance", ref_distance),
        ] {
            if !(v > R::zero() && v.is_finite()) {
                return Err(Error::Domain(format!(
                    "PointingGeometry {name} must be strictly positive, got {}",
                    v.as_f64()
                )));
            }
        }
        if geom.ref_distance <= geom.rayleigh_distance() {
            return Err(Error::Domain(format!(
                "ref_distance {} m must exceed the Rayleigh distance {} m",
                ref_distance.as_f64(),
                geom.rayleigh_distance().as_f64()
            )));
        }
        Ok(geom)
    }

    /// Rayleigh distance π·w0²/λ below which the linear waist model is invalid.
    pub fn rayleigh_distance(&self) -> R {
        c::<R>(std::f64::consts::PI) * self.waist_w0 * self.waist_w0 / self.wavelength
    }
}

/// Derived pointing parameters at one link distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointingParams<R> {
    /// Collected power fraction at zero misalignment, erf(υ)².
    pub a0: R,
    /// Equivalent beam radius over twice the jitter deviation.
    pub rho: R,
    /// Beam waist at the receiver.
    pub w_z: R,
    /// Equivalent beam radius.
    pub w_zeq: R,
    /// Aperture-to-beam ratio υ = √(π/2)·a/w_z.
    pub upsilon: R,
}

impl<R: Real> PointingParams<R> {
    /// Build directly from measured (ρ, A0), for ranges where experimental
    /// values exist. The remaining fields are synthesized consistently with
    /// the invariants A0 = erf(υ)² and ρ = w_zeq/(2σ_s) at σ_s = 1.
    pub fn from_rho_a0(rho: R, a0: R) -> Result<Self> {
        if !(rho > R::zero() && rho.is_finite()) {
            return Err(Error::Domain(format!(
                "rho must be positive, got {}",
                rho.as_f64()
            )));
        }
        if !(a0 > R::zero() && a0 < R::one()) {
            return Err(Error::Domain(format!(
                "A0 must lie in (0, 1), got {}",
                a0.as_f64()
            )));
        }
        let upsilon = erf_inv(a0.sqrt())?;
        let w_zeq = c::<R>(2.0) * rho;
        // Invert the paper-convention formula so every stored field obeys it.
        let w_z = w_zeq * c::<R>(2.0) * upsilon * (-upsilon * upsilon).exp() / erf(upsilon);
        Ok(Self {
            a0,
            rho,
            w_z,
            w_zeq,
            upsilon,
        })
    }
}

/// Beam waist w_z = (w_ref/d_ref)·d at distance `d` metres.
///
/// Errors if `d` does not exceed the Rayleigh distance, where the linear
/// growth model does not hold.
pub fn beam_waist<R: Real>(d: R, geom: &PointingGeometry<R>) -> Result<R> {
    let rayleigh = geom.rayleigh_distance();
    if !(d > rayleigh) {
        return Err(Error::Domain(format!(
            "beam_waist requires d > Rayleigh distance ({} m), got {} m",
            rayleigh.as_f64(),
            d.as_f64()
        )));
    }
    Ok(geom.beam_waist_at_ref / geom.ref_distance * d)
}

/// Full pointing-parameter set at distance `d` metres.
pub fn pointing_params<R: Real>(d: R, geom: &PointingGeometry<R>) -> Result<PointingParams<R>> {
    let w_z = beam_waist(d, geom)?;
    let upsilon = c::<R>((std::f64::consts::PI / 2.0).sqrt()) * geom.aperture_radius / w_z;
    let e = erf(upsilon);
    let a0 = e * e;
    let factor = e / (c::<R>(2.0) * upsilon * (-upsilon * upsilon).exp());
    let w_zeq = match geom.convention {
        WzeqConvention::Paper => w_z * factor,
        WzeqConvention::Literature => {
            (w_z * w_z * c::<R>(std::f64::consts::PI.sqrt()) * factor).sqrt()
        }
    };
    let rho = w_zeq / (c::<R>(2.0) * geom.jitter_sigma);
    if !(a0 > R::zero() && a0 < R::one()) {
        return Err(Error::Domain(format!(
            "derived A0 = {} outside (0, 1); geometry inconsistent",
            a0.as_f64()
        )));
    }
    Ok(PointingParams {
        a0,
        rho,
        w_z,
        w_zeq,
        upsilon,
    })
}
