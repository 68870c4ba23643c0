//! Kinematics and the conversions between spatial and referential fields.
//!
//! Conventions: `F[i][K] = ∂x_i/∂X_K`, `J = det F`. Flux-like vectors
//! (heat flux, polarization, electric displacement) pull back with the
//! Piola map `J F⁻¹`, gradient-like covectors (temperature gradient,
//! electric field) with `Fᵀ`. Electric quantities use Gaussian units.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3, SINGULARITY_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    pub f: Mat3,
    pub j: f64,
    /// Right Cauchy–Green tensor `FᵀF`.
    pub c: Mat3,
    /// Green strain `½(C − I)`.
    pub green: Mat3,
}

/// The referential 5-tuple `(F, θ, W, Q, G)` every response function is
/// evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferentialState {
    #[serde(rename = "F")]
    pub f: Mat3,
    pub theta: f64,
    /// Referential electric field `W = FᵀE^M`.
    #[serde(rename = "W")]
    pub w: Vec3,
    /// Referential heat flux `Q = J F⁻¹ q`.
    #[serde(rename = "Q")]
    pub q: Vec3,
    /// Referential temperature gradient `G = Fᵀ g`.
    #[serde(rename = "G")]
    pub g: Vec3,
}

impl ReferentialState {
    pub fn new(f: Mat3, theta: f64, w: Vec3, q: Vec3, g: Vec3) -> Result<Self> {
        let s = ReferentialState { f, theta, w, q, g };
        s.validate()?;
        Ok(s)
    }

    /// Undeformed, field-free state at temperature `theta`.
    pub fn reference(theta: f64) -> Self {
        ReferentialState { f: Mat3::IDENTITY, theta, w: Vec3::ZERO, q: Vec3::ZERO, g: Vec3::ZERO }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) {
            return Err(Error::NonPositiveTemperature(self.theta));
        }
        let det = self.f.det();
        if !(det > SINGULARITY_THRESHOLD) {
            return Err(Error::NonInvertibleF { det });
        }
        Ok(())
    }

    pub fn with_q(mut self, q: Vec3) -> Self {
        self.q = q;
        self
    }

    pub fn with_g(mut self, g: Vec3) -> Self {
        self.g = g;
        self
    }

    /// Same state with the heat flux and temperature gradient zeroed, i.e. the
    /// thermal-equilibrium state `(F, θ, W, 0, 0)`.
    pub fn equilibrium(mut self) -> Self {
        self.q = Vec3::ZERO;
        self.g = Vec3::ZERO;
        self
    }
}

fn checked_inverse(f: &Mat3) -> Result<(f64, Mat3)> {
    let det = f.det();
    if !(det.abs() > SINGULARITY_THRESHOLD) {
        return Err(Error::NonInvertibleF { det });
    }
    let inv = f.inverse().ok_or(Error::NonInvertibleF { det })?;
    Ok((det, inv))
}

pub fn kinematics_from_f(f: Mat3) -> Result<KinematicState> {
    let j = f.det();
    if !(j > SINGULARITY_THRESHOLD) {
        return Err(Error::NonInvertibleF { det: j });
    }
    let c = f.transpose() * f;
    let green = (c - Mat3::IDENTITY) * 0.5;
    Ok(KinematicState { f, j, c, green })
}

/// Green strain without the invertibility check; used on hot paths where `F`
/// has already been validated.
pub fn green_strain(f: &Mat3) -> Mat3 {
    (f.transpose() * *f - Mat3::IDENTITY) * 0.5
}

/// Piola pull-back of a flux vector: `J F⁻¹ h`.
pub fn pull_flux(f: &Mat3, h: Vec3) -> Result<Vec3> {
    let (j, inv) = checked_inverse(f)?;
    if j <= 0.0 {
        return Err(Error::NonPositiveJ(j));
    }
    Ok(inv * h * j)
}

/// Inverse of [`pull_flux`]: `J⁻¹ F H`.
pub fn push_flux(f: &Mat3, big_h: Vec3) -> Result<Vec3> {
    let j = f.det();
    if !(j > SINGULARITY_THRESHOLD) {
        return Err(Error::NonInvertibleF { det: j });
    }
    Ok(*f * big_h * (1.0 / j))
}

/// `Q = J F⁻¹ q`.
pub fn pull_heat_flux(f: &Mat3, q: Vec3) -> Result<Vec3> {
    pull_flux(f, q)
}

/// `q = J⁻¹ F Q`.
pub fn push_heat_flux(f: &Mat3, big_q: Vec3) -> Result<Vec3> {
    push_flux(f, big_q)
}

/// `Fᵀ a`: referential form of a gradient-like vector (`W` from `E^M`,
/// `G` from `g`).
pub fn pull_covector(f: &Mat3, a: Vec3) -> Vec3 {
    f.transpose() * a
}

/// `F⁻ᵀ A`, inverse of [`pull_covector`].
pub fn push_covector(f: &Mat3, a: Vec3) -> Result<Vec3> {
    let (_, inv) = checked_inverse(f)?;
    Ok(inv.transpose() * a)
}

/// Eulerian electric displacement `D = E^M + 4πP`.
pub fn electric_displacement(e_m: Vec3, p: Vec3) -> Vec3 {
    e_m + p * (4.0 * PI)
}

/// Referential electric displacement `Δ = J F⁻¹ D`.
pub fn referential_displacement(f: &Mat3, d: Vec3) -> Result<Vec3> {
    pull_flux(f, d)
}

/// `Δ = J F⁻¹ E^M + 4π IP`, the same quantity assembled from the referential
/// polarization `IP = J F⁻¹ P`.
pub fn referential_displacement_from_parts(f: &Mat3, e_m: Vec3, big_p: Vec3) -> Result<Vec3> {
    Ok(pull_flux(f, e_m)? + big_p * (4.0 * PI))
}

/// `ρ = ρ_R / J`.
pub fn spatial_density(rho_r: f64, j: f64) -> Result<f64> {
    if !(j > 0.0) {
        return Err(Error::NonPositiveJ(j));
    }
    Ok(rho_r / j)
}

const PROBES: [[f64; 3]; 13] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [1.0, 1.0, 0.0],
    [1.0, -1.0, 0.0],
    [1.0, 0.0, 1.0],
    [1.0, 0.0, -1.0],
    [0.0, 1.0, 1.0],
    [0.0, 1.0, -1.0],
    [1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0],
    [1.0, -1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

/// Smallest of the leading principal minors of `sym(M)` and the normalized
/// probe values `x·Mx / |x|²`. Positive iff the tests in
/// [`check_positive_definite`] pass with zero tolerance.
pub fn definiteness_margin(m: &Mat3) -> f64 {
    let s = m.sym();
    let minors = s.leading_minors();
    let mut margin = minors.iter().copied().fold(f64::INFINITY, f64::min);
    for p in PROBES {
        let x = Vec3(p);
        margin = margin.min(s.quad(&x, &x) / x.dot(&x));
    }
    margin
}

/// Positive-definiteness of the symmetric part of `m`: every leading
/// principal minor and every probe value `x·Mx/|x|²` must exceed `tol`.
pub fn check_positive_definite(m: &Mat3, tol: f64) -> bool {
    m.is_finite() && definiteness_margin(m) > tol
}

/// `max|M − Mᵀ| <= tol · max(1, ‖M‖_max)`.
pub fn check_symmetric(m: &Mat3, tol: f64) -> bool {
    symmetry_defect(m) <= tol
}

/// Scaled asymmetry `max|M − Mᵀ| / max(1, ‖M‖_max)`.
pub fn symmetry_defect(m: &Mat3) -> f64 {
    (*m - m.transpose()).norm_max() / m.norm_max().max(1.0)
}

/// Rejects anything that is not an element of SO(3) to within `1e-10`.
pub fn validate_rotation(r: &Mat3) -> Result<()> {
    let defect = (r.transpose() * *r - Mat3::IDENTITY).norm_max();
    let det = r.det();
    if defect > 1e-10 || (det - 1.0).abs() > 1e-10 {
        return Err(Error::NotARotation { defect, det });
    }
    Ok(())
}

/// Central-difference divergence of a vector field at `x`.
pub fn central_divergence(field: impl Fn(Vec3) -> Vec3, x: Vec3, h: f64) -> f64 {
    (0..3)
        .map(|k| {
            let e = Vec3::unit(k) * h;
            (field(x + e)[k] - field(x - e)[k]) / (2.0 * h)
        })
        .sum()
}
