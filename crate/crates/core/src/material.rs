//! Material models: an equilibrium free energy `ψ₀(F, θ, W)` together with the
//! steady-state conductivity `K` and relaxation-time tensor `T` of the
//! Cattaneo law.
//!
//! Response functions receive the full referential state so that deliberately
//! broken models (a free energy that depends on `G`, say) can be expressed and
//! caught by the audits. Well-behaved models simply ignore `Q` and `G`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kinematics::{green_strain, ReferentialState};
use crate::linalg::{Mat3, Tensor4, Vec3};

/// Analytic partials of `ψ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psi0Gradients {
    pub d_f: Mat3,
    pub d_theta: f64,
    pub d_w: Vec3,
}

/// Analytic partials of `Z = K⁻¹T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZDerivatives {
    pub d_theta: Mat3,
    pub d_f: Tensor4,
    pub d_w: [Mat3; 3],
}

impl ZDerivatives {
    pub const ZERO: ZDerivatives =
        ZDerivatives { d_theta: Mat3::ZERO, d_f: Tensor4::ZERO, d_w: [Mat3::ZERO; 3] };
}

/// Partials of the full specific internal energy `ε(F, θ, W, Q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPartials {
    pub d_theta: f64,
    pub d_f: Mat3,
    pub d_w: Vec3,
    pub d_q: Vec3,
}

pub trait MaterialModel: Send + Sync {
    fn name(&self) -> &str;

    /// `ρ_R`.
    fn reference_density(&self) -> f64;

    /// Temperature scale used when sampling audit states.
    fn reference_temperature(&self) -> f64 {
        1.0
    }

    /// Specific equilibrium free energy `ψ₀`.
    fn equilibrium_free_energy(&self, s: &ReferentialState) -> Result<f64>;

    /// Steady-state conductivity `K`.
    fn conductivity(&self, s: &ReferentialState) -> Result<Mat3>;

    /// Tensor of relaxation times `T`.
    fn relaxation_times(&self, s: &ReferentialState) -> Result<Mat3>;

    fn equilibrium_gradients(&self, _s: &ReferentialState) -> Option<Result<Psi0Gradients>> {
        None
    }

    fn relaxation_factor_derivatives(&self, _s: &ReferentialState) -> Option<Result<ZDerivatives>> {
        None
    }

    fn internal_energy_partials(&self, _s: &ReferentialState) -> Option<Result<EnergyPartials>> {
        None
    }
}

impl<M: MaterialModel + ?Sized> MaterialModel for Arc<M> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn reference_density(&self) -> f64 {
        (**self).reference_density()
    }
    fn reference_temperature(&self) -> f64 {
        (**self).reference_temperature()
    }
    fn equilibrium_free_energy(&self, s: &ReferentialState) -> Result<f64> {
        (**self).equilibrium_free_energy(s)
    }
    fn conductivity(&self, s: &ReferentialState) -> Result<Mat3> {
        (**self).conductivity(s)
    }
    fn relaxation_times(&self, s: &ReferentialState) -> Result<Mat3> {
        (**self).relaxation_times(s)
    }
    fn equilibrium_gradients(&self, s: &ReferentialState) -> Option<Result<Psi0Gradients>> {
        (**self).equilibrium_gradients(s)
    }
    fn relaxation_factor_derivatives(&self, s: &ReferentialState) -> Option<Result<ZDerivatives>> {
        (**self).relaxation_factor_derivatives(s)
    }
    fn internal_energy_partials(&self, s: &ReferentialState) -> Option<Result<EnergyPartials>> {
        (**self).internal_energy_partials(s)
    }
}

/// Parameters of the isotropic thermo-elastic dielectric. `kappa` and `tau`
/// are the conduction constants; the θ-dependent preset reads `kappa` as the
/// slope `κ₀` of `K = κ₀θI`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsotropicParams {
    pub lambda: f64,
    pub mu: f64,
    pub c_v: f64,
    pub theta_ref: f64,
    pub chi: f64,
    pub beta: f64,
    pub kappa: f64,
    pub tau: f64,
    pub rho_r: f64,
}

impl Default for IsotropicParams {
    fn default() -> Self {
        IsotropicParams {
            lambda: 1.0,
            mu: 1.0,
            c_v: 1.0,
            theta_ref: 1.0,
            chi: 0.1,
            beta: 0.1,
            kappa: 1.0,
            tau: 1.0,
            rho_r: 1.0,
        }
    }
}

impl IsotropicParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("c_v", self.c_v),
            ("theta_ref", self.theta_ref),
            ("chi", self.chi),
            ("beta", self.beta),
            ("kappa", self.kappa),
            ("tau", self.tau),
            ("rho_r", self.rho_r),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        let positive = [
            ("mu", self.mu),
            ("c_v", self.c_v),
            ("theta_ref", self.theta_ref),
            ("kappa", self.kappa),
            ("tau", self.tau),
            ("rho_r", self.rho_r),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if 3.0 * self.lambda + 2.0 * self.mu <= 0.0 {
            return Err(invalid("lambda", "3λ + 2μ must be > 0"));
        }
        if self.chi < 0.0 {
            return Err(invalid("chi", format!("must be >= 0, got {}", self.chi)));
        }
        Ok(())
    }
}

/// How `K` and `T` depend on the state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conduction {
    /// `K = κI`, `T = τI`.
    Isotropic { kappa: f64, tau: f64 },
    /// `K = κ₀θI`, `T = τI`.
    LinearInTheta { kappa0: f64, tau: f64 },
    /// Diagonal `K` and `T`. Entries are only required to be nonzero, so an
    /// indefinite `K` can be built to exercise the audit.
    Orthotropic { kappa: [f64; 3], tau: [f64; 3] },
    /// `K = κI`, `T = τ(I + s e₁⊗e₂)`, which makes `Z` non-symmetric.
    SkewRelaxation { kappa: f64, tau: f64, skew: f64 },
}

impl Conduction {
    fn k(&self, theta: f64) -> Mat3 {
        match *self {
            Conduction::Isotropic { kappa, .. } | Conduction::SkewRelaxation { kappa, .. } => {
                Mat3::scaled_identity(kappa)
            }
            Conduction::LinearInTheta { kappa0, .. } => Mat3::scaled_identity(kappa0 * theta),
            Conduction::Orthotropic { kappa, .. } => Mat3::diag(kappa[0], kappa[1], kappa[2]),
        }
    }

    fn t(&self) -> Mat3 {
        match *self {
            Conduction::Isotropic { tau, .. } | Conduction::LinearInTheta { tau, .. } => Mat3::scaled_identity(tau),
            Conduction::Orthotropic { tau, .. } => Mat3::diag(tau[0], tau[1], tau[2]),
            Conduction::SkewRelaxation { tau, skew, .. } => (Mat3::IDENTITY + Mat3::unit(0, 1) * skew) * tau,
        }
    }

    fn z(&self, theta: f64) -> Mat3 {
        match *self {
            Conduction::Isotropic { kappa, tau } => Mat3::scaled_identity(tau / kappa),
            Conduction::LinearInTheta { kappa0, tau } => Mat3::scaled_identity(tau / (kappa0 * theta)),
            Conduction::Orthotropic { kappa, tau } => {
                Mat3::diag(tau[0] / kappa[0], tau[1] / kappa[1], tau[2] / kappa[2])
            }
            Conduction::SkewRelaxation { kappa, tau, skew } => (Mat3::IDENTITY + Mat3::unit(0, 1) * skew) * (tau / kappa),
        }
    }

    fn dz_dtheta(&self, theta: f64) -> Mat3 {
        match *self {
            Conduction::LinearInTheta { kappa0, tau } => Mat3::scaled_identity(-tau / (kappa0 * theta * theta)),
            _ => Mat3::ZERO,
        }
    }

    /// `A = Z/θ − ½∂_θZ` and its θ-derivative.
    fn a_and_slope(&self, theta: f64) -> (Mat3, Mat3) {
        match *self {
            Conduction::LinearInTheta { kappa0, tau } => {
                let c = tau / kappa0;
                (
                    Mat3::scaled_identity(1.5 * c / (theta * theta)),
                    Mat3::scaled_identity(-3.0 * c / (theta * theta * theta)),
                )
            }
            _ => {
                let z = self.z(theta);
                (z * (1.0 / theta), z * (-1.0 / (theta * theta)))
            }
        }
    }
}

/// Isotropic thermo-elastic dielectric:
///
/// `ψ₀ = [½λ(tr E)² + μ E:E]/ρ_R − ½c_v(θ−θ_r)²/θ_r − β(θ−θ_r) tr E/ρ_R − ½χ W·W/ρ_R`
///
/// with `E` the Green strain. `gradient_coupling` adds `½γ G·G/ρ_R`, which no
/// admissible model may contain; it exists only to exercise the audit.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetMaterial {
    name: String,
    pub params: IsotropicParams,
    pub conduction: Conduction,
    pub gradient_coupling: f64,
}

/// Isotropic preset with `K = κI`, `T = τI`.
#[allow(clippy::too_many_arguments)]
pub fn make_isotropic_preset(
    lambda: f64,
    mu: f64,
    c_v: f64,
    theta_ref: f64,
    chi: f64,
    beta: f64,
    kappa: f64,
    tau: f64,
    rho_r: f64,
) -> Result<PresetMaterial> {
    PresetMaterial::isotropic(IsotropicParams { lambda, mu, c_v, theta_ref, chi, beta, kappa, tau, rho_r })
}

impl PresetMaterial {
    pub fn isotropic(params: IsotropicParams) -> Result<Self> {
        params.validate()?;
        Ok(PresetMaterial {
            name: "isotropic".into(),
            params,
            conduction: Conduction::Isotropic { kappa: params.kappa, tau: params.tau },
            gradient_coupling: 0.0,
        })
    }

    /// `K = κ₀θI` with `κ₀ = params.kappa`. Makes `∂_θZ` nonzero.
    pub fn theta_dependent(params: IsotropicParams) -> Result<Self> {
        params.validate()?;
        Ok(PresetMaterial {
            name: "isotropic_theta_kappa".into(),
            params,
            conduction: Conduction::LinearInTheta { kappa0: params.kappa, tau: params.tau },
            gradient_coupling: 0.0,
        })
    }

    pub fn orthotropic(params: IsotropicParams, kappa: [f64; 3], tau: [f64; 3]) -> Result<Self> {
        params.validate()?;
        for (name, v) in kappa.iter().map(|v| ("kappa_diag", *v)).chain(tau.iter().map(|v| ("tau_diag", *v))) {
            if !(v.is_finite() && v != 0.0) {
                return Err(invalid(name, "entries must be finite and nonzero"));
            }
        }
        Ok(PresetMaterial {
            name: "orthotropic".into(),
            params,
            conduction: Conduction::Orthotropic { kappa, tau },
            gradient_coupling: 0.0,
        })
    }

    pub fn nonsymmetric_relaxation(params: IsotropicParams, skew: f64) -> Result<Self> {
        params.validate()?;
        if !skew.is_finite() {
            return Err(invalid("skew", "must be finite"));
        }
        Ok(PresetMaterial {
            name: "nonsymmetric_relaxation".into(),
            params,
            conduction: Conduction::SkewRelaxation { kappa: params.kappa, tau: params.tau, skew },
            gradient_coupling: 0.0,
        })
    }

    pub fn gradient_dependent(params: IsotropicParams, coupling: f64) -> Result<Self> {
        let mut m = Self::isotropic(params)?;
        if !coupling.is_finite() {
            return Err(invalid("coupling", "must be finite"));
        }
        m.name = "gradient_dependent".into();
        m.gradient_coupling = coupling;
        Ok(m)
    }

    /// Thermo-elastic stress measure `∂(ρ_Rψ₀)/∂E` at `(E, θ)`.
    fn equilibrium_second_pk(&self, e: &Mat3, theta: f64) -> Mat3 {
        let p = &self.params;
        let tr = e.trace();
        Mat3::scaled_identity(p.lambda * tr - p.beta * (theta - p.theta_ref)) + *e * (2.0 * p.mu)
    }
}

impl MaterialModel for PresetMaterial {
    fn name(&self) -> &str {
        &self.name
    }

    fn reference_density(&self) -> f64 {
        self.params.rho_r
    }

    fn reference_temperature(&self) -> f64 {
        self.params.theta_ref
    }

    fn equilibrium_free_energy(&self, s: &ReferentialState) -> Result<f64> {
        let p = &self.params;
        let e = green_strain(&s.f);
        let tr = e.trace();
        let dt = s.theta - p.theta_ref;
        let elastic = 0.5 * p.lambda * tr * tr + p.mu * e.ddot(&e);
        Ok((elastic - p.beta * dt * tr - 0.5 * p.chi * s.w.dot(&s.w) + 0.5 * self.gradient_coupling * s.g.dot(&s.g))
            / p.rho_r
            - 0.5 * p.c_v * dt * dt / p.theta_ref)
    }

    fn conductivity(&self, s: &ReferentialState) -> Result<Mat3> {
        Ok(self.conduction.k(s.theta))
    }

    fn relaxation_times(&self, _s: &ReferentialState) -> Result<Mat3> {
        Ok(self.conduction.t())
    }

    fn equilibrium_gradients(&self, s: &ReferentialState) -> Option<Result<Psi0Gradients>> {
        let p = &self.params;
        let e = green_strain(&s.f);
        let sigma = self.equilibrium_second_pk(&e, s.theta);
        Some(Ok(Psi0Gradients {
            d_f: s.f * sigma * (1.0 / p.rho_r),
            d_theta: -p.c_v * (s.theta - p.theta_ref) / p.theta_ref - p.beta * e.trace() / p.rho_r,
            d_w: s.w * (-p.chi / p.rho_r),
        }))
    }

    fn relaxation_factor_derivatives(&self, s: &ReferentialState) -> Option<Result<ZDerivatives>> {
        Some(Ok(ZDerivatives { d_theta: self.conduction.dz_dtheta(s.theta), ..ZDerivatives::ZERO }))
    }

    fn internal_energy_partials(&self, s: &ReferentialState) -> Option<Result<EnergyPartials>> {
        let p = &self.params;
        let e = green_strain(&s.f);
        let (a, a_slope) = self.conduction.a_and_slope(s.theta);
        // ε = ψ₀ − θ∂_θψ₀ + W·Π₀ + Q·AQ/ρ_R; the β term freezes at θ_r.
        let sigma = Mat3::scaled_identity(p.lambda * e.trace() + p.beta * p.theta_ref) + e * (2.0 * p.mu);
        Some(Ok(EnergyPartials {
            d_theta: p.c_v * s.theta / p.theta_ref + a_slope.quad(&s.q, &s.q) / p.rho_r,
            d_f: s.f * sigma * (1.0 / p.rho_r),
            d_w: s.w * (p.chi / p.rho_r),
            d_q: (a + a.transpose()) * s.q * (1.0 / p.rho_r),
        }))
    }
}

type ScalarFn = dyn Fn(&ReferentialState) -> f64 + Send + Sync;
type TensorFn = dyn Fn(&ReferentialState) -> Mat3 + Send + Sync;

/// Model assembled from closures. Everything is differentiated numerically.
#[derive(Clone)]
pub struct CustomModel {
    name: String,
    rho_r: f64,
    theta_ref: f64,
    psi0: Arc<ScalarFn>,
    k: Arc<TensorFn>,
    t: Arc<TensorFn>,
}

impl std::fmt::Debug for CustomModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomModel").field("name", &self.name).field("rho_r", &self.rho_r).finish_non_exhaustive()
    }
}

impl CustomModel {
    pub fn new(
        name: impl Into<String>,
        rho_r: f64,
        theta_ref: f64,
        psi0: impl Fn(&ReferentialState) -> f64 + Send + Sync + 'static,
        k: impl Fn(&ReferentialState) -> Mat3 + Send + Sync + 'static,
        t: impl Fn(&ReferentialState) -> Mat3 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(rho_r > 0.0 && rho_r.is_finite()) {
            return Err(invalid("rho_r", "must be finite and > 0"));
        }
        if !(theta_ref > 0.0 && theta_ref.is_finite()) {
            return Err(invalid("theta_ref", "must be finite and > 0"));
        }
        Ok(CustomModel { name: name.into(), rho_r, theta_ref, psi0: Arc::new(psi0), k: Arc::new(k), t: Arc::new(t) })
    }
}

fn finite_scalar(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::EvaluationFailed(format!("{what} is not finite")))
    }
}

fn finite_tensor(m: Mat3, what: &str) -> Result<Mat3> {
    if m.is_finite() {
        Ok(m)
    } else {
        Err(Error::EvaluationFailed(format!("{what} is not finite")))
    }
}

impl MaterialModel for CustomModel {
    fn name(&self) -> &str {
        &self.name
    }
    fn reference_density(&self) -> f64 {
        self.rho_r
    }
    fn reference_temperature(&self) -> f64 {
        self.theta_ref
    }
    fn equilibrium_free_energy(&self, s: &ReferentialState) -> Result<f64> {
        finite_scalar((self.psi0)(s), "ψ₀")
    }
    fn conductivity(&self, s: &ReferentialState) -> Result<Mat3> {
        finite_tensor((self.k)(s), "K")
    }
    fn relaxation_times(&self, s: &ReferentialState) -> Result<Mat3> {
        finite_tensor((self.t)(s), "T")
    }
}

/// Parameter block accepted by [`preset_by_name`]. Missing fields take the
/// values of [`IsotropicParams::default`]; the trailing fields are only
/// meaningful for the preset that names them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetParams {
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub c_v: Option<f64>,
    pub theta_ref: Option<f64>,
    pub chi: Option<f64>,
    pub beta: Option<f64>,
    pub kappa: Option<f64>,
    pub tau: Option<f64>,
    pub rho_r: Option<f64>,
    pub kappa_diag: Option<[f64; 3]>,
    pub tau_diag: Option<[f64; 3]>,
    pub skew: Option<f64>,
    pub coupling: Option<f64>,
}

impl PresetParams {
    pub fn isotropic(&self) -> IsotropicParams {
        let d = IsotropicParams::default();
        IsotropicParams {
            lambda: self.lambda.unwrap_or(d.lambda),
            mu: self.mu.unwrap_or(d.mu),
            c_v: self.c_v.unwrap_or(d.c_v),
            theta_ref: self.theta_ref.unwrap_or(d.theta_ref),
            chi: self.chi.unwrap_or(d.chi),
            beta: self.beta.unwrap_or(d.beta),
            kappa: self.kappa.unwrap_or(d.kappa),
            tau: self.tau.unwrap_or(d.tau),
            rho_r: self.rho_r.unwrap_or(d.rho_r),
        }
    }
}

pub const PRESET_NAMES: [&str; 5] =
    ["isotropic", "isotropic_theta_kappa", "orthotropic", "nonsymmetric_relaxation", "gradient_dependent"];

/// Builds a named preset. Defaults come from [`IsotropicParams::default`].
pub fn preset_by_name(name: &str, params: &PresetParams) -> Result<PresetMaterial> {
    let base = params.isotropic();
    let reject = |field: &str, present: bool| -> Result<()> {
        if present {
            Err(invalid(field, format!("not a parameter of preset `{name}`")))
        } else {
            Ok(())
        }
    };
    let ortho = matches!(name, "orthotropic");
    if !ortho {
        reject("kappa_diag", params.kappa_diag.is_some())?;
        reject("tau_diag", params.tau_diag.is_some())?;
    }
    if name != "nonsymmetric_relaxation" {
        reject("skew", params.skew.is_some())?;
    }
    if name != "gradient_dependent" {
        reject("coupling", params.coupling.is_some())?;
    }
    match name {
        "isotropic" => PresetMaterial::isotropic(base),
        "isotropic_theta_kappa" => PresetMaterial::theta_dependent(base),
        "orthotropic" => PresetMaterial::orthotropic(
            base,
            params.kappa_diag.unwrap_or([base.kappa; 3]),
            params.tau_diag.unwrap_or([base.tau; 3]),
        ),
        "nonsymmetric_relaxation" => PresetMaterial::nonsymmetric_relaxation(base, params.skew.unwrap_or(0.5)),
        "gradient_dependent" => PresetMaterial::gradient_dependent(base, params.coupling.unwrap_or(1.0)),
        other => Err(invalid(
            "preset",
            format!("unknown preset `{other}`; expected one of {}", PRESET_NAMES.join(", ")),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd::{fd_f, fd_theta, fd_vector, FdScheme, Slot};
    use crate::kinematics::check_positive_definite;
    use crate::linalg::rotation_from_quaternion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> IsotropicParams {
        IsotropicParams { lambda: 0.7, mu: 1.3, c_v: 2.0, theta_ref: 1.5, chi: 0.4, beta: 0.3, kappa: 0.8, tau: 0.6, rho_r: 1.7 }
    }

    fn state() -> ReferentialState {
        ReferentialState {
            f: Mat3([[1.1, 0.1, 0.0], [0.05, 0.95, 0.2], [-0.1, 0.0, 1.05]]),
            theta: 1.9,
            w: Vec3::new(0.2, -0.3, 0.1),
            q: Vec3::new(0.3, -0.2, 0.5),
            g: Vec3::new(-0.5, 0.4, 0.1),
        }
    }

    #[test]
    fn reference_state_is_stationary() {
        let m = make_isotropic_preset(0.7, 1.3, 2.0, 1.5, 0.4, 0.3, 0.8, 0.6, 1.7).unwrap();
        let s = ReferentialState::reference(1.5);
        assert_eq!(m.equilibrium_free_energy(&s).unwrap(), 0.0);
        let g = m.equilibrium_gradients(&s).unwrap().unwrap();
        assert_eq!(g.d_theta, 0.0);
        assert_eq!(g.d_f, Mat3::ZERO);
    }

    #[test]
    fn elastic_energy_of_uniaxial_stretch() {
        let p = IsotropicParams { lambda: 0.0, mu: 1.0, beta: 0.0, chi: 0.0, rho_r: 1.0, ..IsotropicParams::default() };
        let m = PresetMaterial::isotropic(p).unwrap();
        let s = ReferentialState { f: Mat3::diag(2.0, 1.0, 1.0), ..ReferentialState::reference(p.theta_ref) };
        assert!((m.equilibrium_free_energy(&s).unwrap() - 2.25).abs() < 1e-14);
    }

    #[test]
    fn dielectric_energy() {
        let p = IsotropicParams { chi: 1.0, rho_r: 1.0, ..IsotropicParams::default() };
        let m = PresetMaterial::isotropic(p).unwrap();
        let s = ReferentialState { w: Vec3::new(2.0, 0.0, 0.0), ..ReferentialState::reference(p.theta_ref) };
        assert_eq!(m.equilibrium_free_energy(&s).unwrap(), -2.0);
    }

    #[test]
    fn parameter_bounds() {
        let bad = [
            IsotropicParams { mu: 0.0, ..params() },
            IsotropicParams { lambda: -1.0, mu: 1.0, ..params() },
            IsotropicParams { c_v: -1.0, ..params() },
            IsotropicParams { theta_ref: 0.0, ..params() },
            IsotropicParams { chi: -0.1, ..params() },
            IsotropicParams { kappa: 0.0, ..params() },
            IsotropicParams { tau: -2.0, ..params() },
            IsotropicParams { rho_r: 0.0, ..params() },
        ];
        for p in bad {
            assert!(matches!(PresetMaterial::isotropic(p), Err(Error::InvalidParameter { .. })), "{p:?}");
        }
        let err = PresetMaterial::isotropic(IsotropicParams { mu: -1.0, ..params() }).unwrap_err();
        assert!(err.to_string().contains("mu"));
    }

    #[test]
    fn analytic_gradients_match_fd() {
        let scheme = FdScheme::fourth_order();
        for m in [PresetMaterial::isotropic(params()).unwrap(), PresetMaterial::theta_dependent(params()).unwrap()] {
            let s = state();
            let psi = |s: &ReferentialState| m.equilibrium_free_energy(s);
            let g = m.equilibrium_gradients(&s).unwrap().unwrap();
            assert!((fd_f(&psi, &s, &scheme).unwrap() - g.d_f).norm_max() < 1e-8);
            assert!((fd_theta(&psi, &s, &scheme).unwrap() - g.d_theta).abs() < 1e-8);
            assert!((fd_vector(&psi, &s, Slot::W, &scheme).unwrap() - g.d_w).norm_max() < 1e-8);
            let z = |s: &ReferentialState| Ok(m.conduction.z(s.theta));
            let dz = m.relaxation_factor_derivatives(&s).unwrap().unwrap();
            assert!((fd_theta(&z, &s, &scheme).unwrap() - dz.d_theta).norm_max() < 1e-8);
        }
    }

    #[test]
    fn z_is_k_inverse_t() {
        let m = PresetMaterial::nonsymmetric_relaxation(params(), 0.4).unwrap();
        let s = state();
        let direct = m.conductivity(&s).unwrap().inverse().unwrap() * m.relaxation_times(&s).unwrap();
        assert!((direct - m.conduction.z(s.theta)).norm_max() < 1e-14);
    }

    #[test]
    fn presets_are_objective() {
        let m = PresetMaterial::isotropic(params()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = state();
        let base = m.equilibrium_free_energy(&s).unwrap();
        for _ in 0..100 {
            let r = rotation_from_quaternion([rng.gen(), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            let rotated = ReferentialState { f: r * s.f, ..s };
            assert!((m.equilibrium_free_energy(&rotated).unwrap() - base).abs() <= 1e-12);
        }
    }

    #[test]
    fn preset_tensors_are_definite_and_invertible() {
        for m in [PresetMaterial::isotropic(params()).unwrap(), PresetMaterial::theta_dependent(params()).unwrap()] {
            let s = state();
            assert!(check_positive_definite(&m.conductivity(&s).unwrap(), 0.0));
            assert!(m.relaxation_times(&s).unwrap().inverse().is_some());
        }
    }

    #[test]
    fn preset_lookup() {
        let p: PresetParams = serde_json::from_str(r#"{"kappa": 2.0, "tau": 0.5}"#).unwrap();
        let m = preset_by_name("isotropic", &p).unwrap();
        assert_eq!(m.params.kappa, 2.0);
        assert!(preset_by_name("nope", &p).is_err());
        let p: PresetParams = serde_json::from_str(r#"{"skew": 2.0}"#).unwrap();
        assert!(preset_by_name("isotropic", &p).is_err());
        assert!(preset_by_name("nonsymmetric_relaxation", &p).is_ok());
        assert!(serde_json::from_str::<PresetParams>(r#"{"kapa": 2.0}"#).is_err());
    }

    #[test]
    fn custom_model_rejects_non_finite() {
        let m = CustomModel::new("bad", 1.0, 1.0, |_| f64::NAN, |_| Mat3::IDENTITY, |_| Mat3::IDENTITY).unwrap();
        assert!(matches!(m.equilibrium_free_energy(&state()), Err(Error::EvaluationFailed(_))));
    }
}
