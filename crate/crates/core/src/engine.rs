//! Second-sound constitutive functions built from `(ψ₀, K, T)`.
//!
//! With `Z = K⁻¹T` the full free energy is
//!
//! ```text
//! ψ̂ = ψ̂₀ + Q·ZQ / (2θρ_R)
//! ```
//!
//! and entropy, internal energy, stress and polarization follow from it by the
//! Coleman–Noll relations `η = −∂_θψ̂`, `S = ρ_R∂_Fψ̂`, `Π = −∂_Wψ̂`. The heat
//! flux evolves by the Cattaneo law `TQ̇ + Q = −KG`. Everything here works in
//! referential variables; [`CattaneoEngine::spatial_view`] pushes the results
//! forward.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{fd_f, fd_tensor_f, fd_tensor_w, fd_theta, fd_vector, FdScheme, Slot};
use crate::kinematics::{
    electric_displacement, push_covector, push_flux, spatial_density, validate_rotation, ReferentialState,
};
use crate::linalg::{Mat3, Tensor4, Vec3, SINGULARITY_THRESHOLD};
use crate::material::{EnergyPartials, MaterialModel, Psi0Gradients, ZDerivatives};

/// Where derivatives of the model functions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    /// Analytic overrides when the model has them, finite differences otherwise.
    #[default]
    Auto,
    FiniteDifference,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedTensors {
    /// `K⁻¹T`.
    pub z: Mat3,
    /// `Z/θ − ½∂_θZ`, the internal-energy coupling.
    pub a: Mat3,
    /// `−½∂_θ(Z/θ)`, the entropy coupling.
    pub b: Mat3,
    /// `(1/2θ)∂_FZ`, the stress coupling.
    pub p_f: Tensor4,
    pub dz_dtheta: Mat3,
    pub dz_dw: [Mat3; 3],
}

impl DerivedTensors {
    /// `Q·(∂Z/∂W_k)Q` for each `k`.
    fn w_contract(&self, q: &Vec3) -> Vec3 {
        Vec3::new(self.dz_dw[0].quad(q, q), self.dz_dw[1].quad(q, q), self.dz_dw[2].quad(q, q))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstitutiveOutput {
    pub psi: f64,
    pub eta: f64,
    pub eps: f64,
    #[serde(rename = "S")]
    pub s: Mat3,
    #[serde(rename = "Pi")]
    pub pi: Vec3,
    #[serde(rename = "Q_dot")]
    pub q_dot: Vec3,
    /// Internal dissipation per unit mass.
    pub delta0: f64,
    pub tau_cauchy: Mat3,
}

/// Thermodynamic response at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub psi: f64,
    pub eta: f64,
    pub eps: f64,
    pub s: Mat3,
    pub pi: Vec3,
    pub dpsi_dq: Vec3,
}

/// Internal dissipation `δ₀ = −∂_Qψ̂·Q̇` per unit mass and as densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InternalDissipation {
    pub per_mass: f64,
    /// `ρδ₀` with `ρ = ρ_R/J`.
    pub spatial_density: f64,
    /// `ρ_Rδ₀`.
    pub referential_density: f64,
}

/// Spatial counterparts of the referential fields at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialView {
    pub rho: f64,
    /// Spatial heat flux `q = J⁻¹FQ`.
    pub q: Vec3,
    /// Spatial temperature gradient `g = F⁻ᵀG`.
    pub g: Vec3,
    /// Maxwellian field `E^M = F⁻ᵀW`.
    pub e_m: Vec3,
    /// Polarization per unit volume `P = ρFΠ`.
    pub p: Vec3,
    /// `D = E^M + 4πP`.
    pub d: Vec3,
    pub tau: Mat3,
}

/// One step of a trajectory, for the entropy balance residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySample {
    pub at: ReferentialState,
    pub at_next: ReferentialState,
    pub dt: f64,
    /// Specific heat supply `r`.
    pub r: f64,
    /// Divergence of the heat flux in the same frame as `rho`.
    pub div_q: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivityResiduals {
    pub psi: f64,
    pub tau: f64,
}

#[derive(Clone, Copy)]
pub struct CattaneoEngine<'a> {
    model: &'a dyn MaterialModel,
    pub scheme: FdScheme,
    pub source: DerivativeSource,
    /// When false every `Q`-dependent term of the free energy is dropped,
    /// which is the classical (Fourier) limit.
    flux_channels: bool,
}

impl std::fmt::Debug for CattaneoEngine<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CattaneoEngine")
            .field("model", &self.model.name())
            .field("scheme", &self.scheme)
            .field("source", &self.source)
            .field("flux_channels", &self.flux_channels)
            .finish()
    }
}

fn check_state(s: &ReferentialState) -> Result<()> {
    if !(s.theta > 0.0) {
        return Err(Error::NonPositiveTemperature(s.theta));
    }
    Ok(())
}

impl<'a> CattaneoEngine<'a> {
    pub fn new(model: &'a dyn MaterialModel) -> Self {
        CattaneoEngine { model, scheme: FdScheme::default(), source: DerivativeSource::Auto, flux_channels: true }
    }

    /// Same model with `∂_Qψ̂` hard-zeroed: `ψ̂ = ψ̂₀` and all couplings vanish.
    pub fn fourier_limit(mut self) -> Self {
        self.flux_channels = false;
        self
    }

    pub fn has_flux_channels(&self) -> bool {
        self.flux_channels
    }

    pub fn with_scheme(mut self, scheme: FdScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_source(mut self, source: DerivativeSource) -> Self {
        self.source = source;
        self
    }

    pub fn model(&self) -> &'a dyn MaterialModel {
        self.model
    }

    pub fn rho_r(&self) -> f64 {
        self.model.reference_density()
    }

    fn analytic(&self) -> bool {
        self.source == DerivativeSource::Auto
    }

    pub fn conductivity(&self, s: &ReferentialState) -> Result<Mat3> {
        self.model.conductivity(s)
    }

    pub fn relaxation_times(&self, s: &ReferentialState) -> Result<Mat3> {
        self.model.relaxation_times(s)
    }

    /// `Z = K⁻¹T`.
    pub fn z(&self, s: &ReferentialState) -> Result<Mat3> {
        let k = self.model.conductivity(s)?;
        let det = k.det();
        let k_inv = k.inverse().ok_or(Error::SingularK { det })?;
        let t = self.model.relaxation_times(s)?;
        let det_t = t.det();
        if !(det_t.abs() > SINGULARITY_THRESHOLD) {
            return Err(Error::SingularT { det: det_t });
        }
        Ok(k_inv * t)
    }

    pub fn z_derivatives(&self, s: &ReferentialState) -> Result<ZDerivatives> {
        if self.analytic() {
            if let Some(d) = self.model.relaxation_factor_derivatives(s) {
                return d;
            }
        }
        let z = |x: &ReferentialState| self.z(x);
        Ok(ZDerivatives {
            d_theta: fd_theta(&z, s, &self.scheme)?,
            d_f: fd_tensor_f(&z, s, &self.scheme)?,
            d_w: fd_tensor_w(&z, s, &self.scheme)?,
        })
    }

    pub fn derived_tensors(&self, s: &ReferentialState) -> Result<DerivedTensors> {
        check_state(s)?;
        if !self.flux_channels {
            return Ok(DerivedTensors {
                z: Mat3::ZERO,
                a: Mat3::ZERO,
                b: Mat3::ZERO,
                p_f: Tensor4::ZERO,
                dz_dtheta: Mat3::ZERO,
                dz_dw: [Mat3::ZERO; 3],
            });
        }
        let z = self.z(s)?;
        let dz = self.z_derivatives(s)?;
        let th = s.theta;
        let b = if self.analytic() {
            (dz.d_theta * (1.0 / th) - z * (1.0 / (th * th))) * -0.5
        } else {
            let z_over_theta = |x: &ReferentialState| Ok(self.z(x)? * (1.0 / x.theta));
            fd_theta(&z_over_theta, s, &self.scheme)? * -0.5
        };
        Ok(DerivedTensors {
            z,
            a: z * (1.0 / th) - dz.d_theta * 0.5,
            b,
            p_f: dz.d_f * (0.5 / th),
            dz_dtheta: dz.d_theta,
            dz_dw: dz.d_w,
        })
    }

    /// `−(θ²/2)∂_θ(Z/θ²)` by finite differences, the alternative definition of
    /// the coupling tensor `A`.
    pub fn a_from_scaled_derivative(&self, s: &ReferentialState) -> Result<Mat3> {
        check_state(s)?;
        let scaled = |x: &ReferentialState| Ok(self.z(x)? * (1.0 / (x.theta * x.theta)));
        Ok(fd_theta(&scaled, s, &self.scheme)? * (-0.5 * s.theta * s.theta))
    }

    pub fn psi0(&self, s: &ReferentialState) -> Result<f64> {
        self.model.equilibrium_free_energy(s)
    }

    pub fn psi0_gradients(&self, s: &ReferentialState) -> Result<Psi0Gradients> {
        if self.analytic() {
            if let Some(g) = self.model.equilibrium_gradients(s) {
                return g;
            }
        }
        let f = |x: &ReferentialState| self.model.equilibrium_free_energy(x);
        Ok(Psi0Gradients {
            d_f: fd_f(&f, s, &self.scheme)?,
            d_theta: fd_theta(&f, s, &self.scheme)?,
            d_w: fd_vector(&f, s, Slot::W, &self.scheme)?,
        })
    }

    /// Full specific free energy `ψ̂`.
    pub fn free_energy(&self, s: &ReferentialState) -> Result<f64> {
        check_state(s)?;
        if !self.flux_channels {
            return self.psi0(s);
        }
        let z = self.z(s)?;
        Ok(self.psi0(s)? + z.quad(&s.q, &s.q) / (2.0 * s.theta * self.rho_r()))
    }

    /// `η = η₀ + Q·BQ/ρ_R`, `η₀ = −∂_θψ₀`.
    pub fn entropy(&self, s: &ReferentialState) -> Result<f64> {
        let d = self.derived_tensors(s)?;
        let g = self.psi0_gradients(s)?;
        Ok(-g.d_theta + d.b.quad(&s.q, &s.q) / self.rho_r())
    }

    /// `ε = ψ₀ − θ∂_θψ₀ + Q·AQ/ρ_R + W·Π`, which is `ψ + θη + W·Π` for every `Q`.
    pub fn internal_energy(&self, s: &ReferentialState) -> Result<f64> {
        let d = self.derived_tensors(s)?;
        let g = self.psi0_gradients(s)?;
        let pi = self.polarization_from(s, &d, &g);
        Ok(self.psi0(s)? - s.theta * g.d_theta + d.a.quad(&s.q, &s.q) / self.rho_r() + s.w.dot(&pi))
    }

    /// First Piola–Kirchhoff stress `S = ρ_R∂_Fψ₀ + Q·P_F Q`.
    pub fn stress(&self, s: &ReferentialState) -> Result<Mat3> {
        let d = self.derived_tensors(s)?;
        let g = self.psi0_gradients(s)?;
        Ok(g.d_f * self.rho_r() + d.p_f.quad_contract(&s.q))
    }

    /// Specific referential polarization `Π = −∂_Wψ₀ − Q·(∂_WZ)Q/(2θρ_R)`.
    pub fn polarization(&self, s: &ReferentialState) -> Result<Vec3> {
        let d = self.derived_tensors(s)?;
        let g = self.psi0_gradients(s)?;
        Ok(self.polarization_from(s, &d, &g))
    }

    fn polarization_from(&self, s: &ReferentialState, d: &DerivedTensors, g: &Psi0Gradients) -> Vec3 {
        -g.d_w - d.w_contract(&s.q) * (1.0 / (2.0 * s.theta * self.rho_r()))
    }

    /// `∂_Qψ̂ = ½(Z + Zᵀ)Q/(θρ_R)`.
    pub fn dpsi_dq(&self, s: &ReferentialState) -> Result<Vec3> {
        check_state(s)?;
        if !self.flux_channels {
            return Ok(Vec3::ZERO);
        }
        let z = self.z(s)?;
        Ok((z + z.transpose()) * s.q * (0.5 / (s.theta * self.rho_r())))
    }

    /// Cattaneo law `Q̇ = −T⁻¹(Q + KG)`.
    pub fn heat_flux_rate(&self, s: &ReferentialState) -> Result<Vec3> {
        let t = self.model.relaxation_times(s)?;
        let det = t.det();
        let t_inv = t.inverse().ok_or(Error::SingularT { det })?;
        let k = self.model.conductivity(s)?;
        Ok(-(t_inv * (s.q + k * s.g)))
    }

    /// `Q = −KG − TQ̇`, the inverse of [`heat_flux_rate`](Self::heat_flux_rate).
    pub fn invert_evolution(&self, f: Mat3, theta: f64, w: Vec3, g: Vec3, q_dot: Vec3) -> Result<Vec3> {
        let s = ReferentialState { f, theta, w, q: Vec3::ZERO, g };
        let t = self.model.relaxation_times(&s)?;
        let det = t.det();
        if !(det.abs() > SINGULARITY_THRESHOLD) {
            return Err(Error::SingularT { det });
        }
        let k = self.model.conductivity(&s)?;
        Ok(-(k * g) - t * q_dot)
    }

    /// `ρ_Rθ∂_Qψ̂·H + Q·G` for an arbitrary flux rate `h`.
    pub fn reduced_dissipation_with(&self, s: &ReferentialState, h: Vec3) -> Result<f64> {
        let dq = self.dpsi_dq(s)?;
        Ok(self.rho_r() * s.theta * dq.dot(&h) + s.q.dot(&s.g))
    }

    /// Left side of the reduced dissipation inequality for the Cattaneo law;
    /// nonpositive for admissible models.
    pub fn reduced_dissipation(&self, s: &ReferentialState) -> Result<f64> {
        self.reduced_dissipation_with(s, self.heat_flux_rate(s)?)
    }

    pub fn internal_dissipation(&self, s: &ReferentialState) -> Result<InternalDissipation> {
        let per_mass = -self.dpsi_dq(s)?.dot(&self.heat_flux_rate(s)?);
        let rho = spatial_density(self.rho_r(), s.f.det())?;
        Ok(InternalDissipation {
            per_mass,
            spatial_density: rho * per_mass,
            referential_density: self.rho_r() * per_mass,
        })
    }

    /// `|ρη̇ − ρr/θ + DivQ/θ + ρ∂_Qψ̂·Q̇/θ|` with rates by forward differences
    /// and everything else at the start of the step.
    pub fn entropy_balance_residual(&self, x: &EntropySample) -> Result<f64> {
        let eta0 = self.entropy(&x.at)?;
        let eta1 = self.entropy(&x.at_next)?;
        let eta_dot = (eta1 - eta0) / x.dt;
        let q_dot = (x.at_next.q - x.at.q) * (1.0 / x.dt);
        let th = x.at.theta;
        let dq = self.dpsi_dq(&x.at)?;
        Ok((x.rho * eta_dot - x.rho * x.r / th + x.div_q / th + x.rho * dq.dot(&q_dot) / th).abs())
    }

    /// Partials of the full internal energy, used by the simulator's chain rule.
    pub fn energy_partials(&self, s: &ReferentialState) -> Result<EnergyPartials> {
        let zeroed;
        let s = if self.flux_channels {
            s
        } else {
            zeroed = s.with_q(Vec3::ZERO);
            &zeroed
        };
        if self.analytic() {
            if let Some(p) = self.model.internal_energy_partials(s) {
                return p;
            }
        }
        let eps = |x: &ReferentialState| self.internal_energy(x);
        Ok(EnergyPartials {
            d_theta: fd_theta(&eps, s, &self.scheme)?,
            d_f: fd_f(&eps, s, &self.scheme)?,
            d_w: fd_vector(&eps, s, Slot::W, &self.scheme)?,
            d_q: fd_vector(&eps, s, Slot::Q, &self.scheme)?,
        })
    }

    /// `ψ, η, ε, S, Π` and `∂_Qψ̂` without the rate and Cauchy-stress work of
    /// [`evaluate`](Self::evaluate).
    pub fn response(&self, s: &ReferentialState) -> Result<Response> {
        let d = self.derived_tensors(s)?;
        let g = self.psi0_gradients(s)?;
        let rho_r = self.rho_r();
        let psi0 = self.psi0(s)?;
        let q = &s.q;
        let pi = self.polarization_from(s, &d, &g);
        Ok(Response {
            psi: psi0 + d.z.quad(q, q) / (2.0 * s.theta * rho_r),
            eta: -g.d_theta + d.b.quad(q, q) / rho_r,
            eps: psi0 - s.theta * g.d_theta + d.a.quad(q, q) / rho_r + s.w.dot(&pi),
            s: g.d_f * rho_r + d.p_f.quad_contract(q),
            pi,
            dpsi_dq: (d.z + d.z.transpose()) * *q * (0.5 / (s.theta * rho_r)),
        })
    }

    pub fn evaluate(&self, s: &ReferentialState) -> Result<ConstitutiveOutput> {
        let d = self.derived_tensors(s)?;
        let g = self.psi0_gradients(s)?;
        let rho_r = self.rho_r();
        let psi0 = self.psi0(s)?;
        let q = &s.q;
        let psi = psi0 + d.z.quad(q, q) / (2.0 * s.theta * rho_r);
        let eta = -g.d_theta + d.b.quad(q, q) / rho_r;
        let pi = self.polarization_from(s, &d, &g);
        let eps = psi0 - s.theta * g.d_theta + d.a.quad(q, q) / rho_r + s.w.dot(&pi);
        let stress = g.d_f * rho_r + d.p_f.quad_contract(q);
        let q_dot = self.heat_flux_rate(s)?;
        let dq = (d.z + d.z.transpose()) * *q * (0.5 / (s.theta * rho_r));
        let tau_cauchy = cauchy_from_parts(&s.f, &stress, rho_r, &pi, &s.w)?;
        Ok(ConstitutiveOutput { psi, eta, eps, s: stress, pi, q_dot, delta0: -dq.dot(&q_dot), tau_cauchy })
    }

    /// Cauchy stress `τ = J⁻¹SFᵀ − P⊗E^M` with `E^M = F⁻ᵀW` and `P = ρFΠ`.
    pub fn cauchy_stress(&self, s: &ReferentialState) -> Result<Mat3> {
        let stress = self.stress(s)?;
        let pi = self.polarization(s)?;
        cauchy_from_parts(&s.f, &stress, self.rho_r(), &pi, &s.w)
    }

    /// `ρF(∂_Fψ̄)ᵀ` where `ψ̄(F) = ψ̂(F, θ, FᵀE^M, Q, G)` is differentiated by
    /// finite differences at fixed `E^M`. Equals the Cauchy stress for
    /// objective models.
    pub fn cauchy_stress_spatial_form(&self, s: &ReferentialState) -> Result<Mat3> {
        let e_m = push_covector(&s.f, s.w)?;
        let psi_bar = |x: &ReferentialState| {
            let y = ReferentialState { w: x.f.transpose() * e_m, ..*x };
            self.free_energy(&y)
        };
        let d = fd_f(&psi_bar, s, &self.scheme)?;
        let rho = spatial_density(self.rho_r(), s.f.det())?;
        Ok(s.f * d.transpose() * rho)
    }

    pub fn spatial_view(&self, s: &ReferentialState) -> Result<SpatialView> {
        let out = self.evaluate(s)?;
        let j = s.f.det();
        let rho = spatial_density(self.rho_r(), j)?;
        let e_m = push_covector(&s.f, s.w)?;
        let p = s.f * out.pi * rho;
        Ok(SpatialView {
            rho,
            q: push_flux(&s.f, s.q)?,
            g: push_covector(&s.f, s.g)?,
            e_m,
            p,
            d: electric_displacement(e_m, p),
            tau: out.tau_cauchy,
        })
    }

    /// Residuals of `ψ(RF) = ψ(F)` and `τ(RF) = Rτ(F)Rᵀ`, maximized over the
    /// rotations. The `τ` residual is scaled by `max(1, ‖τ‖)`.
    pub fn objectivity_check(&self, s: &ReferentialState, rotations: &[Mat3]) -> Result<ObjectivityResiduals> {
        let psi = self.free_energy(s)?;
        let tau = self.cauchy_stress(s)?;
        let scale = tau.norm_max().max(1.0);
        let mut out = ObjectivityResiduals { psi: 0.0, tau: 0.0 };
        for r in rotations {
            validate_rotation(r)?;
            let rs = ReferentialState { f: *r * s.f, ..*s };
            out.psi = out.psi.max((self.free_energy(&rs)? - psi).abs());
            let expected = *r * tau * r.transpose();
            out.tau = out.tau.max((self.cauchy_stress(&rs)? - expected).norm_max() / scale);
        }
        Ok(out)
    }
}

fn cauchy_from_parts(f: &Mat3, stress: &Mat3, rho_r: f64, pi: &Vec3, w: &Vec3) -> Result<Mat3> {
    let j = f.det();
    let rho = spatial_density(rho_r, j)?;
    let e_m = push_covector(f, *w)?;
    let p = *f * *pi * rho;
    Ok(cauchy_from_first_piola(f, stress, &p, &e_m))
}

/// `τ = J⁻¹SFᵀ − P⊗E^M`. Assumes `det F > 0`.
pub fn cauchy_from_first_piola(f: &Mat3, s: &Mat3, p: &Vec3, e_m: &Vec3) -> Mat3 {
    *s * f.transpose() * (1.0 / f.det()) - p.outer(e_m)
}

/// `S = J(τ + P⊗E^M)F⁻ᵀ`.
pub fn first_piola_from_cauchy(f: &Mat3, tau: &Mat3, p: &Vec3, e_m: &Vec3) -> Result<Mat3> {
    let j = f.det();
    let inv = f.inverse().ok_or(Error::NonInvertibleF { det: j })?;
    Ok((*tau + p.outer(e_m)) * inv.transpose() * j)
}

/// `½(E^M⊗P − P⊗E^M)`, the antisymmetric part the Cauchy stress must have.
pub fn expected_cauchy_skew(p: &Vec3, e_m: &Vec3) -> Mat3 {
    (e_m.outer(p) - p.outer(e_m)) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{CustomModel, IsotropicParams, PresetMaterial};

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

    fn constant(k: f64, t: f64) -> CustomModel {
        CustomModel::new("const", 1.0, 300.0, |_| 0.0, move |_| Mat3::scaled_identity(k), move |_| Mat3::scaled_identity(t))
            .unwrap()
    }

    #[test]
    fn z_from_k_and_t() {
        let m = constant(2.0, 0.5);
        let e = CattaneoEngine::new(&m);
        let d = e.derived_tensors(&ReferentialState::reference(2.0)).unwrap();
        assert!((d.z - Mat3::scaled_identity(0.25)).norm_max() < 1e-15);
        assert!((d.b - d.z * (1.0 / 8.0)).norm_max() < 1e-8);
        assert!(d.p_f.norm_max() < 1e-12);
    }

    #[test]
    fn singular_k_and_t() {
        let m = CustomModel::new("s", 1.0, 1.0, |_| 0.0, |_| Mat3::diag(1.0, 0.0, 1.0), |_| Mat3::IDENTITY).unwrap();
        assert!(matches!(CattaneoEngine::new(&m).z(&state()), Err(Error::SingularK { .. })));
        let m = CustomModel::new("s", 1.0, 1.0, |_| 0.0, |_| Mat3::IDENTITY, |_| Mat3::ZERO).unwrap();
        let e = CattaneoEngine::new(&m);
        assert!(matches!(e.z(&state()), Err(Error::SingularT { .. })));
        assert!(matches!(e.heat_flux_rate(&state()), Err(Error::SingularT { .. })));
    }

    #[test]
    fn free_energy_examples() {
        let m = constant(2.0, 0.5);
        let e = CattaneoEngine::new(&m);
        let s = ReferentialState { q: Vec3::unit(0), ..ReferentialState::reference(300.0) };
        assert!((e.free_energy(&s).unwrap() - 0.25 / 600.0).abs() < 1e-16);
        assert_eq!(e.free_energy(&s.with_q(Vec3::ZERO)).unwrap(), 0.0);
        let doubled = e.free_energy(&s.with_q(Vec3::new(2.0, 0.0, 0.0))).unwrap();
        assert!((doubled - 4.0 * e.free_energy(&s).unwrap()).abs() < 1e-16);
    }

    #[test]
    fn reference_state_is_quiet() {
        let m = PresetMaterial::isotropic(params()).unwrap();
        let e = CattaneoEngine::new(&m);
        let out = e.evaluate(&ReferentialState::reference(params().theta_ref)).unwrap();
        assert_eq!(out.eta, 0.0);
        assert_eq!(out.eps, 0.0);
        assert_eq!(out.s, Mat3::ZERO);
        assert_eq!(out.q_dot, Vec3::ZERO);
        assert_eq!(out.delta0, 0.0);
    }

    #[test]
    fn constant_z_energy_correction() {
        let m = PresetMaterial::isotropic(params()).unwrap();
        let e = CattaneoEngine::new(&m);
        let s = state();
        let eq = s.with_q(Vec3::ZERO);
        let z = e.z(&s).unwrap();
        let corr = e.internal_energy(&s).unwrap() - e.internal_energy(&eq).unwrap();
        assert!((corr - z.quad(&s.q, &s.q) / (s.theta * params().rho_r)).abs() < 1e-14);
    }

    #[test]
    fn entropy_is_minus_theta_gradient() {
        let m = PresetMaterial::theta_dependent(params()).unwrap();
        let e = CattaneoEngine::new(&m);
        let s = state();
        let psi = |x: &ReferentialState| e.free_energy(x);
        let fd = -fd_theta(&psi, &s, &FdScheme::fourth_order()).unwrap();
        assert!((e.entropy(&s).unwrap() - fd).abs() < 1e-6);
        let eq = s.with_q(Vec3::ZERO);
        let psi0 = |x: &ReferentialState| e.free_energy(x);
        let fd0 = -fd_theta(&psi0, &eq, &FdScheme::fourth_order()).unwrap();
        assert!((e.entropy(&s).unwrap() - e.entropy(&eq).unwrap() - (fd - fd0)).abs() < 1e-6);
    }

    #[test]
    fn fd_and_analytic_sources_agree() {
        let m = PresetMaterial::theta_dependent(params()).unwrap();
        let s = state();
        let a = CattaneoEngine::new(&m).evaluate(&s).unwrap();
        let b = CattaneoEngine::new(&m).with_source(DerivativeSource::FiniteDifference).evaluate(&s).unwrap();
        assert!((a.eta - b.eta).abs() < 1e-7);
        assert!((a.eps - b.eps).abs() < 1e-7);
        assert!((a.s - b.s).norm_max() < 1e-7);
        assert!((a.pi - b.pi).norm_max() < 1e-7);
    }

    #[test]
    fn gibbs_relation_holds_at_nonzero_flux() {
        let m = PresetMaterial::theta_dependent(params()).unwrap();
        let e = CattaneoEngine::new(&m);
        let s = state();
        let o = e.evaluate(&s).unwrap();
        assert!((o.eps - (o.psi + s.theta * o.eta + s.w.dot(&o.pi))).abs() < 1e-12);
    }

    #[test]
    fn relaxation_and_inversion() {
        let m = PresetMaterial::isotropic(params()).unwrap();
        let e = CattaneoEngine::new(&m);
        let s = state().with_g(Vec3::ZERO);
        let qd = e.heat_flux_rate(&s).unwrap();
        assert!((qd + s.q * (1.0 / params().tau)).norm_max() < 1e-15);
        let s = state();
        let back = e.invert_evolution(s.f, s.theta, s.w, s.g, e.heat_flux_rate(&s).unwrap()).unwrap();
        assert!((back - s.q).norm_max() < 1e-12);
        let steady = e.invert_evolution(s.f, s.theta, s.w, s.g, Vec3::ZERO).unwrap();
        assert!((steady + s.g * params().kappa).norm_max() < 1e-15);
        let q0 = Vec3::new(1.0, -2.0, 0.5);
        let relaxed = e.invert_evolution(s.f, s.theta, s.w, Vec3::ZERO, q0 * (-1.0 / params().tau)).unwrap();
        assert!((relaxed - q0).norm_max() < 1e-15);
    }

    #[test]
    fn dissipation_for_admissible_model() {
        let m = PresetMaterial::isotropic(params()).unwrap();
        let e = CattaneoEngine::new(&m);
        let s = state();
        let d = e.reduced_dissipation(&s).unwrap();
        // For symmetric Z the dissipation is −Q·K⁻¹Q.
        let k_inv = m.conductivity(&s).unwrap().inverse().unwrap();
        assert!((d + k_inv.quad(&s.q, &s.q)).abs() < 1e-14);
        assert!(d < 0.0);
        assert_eq!(e.internal_dissipation(&s.with_q(Vec3::ZERO)).unwrap().per_mass, 0.0);
    }

    #[test]
    fn internal_dissipation_densities() {
        let m = PresetMaterial::isotropic(params()).unwrap();
        let e = CattaneoEngine::new(&m);
        let s = state();
        let d = e.internal_dissipation(&s).unwrap();
        let j = s.f.det();
        assert!((d.spatial_density - d.per_mass * params().rho_r / j).abs() < 1e-14);
        assert!((d.referential_density - d.per_mass * params().rho_r).abs() < 1e-14);
        assert!((d.per_mass - e.evaluate(&s).unwrap().delta0).abs() < 1e-15);
    }

    #[test]
    fn cauchy_skew_part() {
        let m = PresetMaterial::isotropic(params()).unwrap();
        let e = CattaneoEngine::new(&m);
        let s = state();
        let v = e.spatial_view(&s).unwrap();
        let skew = v.tau.skew();
        assert!((skew - expected_cauchy_skew(&v.p, &v.e_m)).norm_max() < 1e-12);
        let free = s;
        let no_field = ReferentialState { w: Vec3::ZERO, ..free };
        assert!(e.cauchy_stress(&no_field).unwrap().skew().norm_max() < 1e-15);
    }

    #[test]
    fn cauchy_round_trip_and_spatial_form() {
        let m = PresetMaterial::isotropic(params()).unwrap();
        let e = CattaneoEngine::new(&m);
        let s = state();
        let v = e.spatial_view(&s).unwrap();
        let stress = e.stress(&s).unwrap();
        let back = first_piola_from_cauchy(&s.f, &v.tau, &v.p, &v.e_m).unwrap();
        assert!((back - stress).norm_max() < 1e-12);
        let spatial = e.cauchy_stress_spatial_form(&s).unwrap();
        assert!((spatial - v.tau).norm_max() < 1e-6);
    }

    #[test]
    fn identity_rotation_is_exact() {
        let m = PresetMaterial::isotropic(params()).unwrap();
        let r = CattaneoEngine::new(&m).objectivity_check(&state(), &[Mat3::IDENTITY]).unwrap();
        assert_eq!(r.psi, 0.0);
        assert_eq!(r.tau, 0.0);
        let err = CattaneoEngine::new(&m).objectivity_check(&state(), &[Mat3::diag(-1.0, 1.0, 1.0)]);
        assert!(matches!(err, Err(Error::NotARotation { .. })));
    }

    #[test]
    fn static_entropy_residual() {
        let m = PresetMaterial::isotropic(params()).unwrap();
        let e = CattaneoEngine::new(&m);
        let s = ReferentialState::reference(params().theta_ref);
        let x = EntropySample { at: s, at_next: s, dt: 0.1, r: 0.0, div_q: 0.0, rho: params().rho_r };
        assert_eq!(e.entropy_balance_residual(&x).unwrap(), 0.0);
    }

    #[test]
    fn non_positive_temperature_rejected() {
        let m = PresetMaterial::isotropic(params()).unwrap();
        let e = CattaneoEngine::new(&m);
        let s = ReferentialState { theta: 0.0, ..state() };
        assert!(matches!(e.free_energy(&s), Err(Error::NonPositiveTemperature(_))));
    }
}
