//! Classical heat conduction: the heat flux is a response function of the
//! state and the free energy carries no flux dependence.
//!
//! A [`FourierModel`] reuses the Cattaneo machinery with every `∂_Qψ` channel
//! switched off ([`CattaneoEngine::fourier_limit`]). The linear Cattaneo law
//! collapses onto it at steady state, `Q = −K̂G`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::audit::{
    aggregate, entropy_equality_residual, gradient_independence_residual, names, run_check, AuditConfig, AuditReport,
    Criterion, Samples, PATH_SCHEME,
};
use crate::engine::CattaneoEngine;
use crate::error::Result;
use crate::fd::{derivative, fd_theta, fd_vector, Slot};
use crate::kinematics::ReferentialState;
use crate::linalg::Vec3;
use crate::material::MaterialModel;

type FluxFn = dyn Fn(&ReferentialState) -> Result<Vec3> + Send + Sync;

#[derive(Clone)]
pub struct FourierModel {
    name: String,
    base: Arc<dyn MaterialModel>,
    flux: Arc<FluxFn>,
}

impl std::fmt::Debug for FourierModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierModel").field("name", &self.name).field("base", &self.base.name()).finish()
    }
}

impl FourierModel {
    /// `flux` maps `(F, θ, W, G)` to the referential heat flux; the `Q` slot of
    /// the state it receives is always zero.
    pub fn new(
        name: impl Into<String>,
        base: Arc<dyn MaterialModel>,
        flux: impl Fn(&ReferentialState) -> Result<Vec3> + Send + Sync + 'static,
    ) -> Self {
        FourierModel { name: name.into(), base, flux: Arc::new(flux) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn base(&self) -> &dyn MaterialModel {
        self.base.as_ref()
    }

    pub fn base_arc(&self) -> Arc<dyn MaterialModel> {
        Arc::clone(&self.base)
    }

    /// Engine over the base model with the flux channels removed.
    pub fn engine(&self) -> CattaneoEngine<'_> {
        CattaneoEngine::new(self.base.as_ref()).fourier_limit()
    }

    /// Referential heat flux `Q = q̂(F, θ, W, G)`.
    pub fn heat_flux(&self, s: &ReferentialState) -> Result<Vec3> {
        (self.flux)(&s.with_q(Vec3::ZERO))
    }

    /// `δ₀ = −∂_Qψ·Q̇`. The free energy has no `Q` argument, so this is zero
    /// whatever the rate.
    pub fn internal_dissipation(&self, s: &ReferentialState, q_dot: Vec3) -> Result<f64> {
        Ok(-self.engine().dpsi_dq(s)?.dot(&q_dot))
    }
}

/// Steady-state limit of the linear Cattaneo law: `Q = −K̂(F, θ, W)G`.
pub fn fourier_from_cattaneo(model: Arc<dyn MaterialModel>) -> FourierModel {
    let base = Arc::clone(&model);
    let name = format!("{} (fourier)", model.name());
    FourierModel::new(name, model, move |s| Ok(-(base.conductivity(s)? * s.g)))
}

pub fn fourier_audit(fm: &FourierModel, cfg: &AuditConfig) -> Result<AuditReport> {
    cfg.validate()?;
    let tol = &cfg.tolerances;
    let floor = tol.relative_floor;
    let engine = fm.engine().with_scheme(cfg.scheme);
    let scheme = cfg.scheme;
    let sm = Samples::draw(cfg, fm.base().reference_temperature());
    let states: Vec<_> = sm.states.iter().map(|s| s.with_q(Vec3::ZERO)).collect();
    let states = &states;
    let psi = |s: &ReferentialState| engine.free_energy(s);
    let rel = |d: f64, a: f64, b: f64| d / a.max(b).max(floor);
    use names::*;

    let mut checks = Vec::new();
    checks.push(run_check(ENTROPY_GRADIENT, tol.gradient, Criterion::AtMost, states, None, |_, s| {
        let a = engine.entropy(s)?;
        let b = -fd_theta(&psi, s, &scheme)?;
        Ok(rel((a - b).abs(), a.abs(), b.abs()))
    }));
    checks.push(run_check(CAUCHY_SPATIAL_FORM, tol.gradient, Criterion::AtMost, states, None, |_, s| {
        let a = engine.cauchy_stress(s)?;
        let b = engine.cauchy_stress_spatial_form(s)?;
        Ok(rel((a - b).norm_max(), a.norm_max(), b.norm_max()))
    }));
    checks.push(run_check(POLARIZATION_GRADIENT, tol.gradient, Criterion::AtMost, states, None, |_, s| {
        let a = engine.polarization(s)?;
        let b = -fd_vector(&psi, s, Slot::W, &scheme)?;
        Ok(rel((a - b).norm_max(), a.norm_max(), b.norm_max()))
    }));
    checks.push(run_check(GRADIENT_INDEPENDENCE, tol.gradient_independence, Criterion::AtMost, states, None, |i, s| {
        gradient_independence_residual(&psi, s, sm.g_perturbations[i])
    }));
    checks.push(run_check(
        FOURIER_INEQUALITY,
        tol.dissipation_slack,
        Criterion::AtMost,
        &sm.dissipation_states,
        Some("residual is the largest value of Q . G".into()),
        |_, s| Ok(fm.heat_flux(s)?.dot(&s.g)),
    ));
    checks.push(run_check(STATIC_FLUX, 0.0, Criterion::AtMost, states, None, |_, s| {
        Ok(fm.heat_flux(&s.with_g(Vec3::ZERO))?.norm_max())
    }));
    // The rate fed to δ₀ is the flux's own rate along a random path.
    let dissipation: Vec<_> = states
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let r = sm.rates[i];
            let q_dot = derivative(|t| fm.heat_flux(&r.advance(s, t)), 0.0, &PATH_SCHEME);
            (q_dot.and_then(|qd| fm.internal_dissipation(s, qd)).map(f64::abs), *s)
        })
        .collect();
    checks.push(aggregate(INTERNAL_DISSIPATION_ZERO, 0.0, Criterion::AtMost, dissipation, None));
    checks.push(run_check(ENTROPY_EQUALITY, tol.entropy_equality, Criterion::AtMost, states, None, |i, s| {
        entropy_equality_residual(&engine, s, &sm.rates[i], floor)
    }));

    Ok(AuditReport::new(fm.name(), cfg.seed, checks))
}
