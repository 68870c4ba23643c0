//! Seeded audit of the thermodynamic restrictions on a material model.
//!
//! States are drawn from a fixed-seed ChaCha stream, every check is evaluated
//! on every state (in parallel), and the per-check maxima are folded into an
//! [`AuditReport`] in state order, so a given seed always yields the same
//! report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{CattaneoEngine, DerivativeSource};
use crate::error::{Error, Result};
use crate::fd::{derivative, fd_f, fd_tensor_f, fd_tensor_w, fd_theta, fd_vector, FdScheme, Slot};
use crate::kinematics::{definiteness_margin, symmetry_defect, ReferentialState};
use crate::linalg::{rotation_from_quaternion, Mat3, Vec3};
use crate::material::MaterialModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative tolerance of the gradient relations.
    pub gradient: f64,
    /// Denominator floor of relative residuals.
    pub relative_floor: f64,
    pub gradient_independence: f64,
    pub dissipation_slack: f64,
    /// `K` must have definiteness margin above this.
    pub positive_definite: f64,
    pub symmetry: f64,
    pub equilibrium_rate: f64,
    pub energy_consistency: f64,
    pub a_identity: f64,
    pub quadratic_structure: f64,
    pub entropy_equality: f64,
    pub psi_objectivity: f64,
    pub tau_objectivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gradient: 1e-5,
            relative_floor: 1e-3,
            gradient_independence: 1e-12,
            dissipation_slack: 1e-12,
            positive_definite: 0.0,
            symmetry: 1e-10,
            equilibrium_rate: 0.0,
            energy_consistency: 1e-10,
            a_identity: 1e-6,
            quadratic_structure: 1e-12,
            entropy_equality: 1e-6,
            psi_objectivity: 1e-12,
            tau_objectivity: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditConfig {
    pub samples: usize,
    pub dissipation_samples: usize,
    pub seed: u64,
    pub scheme: FdScheme,
    pub tolerances: Tolerances,
    /// Rotations applied per state in the objectivity check.
    pub rotations: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            samples: 100,
            dissipation_samples: 10_000,
            seed: 0,
            scheme: FdScheme::default(),
            tolerances: Tolerances::default(),
            rotations: 4,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(crate::error::invalid("samples", "must be >= 1"));
        }
        self.scheme.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    /// State with the worst residual.
    pub state: Option<ReferentialState>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub model: String,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub verdict: Verdict,
}

impl AuditReport {
    pub fn new(model: impl Into<String>, seed: u64, checks: Vec<CheckRecord>) -> Self {
        let verdict = if checks.iter().all(|c| c.pass) { Verdict::Pass } else { Verdict::Fail };
        AuditReport { model: model.into(), seed, checks, verdict }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Which way a residual is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Criterion {
    /// Pass iff every residual is `<= tol`; reports the maximum.
    AtMost,
    /// Pass iff every residual is `> tol`; reports the minimum.
    Above,
}

/// Folds per-state residuals into one record, in state order.
pub(crate) fn aggregate(
    name: &str,
    tol: f64,
    criterion: Criterion,
    values: Vec<(Result<f64>, ReferentialState)>,
    note: Option<String>,
) -> CheckRecord {
    let mut worst: Option<(f64, ReferentialState)> = None;
    let mut pass = true;
    let mut first_error: Option<Error> = None;
    for (value, state) in values {
        let r = match value {
            Ok(r) if !r.is_nan() => r,
            Ok(_) => {
                first_error.get_or_insert(Error::EvaluationFailed("residual is NaN".into()));
                f64::NAN
            }
            Err(e) => {
                first_error.get_or_insert(e);
                f64::NAN
            }
        };
        let failed_eval = r.is_nan();
        let r = match (failed_eval, criterion) {
            (true, Criterion::AtMost) => f64::MAX,
            (true, Criterion::Above) => f64::MIN,
            (false, _) => r,
        };
        let ok = !failed_eval
            && match criterion {
                Criterion::AtMost => r <= tol,
                Criterion::Above => r > tol,
            };
        pass &= ok;
        let worse = match (&worst, criterion) {
            (None, _) => true,
            (Some((w, _)), Criterion::AtMost) => r > *w,
            (Some((w, _)), Criterion::Above) => r < *w,
        };
        if worse {
            worst = Some((r, state));
        }
    }
    let note = match (note, first_error) {
        (n, None) => n,
        (None, Some(e)) => Some(format!("evaluation failed: {e}")),
        (Some(n), Some(e)) => Some(format!("{n}; evaluation failed: {e}")),
    };
    let (residual, state) = match worst {
        Some((r, s)) => (r, Some(s)),
        None => (0.0, None),
    };
    CheckRecord { name: name.to_string(), residual, tol, pass, state, note }
}

/// Runs `f` on every state in parallel and aggregates.
pub(crate) fn run_check<F>(
    name: &str,
    tol: f64,
    criterion: Criterion,
    states: &[ReferentialState],
    note: Option<String>,
    f: F,
) -> CheckRecord
where
    F: Fn(usize, &ReferentialState) -> Result<f64> + Sync,
{
    let values: Vec<_> = states.par_iter().enumerate().map(|(i, s)| (f(i, s), *s)).collect();
    aggregate(name, tol, criterion, values, note)
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, floor)` in the max norm.
pub fn relative_residual(diff: f64, a: f64, b: f64, floor: f64) -> f64 {
    diff / a.max(b).max(floor)
}

fn rel_scalar(a: f64, b: f64, floor: f64) -> f64 {
    relative_residual((a - b).abs(), a.abs(), b.abs(), floor)
}

fn rel_vec(a: Vec3, b: Vec3, floor: f64) -> f64 {
    relative_residual((a - b).norm_max(), a.norm_max(), b.norm_max(), floor)
}

fn rel_mat(a: Mat3, b: Mat3, floor: f64) -> f64 {
    relative_residual((a - b).norm_max(), a.norm_max(), b.norm_max(), floor)
}

fn uniform_ball(rng: &mut ChaCha8Rng) -> Vec3 {
    // Uniform direction by rejection from the cube, uniform norm in [0, 1].
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            let r: f64 = rng.gen_range(0.0..=1.0);
            return v * (r / n);
        }
    }
}

/// `F = I + 0.3U`, `U` uniform in `[−1, 1]⁹`, rejected while `det F <= 0.2`;
/// `θ` uniform in `[0.5, 2]·θ_ref`; `W`, `Q`, `G` with uniform direction and
/// norm uniform in `[0, 1]`.
pub fn sample_state(rng: &mut ChaCha8Rng, theta_ref: f64) -> ReferentialState {
    let f = loop {
        let mut f = Mat3::IDENTITY;
        for i in 0..3 {
            for k in 0..3 {
                f[i][k] += 0.3 * rng.gen_range(-1.0..=1.0);
            }
        }
        if f.det() > 0.2 {
            break f;
        }
    };
    let theta = theta_ref * rng.gen_range(0.5..=2.0);
    let w = uniform_ball(rng);
    let q = uniform_ball(rng);
    let g = uniform_ball(rng);
    ReferentialState { f, theta, w, q, g }
}

pub fn sample_states(seed: u64, stream: u64, count: usize, theta_ref: f64) -> Vec<ReferentialState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| sample_state(&mut rng, theta_ref)).collect()
}

pub fn sample_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    loop {
        let q = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n2: f64 = q.iter().map(|x| x * x).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            return rotation_from_quaternion(q);
        }
    }
}

pub fn sample_rotations(seed: u64, stream: u64, count: usize) -> Vec<Mat3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count).map(|_| sample_rotation(&mut rng)).collect()
}

/// Rates along which the entropy equality is probed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub f: Mat3,
    pub theta: f64,
    pub w: Vec3,
    pub q: Vec3,
}

impl Rates {
    pub fn advance(&self, s: &ReferentialState, t: f64) -> ReferentialState {
        ReferentialState {
            f: s.f + self.f * t,
            theta: s.theta + self.theta * t,
            w: s.w + self.w * t,
            q: s.q + self.q * t,
            g: s.g,
        }
    }
}

fn sample_rates(seed: u64, stream: u64, count: usize, theta_ref: f64) -> Vec<Rates> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..count)
        .map(|_| {
            let mut f = Mat3::ZERO;
            for i in 0..3 {
                for k in 0..3 {
                    f[i][k] = rng.gen_range(-1.0..=1.0);
                }
            }
            Rates { f, theta: theta_ref * rng.gen_range(-1.0..=1.0), w: uniform_ball(&mut rng), q: uniform_ball(&mut rng) }
        })
        .collect()
}

const STATE_STREAM: u64 = 0;
const DISSIPATION_STREAM: u64 = 1;
const ROTATION_STREAM: u64 = 2;
const RATE_STREAM: u64 = 3;
const PERTURBATION_STREAM: u64 = 4;

/// Step for derivatives along a path parameter, which starts at 0.
pub(crate) const PATH_SCHEME: FdScheme = FdScheme { relative_step: 0.0, floor: 1e-5, order: 4 };

pub mod names {
    pub const ENTROPY_GRADIENT: &str = "entropy_gradient";
    pub const STRESS_GRADIENT: &str = "stress_gradient";
    pub const POLARIZATION_GRADIENT: &str = "polarization_gradient";
    pub const HEAT_FLUX_GRADIENT: &str = "heat_flux_gradient";
    pub const GRADIENT_INDEPENDENCE: &str = "gradient_independence";
    pub const REDUCED_DISSIPATION: &str = "reduced_dissipation";
    pub const CONDUCTIVITY_PD: &str = "conductivity_positive_definite";
    pub const RELAXATION_SYMMETRY: &str = "relaxation_factor_symmetry";
    pub const EQUILIBRIUM_RATE: &str = "equilibrium_flux_rate";
    pub const ENERGY_CONSISTENCY: &str = "energy_consistency";
    pub const A_IDENTITY: &str = "a_identity";
    pub const QUADRATIC_STRUCTURE: &str = "quadratic_structure";
    pub const ANALYTIC_OVERRIDES: &str = "analytic_overrides";
    pub const ENTROPY_EQUALITY: &str = "entropy_equality";
    pub const CAUCHY_SPATIAL_FORM: &str = "cauchy_stress_spatial_form";
    pub const PSI_OBJECTIVITY: &str = "free_energy_objectivity";
    pub const TAU_OBJECTIVITY: &str = "cauchy_stress_equivariance";
    pub const FOURIER_INEQUALITY: &str = "fourier_inequality";
    pub const STATIC_FLUX: &str = "static_flux";
    pub const INTERNAL_DISSIPATION_ZERO: &str = "internal_dissipation_zero";
}

/// States plus the auxiliary random data shared by the Cattaneo and Fourier
/// audits.
pub(crate) struct Samples {
    pub states: Vec<ReferentialState>,
    pub dissipation_states: Vec<ReferentialState>,
    pub rotations: Vec<Mat3>,
    pub rates: Vec<Rates>,
    pub g_perturbations: Vec<Vec3>,
}

impl Samples {
    pub fn draw(cfg: &AuditConfig, theta_ref: f64) -> Self {
        let n = cfg.samples;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(PERTURBATION_STREAM);
        Samples {
            states: sample_states(cfg.seed, STATE_STREAM, n, theta_ref),
            dissipation_states: sample_states(cfg.seed, DISSIPATION_STREAM, cfg.dissipation_samples, theta_ref),
            rotations: sample_rotations(cfg.seed, ROTATION_STREAM, cfg.rotations),
            rates: sample_rates(cfg.seed, RATE_STREAM, n, theta_ref),
            g_perturbations: (0..n).map(|_| uniform_ball(&mut rng)).collect(),
        }
    }
}

pub(crate) const POLARIZATION_NOTE: &str = "polarization includes the flux-quadratic term -Q.(dZ/dW)Q/(2 theta rho_R), \
     so it is compared with -dpsi/dW of the full free energy";

/// `|ψ(G') − ψ(G)|` over `G' ∈ {0, G + δ, 2G}`.
pub(crate) fn gradient_independence_residual(
    psi: &dyn Fn(&ReferentialState) -> Result<f64>,
    s: &ReferentialState,
    delta: Vec3,
) -> Result<f64> {
    let base = psi(s)?;
    let mut r = 0.0_f64;
    for g in [Vec3::ZERO, s.g + delta, s.g * 2.0] {
        r = r.max((psi(&s.with_g(g))? - base).abs());
    }
    Ok(r)
}

/// Referential Coleman–Noll audit of a Cattaneo material.
pub fn coleman_noll_audit(model: &dyn MaterialModel, cfg: &AuditConfig) -> Result<AuditReport> {
    cfg.validate()?;
    let tol = &cfg.tolerances;
    let floor = tol.relative_floor;
    let engine = CattaneoEngine::new(model).with_scheme(cfg.scheme);
    let fd_engine = engine.with_source(DerivativeSource::FiniteDifference);
    let sm = Samples::draw(cfg, model.reference_temperature());
    let states = &sm.states;
    let scheme = cfg.scheme;
    let rho_r = model.reference_density();
    let psi = |s: &ReferentialState| engine.free_energy(s);

    let mut checks = Vec::new();
    use names::*;

    checks.push(run_check(ENTROPY_GRADIENT, tol.gradient, Criterion::AtMost, states, None, |_, s| {
        Ok(rel_scalar(engine.entropy(s)?, -fd_theta(&psi, s, &scheme)?, floor))
    }));
    checks.push(run_check(STRESS_GRADIENT, tol.gradient, Criterion::AtMost, states, None, |_, s| {
        Ok(rel_mat(engine.stress(s)?, fd_f(&psi, s, &scheme)? * rho_r, floor))
    }));
    checks.push(run_check(
        POLARIZATION_GRADIENT,
        tol.gradient,
        Criterion::AtMost,
        states,
        Some(POLARIZATION_NOTE.into()),
        |_, s| Ok(rel_vec(engine.polarization(s)?, -fd_vector(&psi, s, Slot::W, &scheme)?, floor)),
    ));
    checks.push(run_check(HEAT_FLUX_GRADIENT, tol.gradient, Criterion::AtMost, states, None, |_, s| {
        Ok(rel_vec(engine.dpsi_dq(s)?, fd_vector(&psi, s, Slot::Q, &scheme)?, floor))
    }));
    checks.push(run_check(GRADIENT_INDEPENDENCE, tol.gradient_independence, Criterion::AtMost, states, None, |i, s| {
        gradient_independence_residual(&psi, s, sm.g_perturbations[i])
    }));
    checks.push(run_check(
        REDUCED_DISSIPATION,
        tol.dissipation_slack,
        Criterion::AtMost,
        &sm.dissipation_states,
        Some("residual is the largest value of rho_R theta dpsi/dQ . H + Q . G".into()),
        |_, s| engine.reduced_dissipation(s),
    ));
    checks.push(run_check(
        CONDUCTIVITY_PD,
        tol.positive_definite,
        Criterion::Above,
        states,
        Some("residual is the smallest leading minor or probe value of sym(K)".into()),
        |_, s| Ok(definiteness_margin(&model.conductivity(s)?)),
    ));
    checks.push(run_check(RELAXATION_SYMMETRY, tol.symmetry, Criterion::AtMost, states, None, |_, s| {
        Ok(symmetry_defect(&engine.z(s)?))
    }));
    checks.push(run_check(EQUILIBRIUM_RATE, tol.equilibrium_rate, Criterion::AtMost, states, None, |_, s| {
        Ok(engine.heat_flux_rate(&s.equilibrium())?.norm_max())
    }));
    checks.push(run_check(ENERGY_CONSISTENCY, tol.energy_consistency, Criterion::AtMost, states, None, |_, s| {
        let eq = s.with_q(Vec3::ZERO);
        let o = engine.evaluate(&eq)?;
        Ok((o.eps - (o.psi + eq.theta * o.eta + eq.w.dot(&o.pi))).abs())
    }));
    checks.push(run_check(A_IDENTITY, tol.a_identity, Criterion::AtMost, states, None, |_, s| {
        let a = fd_engine.derived_tensors(s)?.a;
        Ok((fd_engine.a_from_scaled_derivative(s)? - a).norm_max())
    }));
    checks.push(run_check(QUADRATIC_STRUCTURE, tol.quadratic_structure, Criterion::AtMost, states, None, |_, s| {
        quadratic_structure_residual(&engine, s)
    }));
    checks.push(run_check(ANALYTIC_OVERRIDES, tol.gradient, Criterion::AtMost, states, overrides_note(model, states), |_, s| {
        analytic_override_residual(&engine, s, floor)
    }));
    checks.push(run_check(ENTROPY_EQUALITY, tol.entropy_equality, Criterion::AtMost, states, None, |i, s| {
        entropy_equality_residual(&engine, s, &sm.rates[i], floor)
    }));
    checks.push(run_check(CAUCHY_SPATIAL_FORM, tol.gradient, Criterion::AtMost, states, None, |_, s| {
        Ok(rel_mat(engine.cauchy_stress(s)?, engine.cauchy_stress_spatial_form(s)?, floor))
    }));
    let objectivity: Vec<_> = states.par_iter().map(|s| (engine.objectivity_check(s, &sm.rotations), *s)).collect();
    checks.push(aggregate(
        PSI_OBJECTIVITY,
        tol.psi_objectivity,
        Criterion::AtMost,
        objectivity.iter().map(|(r, s)| (r.as_ref().map(|r| r.psi).map_err(Clone::clone), *s)).collect(),
        None,
    ));
    checks.push(aggregate(
        TAU_OBJECTIVITY,
        tol.tau_objectivity,
        Criterion::AtMost,
        objectivity.into_iter().map(|(r, s)| (r.map(|r| r.tau), s)).collect(),
        None,
    ));

    Ok(AuditReport::new(model.name(), cfg.seed, checks))
}

/// Largest of `|f(2Q) − f(0) − 4(f(Q) − f(0))| / max(1, |f|)` over
/// `ψ, η, ε, S, Π`.
fn quadratic_structure_residual(engine: &CattaneoEngine<'_>, s: &ReferentialState) -> Result<f64> {
    let o0 = engine.evaluate(&s.with_q(Vec3::ZERO))?;
    let o1 = engine.evaluate(s)?;
    let o2 = engine.evaluate(&s.with_q(s.q * 2.0))?;
    let scalar = |a: f64, b: f64, c: f64| ((c - a) - 4.0 * (b - a)).abs() / c.abs().max(1.0);
    let mut r = scalar(o0.psi, o1.psi, o2.psi);
    r = r.max(scalar(o0.eta, o1.eta, o2.eta));
    r = r.max(scalar(o0.eps, o1.eps, o2.eps));
    r = r.max(((o2.s - o0.s) - (o1.s - o0.s) * 4.0).norm_max() / o2.s.norm_max().max(1.0));
    r = r.max(((o2.pi - o0.pi) - (o1.pi - o0.pi) * 4.0).norm_max() / o2.pi.norm_max().max(1.0));
    Ok(r)
}

fn overrides_note(model: &dyn MaterialModel, states: &[ReferentialState]) -> Option<String> {
    let s = states.first()?;
    let mut have = Vec::new();
    if model.equilibrium_gradients(s).is_some() {
        have.push("psi0 gradients");
    }
    if model.relaxation_factor_derivatives(s).is_some() {
        have.push("Z derivatives");
    }
    if model.internal_energy_partials(s).is_some() {
        have.push("internal energy partials");
    }
    Some(if have.is_empty() {
        "model has no analytic overrides".to_string()
    } else {
        format!("compares analytic {} with finite differences", have.join(", "))
    })
}

/// Analytic overrides against finite differences of the underlying functions.
fn analytic_override_residual(engine: &CattaneoEngine<'_>, s: &ReferentialState, floor: f64) -> Result<f64> {
    let model = engine.model();
    let scheme = engine.scheme;
    let mut r = 0.0_f64;
    if let Some(g) = model.equilibrium_gradients(s) {
        let g = g?;
        let psi0 = |x: &ReferentialState| model.equilibrium_free_energy(x);
        r = r.max(rel_mat(g.d_f, fd_f(&psi0, s, &scheme)?, floor));
        r = r.max(rel_scalar(g.d_theta, fd_theta(&psi0, s, &scheme)?, floor));
        r = r.max(rel_vec(g.d_w, fd_vector(&psi0, s, Slot::W, &scheme)?, floor));
    }
    if let Some(d) = model.relaxation_factor_derivatives(s) {
        let d = d?;
        let z = |x: &ReferentialState| engine.z(x);
        r = r.max(rel_mat(d.d_theta, fd_theta(&z, s, &scheme)?, floor));
        let df = fd_tensor_f(&z, s, &scheme)?;
        r = r.max(relative_residual(
            (d.d_f - df).norm_max(),
            d.d_f.norm_max(),
            df.norm_max(),
            floor,
        ));
        let dw = fd_tensor_w(&z, s, &scheme)?;
        for k in 0..3 {
            r = r.max(rel_mat(d.d_w[k], dw[k], floor));
        }
    }
    if let Some(p) = model.internal_energy_partials(s) {
        let p = p?;
        let eps = |x: &ReferentialState| engine.internal_energy(x);
        r = r.max(rel_scalar(p.d_theta, fd_theta(&eps, s, &scheme)?, floor));
        r = r.max(rel_mat(p.d_f, fd_f(&eps, s, &scheme)?, floor));
        r = r.max(rel_vec(p.d_w, fd_vector(&eps, s, Slot::W, &scheme)?, floor));
        r = r.max(rel_vec(p.d_q, fd_vector(&eps, s, Slot::Q, &scheme)?, floor));
    }
    Ok(r)
}

/// Along the path `s + t·rates`, the energy balance with the entropy equality
/// substituted reads `ε̇ = S:Ḟ/ρ_R + W·Π̇ + θη̇ + ∂_Qψ̂·Q̇`. Returns the relative
/// defect at `t = 0`.
pub(crate) fn entropy_equality_residual(
    engine: &CattaneoEngine<'_>,
    s: &ReferentialState,
    rates: &Rates,
    floor: f64,
) -> Result<f64> {
    let eps_dot = derivative(|t| engine.internal_energy(&rates.advance(s, t)), 0.0, &PATH_SCHEME)?;
    let eta_dot = derivative(|t| engine.entropy(&rates.advance(s, t)), 0.0, &PATH_SCHEME)?;
    let pi_dot = derivative(|t| engine.polarization(&rates.advance(s, t)), 0.0, &PATH_SCHEME)?;
    let stress = engine.stress(s)?;
    let dq = engine.dpsi_dq(s)?;
    let power = stress.ddot(&rates.f) / engine.rho_r();
    let terms = [power, s.w.dot(&pi_dot), s.theta * eta_dot, dq.dot(&rates.q)];
    let rhs: f64 = terms.iter().sum();
    let scale = terms.iter().fold(eps_dot.abs(), |m, t| m.max(t.abs()));
    Ok(relative_residual((eps_dot - rhs).abs(), scale, 0.0, floor))
}
