//! Staggered-grid semi-discretization and explicit Runge–Kutta stepping.
//!
//! Faces carry `u`, `v` and `Q`; cells carry `F`, `θ` and the quasi-static
//! `W`. A cell sees the flux of both of its faces: every cell quantity is the
//! mean of the responses evaluated with the left and with the right face flux.
//! This keeps the discrete entropy and energy balances in flux form.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::engine::CattaneoEngine;
use crate::error::{Error, Result};
use crate::fourier::{fourier_from_cattaneo, FourierModel};
use crate::kinematics::ReferentialState;
use crate::linalg::{Mat3, Vec3};
use crate::material::MaterialModel;

use super::electro::{solve_electrostatics, ElectroSolution};
use super::output::{fit_front_speed, front_position, RunOutput, RunReport, Snapshot};
use super::{Integrator, Mode, Scenario, Support, ThermalBc, MAX_CFL};

/// Prognostic fields.
#[derive(Debug, Clone, PartialEq)]
struct Fields {
    u: Vec<f64>,
    v: Vec<f64>,
    f: Vec<f64>,
    theta: Vec<f64>,
    q: Vec<f64>,
}

impl Fields {
    fn zeros(n: usize) -> Self {
        Fields { u: vec![0.0; n + 1], v: vec![0.0; n + 1], f: vec![0.0; n], theta: vec![0.0; n], q: vec![0.0; n + 1] }
    }

    /// `self + Σ a_i k_i`.
    fn combine(&self, terms: &[(f64, &Fields)]) -> Fields {
        let mix = |base: &[f64], pick: fn(&Fields) -> &Vec<f64>| -> Vec<f64> {
            let mut out = base.to_vec();
            for (a, k) in terms {
                for (o, r) in out.iter_mut().zip(pick(k)) {
                    *o += a * r;
                }
            }
            out
        };
        Fields {
            u: mix(&self.u, |k| &k.u),
            v: mix(&self.v, |k| &k.v),
            f: mix(&self.f, |k| &k.f),
            theta: mix(&self.theta, |k| &k.theta),
            q: mix(&self.q, |k| &k.q),
        }
    }
}

/// Everything derived from one state: rates plus diagnostic densities.
#[derive(Debug, Clone)]
struct Eval {
    rate: Fields,
    w: Vec<f64>,
    delta: f64,
    face_q: Vec<f64>,
    stress: Vec<f64>,
    eta: Vec<f64>,
    eps: Vec<f64>,
    /// `ρ_R r/θ − Div(Q/θ)` per cell, the entropy flux `Q_f/θ_f` differenced
    /// across the cell.
    entropy_supply: Vec<f64>,
    /// `δ₀ = −∂_Qψ·Q̇` per unit mass, averaged over the two face fluxes.
    delta0: Vec<f64>,
    power: f64,
    energy: f64,
}

/// Face values of temperature, stretch and temperature gradient.
struct Faces {
    theta: Vec<f64>,
    f: Vec<f64>,
    g: Vec<f64>,
    /// Prescribed flux, if the face is a Neumann boundary.
    fixed_q: Vec<Option<f64>>,
    cell_g: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct CellResponse {
    s: f64,
    eta: f64,
    eps: f64,
    eps_theta: f64,
    eps_f: f64,
    eps_w: f64,
    pi: f64,
    eps_q: [f64; 2],
    dpsi_q: [f64; 2],
}

fn uniaxial(f: f64) -> Mat3 {
    Mat3::diag(f, 1.0, 1.0)
}

fn axial(x: f64) -> Vec3 {
    Vec3::new(x, 0.0, 0.0)
}

struct Ctx<'a> {
    sc: &'a Scenario,
    engine: CattaneoEngine<'a>,
    fourier: Option<&'a FourierModel>,
    dx: f64,
    rho: f64,
    dt: f64,
    x_cells: &'a [f64],
    x_faces: &'a [f64],
}

impl Ctx<'_> {
    fn n(&self) -> usize {
        self.sc.cells
    }

    fn check(&self, y: &Fields, t: f64) -> Result<()> {
        for (cell, &theta) in y.theta.iter().enumerate() {
            if !(theta > 0.0) {
                return Err(Error::NegativeTemperature { cell, time: t, theta });
            }
        }
        for &f in &y.f {
            if !(f > 0.0) {
                return Err(Error::NonPositiveJ(f));
            }
        }
        Ok(())
    }

    fn faces(&self, y: &Fields) -> Faces {
        let n = self.n();
        let dx = self.dx;
        let mut theta = vec![0.0; n + 1];
        let mut f = vec![0.0; n + 1];
        let mut g = vec![0.0; n + 1];
        let mut fixed_q = vec![None; n + 1];
        for i in 1..n {
            theta[i] = 0.5 * (y.theta[i - 1] + y.theta[i]);
            f[i] = 0.5 * (y.f[i - 1] + y.f[i]);
            g[i] = (y.theta[i] - y.theta[i - 1]) / dx;
        }
        f[0] = y.f[0];
        f[n] = y.f[n - 1];
        match self.sc.thermal.left {
            ThermalBc::Temperature { value } => {
                theta[0] = value;
                g[0] = (y.theta[0] - value) / (0.5 * dx);
            }
            ThermalBc::Flux { value } => {
                theta[0] = y.theta[0];
                fixed_q[0] = Some(value);
            }
        }
        match self.sc.thermal.right {
            ThermalBc::Temperature { value } => {
                theta[n] = value;
                g[n] = (value - y.theta[n - 1]) / (0.5 * dx);
            }
            ThermalBc::Flux { value } => {
                theta[n] = y.theta[n - 1];
                fixed_q[n] = Some(value);
            }
        }
        let cell_g = (0..n).map(|c| 0.5 * (g[c] + g[c + 1])).collect();
        Faces { theta, f, g, fixed_q, cell_g }
    }

    /// State of cell `c` seen with the flux of its left (`side = 0`) or
    /// right (`side = 1`) face.
    fn cell_state(&self, y: &Fields, fc: &Faces, c: usize, side: usize, w: f64) -> ReferentialState {
        let q = if self.fourier.is_some() { 0.0 } else { y.q[c + side] };
        ReferentialState {
            f: uniaxial(y.f[c]),
            theta: y.theta[c],
            w: axial(w),
            q: axial(q),
            g: axial(fc.cell_g[c]),
        }
    }

    fn pi_bar(&self, y: &Fields, fc: &Faces, c: usize, w: f64) -> Result<f64> {
        let l = self.engine.polarization(&self.cell_state(y, fc, c, 0, w))?;
        let r = self.engine.polarization(&self.cell_state(y, fc, c, 1, w))?;
        Ok(0.5 * (l[0] + r[0]))
    }

    fn solve_w(&self, y: &Fields, fc: &Faces, guess: &[f64], delta: f64) -> Result<ElectroSolution> {
        let Some(bc) = self.sc.electric else {
            let n = self.n();
            return Ok(ElectroSolution { w: vec![0.0; n], delta: 0.0, slopes: vec![1.0; n] });
        };
        let rho_r = self.rho;
        let displacement = |c: usize, w: f64| -> Result<f64> {
            Ok(w / y.f[c] + 4.0 * PI * rho_r * self.pi_bar(y, fc, c, w)?)
        };
        solve_electrostatics(self.dx, bc.phi_left - bc.phi_right, &displacement, guess, delta)
    }

    fn face_w(&self, w: &[f64], i: usize) -> f64 {
        let n = self.n();
        if i == 0 {
            w[0]
        } else if i == n {
            w[n - 1]
        } else {
            0.5 * (w[i - 1] + w[i])
        }
    }

    fn cell_response(&self, y: &Fields, fc: &Faces, c: usize, w: f64) -> Result<CellResponse> {
        let mut out = CellResponse {
            s: 0.0,
            eta: 0.0,
            eps: 0.0,
            eps_theta: 0.0,
            eps_f: 0.0,
            eps_w: 0.0,
            pi: 0.0,
            eps_q: [0.0; 2],
            dpsi_q: [0.0; 2],
        };
        for side in 0..2 {
            let s = self.cell_state(y, fc, c, side, w);
            let r = self.engine.response(&s)?;
            let p = self.engine.energy_partials(&s)?;
            out.s += 0.5 * r.s[0][0];
            out.eta += 0.5 * r.eta;
            out.eps += 0.5 * r.eps;
            out.pi += 0.5 * r.pi[0];
            out.eps_theta += 0.5 * p.d_theta;
            out.eps_f += 0.5 * p.d_f[0][0];
            out.eps_w += 0.5 * p.d_w[0];
            out.eps_q[side] = p.d_q[0];
            out.dpsi_q[side] = r.dpsi_dq[0];
        }
        Ok(out)
    }

    /// Gradient driving the Cattaneo law at face `i` and the temperature of
    /// its entropy flux `Q/θ`.
    ///
    /// With `Z = K⁻¹T` at the neighbouring cells, the two are chosen so that
    /// the `Q·G` cross terms of the entropy imbalance of both neighbours
    /// cancel exactly. What remains on each side is `Z_c Q²/(2T_f θ_c²)`,
    /// so the semi-discrete production is nonnegative whenever `Z_c/T_f > 0`.
    /// The gradient differs from the plain difference at second order. Falls back to the plain values when the side
    /// coefficients are not positive.
    fn entropy_stable_face(&self, y: &Fields, fc: &Faces, w: &[f64], i: usize, s: &ReferentialState) -> Result<(f64, f64)> {
        let n = self.n();
        let dx = self.dx;
        let k = self.engine.conductivity(s)?[0][0];
        let tau = self.engine.relaxation_times(s)?[0][0];
        // Side coefficient `Z_c/(2T_f θ_c²)` of cell `c` seen from this face.
        let side = |c: usize, side: usize| -> Result<f64> {
            let z = self.engine.z(&self.cell_state(y, fc, c, side, w[c]))?[0][0];
            Ok(z / (2.0 * tau * y.theta[c] * y.theta[c]))
        };
        let plain = (fc.g[i], fc.theta[i]);
        // A reservoir face has one neighbour, so the gradient stays plain and
        // only the flux temperature moves (it matches θ_b to second order).
        let (g, inv_theta) = if i == 0 {
            (fc.g[0], 1.0 / y.theta[0] + dx * side(0, 0)? * k * fc.g[0])
        } else if i == n {
            (fc.g[n], 1.0 / y.theta[n - 1] - dx * side(n - 1, 1)? * k * fc.g[n])
        } else {
            let (l, r) = (i - 1, i);
            let (al, ar) = (side(l, 1)?, side(r, 0)?);
            let g = (1.0 / y.theta[l] - 1.0 / y.theta[r]) / (dx * k * (al + ar));
            (g, 1.0 / y.theta[l] - dx * al * k * g)
        };
        let ok = |x: f64| x.is_finite();
        if !(k > 0.0 && tau > 0.0) || !ok(g) || !(inv_theta > 0.0) || !ok(inv_theta) {
            return Ok(plain);
        }
        Ok((g, 1.0 / inv_theta))
    }

    fn eval(&self, y: &Fields, t: f64, w_guess: &[f64], delta_guess: f64) -> Result<Eval> {
        self.check(y, t)?;
        let n = self.n();
        let dx = self.dx;
        let rho = self.rho;
        let sc = self.sc;
        let fc = self.faces(y);
        let ElectroSolution { w, delta, slopes } = self.solve_w(y, &fc, w_guess, delta_guess)?;

        // Face fluxes and the Cattaneo law.
        let mut face_q = vec![0.0; n + 1];
        let mut q_rate = vec![0.0; n + 1];
        let mut theta_ent = fc.theta.clone();
        for i in 0..=n {
            let s = ReferentialState {
                f: uniaxial(fc.f[i]),
                theta: fc.theta[i],
                w: axial(self.face_w(&w, i)),
                q: axial(y.q[i]),
                g: axial(fc.g[i]),
            };
            match (fc.fixed_q[i], self.fourier) {
                (Some(value), _) => face_q[i] = value,
                (None, Some(fm)) => face_q[i] = fm.heat_flux(&s)?[0],
                (None, None) => {
                    face_q[i] = y.q[i];
                    let (g, theta) = self.entropy_stable_face(y, &fc, &w, i, &s)?;
                    theta_ent[i] = theta;
                    q_rate[i] = self.engine.heat_flux_rate(&ReferentialState { g: axial(g), ..s })?[0];
                }
            }
        }

        let cells = (0..n).map(|c| self.cell_response(y, &fc, c, w[c])).collect::<Result<Vec<_>>>()?;

        // Momentum.
        let mut v_rate = vec![0.0; n + 1];
        let mut u_rate = vec![0.0; n + 1];
        let mut f_rate = vec![0.0; n];
        let body = |i: usize| sc.body_force.map_or(0.0, |b| b.eval(self.x_faces[i], t, sc.length));
        if !sc.mechanics.frozen {
            for i in 1..n {
                v_rate[i] = (cells[i].s - cells[i - 1].s) / (rho * dx) + body(i);
            }
            if sc.mechanics.left == Support::Free {
                v_rate[0] = cells[0].s / (rho * 0.5 * dx) + body(0);
            }
            if sc.mechanics.right == Support::Free {
                v_rate[n] = -cells[n - 1].s / (rho * 0.5 * dx) + body(n);
            }
            u_rate.copy_from_slice(&y.v);
            for c in 0..n {
                f_rate[c] = (y.v[c + 1] - y.v[c]) / dx;
            }
        }

        // Energy, solved for θ̇ through the chain rule.
        let heating: Vec<f64> =
            (0..n).map(|c| sc.heating.map_or(0.0, |h| h.eval(self.x_cells[c], t, sc.length))).collect();
        let theta_rate = |elec: &[f64]| -> Result<Vec<f64>> {
            (0..n)
                .map(|c| {
                    let r = &cells[c];
                    if !(r.eps_theta > 0.0) {
                        return Err(Error::SingularHeatCapacity { cell: c, time: t, value: r.eps_theta });
                    }
                    let flux_work = 0.5 * (r.eps_q[0] * q_rate[c] + r.eps_q[1] * q_rate[c + 1]);
                    let num = r.s * f_rate[c] - (face_q[c + 1] - face_q[c]) / dx + rho * heating[c] + elec[c]
                        - rho * (r.eps_f * f_rate[c] + flux_work);
                    Ok(num / (rho * r.eps_theta))
                })
                .collect()
        };
        let mut elec = vec![0.0; n];
        let mut pi_rate = vec![0.0; n];
        let mut th_rate = theta_rate(&elec)?;
        if sc.electric.is_some() {
            // Differentiating `Δ_c(W_c, y) = Δ` and `ΣW_c dX = const` along ẏ:
            // `Δ_c'Ẇ_c + a_c = Δ̇` with `a_c` the rate of `Δ_c` at frozen W.
            // The explicit part of Π̄̇ is a central difference along ẏ. The
            // second pass sees the θ̇ corrected by the first.
            let h = 0.1 * self.dt;
            let four_pi_rho = 4.0 * PI * rho;
            for _ in 0..2 {
                let rate = Fields {
                    u: u_rate.clone(),
                    v: v_rate.clone(),
                    f: f_rate.clone(),
                    theta: th_rate.clone(),
                    q: q_rate.clone(),
                };
                let (yp, ym) = (y.combine(&[(h, &rate)]), y.combine(&[(-h, &rate)]));
                let (fp, fm) = (self.faces(&yp), self.faces(&ym));
                let mut explicit = vec![0.0; n];
                let mut a = vec![0.0; n];
                for c in 0..n {
                    explicit[c] = (self.pi_bar(&yp, &fp, c, w[c])? - self.pi_bar(&ym, &fm, c, w[c])?) / (2.0 * h);
                    a[c] = -w[c] * f_rate[c] / (y.f[c] * y.f[c]) + four_pi_rho * explicit[c];
                }
                let inv: f64 = slopes.iter().map(|s| 1.0 / s).sum();
                let delta_rate = a.iter().zip(&slopes).map(|(a, s)| a / s).sum::<f64>() / inv;
                for c in 0..n {
                    let w_rate = (delta_rate - a[c]) / slopes[c];
                    let pi_w = (slopes[c] - 1.0 / y.f[c]) / four_pi_rho;
                    pi_rate[c] = pi_w * w_rate + explicit[c];
                    elec[c] = rho * (w[c] * pi_rate[c] - cells[c].eps_w * w_rate);
                }
                th_rate = theta_rate(&elec)?;
            }
        }

        // Diagnostics.
        let mut entropy_supply = vec![0.0; n];
        let mut delta0 = vec![0.0; n];
        let phi = |i: usize| face_q[i] / theta_ent[i];
        let mut power = face_q[0] - face_q[n];
        let mut energy = 0.0;
        for c in 0..n {
            let r = &cells[c];
            entropy_supply[c] = rho * heating[c] / y.theta[c] - (phi(c + 1) - phi(c)) / dx;
            delta0[c] = -0.5 * (r.dpsi_q[0] * q_rate[c] + r.dpsi_q[1] * q_rate[c + 1]);
            power += (rho * heating[c] + rho * w[c] * pi_rate[c]) * dx;
            energy += rho * r.eps * dx;
        }
        for i in 0..=n {
            let m = if i == 0 || i == n { 0.5 * dx } else { dx };
            power += m * rho * body(i) * y.v[i];
            energy += m * 0.5 * rho * y.v[i] * y.v[i];
        }

        Ok(Eval {
            rate: Fields { u: u_rate, v: v_rate, f: f_rate, theta: th_rate, q: q_rate },
            w,
            delta,
            face_q,
            stress: cells.iter().map(|r| r.s).collect(),
            eta: cells.iter().map(|r| r.eta).collect(),
            eps: cells.iter().map(|r| r.eps).collect(),
            entropy_supply,
            delta0,
            power,
            energy,
        })
    }

    /// Largest stable step for the state, before the CFL factor.
    fn stability_bound(&self, y: &Fields, w: &[f64]) -> Result<f64> {
        let fc = self.faces(y);
        let rho = self.rho;
        let mut bound = f64::INFINITY;
        for c in 0..self.n() {
            let s = self.cell_state(y, &fc, c, 0, w[c]);
            let p = self.engine.energy_partials(&s)?;
            let k = self.engine.conductivity(&s)?[0][0];
            let tau = self.engine.relaxation_times(&s)?[0][0];
            if !self.sc.mechanics.frozen {
                let h = 1e-6 * y.f[c];
                let stress = |f: f64| -> Result<f64> {
                    Ok(self.engine.response(&ReferentialState { f: uniaxial(f), ..s })?.s[0][0])
                };
                let modulus = (stress(y.f[c] + h)? - stress(y.f[c] - h)?) / (2.0 * h);
                if !(modulus > 0.0) {
                    return Err(Error::InvalidScenario(format!("cell {c}: axial stiffness {modulus:e} is not positive")));
                }
                bound = bound.min(self.dx / (modulus / rho).sqrt());
            }
            if !(p.d_theta > 0.0) {
                return Err(Error::SingularHeatCapacity { cell: c, time: 0.0, value: p.d_theta });
            }
            match self.sc.mode {
                Mode::Cattaneo => {
                    let c_ss = (k / (rho * p.d_theta * tau)).sqrt();
                    bound = bound.min(self.dx / c_ss).min(tau);
                }
                Mode::Fourier => bound = bound.min(self.dx * self.dx * rho * p.d_theta / (2.0 * k)),
            }
        }
        Ok(bound)
    }
}

/// Instantaneous per-cell values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    pub x: f64,
    pub u: f64,
    pub v: f64,
    pub f: f64,
    pub theta: f64,
    pub q: f64,
    pub w: f64,
    pub s: f64,
    pub eta: f64,
    pub eps: f64,
}

/// Bookkeeping of one completed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// Smallest per-cell entropy production `ρ_RΔη − dt[ρ_R r/θ − Div(Q/θ)]`.
    pub min_production: f64,
    /// Change of total energy minus the time-integrated power.
    pub energy_defect: f64,
    pub max_internal_dissipation: f64,
}

pub struct Simulation {
    scenario: Scenario,
    model: Arc<dyn MaterialModel>,
    fourier: Option<FourierModel>,
    dx: f64,
    dt: f64,
    total_steps: usize,
    x_cells: Vec<f64>,
    x_faces: Vec<f64>,
    fields: Fields,
    current: Eval,
    time: f64,
    steps: usize,
    production: Vec<f64>,
}

impl std::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Simulation")
            .field("model", &self.model.name())
            .field("time", &self.time)
            .field("dt", &self.dt)
            .field("steps", &self.steps)
            .finish()
    }
}

impl Simulation {
    pub fn new(scenario: Scenario, model: Arc<dyn MaterialModel>) -> Result<Self> {
        scenario.validate()?;
        let n = scenario.cells;
        let dx = scenario.dx();
        let l = scenario.length;
        let x_cells: Vec<f64> = (0..n).map(|c| (c as f64 + 0.5) * dx).collect();
        let x_faces: Vec<f64> = (0..=n).map(|i| i as f64 * dx).collect();
        let ic = &scenario.initial;

        let mut y = Fields::zeros(n);
        for i in 0..=n {
            y.u[i] = ic.u.eval(x_faces[i], l);
            y.v[i] = ic.v.eval(x_faces[i], l);
            y.q[i] = ic.q.eval(x_faces[i], l);
        }
        for c in 0..n {
            y.f[c] = 1.0 + (y.u[c + 1] - y.u[c]) / dx;
            y.theta[c] = ic.theta.eval(x_cells[c], l);
        }
        if scenario.mechanics.frozen {
            y.v.iter_mut().for_each(|v| *v = 0.0);
        } else {
            if scenario.mechanics.left == Support::Fixed {
                y.v[0] = 0.0;
            }
            if scenario.mechanics.right == Support::Fixed {
                y.v[n] = 0.0;
            }
        }
        let fourier = match scenario.mode {
            Mode::Fourier => {
                y.q.iter_mut().for_each(|q| *q = 0.0);
                Some(fourier_from_cattaneo(Arc::clone(&model)))
            }
            Mode::Cattaneo => None,
        };
        if let ThermalBc::Flux { value } = scenario.thermal.left {
            y.q[0] = if fourier.is_some() { 0.0 } else { value };
        }
        if let ThermalBc::Flux { value } = scenario.thermal.right {
            y.q[n] = if fourier.is_some() { 0.0 } else { value };
        }

        let mut sim = Simulation {
            scenario,
            model,
            fourier,
            dx,
            dt: 0.0,
            total_steps: 0,
            x_cells,
            x_faces,
            fields: y,
            current: Eval {
                rate: Fields::zeros(n),
                w: vec![0.0; n],
                delta: 0.0,
                face_q: vec![],
                stress: vec![],
                eta: vec![],
                eps: vec![],
                entropy_supply: vec![],
                delta0: vec![],
                power: 0.0,
                energy: 0.0,
            },
            time: 0.0,
            steps: 0,
            production: vec![0.0; n],
        };
        sim.ctx().check(&sim.fields, 0.0)?;
        let ElectroSolution { w: w0, delta: delta0, .. } = {
            let ctx = sim.ctx();
            let fc = ctx.faces(&sim.fields);
            ctx.solve_w(&sim.fields, &fc, &vec![0.0; n], 0.0)?
        };
        let bound = sim.ctx().stability_bound(&sim.fields, &w0)?;
        let dt = match sim.scenario.dt {
            Some(dt) => {
                if dt > MAX_CFL * bound {
                    return Err(Error::CflViolation { dt, bound: MAX_CFL * bound });
                }
                dt
            }
            None => sim.scenario.cfl * bound,
        };
        let t_end = sim.scenario.t_end;
        sim.total_steps = if t_end > 0.0 { (t_end / dt).ceil() as usize } else { 0 };
        sim.dt = if sim.total_steps > 0 { t_end / sim.total_steps as f64 } else { dt };
        // The electric difference step scales with dt, so evaluate once it is known.
        sim.current = sim.ctx().eval(&sim.fields, 0.0, &w0, delta0)?;
        Ok(sim)
    }

    fn ctx(&self) -> Ctx<'_> {
        let engine = CattaneoEngine::new(self.model.as_ref());
        Ctx {
            sc: &self.scenario,
            engine: if self.fourier.is_some() { engine.fourier_limit() } else { engine },
            fourier: self.fourier.as_ref(),
            dx: self.dx,
            rho: self.model.reference_density(),
            dt: self.dt,
            x_cells: &self.x_cells,
            x_faces: &self.x_faces,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn is_finished(&self) -> bool {
        self.steps >= self.total_steps
    }

    pub fn cell_centers(&self) -> &[f64] {
        &self.x_cells
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.fields.theta
    }

    /// Total energy `Σ ρ_R ε dX + Σ ½ρ_R v² dX`.
    pub fn energy(&self) -> f64 {
        self.current.energy
    }

    /// Per-cell internal dissipation `δ₀` per unit mass at the current state.
    pub fn internal_dissipation(&self) -> &[f64] {
        &self.current.delta0
    }

    pub fn cell_state(&self, c: usize) -> CellState {
        let y = &self.fields;
        let e = &self.current;
        CellState {
            x: self.x_cells[c],
            u: 0.5 * (y.u[c] + y.u[c + 1]),
            v: 0.5 * (y.v[c] + y.v[c + 1]),
            f: y.f[c],
            theta: y.theta[c],
            q: 0.5 * (e.face_q[c] + e.face_q[c + 1]),
            w: e.w[c],
            s: e.stress[c],
            eta: e.eta[c],
            eps: e.eps[c],
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let n = self.scenario.cells;
        let cells: Vec<CellState> = (0..n).map(|c| self.cell_state(c)).collect();
        let col = |pick: fn(&CellState) -> f64| cells.iter().map(pick).collect::<Vec<_>>();
        let sigma = if self.steps == 0 { vec![0.0; n] } else { self.production.iter().map(|p| p / self.dt).collect() };
        Snapshot {
            t: self.time,
            x: col(|c| c.x),
            u: col(|c| c.u),
            v: col(|c| c.v),
            f: col(|c| c.f),
            theta: col(|c| c.theta),
            q: col(|c| c.q),
            w: col(|c| c.w),
            s: col(|c| c.s),
            eta: col(|c| c.eta),
            eps: col(|c| c.eps),
            sigma_prod: sigma,
        }
    }

    /// Advances by one step of the configured Runge–Kutta scheme.
    pub fn step(&mut self) -> Result<StepDiagnostics> {
        let ctx = self.ctx();
        let dt = self.dt;
        let t = self.time;
        let y = &self.fields;
        let k1 = &self.current;
        let weights = self.scenario.integrator.weights();
        let y2 = y.combine(&[(dt, &k1.rate)]);
        let k2 = ctx.eval(&y2, t + dt, &k1.w, k1.delta)?;
        let (y_new, k3) = match self.scenario.integrator {
            Integrator::Heun => (y.combine(&[(0.5 * dt, &k1.rate), (0.5 * dt, &k2.rate)]), None),
            Integrator::SspRk3 => {
                let y3 = y.combine(&[(0.25 * dt, &k1.rate), (0.25 * dt, &k2.rate)]);
                let k3 = ctx.eval(&y3, t + 0.5 * dt, &k2.w, k2.delta)?;
                let a = dt / 6.0;
                (y.combine(&[(a, &k1.rate), (a, &k2.rate), (4.0 * a, &k3.rate)]), Some(k3))
            }
        };
        let stages: Vec<&Eval> = std::iter::once(k1).chain(std::iter::once(&k2)).chain(k3.as_ref()).collect();
        let next = ctx.eval(&y_new, t + dt, &k1.w, k1.delta)?;

        let rho = self.model.reference_density();
        let mut min_production = f64::INFINITY;
        let mut production = vec![0.0; self.scenario.cells];
        for (c, p) in production.iter_mut().enumerate() {
            let supply: f64 = stages.iter().zip(weights).map(|(e, w)| w * e.entropy_supply[c]).sum();
            *p = rho * (next.eta[c] - k1.eta[c]) - dt * supply;
            min_production = min_production.min(*p);
        }
        let power: f64 = stages.iter().zip(weights).map(|(e, w)| w * e.power).sum();
        let energy_defect = next.energy - k1.energy - dt * power;
        let max_internal_dissipation = next.delta0.iter().fold(0.0_f64, |m, d| m.max(d.abs()));

        self.fields = y_new;
        self.current = next;
        self.production = production;
        self.steps += 1;
        self.time = if self.steps == self.total_steps { self.scenario.t_end } else { self.steps as f64 * dt };
        Ok(StepDiagnostics { min_production, energy_defect, max_internal_dissipation })
    }

    /// Runs to `t_end`, collecting snapshots and the front trajectory.
    pub fn run(mut self) -> Result<RunOutput> {
        let sc = self.scenario.clone();
        let stride = sc.output_stride;
        let n = sc.cells;
        let theta0 = self.fields.theta.clone();
        let base = theta0[n - 1];
        let amplitude = theta0.iter().fold(0.0_f64, |m, t| m.max((t - base).abs()));
        let level = sc.front_level * amplitude;

        let e0 = self.energy();
        let mut snapshots = vec![self.snapshot()];
        let mut front = Vec::new();
        let mut front_open = amplitude > 0.0;
        let mut track = |sim: &Simulation, front: &mut Vec<(f64, f64)>| {
            if !front_open {
                return;
            }
            if let Some((x, at_edge)) = front_position(sim.temperatures(), base, level, sim.dx) {
                if at_edge {
                    front_open = false;
                } else {
                    front.push((sim.time, x));
                }
            }
        };
        track(&self, &mut front);

        let mut min_production = f64::INFINITY;
        let mut defect_sum = 0.0;
        let mut max_delta0 = self.current.delta0.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        let mut theta_min = theta0.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut theta_max = theta0.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut power_integral = 0.0;
        let mut energy_prev = e0;

        while !self.is_finished() {
            let d = self.step()?;
            min_production = min_production.min(d.min_production);
            defect_sum += d.energy_defect;
            power_integral += self.energy() - energy_prev - d.energy_defect;
            energy_prev = self.energy();
            max_delta0 = max_delta0.max(d.max_internal_dissipation);
            for &t in self.temperatures() {
                theta_min = theta_min.min(t);
                theta_max = theta_max.max(t);
            }
            track(&self, &mut front);
            let last = self.is_finished();
            if last || (stride > 0 && self.steps.is_multiple_of(stride)) {
                snapshots.push(self.snapshot());
            }
        }

        let e1 = self.energy();
        let front_speed = fit_front_speed(&front, 0.2 * sc.t_end, sc.t_end);
        let report = RunReport {
            model: self.model.name().to_string(),
            mode: sc.mode,
            integrator: sc.integrator,
            cells: n,
            steps: self.steps,
            dt: self.dt,
            t_end: sc.t_end,
            energy_initial: e0,
            energy_final: e1,
            work_supplied: power_integral,
            energy_residual: defect_sum.abs(),
            energy_residual_rel: defect_sum.abs() / e0.abs().max(f64::MIN_POSITIVE),
            min_entropy_production: if self.steps > 0 { min_production } else { 0.0 },
            max_entropy_violation: if self.steps > 0 { (-min_production).max(0.0) } else { 0.0 },
            max_internal_dissipation: max_delta0,
            front_speed,
            theta_min,
            theta_max,
        };
        Ok(RunOutput { snapshots, report, front })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::material::{CustomModel, IsotropicParams, PresetMaterial};
    use crate::sim::{ElectricBc, Profile};

    fn preset(p: IsotropicParams) -> Arc<dyn MaterialModel> {
        Arc::new(PresetMaterial::isotropic(p).unwrap())
    }

    fn bump(amplitude: f64) -> Profile {
        Profile::CosineBump { base: 1.0, amplitude, center: 0.5, half_width: 0.2 }
    }

    #[test]
    fn uniform_state_is_a_fixed_point() {
        let mut sc = Scenario::new(1.0, 16, 0.1, Profile::Constant { value: 1.0 });
        sc.mechanics.left = Support::Free;
        sc.electric = Some(ElectricBc { phi_left: 0.5, phi_right: 0.0 });
        let mut sim = Simulation::new(sc, preset(IsotropicParams::default())).unwrap();
        let before: Vec<_> = (0..16).map(|c| sim.cell_state(c)).collect();
        for _ in 0..5 {
            sim.step().unwrap();
            for (c, b) in before.iter().enumerate() {
                let a = sim.cell_state(c);
                for (x, y) in [(a.u, b.u), (a.v, b.v), (a.f, b.f), (a.theta, b.theta), (a.q, b.q), (a.w, b.w)] {
                    assert!((x - y).abs() < 1e-14, "cell {c}: {x} vs {y}");
                }
            }
        }
        // Uniform field filling the gap between the electrodes.
        assert!((sim.cell_state(3).w - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_duration_gives_one_snapshot() {
        let sc = Scenario::new(1.0, 8, 0.0, bump(0.1));
        let out = Simulation::new(sc, preset(IsotropicParams::default())).unwrap().run().unwrap();
        assert_eq!(out.snapshots.len(), 1);
        assert_eq!(out.report.steps, 0);
        assert_eq!(out.snapshots[0].t, 0.0);
        assert_eq!(out.snapshots[0].len(), 8);
    }

    #[test]
    fn step_count_lands_on_end_time() {
        let mut sc = Scenario::new(1.0, 16, 0.1, bump(0.1));
        sc.output_stride = 3;
        let out = Simulation::new(sc, preset(IsotropicParams::default())).unwrap().run().unwrap();
        assert_eq!(out.last().t, 0.1);
        assert!((out.report.dt * out.report.steps as f64 - 0.1).abs() < 1e-15);
        let expected = 1 + out.report.steps / 3 + usize::from(!out.report.steps.is_multiple_of(3));
        assert_eq!(out.snapshots.len(), expected);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let mut sc = Scenario::new(1.0, 16, 0.1, bump(0.1));
        sc.dt = Some(0.05);
        let err = Simulation::new(sc, preset(IsotropicParams::default())).unwrap_err();
        assert!(matches!(err, Error::CflViolation { dt, .. } if dt == 0.05));
    }

    #[test]
    fn heat_sink_drives_temperature_negative() {
        let mut sc = Scenario::new(1.0, 16, 1.0, Profile::Constant { value: 1.0 });
        sc.mechanics.frozen = true;
        sc.heating = Some(crate::sim::Source { profile: Profile::Constant { value: -10.0 }, t_start: 0.0, t_stop: 1.0 });
        let err = Simulation::new(sc, preset(IsotropicParams::default())).unwrap().run().unwrap_err();
        match err {
            Error::NegativeTemperature { time, theta, .. } => {
                assert!(theta <= 0.0);
                assert!(time > 0.0 && time < 0.2, "{time}");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn negative_heat_capacity_is_reported() {
        // ψ₀ convex in θ makes ∂ε/∂θ = −θ∂²ψ₀/∂θ² negative.
        let m = CustomModel::new(
            "unstable",
            1.0,
            1.0,
            |s| 0.5 * s.theta * s.theta,
            |_| Mat3::IDENTITY,
            |_| Mat3::IDENTITY,
        )
        .unwrap();
        let mut sc = Scenario::new(1.0, 8, 0.1, Profile::Constant { value: 1.0 });
        sc.mechanics.frozen = true;
        let err = Simulation::new(sc, Arc::new(m)).unwrap_err();
        assert!(matches!(err, Error::SingularHeatCapacity { value, .. } if value < 0.0));
    }

    #[test]
    fn steady_conduction_between_reservoirs() {
        let kappa = 0.5;
        for mode in [Mode::Cattaneo, Mode::Fourier] {
            let mut sc = Scenario::new(1.0, 16, 0.2, Profile::Linear { left: 1.2, right: 1.0 });
            sc.mode = mode;
            sc.mechanics.frozen = true;
            sc.thermal.left = ThermalBc::Temperature { value: 1.2 };
            sc.thermal.right = ThermalBc::Temperature { value: 1.0 };
            sc.initial.q = Profile::Constant { value: kappa * 0.2 };
            let out = Simulation::new(sc, preset(IsotropicParams { kappa, ..Default::default() })).unwrap().run().unwrap();
            let (first, last) = (&out.snapshots[0], out.last());
            // The entropy-stable face gradient bends the Cattaneo steady
            // profile at second order; Fourier keeps the line exactly.
            let tol = if mode == Mode::Fourier { 1e-12 } else { 1e-5 };
            for c in 0..16 {
                assert!((first.theta[c] - last.theta[c]).abs() < tol, "{mode:?} cell {c}");
                assert!((last.q[c] - 0.1).abs() < tol, "{mode:?} cell {c}: {}", last.q[c]);
            }
            assert!(out.report.min_entropy_production > 0.0);
        }
    }

    #[test]
    fn insulated_bar_conserves_energy() {
        // Heun amplifies undamped modes slightly, so it drifts upward.
        for (integrator, tol) in [(Integrator::SspRk3, 1e-5), (Integrator::Heun, 1e-3)] {
            let mut sc = Scenario::new(1.0, 64, 0.3, bump(0.05));
            sc.integrator = integrator;
            sc.mechanics.left = Support::Free;
            sc.mechanics.right = Support::Free;
            let out = Simulation::new(sc, preset(IsotropicParams { beta: 0.3, ..Default::default() }))
                .unwrap()
                .run()
                .unwrap();
            assert_eq!(out.report.work_supplied, 0.0);
            assert!(out.report.energy_residual_rel < tol, "{integrator:?}: {:?}", out.report);
        }
    }

    #[test]
    fn fourier_mode_has_no_internal_dissipation() {
        let mut sc = Scenario::new(1.0, 32, 0.05, bump(0.1));
        sc.mode = Mode::Fourier;
        let out = Simulation::new(sc, preset(IsotropicParams::default())).unwrap().run().unwrap();
        assert_eq!(out.report.max_internal_dissipation, 0.0);
        let mut sc = Scenario::new(1.0, 32, 0.05, bump(0.1));
        sc.mode = Mode::Cattaneo;
        let out = Simulation::new(sc, preset(IsotropicParams::default())).unwrap().run().unwrap();
        assert!(out.report.max_internal_dissipation > 0.0);
    }

    #[test]
    fn prescribed_flux_heats_the_bar() {
        // The flux switches on abruptly, so the bookkeeping is only as good as
        // the time integration of that jump.
        let mut sc = Scenario::new(1.0, 64, 0.2, Profile::Constant { value: 1.0 });
        sc.mechanics.frozen = true;
        sc.thermal.left = ThermalBc::Flux { value: 0.3 };
        let out = Simulation::new(sc, preset(IsotropicParams::default())).unwrap().run().unwrap();
        assert!((out.report.work_supplied - 0.3 * 0.2).abs() < 1e-12);
        assert!(out.report.energy_residual < 1e-3 * out.report.work_supplied, "{:?}", out.report);
        assert!(out.last().theta[0] > 1.0);
    }

    #[test]
    fn body_force_accelerates_free_bar() {
        let mut sc = Scenario::new(1.0, 16, 0.1, Profile::Constant { value: 1.0 });
        sc.mechanics.left = Support::Free;
        sc.mechanics.right = Support::Free;
        sc.body_force = Some(crate::sim::Source { profile: Profile::Constant { value: 2.0 }, t_start: 0.0, t_stop: 1.0 });
        let out = Simulation::new(sc, preset(IsotropicParams::default())).unwrap().run().unwrap();
        for v in &out.last().v {
            assert!((v - 0.2).abs() < 1e-12);
        }
        assert!((out.report.energy_final - out.report.energy_initial - 0.5 * 0.2 * 0.2).abs() < 1e-12);
    }
}
