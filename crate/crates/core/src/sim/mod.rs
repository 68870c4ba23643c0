//! One-dimensional referential simulator: momentum, energy, the Cattaneo law
//! and quasi-static electrostatics on a bar `0 <= X <= L`.
//!
//! The motion is uniaxial, `F = diag(1 + ∂u/∂X, 1, 1)`, and all vector fields
//! point along `X`. The grid is staggered: displacement, velocity and heat flux
//! live on the `N + 1` faces, temperature and deformation on the `N` cells.
//! Boundary and initial data, body force and heat supply are prescribed
//! inputs.

mod electro;
mod output;
mod solver;

pub use electro::{solve_electrostatics, ElectroSolution};
pub use output::{
    fit_front_speed, l2_distance, l2_norm, write_front_csv, write_snapshots_csv, RunOutput, RunReport, Snapshot,
    SNAPSHOT_HEADER,
};
pub use solver::{CellState, Simulation, StepDiagnostics};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial profile `f(X)` on `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Profile {
    Constant { value: f64 },
    /// `base + amplitude·½(1 + cos(π(X − center)/half_width))` inside the
    /// support, `base` outside.
    CosineBump { base: f64, amplitude: f64, center: f64, half_width: f64 },
    Gaussian { base: f64, amplitude: f64, center: f64, width: f64 },
    /// Linear from `left` at `X = 0` to `right` at `X = L`.
    Linear { left: f64, right: f64 },
}

impl Profile {
    pub const ZERO: Profile = Profile::Constant { value: 0.0 };

    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::CosineBump { base, amplitude, center, half_width } => {
                let r = (x - center) / half_width;
                if r.abs() < 1.0 {
                    base + amplitude * 0.5 * (1.0 + (std::f64::consts::PI * r).cos())
                } else {
                    base
                }
            }
            Profile::Gaussian { base, amplitude, center, width } => {
                let r = (x - center) / width;
                base + amplitude * (-0.5 * r * r).exp()
            }
            Profile::Linear { left, right } => left + (right - left) * x / length,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = match *self {
            Profile::Constant { value } => value.is_finite(),
            Profile::CosineBump { base, amplitude, center, half_width } => {
                [base, amplitude, center].iter().all(|v| v.is_finite()) && half_width > 0.0 && half_width.is_finite()
            }
            Profile::Gaussian { base, amplitude, center, width } => {
                [base, amplitude, center].iter().all(|v| v.is_finite()) && width > 0.0 && width.is_finite()
            }
            Profile::Linear { left, right } => left.is_finite() && right.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidScenario(format!("{what}: profile parameters must be finite with positive widths")))
        }
    }
}

/// A profile switched on for `t_start <= t < t_stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub profile: Profile,
    #[serde(default)]
    pub t_start: f64,
    #[serde(default = "infinite")]
    pub t_stop: f64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

impl Source {
    pub fn eval(&self, x: f64, t: f64, length: f64) -> f64 {
        if t >= self.t_start && t < self.t_stop {
            self.profile.eval(x, length)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Cattaneo,
    Fourier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Three-stage strong-stability-preserving Runge–Kutta.
    #[default]
    SspRk3,
    /// Explicit trapezoidal RK2. Its amplification factor exceeds one on the
    /// imaginary axis, so undamped waves slowly grow.
    Heun,
}

impl Integrator {
    pub(crate) fn weights(self) -> &'static [f64] {
        match self {
            Integrator::SspRk3 => &[1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
            Integrator::Heun => &[0.5, 0.5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThermalBc {
    /// Prescribed temperature.
    Temperature { value: f64 },
    /// Prescribed referential heat flux `Q` (positive along `+X`).
    Flux { value: f64 },
}

impl Default for ThermalBc {
    fn default() -> Self {
        ThermalBc::Flux { value: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThermalBcs {
    pub left: ThermalBc,
    pub right: ThermalBc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    #[default]
    Fixed,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MechanicsBc {
    /// Rigid bar: `u`, `v` and `F` never change.
    pub frozen: bool,
    pub left: Support,
    pub right: Support,
}

/// Electrode potentials at the two ends.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectricBc {
    pub phi_left: f64,
    pub phi_right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConditions {
    pub theta: Profile,
    #[serde(default = "zero_profile")]
    pub u: Profile,
    #[serde(default = "zero_profile")]
    pub v: Profile,
    #[serde(default = "zero_profile")]
    pub q: Profile,
}

fn zero_profile() -> Profile {
    Profile::ZERO
}

impl InitialConditions {
    pub fn with_theta(theta: Profile) -> Self {
        InitialConditions { theta, u: Profile::ZERO, v: Profile::ZERO, q: Profile::ZERO }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "N")]
    pub cells: usize,
    /// Fixed step; `None` picks one from the wave speeds and `cfl`.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default)]
    pub thermal: ThermalBcs,
    #[serde(default)]
    pub mechanics: MechanicsBc,
    /// `None` switches electrostatics off and keeps `W = 0`.
    #[serde(default)]
    pub electric: Option<ElectricBc>,
    pub initial: InitialConditions,
    #[serde(default)]
    pub body_force: Option<Source>,
    #[serde(default)]
    pub heating: Option<Source>,
    /// Emit a snapshot every this many steps (the first and last are always
    /// emitted; 0 emits only those).
    #[serde(default = "default_stride")]
    pub output_stride: usize,
    /// Front level as a fraction of the initial pulse amplitude.
    #[serde(default = "default_front_level")]
    pub front_level: f64,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_stride() -> usize {
    100
}

fn default_front_level() -> f64 {
    1e-3
}

pub const MIN_CELLS: usize = 8;
pub const MAX_CFL: f64 = 0.9;

impl Scenario {
    /// Insulated, mechanically fixed bar with electrostatics off.
    pub fn new(length: f64, cells: usize, t_end: f64, theta: Profile) -> Self {
        Scenario {
            length,
            cells,
            dt: None,
            cfl: default_cfl(),
            t_end,
            mode: Mode::Cattaneo,
            integrator: Integrator::SspRk3,
            thermal: ThermalBcs::default(),
            mechanics: MechanicsBc::default(),
            electric: None,
            initial: InitialConditions::with_theta(theta),
            body_force: None,
            heating: None,
            output_stride: default_stride(),
            front_level: default_front_level(),
        }
    }

    pub fn dx(&self) -> f64 {
        self.length / self.cells as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if !(self.length > 0.0 && self.length.is_finite()) {
            return bad(format!("L must be positive, got {}", self.length));
        }
        if self.cells < MIN_CELLS {
            return bad(format!("N must be at least {MIN_CELLS}, got {}", self.cells));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be finite and non-negative, got {}", self.t_end));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt must be positive, got {dt}"));
            }
        } else if !(self.cfl > 0.0 && self.cfl <= MAX_CFL) {
            return bad(format!("cfl must lie in (0, {MAX_CFL}], got {}", self.cfl));
        }
        if !(self.front_level > 0.0 && self.front_level < 1.0) {
            return bad(format!("front_level must lie in (0, 1), got {}", self.front_level));
        }
        for (name, bc) in [("left", self.thermal.left), ("right", self.thermal.right)] {
            let v = match bc {
                ThermalBc::Temperature { value } => {
                    if !(value > 0.0) {
                        return bad(format!("{name} boundary temperature must be positive, got {value}"));
                    }
                    value
                }
                ThermalBc::Flux { value } => value,
            };
            if !v.is_finite() {
                return bad(format!("{name} thermal boundary value must be finite"));
            }
        }
        if let Some(e) = self.electric {
            if !(e.phi_left.is_finite() && e.phi_right.is_finite()) {
                return bad("electrode potentials must be finite".into());
            }
        }
        self.initial.theta.validate("initial.theta")?;
        self.initial.u.validate("initial.u")?;
        self.initial.v.validate("initial.v")?;
        self.initial.q.validate("initial.q")?;
        for (name, src) in [("body_force", &self.body_force), ("heating", &self.heating)] {
            if let Some(s) = src {
                s.profile.validate(name)?;
                if s.t_start.is_nan() || s.t_stop.is_nan() {
                    return bad(format!("{name}: switching times must not be NaN"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_bump_profile() {
        let p = Profile::CosineBump { base: 1.0, amplitude: 0.5, center: 0.5, half_width: 0.1 };
        assert_eq!(p.eval(0.5, 1.0), 1.5);
        assert_eq!(p.eval(0.7, 1.0), 1.0);
        assert!((p.eval(0.55, 1.0) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn linear_profile() {
        let p = Profile::Linear { left: 1.0, right: 3.0 };
        assert_eq!(p.eval(0.5, 2.0), 1.5);
    }

    #[test]
    fn source_window() {
        let s = Source { profile: Profile::Constant { value: 2.0 }, t_start: 1.0, t_stop: 2.0 };
        assert_eq!(s.eval(0.0, 0.5, 1.0), 0.0);
        assert_eq!(s.eval(0.0, 1.5, 1.0), 2.0);
        assert_eq!(s.eval(0.0, 2.0, 1.0), 0.0);
    }

    #[test]
    fn scenario_validation() {
        let ok = Scenario::new(1.0, 16, 1.0, Profile::Constant { value: 1.0 });
        assert!(ok.validate().is_ok());
        assert!(Scenario { cells: 4, ..ok.clone() }.validate().is_err());
        assert!(Scenario { cfl: 0.95, ..ok.clone() }.validate().is_err());
        assert!(Scenario { dt: Some(-1.0), ..ok.clone() }.validate().is_err());
        assert!(Scenario { length: 0.0, ..ok.clone() }.validate().is_err());
        let mut cold = ok.clone();
        cold.thermal.left = ThermalBc::Temperature { value: -1.0 };
        assert!(cold.validate().is_err());
    }

    #[test]
    fn scenario_json_round_trip() {
        let json = r#"{
            "L": 1.0, "N": 32, "t_end": 0.1,
            "thermal": {"left": {"type": "temperature", "value": 1.0}},
            "mechanics": {"frozen": true},
            "initial": {"theta": {"kind": "cosine_bump", "base": 1.0, "amplitude": 0.01, "center": 0.5, "half_width": 0.1}}
        }"#;
        let s: Scenario = serde_json::from_str(json).unwrap();
        assert_eq!(s.cells, 32);
        assert!(s.mechanics.frozen);
        assert_eq!(s.thermal.right, ThermalBc::Flux { value: 0.0 });
        let back: Scenario = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<Scenario>(r#"{"L": 1, "N": 8, "t_end": 1, "initial": {"theta": {"kind": "constant", "value": 1}}, "bogus": 1}"#).is_err());
    }
}
