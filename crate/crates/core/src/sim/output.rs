//! Snapshots, run reports, front tracking and profile norms.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Integrator, Mode};
use crate::error::Result;

pub const SNAPSHOT_HEADER: [&str; 12] = ["t", "X", "u", "v", "F", "theta", "Q", "W", "S", "eta", "eps", "sigma_prod"];

/// Per-cell fields at one time. Face quantities are averaged to cells;
/// `sigma_prod` is the entropy production rate of the step just taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub f: Vec<f64>,
    pub theta: Vec<f64>,
    pub q: Vec<f64>,
    pub w: Vec<f64>,
    pub s: Vec<f64>,
    pub eta: Vec<f64>,
    pub eps: Vec<f64>,
    pub sigma_prod: Vec<f64>,
}

impl Snapshot {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model: String,
    pub mode: Mode,
    pub integrator: Integrator,
    pub cells: usize,
    pub steps: usize,
    pub dt: f64,
    pub t_end: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// Time integral of boundary, body, heating and electric power.
    pub work_supplied: f64,
    /// `|E(t_end) − E(0) − ∫P dt|`.
    pub energy_residual: f64,
    pub energy_residual_rel: f64,
    /// Smallest per-cell, per-step production `ρ_RΔη − dt[ρ_R r/θ − Div(Q/θ)]`.
    pub min_entropy_production: f64,
    pub max_entropy_violation: f64,
    pub max_internal_dissipation: f64,
    pub front_speed: Option<f64>,
    pub theta_min: f64,
    pub theta_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub snapshots: Vec<Snapshot>,
    pub report: RunReport,
    /// `(t, X)` of the right-running front, until it reaches the boundary.
    pub front: Vec<(f64, f64)>,
}

impl RunOutput {
    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a run always has its initial snapshot")
    }
}

pub fn write_snapshots_csv<W: Write>(out: W, snapshots: &[Snapshot]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SNAPSHOT_HEADER)?;
    for s in snapshots {
        for c in 0..s.len() {
            let row = [
                s.t,
                s.x[c],
                s.u[c],
                s.v[c],
                s.f[c],
                s.theta[c],
                s.q[c],
                s.w[c],
                s.s[c],
                s.eta[c],
                s.eps[c],
                s.sigma_prod[c],
            ];
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_front_csv<W: Write>(out: W, front: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "X"])?;
    for (t, x) in front {
        w.write_record([t.to_string(), x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Rightmost crossing of `|θ − base| = level`, interpolated linearly between
/// cell centres. The flag is set when the crossing has reached the last cell.
pub(crate) fn front_position(theta: &[f64], base: f64, level: f64, dx: f64) -> Option<(f64, bool)> {
    let n = theta.len();
    let dev = |c: usize| (theta[c] - base).abs();
    let c = (0..n).rev().find(|&c| dev(c) >= level)?;
    if c + 2 >= n {
        return Some(((c as f64 + 0.5) * dx, true));
    }
    let (a, b) = (dev(c), dev(c + 1));
    Some(((c as f64 + 0.5 + (a - level) / (a - b)) * dx, false))
}

/// Least-squares slope of `X(t)` over samples with `t_from <= t <= t_to`.
pub fn fit_front_speed(front: &[(f64, f64)], t_from: f64, t_to: f64) -> Option<f64> {
    let pts: Vec<_> = front.iter().filter(|(t, _)| *t >= t_from && *t <= t_to).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let xm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    if !(stt > 0.0) {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - tm) * (p.1 - xm)).sum::<f64>() / stt)
}

/// Discrete L² distance `(Σ(a − b)² dX)^½`.
pub fn l2_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    assert_eq!(a.len(), b.len(), "profiles must share a grid");
    (a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * dx).sqrt()
}

/// L² norm of `a − base`.
pub fn l2_norm(a: &[f64], base: f64, dx: f64) -> f64 {
    (a.iter().map(|x| (x - base) * (x - base)).sum::<f64>() * dx).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn front_interpolates_between_cells() {
        let theta = [1.0, 1.5, 1.2, 1.0, 1.0, 1.0];
        let (x, edge) = front_position(&theta, 1.0, 0.1, 1.0).unwrap();
        assert!(!edge);
        // dev drops from 0.2 at c = 2 to 0 at c = 3: half a cell past 2.5.
        assert!((x - 3.0).abs() < 1e-12);
        assert!(front_position(&[1.0; 6], 1.0, 0.1, 1.0).is_none());
        assert!(front_position(&[1.0, 1.0, 1.0, 1.0, 1.0, 2.0], 1.0, 0.1, 1.0).unwrap().1);
    }

    #[test]
    fn slope_of_linear_track() {
        let front: Vec<_> = (0..20).map(|i| (i as f64 * 0.1, 0.3 + 2.0 * i as f64 * 0.1)).collect();
        assert!((fit_front_speed(&front, 0.0, 10.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(fit_front_speed(&front, 5.0, 10.0).is_none());
    }

    #[test]
    fn distances() {
        assert!((l2_distance(&[1.0, 2.0], &[1.0, 0.0], 0.25) - 1.0).abs() < 1e-15);
        assert!((l2_norm(&[3.0, 1.0], 1.0, 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn csv_header_and_rows() {
        let s = Snapshot {
            t: 0.5,
            x: vec![0.25, 0.75],
            u: vec![0.0; 2],
            v: vec![0.0; 2],
            f: vec![1.0; 2],
            theta: vec![1.0, 1.5],
            q: vec![0.0; 2],
            w: vec![0.0; 2],
            s: vec![0.0; 2],
            eta: vec![0.0; 2],
            eps: vec![0.0; 2],
            sigma_prod: vec![0.0; 2],
        };
        let mut buf = Vec::new();
        write_snapshots_csv(&mut buf, &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,X,u,v,F,theta,Q,W,S,eta,eps,sigma_prod");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[2], "0.5,0.75,0,0,1,1.5,0,0,0,0,0,0");
    }
}
