//! Quasi-static electrostatics in one dimension.
//!
//! `DivΔ = 0` makes the referential displacement uniform along the bar, so
//! each cell satisfies `Δ_c(W_c) = Δ` for one unknown constant `Δ`, and
//! `W = −∂φ/∂X` closes the system through `Σ W_c dX = φ(0) − φ(L)`.

use crate::error::{Error, Result};

const TOL: f64 = 1e-13;
const MAX_ITER: usize = 50;

fn fail(msg: String) -> Error {
    Error::ElectrostaticsFailed(msg)
}

/// Central-difference slope of `g` at `w`.
fn slope(g: &dyn Fn(f64) -> Result<f64>, w: f64, cell: usize) -> Result<f64> {
    let h = 1e-6 * w.abs().max(1.0);
    let s = (g(w + h)? - g(w - h)?) / (2.0 * h);
    if !(s.abs() > 0.0) || !s.is_finite() {
        return Err(fail(format!("cell {cell}: displacement is stationary in W (slope {s:e})")));
    }
    Ok(s)
}

/// Newton on `g_c(W) = d` for one cell; `slope` holds the latest `g_c'`.
fn solve_cell(g: &dyn Fn(f64) -> Result<f64>, d: f64, w: &mut f64, slope_c: &mut f64, cell: usize) -> Result<()> {
    let scale = d.abs().max(1.0);
    for _ in 0..MAX_ITER {
        let r = g(*w)? - d;
        if r.abs() <= TOL * scale {
            if *slope_c == 0.0 {
                *slope_c = slope(g, *w, cell)?;
            }
            return Ok(());
        }
        *slope_c = slope(g, *w, cell)?;
        *w -= r / *slope_c;
        if !w.is_finite() {
            return Err(fail(format!("cell {cell}: Newton iterate diverged")));
        }
    }
    Err(fail(format!("cell {cell}: no convergence in {MAX_ITER} iterations")))
}

/// Converged field, uniform displacement and the slopes `∂Δ_c/∂W` from the
/// last Newton iterate of each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectroSolution {
    pub w: Vec<f64>,
    pub delta: f64,
    pub slopes: Vec<f64>,
}

/// Finds `W_c` for every cell and the uniform displacement `Δ`.
///
/// `displacement(c, W)` is the referential displacement of cell `c` at field
/// `W`; `guess` seeds both loops (typically the previous solution).
pub fn solve_electrostatics(
    dx: f64,
    potential_drop: f64,
    displacement: &dyn Fn(usize, f64) -> Result<f64>,
    guess: &[f64],
    delta_guess: f64,
) -> Result<ElectroSolution> {
    let n = guess.len();
    let mut w = guess.to_vec();
    let mut slopes = vec![0.0; n];
    let mut delta = delta_guess;
    let scale = potential_drop.abs().max(1.0);
    for _ in 0..MAX_ITER {
        for c in 0..n {
            let g = |x: f64| displacement(c, x);
            solve_cell(&g, delta, &mut w[c], &mut slopes[c], c)?;
        }
        let r = w.iter().sum::<f64>() * dx - potential_drop;
        if r.abs() <= TOL * scale {
            return Ok(ElectroSolution { w, delta, slopes });
        }
        let dr: f64 = slopes.iter().map(|s| dx / s).sum();
        let step = -r / dr;
        delta += step;
        if !delta.is_finite() {
            return Err(fail("displacement iterate diverged".into()));
        }
        // Newton predictor for every cell; the inner loop only corrects it.
        for c in 0..n {
            w[c] += step / slopes[c];
        }
    }
    Err(fail(format!("potential constraint not met in {MAX_ITER} iterations")))
}
