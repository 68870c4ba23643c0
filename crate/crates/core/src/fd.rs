//! Central finite differences over the slots of a [`ReferentialState`].
//!
//! Every gradient relation the audits check is compared against these
//! derivatives, so the stencils are kept deliberately plain.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kinematics::ReferentialState;
use crate::linalg::{Mat3, Tensor4, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdScheme {
    pub relative_step: f64,
    pub floor: f64,
    /// Stencil order, 2 or 4.
    pub order: u8,
}

impl Default for FdScheme {
    fn default() -> Self {
        FdScheme { relative_step: 1e-6, floor: 1e-6, order: 2 }
    }
}

impl FdScheme {
    pub fn fourth_order() -> Self {
        FdScheme { order: 4, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.relative_step >= 0.0) || !self.relative_step.is_finite() {
            return Err(invalid("relative_step", "must be finite and non-negative"));
        }
        if !(self.floor > 0.0) || !self.floor.is_finite() {
            return Err(invalid("floor", "must be finite and positive"));
        }
        if self.order != 2 && self.order != 4 {
            return Err(invalid("order", format!("must be 2 or 4, got {}", self.order)));
        }
        Ok(())
    }

    /// `h = max(relative·|x|, floor)`.
    pub fn step(&self, x: f64) -> f64 {
        (self.relative_step * x.abs()).max(self.floor)
    }
}

/// Values a finite difference can be taken of.
pub trait FdValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {}
impl FdValue for f64 {}
impl FdValue for Vec3 {}
impl FdValue for Mat3 {}

/// Derivative of `f` at `x` along a single real parameter.
pub fn derivative<V: FdValue>(mut f: impl FnMut(f64) -> Result<V>, x: f64, scheme: &FdScheme) -> Result<V> {
    let h = scheme.step(x);
    match scheme.order {
        4 => {
            let p2 = f(x + 2.0 * h)?;
            let p1 = f(x + h)?;
            let m1 = f(x - h)?;
            let m2 = f(x - 2.0 * h)?;
            Ok(((p1 - m1) * 8.0 - (p2 - m2)) * (1.0 / (12.0 * h)))
        }
        _ => {
            let p1 = f(x + h)?;
            let m1 = f(x - h)?;
            Ok((p1 - m1) * (1.0 / (2.0 * h)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    F,
    Theta,
    W,
    Q,
    G,
}

impl Slot {
    /// Number of scalar components.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(self) -> usize {
        match self {
            Slot::F => 9,
            Slot::Theta => 1,
            _ => 3,
        }
    }
}

fn component(s: &ReferentialState, slot: Slot, idx: usize) -> f64 {
    match slot {
        Slot::F => s.f[idx / 3][idx % 3],
        Slot::Theta => s.theta,
        Slot::W => s.w[idx],
        Slot::Q => s.q[idx],
        Slot::G => s.g[idx],
    }
}

fn with_component(s: &ReferentialState, slot: Slot, idx: usize, value: f64) -> ReferentialState {
    let mut out = *s;
    match slot {
        Slot::F => out.f[idx / 3][idx % 3] = value,
        Slot::Theta => out.theta = value,
        Slot::W => out.w[idx] = value,
        Slot::Q => out.q[idx] = value,
        Slot::G => out.g[idx] = value,
    }
    out
}

/// Partial derivative of `f` with respect to one scalar component of a slot.
pub fn partial<V: FdValue>(
    f: &dyn Fn(&ReferentialState) -> Result<V>,
    at: &ReferentialState,
    slot: Slot,
    idx: usize,
    scheme: &FdScheme,
) -> Result<V> {
    derivative(|x| f(&with_component(at, slot, idx, x)), component(at, slot, idx), scheme)
}

/// Gradient of a scalar function with respect to one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gradient {
    Scalar(f64),
    Vector(Vec3),
    Tensor(Mat3),
}

pub fn fd_scalar_gradient(
    f: &dyn Fn(&ReferentialState) -> Result<f64>,
    at: &ReferentialState,
    wrt: Slot,
    scheme: &FdScheme,
) -> Result<Gradient> {
    Ok(match wrt {
        Slot::Theta => Gradient::Scalar(fd_theta(f, at, scheme)?),
        Slot::F => Gradient::Tensor(fd_f(f, at, scheme)?),
        v => Gradient::Vector(fd_vector(f, at, v, scheme)?),
    })
}

pub fn fd_theta<V: FdValue>(
    f: &dyn Fn(&ReferentialState) -> Result<V>,
    at: &ReferentialState,
    scheme: &FdScheme,
) -> Result<V> {
    partial(f, at, Slot::Theta, 0, scheme)
}

/// Gradient with respect to a vector slot (`W`, `Q` or `G`).
pub fn fd_vector(
    f: &dyn Fn(&ReferentialState) -> Result<f64>,
    at: &ReferentialState,
    slot: Slot,
    scheme: &FdScheme,
) -> Result<Vec3> {
    debug_assert_eq!(slot.len(), 3);
    let mut out = Vec3::ZERO;
    for k in 0..3 {
        out[k] = partial(f, at, slot, k, scheme)?;
    }
    Ok(out)
}

/// `∂f/∂F` laid out like `F` itself.
pub fn fd_f(f: &dyn Fn(&ReferentialState) -> Result<f64>, at: &ReferentialState, scheme: &FdScheme) -> Result<Mat3> {
    let mut out = Mat3::ZERO;
    for idx in 0..9 {
        out[idx / 3][idx % 3] = partial(f, at, Slot::F, idx, scheme)?;
    }
    Ok(out)
}

/// Tensor-valued derivative with respect to `θ` or `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum TensorDerivative {
    Theta(Mat3),
    F(Tensor4),
}

pub fn fd_tensor_derivative(
    f: &dyn Fn(&ReferentialState) -> Result<Mat3>,
    at: &ReferentialState,
    wrt: Slot,
    scheme: &FdScheme,
) -> Result<TensorDerivative> {
    match wrt {
        Slot::Theta => Ok(TensorDerivative::Theta(fd_theta(f, at, scheme)?)),
        Slot::F => Ok(TensorDerivative::F(fd_tensor_f(f, at, scheme)?)),
        other => Err(invalid("wrt", format!("tensor derivatives are taken with respect to θ or F, not {other:?}"))),
    }
}

pub fn fd_tensor_f(
    f: &dyn Fn(&ReferentialState) -> Result<Mat3>,
    at: &ReferentialState,
    scheme: &FdScheme,
) -> Result<Tensor4> {
    let mut out = Tensor4::ZERO;
    for idx in 0..9 {
        out.slices[idx / 3][idx % 3] = partial(f, at, Slot::F, idx, scheme)?;
    }
    Ok(out)
}

/// `[∂M/∂W_0, ∂M/∂W_1, ∂M/∂W_2]`.
pub fn fd_tensor_w(
    f: &dyn Fn(&ReferentialState) -> Result<Mat3>,
    at: &ReferentialState,
    scheme: &FdScheme,
) -> Result<[Mat3; 3]> {
    Ok([
        partial(f, at, Slot::W, 0, scheme)?,
        partial(f, at, Slot::W, 1, scheme)?,
        partial(f, at, Slot::W, 2, scheme)?,
    ])
}
