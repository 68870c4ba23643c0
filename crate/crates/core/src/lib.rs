//! Thermo-electro-elastic constitutive engine with Cattaneo heat conduction.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`] and [`kinematics`]: 3×3 algebra and the pulls/pushes between
//!   spatial and referential fields.
//! - [`material`] and [`fd`]: material models `(ψ₀, K, T)` and the finite
//!   differences every audit compares against.
//! - [`engine`] and [`audit`]: the second-sound constitutive functions and the
//!   seeded checks of their thermodynamic restrictions.
//! - [`fourier`]: the classical limit where the heat flux is a response
//!   function.
//! - [`sim`]: a 1-D staggered-grid simulator for second sound.

// `!(x > 0.0)` is how NaN is made to fail a positivity check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod audit;
pub mod engine;
pub mod error;
pub mod fd;
pub mod fourier;
pub mod kinematics;
pub mod linalg;
pub mod material;
pub mod sim;

pub use engine::{CattaneoEngine, ConstitutiveOutput, DerivativeSource, DerivedTensors};
pub use error::{Error, Result};
pub use fd::FdScheme;
pub use kinematics::{KinematicState, ReferentialState};
pub use linalg::{Mat3, Tensor4, Vec3};
pub use material::{CustomModel, MaterialModel, PresetMaterial};
pub use sim::{Scenario, Simulation};
