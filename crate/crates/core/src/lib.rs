//! Mean-field (Curie-Weiss) Widom-Rowlinson model.
//!
//! A two-component gas in which unlike particles inside a vessel of volume
//! `V` repel each other with intensity `a/V` and like particles do not
//! interact. The crate covers
//!
//! * [`specialfn`]: the scaled Lambert function `u(a, x)`, the free-energy
//!   surface `f(a, x)` and the order-parameter profile `psi(y)`;
//! * [`phase`]: the landscape `E(y)`, its stationary points, the
//!   single-phase / critical / coexistence classification and the spinodal;
//! * [`eos`]: densities, pressures, one-component isotherms with their
//!   plateau, scale invariance and the strong-repulsion limit;
//! * [`finite_volume`]: exact finite-volume partition sums used as ground
//!   truth for every thermodynamic-limit formula above.
//!
//! All quantities are dimensionless (the reciprocal temperature is absorbed
//! into `a` and the chemical potentials).

pub mod eos;
mod error;
pub mod finite_volume;
pub mod phase;
mod roots;
pub mod specialfn;

pub use error::{Error, Result};
pub use phase::{PhasePoint, PhaseSolution, RegionLabel};
