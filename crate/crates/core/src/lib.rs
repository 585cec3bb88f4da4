//! Forced impact oscillator with Coulomb friction between two rigid walls:
//!
//! ```text
//! x'' = F cos(w t) - f sgn(x'),   l <= x <= r,   v -> -v at the walls.
//! ```
//!
//! The crate integrates the non-smooth flow exactly (closed-form flights, located
//! events), studies the stroboscopic map and its periodic orbits, runs chaos and
//! basin diagnostics, and certifies the elliptic fixed point with interval
//! arithmetic.

pub mod diagnostics;
pub mod error;
pub mod melnikov;
pub mod model;
pub mod multiparticle;
pub mod orbits;
pub mod perturbed;
pub mod rigorous;
pub mod strobomap;

pub use error::{Error, Result};
pub use model::{Params, State};
