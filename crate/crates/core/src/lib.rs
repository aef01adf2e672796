//! Orbit, measure and gauge-function machinery for geometrically finite
//! Kleinian groups acting on the Poincaré ball.

pub mod config;
pub mod dichotomy;
pub mod error;
pub mod gauge;
pub mod group;
pub mod hyperbolic;
pub mod measure;
pub mod quad;
pub mod real;
pub mod trace;

pub use error::{Error, Result};
