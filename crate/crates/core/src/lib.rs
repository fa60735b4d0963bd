//! Cascaded two-atom/two-cavity motional entanglement: closed-form adiabatic
//! solutions, exact moment-equation engines, a truncated Fock-space oracle and
//! regime-of-validity checks.

pub mod analytic;
pub mod compare;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod model;
pub mod ode;
pub mod regime;
pub mod runner;
pub mod scenario;
pub mod sweep;

pub use error::{Error, Result};
