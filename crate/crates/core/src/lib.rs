//! Numerical laboratory for the hyperbolic-elliptic radiating gas model
//! `u_t + f(u)_x + g(u)_y + div q = 0`, `-grad div q + q + grad u = 0`
//! on the half-line and the half-plane.

pub mod acceptance;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod evolve;
pub mod flux;
pub mod grid;
pub mod hopf_cole;
pub mod jet;
pub mod oracle;
pub mod profiles;
pub mod runner;
pub mod scenario;
pub mod special;
pub mod tridiag;

pub use error::{Error, Result};
