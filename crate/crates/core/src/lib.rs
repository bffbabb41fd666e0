//! Fundamental solution and nonlinear solver for the integro-differential
//! operator
//!
//! ```text
//! L u = u_t - eps u_xx + a u + b ∫_0^t exp(-beta (t - tau)) u(x, tau) dtau
//! ```
//!
//! on the whole real line, together with its application to the
//! FitzHugh-Nagumo system.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! numerics; file formats and the command-line front end live in the
//! `memdiff` companion crate.
//!
//! Module map:
//!
//! - [`specfun`]: Bessel functions `J0`, `J1`, `I0`, `I1`.
//! - [`model`]: operator parameters and the scalar functions derived from them.
//! - [`quadrature`]: adaptive Gauss-Kronrod integration with endpoint
//!   square-root singularity removal.
//! - [`kernels`]: pointwise evaluation of the fundamental solution `K` and the
//!   companion kernels `K1`, `K2`, with their closed-form bounds.
//! - [`convolve`]: grids, fields and kernel convolutions in space and time.
//! - [`solver`]: contraction (Picard) iteration for the nonlinear problem,
//!   the explicit linear solution and the a-priori bound.
//! - [`fhn`]: FitzHugh-Nagumo kinetics, steady states, traveling front and
//!   the kernel-based solution formulas.
//! - [`oracle`]: independent finite-difference reference solvers.
//! - [`verify`]: registry of executable checks of identities and bounds.
#![no_std]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;

pub mod convolve;
pub mod fhn;
pub mod kernels;
pub mod model;
pub mod oracle;
pub mod quadrature;
pub mod solver;
pub mod specfun;
pub mod verify;

pub use error::{Error, Result};
pub use model::ModelParams;
