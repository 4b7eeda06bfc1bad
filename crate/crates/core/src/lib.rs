//! Certified bounds on the ℓ₂-induced gain of discrete-time linear systems
//! restricted to nonnegative inputs, and small-gain stability tests for
//! recurrent networks with ReLU activations.
//!
//! ```
//! use posgain::datasets::four_state_siso;
//! use posgain::posnorm::{hinf_norm, upper_bound_pos, verify_certificate};
//!
//! let sys = four_state_siso();
//! let (gamma, cert) = upper_bound_pos(&sys, 2, 1e-6)?;
//! assert!(gamma < hinf_norm(&sys, 1e-6)?);
//! assert!(verify_certificate(&sys, &cert).valid);
//! # Ok::<(), posgain::Error>(())
//! ```
//!
//! Modules, bottom up:
//!
//! - [`numkernel`]: dense matrices, symmetric eigenvalues, Lyapunov solves.
//! - [`cones`]: matrix cones and the interior-point solver.
//! - [`lti`]: state-space systems, simulation and lifting.
//! - [`posnorm`]: the H∞ norm and positive-gain bounds with certificates.
//! - [`rnn`]: ReLU network models, small-gain tests and region sweeps.

pub mod cones;
pub mod datasets;
pub mod error;
pub mod lti;
pub mod numkernel;
pub mod posnorm;
pub mod rnn;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/cones.md")]
    struct Cones;
    #[doc = include_str!("../../../book/src/lifting.md")]
    struct Lifting;
    #[doc = include_str!("../../../book/src/bounds.md")]
    struct Bounds;
    #[doc = include_str!("../../../book/src/rnn.md")]
    struct Rnn;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
