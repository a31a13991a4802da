//! Random mixed-unitary channels and Monte Carlo checks of how well they
//! randomize quantum states in every Schatten p-norm.
//!
//! Layout, bottom up:
//! - [`linalg`]: dense complex matrices, Jacobi eigensolver, QR
//! - [`norms`]: Schatten norms and inequality checkers
//! - [`haar`]: seeded Haar unitaries and pure states
//! - [`randomizer`]: the channel, its deviation and certification
//! - [`net`]: greedy eta-nets of pure states
//! - [`experiments`]: expectation, concentration and cardinality experiments
//! - [`config`], [`report`], [`cli`]: the command-line front end

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod haar;
pub mod linalg;
pub mod net;
pub mod norms;
pub mod randomizer;
pub mod report;

pub use error::{Error, Result};
pub use haar::{PureState, Seed, UnitaryEnsemble};
pub use linalg::ComplexMatrix;
pub use norms::PExponent;
pub use randomizer::RandomizingChannel;
