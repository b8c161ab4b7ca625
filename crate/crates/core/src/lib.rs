//! Construction, analysis and simulation of bias-tailored quantum LDPC codes
//! built from pairs of classical cellular automaton codes.
//!
//! The crate is organized around a small set of layers:
//!
//! - [`gf2`]: dense bit-packed linear algebra over GF(2),
//! - [`ca`]: cellular automaton stencils and the classical codes they generate,
//! - [`builder`]: quantum code assembly on the torus, cylinder and open plane,
//!   plus the Hadamard deformation of the gray qubit sector,
//! - [`decode`]: belief propagation, ordered-statistics post-processing and
//!   exact small-code decoders,
//! - [`analysis`]: distance estimation, mixed logical-representative profiles
//!   and logical basis construction,
//! - [`search`]: the rule-space search pipeline and code-family fitting,
//! - [`noise`] / [`sim`]: biased Pauli noise and Monte Carlo memory
//!   experiments,
//! - [`export`]: alist / dense-text / JSON code formats and CSV reports.

pub mod analysis;
pub mod builder;
pub mod ca;
pub mod decode;
pub mod export;
pub mod gf2;
pub mod noise;
pub mod search;
pub mod sim;

mod error;

pub use error::{Error, Result};
