//! Rank certification and rank-n approximation for complex third-order
//! tensors.
//!
//! * [`rank::bi_rank_check`] certifies `rank = m` (or `rank > m`) for
//!   `m × m × n` tensors from the spectral structure of the slice ratios.
//! * [`approx::rank_n_approximate`] produces, for any `ε > 0`, a certified
//!   rank-`n` tensor within l1 distance `ε` of a given `n × n × 2` tensor.
//! * [`approx::build_leap_family`] constructs rank-`2n` tensors converging to
//!   a tensor of rank `3n`.
//! * [`action`] implements the `GL_l × GL_m × GL_n` action, and [`oracle`]
//!   gives independent ALS-based rank evidence for tiny tensors.

pub mod action;
pub mod approx;
pub mod cli;
pub mod error;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod rank;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{Matrix, Tolerances};
pub use num_complex::Complex64;
pub use tensor::{CpDecomposition, CpTerm, Tensor3};
