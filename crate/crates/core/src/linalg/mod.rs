//! Dense complex linear algebra: products, inverses, Schur form, SVD and
//! spectral decisions with explicit tolerances.

pub mod eigen;
pub mod matrix;
pub mod schur;
pub mod svd;

pub use eigen::{
    diagonalize, simultaneously_diagonalizable, spectrum, DefectWitness, DiagReport, Obstruction,
    SimDiagOutcome, SpectrumReport, Tolerances,
};
pub use matrix::{modulus, outer2, Matrix};
pub use schur::{hessenberg, schur, Schur};
pub use svd::{null_space, numerical_rank, singular_values, svd, Svd};
