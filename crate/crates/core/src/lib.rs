//! Computational companion for continued fractions with bounded partial
//! quotients: exact word/matrix arithmetic, continuant enumeration,
//! Hausdorff dimension of the limit Cantor sets, matrix-product ensembles,
//! congruence closures, exponential sums, and discrepancy of the associated
//! two-dimensional lattice point sets.

pub mod cf;
pub mod dimension;
pub mod enumerate;
pub mod error;
pub mod expsum;
pub mod io;
pub mod modular;
pub mod products;
pub mod qmc;

pub use cf::{Alphabet, CfWord, Fraction, Mat2, SpectralData};
pub use error::{Error, Result};
