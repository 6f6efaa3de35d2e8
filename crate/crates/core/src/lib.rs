//! Joint-measurement statistics, their inversion to system-variable
//! statistics, and the resulting nonclassicality tests.
//!
//! Three measurement schemes are covered:
//!
//! * a two-outcome qubit POVM parameterized by a sharpness `η` ([`qubit`]),
//!   realized optically by a one-photon eight-port homodyne detector
//!   ([`eightport`]);
//! * unbalanced double homodyne detection of a field mode ([`cv`]).
//!
//! In each case the observed joint statistics is pushed through the same
//! inversion that recovers the exact marginals ([`inversion`]). A classical
//! (separable) source always yields a legitimate distribution after
//! inversion; a negative entry, an infeasible separable decomposition
//! ([`separability`]) or an indefinite Gaussian form certifies
//! nonclassicality.

pub mod cv;
pub mod eightport;
mod error;
pub mod formats;
pub mod inversion;
pub mod lp;
pub mod qubit;
pub mod sampling;
pub mod separability;

pub use error::{Error, Result};
pub use inversion::{GaussianChar, JointDist2x2, Kernel2, Sign, SymMatrix2};
pub use qubit::{BlochState, QubitPovm};
