//! Finite-mode laboratory for fermionic Fock spaces over the circle.
//!
//! The crate models truncated one-particle spaces of circle spinors with their
//! real structure, Lagrangian subspaces and their Fock spaces, the Clifford
//! action given by creation and annihilation operators, implementers of
//! Bogoliubov transformations and their U(1) cocycles, loop-group actions and
//! the Lie-algebra cocycle of the central extension, finite-cover Čech data
//! for lifting gerbes and twisted Fock bundles, and the Dirac operator along a
//! loop with its eigenbasis and sublagrangian.
//!
//! Everything is a dense finite-dimensional computation. Identities that hold
//! in the infinite-dimensional theory are checked numerically with explicit
//! tolerances.

pub mod clifford;
pub mod dirac;
pub mod error;
pub mod exec;
pub mod exterior;
pub mod fock;
pub mod gerbe;
pub mod implementer;
pub mod json;
pub mod lagrangian;
pub mod linalg;
pub mod loopgroup;
pub mod modespace;
pub mod sampling;
pub mod suites;

pub use clifford::{CliffordWord, OrthogonalMap, SkewSymmetricMap};
pub use error::{Error, Result};
pub use exec::Exec;
pub use fock::{FockSpace, FockVector};
pub use implementer::{Implementer, PhaseRule};
pub use lagrangian::{Lagrangian, Subspace, Sublagrangian, Verdict};
pub use modespace::{ModeSpace, ModeVector, Parity, RealStructureMap};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
/// Dense real matrix.
pub type RMat = nalgebra::DMatrix<f64>;
