//! Exact computations around Siegel modular forms of degree g.
//!
//! The crate covers the root datum of GSp_2g, Clifford algebra arithmetic for
//! the dual group GSpin_{2g+1}, trace-truncated Fourier expansions, the
//! Böcherer–Nagaoka theta operator and the Eholzer–Ibukiyama bracket, Hecke
//! operators through explicit right-coset representatives, and the Satake
//! bookkeeping that shows how a theta operator twists Hecke eigensystems.
//!
//! All arithmetic is exact; see [`exactring`] for the coefficient rings.

pub mod clifford;
pub mod exactring;
pub mod hecke;
pub mod linalg;
pub mod qexp;
pub mod rootdatum;
pub mod satake;
pub mod selftest;
pub mod theta;
