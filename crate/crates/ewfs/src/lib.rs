//! Exact simulation and analysis of extended Wigner's friend protocols.
//!
//! The crate is organised as a pipeline:
//!
//! * [`qsim`] — exact small-register statevector simulation: tensor products,
//!   unitaries, projective measurement in arbitrary orthonormal bases, and the
//!   unitary model of a friend's measurement inside a sealed lab.
//! * [`scenario`] — declarative protocol descriptions (friend measurements,
//!   supermeasurements, ask steps), the canonical protocols, and the compiler
//!   from Bell scenarios to extended Wigner's friend protocols.
//! * [`empirical`] — per-context outcome tables, their possibilistic supports,
//!   the hard-coded oracle tables, and no-signalling checks.
//! * [`contextuality`] — classification of empirical models in the hierarchy
//!   noncontextual ≺ probabilistic ≺ logical ≺ strong, with an exact-rational
//!   feasibility kernel for the probabilistic level.
//! * [`reasoning`] — agents derive possibilistic constraints from protocols,
//!   communicate them, and a consistency checker decides SAT/UNSAT under a
//!   configurable assumption set.
//! * [`report`] — serialisable report payloads shared by the CLI and the
//!   browser demo.

pub mod contextuality;
pub mod empirical;
pub mod qsim;
pub mod rational;
pub mod reasoning;
pub mod report;
pub mod scenario;
pub mod textio;

pub use qsim::{Complex, OrthonormalBasis, StateVector, Unitary};
pub use scenario::{MeasurementId, Protocol, Step};

/// Probability threshold below which an event counts as impossible.
///
/// True zeros in the canonical models are exact cancellations that land below
/// 1e-12 in double precision, while genuine possibilities are at least 1/12.
pub const POSSIBILISTIC_EPS: f64 = 1e-9;

/// Tolerance for norms, orthogonality and unitarity checks.
pub const UNITARITY_TOL: f64 = 1e-10;
