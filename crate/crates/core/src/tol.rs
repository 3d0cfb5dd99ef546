//! Numeric tolerances used across the crate.
//!
//! All state vectors and operators live in `f64`; circuits stay short
//! (well under 10^3 gates), so accumulated rounding sits far below these
//! bounds. Comparisons against exactly-derived values use [`EXACT`] unless
//! a type invariant states otherwise.

/// Default absolute tolerance for comparisons against exact oracle values.
pub const EXACT: f64 = 1e-9;

/// Unitarity, idempotence, and Hermiticity checks on operators.
pub const OPERATOR: f64 = 1e-10;

/// Squared-norm deviation allowed for a pure state.
pub const NORM: f64 = 1e-12;

/// Closed-form scalar results (no accumulation at all).
pub const CLOSED_FORM: f64 = 1e-12;

/// Below this, a projected branch counts as impossible and sampling it is
/// an internal error rather than a renormalization.
pub const ZERO_BRANCH: f64 = 1e-14;
