//! Laboratory for sequential posted-price, blind-offer, and enhanced
//! posted-price mechanisms over discrete, possibly correlated valuation
//! distributions.
//!
//! Everything is computed in exact rational arithmetic: distributions,
//! linear-programming revenue bounds, policy constructions and expected
//! revenues are all `BigRational` values, so equality assertions in tests
//! and audits are exact. Monte Carlo estimation is the only approximate
//! path and is clearly marked as such.

pub mod cli;
pub mod dependence;
pub mod evaluation;
pub mod generators;
pub mod io;
pub mod lp;
pub mod mechanisms;
pub mod rational;
pub mod simplex;
pub mod valuation;

pub use rational::Rational;
pub use valuation::{Instance, JointDistribution};

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A distribution failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    /// A conditioning event or lookup has zero probability mass.
    #[error("empty event: {0}")]
    EmptyEvent(String),
    /// The instance shape is outside what an operation supports.
    #[error("unsupported instance: {0}")]
    UnsupportedInstance(String),
    /// Exact enumeration would exceed the configured size threshold.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// An audited table is missing a profile its audit must inspect.
    #[error("table coverage: {0}")]
    Coverage(String),
    /// Parse or serialization failure in the text formats.
    #[error("format error: {0}")]
    Format(String),
    /// An internal consistency check failed; indicates a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
