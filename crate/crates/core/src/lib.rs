//! Compute-and-forward over real Gaussian channels.
//!
//! * [`rates`]: lattice computation rates, coefficient search and baselines.
//! * [`diophantine`]: monomial sets, unique factorization, approximation errors
//!   and separation oracles.
//! * [`alignment`]: the signal-alignment scheme (modulation, channel, ML
//!   demodulation and its parameter formulas).
//! * [`fpcode`]: prime fields and the shared linear outer code.
//! * [`inversion`]: recovering submessages from decoded equations.

pub mod alignment;
pub mod channel;
pub mod diophantine;
pub mod error;
pub mod fpcode;
pub mod inversion;
pub mod rates;
pub mod seed;

pub use channel::ChannelMatrix;
pub use error::{Error, Result};
