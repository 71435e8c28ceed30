//! Equilibria of quantum search races.
//!
//! Players race to find a marked item with Grover-style search. Each picks a
//! single time to measure; measuring at time `t` succeeds with probability
//! `p_t`. The crate builds the resulting games, solves their equilibria in
//! closed form, verifies them numerically or exactly, and simulates races.

pub mod appendix_eq;
pub mod constants;
pub mod error;
pub mod field;
pub mod index;
pub mod io;
pub mod payoff;
pub mod schedules;
pub mod sim;
pub mod solve2;
pub mod solven;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Exact, Field};
pub use payoff::{MixedStrategy, Variant};
pub use schedules::ProbabilitySchedule;
