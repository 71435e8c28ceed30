//! Catalog of the numeric constants used by the bound checks.
//!
//! Each bound is exposed as a function of the schedule density `ell` and the
//! strategy count `k` so the checks and the reports read from one place.

use std::f64::consts::{E, PI};

pub const SQRT2_MINUS_1: f64 = std::f64::consts::SQRT_2 - 1.0;
pub const SQRT2_PLUS_1: f64 = std::f64::consts::SQRT_2 + 1.0;

/// Slack granted to floating-point comparisons against non-strict bounds.
pub const ARITH_SLACK: f64 = 1e-12;

/// Gap below which a start index is reported as marginal.
pub const MARGINAL_GAP: f64 = 1e-12;

/// Density of any Grover schedule is at most this.
pub const GROVER_DENSITY: f64 = PI / 2.0;

/// Payoff bounds need at least this many strategies per unit of density.
pub const DENSE_REGIME_FACTOR: f64 = 6.0;

/// Lower bound on the start probability in the dense regime.
pub const START_PROB_FLOOR: f64 = 5.0 / 21.0;

/// Default cap on materialized strategy counts.
pub const DEFAULT_K_CAP: u64 = 10_000_000;

/// Environment variable overriding [`DEFAULT_K_CAP`].
pub const K_CAP_ENV: &str = "QRACE_K_CAP";

/// Support enumeration limit on strategies per player.
pub const ENUMERATION_MAX_K: usize = 6;

/// Number of grid points in the default dual-certificate sweep.
pub const DUAL_GRID_POINTS: usize = 200;

/// Bitcoin search space per unit of difficulty.
pub const BITCOIN_SPACE_PER_DIFFICULTY: f64 = 4_294_967_296.0;

/// Order of magnitude of the approximation epsilon quoted for Bitcoin-sized races.
pub const BITCOIN_EPS_SCALE: f64 = 3e-10;

/// Two-player collision bound on `sigma / z^2`.
pub fn collision_fraction_bound(ell: f64, k: f64) -> f64 {
    6.0 * ell / k
}

/// Two-player bound on the raw collision sum `sigma`.
pub fn collision_sum_bound(ell: f64, k: f64) -> f64 {
    196.0 * ell / k
}

/// Width of the two-sided payoff window around `sqrt(2) - 1`.
pub fn payoff_window(ell: f64, k: f64) -> f64 {
    50.0 * std::f64::consts::SQRT_2 * ell / k
}

/// Well-supported epsilon of the stingy equilibrium inside the tie-splitting game.
pub fn two_player_well_supported_eps(ell: f64, k: f64) -> f64 {
    7.0 * SQRT2_MINUS_1 * ell / k
}

/// Approximation epsilon of the stingy equilibrium in the n-player tie-splitting game.
pub fn multiplayer_eps(ell: f64, k: f64) -> f64 {
    8.0 * E * ell / k
}

/// Bound on the probability that some tie occurs among `n` players.
pub fn multiplayer_tie_bound(n: usize, ell: f64, k: f64) -> f64 {
    8.0 * E * n as f64 * ell / k
}

/// Upper limit on the symmetric two-player payoff certified by the dual.
pub fn payoff_ceiling(ell: f64, k: f64) -> f64 {
    SQRT2_MINUS_1 + 5.0 * (ell / k).sqrt()
}

/// Lower bound on the cumulative probability just before the n-player start.
pub fn multiplayer_start_floor(n: usize) -> f64 {
    1.0 / (2.0 * E * n as f64)
}

/// Strategy count needed for [`multiplayer_start_floor`] to apply.
pub fn multiplayer_floor_regime(n: usize, ell: f64) -> f64 {
    4.0 * E * n as f64 * ell
}

/// Largest certificate objective that still proves the threshold, `1 - sqrt(1 - 2c)`.
pub fn dual_objective_limit(c: f64) -> f64 {
    1.0 - (1.0 - 2.0 * c).sqrt()
}

/// Resolve the strategy-count cap from the environment.
pub fn k_cap_from_env() -> u64 {
    std::env::var(K_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|v| v.is_finite() && *v >= 1.0)
        .map(|v| v as u64)
        .unwrap_or(DEFAULT_K_CAP)
}
