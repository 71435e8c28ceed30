use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("schedule must contain at least one probability")]
    EmptySchedule,
    #[error("probability at time {time} is {value}, outside (0, 1]")]
    ProbabilityOutOfRange { time: usize, value: f64 },
    #[error("schedule is not strictly increasing at time {time}")]
    NotIncreasing { time: usize },
    #[error("search space size {n} gives {k} measurement times; at least 2 are required")]
    SearchSpaceTooSmall { n: f64, k: u64 },
    #[error("strategy count {k} exceeds the materialization cap {cap}")]
    ExceedsCap { k: u64, cap: u64 },
    #[error("strategy has {got} weights, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("weight at time {time} is negative ({value})")]
    NegativeWeight { time: usize, value: f64 },
    #[error("weights sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("player count must be at least {min}, got {n}")]
    TooFewPlayers { n: usize, min: usize },
    #[error("an asymmetric schedule pair only describes a two-player race")]
    AsymmetricMultiplayer,
    #[error("player index {index} out of range for {n} players")]
    PlayerOutOfRange { index: usize, n: usize },
    #[error("reduced schedule loses strict monotonicity at time {time}")]
    ReducedCollapse { time: usize },
    #[error("support enumeration is limited to {max} strategies per player, got {k}")]
    TooLargeForEnumeration { k: usize, max: usize },
    #[error("operation needs a symmetric coinciding equilibrium")]
    NotSymmetricCoinciding,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("threshold {c} outside the supported range [{lo}, 1]")]
    ThresholdOutOfRange { c: f64, lo: f64 },
    #[error("simulation needs at least one trial")]
    NoTrials,
    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
