//! Success-probability schedules and their structural diagnostics.

use std::f64::consts::PI;

use num_bigint::BigUint;
use serde::Serialize;

use crate::constants;
use crate::error::{Error, Result};
use crate::field::Field;

/// Cumulative success probabilities `p_1 < p_2 < ... < p_K`, all in `(0, 1]`.
///
/// Times are 1-based in every accessor; `probs()[t - 1]` is the probability
/// of success when measuring at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilitySchedule<F = f64> {
    probs: Vec<F>,
}

impl<F: Field> ProbabilitySchedule<F> {
    pub fn new(probs: Vec<F>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptySchedule);
        }
        for (i, p) in probs.iter().enumerate() {
            if !(*p > F::zero() && *p <= F::one()) {
                return Err(Error::ProbabilityOutOfRange {
                    time: i + 1,
                    value: p.to_f64(),
                });
            }
            if i > 0 && probs[i - 1] >= *p {
                return Err(Error::NotIncreasing { time: i + 1 });
            }
        }
        Ok(Self { probs })
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    /// Probability at 1-based time `t`.
    pub fn p(&self, t: usize) -> &F {
        &self.probs[t - 1]
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn into_probs(self) -> Vec<F> {
        self.probs
    }

    pub fn to_f64(&self) -> ProbabilitySchedule<f64> {
        ProbabilitySchedule {
            probs: self.probs.iter().map(Field::to_f64).collect(),
        }
    }

    pub fn density(&self) -> DensityReport {
        density_report(self)
    }

    pub fn convexity(&self) -> ConvexityReport<F> {
        convexity_report(self)
    }
}

impl ProbabilitySchedule<f64> {
    pub fn to_exact(&self) -> ProbabilitySchedule<crate::field::Exact> {
        ProbabilitySchedule {
            probs: self.probs.iter().map(|&p| Field::from_f64(p)).collect(),
        }
    }
}

/// Number of measurement times `ceil(pi/4 * sqrt(N) - 3/2)` of a Grover race.
///
/// For integral `N` the ceiling is settled with a big-integer comparison against
/// a 60-digit expansion of `pi^2`, so values sitting on an integer boundary are
/// not misrounded.
pub fn grover_strategy_count(n: f64) -> i64 {
    let x = PI / 4.0 * n.sqrt() - 1.5;
    let mut k = x.ceil() as i64;
    if n.fract() == 0.0 && (1.0..1e36).contains(&n) {
        let big_n = BigUint::from(n as u128);
        while !at_most(&big_n, k) {
            k += 1;
        }
        while at_most(&big_n, k - 1) {
            k -= 1;
        }
    }
    k
}

const PI_SQUARED_E60: &str = "9869604401089358618834490999876151135313699407240790626413349";

/// Whether `pi/4 * sqrt(n) - 3/2 <= k`, i.e. `pi^2 n <= (4k + 6)^2`.
fn at_most(n: &BigUint, k: i64) -> bool {
    let side = 4 * k + 6;
    if side < 0 {
        return false;
    }
    let pi2: BigUint = PI_SQUARED_E60.parse().expect("digits");
    let scale = BigUint::from(10u32).pow(60);
    let rhs = BigUint::from(side as u64).pow(2) * &scale;
    let lo = &pi2 * n;
    // pi^2 * 10^60 lies in [pi2, pi2 + 1), so pi^2 * n * 10^60 lies in [lo, lo + n).
    // The interval never straddles rhs for n below 10^36.
    rhs >= lo
}

/// Grover schedule `p_t = sin^2((2t + 1) * asin(1 / sqrt(N)))` for `t = 1..K`.
pub fn grover_schedule(n: u64) -> Result<ProbabilitySchedule> {
    grover_schedule_capped(n, constants::k_cap_from_env())
}

pub fn grover_schedule_capped(n: u64, cap: u64) -> Result<ProbabilitySchedule> {
    let nf = n as f64;
    let k = grover_strategy_count(nf);
    if k < 2 {
        return Err(Error::SearchSpaceTooSmall {
            n: nf,
            k: k.max(0) as u64,
        });
    }
    let k = k as u64;
    if k > cap {
        return Err(Error::ExceedsCap { k, cap });
    }
    let theta = (1.0 / nf.sqrt()).asin();
    let probs = (1..=k)
        .map(|t| {
            let s = ((2 * t + 1) as f64 * theta).sin();
            s * s
        })
        .collect();
    ProbabilitySchedule::new(probs)
}

/// Density diagnostics: the minimal `ell` for which the schedule is `ell`-dense.
#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct DensityReport {
    pub ell: f64,
    pub k: usize,
    /// `ell / K`.
    pub ratio: f64,
    pub first_prob: f64,
    pub terminal_gap: f64,
    pub max_gap: f64,
    /// Later time of the widest consecutive gap (0 when K = 1).
    pub max_gap_time: usize,
}

impl DensityReport {
    /// Whether every density condition holds at `ell`.
    pub fn is_dense_for(&self, ell: f64) -> bool {
        let k = self.k as f64;
        k * self.first_prob <= ell && k * self.terminal_gap <= ell && k * self.max_gap <= ell
    }

    /// Whether `K >= 6 ell`, the regime of the two-player payoff bounds.
    pub fn in_dense_regime(&self) -> bool {
        self.k as f64 >= constants::DENSE_REGIME_FACTOR * self.ell
    }
}

pub fn density_report<F: Field>(schedule: &ProbabilitySchedule<F>) -> DensityReport {
    let p = schedule.probs();
    let k = p.len();
    let first = p[0].to_f64();
    let terminal = p[k - 1].complement().to_f64();
    let (mut max_gap, mut max_gap_time) = (0.0f64, 0usize);
    for t in 1..k {
        let g = (p[t].clone() - p[t - 1].clone()).to_f64();
        if g > max_gap {
            max_gap = g;
            max_gap_time = t + 1;
        }
    }
    let kf = k as f64;
    let ell = (kf * first).max(kf * terminal).max(kf * max_gap);
    DensityReport {
        ell,
        k,
        ratio: ell / kf,
        first_prob: first,
        terminal_gap: terminal,
        max_gap,
        max_gap_time,
    }
}

/// Convexity diagnostics: `2/p_i <= 1/p_{i-1} + 1/p_{i+1}` for interior times.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityReport<F = f64> {
    pub is_convex: bool,
    /// Largest value of `2/p_i - 1/p_{i-1} - 1/p_{i+1}`; zero when K < 3.
    pub worst_violation: F,
    pub worst_time: Option<usize>,
}

pub fn convexity_report<F: Field>(schedule: &ProbabilitySchedule<F>) -> ConvexityReport<F> {
    let p = schedule.probs();
    let mut worst: Option<(F, usize)> = None;
    for i in 1..p.len().saturating_sub(1) {
        let two = F::one() + F::one();
        let v = two / p[i].clone() - p[i - 1].recip() - p[i + 1].recip();
        if worst.as_ref().is_none_or(|(w, _)| v > *w) {
            worst = Some((v, i + 1));
        }
    }
    match worst {
        Some((v, t)) => ConvexityReport {
            is_convex: v <= F::zero(),
            worst_violation: v,
            worst_time: Some(t),
        },
        None => ConvexityReport {
            is_convex: true,
            worst_violation: F::zero(),
            worst_time: None,
        },
    }
}

/// Analytic parameters of a Grover race too large (or too unrounded) to materialize.
#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct AnalyticParams {
    /// Mining difficulty the search space was derived from, if any.
    pub difficulty: Option<f64>,
    pub search_space: f64,
    #[serde(rename = "K")]
    pub k: u64,
    /// Measured density when the schedule fits under the cap, the Grover bound otherwise.
    pub ell: f64,
    pub materializable: bool,
    pub cap: u64,
    /// Well-supported epsilon of the two-player stingy equilibrium.
    pub two_player_eps: f64,
    /// Approximation epsilon of the n-player stingy equilibrium.
    pub multiplayer_eps: f64,
    /// Tie probability bound divided by the number of players.
    pub tie_bound_per_player: f64,
}

pub fn analytic_params(search_space: f64, cap: u64) -> Result<AnalyticParams> {
    if !(search_space.is_finite() && search_space > 0.0) {
        return Err(Error::Precondition(format!(
            "search space must be positive, got {search_space}"
        )));
    }
    let n = search_space;
    let k = grover_strategy_count(n);
    if k < 2 {
        return Err(Error::SearchSpaceTooSmall {
            n,
            k: k.max(0) as u64,
        });
    }
    let k = k as u64;
    let materializable = k <= cap && n <= u64::MAX as f64 && n.fract() == 0.0;
    let ell = if materializable {
        grover_schedule_capped(n as u64, cap)?.density().ell
    } else {
        constants::GROVER_DENSITY
    };
    let kf = k as f64;
    Ok(AnalyticParams {
        difficulty: None,
        search_space: n,
        k,
        ell,
        materializable,
        cap,
        two_player_eps: constants::two_player_well_supported_eps(ell, kf),
        multiplayer_eps: constants::multiplayer_eps(ell, kf),
        tie_bound_per_player: constants::multiplayer_tie_bound(1, ell, kf),
    })
}

pub fn bitcoin_schedule_params(difficulty: f64) -> Result<AnalyticParams> {
    bitcoin_schedule_params_capped(difficulty, constants::k_cap_from_env())
}

/// A difficulty of `D` means a search space of `D * 2^32` hashes.
pub fn bitcoin_schedule_params_capped(difficulty: f64, cap: u64) -> Result<AnalyticParams> {
    if !(difficulty.is_finite() && difficulty > 0.0) {
        return Err(Error::Precondition(format!(
            "difficulty must be positive, got {difficulty}"
        )));
    }
    let mut out = analytic_params(constants::BITCOIN_SPACE_PER_DIFFICULTY * difficulty, cap)?;
    out.difficulty = Some(difficulty);
    Ok(out)
}
