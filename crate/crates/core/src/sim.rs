//! Seeded Monte Carlo simulation of one-shot races.
//!
//! Every (trial, player) pair owns a fixed window of a ChaCha stream: the stream
//! id is the player and the window starts at word `4 * trial`. The first draw
//! picks the measuring time, the second decides success. Results therefore do
//! not depend on how trials are split across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants;
use crate::error::{Error, Result};
use crate::payoff::{total_tie_probability, MixedStrategy, RaceConfig, Variant};
use crate::schedules::{grover_schedule_capped, grover_strategy_count};
use crate::solven::multi_coinciding_equilibrium;

const WORDS_PER_TRIAL: u128 = 4;
const CHUNK: u64 = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    pub cfg: RaceConfig,
    pub profile: Vec<MixedStrategy>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SimResult {
    pub trials: u64,
    pub seed: u64,
    pub variant: Variant,
    /// Trials won outright by each player.
    pub win_counts: Vec<u64>,
    /// `tie_counts[m - 2]`: trials whose earliest success is shared by exactly `m` players.
    pub tie_counts: Vec<u64>,
    /// `tie_participation[i][m - 2]`: trials where player `i` is in a tie of exactly `m`.
    pub tie_participation: Vec<Vec<u64>>,
    pub no_winner_count: u64,
    pub win_frequency: Vec<f64>,
    pub win_standard_error: Vec<f64>,
    pub tie_frequency: f64,
    pub tie_standard_error: f64,
    pub tie_frequency_by_size: Vec<f64>,
    pub no_winner_frequency: f64,
    /// Mean payoff of each player under the configured variant.
    pub payoff_estimate: Vec<f64>,
    pub payoff_standard_error: Vec<f64>,
}

impl SimResult {
    /// Wald standard error of a frequency estimated from `count` hits.
    pub fn wald_se(count: u64, trials: u64) -> f64 {
        let f = count as f64 / trials as f64;
        (f * (1.0 - f) / trials as f64).sqrt()
    }

    /// Estimate of the probability that player `i` wins in a tie of exactly `m`.
    pub fn tie_share(&self, i: usize, m: usize) -> f64 {
        self.tie_participation[i][m - 2] as f64 / self.trials as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Counts {
    wins: Vec<u64>,
    ties: Vec<u64>,
    part: Vec<Vec<u64>>,
    none: u64,
}

impl Counts {
    fn new(n: usize) -> Self {
        Self {
            wins: vec![0; n],
            ties: vec![0; n.saturating_sub(1)],
            part: vec![vec![0; n.saturating_sub(1)]; n],
            none: 0,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.wins.iter_mut().zip(&other.wins) {
            *a += b;
        }
        for (a, b) in self.ties.iter_mut().zip(&other.ties) {
            *a += b;
        }
        for (ra, rb) in self.part.iter_mut().zip(&other.part) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b;
            }
        }
        self.none += other.none;
        self
    }
}

fn unit(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Cumulative weights with the last entry of the support pinned to 1.
fn cdf(s: &MixedStrategy) -> Vec<f64> {
    let w = s.weights();
    let mut acc = 0.0;
    let mut out: Vec<f64> = w
        .iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect();
    let last = w.iter().rposition(|v| *v > 0.0).expect("nonempty support");
    for v in &mut out[last..] {
        *v = 1.0;
    }
    out
}

fn sample_time(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u)
}

fn player_rng(seed: u64, player: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(player as u64);
    rng.set_word_pos(trial as u128 * WORDS_PER_TRIAL);
    rng
}

fn run_chunk(sc: &SimConfig, cdfs: &[Vec<f64>], probs: &[&[f64]], start: u64, end: u64) -> Counts {
    let n = sc.cfg.n;
    let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|i| player_rng(sc.seed, i, start)).collect();
    let mut counts = Counts::new(n);
    let mut hit = vec![usize::MAX; n];
    for _ in start..end {
        let mut first = usize::MAX;
        for i in 0..n {
            let t = sample_time(&cdfs[i], unit(rngs[i].next_u64()));
            let success = unit(rngs[i].next_u64()) < probs[i][t];
            hit[i] = if success { t } else { usize::MAX };
            first = first.min(hit[i]);
        }
        if first == usize::MAX {
            counts.none += 1;
            continue;
        }
        let m = hit.iter().filter(|&&h| h == first).count();
        if m == 1 {
            let w = hit.iter().position(|&h| h == first).expect("one winner");
            counts.wins[w] += 1;
        } else {
            counts.ties[m - 2] += 1;
            for i in 0..n {
                if hit[i] == first {
                    counts.part[i][m - 2] += 1;
                }
            }
        }
    }
    counts
}

/// Simulate `trials` independent races. Deterministic in `(seed, config)`.
pub fn run_simulation(sc: &SimConfig) -> Result<SimResult> {
    if sc.trials == 0 {
        return Err(Error::NoTrials);
    }
    let n = sc.cfg.n;
    if sc.profile.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: sc.profile.len(),
        });
    }
    for s in &sc.profile {
        if s.k() != sc.cfg.k() {
            return Err(Error::LengthMismatch {
                expected: sc.cfg.k(),
                got: s.k(),
            });
        }
    }
    let cdfs: Vec<Vec<f64>> = sc.profile.iter().map(cdf).collect();
    let probs: Vec<&[f64]> = (0..n).map(|i| sc.cfg.schedule_of(i).probs()).collect();
    let chunks = sc.trials.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| run_chunk(sc, &cdfs, &probs, c * CHUNK, ((c + 1) * CHUNK).min(sc.trials)))
        .reduce(|| Counts::new(n), Counts::merge);
    Ok(summarize(sc, counts))
}

fn summarize(sc: &SimConfig, c: Counts) -> SimResult {
    let trials = sc.trials;
    let tf = trials as f64;
    let n = sc.cfg.n;
    let tie_total: u64 = c.ties.iter().sum();
    let (payoff_estimate, payoff_standard_error) = (0..n)
        .map(|i| {
            let (mut sum, mut sq) = (c.wins[i] as f64, c.wins[i] as f64);
            if sc.cfg.variant == Variant::TieSplitting {
                for (idx, &k) in c.part[i].iter().enumerate() {
                    let share = 1.0 / (idx + 2) as f64;
                    sum += k as f64 * share;
                    sq += k as f64 * share * share;
                }
            }
            let mean = sum / tf;
            let var = (sq / tf - mean * mean).max(0.0);
            (mean, (var / tf).sqrt())
        })
        .unzip();
    SimResult {
        trials,
        seed: sc.seed,
        variant: sc.cfg.variant,
        win_frequency: c.wins.iter().map(|&w| w as f64 / tf).collect(),
        win_standard_error: c.wins.iter().map(|&w| SimResult::wald_se(w, trials)).collect(),
        tie_frequency: tie_total as f64 / tf,
        tie_standard_error: SimResult::wald_se(tie_total, trials),
        tie_frequency_by_size: c.ties.iter().map(|&k| k as f64 / tf).collect(),
        no_winner_frequency: c.none as f64 / tf,
        no_winner_count: c.none,
        payoff_estimate,
        payoff_standard_error,
        win_counts: c.wins,
        tie_counts: c.ties,
        tie_participation: c.part,
    }
}

/// One row of a fork-rate sweep. Analytic-only rows leave the solved and simulated fields empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "N")]
    pub search_space: f64,
    #[serde(rename = "K")]
    pub k: u64,
    pub n: usize,
    pub ell: f64,
    #[serde(rename = "Tstar")]
    pub tstar: Option<usize>,
    pub analytic_payoff: Option<f64>,
    pub analytic_tie: Option<f64>,
    pub empirical_tie: Option<f64>,
    #[serde(rename = "bound_8enl_over_K")]
    pub tie_bound: f64,
    pub trials: u64,
    pub seed: u64,
}

pub const SWEEP_HEADER: [&str; 11] = [
    "N",
    "K",
    "n",
    "ell",
    "Tstar",
    "analytic_payoff",
    "analytic_tie",
    "empirical_tie",
    "bound_8enl_over_K",
    "trials",
    "seed",
];

/// Solve and simulate the stingy equilibrium for every `(N, n)` pair.
///
/// Search spaces whose strategy count exceeds `cap` (or that are not integers
/// representable in 64 bits) yield analytic-only rows bounded with the Grover density.
pub fn fork_rate_sweep(
    search_spaces: &[f64],
    players: &[usize],
    trials: u64,
    seed: u64,
    cap: u64,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &nn in search_spaces {
        let k = grover_strategy_count(nn);
        if k < 2 {
            return Err(Error::SearchSpaceTooSmall {
                n: nn,
                k: k.max(0) as u64,
            });
        }
        let k = k as u64;
        let materializable = k <= cap && nn.fract() == 0.0 && nn <= u64::MAX as f64;
        let schedule = if materializable {
            Some(grover_schedule_capped(nn as u64, cap)?)
        } else {
            None
        };
        for &n in players {
            if n < 2 {
                return Err(Error::TooFewPlayers { n, min: 2 });
            }
            let row = match &schedule {
                None => {
                    let ell = constants::GROVER_DENSITY;
                    SweepRow {
                        search_space: nn,
                        k,
                        n,
                        ell,
                        tstar: None,
                        analytic_payoff: None,
                        analytic_tie: None,
                        empirical_tie: None,
                        tie_bound: constants::multiplayer_tie_bound(n, ell, k as f64),
                        trials: 0,
                        seed,
                    }
                }
                Some(s) => {
                    let ell = s.density().ell;
                    let sol = multi_coinciding_equilibrium(s, n)?;
                    let cfg = RaceConfig::symmetric(n, s.clone(), Variant::Stingy)?;
                    let profile = sol.profile();
                    let tie = total_tie_probability(&cfg, &profile)?;
                    let empirical = if trials > 0 {
                        let r = run_simulation(&SimConfig {
                            trials,
                            seed,
                            cfg,
                            profile,
                        })?;
                        Some(r.tie_frequency)
                    } else {
                        None
                    };
                    SweepRow {
                        search_space: nn,
                        k,
                        n,
                        ell,
                        tstar: Some(sol.tstar),
                        analytic_payoff: Some(sol.per_player_payoff),
                        analytic_tie: Some(tie),
                        empirical_tie: empirical,
                        tie_bound: constants::multiplayer_tie_bound(n, ell, k as f64),
                        trials,
                        seed,
                    }
                }
            };
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::ProbabilitySchedule;

    #[test]
    fn sampling_respects_support() {
        let s = MixedStrategy::new(vec![0.0, 0.5, 0.0, 0.5, 0.0]).unwrap();
        let c = cdf(&s);
        assert_eq!(sample_time(&c, 0.0), 1);
        assert_eq!(sample_time(&c, 0.4999), 1);
        assert_eq!(sample_time(&c, 0.5), 3);
        assert_eq!(sample_time(&c, 0.9999999999999999), 3);
    }

    #[test]
    fn windows_line_up_with_sequential_draws() {
        let mut seq = player_rng(7, 2, 0);
        for _ in 0..10 * WORDS_PER_TRIAL / 2 {
            seq.next_u64();
        }
        let mut jump = player_rng(7, 2, 10);
        assert_eq!(seq.next_u64(), jump.next_u64());
    }

    #[test]
    fn counts_partition_trials() {
        let s = ProbabilitySchedule::new(vec![0.2, 0.5, 0.9]).unwrap();
        let cfg = RaceConfig::symmetric(3, s, Variant::TieSplitting).unwrap();
        let x = MixedStrategy::new(vec![0.2, 0.3, 0.5]).unwrap();
        let sc = SimConfig {
            trials: 50_001,
            seed: 11,
            cfg,
            profile: vec![x; 3],
        };
        let r = run_simulation(&sc).unwrap();
        let total: u64 = r.win_counts.iter().sum::<u64>() + r.tie_counts.iter().sum::<u64>() + r.no_winner_count;
        assert_eq!(total, sc.trials);
        assert_eq!(r, run_simulation(&sc).unwrap());
    }

    #[test]
    fn zero_trials_rejected() {
        let s = ProbabilitySchedule::new(vec![0.5]).unwrap();
        let cfg = RaceConfig::symmetric(2, s, Variant::Stingy).unwrap();
        let sc = SimConfig {
            trials: 0,
            seed: 0,
            cfg,
            profile: vec![MixedStrategy::pure(1, 1); 2],
        };
        assert!(matches!(run_simulation(&sc), Err(Error::NoTrials)));
    }
}
