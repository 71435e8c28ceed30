//! Coinciding equilibria of n-player stingy races.
//!
//! Against `n - 1` opponents who all play `x`, a player's payoff for time `t`
//! is `P_t * a_t^(n-1)` where `a_t` is the chance one opponent has not yet
//! succeeded. Taking `(n-1)`-th roots turns this into a two-player race whose
//! row player uses `p_t = P_t^(1/(n-1))`, so the two-player machinery applies.

use rayon::prelude::*;
use serde::Serialize;

use crate::constants;
use crate::error::{Error, Result};
use crate::payoff::{
    tie_profile, total_tie_probability, BimatrixGame, DeviationTable, MixedStrategy, RaceConfig,
    RaceGame, Variant,
};
use crate::schedules::{DensityReport, ProbabilitySchedule};
use crate::solve2::{BoundCheck, BoundReport, Relation, SideInternals};
use crate::verify::verify_profile_np;

/// Entrywise `(n-1)`-th root of the schedule.
///
/// Fails if rounding makes two neighbouring roots equal.
pub fn reduced_game(schedule: &ProbabilitySchedule, n: usize) -> Result<ProbabilitySchedule> {
    if n < 2 {
        return Err(Error::TooFewPlayers { n, min: 2 });
    }
    if n == 2 {
        return Ok(schedule.clone());
    }
    let e = (n - 1) as f64;
    let probs: Vec<f64> = schedule.probs().iter().map(|&p| (p.ln() / e).exp()).collect();
    for t in 1..probs.len() {
        if probs[t] <= probs[t - 1] {
            return Err(Error::ReducedCollapse { time: t + 1 });
        }
    }
    ProbabilitySchedule::new(probs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiInternals {
    pub reduced: ProbabilitySchedule,
    /// Weights making a reduced-game row player indifferent, indexed by time - 1.
    pub side: SideInternals<f64>,
    pub tstar: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSolution {
    pub n: usize,
    pub tstar: usize,
    /// The common strategy of all players.
    pub strategy: MixedStrategy,
    pub z: f64,
    /// `(1/z)^(n-1)`.
    pub per_player_payoff: f64,
    pub marginal: bool,
    pub internals: MultiInternals,
}

impl MultiSolution {
    /// `n` copies of the common strategy.
    pub fn profile(&self) -> Vec<MixedStrategy> {
        vec![self.strategy.clone(); self.n]
    }

    pub fn config(&self, schedule: &ProbabilitySchedule, variant: Variant) -> Result<RaceConfig> {
        RaceConfig::symmetric(self.n, schedule.clone(), variant)
    }
}

/// The unique coinciding equilibrium of the symmetric n-player stingy race.
pub fn multi_coinciding_equilibrium(schedule: &ProbabilitySchedule, n: usize) -> Result<MultiSolution> {
    let reduced = reduced_game(schedule, n)?;
    let side = SideInternals::compute(reduced.probs(), schedule.probs());
    let tstar = side
        .tstar
        .ok_or_else(|| Error::Precondition("no start with positive weight".into()))?;
    let (strategy, z) = side
        .strategy(tstar)
        .ok_or_else(|| Error::Precondition("start weights do not form a strategy".into()))?;
    let marginal = side.marginal;
    Ok(MultiSolution {
        n,
        tstar,
        strategy,
        z,
        per_player_payoff: z.recip().powi(n as i32 - 1),
        marginal,
        internals: MultiInternals {
            reduced,
            side,
            tstar,
        },
    })
}

/// `(e_t^T A y)^(n-1)` for every time, where `A` is the reduced game's row matrix.
pub fn reduced_payoff_powers(sol: &MultiSolution, schedule: &ProbabilitySchedule) -> Result<Vec<f64>> {
    let game = RaceGame::new(sol.internals.reduced.clone(), schedule.clone(), Variant::Stingy)?;
    Ok(game
        .row_payoffs(sol.strategy.weights())
        .into_iter()
        .map(|v| v.powi(sol.n as i32 - 1))
        .collect())
}

fn dense_for_players(density: &DensityReport, n: usize) -> bool {
    constants::multiplayer_floor_regime(n, density.ell) <= density.k as f64
}

/// Start-probability and payoff bounds of the n-player equilibrium.
pub fn multi_bounds_check(
    sol: &MultiSolution,
    schedule: &ProbabilitySchedule,
    density: &DensityReport,
) -> BoundReport {
    let n = sol.n;
    let inv_n = 1.0 / n as f64;
    let floor = constants::multiplayer_start_floor(n);
    let mut checks = Vec::new();
    if sol.tstar >= 2 {
        let prev = *schedule.p(sol.tstar - 1);
        checks.push(BoundCheck::evaluate("prev_prob_below_1_over_n", prev, Relation::Lt, inv_n));
        checks.push(
            BoundCheck::evaluate("prev_prob_at_least_1_over_2en", prev, Relation::Ge, floor)
                .gated(dense_for_players(density, n)),
        );
    } else {
        checks.push(BoundCheck::vacuous("prev_prob_below_1_over_n", Relation::Lt, inv_n));
        checks.push(BoundCheck::vacuous("prev_prob_at_least_1_over_2en", Relation::Ge, floor));
    }
    checks.push(BoundCheck::evaluate(
        "payoff_below_1_over_n",
        sol.per_player_payoff,
        Relation::Lt,
        inv_n,
    ));
    BoundReport { checks }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TieReport {
    /// Probability that the earliest success is shared.
    pub event_probability: f64,
    /// `sum_i cp_i(x)`; counts a tie once per participant.
    pub participation_sum: f64,
    /// Largest `cp_i(x_{-i}, v)` over players and pure deviations `v`.
    pub worst_deviation_tie: f64,
    pub worst_deviation_time: usize,
    pub checks: BoundReport,
}

/// Tie probabilities of the equilibrium and of every pure deviation against it.
pub fn multi_tie_check(
    sol: &MultiSolution,
    schedule: &ProbabilitySchedule,
    density: &DensityReport,
) -> Result<TieReport> {
    let cfg = sol.config(schedule, Variant::Stingy)?;
    let profile = sol.profile();
    let event = total_tie_probability(&cfg, &profile)?;
    let per_player: Vec<(f64, f64, usize)> = (0..sol.n)
        .into_par_iter()
        .map(|i| {
            let cp = tie_profile(&cfg, i, &profile)?.total;
            let table = DeviationTable::compute(&cfg, i, &profile)?;
            let (t, worst) = table
                .ties
                .iter()
                .map(|row| row.iter().sum::<f64>())
                .enumerate()
                .fold((0, 0.0f64), |best, (t, v)| if v > best.1 { (t, v) } else { best });
            Ok((cp, worst, t + 1))
        })
        .collect::<Result<_>>()?;
    let participation: f64 = per_player.iter().map(|v| v.0).sum();
    let (_, worst, worst_time) = per_player
        .iter()
        .copied()
        .fold((0.0, 0.0, 1), |a, b| if b.1 > a.1 { b } else { a });
    let (ell, k) = (density.ell, density.k as f64);
    let applicable = dense_for_players(density, sol.n);
    let total_bound = constants::multiplayer_tie_bound(sol.n, ell, k);
    let checks = vec![
        BoundCheck::evaluate("tie_event", event, Relation::Le, total_bound).gated(applicable),
        BoundCheck::evaluate("tie_participation_sum", participation, Relation::Le, total_bound)
            .gated(applicable),
        BoundCheck::evaluate(
            "deviation_tie",
            worst,
            Relation::Le,
            constants::multiplayer_eps(ell, k),
        )
        .gated(applicable),
    ];
    Ok(TieReport {
        event_probability: event,
        participation_sum: participation,
        worst_deviation_tie: worst,
        worst_deviation_time: worst_time,
        checks: BoundReport { checks },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ApproxReport {
    /// Largest gain from a pure deviation in the tie-splitting race.
    pub worst_regret: f64,
    pub worst_regret_time: usize,
    pub epsilon_well_supported: f64,
    pub split_payoff: f64,
    pub checks: BoundReport,
}

/// How far the stingy equilibrium is from an equilibrium of the tie-splitting race.
pub fn multi_approx_check(
    sol: &MultiSolution,
    schedule: &ProbabilitySchedule,
    density: &DensityReport,
) -> Result<ApproxReport> {
    let cfg = sol.config(schedule, Variant::TieSplitting)?;
    let verdict = verify_profile_np(&cfg, &sol.profile(), 0.0)?;
    let worst = verdict
        .worst_deviations
        .iter()
        .max_by(|a, b| a.gain.total_cmp(&b.gain))
        .expect("at least two players");
    let (ell, k) = (density.ell, density.k as f64);
    let applicable = dense_for_players(density, sol.n);
    let mut checks = vec![BoundCheck::evaluate(
        "regret_at_most_8el_over_k",
        verdict.epsilon_approx,
        Relation::Le,
        constants::multiplayer_eps(ell, k),
    )
    .gated(applicable)];
    if sol.n == 2 {
        checks.push(
            BoundCheck::evaluate(
                "well_supported_two_player",
                verdict.epsilon_well_supported,
                Relation::Le,
                constants::two_player_well_supported_eps(ell, k),
            )
            .gated(density.in_dense_regime()),
        );
    }
    Ok(ApproxReport {
        worst_regret: verdict.epsilon_approx,
        worst_regret_time: worst.time,
        epsilon_well_supported: verdict.epsilon_well_supported,
        split_payoff: verdict.payoffs[0],
        checks: BoundReport { checks },
    })
}
