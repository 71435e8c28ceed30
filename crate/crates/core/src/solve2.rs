//! Closed-form coinciding equilibria of two-player stingy races.
//!
//! Each side of the equilibrium solves an indifference system: the column
//! player's mix must leave the row player indifferent over `T..=K` and vice
//! versa. The system is triangular, so the unnormalized weights come from a
//! single backward pass with compensated suffix sums.

use serde::Serialize;

use crate::constants::{self, ARITH_SLACK, MARGINAL_GAP, SQRT2_MINUS_1, SQRT2_PLUS_1};
use crate::error::{Error, Result};
use crate::field::{Accumulator, Field};
use crate::payoff::MixedStrategy;
use crate::schedules::{DensityReport, ProbabilitySchedule};

/// Unnormalized weights of one player's coinciding strategy, indexed by time - 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInternals<F = f64> {
    /// Interior weight of time `i`; `None` at time 1.
    pub q: Vec<Option<F>>,
    /// Start weight when the support begins at time `T`; `None` where undefined.
    pub r: Vec<Option<F>>,
    /// Total mass `r_T + sum_{i > T} q_i`.
    pub z: Vec<Option<F>>,
    /// Smallest time with positive start weight.
    pub tstar: Option<usize>,
    /// The start weight just below `tstar` is within rounding of zero.
    pub marginal: bool,
}

impl<F: Field> SideInternals<F> {
    /// Weights of the player using `own`, chosen to make the opponent (using `target`)
    /// indifferent over every time from the start to `K`.
    pub fn compute(target: &[F], own: &[F]) -> Self {
        let k = own.len();
        let mut q = vec![None; k];
        for i in 1..k {
            q[i] = Some(own[i].recip() * (target[i - 1].recip() - target[i].recip()));
        }
        let mut r = vec![None; k];
        let mut z = vec![None; k];
        let last = target[k - 1].recip();
        let mut fail_mass = F::Sum::default();
        let mut mass = F::Sum::default();
        for t in (0..k).rev() {
            let miss = own[t].complement();
            if miss > F::zero() {
                let rt = (last.clone() - fail_mass.value()) / miss.clone();
                z[t] = Some(rt.clone() + mass.value());
                r[t] = Some(rt);
            }
            if let Some(qt) = &q[t] {
                fail_mass.add(&(miss * qt.clone()));
                mass.add(qt);
            }
        }
        let tstar = r
            .iter()
            .position(|v| v.as_ref().is_some_and(|x| *x > F::zero()))
            .map(|i| i + 1);
        let marginal = match tstar {
            Some(t) if t >= 2 => r[t - 2].as_ref().is_some_and(|x| x.negligible(MARGINAL_GAP)),
            _ => false,
        };
        Self {
            q,
            r,
            z,
            tstar,
            marginal,
        }
    }

    /// Normalized strategy supported on `t..=K`.
    pub fn strategy(&self, t: usize) -> Option<(MixedStrategy<F>, F)> {
        let k = self.q.len();
        let z = self.z[t - 1].clone()?;
        let mut w = vec![F::zero(); k];
        w[t - 1] = self.r[t - 1].clone()? / z.clone();
        for i in t..k {
            w[i] = self.q[i].clone()? / z.clone();
        }
        MixedStrategy::new(w).ok().map(|s| (s, z))
    }
}

/// Both sides of the coinciding construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidingInternals<F = f64> {
    /// Row player's weights (they make the column player indifferent).
    pub row: SideInternals<F>,
    /// Column player's weights.
    pub col: SideInternals<F>,
}

impl<F: Field> CoincidingInternals<F> {
    pub fn compute(row: &ProbabilitySchedule<F>, col: &ProbabilitySchedule<F>) -> Self {
        Self {
            row: SideInternals::compute(col.probs(), row.probs()),
            col: SideInternals::compute(row.probs(), col.probs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolutionKind {
    Coinciding,
    Alternating,
    AltCoinciding,
}

/// A two-player equilibrium together with its payoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSolution<F = f64> {
    pub kind: SolutionKind,
    /// First time in the union of the supports.
    pub start: usize,
    /// Time from which both players mix (alternating-coinciding only).
    pub change: Option<usize>,
    pub row: MixedStrategy<F>,
    pub col: MixedStrategy<F>,
    pub payoff_row: F,
    pub payoff_col: F,
    /// Probability that both succeed at the same time.
    pub tie_probability: F,
    /// Unnormalized collision sum (symmetric coinciding only).
    pub sigma: Option<F>,
    /// Start of the coinciding equilibrium of the same schedule, when it exists.
    pub tstar: Option<usize>,
    pub marginal: bool,
    /// The game is symmetric, so swapping the two strategies is also an equilibrium.
    pub swap_is_equilibrium: bool,
}

/// Probability that both players succeed at the same time.
pub fn tie_probability_2p<F: Field>(
    row: &ProbabilitySchedule<F>,
    col: &ProbabilitySchedule<F>,
    x: &MixedStrategy<F>,
    y: &MixedStrategy<F>,
) -> F {
    let mut acc = F::Sum::default();
    for t in 0..row.k() {
        acc.add(
            &(x.weights()[t].clone()
                * y.weights()[t].clone()
                * row.probs()[t].clone()
                * col.probs()[t].clone()),
        );
    }
    acc.value()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoincidingOutcome<F = f64> {
    Found {
        solution: EquilibriumSolution<F>,
        internals: CoincidingInternals<F>,
    },
    /// The two start indices differ, so no coinciding equilibrium exists.
    NoCoinciding {
        tstar_row: Option<usize>,
        tstar_col: Option<usize>,
        internals: CoincidingInternals<F>,
    },
}

impl<F: Field> CoincidingOutcome<F> {
    pub fn solution(&self) -> Option<&EquilibriumSolution<F>> {
        match self {
            CoincidingOutcome::Found { solution, .. } => Some(solution),
            CoincidingOutcome::NoCoinciding { .. } => None,
        }
    }

    pub fn internals(&self) -> &CoincidingInternals<F> {
        match self {
            CoincidingOutcome::Found { internals, .. }
            | CoincidingOutcome::NoCoinciding { internals, .. } => internals,
        }
    }
}

/// Coinciding equilibrium of the stingy race between `row` and `col`.
pub fn coinciding_equilibrium<F: Field>(
    row: &ProbabilitySchedule<F>,
    col: &ProbabilitySchedule<F>,
) -> Result<CoincidingOutcome<F>> {
    if row.k() != col.k() {
        return Err(Error::LengthMismatch {
            expected: row.k(),
            got: col.k(),
        });
    }
    let internals = CoincidingInternals::compute(row, col);
    let (ta, tb) = (internals.row.tstar, internals.col.tstar);
    let t = match (ta, tb) {
        (Some(a), Some(b)) if a == b => a,
        _ => {
            return Ok(CoincidingOutcome::NoCoinciding {
                tstar_row: ta,
                tstar_col: tb,
                internals,
            })
        }
    };
    let (x, za) = internals.row.strategy(t).ok_or_else(|| {
        Error::Precondition("row weights do not normalize".into())
    })?;
    let (y, zb) = internals.col.strategy(t).ok_or_else(|| {
        Error::Precondition("column weights do not normalize".into())
    })?;
    let symmetric = row == col;
    let sigma = symmetric.then(|| collision_sum(row.probs(), &internals.row, t));
    let solution = EquilibriumSolution {
        kind: SolutionKind::Coinciding,
        start: t,
        change: None,
        tie_probability: tie_probability_2p(row, col, &x, &y),
        row: x,
        col: y,
        payoff_row: zb.recip(),
        payoff_col: za.recip(),
        sigma,
        tstar: Some(t),
        marginal: internals.row.marginal || internals.col.marginal,
        swap_is_equilibrium: symmetric,
    };
    Ok(CoincidingOutcome::Found {
        solution,
        internals,
    })
}

/// Coinciding equilibrium of the symmetric race, which always exists.
pub fn solve2_symmetric<F: Field>(schedule: &ProbabilitySchedule<F>) -> Result<EquilibriumSolution<F>> {
    match coinciding_equilibrium(schedule, schedule)? {
        CoincidingOutcome::Found { solution, .. } => Ok(solution),
        CoincidingOutcome::NoCoinciding { .. } => Err(Error::Precondition(
            "symmetric race without a coinciding start".into(),
        )),
    }
}

/// `p_T^2 r_T^2 + sum_{i > T} p_i^2 q_i^2`.
fn collision_sum<F: Field>(p: &[F], side: &SideInternals<F>, t: usize) -> F {
    let mut acc = F::Sum::default();
    let r = side.r[t - 1].clone().expect("defined at start");
    acc.add(&(p[t - 1].clone() * p[t - 1].clone() * r.clone() * r));
    for i in t..p.len() {
        let q = side.q[i].clone().expect("interior weight");
        acc.add(&(p[i].clone() * p[i].clone() * q.clone() * q));
    }
    acc.value()
}

/// Outcome probabilities of the symmetric coinciding equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionReport<F = f64> {
    pub sigma: F,
    pub z: F,
    pub tie_probability: F,
    pub no_winner_probability: F,
    /// `(z - 1)^2 - (1 + 1/p_K^2 + sigma)`; zero in exact arithmetic.
    pub squared_identity_residual: F,
    /// `2/z + sigma/z^2 + (1/(p_K z))^2 - 1`; zero in exact arithmetic.
    pub total_probability_residual: F,
}

impl CollisionReport<f64> {
    /// `z - (1 + sqrt(1 + 1/p_K^2 + sigma))`.
    pub fn payoff_identity_gap(&self, p_last: f64) -> f64 {
        self.z - (1.0 + (1.0 + 1.0 / (p_last * p_last) + self.sigma).sqrt())
    }
}

pub fn collision_analytics<F: Field>(
    solution: &EquilibriumSolution<F>,
    schedule: &ProbabilitySchedule<F>,
) -> Result<CollisionReport<F>> {
    let sigma = match (&solution.kind, &solution.sigma) {
        (SolutionKind::Coinciding, Some(s)) if solution.row == solution.col => s.clone(),
        _ => return Err(Error::NotSymmetricCoinciding),
    };
    let z = solution.payoff_row.recip();
    let pk = schedule.p(schedule.k()).clone();
    let inv = (pk.clone() * z.clone()).recip();
    let no_winner = inv.clone() * inv;
    let tie = sigma.clone() / (z.clone() * z.clone());
    let one = F::one();
    let zm1 = z.clone() - one.clone();
    let squared_identity_residual =
        zm1.clone() * zm1 - (one.clone() + (pk.clone() * pk).recip() + sigma.clone());
    let two = one.clone() + one.clone();
    let total_probability_residual =
        two / z.clone() + tie.clone() + no_winner.clone() - one;
    Ok(CollisionReport {
        sigma,
        z,
        tie_probability: tie,
        no_winner_probability: no_winner,
        squared_identity_residual,
        total_probability_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Le,
    Lt,
    Ge,
    Gt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Holds,
    Fails,
    /// A precondition of the bound is not met.
    Inapplicable,
    /// The quantity does not exist (for example a start at time 1 has no predecessor).
    Vacuous,
}

/// One inequality evaluated at a concrete schedule.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BoundCheck {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub status: CheckStatus,
}

impl BoundCheck {
    pub fn evaluate(name: &str, value: f64, relation: Relation, bound: f64) -> Self {
        let holds = match relation {
            Relation::Le => value <= bound + ARITH_SLACK,
            Relation::Lt => value < bound,
            Relation::Ge => value >= bound - ARITH_SLACK,
            Relation::Gt => value > bound,
        };
        Self {
            name: name.to_string(),
            value,
            relation,
            bound,
            status: if holds {
                CheckStatus::Holds
            } else {
                CheckStatus::Fails
            },
        }
    }

    pub fn gated(mut self, applicable: bool) -> Self {
        if !applicable {
            self.status = CheckStatus::Inapplicable;
        }
        self
    }

    pub fn vacuous(name: &str, relation: Relation, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            value: f64::NAN,
            relation,
            bound,
            status: CheckStatus::Vacuous,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub checks: Vec<BoundCheck>,
}

impl BoundReport {
    pub fn verdict(&self) -> Verdict {
        if self.checks.iter().any(|c| c.status == CheckStatus::Fails) {
            Verdict::Fail
        } else if self.checks.iter().any(|c| c.status == CheckStatus::Inapplicable) {
            Verdict::Inapplicable
        } else {
            Verdict::Pass
        }
    }

    pub fn get(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&BoundCheck> {
        self.checks
            .iter()
            .filter(|c| c.status == CheckStatus::Fails)
            .collect()
    }
}

/// Payoff, start-probability and collision bounds of the symmetric coinciding equilibrium.
///
/// Bounds that need `K >= 6 ell` are reported as inapplicable outside that regime.
pub fn payoff_bounds_check(
    solution: &EquilibriumSolution<f64>,
    schedule: &ProbabilitySchedule<f64>,
    density: &DensityReport,
) -> Result<BoundReport> {
    let report = collision_analytics(solution, schedule)?;
    let (ell, k) = (density.ell, schedule.k() as f64);
    let dense = density.in_dense_regime();
    let t = solution.start;
    let z = report.z;
    let payoff = 1.0 / z;
    let tau = constants::payoff_window(ell, k);
    let pt = *schedule.p(t);
    let mut checks = vec![
        BoundCheck::evaluate("payoff_at_most_sqrt2_minus_1", payoff, Relation::Le, SQRT2_MINUS_1),
        if t >= 2 {
            BoundCheck::evaluate(
                "prev_prob_at_most_sqrt2_minus_1",
                *schedule.p(t - 1),
                Relation::Le,
                SQRT2_MINUS_1,
            )
        } else {
            BoundCheck::vacuous("prev_prob_at_most_sqrt2_minus_1", Relation::Le, SQRT2_MINUS_1)
        },
        BoundCheck::evaluate("start_prob_at_least_payoff", pt, Relation::Ge, payoff),
    ];
    let gated = [
        BoundCheck::evaluate("start_prob_above_5_21", pt, Relation::Gt, constants::START_PROB_FLOOR),
        BoundCheck::evaluate("z_upper", z, Relation::Le, SQRT2_PLUS_1 + tau),
        BoundCheck::evaluate(
            "payoff_lower",
            payoff,
            Relation::Ge,
            SQRT2_MINUS_1 - tau * SQRT2_MINUS_1 * SQRT2_MINUS_1,
        ),
        BoundCheck::evaluate(
            "collision_fraction",
            report.tie_probability,
            Relation::Le,
            constants::collision_fraction_bound(ell, k),
        ),
        BoundCheck::evaluate(
            "collision_sum",
            report.sigma,
            Relation::Le,
            constants::collision_sum_bound(ell, k),
        ),
    ];
    checks.extend(gated.into_iter().map(|c| c.gated(dense)));
    Ok(BoundReport { checks })
}
