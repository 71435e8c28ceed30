//! Alternating and alternating-coinciding equilibria of the symmetric stingy race.
//!
//! In an alternating equilibrium the first mover plays `T, T+2, ..., K-1` and the
//! other player `T+1, T+3, ..., K`. In an alternating-coinciding equilibrium the
//! players alternate up to `c - 1` and then both mix over `c..=K`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Accumulator, Field};
use crate::index::alternating_set;
use crate::payoff::MixedStrategy;
use crate::schedules::ProbabilitySchedule;
use crate::solve2::{tie_probability_2p, EquilibriumSolution, SideInternals, SolutionKind};

/// `q~_t = (1/p_t)(1/p_{t-1} - 1/p_{t+1})` for `2 <= t <= K-1`, indexed by time - 1.
pub fn skip_weights<F: Field>(p: &[F]) -> Vec<Option<F>> {
    let k = p.len();
    (0..k)
        .map(|i| {
            (i >= 1 && i + 1 < k)
                .then(|| p[i].recip() * (p[i - 1].recip() - p[i + 1].recip()))
        })
        .collect()
}

fn sum_over<F: Field>(times: &[usize], f: impl Fn(usize) -> F) -> F {
    let mut acc = F::Sum::default();
    for &t in times {
        acc.add(&f(t));
    }
    acc.value()
}

/// Quantities of the alternating construction for one start `T` with `K - T` odd.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingStart<F = f64> {
    pub start: usize,
    /// First mover's unnormalized start weight.
    pub r: F,
    /// First mover's total unnormalized mass.
    pub z: F,
    /// Second mover's unnormalized weight on `K`.
    pub last_weight: F,
    /// Second mover's total unnormalized mass.
    pub total: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingInternals<F = f64> {
    pub skip: Vec<Option<F>>,
    /// Every admissible start, in decreasing order of `T`.
    pub starts: Vec<AlternatingStart<F>>,
    /// Smallest admissible start with a positive start weight.
    pub tstar: usize,
}

impl<F: Field> AlternatingInternals<F> {
    pub fn compute(schedule: &ProbabilitySchedule<F>) -> Result<Self> {
        let p = schedule.probs();
        let k = p.len();
        if k < 2 {
            return Err(Error::Precondition("alternating supports need K >= 2".into()));
        }
        let skip = skip_weights(p);
        let sk = |t: usize| skip[t - 1].clone().expect("interior time");
        let miss = |t: usize| p[t - 1].complement();
        let mut first_fail = F::Sum::default();
        let mut first_mass = F::Sum::default();
        let mut second_fail = F::Sum::default();
        let mut second_mass = F::Sum::default();
        let mut starts = Vec::new();
        let mut t = k - 1;
        loop {
            let r = (p[k - 1].recip() - first_fail.value()) / miss(t);
            let last_weight = p[k - 2].recip() - second_fail.value();
            starts.push(AlternatingStart {
                start: t,
                z: r.clone() + first_mass.value(),
                r,
                total: last_weight.clone() + second_mass.value(),
                last_weight,
            });
            if t < 3 {
                break;
            }
            first_fail.add(&(miss(t) * sk(t)));
            first_mass.add(&sk(t));
            second_fail.add(&(miss(t - 1) * sk(t - 1)));
            second_mass.add(&sk(t - 1));
            t -= 2;
        }
        let tstar = starts
            .iter()
            .filter(|s| s.r > F::zero())
            .map(|s| s.start)
            .min()
            .expect("the start K - 1 always has positive weight");
        Ok(Self { skip, starts, tstar })
    }

    pub fn at(&self, t: usize) -> Option<&AlternatingStart<F>> {
        self.starts.iter().find(|s| s.start == t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlternatingFailure {
    /// The second mover's weight on `K` is not positive.
    NonPositiveLastWeight,
    /// The first mover would rather play `K` than stay in their support.
    LastTimeDeviation,
    /// The second mover would rather play just before the start.
    EarlyDeviation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlternatingOutcome<F = f64> {
    Found {
        solution: EquilibriumSolution<F>,
        internals: AlternatingInternals<F>,
    },
    NoAlternating {
        reason: AlternatingFailure,
        internals: AlternatingInternals<F>,
    },
}

impl<F: Field> AlternatingOutcome<F> {
    pub fn solution(&self) -> Option<&EquilibriumSolution<F>> {
        match self {
            AlternatingOutcome::Found { solution, .. } => Some(solution),
            AlternatingOutcome::NoAlternating { .. } => None,
        }
    }

    pub fn internals(&self) -> &AlternatingInternals<F> {
        match self {
            AlternatingOutcome::Found { internals, .. }
            | AlternatingOutcome::NoAlternating { internals, .. } => internals,
        }
    }
}

/// The unique alternating equilibrium (first mover in the row), if it exists.
pub fn alternating_equilibrium<F: Field>(schedule: &ProbabilitySchedule<F>) -> Result<AlternatingOutcome<F>> {
    let internals = AlternatingInternals::compute(schedule)?;
    let p = schedule.probs();
    let k = p.len();
    let t = internals.tstar;
    let s = internals.at(t).expect("tstar is an admissible start").clone();
    if s.last_weight <= F::zero() {
        return Ok(AlternatingOutcome::NoAlternating {
            reason: AlternatingFailure::NonPositiveLastWeight,
            internals,
        });
    }
    let pk = p[k - 1].clone();
    let last_payoff = pk.clone() * (p[k - 2].recip() - pk * s.last_weight.clone());
    if last_payoff > F::one() {
        return Ok(AlternatingOutcome::NoAlternating {
            reason: AlternatingFailure::LastTimeDeviation,
            internals,
        });
    }
    // Minimality of the start rules this out for T >= 3 but not at T = 2.
    if t >= 2 && p[t - 2].clone() * s.z.clone() > F::one() {
        return Ok(AlternatingOutcome::NoAlternating {
            reason: AlternatingFailure::EarlyDeviation,
            internals,
        });
    }
    let mut x = vec![F::zero(); k];
    x[t - 1] = s.r.clone() / s.z.clone();
    for i in alternating_set(t + 2, k - 1) {
        x[i - 1] = internals.skip[i - 1].clone().expect("interior") / s.z.clone();
    }
    let mut y = vec![F::zero(); k];
    for j in alternating_set(t + 1, k - 2) {
        y[j - 1] = internals.skip[j - 1].clone().expect("interior") / s.total.clone();
    }
    y[k - 1] = s.last_weight.clone() / s.total.clone();
    let row = MixedStrategy::new(x)?;
    let col = MixedStrategy::new(y)?;
    let solution = EquilibriumSolution {
        kind: SolutionKind::Alternating,
        start: t,
        change: None,
        tie_probability: tie_probability_2p(schedule, schedule, &row, &col),
        row,
        col,
        payoff_row: s.total.recip(),
        payoff_col: s.z.recip(),
        sigma: None,
        tstar: coinciding_start(schedule),
        marginal: false,
        swap_is_equilibrium: true,
    };
    Ok(AlternatingOutcome::Found {
        solution,
        internals,
    })
}

fn coinciding_start<F: Field>(schedule: &ProbabilitySchedule<F>) -> Option<usize> {
    SideInternals::compute(schedule.probs(), schedule.probs()).tstar
}

/// Evaluation of one `(start, change)` pair of the alternating-coinciding construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChangePointCandidate<F = f64> {
    pub start: usize,
    pub change: usize,
    /// First mover's unnormalized start weight.
    pub r: F,
    /// First mover's total unnormalized mass.
    pub z: F,
    /// Second mover's remaining mass, `1/p_K` minus the known miss-weighted terms.
    pub residual: F,
    /// Second mover's unnormalized weights at `c - 1` and `c`.
    pub before_change: F,
    pub at_change: F,
    /// Second mover's total unnormalized mass.
    pub total: F,
    /// Window `lower <= residual < upper` equivalent to the sign and deviation conditions at the change.
    pub window_lower: F,
    pub window_upper: F,
    pub start_deviation_ok: bool,
    pub change_deviation_ok: bool,
    pub is_equilibrium: bool,
}

struct Tables<F> {
    p: Vec<F>,
    q: Vec<Option<F>>,
    skip: Vec<Option<F>>,
    /// `tail_fail[c - 1] = sum_{i >= c} (1 - p_i) q_i`, `tail_mass[c - 1] = sum_{i >= c} q_i`.
    tail_fail: Vec<F>,
    tail_mass: Vec<F>,
}

impl<F: Field> Tables<F> {
    fn new(schedule: &ProbabilitySchedule<F>) -> Self {
        let p = schedule.probs().to_vec();
        let k = p.len();
        let q = SideInternals::compute(&p, &p).q;
        let skip = skip_weights(&p);
        let mut tail_fail = vec![F::zero(); k + 1];
        let mut tail_mass = vec![F::zero(); k + 1];
        let mut f = F::Sum::default();
        let mut m = F::Sum::default();
        for i in (1..k).rev() {
            let qi = q[i].clone().expect("interior");
            f.add(&(p[i].complement() * qi.clone()));
            m.add(&qi);
            tail_fail[i] = f.value();
            tail_mass[i] = m.value();
        }
        Self {
            p,
            q,
            skip,
            tail_fail,
            tail_mass,
        }
    }

    fn k(&self) -> usize {
        self.p.len()
    }

    fn p(&self, t: usize) -> F {
        self.p[t - 1].clone()
    }

    fn skip(&self, t: usize) -> F {
        self.skip[t - 1].clone().expect("interior time")
    }

    fn q(&self, t: usize) -> F {
        self.q[t - 1].clone().expect("time after the first")
    }

    /// Sums over times `>= c` (1-based); zero past `K`.
    fn tails(&self, c: usize) -> (F, F) {
        (self.tail_fail[c - 1].clone(), self.tail_mass[c - 1].clone())
    }

    /// `r_{T,c}` numerator: `1/p_K - sum_{D(T+2, c-2)} (1-p) q~ - sum_{i >= c} (1-p) q`.
    fn start_numerator(&self, t: usize, c: usize) -> F {
        let set = alternating_set(t + 2, c - 2);
        let alt = sum_over(&set, |i| self.p(i).complement() * self.skip(i));
        self.p(self.k()).recip() - alt - self.tails(c).0
    }

    fn evaluate(&self, t: usize, c: usize) -> ChangePointCandidate<F> {
        let k = self.k();
        let numerator = self.start_numerator(t, c);
        let r = numerator / self.p(t).complement();
        let first_set = alternating_set(t + 2, c - 2);
        let z = r.clone() + sum_over(&first_set, |i| self.skip(i)) + self.tails(c).1;
        let second_set = alternating_set(t + 1, c - 3);
        let (after_fail, after_mass) = self.tails(c + 1);
        let residual = self.p(k).recip()
            - sum_over(&second_set, |i| self.p(i).complement() * self.skip(i))
            - after_fail;
        let (pb, pc) = (self.p(c - 1), self.p(c));
        let gap = pc.clone() - pb.clone();
        let mass_before = pb.clone() * self.skip(c - 1);
        let before_change =
            (pc.clone() * residual.clone() - pc.complement() * mass_before.clone()) / gap.clone();
        let at_change =
            (pb.complement() * mass_before.clone() - pb.clone() * residual.clone()) / gap.clone();
        let total = sum_over(&second_set, |i| self.skip(i))
            + before_change.clone()
            + at_change.clone()
            + after_mass.clone();
        let window_upper = pb.complement() * self.skip(c - 1);
        let window_lower = pb.complement() * self.q(c - 1) + pc.complement() * self.q(c);
        let start_deviation_ok = t == 1 || z.clone() <= self.p(t - 1).recip();
        let known = sum_over(&second_set, |i| self.p(i).complement() * self.skip(i));
        let change_payoff = pb.clone()
            * (known + pb.complement() * before_change.clone() + at_change.clone() + after_mass);
        let change_deviation_ok = change_payoff <= F::one();
        let is_equilibrium = r > F::zero()
            && before_change > F::zero()
            && at_change > F::zero()
            && start_deviation_ok
            && change_deviation_ok;
        ChangePointCandidate {
            start: t,
            change: c,
            r,
            z,
            residual,
            before_change,
            at_change,
            total,
            window_lower,
            window_upper,
            start_deviation_ok,
            change_deviation_ok,
            is_equilibrium,
        }
    }

    fn solution(&self, cand: &ChangePointCandidate<F>, tstar: Option<usize>) -> Result<EquilibriumSolution<F>> {
        let k = self.k();
        let (t, c) = (cand.start, cand.change);
        let mut x = vec![F::zero(); k];
        x[t - 1] = cand.r.clone() / cand.z.clone();
        for i in alternating_set(t + 2, c - 2) {
            x[i - 1] = self.skip(i) / cand.z.clone();
        }
        for i in c..=k {
            x[i - 1] = self.q(i) / cand.z.clone();
        }
        let mut y = vec![F::zero(); k];
        for j in alternating_set(t + 1, c - 3) {
            y[j - 1] = self.skip(j) / cand.total.clone();
        }
        y[c - 2] = cand.before_change.clone() / cand.total.clone();
        y[c - 1] = cand.at_change.clone() / cand.total.clone();
        for j in c + 1..=k {
            y[j - 1] = self.q(j) / cand.total.clone();
        }
        let row = MixedStrategy::new(x)?;
        let col = MixedStrategy::new(y)?;
        let sched = ProbabilitySchedule::new(self.p.clone())?;
        Ok(EquilibriumSolution {
            kind: SolutionKind::AltCoinciding,
            start: t,
            change: Some(c),
            tie_probability: tie_probability_2p(&sched, &sched, &row, &col),
            row,
            col,
            payoff_row: cand.total.recip(),
            payoff_col: cand.z.recip(),
            sigma: None,
            tstar,
            marginal: false,
            swap_is_equilibrium: true,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AltCoincidingReport<F = f64> {
    pub equilibria: Vec<EquilibriumSolution<F>>,
    /// One entry per change point that has a start candidate.
    pub candidates: Vec<ChangePointCandidate<F>>,
}

/// Evaluate the `(start, change)` pair directly, without the start-selection rule.
pub fn alt_coinciding_at<F: Field>(
    schedule: &ProbabilitySchedule<F>,
    start: usize,
    change: usize,
) -> Result<(ChangePointCandidate<F>, Option<EquilibriumSolution<F>>)> {
    let k = schedule.k();
    if !(start >= 1 && change >= start + 2 && change <= k && (change - start) % 2 == 0) {
        return Err(Error::Precondition(format!(
            "start {start} and change {change} do not describe an alternating-coinciding support"
        )));
    }
    let tables = Tables::new(schedule);
    let cand = tables.evaluate(start, change);
    let sol = if cand.is_equilibrium {
        Some(tables.solution(&cand, coinciding_start(schedule))?)
    } else {
        None
    };
    Ok((cand, sol))
}

/// All alternating-coinciding equilibria (first mover in the row).
///
/// For each change point `c` the only possible start is the smallest `T` of the
/// same parity with a positive start weight, so the search is `O(K^2)`.
pub fn alt_coinciding_equilibria<F: Field>(schedule: &ProbabilitySchedule<F>) -> Result<AltCoincidingReport<F>> {
    let k = schedule.k();
    let tables = Tables::new(schedule);
    let tstar = coinciding_start(schedule);
    let mut report = AltCoincidingReport {
        equilibria: Vec::new(),
        candidates: Vec::new(),
    };
    for c in 3..=k {
        let Some(t) = start_candidate(&tables, c) else {
            continue;
        };
        let cand = tables.evaluate(t, c);
        if cand.is_equilibrium {
            report.equilibria.push(tables.solution(&cand, tstar)?);
        }
        report.candidates.push(cand);
    }
    Ok(report)
}

/// Smallest `T <= c - 2` with `T = c (mod 2)` and positive start weight.
fn start_candidate<F: Field>(tables: &Tables<F>, c: usize) -> Option<usize> {
    let k = tables.k();
    let mut acc = F::Sum::default();
    let base = tables.p(k).recip() - tables.tails(c).0;
    let mut best = None;
    let mut t = c - 2;
    loop {
        if base.clone() - acc.value() > F::zero() {
            best = Some(t);
        }
        if t < 3 {
            break;
        }
        acc.add(&(tables.p(t).complement() * tables.skip(t)));
        t -= 2;
    }
    best
}

/// Start index of the alternating-coinciding construction for change point `c`.
pub fn alt_coinciding_start<F: Field>(schedule: &ProbabilitySchedule<F>, c: usize) -> Option<usize> {
    if c < 3 || c > schedule.k() {
        return None;
    }
    start_candidate(&Tables::new(schedule), c)
}

/// Relations between the coinciding start `T*`, the alternating start and the
/// alternating-coinciding starts.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TstarRelations {
    pub tstar: usize,
    pub tstar_alternating: usize,
    pub convex: bool,
    /// `T* <= T~* + 1`, valid for every schedule.
    pub general_holds: bool,
    /// Parity rule for convex schedules; `None` when the schedule is not convex.
    pub parity_holds: Option<bool>,
    /// `(c, start)` pairs for `c > T*` violating `T* - 1 <= start <= T~* + 1`
    /// (or `start <= T~*` when `c` and `K` share parity).
    pub sandwich_violations: Vec<(usize, usize)>,
    /// Alternating-coinciding starts outside `[T* - 1, T* + 2]` on a convex schedule.
    pub window_violations: Vec<usize>,
}

impl TstarRelations {
    pub fn all_hold(&self) -> bool {
        self.general_holds
            && self.parity_holds != Some(false)
            && self.sandwich_violations.is_empty()
            && self.window_violations.is_empty()
    }
}

pub fn tstar_relations_check<F: Field>(schedule: &ProbabilitySchedule<F>) -> Result<TstarRelations> {
    let k = schedule.k();
    let tstar = coinciding_start(schedule)
        .ok_or_else(|| Error::Precondition("no coinciding start".into()))?;
    let tt = AlternatingInternals::compute(schedule)?.tstar;
    let convex = schedule.convexity().is_convex;
    let parity_holds = convex.then(|| {
        if (k - tstar) % 2 == 1 {
            tt == tstar
        } else {
            tt + 1 == tstar || tt == tstar + 1
        }
    });
    let tables = Tables::new(schedule);
    let mut sandwich_violations = Vec::new();
    for c in (tstar + 1).max(3)..=k {
        if let Some(s) = start_candidate(&tables, c) {
            let upper = if (k - c) % 2 == 0 { tt } else { tt + 1 };
            if s + 1 < tstar || s > upper {
                sandwich_violations.push((c, s));
            }
        }
    }
    let window_violations = if convex {
        alt_coinciding_equilibria(schedule)?
            .equilibria
            .iter()
            .map(|e| e.start)
            .filter(|&s| s + 1 < tstar || s > tstar + 2)
            .collect()
    } else {
        Vec::new()
    };
    Ok(TstarRelations {
        tstar,
        tstar_alternating: tt,
        convex,
        general_holds: tstar <= tt + 1,
        parity_holds,
        sandwich_violations,
        window_violations,
    })
}
