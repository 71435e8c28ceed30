//! Equilibrium verification, support enumeration and dual certificates.

use serde::Serialize;

use crate::constants::{self, SQRT2_MINUS_1};
use crate::error::{Error, Result};
use crate::field::{Accumulator, Field, NeumaierSum};
use crate::payoff::{
    BimatrixGame, DeviationTable, Matrix, MixedStrategy, RaceConfig, RaceGame, Variant,
};
use crate::schedules::{DensityReport, ProbabilitySchedule};
use crate::solve2::{self, BoundCheck, BoundReport, Relation};

/// Best pure deviation of one player.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation<F = f64> {
    pub player: usize,
    /// 1-based time of the best pure response.
    pub time: usize,
    /// Best response payoff minus the current payoff.
    pub gain: F,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NashVerdict<F = f64> {
    /// Whether the profile is a `tol`-well-supported equilibrium.
    pub is_exact: bool,
    /// Largest gain from a pure deviation.
    pub epsilon_approx: F,
    /// Largest gap between a best response and any strategy in the support.
    pub epsilon_well_supported: F,
    pub payoffs: Vec<F>,
    pub worst_deviations: Vec<Deviation<F>>,
}

struct PlayerCheck<F> {
    value: F,
    best: F,
    best_time: usize,
    worst_in_support: F,
}

fn check_player<F: Field>(weights: &[F], payoffs: &[F]) -> PlayerCheck<F> {
    let mut acc = F::Sum::default();
    let mut best = payoffs[0].clone();
    let mut best_time = 1;
    let mut worst: Option<F> = None;
    for (i, (w, u)) in weights.iter().zip(payoffs).enumerate() {
        acc.add(&(w.clone() * u.clone()));
        if *u > best {
            best = u.clone();
            best_time = i + 1;
        }
        if *w > F::zero() && worst.as_ref().is_none_or(|m| u < m) {
            worst = Some(u.clone());
        }
    }
    let worst = worst.unwrap_or_else(|| best.clone());
    // The expected payoff is a convex combination of support payoffs; clamp rounding.
    let value = F::min_of(F::max_of(acc.value(), worst.clone()), best.clone());
    PlayerCheck {
        value,
        best,
        best_time,
        worst_in_support: worst,
    }
}

fn assemble<F: Field>(checks: Vec<PlayerCheck<F>>, tol: f64) -> NashVerdict<F> {
    let mut eps_a = F::zero();
    let mut eps_ws = F::zero();
    let mut payoffs = Vec::new();
    let mut worst_deviations = Vec::new();
    for (player, c) in checks.into_iter().enumerate() {
        let gain = c.best.clone() - c.value.clone();
        eps_a = F::max_of(eps_a, gain.clone());
        eps_ws = F::max_of(eps_ws, c.best - c.worst_in_support);
        payoffs.push(c.value);
        worst_deviations.push(Deviation {
            player,
            time: c.best_time,
            gain,
        });
    }
    let is_exact = if F::is_exact() {
        eps_ws <= F::from_f64(tol)
    } else {
        eps_ws.to_f64() <= tol
    };
    NashVerdict {
        is_exact,
        epsilon_approx: eps_a,
        epsilon_well_supported: eps_ws,
        payoffs,
        worst_deviations,
    }
}

/// Check a two-player mixed profile against every pure deviation.
pub fn verify_profile<F: Field, G: BimatrixGame<F> + ?Sized>(
    game: &G,
    x: &MixedStrategy<F>,
    y: &MixedStrategy<F>,
    tol: f64,
) -> Result<NashVerdict<F>> {
    let (m, n) = game.shape();
    if x.k() != m || y.k() != n {
        return Err(Error::LengthMismatch {
            expected: m,
            got: x.k(),
        });
    }
    let u = game.row_payoffs(y.weights());
    let v = game.col_payoffs(x.weights());
    Ok(assemble(
        vec![check_player(x.weights(), &u), check_player(y.weights(), &v)],
        tol,
    ))
}

/// Check an n-player mixed profile of a race against every pure deviation.
pub fn verify_profile_np<F: Field>(
    cfg: &RaceConfig<F>,
    profile: &[MixedStrategy<F>],
    tol: f64,
) -> Result<NashVerdict<F>> {
    let checks = (0..cfg.n)
        .map(|i| {
            let table = DeviationTable::compute(cfg, i, profile)?;
            Ok(check_player(profile[i].weights(), table.payoff(cfg.variant)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(checks, tol))
}

/// Best responses to `y` (0-based rows within `tol` of the maximum) and the payoff vector.
pub fn best_response_set<F: Field>(m: &Matrix<F>, y: &[F], tol: f64) -> (Vec<usize>, Vec<F>) {
    let u = m.mul_vec(y);
    let best = u.iter().cloned().fold(u[0].clone(), F::max_of);
    let set = u
        .iter()
        .enumerate()
        .filter(|(_, v)| (best.clone() - (*v).clone()).negligible(tol))
        .map(|(i, _)| i)
        .collect();
    (set, u)
}

/// `x^T (A + B) y - max(A y) - max(B^T x)`; zero exactly at an equilibrium.
pub fn mangasarian_stone_gap<F: Field, G: BimatrixGame<F> + ?Sized>(
    game: &G,
    x: &[F],
    y: &[F],
) -> F {
    let u = game.row_payoffs(y);
    let v = game.col_payoffs(x);
    let dot = |a: &[F], b: &[F]| {
        let mut acc = F::Sum::default();
        for (p, q) in a.iter().zip(b) {
            acc.add(&(p.clone() * q.clone()));
        }
        acc.value()
    };
    let max = |w: &[F]| w.iter().cloned().fold(w[0].clone(), F::max_of);
    dot(x, &u) + dot(y, &v) - max(&u) - max(&v)
}

enum LinearSolution<F> {
    Unique(Vec<F>),
    Underdetermined,
    Inconsistent,
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_linear<F: Field>(mut rows: Vec<Vec<F>>, unknowns: usize) -> LinearSolution<F> {
    let scale = rows
        .iter()
        .flatten()
        .map(|v| v.abs().to_f64())
        .fold(1.0f64, f64::max);
    let tol = 1e-12 * scale;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..unknowns {
        let Some(piv) = (r..rows.len())
            .filter(|&i| !rows[i][c].negligible(tol))
            .max_by(|&a, &b| {
                rows[a][c]
                    .abs()
                    .partial_cmp(&rows[b][c].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        else {
            continue;
        };
        rows.swap(r, piv);
        let lead = rows[r][c].clone();
        for v in rows[r].iter_mut() {
            *v = v.clone() / lead.clone();
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..=unknowns {
                    let delta = f.clone() * rows[r][j].clone();
                    rows[i][j] = rows[i][j].clone() - delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if rows[r..].iter().any(|row| !row[unknowns].negligible(tol)) {
        return LinearSolution::Inconsistent;
    }
    if r < unknowns {
        return LinearSolution::Underdetermined;
    }
    let mut sol = vec![F::zero(); unknowns];
    for (i, &c) in pivots.iter().enumerate() {
        sol[c] = rows[i][unknowns].clone();
    }
    LinearSolution::Unique(sol)
}

/// An equilibrium found by support enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumeratedEquilibrium<F = f64> {
    pub row: MixedStrategy<F>,
    pub col: MixedStrategy<F>,
    pub payoff_row: F,
    pub payoff_col: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupportEnumeration<F = f64> {
    pub equilibria: Vec<EnumeratedEquilibrium<F>>,
    /// Support pairs (1-based) whose indifference system has a continuum of solutions.
    pub degenerate: Vec<(Vec<usize>, Vec<usize>)>,
}

enum SideOutcome<F> {
    Valid(Vec<F>, F),
    Degenerate,
    Rejected,
}

/// Solve for the mix over `own` that makes the opponent indifferent over `opp`
/// and leaves no better reply outside it. `payoff(i, j)` is the opponent's payoff
/// when they play `i` and this player plays `j`.
fn solve_side<F: Field>(
    payoff: &dyn Fn(usize, usize) -> F,
    opp_count: usize,
    opp: &[usize],
    own: &[usize],
) -> SideOutcome<F> {
    let n = own.len();
    let mut rows: Vec<Vec<F>> = opp
        .iter()
        .map(|&i| {
            let mut row: Vec<F> = own.iter().map(|&j| payoff(i, j)).collect();
            row.push(-F::one());
            row.push(F::zero());
            row
        })
        .collect();
    let mut norm = vec![F::one(); n];
    norm.push(F::zero());
    norm.push(F::one());
    rows.push(norm);
    let sol = match solve_linear(rows, n + 1) {
        LinearSolution::Unique(s) => s,
        LinearSolution::Underdetermined => return SideOutcome::Degenerate,
        LinearSolution::Inconsistent => return SideOutcome::Rejected,
    };
    let tol = if F::is_exact() { 0.0 } else { 1e-12 };
    let value = sol[n].clone();
    let nonpositive = |w: &F| {
        if F::is_exact() {
            *w <= F::zero()
        } else {
            w.to_f64() <= tol
        }
    };
    if sol[..n].iter().any(nonpositive) {
        return SideOutcome::Rejected;
    }
    for i in 0..opp_count {
        let mut acc = F::Sum::default();
        for (idx, &j) in own.iter().enumerate() {
            acc.add(&(payoff(i, j) * sol[idx].clone()));
        }
        let excess = acc.value() - value.clone();
        let violates = if F::is_exact() {
            excess > F::zero()
        } else {
            excess.to_f64() > tol
        };
        if violates {
            return SideOutcome::Rejected;
        }
    }
    SideOutcome::Valid(sol[..n].to_vec(), value)
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << n)).map(move |mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
}

/// Enumerate every equilibrium of `(A, B)` by checking all support pairs.
pub fn support_enumeration_2p<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Result<SupportEnumeration<F>> {
    let (m, n) = (a.rows(), a.cols());
    let max = constants::ENUMERATION_MAX_K;
    if m > max || n > max {
        return Err(Error::TooLargeForEnumeration { k: m.max(n), max });
    }
    if b.rows() != m || b.cols() != n {
        return Err(Error::LengthMismatch {
            expected: m * n,
            got: b.rows() * b.cols(),
        });
    }
    let row_payoff = |i: usize, j: usize| a.get(i, j).clone();
    let col_payoff = |j: usize, i: usize| b.get(i, j).clone();
    let mut out = SupportEnumeration {
        equilibria: Vec::new(),
        degenerate: Vec::new(),
    };
    let row_sets: Vec<Vec<usize>> = subsets(m).collect();
    let col_sets: Vec<Vec<usize>> = subsets(n).collect();
    for i_set in &row_sets {
        for j_set in &col_sets {
            let y = solve_side(&row_payoff, m, i_set, j_set);
            if matches!(y, SideOutcome::Rejected) {
                continue;
            }
            let x = solve_side(&col_payoff, n, j_set, i_set);
            match (x, y) {
                (SideOutcome::Valid(xs, vc), SideOutcome::Valid(ys, vr)) => {
                    let mut xw = vec![F::zero(); m];
                    for (w, &i) in xs.into_iter().zip(i_set) {
                        xw[i] = w;
                    }
                    let mut yw = vec![F::zero(); n];
                    for (w, &j) in ys.into_iter().zip(j_set) {
                        yw[j] = w;
                    }
                    out.equilibria.push(EnumeratedEquilibrium {
                        row: MixedStrategy::new(xw)?,
                        col: MixedStrategy::new(yw)?,
                        payoff_row: vr,
                        payoff_col: vc,
                    });
                }
                (SideOutcome::Rejected, _) | (_, SideOutcome::Rejected) => {}
                // One side pins down a mix whose best-response set is larger than its
                // own support; the other side has a continuum of candidate weights.
                _ => out.degenerate.push((
                    i_set.iter().map(|i| i + 1).collect(),
                    j_set.iter().map(|j| j + 1).collect(),
                )),
            }
        }
    }
    Ok(out)
}

/// Feasible point of the dual of the symmetric-payoff quadratic program at threshold `c`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DualCertificate {
    pub c: f64,
    pub lambda: f64,
    pub d: f64,
    pub v: Vec<f64>,
    pub objective: f64,
    /// `lambda - lambda^2 / 2` with `lambda = beta(c)`; equals `objective` up to rounding.
    pub closed_form_objective: f64,
    pub trivial: bool,
    /// First time with `p >= c` (nontrivial certificates only).
    pub split_time: Option<usize>,
    pub max_violation: f64,
    pub feasible: bool,
    /// Objective strictly below `c`: no symmetric equilibrium pays `c` or more.
    pub proves_threshold: bool,
    /// `1 - sqrt(1 - 2c)` for `c <= 1/2`.
    pub objective_limit: Option<f64>,
}

/// Tolerance on dual constraint violations, relative to the largest term.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-9;

/// `(A^T v)_i` for the symmetric tie-splitting race matrix.
fn transpose_product(p: &[f64], v: &[f64]) -> Vec<f64> {
    let k = p.len();
    let mut tail = vec![0.0; k + 1];
    let mut acc = NeumaierSum::new();
    for j in (0..k).rev() {
        acc.add(&(p[j] * v[j]));
        tail[j] = acc.value();
    }
    let mut head = NeumaierSum::new();
    (0..k)
        .map(|i| {
            let out = head.value() + (1.0 - p[i]) * tail[i] + 0.5 * p[i] * p[i] * v[i];
            head.add(&(p[i] * v[i]));
            out
        })
        .collect()
}

pub fn dual_certificate(schedule: &ProbabilitySchedule, c: f64) -> Result<DualCertificate> {
    let lo = SQRT2_MINUS_1;
    if !(c.is_finite() && c >= lo - 1e-15 && c <= 1.0) {
        return Err(Error::ThresholdOutOfRange { c, lo });
    }
    let p = schedule.probs();
    let k = p.len();
    if c > 0.5 {
        return Ok(DualCertificate {
            c,
            lambda: 1.0,
            d: 0.0,
            v: vec![0.0; k],
            objective: 0.5,
            closed_form_objective: 0.5,
            trivial: true,
            split_time: None,
            max_violation: 0.0,
            feasible: true,
            proves_threshold: 0.5 < c,
            objective_limit: None,
        });
    }
    let s = p
        .iter()
        .position(|&x| x >= c)
        .ok_or_else(|| Error::Precondition(format!("no probability reaches {c}")))?;
    let (ps, pk) = (p[s], p[k - 1]);
    if ps >= 1.0 {
        return Err(Error::Precondition("split probability equals 1".into()));
    }
    let mut tail = NeumaierSum::new();
    for i in s..k - 1 {
        tail.add(&((1.0 / p[i]) * (1.0 / p[i] - 1.0 / p[i + 1])));
    }
    let tail = tail.value();
    let beta = 1.0 + pk * (-(1.0 - ps) / ps + c * tail);
    let lambda = beta;
    let d = (1.0 - lambda) * (1.0 + pk - pk / ps);
    let scale = (1.0 - lambda - d) * ps / (1.0 - ps);
    let mut v = vec![0.0; k];
    for i in s..k - 1 {
        v[i] = scale * (1.0 / p[i]) * (1.0 / p[i] - 1.0 / p[i + 1]);
    }
    v[k - 1] = scale / (pk * pk) - (1.0 - lambda) / pk;
    let atv = transpose_product(p, &v);
    let mut max_violation = 0.0f64;
    let mut magnitude = 1.0f64;
    for i in 0..k {
        let rhs = (1.0 - lambda) * p[i] - d;
        max_violation = max_violation.max(rhs - atv[i]).max(-v[i]);
        magnitude = magnitude.max(rhs.abs()).max(atv[i].abs());
    }
    let mut vsum = NeumaierSum::new();
    for x in &v {
        vsum.add(x);
    }
    let objective = 0.5 * lambda * lambda + c * vsum.value() + d;
    let feasible = max_violation <= DUAL_FEASIBILITY_TOL * magnitude;
    Ok(DualCertificate {
        c,
        lambda,
        d,
        v,
        objective,
        closed_form_objective: beta - beta * beta / 2.0,
        trivial: false,
        split_time: Some(s + 1),
        max_violation,
        feasible,
        proves_threshold: feasible && objective < c,
        objective_limit: Some(constants::dual_objective_limit(c)),
    })
}

/// Certified ceiling on the payoff of any symmetric equilibrium of the tie-splitting race.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PayoffCeiling {
    pub ceiling: f64,
    pub applicable: bool,
    /// Certificates at the ceiling and at grid thresholds between it and 1/2.
    pub certificates: Vec<DualCertificate>,
    pub all_prove: bool,
}

pub fn payoff_ceiling(schedule: &ProbabilitySchedule, density: &DensityReport) -> Result<PayoffCeiling> {
    payoff_ceiling_with_grid(schedule, density, constants::DUAL_GRID_POINTS)
}

pub fn payoff_ceiling_with_grid(
    schedule: &ProbabilitySchedule,
    density: &DensityReport,
    grid: usize,
) -> Result<PayoffCeiling> {
    let k = schedule.k() as f64;
    let ceiling = constants::payoff_ceiling(density.ell, k);
    let mut thresholds = vec![ceiling.min(1.0)];
    if ceiling < 0.5 {
        for g in 1..=grid {
            thresholds.push(ceiling + (0.5 - ceiling) * g as f64 / grid as f64);
        }
    }
    let certificates = thresholds
        .into_iter()
        .map(|c| dual_certificate(schedule, c))
        .collect::<Result<Vec<_>>>()?;
    let all_prove = certificates.iter().all(|c| c.proves_threshold);
    Ok(PayoffCeiling {
        ceiling,
        applicable: density.in_dense_regime(),
        certificates,
        all_prove,
    })
}

/// Evaluate the symmetric stingy equilibrium inside the tie-splitting race.
pub fn stingy_in_tie_splitting(
    schedule: &ProbabilitySchedule,
    density: &DensityReport,
) -> Result<(NashVerdict, BoundReport)> {
    let sol = solve2::solve2_symmetric(schedule)?;
    let game = RaceGame::symmetric(schedule.clone(), Variant::TieSplitting);
    let verdict = verify_profile(&game, &sol.row, &sol.col, 0.0)?;
    let bound = constants::two_player_well_supported_eps(density.ell, schedule.k() as f64);
    let report = BoundReport {
        checks: vec![BoundCheck::evaluate(
            "tie_splitting_well_supported",
            verdict.epsilon_well_supported,
            Relation::Le,
            bound,
        )],
    };
    Ok((verdict, report))
}
