//! Payoff matrices and utility evaluators for quantum search races.
//!
//! A race between players who each pick one measurement time `t` and succeed
//! with probability `p_t` is won by the earliest success. The stingy variant
//! pays nothing on a tie; the tie-splitting variant shares the prize evenly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Accumulator, Field};
use crate::schedules::ProbabilitySchedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Ties pay nothing.
    Stingy,
    /// Ties of size `m` pay `1/m` to each tied player.
    #[serde(alias = "quantum", alias = "tie-splitting")]
    TieSplitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Row,
    Col,
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F = f64> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Field> Matrix<F> {
    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if r == 0 || c == 0 {
            return Err(Error::Parse("matrix must be non-empty".into()));
        }
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::LengthMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { rows: r, cols: c, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at 0-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    /// `M v`.
    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        (0..self.rows)
            .map(|i| {
                let mut acc = F::Sum::default();
                for (a, b) in self.row(i).iter().zip(v) {
                    acc.add(&(a.clone() * b.clone()));
                }
                acc.value()
            })
            .collect()
    }

    /// `M^T v`.
    pub fn tmul_vec(&self, v: &[F]) -> Vec<F> {
        (0..self.cols)
            .map(|j| {
                let mut acc = F::Sum::default();
                for (i, vi) in v.iter().enumerate() {
                    acc.add(&(self.get(i, j).clone() * vi.clone()));
                }
                acc.value()
            })
            .collect()
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(Field::to_f64).collect(),
        }
    }
}

/// Payoff matrix of one player of a two-player race.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix<F = f64> {
    pub matrix: Matrix<F>,
    pub variant: Variant,
    pub player: Player,
}

/// Payoff matrix of `player` when the row player uses `row` and the column player `col`.
pub fn payoff_matrix_2p<F: Field>(
    row: &ProbabilitySchedule<F>,
    col: &ProbabilitySchedule<F>,
    variant: Variant,
    player: Player,
) -> Result<PayoffMatrix<F>> {
    let k = row.k();
    if col.k() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            got: col.k(),
        });
    }
    let p = row.probs();
    let q = col.probs();
    let matrix = Matrix::from_fn(k, k, |i, j| {
        let base = match player {
            Player::Row if i < j => p[i].clone(),
            Player::Row => p[i].clone() * q[j].complement(),
            Player::Col if j < i => q[j].clone(),
            Player::Col => q[j].clone() * p[i].complement(),
        };
        if i == j && variant == Variant::TieSplitting {
            base + F::half() * p[i].clone() * q[i].clone()
        } else {
            base
        }
    });
    Ok(PayoffMatrix {
        matrix,
        variant,
        player,
    })
}

/// `x^T M y`.
pub fn expected_payoff_2p<F: Field>(m: &Matrix<F>, x: &[F], y: &[F]) -> F {
    let my = m.mul_vec(y);
    F::sum_iter(x.iter().zip(&my).map(|(a, b)| a.clone() * b.clone()).collect::<Vec<_>>().iter())
}

/// A mixed strategy over the times `1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy<F = f64> {
    weights: Vec<F>,
}

/// Tolerance on the total weight of a floating-point mixed strategy.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

impl<F: Field> MixedStrategy<F> {
    pub fn new(weights: Vec<F>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::LengthMismatch {
                expected: 1,
                got: 0,
            });
        }
        for (i, w) in weights.iter().enumerate() {
            if *w < F::zero() {
                return Err(Error::NegativeWeight {
                    time: i + 1,
                    value: w.to_f64(),
                });
            }
        }
        let sum = F::sum_iter(&weights);
        if !(sum.clone() - F::one()).negligible(WEIGHT_SUM_TOL) {
            return Err(Error::NotNormalized { sum: sum.to_f64() });
        }
        Ok(Self { weights })
    }

    /// Pure strategy on 1-based time `t` among `k` times.
    pub fn pure(k: usize, t: usize) -> Self {
        let mut weights = vec![F::zero(); k];
        weights[t - 1] = F::one();
        Self { weights }
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    /// Weight on 1-based time `t`.
    pub fn weight(&self, t: usize) -> &F {
        &self.weights[t - 1]
    }

    /// Sorted 1-based times carrying positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > F::zero())
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn to_f64(&self) -> MixedStrategy<f64> {
        MixedStrategy {
            weights: self.weights.iter().map(Field::to_f64).collect(),
        }
    }
}

/// A two-player game given through best-response payoff vectors.
pub trait BimatrixGame<F: Field> {
    /// `(row strategies, column strategies)`.
    fn shape(&self) -> (usize, usize);
    /// Row player's payoff for each pure row against column mix `y`: `A y`.
    fn row_payoffs(&self, y: &[F]) -> Vec<F>;
    /// Column player's payoff for each pure column against row mix `x`: `B^T x`.
    fn col_payoffs(&self, x: &[F]) -> Vec<F>;
}

/// Explicit bimatrix game `(A, B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bimatrix<F = f64> {
    pub a: Matrix<F>,
    pub b: Matrix<F>,
}

impl<F: Field> Bimatrix<F> {
    pub fn new(a: Matrix<F>, b: Matrix<F>) -> Result<Self> {
        if a.rows() != b.rows() || a.cols() != b.cols() {
            return Err(Error::LengthMismatch {
                expected: a.rows() * a.cols(),
                got: b.rows() * b.cols(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn race(
        row: &ProbabilitySchedule<F>,
        col: &ProbabilitySchedule<F>,
        variant: Variant,
    ) -> Result<Self> {
        Ok(Self {
            a: payoff_matrix_2p(row, col, variant, Player::Row)?.matrix,
            b: payoff_matrix_2p(row, col, variant, Player::Col)?.matrix,
        })
    }
}

impl<F: Field> BimatrixGame<F> for Bimatrix<F> {
    fn shape(&self) -> (usize, usize) {
        (self.a.rows(), self.a.cols())
    }

    fn row_payoffs(&self, y: &[F]) -> Vec<F> {
        self.a.mul_vec(y)
    }

    fn col_payoffs(&self, x: &[F]) -> Vec<F> {
        self.b.tmul_vec(x)
    }
}

/// Two-player race evaluated without materializing its matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct RaceGame<F = f64> {
    pub row: ProbabilitySchedule<F>,
    pub col: ProbabilitySchedule<F>,
    pub variant: Variant,
}

impl<F: Field> RaceGame<F> {
    pub fn new(
        row: ProbabilitySchedule<F>,
        col: ProbabilitySchedule<F>,
        variant: Variant,
    ) -> Result<Self> {
        if row.k() != col.k() {
            return Err(Error::LengthMismatch {
                expected: row.k(),
                got: col.k(),
            });
        }
        Ok(Self { row, col, variant })
    }

    pub fn symmetric(schedule: ProbabilitySchedule<F>, variant: Variant) -> Self {
        Self {
            row: schedule.clone(),
            col: schedule,
            variant,
        }
    }

    pub fn to_bimatrix(&self) -> Bimatrix<F> {
        Bimatrix::race(&self.row, &self.col, self.variant).expect("equal lengths")
    }
}

/// Payoff of each pure time `t` against mix `opp`:
/// `own_t * (sum_{s <= t} opp_s (1 - other_s) + sum_{s > t} opp_s)`, plus the tie share.
fn race_payoffs<F: Field>(own: &[F], other: &[F], opp: &[F], variant: Variant) -> Vec<F> {
    let k = own.len();
    let mut later = vec![F::zero(); k];
    let mut acc = F::Sum::default();
    for t in (0..k).rev() {
        later[t] = acc.value();
        acc.add(&opp[t]);
    }
    let mut fail = F::Sum::default();
    (0..k)
        .map(|t| {
            fail.add(&(opp[t].clone() * other[t].complement()));
            let v = own[t].clone() * (fail.value() + later[t].clone());
            if variant == Variant::TieSplitting {
                v + F::half() * own[t].clone() * other[t].clone() * opp[t].clone()
            } else {
                v
            }
        })
        .collect()
}

impl<F: Field> BimatrixGame<F> for RaceGame<F> {
    fn shape(&self) -> (usize, usize) {
        (self.row.k(), self.col.k())
    }

    fn row_payoffs(&self, y: &[F]) -> Vec<F> {
        race_payoffs(self.row.probs(), self.col.probs(), y, self.variant)
    }

    fn col_payoffs(&self, x: &[F]) -> Vec<F> {
        race_payoffs(self.col.probs(), self.row.probs(), x, self.variant)
    }
}

/// Schedules used by the players of an n-player race.
#[derive(Debug, Clone, PartialEq)]
pub enum RaceSchedules<F = f64> {
    Symmetric(ProbabilitySchedule<F>),
    /// Row player then column player; two players only.
    Pair(ProbabilitySchedule<F>, ProbabilitySchedule<F>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaceConfig<F = f64> {
    pub n: usize,
    pub schedules: RaceSchedules<F>,
    pub variant: Variant,
}

impl<F: Field> RaceConfig<F> {
    pub fn symmetric(n: usize, schedule: ProbabilitySchedule<F>, variant: Variant) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewPlayers { n, min: 2 });
        }
        Ok(Self {
            n,
            schedules: RaceSchedules::Symmetric(schedule),
            variant,
        })
    }

    pub fn pair(
        row: ProbabilitySchedule<F>,
        col: ProbabilitySchedule<F>,
        variant: Variant,
    ) -> Result<Self> {
        if row.k() != col.k() {
            return Err(Error::LengthMismatch {
                expected: row.k(),
                got: col.k(),
            });
        }
        Ok(Self {
            n: 2,
            schedules: RaceSchedules::Pair(row, col),
            variant,
        })
    }

    pub fn k(&self) -> usize {
        self.schedule_of(0).k()
    }

    /// Schedule used by player `i` (0-based).
    pub fn schedule_of(&self, i: usize) -> &ProbabilitySchedule<F> {
        match &self.schedules {
            RaceSchedules::Symmetric(s) => s,
            RaceSchedules::Pair(r, c) => {
                if i == 0 {
                    r
                } else {
                    c
                }
            }
        }
    }

    fn check_profile(&self, profile: &[MixedStrategy<F>]) -> Result<()> {
        if profile.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: profile.len(),
            });
        }
        for s in profile {
            if s.k() != self.k() {
                return Err(Error::LengthMismatch {
                    expected: self.k(),
                    got: s.k(),
                });
            }
        }
        Ok(())
    }
}

/// Stingy utilities of a pure profile of 1-based times:
/// `u_i = p_{s_i} * prod_{k != i, s_k <= s_i} (1 - p_{s_k})`.
pub fn utility_np_pure<F: Field>(cfg: &RaceConfig<F>, times: &[usize]) -> Result<Vec<F>> {
    if times.len() != cfg.n {
        return Err(Error::LengthMismatch {
            expected: cfg.n,
            got: times.len(),
        });
    }
    let prob = |k: usize, t: usize| cfg.schedule_of(k).p(t).clone();
    Ok((0..cfg.n)
        .map(|i| {
            let mut u = prob(i, times[i]);
            let mut tied = Vec::new();
            for k in (0..cfg.n).filter(|&k| k != i) {
                if times[k] < times[i] {
                    u = u * prob(k, times[k]).complement();
                } else if times[k] == times[i] {
                    tied.push(prob(k, times[k]));
                }
            }
            let share = match cfg.variant {
                Variant::Stingy => tied.iter().fold(F::one(), |acc, p| acc * p.complement()),
                Variant::TieSplitting => {
                    let coef = tie_polynomial(tied.iter().map(|p| (p.complement(), p.clone())));
                    share_from_coefficients(&coef)
                }
            };
            u * share
        })
        .collect())
}

/// Coefficients of `prod_k (a_k + lambda * b_k)`, lowest degree first.
fn tie_polynomial<F: Field>(factors: impl Iterator<Item = (F, F)>) -> Vec<F> {
    let mut coef = vec![F::one()];
    for (a, b) in factors {
        let mut next = vec![F::zero(); coef.len() + 1];
        for (d, c) in coef.iter().enumerate() {
            next[d] = next[d].clone() + c.clone() * a.clone();
            next[d + 1] = next[d + 1].clone() + c.clone() * b.clone();
        }
        coef = next;
    }
    coef
}

/// `sum_d coef_d / (d + 1)`: expected share when `d` opponents tie.
fn share_from_coefficients<F: Field>(coef: &[F]) -> F {
    let mut acc = F::Sum::default();
    for (d, c) in coef.iter().enumerate() {
        acc.add(&(c.clone() / F::from_ratio(d as i64 + 1, 1)));
    }
    acc.value()
}

/// Payoffs to player `i` for every pure time against the others' mixed strategies.
///
/// For each time `t`, opponent `k` either succeeds exactly at `t` (`b_k`) or does
/// not succeed at any time up to and including `t` (`a_k`). Expanding
/// `prod_k (a_k + lambda b_k)` gives the distribution of the tie size.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationTable<F = f64> {
    /// Stingy payoff of each time.
    pub stingy: Vec<F>,
    /// Tie-splitting payoff of each time.
    pub split: Vec<F>,
    /// `ties[t][m - 2]`: probability of winning at `t` in a tie of exactly `m` players.
    pub ties: Vec<Vec<F>>,
}

impl<F: Field> DeviationTable<F> {
    pub fn compute(cfg: &RaceConfig<F>, i: usize, profile: &[MixedStrategy<F>]) -> Result<Self> {
        cfg.check_profile(profile)?;
        if i >= cfg.n {
            return Err(Error::PlayerOutOfRange { index: i, n: cfg.n });
        }
        let k = cfg.k();
        let opponents: Vec<usize> = (0..cfg.n).filter(|&o| o != i).collect();
        let mut fail: Vec<F::Sum> = vec![F::Sum::default(); opponents.len()];
        let later: Vec<Vec<F>> = opponents
            .iter()
            .map(|&o| {
                let w = profile[o].weights();
                let mut out = vec![F::zero(); k];
                let mut acc = F::Sum::default();
                for t in (0..k).rev() {
                    out[t] = acc.value();
                    acc.add(&w[t]);
                }
                out
            })
            .collect();
        let own = cfg.schedule_of(i).probs();
        let mut table = DeviationTable {
            stingy: Vec::with_capacity(k),
            split: Vec::with_capacity(k),
            ties: Vec::with_capacity(k),
        };
        for t in 0..k {
            let factors: Vec<(F, F)> = opponents
                .iter()
                .enumerate()
                .map(|(idx, &o)| {
                    let w = profile[o].weights()[t].clone();
                    let p = cfg.schedule_of(o).probs()[t].clone();
                    fail[idx].add(&(w.clone() * p.complement()));
                    let a = fail[idx].value() + later[idx][t].clone();
                    (a, w * p)
                })
                .collect();
            let coef = tie_polynomial(factors.into_iter());
            let p = own[t].clone();
            table.stingy.push(p.clone() * coef[0].clone());
            table.split.push(p.clone() * share_from_coefficients(&coef));
            table
                .ties
                .push(coef[1..].iter().map(|c| p.clone() * c.clone()).collect());
        }
        Ok(table)
    }

    /// Payoff of a time under the given variant.
    pub fn payoff(&self, variant: Variant) -> &[F] {
        match variant {
            Variant::Stingy => &self.stingy,
            Variant::TieSplitting => &self.split,
        }
    }
}

fn weighted<F: Field>(weights: &[F], values: &[F]) -> F {
    let mut acc = F::Sum::default();
    for (w, v) in weights.iter().zip(values) {
        acc.add(&(w.clone() * v.clone()));
    }
    acc.value()
}

/// Stingy payoffs of every pure time for every player, after `O(nK)` preprocessing.
#[derive(Debug, Clone)]
pub struct StingyEvaluator<F = f64> {
    own: Vec<Vec<F>>,
    /// `not_before[k][t]`: probability that player `k` has not succeeded by time `t`.
    not_before: Vec<Vec<F>>,
}

impl<F: Field> StingyEvaluator<F> {
    pub fn new(cfg: &RaceConfig<F>, profile: &[MixedStrategy<F>]) -> Result<Self> {
        cfg.check_profile(profile)?;
        let k = cfg.k();
        let mut not_before = Vec::with_capacity(cfg.n);
        let mut own = Vec::with_capacity(cfg.n);
        for (pl, s) in profile.iter().enumerate() {
            let probs = cfg.schedule_of(pl).probs();
            let w = s.weights();
            let mut later = vec![F::zero(); k];
            let mut acc = F::Sum::default();
            for t in (0..k).rev() {
                later[t] = acc.value();
                acc.add(&w[t]);
            }
            let mut fail = F::Sum::default();
            let row = (0..k)
                .map(|t| {
                    fail.add(&(w[t].clone() * probs[t].complement()));
                    fail.value() + later[t].clone()
                })
                .collect();
            not_before.push(row);
            own.push(probs.to_vec());
        }
        Ok(Self { own, not_before })
    }

    /// `u_i(x_{-i}, t)` for 1-based time `t`, in `O(n)`.
    pub fn deviation(&self, i: usize, t: usize) -> F {
        let mut u = self.own[i][t - 1].clone();
        for (k, row) in self.not_before.iter().enumerate() {
            if k != i {
                u = u * row[t - 1].clone();
            }
        }
        u
    }
}

/// `u_i(x_{-i}, t)` in the stingy race, for 1-based time `t`.
pub fn utility_np_mixed<F: Field>(
    cfg: &RaceConfig<F>,
    i: usize,
    profile: &[MixedStrategy<F>],
    t: usize,
) -> Result<F> {
    if i >= cfg.n {
        return Err(Error::PlayerOutOfRange { index: i, n: cfg.n });
    }
    Ok(StingyEvaluator::new(cfg, profile)?.deviation(i, t))
}

/// Tie statistics of player `i` under a mixed profile.
#[derive(Debug, Clone, PartialEq)]
pub struct TieProfile<F = f64> {
    /// `by_size[m - 2]`: probability that `i` wins in a tie of exactly `m` players.
    pub by_size: Vec<F>,
    /// Sum over all tie sizes.
    pub total: F,
}

pub fn tie_profile<F: Field>(
    cfg: &RaceConfig<F>,
    i: usize,
    profile: &[MixedStrategy<F>],
) -> Result<TieProfile<F>> {
    let table = DeviationTable::compute(cfg, i, profile)?;
    let w = profile[i].weights();
    let by_size: Vec<F> = (0..cfg.n - 1)
        .map(|m| {
            let col: Vec<F> = table.ties.iter().map(|row| row[m].clone()).collect();
            weighted(w, &col)
        })
        .collect();
    let total = F::sum_iter(&by_size);
    Ok(TieProfile { by_size, total })
}

/// Expected payoff of player `i` in the given variant.
pub fn utility_np<F: Field>(
    cfg: &RaceConfig<F>,
    i: usize,
    profile: &[MixedStrategy<F>],
    variant: Variant,
) -> Result<F> {
    let table = DeviationTable::compute(cfg, i, profile)?;
    Ok(weighted(profile[i].weights(), table.payoff(variant)))
}

/// Tie-splitting utility `u_i + sum_m cp_i^m / m`.
pub fn utility_np_quantum<F: Field>(
    cfg: &RaceConfig<F>,
    i: usize,
    profile: &[MixedStrategy<F>],
) -> Result<F> {
    utility_np(cfg, i, profile, Variant::TieSplitting)
}

/// Probability that the race ends in a tie among the earliest successes.
pub fn total_tie_probability<F: Field>(cfg: &RaceConfig<F>, profile: &[MixedStrategy<F>]) -> Result<F> {
    let mut acc = F::Sum::default();
    for i in 0..cfg.n {
        let tp = tie_profile(cfg, i, profile)?;
        for (idx, c) in tp.by_size.iter().enumerate() {
            acc.add(&(c.clone() / F::from_ratio(idx as i64 + 2, 1)));
        }
    }
    Ok(acc.value())
}
