#![allow(dead_code)]

use qrace::field::{Exact, Field};
use qrace::index::{classify_supports, Mover, SupportShape};
use qrace::payoff::{Bimatrix, MixedStrategy, Variant};
use qrace::verify::{support_enumeration_2p, EnumeratedEquilibrium};
use qrace::ProbabilitySchedule;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly increasing rationals `num / den` with distinct numerators in `1..=den`.
pub fn random_exact_schedule(rng: &mut ChaCha8Rng, k: usize, max_den: i64) -> ProbabilitySchedule<Exact> {
    let den = rng.random_range(k as i64 + 1..=max_den);
    let mut nums: Vec<i64> = Vec::new();
    while nums.len() < k {
        let n = rng.random_range(1..=den);
        if !nums.contains(&n) {
            nums.push(n);
        }
    }
    nums.sort();
    ProbabilitySchedule::new(nums.into_iter().map(|n| Exact::from_ratio(n, den)).collect()).unwrap()
}

pub fn random_f64_schedule(rng: &mut ChaCha8Rng, k: usize) -> ProbabilitySchedule {
    let mut v: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    if v.len() < k {
        return random_f64_schedule(rng, k);
    }
    ProbabilitySchedule::new(v).unwrap()
}

pub fn stingy_equilibria(s: &ProbabilitySchedule<Exact>) -> (Vec<EnumeratedEquilibrium<Exact>>, usize) {
    let g = Bimatrix::race(s, s, Variant::Stingy).unwrap();
    let e = support_enumeration_2p(&g.a, &g.b).unwrap();
    (e.equilibria, e.degenerate.len())
}

pub fn shape_of<F: Field>(x: &MixedStrategy<F>, y: &MixedStrategy<F>) -> Option<SupportShape> {
    classify_supports(&x.support(), &y.support(), x.k())
}

/// Orient an equilibrium so the first mover is in the row.
pub fn oriented<F: Field>(x: &MixedStrategy<F>, y: &MixedStrategy<F>) -> (MixedStrategy<F>, MixedStrategy<F>) {
    match shape_of(x, y) {
        Some(SupportShape::Alternating { first: Mover::Col, .. })
        | Some(SupportShape::AltCoinciding { first: Mover::Col, .. }) => (y.clone(), x.clone()),
        _ => (x.clone(), y.clone()),
    }
}
