//! Acceptance run: one PASS/FAIL line per criterion, each against its time budget.
//!
//! Built with `harness = false` so the report is printed on every `cargo test`.

mod common;

use std::f64::consts::{E, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use qrace::appendix_eq::{alt_coinciding_equilibria, alternating_equilibrium, tstar_relations_check};
use qrace::constants::{self, SQRT2_MINUS_1, SQRT2_PLUS_1};
use qrace::payoff::{tie_profile, RaceConfig, RaceGame, Variant};
use qrace::schedules::{bitcoin_schedule_params, density_report, grover_schedule};
use qrace::sim::{run_simulation, SimConfig, SimResult};
use qrace::solve2::{collision_analytics, payoff_bounds_check, solve2_symmetric, CheckStatus, Verdict};
use qrace::solven::{multi_approx_check, multi_bounds_check, multi_coinciding_equilibrium, multi_tie_check};
use qrace::verify::{dual_certificate, stingy_in_tie_splitting, verify_profile};
use qrace::{Exact, MixedStrategy, ProbabilitySchedule};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn grover(n: u64) -> Result<ProbabilitySchedule, String> {
    grover_schedule(n).map_err(|e| e.to_string())
}

fn ok<T>(r: qrace::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

type ExactProfile = (MixedStrategy<Exact>, MixedStrategy<Exact>);

/// Random nondegenerate exact races with 2 to 4 strategies and their enumerated equilibria.
fn tiny_races(seed: u64, count: usize) -> Vec<(ProbabilitySchedule<Exact>, Vec<ExactProfile>)> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let k = r.random_range(2..=4);
        let s = random_exact_schedule(&mut r, k, 24);
        let (eqs, degenerate) = stingy_equilibria(&s);
        if degenerate > 0 {
            continue;
        }
        out.push((s, eqs.into_iter().map(|e| (e.row, e.col)).collect()));
    }
    out
}

fn exact_oracle() -> Outcome {
    let races = tiny_races(2024, 50);
    let mut total = 0;
    for (s, eqs) in &races {
        let coinc = ok(solve2_symmetric(s))?;
        ensure(eqs.iter().any(|(x, y)| *x == coinc.row && *y == coinc.col), || {
            format!("coinciding equilibrium of {s:?} not enumerated")
        })?;
        for (x, y) in eqs {
            ensure(shape_of(x, y).is_some(), || format!("unclassified equilibrium {x:?} / {y:?}"))?;
        }
        total += eqs.len();
    }
    Ok(format!("{} races, {total} equilibria, all classified", races.len()))
}

fn payoff_identity() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for n in [1_000, 10_000, 100_000, 1_000_000] {
        let s = grover(n)?;
        let sol = ok(solve2_symmetric(&s))?;
        let rep = ok(collision_analytics(&sol, &s))?;
        let gap = rep.payoff_identity_gap(*s.p(s.k())).abs();
        let total = rep.total_probability_residual.abs();
        ensure(gap <= 1e-9, || format!("N={n}: z identity off by {gap:e}"))?;
        ensure(total <= 1e-10, || format!("N={n}: outcome probabilities off by {total:e}"))?;
        worst = (worst.0.max(gap), worst.1.max(total));
    }
    Ok(format!("max z gap {:.2e}, max total gap {:.2e}", worst.0, worst.1))
}

fn bound_suite() -> Outcome {
    let slack = constants::ARITH_SLACK;
    let mut notes = Vec::new();
    for n in [10_000, 100_000, 1_000_000] {
        let s = grover(n)?;
        let d = density_report(&s);
        ensure(d.in_dense_regime(), || format!("N={n}: K < 6 ell"))?;
        let sol = ok(solve2_symmetric(&s))?;
        let rep = ok(collision_analytics(&sol, &s))?;
        let (ell, k) = (d.ell, s.k() as f64);
        let t = sol.start;
        let z = rep.z;
        let tau = constants::payoff_window(ell, k);
        ensure(t >= 2 && *s.p(t - 1) <= SQRT2_MINUS_1 + slack, || format!("N={n}: p(T*-1) too large"))?;
        ensure(*s.p(t) > constants::START_PROB_FLOOR, || format!("N={n}: p(T*) <= 5/21"))?;
        ensure(rep.tie_probability <= 6.0 * ell / k + slack, || {
            format!("N={n}: tie {} > 6 ell/K", rep.tie_probability)
        })?;
        ensure(rep.sigma <= 196.0 * ell / k + slack, || format!("N={n}: sigma {} > 196 ell/K", rep.sigma))?;
        ensure(z <= SQRT2_PLUS_1 + tau + slack, || format!("N={n}: z = {z} above window"))?;
        ensure(1.0 / z >= SQRT2_MINUS_1 - tau * SQRT2_MINUS_1 * SQRT2_MINUS_1 - slack, || {
            format!("N={n}: payoff {} below window", 1.0 / z)
        })?;
        let report = ok(payoff_bounds_check(&sol, &s, &d))?;
        ensure(report.verdict() == Verdict::Pass, || format!("N={n}: bound report {:?}", report.failures()))?;
        notes.push(format!("K={} T*={t}", s.k()));
    }
    Ok(notes.join(", "))
}

fn well_supported() -> Outcome {
    let mut notes = Vec::new();
    for n in [10_000, 100_000, 1_000_000] {
        let s = grover(n)?;
        let d = density_report(&s);
        let (verdict, _) = ok(stingy_in_tie_splitting(&s, &d))?;
        let bound = 7.0 * SQRT2_MINUS_1 * d.ell / s.k() as f64;
        ensure(verdict.epsilon_well_supported <= bound, || {
            format!("N={n}: eps_ws {} > {bound}", verdict.epsilon_well_supported)
        })?;
        notes.push(format!("{:.3e}/{:.3e}", verdict.epsilon_well_supported, bound));
    }
    Ok(format!("eps_ws/bound {}", notes.join(", ")))
}

fn payoff_ceiling() -> Outcome {
    let s = grover(1_000_000)?;
    let d = density_report(&s);
    let k = s.k() as f64;
    let c = SQRT2_MINUS_1 + 5.0 * (d.ell / k).sqrt();
    let cert = ok(dual_certificate(&s, c))?;
    ensure(cert.feasible, || format!("certificate violation {:e}", cert.max_violation))?;
    ensure(cert.objective < c, || format!("objective {} >= {c}", cert.objective))?;
    let payoff = ok(solve2_symmetric(&s))?.payoff_row;
    let floor = SQRT2_MINUS_1 - 50.0 * SQRT_2 * SQRT2_MINUS_1 * SQRT2_MINUS_1 * d.ell / k;
    ensure(payoff < c && payoff > floor, || format!("payoff {payoff} outside ({floor}, {c})"))?;
    Ok(format!("floor {floor:.6} < payoff {payoff:.6} < objective {:.6} < c {c:.6}", cert.objective))
}

fn holds(report: &qrace::solve2::BoundReport, name: &str) -> Result<(), String> {
    let c = report.get(name).ok_or_else(|| format!("missing check {name}"))?;
    ensure(c.status == CheckStatus::Holds, || format!("{name}: {} vs {} is {:?}", c.value, c.bound, c.status))
}

fn multiplayer() -> Outcome {
    let s = grover(100_000)?;
    let d = density_report(&s);
    let k = s.k() as f64;
    let mut notes = Vec::new();
    for n in [2usize, 3, 5] {
        ensure(4.0 * E * n as f64 * d.ell <= k, || format!("n={n}: 4en ell > K"))?;
        let sol = ok(multi_coinciding_equilibrium(&s, n))?;
        let t = sol.tstar;
        ensure(t >= 2, || format!("n={n}: start at 1"))?;
        let prev = *s.p(t - 1);
        ensure(prev < 1.0 / n as f64, || format!("n={n}: P(T*-1) = {prev} >= 1/n"))?;
        ensure(prev >= 1.0 / (2.0 * E * n as f64) - constants::ARITH_SLACK, || {
            format!("n={n}: P(T*-1) = {prev} < 1/(2en)")
        })?;
        ensure(sol.per_player_payoff < 1.0 / n as f64, || format!("n={n}: payoff {}", sol.per_player_payoff))?;
        let b = multi_bounds_check(&sol, &s, &d);
        for name in ["prev_prob_below_1_over_n", "prev_prob_at_least_1_over_2en", "payoff_below_1_over_n"] {
            holds(&b, name)?;
        }
        let ties = ok(multi_tie_check(&sol, &s, &d))?;
        let tie_bound = 8.0 * E * n as f64 * d.ell / k;
        ensure(ties.event_probability <= tie_bound, || {
            format!("n={n}: tie {} > {tie_bound}", ties.event_probability)
        })?;
        holds(&ties.checks, "tie_event")?;
        let approx = ok(multi_approx_check(&sol, &s, &d))?;
        let eps = 8.0 * E * d.ell / k;
        ensure(approx.worst_regret <= eps, || format!("n={n}: regret {} > {eps}", approx.worst_regret))?;
        holds(&approx.checks, "regret_at_most_8el_over_k")?;
        notes.push(format!(
            "n={n} T*={t} tie {:.2e}/{:.2e} regret {:.2e}/{:.2e}",
            ties.event_probability, tie_bound, approx.worst_regret, eps
        ));
    }
    Ok(notes.join("; "))
}

fn appendix() -> Outcome {
    let mut notes = Vec::new();
    for n in [1_000, 10_000] {
        let s = grover(n)?;
        let rel = ok(tstar_relations_check(&s))?;
        ensure(rel.convex, || format!("N={n}: schedule not convex"))?;
        ensure(rel.all_hold(), || format!("N={n}: relations {rel:?}"))?;
        let game = RaceGame::symmetric(s.clone(), Variant::Stingy);
        let mut verified = 0;
        if let Some(a) = ok(alternating_equilibrium(&s))?.solution() {
            let v = ok(verify_profile(&game, &a.row, &a.col, 1e-10))?;
            ensure(v.is_exact, || format!("N={n}: alternating eps {:e}", v.epsilon_approx))?;
            verified += 1;
        }
        let altc = ok(alt_coinciding_equilibria(&s))?;
        for e in &altc.equilibria {
            let v = ok(verify_profile(&game, &e.row, &e.col, 1e-10))?;
            ensure(v.is_exact, || format!("N={n}: alt-coinciding eps {:e}", v.epsilon_approx))?;
            ensure(e.start + 1 >= rel.tstar && e.start <= rel.tstar + 2, || {
                format!("N={n}: alt-coinciding start {} vs T* {}", e.start, rel.tstar)
            })?;
            verified += 1;
        }
        notes.push(format!("N={n} T*={} T~*={} verified {verified}", rel.tstar, rel.tstar_alternating));
    }
    let races = tiny_races(77, 50);
    for (s, eqs) in &races {
        let mut expected = vec![];
        let coinc = ok(solve2_symmetric(s))?;
        expected.push((coinc.row, coinc.col));
        if let Some(a) = ok(alternating_equilibrium(s))?.solution() {
            expected.push((a.row.clone(), a.col.clone()));
            expected.push((a.col.clone(), a.row.clone()));
        }
        for e in ok(alt_coinciding_equilibria(s))?.equilibria {
            expected.push((e.col.clone(), e.row.clone()));
            expected.push((e.row, e.col));
        }
        let key = |p: &ExactProfile| format!("{p:?}");
        let mut found = eqs.clone();
        found.sort_by_key(key);
        expected.sort_by_key(key);
        ensure(found == expected, || format!("closed forms disagree with enumeration on {s:?}"))?;
    }
    notes.push(format!("{} exact races agree", races.len()));
    Ok(notes.join("; "))
}

fn within(estimate: f64, truth: f64, se: f64, what: &str) -> Result<f64, String> {
    let z = if se > 0.0 { (estimate - truth) / se } else if estimate == truth { 0.0 } else { f64::INFINITY };
    ensure(z.abs() <= 4.0, || format!("{what}: {estimate} vs {truth} ({z:.2} SE)"))?;
    Ok(z)
}

fn simulation() -> Outcome {
    let s = grover(10_000)?;
    let trials = 1_000_000;
    let mut worst = 0.0f64;
    for n in [2usize, 3] {
        let sol = ok(multi_coinciding_equilibrium(&s, n))?;
        let profile = sol.profile();
        let cfg = ok(RaceConfig::symmetric(n, s.clone(), Variant::Stingy))?;
        let sc = SimConfig { trials, seed: 20_240_601 + n as u64, cfg: cfg.clone(), profile: profile.clone() };
        let res = ok(run_simulation(&sc))?;
        for i in 0..n {
            let z = within(res.win_frequency[i], sol.per_player_payoff, res.win_standard_error[i], &format!("n={n} win {i}"))?;
            worst = worst.max(z.abs());
        }
        let shares: Vec<Vec<f64>> = (0..n)
            .map(|i| tie_profile(&cfg, i, &profile).map(|t| t.by_size))
            .collect::<qrace::Result<_>>()
            .map_err(|e| e.to_string())?;
        for m in 2..=n {
            let truth: f64 = shares.iter().map(|b| b[m - 2] / m as f64).sum();
            let count = res.tie_counts[m - 2];
            let est = count as f64 / trials as f64;
            let se = if count > 0 { SimResult::wald_se(count, trials) } else { (truth * (1.0 - truth) / trials as f64).sqrt() };
            let z = within(est, truth, se, &format!("n={n} {m}-way ties"))?;
            worst = worst.max(z.abs());
        }
        let again = ok(run_simulation(&sc))?;
        ensure(again == res, || format!("n={n}: rerun with the same seed differs"))?;
    }
    Ok(format!("{trials} trials each, largest deviation {worst:.2} SE, reruns identical"))
}

fn bitcoin() -> Outcome {
    let p = ok(bitcoin_schedule_params(7e12))?;
    ensure(!p.materializable, || "Bitcoin race unexpectedly materializable".into())?;
    let k = p.k as f64;
    ensure((0.5e11..=2e11).contains(&k), || format!("K = {k:e} not within 2x of 1e11"))?;
    ensure(p.multiplayer_eps < 3e-10, || format!("eps {:e} >= 3e-10", p.multiplayer_eps))?;
    Ok(format!("K = {k:.4e}, eps = {:.3e}", p.multiplayer_eps))
}

struct Criterion {
    id: u8,
    title: &'static str,
    budget: Option<f64>,
    run: fn() -> Outcome,
}

const CRITERIA: [Criterion; 9] = [
    Criterion { id: 1, title: "exact equilibria of tiny races", budget: Some(10.0), run: exact_oracle },
    Criterion { id: 2, title: "payoff identity", budget: Some(5.0), run: payoff_identity },
    Criterion { id: 3, title: "two-player bound suite", budget: Some(10.0), run: bound_suite },
    Criterion { id: 4, title: "well-supported epsilon", budget: Some(10.0), run: well_supported },
    Criterion { id: 5, title: "payoff ceiling certificate", budget: Some(5.0), run: payoff_ceiling },
    Criterion { id: 6, title: "multiplayer bounds", budget: Some(60.0), run: multiplayer },
    Criterion { id: 7, title: "alternating equilibria", budget: Some(30.0), run: appendix },
    Criterion { id: 8, title: "simulation consistency", budget: Some(60.0), run: simulation },
    Criterion { id: 9, title: "Bitcoin scale", budget: None, run: bitcoin },
];

fn main() -> ExitCode {
    let mut failed = 0;
    for c in &CRITERIA {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        let result = match (result, c.budget) {
            (Ok(_), Some(b)) if secs > b => Err(format!("took {secs:.2} s, budget {b} s")),
            (r, _) => r,
        };
        let budget = c.budget.map(|b| format!(", budget {b} s")).unwrap_or_default();
        match result {
            Ok(detail) => println!("PASS {} {} ({secs:.2} s{budget}): {detail}", c.id, c.title),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {} ({secs:.2} s{budget}): {why}", c.id, c.title);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
