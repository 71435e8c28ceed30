use std::f64::consts::E;

use qrace::constants::DEFAULT_K_CAP;
use qrace::payoff::{tie_profile, utility_np_quantum, MixedStrategy, RaceConfig, Variant};
use qrace::schedules::{density_report, grover_schedule};
use qrace::sim::{fork_rate_sweep, run_simulation, SimConfig, SimResult};
use qrace::solve2::solve2_symmetric;
use qrace::solven::multi_coinciding_equilibrium;
use qrace::ProbabilitySchedule;

fn run(probs: &[f64], variant: Variant, profile: Vec<MixedStrategy>, trials: u64, seed: u64) -> SimResult {
    let s = ProbabilitySchedule::new(probs.to_vec()).unwrap();
    let cfg = RaceConfig::symmetric(profile.len(), s, variant).unwrap();
    run_simulation(&SimConfig { trials, seed, cfg, profile }).unwrap()
}

fn close(estimate: f64, truth: f64, bands: f64, trials: u64) {
    let se = (truth * (1.0 - truth) / trials as f64).sqrt();
    assert!(
        (estimate - truth).abs() <= bands * se,
        "{estimate} vs {truth}: {:.2} SE",
        (estimate - truth) / se
    );
}

fn partitions(r: &SimResult) {
    let total: u64 = r.win_counts.iter().sum::<u64>() + r.tie_counts.iter().sum::<u64>() + r.no_winner_count;
    assert_eq!(total, r.trials);
}

#[test]
fn two_fair_coins() {
    let trials = 200_000;
    let pure = MixedStrategy::pure(2, 1);
    let r = run(&[0.5, 0.9], Variant::Stingy, vec![pure.clone(), pure], trials, 1);
    partitions(&r);
    for f in [r.win_frequency[0], r.win_frequency[1], r.tie_frequency, r.no_winner_frequency] {
        close(f, 0.25, 3.0, trials);
    }
}

#[test]
fn pure_profiles_match_trinomial_probabilities() {
    let trials = 1_000_000;
    let probs = [0.2, 0.5, 0.8];
    let r = run(&probs, Variant::Stingy, vec![MixedStrategy::pure(3, 1), MixedStrategy::pure(3, 3)], trials, 2);
    partitions(&r);
    close(r.win_frequency[0], 0.2, 4.0, trials);
    close(r.win_frequency[1], 0.8 * 0.8, 4.0, trials);
    close(r.no_winner_frequency, 0.8 * 0.2, 4.0, trials);
    assert_eq!(r.tie_counts, vec![0]);

    let r = run(&probs, Variant::Stingy, vec![MixedStrategy::pure(3, 2), MixedStrategy::pure(3, 2)], trials, 3);
    partitions(&r);
    close(r.win_frequency[0], 0.25, 4.0, trials);
    close(r.win_frequency[1], 0.25, 4.0, trials);
    close(r.tie_frequency, 0.25, 4.0, trials);
}

#[test]
fn tie_splitting_pays_half_a_shared_success() {
    let trials = 400_000;
    let pure = MixedStrategy::pure(2, 2);
    let r = run(&[0.3, 0.6], Variant::TieSplitting, vec![pure.clone(), pure], trials, 4);
    let truth = 0.6 * 0.4 + 0.5 * 0.36;
    for i in 0..2 {
        assert!((r.payoff_estimate[i] - truth).abs() <= 4.0 * r.payoff_standard_error[i]);
    }
}

#[test]
fn equilibrium_payoff_matches_closed_form() {
    let s = grover_schedule(10_000).unwrap();
    let eq = solve2_symmetric(&s).unwrap();
    let cfg = RaceConfig::symmetric(2, s, Variant::Stingy).unwrap();
    let r = run_simulation(&SimConfig { trials: 500_000, seed: 5, cfg, profile: vec![eq.row, eq.col] }).unwrap();
    partitions(&r);
    for i in 0..2 {
        assert!((r.payoff_estimate[i] - eq.payoff_row).abs() <= 3.0 * r.payoff_standard_error[i]);
    }
}

#[test]
fn three_player_tie_splitting_payoff_and_fork_rate() {
    let s = grover_schedule(10_000).unwrap();
    let d = density_report(&s);
    let sol = multi_coinciding_equilibrium(&s, 3).unwrap();
    let cfg = sol.config(&s, Variant::TieSplitting).unwrap();
    let profile = sol.profile();
    let r = run_simulation(&SimConfig { trials: 500_000, seed: 6, cfg: cfg.clone(), profile: profile.clone() }).unwrap();
    for i in 0..3 {
        let truth = utility_np_quantum(&cfg, i, &profile).unwrap();
        assert!((r.payoff_estimate[i] - truth).abs() <= 3.0 * r.payoff_standard_error[i]);
    }
    assert!(r.tie_frequency <= 8.0 * E * 3.0 * d.ell / s.k() as f64);
}

#[test]
fn tie_shares_match_exact_tie_profile() {
    let s = grover_schedule(1_000).unwrap();
    let n = 4;
    let sol = multi_coinciding_equilibrium(&s, n).unwrap();
    let cfg = sol.config(&s, Variant::Stingy).unwrap();
    let profile = sol.profile();
    let trials = 1_000_000;
    let r = run_simulation(&SimConfig { trials, seed: 7, cfg: cfg.clone(), profile: profile.clone() }).unwrap();
    partitions(&r);
    for i in 0..n {
        let exact = tie_profile(&cfg, i, &profile).unwrap().by_size;
        for m in 2..=n {
            close(r.tie_share(i, m), exact[m - 2], 4.0, trials);
        }
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let s = grover_schedule(10_000).unwrap();
    let sol = multi_coinciding_equilibrium(&s, 3).unwrap();
    let sc = SimConfig { trials: 100_000, seed: 8, cfg: sol.config(&s, Variant::Stingy).unwrap(), profile: sol.profile() };
    let on = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_simulation(&sc).unwrap())
    };
    let one = on(1);
    assert_eq!(one, on(4));
    assert_eq!(one, run_simulation(&sc).unwrap());
    let other = run_simulation(&SimConfig { seed: 9, ..sc.clone() }).unwrap();
    assert_ne!(one.win_counts, other.win_counts);
}

#[test]
fn sweep_rows_respect_the_tie_bound() {
    let rows = fork_rate_sweep(&[1e5], &[2, 3, 5], 200_000, 10, DEFAULT_K_CAP).unwrap();
    assert_eq!(rows.len(), 3);
    for row in &rows {
        assert!(row.empirical_tie.unwrap() <= row.tie_bound, "{row:?}");
        assert!(row.analytic_tie.unwrap() <= row.tie_bound);
    }
}

#[test]
fn sweep_ties_fall_as_the_search_space_grows() {
    let rows = fork_rate_sweep(&[1e3, 1e4, 1e5, 1e6], &[3], 0, 0, DEFAULT_K_CAP).unwrap();
    let ties: Vec<f64> = rows.iter().map(|r| r.analytic_tie.unwrap()).collect();
    assert!(ties.windows(2).all(|w| w[1] < w[0]), "{ties:?}");
    assert!(rows.iter().all(|r| r.empirical_tie.is_none() && r.trials == 0));
}

#[test]
fn bitcoin_sized_sweep_is_analytic_only() {
    let rows = fork_rate_sweep(&[7e12 * 4_294_967_296.0], &[2, 3], 1000, 1, DEFAULT_K_CAP).unwrap();
    for row in &rows {
        assert!(row.tstar.is_none() && row.empirical_tie.is_none());
        assert_eq!(row.trials, 0);
        assert!(row.tie_bound / (row.n as f64) < 3e-10);
    }
}
