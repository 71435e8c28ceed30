use std::fmt;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use qrace::appendix_eq::{
    alt_coinciding_at, alt_coinciding_equilibria, alternating_equilibrium, tstar_relations_check,
    AlternatingFailure, AlternatingOutcome, ChangePointCandidate, TstarRelations,
};
use qrace::constants::{self, k_cap_from_env};
use qrace::io::{self, fmt_sig17, to_json_string, SolutionDoc};
use qrace::payoff::{
    tie_profile, total_tie_probability, utility_np, Bimatrix, MixedStrategy, RaceConfig, RaceGame,
};
use qrace::schedules::{
    analytic_params, bitcoin_schedule_params_capped, grover_schedule_capped, grover_strategy_count,
    AnalyticParams, DensityReport,
};
use qrace::sim::{fork_rate_sweep, run_simulation, SimConfig, SimResult, SweepRow, SWEEP_HEADER};
use qrace::solve2::{
    coinciding_equilibrium, payoff_bounds_check, solve2_symmetric, BoundCheck, BoundReport,
    CoincidingOutcome, EquilibriumSolution, Relation, Verdict,
};
use qrace::solven::{multi_approx_check, multi_bounds_check, multi_coinciding_equilibrium, multi_tie_check};
use qrace::verify::{
    payoff_ceiling_with_grid, stingy_in_tie_splitting, verify_profile, verify_profile_np, DualCertificate,
    NashVerdict,
};
use qrace::{ProbabilitySchedule, Variant};

use crate::args::{Cli, Command, Format, Game, ScheduleSource};

/// Bad arguments discovered after parsing; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub struct Outcome {
    pub text: String,
    /// Some bound failed or was inapplicable.
    pub flagged: bool,
}

impl Outcome {
    fn plain(text: String) -> Self {
        Self { text, flagged: false }
    }
}

fn json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let mut s = to_json_string(v)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Serialize)]
struct ReportDoc {
    verdict: Verdict,
    checks: Vec<BoundCheck>,
}

impl From<BoundReport> for ReportDoc {
    fn from(r: BoundReport) -> Self {
        Self {
            verdict: r.verdict(),
            checks: r.checks,
        }
    }
}

enum Loaded {
    Schedule(ProbabilitySchedule),
    Analytic(AnalyticParams),
}

fn load(source: &ScheduleSource, analytic_only: bool) -> Result<Option<Loaded>> {
    let cap = k_cap_from_env();
    if let Some(n) = source.grover_n {
        if !(n.is_finite() && n >= 1.0 && n.fract() == 0.0) {
            return Err(usage(format!("--grover-N must be a positive integer, got {n}")));
        }
        let k = grover_strategy_count(n);
        let fits = k >= 0 && (k as u64) <= cap && n <= u64::MAX as f64;
        if !fits && k >= 2 {
            if analytic_only {
                return Ok(Some(Loaded::Analytic(analytic_params(n, cap)?)));
            }
            bail!(
                "N = {n} needs K = {k} strategies, over the cap of {cap} (set {} or pass --analytic-only)",
                constants::K_CAP_ENV
            );
        }
        return Ok(Some(Loaded::Schedule(grover_schedule_capped(n as u64, cap)?)));
    }
    if let Some(p) = &source.probs {
        return Ok(Some(Loaded::Schedule(ProbabilitySchedule::new(p.clone())?)));
    }
    if let Some(path) = &source.schedule_file {
        return Ok(Some(Loaded::Schedule(io::read_schedule(path)?)));
    }
    Ok(None)
}

fn require(source: &ScheduleSource, analytic_only: bool) -> Result<Loaded> {
    load(source, analytic_only)?
        .ok_or_else(|| usage("a schedule is required: pass --grover-N, --probs or --schedule-file"))
}

fn require_schedule(source: &ScheduleSource) -> Result<ProbabilitySchedule> {
    match require(source, false)? {
        Loaded::Schedule(s) => Ok(s),
        Loaded::Analytic(_) => unreachable!("analytic reports are only produced on request"),
    }
}

fn reject_csv(cli: &Cli, what: &str) -> Result<()> {
    if cli.format == Format::Csv {
        return Err(usage(format!("{what} has no CSV output")));
    }
    Ok(())
}

fn check_players(players: &[usize]) -> Result<()> {
    if let Some(&n) = players.iter().find(|&&n| n < 2) {
        return Err(usage(format!("a race needs at least 2 players, got {n}")));
    }
    Ok(())
}

fn single_player_count(players: &[usize], what: &str) -> Result<usize> {
    check_players(players)?;
    match players {
        [n] => Ok(*n),
        _ => Err(usage(format!("{what} takes a single player count"))),
    }
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Schedule { source } => schedule(cli, source),
        Command::Solve2 {
            source,
            col_schedule_file,
            col_probs,
        } => solve2(cli, source, col_schedule_file.as_deref(), col_probs.as_deref()),
        Command::Solven { source, players } => solven(cli, source, players),
        Command::Alternating { source, tolerance } => alternating(cli, source, *tolerance),
        Command::Altcoinc {
            source,
            start,
            change,
            tolerance,
        } => altcoinc(cli, source, start.zip(*change), *tolerance),
        Command::Verify {
            source,
            row_matrix,
            col_matrix,
            game,
            against,
            profile,
            players,
            tolerance,
        } => {
            let matrices = row_matrix.as_deref().zip(col_matrix.as_deref());
            let opts = VerifyOpts {
                game: *game,
                against: against.unwrap_or(*game),
                profile: profile.as_deref(),
                players: *players,
                tolerance: *tolerance,
            };
            verify(cli, source, matrices, opts)
        }
        Command::Bound {
            source,
            players,
            grid,
        } => bound(cli, source, players, *grid),
        Command::Simulate {
            source,
            sweep_n,
            players,
            trials,
            seed,
            variant,
            profile,
        } => {
            let seed = seed.unwrap_or_else(clock_seed);
            match sweep_n {
                Some(ns) => sweep(cli, ns, players, *trials, seed),
                None => simulate(cli, source, players, *trials, seed, *variant, profile.as_deref()),
            }
        }
        Command::Bitcoin {
            difficulty,
            players,
        } => bitcoin(cli, *difficulty, players),
    }
}

fn clock_seed() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct TieBoundDoc {
    n: usize,
    tie_bound: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct AnalyticDoc {
    analytic_only: bool,
    #[serde(flatten)]
    params: AnalyticParams,
    tie_bounds: Vec<TieBoundDoc>,
}

fn analytic(cli: &Cli, params: AnalyticParams, players: &[usize]) -> Result<Outcome> {
    reject_csv(cli, "an analytic-only report")?;
    let k = params.k as f64;
    let tie_bounds = players
        .iter()
        .map(|&n| TieBoundDoc {
            n,
            tie_bound: constants::multiplayer_tie_bound(n, params.ell, k),
        })
        .collect();
    Ok(Outcome::plain(json(&AnalyticDoc {
        analytic_only: true,
        params,
        tie_bounds,
    })?))
}

fn schedule(cli: &Cli, source: &ScheduleSource) -> Result<Outcome> {
    let s = require_schedule(source)?;
    Ok(Outcome::plain(match cli.format {
        Format::Json => {
            let mut t = io::schedule_to_json(&s);
            t.push('\n');
            t
        }
        Format::Csv => io::schedule_to_csv(&s),
    }))
}

fn strategies_csv(x: &MixedStrategy, y: &MixedStrategy) -> String {
    let mut out = String::from("t,row,col\n");
    for t in 1..=x.k() {
        out.push_str(&format!(
            "{t},{},{}\n",
            fmt_sig17(*x.weight(t)),
            fmt_sig17(*y.weight(t))
        ));
    }
    out
}

#[derive(Debug, Serialize)]
struct Solve2Doc {
    #[serde(flatten)]
    solution: SolutionDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    density: Option<DensityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bounds: Option<ReportDoc>,
}

fn solve2(
    cli: &Cli,
    source: &ScheduleSource,
    col_file: Option<&Path>,
    col_probs: Option<&[f64]>,
) -> Result<Outcome> {
    let s = match require(source, cli.analytic_only)? {
        Loaded::Schedule(s) => s,
        Loaded::Analytic(a) => return analytic(cli, a, &[2]),
    };
    let col = match (col_file, col_probs) {
        (Some(p), _) => Some(io::read_schedule(p)?),
        (None, Some(p)) => Some(ProbabilitySchedule::new(p.to_vec())?),
        (None, None) => None,
    };
    let (sol, density, bounds) = match col {
        Some(col) => match coinciding_equilibrium(&s, &col)? {
            CoincidingOutcome::Found { solution, .. } => (solution, None, None),
            CoincidingOutcome::NoCoinciding {
                tstar_row,
                tstar_col,
                ..
            } => bail!(
                "no coinciding equilibrium: the two sides start at {:?} and {:?}",
                tstar_row,
                tstar_col
            ),
        },
        None => {
            let sol = solve2_symmetric(&s)?;
            let d = s.density();
            let b = payoff_bounds_check(&sol, &s, &d)?;
            (sol, Some(d), Some(b))
        }
    };
    let flagged = bounds.as_ref().is_some_and(|b| b.verdict() != Verdict::Pass);
    let text = match cli.format {
        Format::Csv => strategies_csv(&sol.row, &sol.col),
        Format::Json => json(&Solve2Doc {
            solution: SolutionDoc::from(&sol),
            density,
            bounds: bounds.map(ReportDoc::from),
        })?,
    };
    Ok(Outcome { text, flagged })
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SolvenDoc {
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "Tstar")]
    tstar: usize,
    strategy: Vec<f64>,
    per_player_payoff: f64,
    total_tie_probability: f64,
    tie_participation_sum: f64,
    worst_deviation_tie: f64,
    worst_regret: f64,
    worst_regret_time: usize,
    epsilon_well_supported: f64,
    split_payoff: f64,
    marginal: bool,
    ell: f64,
    bounds: ReportDoc,
}

fn solven_doc(s: &ProbabilitySchedule, density: &DensityReport, n: usize) -> Result<SolvenDoc> {
    let sol = multi_coinciding_equilibrium(s, n)?;
    let mut report = multi_bounds_check(&sol, s, density);
    let ties = multi_tie_check(&sol, s, density)?;
    let approx = multi_approx_check(&sol, s, density)?;
    report.checks.extend(ties.checks.checks);
    report.checks.extend(approx.checks.checks);
    Ok(SolvenDoc {
        n,
        k: s.k(),
        tstar: sol.tstar,
        strategy: sol.strategy.weights().to_vec(),
        per_player_payoff: sol.per_player_payoff,
        total_tie_probability: ties.event_probability,
        tie_participation_sum: ties.participation_sum,
        worst_deviation_tie: ties.worst_deviation_tie,
        worst_regret: approx.worst_regret,
        worst_regret_time: approx.worst_regret_time,
        epsilon_well_supported: approx.epsilon_well_supported,
        split_payoff: approx.split_payoff,
        marginal: sol.marginal,
        ell: density.ell,
        bounds: report.into(),
    })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Inapplicable => "inapplicable",
    }
}

fn solven(cli: &Cli, source: &ScheduleSource, players: &[usize]) -> Result<Outcome> {
    check_players(players)?;
    let s = match require(source, cli.analytic_only)? {
        Loaded::Schedule(s) => s,
        Loaded::Analytic(a) => return analytic(cli, a, players),
    };
    let density = s.density();
    match cli.format {
        Format::Json => {
            let n = single_player_count(players, "JSON output of solven")?;
            let doc = solven_doc(&s, &density, n)?;
            let flagged = doc.bounds.verdict != Verdict::Pass;
            Ok(Outcome {
                text: json(&doc)?,
                flagged,
            })
        }
        Format::Csv => {
            let mut out = String::from(
                "K,n,ell,Tstar,perPlayerPayoff,totalTieProbability,worstRegret,verdict\n",
            );
            let mut flagged = false;
            for &n in players {
                let d = solven_doc(&s, &density, n)?;
                flagged |= d.bounds.verdict != Verdict::Pass;
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    d.k,
                    n,
                    fmt_sig17(d.ell),
                    d.tstar,
                    fmt_sig17(d.per_player_payoff),
                    fmt_sig17(d.total_tie_probability),
                    fmt_sig17(d.worst_regret),
                    verdict_name(d.bounds.verdict)
                ));
            }
            Ok(Outcome { text: out, flagged })
        }
    }
}

fn stingy_check(s: &ProbabilitySchedule, sol: &EquilibriumSolution<f64>, tol: f64) -> Result<NashVerdict> {
    let game = RaceGame::symmetric(s.clone(), Variant::Stingy);
    Ok(verify_profile(&game, &sol.row, &sol.col, tol)?)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct AlternatingDoc {
    found: bool,
    reason: Option<AlternatingFailure>,
    #[serde(rename = "TstarAlternating")]
    tstar_alternating: usize,
    #[serde(flatten)]
    solution: Option<SolutionDoc>,
    verification: Option<NashVerdict>,
}

fn alternating(cli: &Cli, source: &ScheduleSource, tol: f64) -> Result<Outcome> {
    let s = require_schedule(source)?;
    let outcome = alternating_equilibrium(&s)?;
    let tt = outcome.internals().tstar;
    let (sol, reason) = match outcome {
        AlternatingOutcome::Found { solution, .. } => (Some(solution), None),
        AlternatingOutcome::NoAlternating { reason, .. } => (None, Some(reason)),
    };
    let verification = sol.as_ref().map(|x| stingy_check(&s, x, tol)).transpose()?;
    let flagged = verification.as_ref().is_some_and(|v| !v.is_exact);
    let text = match cli.format {
        Format::Csv => match &sol {
            Some(x) => strategies_csv(&x.row, &x.col),
            None => bail!("no alternating equilibrium: {reason:?}"),
        },
        Format::Json => json(&AlternatingDoc {
            found: sol.is_some(),
            reason,
            tstar_alternating: tt,
            solution: sol.as_ref().map(SolutionDoc::from),
            verification,
        })?,
    };
    Ok(Outcome { text, flagged })
}

#[derive(Debug, Serialize)]
struct CheckedSolution {
    #[serde(flatten)]
    solution: SolutionDoc,
    verification: NashVerdict,
}

#[derive(Debug, Serialize)]
struct AltcoincDoc {
    equilibria: Vec<CheckedSolution>,
    candidates: Vec<ChangePointCandidate>,
    relations: Option<TstarRelations>,
}

fn altcoinc(cli: &Cli, source: &ScheduleSource, pair: Option<(usize, usize)>, tol: f64) -> Result<Outcome> {
    reject_csv(cli, "altcoinc")?;
    let s = require_schedule(source)?;
    let (sols, candidates) = match pair {
        Some((t, c)) => {
            let (cand, sol) = alt_coinciding_at(&s, t, c)?;
            (sol.into_iter().collect::<Vec<_>>(), vec![cand])
        }
        None => {
            let r = alt_coinciding_equilibria(&s)?;
            (r.equilibria, r.candidates)
        }
    };
    let equilibria = sols
        .iter()
        .map(|x| {
            Ok(CheckedSolution {
                solution: SolutionDoc::from(x),
                verification: stingy_check(&s, x, tol)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let relations = tstar_relations_check(&s).ok();
    let flagged = equilibria.iter().any(|e| !e.verification.is_exact)
        || relations.as_ref().is_some_and(|r| !r.all_hold());
    Ok(Outcome {
        text: json(&AltcoincDoc {
            equilibria,
            candidates,
            relations,
        })?,
        flagged,
    })
}

struct VerifyOpts<'a> {
    game: Game,
    against: Game,
    profile: Option<&'a Path>,
    players: usize,
    tolerance: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct VerifyDoc {
    game: &'static str,
    against: &'static str,
    players: usize,
    tolerance: f64,
    #[serde(flatten)]
    verdict: NashVerdict,
    bounds: Option<ReportDoc>,
}

fn game_name(g: Game) -> &'static str {
    match g {
        Game::Stingy => "stingy",
        Game::Quantum => "quantum",
    }
}

fn read_profile(path: &Path) -> Result<Vec<MixedStrategy>> {
    io::profile_from_json(&io::read_text(path)?).with_context(|| format!("reading {}", path.display()))
}

fn verify(
    cli: &Cli,
    source: &ScheduleSource,
    matrices: Option<(&Path, &Path)>,
    o: VerifyOpts<'_>,
) -> Result<Outcome> {
    reject_csv(cli, "verify")?;
    if let Some((a, b)) = matrices {
        let path = o
            .profile
            .ok_or_else(|| usage("verifying a bimatrix game needs --profile"))?;
        let prof = read_profile(path)?;
        if prof.len() != 2 {
            return Err(usage("a bimatrix profile has exactly two players"));
        }
        let game = Bimatrix::new(
            io::matrix_from_csv(&io::read_text(a)?)?,
            io::matrix_from_csv(&io::read_text(b)?)?,
        )?;
        let verdict = verify_profile(&game, &prof[0], &prof[1], o.tolerance)?;
        return Ok(Outcome::plain(json(&VerifyDoc {
            game: "bimatrix",
            against: "bimatrix",
            players: 2,
            tolerance: o.tolerance,
            verdict,
            bounds: None,
        })?));
    }
    let s = require_schedule(source)?;
    let profile = match o.profile {
        Some(p) => read_profile(p)?,
        None => match o.game {
            Game::Stingy => multi_coinciding_equilibrium(&s, single_player_count(&[o.players], "verify")?)?
                .profile(),
            Game::Quantum => return Err(usage("the tie-splitting race has no closed form; pass --profile")),
        },
    };
    let n = profile.len();
    check_players(&[n])?;
    let variant = o.against.variant();
    let verdict = if n == 2 {
        verify_profile(&RaceGame::symmetric(s.clone(), variant), &profile[0], &profile[1], o.tolerance)?
    } else {
        verify_profile_np(&RaceConfig::symmetric(n, s.clone(), variant)?, &profile, o.tolerance)?
    };
    let bounds = (o.against == Game::Quantum).then(|| {
        let d = s.density();
        let k = s.k() as f64;
        let mut checks = vec![BoundCheck::evaluate(
            "regret_at_most_8el_over_k",
            verdict.epsilon_approx,
            Relation::Le,
            constants::multiplayer_eps(d.ell, k),
        )
        .gated(constants::multiplayer_floor_regime(n, d.ell) <= k)];
        if n == 2 {
            checks.push(
                BoundCheck::evaluate(
                    "well_supported_two_player",
                    verdict.epsilon_well_supported,
                    Relation::Le,
                    constants::two_player_well_supported_eps(d.ell, k),
                )
                .gated(d.in_dense_regime()),
            );
        }
        ReportDoc::from(BoundReport { checks })
    });
    let flagged = bounds.as_ref().is_some_and(|b| b.verdict != Verdict::Pass);
    Ok(Outcome {
        text: json(&VerifyDoc {
            game: game_name(o.game),
            against: game_name(o.against),
            players: n,
            tolerance: o.tolerance,
            verdict,
            bounds,
        })?,
        flagged,
    })
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct CeilingDoc {
    ceiling: f64,
    applicable: bool,
    payoff: f64,
    grid_points: usize,
    all_prove: bool,
    certificate: DualCertificate,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct MultiBoundDoc {
    n: usize,
    #[serde(rename = "Tstar")]
    tstar: usize,
    per_player_payoff: f64,
    report: ReportDoc,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct BoundDoc {
    density: DensityReport,
    convex: bool,
    #[serde(rename = "Tstar")]
    tstar: usize,
    payoff: f64,
    two_player: ReportDoc,
    ceiling: CeilingDoc,
    multiplayer: Vec<MultiBoundDoc>,
    verdict: Verdict,
}

fn bound(cli: &Cli, source: &ScheduleSource, players: &[usize], grid: usize) -> Result<Outcome> {
    check_players(players)?;
    let s = match require(source, cli.analytic_only)? {
        Loaded::Schedule(s) => s,
        Loaded::Analytic(a) => return analytic(cli, a, players),
    };
    reject_csv(cli, "bound")?;
    let d = s.density();
    let sol = solve2_symmetric(&s)?;
    let mut two = payoff_bounds_check(&sol, &s, &d)?;
    let (_, ws) = stingy_in_tie_splitting(&s, &d)?;
    two.checks
        .extend(ws.checks.into_iter().map(|c| c.gated(d.in_dense_regime())));
    let ceil = payoff_ceiling_with_grid(&s, &d, grid)?;
    let cert = ceil.certificates[0].clone();
    two.checks.push(
        BoundCheck::evaluate("certificate_below_ceiling", cert.objective, Relation::Lt, cert.c)
            .gated(ceil.applicable),
    );
    two.checks.push(
        BoundCheck::evaluate("payoff_below_ceiling", sol.payoff_row, Relation::Le, ceil.ceiling)
            .gated(ceil.applicable),
    );
    let mut all = two.checks.clone();
    let multiplayer = players
        .iter()
        .map(|&n| {
            let m = multi_coinciding_equilibrium(&s, n)?;
            let mut r = multi_bounds_check(&m, &s, &d);
            r.checks.extend(multi_tie_check(&m, &s, &d)?.checks.checks);
            r.checks.extend(multi_approx_check(&m, &s, &d)?.checks.checks);
            Ok(MultiBoundDoc {
                n,
                tstar: m.tstar,
                per_player_payoff: m.per_player_payoff,
                report: r.into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for m in &multiplayer {
        all.extend(m.report.checks.iter().cloned());
    }
    let verdict = BoundReport { checks: all }.verdict();
    let doc = BoundDoc {
        density: d,
        convex: s.convexity().is_convex,
        tstar: sol.start,
        payoff: sol.payoff_row,
        two_player: two.into(),
        ceiling: CeilingDoc {
            ceiling: ceil.ceiling,
            applicable: ceil.applicable,
            payoff: sol.payoff_row,
            grid_points: ceil.certificates.len() - 1,
            all_prove: ceil.all_prove,
            certificate: cert,
        },
        multiplayer,
        verdict,
    };
    Ok(Outcome {
        text: json(&doc)?,
        flagged: verdict != Verdict::Pass,
    })
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct AnalyticSim {
    payoff: Vec<f64>,
    tie_probability: f64,
    /// `[i][m - 2]`: probability that player `i` wins in a tie of exactly `m`.
    tie_share_by_size: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SimDoc {
    players: usize,
    #[serde(rename = "K")]
    k: usize,
    #[serde(flatten)]
    result: SimResult,
    analytic: AnalyticSim,
    /// `(estimate - analytic) / standard error` per player.
    payoff_z: Vec<f64>,
}

fn simulate(
    cli: &Cli,
    source: &ScheduleSource,
    players: &[usize],
    trials: u64,
    seed: u64,
    variant: Game,
    profile: Option<&Path>,
) -> Result<Outcome> {
    reject_csv(cli, "a single simulation")?;
    if cli.analytic_only {
        return Err(usage("--analytic-only only applies to --sweep-N"));
    }
    let s = require_schedule(source)?;
    let profile = match profile {
        Some(p) => read_profile(p)?,
        None => multi_coinciding_equilibrium(&s, single_player_count(players, "simulate")?)?.profile(),
    };
    let n = profile.len();
    check_players(&[n])?;
    let cfg = RaceConfig::symmetric(n, s.clone(), variant.variant())?;
    let result = run_simulation(&SimConfig {
        trials,
        seed,
        cfg: cfg.clone(),
        profile: profile.clone(),
    })?;
    let payoff = (0..n)
        .map(|i| utility_np(&cfg, i, &profile, cfg.variant))
        .collect::<qrace::Result<Vec<_>>>()?;
    let tie_share_by_size = (0..n)
        .map(|i| tie_profile(&cfg, i, &profile).map(|t| t.by_size))
        .collect::<qrace::Result<Vec<_>>>()?;
    let payoff_z = payoff
        .iter()
        .zip(result.payoff_estimate.iter().zip(&result.payoff_standard_error))
        .map(|(a, (e, se))| if *se > 0.0 { (e - a) / se } else { 0.0 })
        .collect();
    let doc = SimDoc {
        players: n,
        k: s.k(),
        analytic: AnalyticSim {
            payoff,
            tie_probability: total_tie_probability(&cfg, &profile)?,
            tie_share_by_size,
        },
        payoff_z,
        result,
    };
    Ok(Outcome::plain(json(&doc)?))
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig17).unwrap_or_default()
}

fn sweep(cli: &Cli, ns: &[f64], players: &[usize], trials: u64, seed: u64) -> Result<Outcome> {
    check_players(players)?;
    if ns.iter().any(|n| !(n.is_finite() && *n >= 1.0)) {
        return Err(usage("--sweep-N values must be positive"));
    }
    let trials = if cli.analytic_only { 0 } else { trials };
    let rows = fork_rate_sweep(ns, players, trials, seed, k_cap_from_env())?;
    let text = match cli.format {
        Format::Json => json(&rows)?,
        Format::Csv => sweep_csv(&rows),
    };
    Ok(Outcome::plain(text))
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = SWEEP_HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_sig17(r.search_space),
            r.k,
            r.n,
            fmt_sig17(r.ell),
            r.tstar.map(|t| t.to_string()).unwrap_or_default(),
            opt(r.analytic_payoff),
            opt(r.analytic_tie),
            opt(r.empirical_tie),
            fmt_sig17(r.tie_bound),
            r.trials,
            r.seed
        ));
    }
    out
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct BitcoinDoc {
    #[serde(flatten)]
    params: AnalyticParams,
    tie_bounds: Vec<TieBoundDoc>,
    epsilon_scale: f64,
    epsilon_within_scale: bool,
}

fn bitcoin(cli: &Cli, difficulty: f64, players: &[usize]) -> Result<Outcome> {
    reject_csv(cli, "bitcoin")?;
    check_players(players)?;
    if !(difficulty.is_finite() && difficulty > 0.0) {
        return Err(usage(format!("--difficulty must be positive, got {difficulty}")));
    }
    let params = bitcoin_schedule_params_capped(difficulty, k_cap_from_env())
        .map_err(|e| anyhow!(e))?;
    let k = params.k as f64;
    let tie_bounds = players
        .iter()
        .map(|&n| TieBoundDoc {
            n,
            tie_bound: constants::multiplayer_tie_bound(n, params.ell, k),
        })
        .collect();
    let within = params.multiplayer_eps <= constants::BITCOIN_EPS_SCALE;
    Ok(Outcome::plain(json(&BitcoinDoc {
        params,
        tie_bounds,
        epsilon_scale: constants::BITCOIN_EPS_SCALE,
        epsilon_within_scale: within,
    })?))
}
