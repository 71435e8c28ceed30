//! File formats: schedules, matrices, profiles and solutions.
//!
//! Every float is written with 17 significant digits so a value read back parses
//! to the same bits.

use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::error::{Error, Result};
use crate::payoff::{Matrix, MixedStrategy};
use crate::schedules::ProbabilitySchedule;
use crate::solve2::{EquilibriumSolution, SolutionKind};

/// JSON formatter that prints floats in scientific notation with 17 significant digits.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sig17;

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_sig17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

/// `{:.16e}`; non-finite values print as `NaN`, `inf` or `-inf`.
pub fn fmt_sig17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(out).expect("serde_json writes UTF-8"))
}

fn parse_err(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDoc {
    probs: Vec<f64>,
}

pub fn schedule_to_json(s: &ProbabilitySchedule) -> String {
    to_json_string(&ScheduleDoc {
        probs: s.probs().to_vec(),
    })
    .expect("finite schedule")
}

pub fn schedule_from_json(text: &str) -> Result<ProbabilitySchedule> {
    let doc: ScheduleDoc = serde_json::from_str(text).map_err(parse_err)?;
    ProbabilitySchedule::new(doc.probs)
}

/// One column with header `p`.
pub fn schedule_to_csv(s: &ProbabilitySchedule) -> String {
    let mut out = String::from("p\n");
    for &p in s.probs() {
        out.push_str(&fmt_sig17(p));
        out.push('\n');
    }
    out
}

/// One column; a non-numeric first row is taken as a header.
pub fn schedule_from_csv(text: &str) -> Result<ProbabilitySchedule> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut probs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(parse_err)?;
        if rec.len() != 1 {
            return Err(Error::Parse(format!(
                "schedule CSV row {} has {} columns, expected 1",
                i + 1,
                rec.len()
            )));
        }
        match rec[0].parse::<f64>() {
            Ok(v) => probs.push(v),
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("schedule CSV row {}: {e}", i + 1))),
        }
    }
    ProbabilitySchedule::new(probs)
}

/// JSON if the first non-blank character is `{`, CSV otherwise.
pub fn schedule_from_str(text: &str) -> Result<ProbabilitySchedule> {
    if text.trim_start().starts_with('{') {
        schedule_from_json(text)
    } else {
        schedule_from_csv(text)
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_string(&mut s).map_err(parse_err)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_schedule(path: &Path) -> Result<ProbabilitySchedule> {
    schedule_from_str(&read_text(path)?)
}

/// Row-major CSV without header.
pub fn matrix_to_csv(m: &Matrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_sig17(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn matrix_from_csv(text: &str) -> Result<Matrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(parse_err)?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse(format!("matrix entry {f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Matrix::from_rows(rows)
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightsDoc {
    weights: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileDoc {
    players: Vec<WeightsDoc>,
}

pub fn profile_to_json(profile: &[MixedStrategy]) -> String {
    to_json_string(&ProfileDoc {
        players: profile
            .iter()
            .map(|s| WeightsDoc {
                weights: s.weights().to_vec(),
            })
            .collect(),
    })
    .expect("finite weights")
}

/// Reads `{"players":[{"weights":[..]}, ..]}`. Solution documents are accepted
/// too: `row`/`col` give a two-player profile and `n`/`strategy` a symmetric one.
pub fn profile_from_json(text: &str) -> Result<Vec<MixedStrategy>> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(parse_err)?;
    let weights = |v: &serde_json::Value| -> Result<MixedStrategy> {
        let w: Vec<f64> = serde_json::from_value(v.clone()).map_err(parse_err)?;
        MixedStrategy::new(w)
    };
    if let Some(players) = v.get("players") {
        let doc: ProfileDoc = serde_json::from_value(serde_json::json!({ "players": players }))
            .map_err(parse_err)?;
        return doc.players.into_iter().map(|p| MixedStrategy::new(p.weights)).collect();
    }
    if let (Some(r), Some(c)) = (v.get("row"), v.get("col")) {
        return Ok(vec![weights(r)?, weights(c)?]);
    }
    if let (Some(n), Some(s)) = (v.get("n").and_then(|n| n.as_u64()), v.get("strategy")) {
        return Ok(vec![weights(s)?; n as usize]);
    }
    Err(Error::Parse(
        "profile JSON needs \"players\", \"row\"/\"col\" or \"n\"/\"strategy\"".into(),
    ))
}

/// Serialized form of a two-player equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionDoc {
    pub kind: SolutionKind,
    #[serde(rename = "startT")]
    pub start: usize,
    #[serde(rename = "changeC")]
    pub change: Option<usize>,
    pub row: Vec<f64>,
    pub col: Vec<f64>,
    #[serde(rename = "payoffRow")]
    pub payoff_row: f64,
    #[serde(rename = "payoffCol")]
    pub payoff_col: f64,
    pub sigma: Option<f64>,
    #[serde(rename = "tieProbability")]
    pub tie_probability: f64,
    #[serde(rename = "Tstar")]
    pub tstar: Option<usize>,
    pub marginal: bool,
    #[serde(rename = "swapIsEquilibrium")]
    pub swap_is_equilibrium: bool,
}

impl From<&EquilibriumSolution<f64>> for SolutionDoc {
    fn from(s: &EquilibriumSolution<f64>) -> Self {
        Self {
            kind: s.kind,
            start: s.start,
            change: s.change,
            row: s.row.weights().to_vec(),
            col: s.col.weights().to_vec(),
            payoff_row: s.payoff_row,
            payoff_col: s.payoff_col,
            sigma: s.sigma,
            tie_probability: s.tie_probability,
            tstar: s.tstar,
            marginal: s.marginal,
            swap_is_equilibrium: s.swap_is_equilibrium,
        }
    }
}
