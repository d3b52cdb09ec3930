//! Per-slot records, their CSV form and the run summary.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CSV_HEADER: &str = "t,tr_V_w,p_w,R_dl_bps,R_ul_bps,E_eu,mape_ul,mape_dl,feasible,tightness";

/// One slot of a run. Solver outputs are empty when the solver returned no
/// solution; MAPE columns are empty when no network has trained yet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct SlotRecord {
    pub t: usize,
    pub tr_V_w: Option<f64>,
    pub p_w: Option<f64>,
    pub R_dl_bps: Option<f64>,
    pub R_ul_bps: Option<f64>,
    pub E_eu: Option<f64>,
    pub mape_ul: Option<f64>,
    pub mape_dl: Option<f64>,
    pub feasible: bool,
    pub tightness: Option<f64>,
}

pub fn write_records<W: Write>(out: W, records: &[SlotRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
    Ok(())
}

pub fn records_to_string(records: &[SlotRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    String::from_utf8(buf).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })
}

/// Parses a records CSV. The header must match [`CSV_HEADER`] exactly.
pub fn read_records<R: Read>(input: R) -> Result<Vec<SlotRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(input);
    let header = rdr.headers().map_err(csv_error)?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `{CSV_HEADER}`"),
        });
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: SlotRecord = row.map_err(csv_error)?;
        let values = [r.tr_V_w, r.p_w, r.R_dl_bps, r.R_ul_bps, r.E_eu, r.mape_ul, r.mape_dl, r.tightness];
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Parse {
                line: out.len() + 2,
                msg: "non-finite value".into(),
            });
        }
        out.push(r);
    }
    Ok(out)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

/// Aggregates over a run. Means, the maximum and its slot are taken over
/// feasible slots only and are absent when there are none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Summary {
    pub slots: usize,
    pub feasible_slots: usize,
    pub feasibility_pct: f64,
    pub solved_slots: usize,
    pub solved_pct: f64,
    pub mean_E_eu: Option<f64>,
    pub max_E_eu: Option<f64>,
    pub argmax_E_eu_t: Option<usize>,
    pub mean_tr_V_w: Option<f64>,
    pub mean_p_w: Option<f64>,
    pub mean_R_dl_bps: Option<f64>,
    pub mean_R_ul_bps: Option<f64>,
    pub mean_tightness: Option<f64>,
    pub final_mape_ul: Option<f64>,
    pub final_mape_dl: Option<f64>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

pub fn summarize(records: &[SlotRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::param("records", "cannot summarize an empty run"));
    }
    let n = records.len();
    let feasible: Vec<&SlotRecord> = records.iter().filter(|r| r.feasible).collect();
    let solved = records.iter().filter(|r| r.tr_V_w.is_some()).count();
    let mut best: Option<(usize, f64)> = None;
    for r in &feasible {
        if let Some(e) = r.E_eu {
            if best.is_none_or(|(_, b)| e > b) {
                best = Some((r.t, e));
            }
        }
    }
    let last = records.last().expect("nonempty");
    Ok(Summary {
        slots: n,
        feasible_slots: feasible.len(),
        feasibility_pct: 100.0 * feasible.len() as f64 / n as f64,
        solved_slots: solved,
        solved_pct: 100.0 * solved as f64 / n as f64,
        mean_E_eu: mean(feasible.iter().map(|r| r.E_eu)),
        max_E_eu: best.map(|b| b.1),
        argmax_E_eu_t: best.map(|b| b.0),
        mean_tr_V_w: mean(feasible.iter().map(|r| r.tr_V_w)),
        mean_p_w: mean(feasible.iter().map(|r| r.p_w)),
        mean_R_dl_bps: mean(feasible.iter().map(|r| r.R_dl_bps)),
        mean_R_ul_bps: mean(feasible.iter().map(|r| r.R_ul_bps)),
        mean_tightness: mean(feasible.iter().map(|r| r.tightness)),
        final_mape_ul: last.mape_ul,
        final_mape_dl: last.mape_dl,
    })
}

/// Pre-training curve as CSV: `episode,mape_ul,mape_dl`.
pub fn episode_log_to_string(log: &[super::pipeline::EpisodeLog]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(["episode", "mape_ul", "mape_dl"]).map_err(csv_error)?;
    for e in log {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([e.episode.to_string(), opt(e.mape_ul), opt(e.mape_dl)])
            .map_err(csv_error)?;
    }
    let buf = w.into_inner().map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
    String::from_utf8(buf).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })
}

impl Summary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
