//! Result files.
//!
//! Integers are written verbatim and reals with 9 significant digits in
//! scientific notation, so identical runs give byte-identical files and every
//! value reads back to exactly what was written.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::{RunOutput, TraceRow};
use crate::error::{Result, SimError};
use crate::metrics::{RunReport, WindowRecord};
use crate::scenario::Scenario;

pub const SUMMARY_FILE: &str = "summary.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const TRACE_HEADER: &str =
    "tti,ue,cqi,rate_bps,buffer_bits,q,priority,selected,tx_bits,dropped_deadline_bits,dropped_overflow_bits";

/// A real with 9 significant digits, e.g. `2.30258509e9`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn fmt_opt_real(x: Option<f64>) -> String {
    x.map(fmt_real).unwrap_or_default()
}

/// `x` rounded to the precision `fmt_real` writes.
pub fn round9(x: f64) -> f64 {
    fmt_real(x).parse().expect("formatted real parses")
}

fn round9_opt(x: Option<f64>) -> Option<f64> {
    x.map(round9)
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub fingerprint: String,
    pub runs: Vec<RunReport>,
}

impl Summary {
    pub fn new(scenario: &Scenario, runs: &[RunOutput]) -> Self {
        Self {
            scenario: scenario.clone(),
            fingerprint: scenario.fingerprint(),
            runs: runs.iter().map(|r| rounded(&r.report)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("summary serializes");
        text.push('\n');
        text
    }
}

fn rounded(report: &RunReport) -> RunReport {
    let mut r = report.clone();
    r.total_throughput_bps = round9(r.total_throughput_bps);
    r.jfi = round9_opt(r.jfi);
    r.qoe_fi = round9_opt(r.qoe_fi);
    for u in r.ues.iter_mut() {
        u.throughput_bps = round9(u.throughput_bps);
        u.satisfaction = round9_opt(u.satisfaction);
        u.loss_rate = round9_opt(u.loss_rate);
        u.mean_delay_ms = round9_opt(u.mean_delay_ms);
        u.p99_delay_ms = round9_opt(u.p99_delay_ms);
        u.final_offered_load_bps = round9(u.final_offered_load_bps);
    }
    for e in r.adjustment_events.iter_mut() {
        e.occupancy = round9(e.occupancy);
        e.old_load_bps = round9(e.old_load_bps);
        e.new_load_bps = round9(e.new_load_bps);
    }
    r
}

pub fn metrics_header(ue_ids: &[u32]) -> String {
    let mut h = String::from(
        "policy,seed,window,start_tti,end_tti,total_throughput_bps,jfi,qoe_fi,\
         arrived_bits,delivered_bits,dropped_overflow_bits,dropped_deadline_bits,buffered_bits",
    );
    for id in ue_ids {
        h.push_str(&format!(",y_bits_{id},y_req_bits_{id},sched_{id}"));
    }
    h
}

pub fn metrics_row(report: &RunReport, w: &WindowRecord) -> String {
    let c = &w.cumulative;
    let mut row = format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        report.policy,
        report.seed,
        w.index,
        w.start_tti,
        w.end_tti,
        fmt_real(w.total_throughput_bps),
        fmt_opt_real(w.jfi),
        fmt_opt_real(w.qoe_fi),
        c.arrived_bits,
        c.delivered_bits,
        c.dropped_overflow_bits,
        c.dropped_deadline_bits,
        c.occupied_bits,
    );
    for u in &w.ues {
        row.push_str(&format!(",{},{},{}", u.y_bits, u.y_req_bits, u.sched_count));
    }
    row
}

pub fn trace_row(r: &TraceRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.tti,
        r.ue,
        r.cqi,
        fmt_real(r.rate_bps),
        r.buffer_bits,
        fmt_real(r.q),
        fmt_real(r.priority),
        r.selected.map(|s| s.to_string()).unwrap_or_default(),
        r.tx_bits,
        r.dropped_deadline_bits,
        r.dropped_overflow_bits,
    )
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| SimError::io(path, e))
}

fn write_lines<I: IntoIterator<Item = String>>(path: &Path, header: &str, rows: I) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| SimError::io(path, e);
    writeln!(out, "{header}").map_err(io)?;
    for row in rows {
        writeln!(out, "{row}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Name of the trace file for a run: `trace.csv` when the sweep has a
/// single run, otherwise `trace-<policy>-<seed>.csv`.
pub fn trace_file_name(run_count: usize, report: &RunReport) -> String {
    if run_count == 1 {
        TRACE_FILE.to_string()
    } else {
        format!("trace-{}-{}.csv", report.policy, report.seed)
    }
}

/// Writes `summary.json`, `metrics.csv` and any recorded traces into
/// `out_dir`, creating it if needed. Returns the paths written.
pub fn emit(scenario: &Scenario, runs: &[RunOutput], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| SimError::io(out_dir, e))?;
    let mut written = Vec::new();

    let summary_path = out_dir.join(SUMMARY_FILE);
    fs::write(&summary_path, Summary::new(scenario, runs).to_json()).map_err(|e| SimError::io(&summary_path, e))?;
    written.push(summary_path);

    let metrics_path = out_dir.join(METRICS_FILE);
    let rows = runs
        .iter()
        .flat_map(|r| r.windows.iter().map(move |w| metrics_row(&r.report, w)));
    write_lines(&metrics_path, &metrics_header(&scenario.ue_ids()), rows)?;
    written.push(metrics_path);

    for r in runs {
        if let Some(trace) = &r.trace {
            let path = out_dir.join(trace_file_name(runs.len(), &r.report));
            write_lines(&path, TRACE_HEADER, trace.iter().map(trace_row))?;
            written.push(path);
        }
    }
    Ok(written)
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(|e| SimError::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
