//! CSV and JSON exports. Every CSV has a header row and ends with a newline; reals are
//! printed with six significant digits so files diff cleanly across runs.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::harness::{DecisionRecord, MetricsReport, Stat};

/// Fixed-point rendering with six significant digits (`1.5` -> `1.50000`).
pub fn fmt_real(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x == 0.0 { "0.00000".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 17) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit (9.999996 -> 10.00000); drop the extra one.
    let digits = s.chars().filter(char::is_ascii_digit).count() - leading_zero_digits(&s);
    if digits > 6 && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

fn leading_zero_digits(s: &str) -> usize {
    s.chars()
        .filter(|c| c.is_ascii_digit())
        .take_while(|&c| c == '0')
        .count()
}

pub const SUMMARY_HEADER: &str = "scenario,policy,runs,throughput_mean,throughput_std,queue_mean,queue_std,\
delay_mean,delay_std,violations_mean,violations_std,drops_mean,drops_std";

pub fn summary_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in reports {
        let _ = write!(out, "{},{},{}", r.scenario, r.policy, r.runs);
        for s in [r.throughput, r.queue, r.delay, r.violations, r.drops] {
            let _ = write!(out, ",{},{}", fmt_real(s.mean), fmt_real(s.std));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    scenario: &'a str,
    policy: &'a str,
    runs: u32,
    steps: u32,
    base_seed: u64,
    throughput: Stat,
    queue: Stat,
    delay: Stat,
    violations: Stat,
    drops: Stat,
}

pub fn summary_json(reports: &[MetricsReport]) -> String {
    let rows: Vec<SummaryRow> = reports
        .iter()
        .map(|r| SummaryRow {
            scenario: &r.scenario,
            policy: r.policy.name(),
            runs: r.runs,
            steps: r.steps,
            base_seed: r.base_seed,
            throughput: r.throughput,
            queue: r.queue,
            delay: r.delay,
            violations: r.violations,
            drops: r.drops,
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("summary serializes");
    s.push('\n');
    s
}

pub const RUNS_HEADER: &str =
    "scenario,policy,run_index,throughput,avg_queue,avg_delay,violations,drops,arrivals,delivered,final_backlog";

pub fn runs_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from(RUNS_HEADER);
    out.push('\n');
    for r in reports {
        for rec in &r.records {
            let m = &rec.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.scenario,
                r.policy,
                rec.run_index,
                fmt_real(m.throughput),
                fmt_real(m.avg_queue),
                fmt_real(m.avg_delay),
                m.violations,
                m.drops,
                m.arrivals,
                m.delivered,
                m.final_backlog
            );
        }
    }
    out
}

/// Rows are slots, columns are nodes.
pub fn matrix_csv<T, F>(rows: &[Vec<T>], cell: F) -> String
where
    F: Fn(&T) -> String,
{
    let n = rows.first().map_or(0, Vec::len);
    let mut out = String::from("slot");
    for i in 0..n {
        let _ = write!(out, ",node_{i}");
    }
    out.push('\n');
    for (t, row) in rows.iter().enumerate() {
        let _ = write!(out, "{t}");
        for v in row {
            out.push(',');
            out.push_str(&cell(v));
        }
        out.push('\n');
    }
    out
}

pub fn schedule_csv(rows: &[Vec<bool>]) -> String {
    matrix_csv(rows, |&b| if b { "1".into() } else { "0".into() })
}

pub fn integer_matrix_csv(rows: &[Vec<u32>]) -> String {
    matrix_csv(rows, u32::to_string)
}

pub fn trace_csv(trace: &[DecisionRecord]) -> String {
    let mut out = String::from("slot,provenance,nodes,feasible_count,best_reward,reward\n");
    let opt = |v: Option<String>| v.unwrap_or_default();
    for d in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            d.slot,
            d.provenance.as_str(),
            d.nodes,
            opt(d.feasible_count.map(|c| c.to_string())),
            opt(d.best_reward.map(|r| r.to_string())),
            d.reward
        );
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)
}
