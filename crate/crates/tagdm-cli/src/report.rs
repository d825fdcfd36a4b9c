//! Report rendering: human-readable text, canonical JSON, and a
//! single-row CSV. JSON and CSV are deterministic for a given query and
//! seed; wall-clock timing appears only in the text rendering.

use std::fmt::Write as _;

use crate::query::{QueryReport, RunStats};
use tagdm::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "text" => Format::Text,
            "json" => Format::Json,
            "csv" => Format::Csv,
            other => {
                return Err(tagdm::TagdmError::InvalidParams(format!(
                    "unknown format {other:?} (expected text, json, or csv)"
                )))
            }
        })
    }
}

pub fn render(report: &QueryReport, stats: &RunStats, format: Format) -> Result<String> {
    Ok(match format {
        Format::Text => render_text(report, stats),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report)
                .map_err(|e| tagdm::TagdmError::InvalidParams(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => render_csv(report),
    })
}

fn render_text(report: &QueryReport, stats: &RunStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "solver:   {}", report.solver);
    let _ = writeln!(out, "problem:  {}", report.problem);
    if let Some(seed) = report.seed {
        let _ = writeln!(out, "seed:     {seed}");
    }
    let _ = writeln!(
        out,
        "data:     {} tuples ({} in scope), {} groups ({} retained), vocabulary {}",
        report.data.tuples_total,
        report.data.tuples_in_scope,
        report.data.groups_enumerated,
        report.data.groups_retained,
        report.data.vocabulary_size,
    );
    let _ = writeln!(out, "runtime:  {} ms", stats.runtime_ms);
    match &report.result {
        None => {
            let _ = writeln!(out, "status:   no result (infeasible)");
        }
        Some(r) => {
            let _ = writeln!(out, "status:   {}", report.status);
            let _ = writeln!(
                out,
                "score:    {:.6}   support: {}   feasible: {}",
                r.score, r.support, r.feasible
            );
            for c in &r.constraints {
                let _ = writeln!(
                    out,
                    "  constraint {:?}-{:?}: achieved {:.4} vs threshold {:.4} [{}]",
                    c.dimension,
                    c.mode,
                    c.achieved,
                    c.threshold,
                    if c.ok { "ok" } else { "violated" }
                );
            }
            for g in &r.groups {
                let _ = writeln!(out, "  group {} ({} tuples): {}", g.index, g.size, g.descriptor);
                let top: Vec<String> = g
                    .tag_weights
                    .iter()
                    .take(8)
                    .map(|(t, w)| format!("{t}:{w}"))
                    .collect();
                let _ = writeln!(out, "    tags: {}", top.join(" "));
            }
        }
    }
    out
}

fn render_csv(report: &QueryReport) -> String {
    let mut out = String::from("solver,problem,status,feasible,score,support,groups\n");
    match &report.result {
        Some(r) => {
            let ids: Vec<String> = r.group_indices.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                report.solver,
                report.problem,
                report.status,
                r.feasible,
                r.score,
                r.support,
                ids.join("+")
            );
        }
        None => {
            let _ = writeln!(
                out,
                "{},{},{},,,,",
                report.solver, report.problem, report.status
            );
        }
    }
    out
}
