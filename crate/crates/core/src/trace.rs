//! Per-generation convergence records and their CSV form.
//!
//! A trace file is a handful of `# key: value` metadata lines followed by
//! `generation,evaluations,best_fitness,mean_fitness` rows. Rows are validated
//! on write and on read: evaluations strictly increase and the best fitness
//! never goes up.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "generation,evaluations,best_fitness,mean_fitness";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: u64,
    pub evaluations: u64,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SearchTrace {
    rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceMeta {
    pub algorithm: String,
    pub task: String,
    pub seed: u64,
    pub config_hash: String,
}

impl SearchTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn push(&mut self, row: TraceRow) -> Result<()> {
        if let Some(prev) = self.rows.last() {
            if row.evaluations <= prev.evaluations {
                return Err(Error::Trace(format!(
                    "evaluations must strictly increase ({} after {})",
                    row.evaluations, prev.evaluations
                )));
            }
            if row.best_fitness > prev.best_fitness {
                return Err(Error::Trace(format!(
                    "best fitness increased from {} to {}",
                    prev.best_fitness, row.best_fitness
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// Appends only when the evaluation count moved; memoized searches can
    /// finish a generation without sampling anything new.
    pub fn push_if_progress(&mut self, row: TraceRow) -> Result<bool> {
        match self.rows.last() {
            Some(prev) if prev.evaluations == row.evaluations => Ok(false),
            _ => self.push(row).map(|_| true),
        }
    }

    /// Best fitness known after `evaluations` evaluations, if any row had
    /// been recorded by then.
    pub fn best_at(&self, evaluations: u64) -> Option<f64> {
        self.rows
            .iter()
            .take_while(|r| r.evaluations <= evaluations)
            .last()
            .map(|r| r.best_fitness)
    }

    pub fn to_csv(&self, meta: &TraceMeta) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# algorithm: {}", meta.algorithm);
        let _ = writeln!(out, "# task: {}", meta.task);
        let _ = writeln!(out, "# seed: {}", meta.seed);
        let _ = writeln!(out, "# config_hash: {}", meta.config_hash);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:?},{:?}",
                r.generation, r.evaluations, r.best_fitness, r.mean_fitness
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<(TraceMeta, SearchTrace)> {
        let mut meta = TraceMeta::default();
        let mut trace = SearchTrace::new();
        let mut saw_header = false;
        for (lineno, line) in text.lines().enumerate() {
            let bad = |msg: &str| Error::Trace(format!("line {}: {msg}", lineno + 1));
            if let Some(rest) = line.strip_prefix('#') {
                let (key, value) = rest
                    .split_once(':')
                    .ok_or_else(|| bad("metadata line without `key: value`"))?;
                let value = value.trim();
                match key.trim() {
                    "algorithm" => meta.algorithm = value.to_string(),
                    "task" => meta.task = value.to_string(),
                    "seed" => {
                        meta.seed = value.parse().map_err(|_| bad("seed is not an integer"))?
                    }
                    "config_hash" => meta.config_hash = value.to_string(),
                    _ => {}
                }
                continue;
            }
            if !saw_header {
                if line != CSV_HEADER {
                    return Err(bad("unexpected column header"));
                }
                saw_header = true;
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(bad("expected 4 columns"));
            }
            let row = TraceRow {
                generation: cols[0].parse().map_err(|_| bad("bad generation"))?,
                evaluations: cols[1].parse().map_err(|_| bad("bad evaluations"))?,
                best_fitness: cols[2].parse().map_err(|_| bad("bad best_fitness"))?,
                mean_fitness: cols[3].parse().map_err(|_| bad("bad mean_fitness"))?,
            };
            trace.push(row).map_err(|e| bad(&e.to_string()))?;
        }
        if !saw_header {
            return Err(Error::Trace("missing column header".into()));
        }
        if meta.algorithm.is_empty() || meta.task.is_empty() {
            return Err(Error::Trace("missing algorithm/task metadata".into()));
        }
        Ok((meta, trace))
    }
}
