//! Success rate and task completion rate (TCR) over episode logs.
//!
//! Episode logs are JSON Lines, one episode per line:
//!
//! ```text
//! {"task": "scoop_5g_oatmeal", "achieved": 3.2, "target": 5.0, "success": false}
//! ```
//!
//! `achieved` and `target` share a task-specific unit (grams scooped, cm²
//! erased, ...). `success` is judged externally and is not derived from TCR.
//!
//! Report JSON:
//!
//! ```text
//! {
//!   "overall": {"episodes": 20, "successes": 12, "success_rate": 60.0, "mean_tcr": 81.3},
//!   "tasks": {"<task>": {"episodes": ..., "successes": ..., "success_rate": ..., "mean_tcr": ...}}
//! }
//! ```
//!
//! Rates are percentages rounded to one decimal place.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("task target must be positive, got {0}")]
    NonPositiveTarget(f64),
    #[error("achieved progress must be non-negative, got {0}")]
    NegativeProgress(f64),
    #[error("no episodes to aggregate")]
    EmptyInput,
    #[error("line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
}

impl EvalError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NonPositiveTarget(_) => "NonPositiveTarget",
            Self::NegativeProgress(_) => "NegativeProgress",
            Self::EmptyInput => "EmptyInput",
            Self::SchemaViolation { .. } => "SchemaViolation",
        }
    }
}

/// `min(achieved / target, 1)`.
pub fn tcr(achieved: f64, target: f64) -> Result<f64, EvalError> {
    if !(target.is_finite() && target > 0.0) {
        return Err(EvalError::NonPositiveTarget(target));
    }
    if !(achieved.is_finite() && achieved >= 0.0) {
        return Err(EvalError::NegativeProgress(achieved));
    }
    Ok((achieved / target).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeResult {
    #[serde(rename = "task")]
    pub task_id: String,
    #[serde(rename = "achieved")]
    pub achieved_progress: f64,
    #[serde(rename = "target")]
    pub task_target: f64,
    pub success: bool,
}

impl EpisodeResult {
    pub fn new(task_id: impl Into<String>, achieved: f64, target: f64, success: bool) -> Self {
        Self { task_id: task_id.into(), achieved_progress: achieved, task_target: target, success }
    }

    pub fn tcr(&self) -> Result<f64, EvalError> {
        tcr(self.achieved_progress, self.task_target)
    }
}

fn one_decimal<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64((v * 10.0).round() / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskSummary {
    pub episodes: usize,
    pub successes: usize,
    /// Percent.
    #[serde(serialize_with = "one_decimal")]
    pub success_rate: f64,
    /// Percent.
    #[serde(serialize_with = "one_decimal")]
    pub mean_tcr: f64,
}

impl TaskSummary {
    fn from_episodes<'a>(episodes: impl Iterator<Item = &'a EpisodeResult>) -> Result<Self, EvalError> {
        let (mut n, mut successes, mut tcr_sum) = (0usize, 0usize, 0.0f64);
        for e in episodes {
            n += 1;
            successes += e.success as usize;
            tcr_sum += e.tcr()?;
        }
        if n == 0 {
            return Err(EvalError::EmptyInput);
        }
        Ok(Self {
            episodes: n,
            successes,
            success_rate: 100.0 * successes as f64 / n as f64,
            mean_tcr: 100.0 * tcr_sum / n as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub overall: TaskSummary,
    pub tasks: BTreeMap<String, TaskSummary>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width text table, one row per task plus an overall row.
    pub fn to_table(&self) -> String {
        let width = self.tasks.keys().map(String::len).chain(["overall".len(), "task".len()]).max().unwrap_or(4);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>8}  {:>9}  {:>9}  {:>8}", "task", "episodes", "successes", "success %", "TCR %");
        let mut row = |name: &str, s: &TaskSummary| {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8}  {:>9}  {:>9.1}  {:>8.1}",
                name, s.episodes, s.successes, s.success_rate, s.mean_tcr
            );
        };
        for (name, s) in &self.tasks {
            row(name, s);
        }
        row("overall", &self.overall);
        out
    }
}

/// Groups episodes by task and computes success rate and mean TCR, per task
/// and over all episodes.
pub fn aggregate(results: &[EpisodeResult]) -> Result<EvalReport, EvalError> {
    if results.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut by_task: BTreeMap<&str, Vec<&EpisodeResult>> = BTreeMap::new();
    for r in results {
        by_task.entry(r.task_id.as_str()).or_default().push(r);
    }
    let tasks = by_task
        .into_iter()
        .map(|(task, eps)| Ok((task.to_string(), TaskSummary::from_episodes(eps.into_iter())?)))
        .collect::<Result<_, EvalError>>()?;
    Ok(EvalReport { overall: TaskSummary::from_episodes(results.iter())?, tasks })
}

pub fn parse_episodes(input: &str) -> Result<Vec<EpisodeResult>, EvalError> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let line = i + 1;
            let e: EpisodeResult =
                serde_json::from_str(l).map_err(|err| EvalError::SchemaViolation { line, message: err.to_string() })?;
            e.tcr().map_err(|err| EvalError::SchemaViolation { line, message: err.to_string() })?;
            Ok(e)
        })
        .collect()
}
