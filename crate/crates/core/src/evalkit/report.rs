use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{Counts, Setting, Task, TaskCounts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub task: Task,
    /// `None` for the segment tasks, which have no span settings.
    pub setting: Option<Setting>,
    #[serde(flatten)]
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub documents: usize,
    pub scores: Vec<TaskScore>,
}

impl EvalReport {
    pub fn from_counts(documents: usize, counts: &TaskCounts) -> Self {
        let scores = counts
            .iter()
            .map(|(&(task, setting), &c)| TaskScore {
                task,
                setting,
                counts: c,
                precision: c.precision(),
                recall: c.recall(),
                f1: c.f1(),
            })
            .collect();
        EvalReport { documents, scores }
    }

    pub fn get(&self, task: Task, setting: Option<Setting>) -> Option<&TaskScore> {
        self.scores.iter().find(|s| s.task == task && s.setting == setting)
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    /// One row per task; strict and relaxed side by side.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "documents: {}", self.documents);
        let _ = writeln!(
            out,
            "{:<4} {:<24} {:>6} {:>6} {:>6} | {:>6} {:>6} {:>6}",
            "task", "", "P", "R", "F1", "P", "R", "F1"
        );
        let _ = writeln!(out, "{:<4} {:<24} {:>20} | {:>20}", "", "", "strict", "relaxed");
        let cell = |s: Option<&TaskScore>| match s {
            Some(s) => format!("{:>6.3} {:>6.3} {:>6.3}", s.precision, s.recall, s.f1),
            None => format!("{:>6} {:>6} {:>6}", "-", "-", "-"),
        };
        for task in Task::ALL {
            if !self.scores.iter().any(|s| s.task == task) {
                continue;
            }
            let (strict, relaxed) = if task.has_settings() {
                (self.get(task, Some(Setting::Strict)), self.get(task, Some(Setting::Relaxed)))
            } else {
                let s = self.get(task, None);
                (s, s)
            };
            let _ = writeln!(out, "{:<4} {:<24} {} | {}", task, task.describe(), cell(strict), cell(relaxed));
        }
        out
    }
}

/// Per-fold reports plus the micro-averaged aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldedReport {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<EvalReport>,
    pub aggregate: EvalReport,
}

impl FoldedReport {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (i, f) in self.folds.iter().enumerate() {
            let _ = writeln!(out, "fold {}/{}", i + 1, self.k);
            out.push_str(&f.to_table());
            out.push('\n');
        }
        let _ = writeln!(out, "aggregate ({}-fold, seed {})", self.k, self.seed);
        out.push_str(&self.aggregate.to_table());
        out
    }
}
