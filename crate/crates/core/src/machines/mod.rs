//! Oracle Turing machines.
//!
//! A machine asks its oracle a question by writing two `μ` marks and entering
//! its query state; the question is the number of squares strictly between
//! the marks. The answer moves the machine to its yes or no state without a
//! step and without touching the tape.
//!
//! Input `n` is `n` consecutive 1s starting under the head; the output is the
//! number of 1s left on the tape at halt.

mod catalog;
mod exec;
mod parse;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::OracleError;

pub use catalog::{universal_run, universal_run_ground_truth, MachineCatalog};
pub use exec::{execute, run_ground_truth, run_with_coin, DEFAULT_STEP_BUDGET};
pub use parse::parse_machine;

pub const MU: &str = "μ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Semantic(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("malformed query at step {step}: expected 2 μ marks on the tape, found {marks}")]
    MalformedQuery { step: u64, marks: usize },
    #[error("no transition for state {state} reading {symbol}")]
    MissingTransition { state: String, symbol: String },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("machine index {index} out of range for a catalog of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("catalog: {0}")]
    Catalog(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    L,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Transition {
    pub next: usize,
    pub write: usize,
    pub dir: Move,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct QueryStates {
    pub state: usize,
    pub yes: usize,
    pub no: usize,
}

/// A validated machine. States are kept sorted by name; symbol 0 is the
/// blank, 1 is `1`, 2 is `0`, 3 is `μ`, the rest sorted by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OMachine {
    pub(crate) states: Vec<String>,
    pub(crate) symbols: Vec<String>,
    pub(crate) start: usize,
    pub(crate) halt: usize,
    pub(crate) query: Option<QueryStates>,
    pub(crate) table: Vec<Option<Transition>>,
}

pub(crate) const BLANK: usize = 0;
pub(crate) const ONE: usize = 1;
pub(crate) const MARK: usize = 3;

impl OMachine {
    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn start_state(&self) -> &str {
        &self.states[self.start]
    }

    pub fn halt_state(&self) -> &str {
        &self.states[self.halt]
    }

    /// `(query, yes, no)` state names.
    pub fn query_states(&self) -> Option<(&str, &str, &str)> {
        self.query
            .as_ref()
            .map(|q| (self.states[q.state].as_str(), self.states[q.yes].as_str(), self.states[q.no].as_str()))
    }

    pub fn query_state_count(&self) -> usize {
        usize::from(self.query.is_some())
    }

    pub(crate) fn transition(&self, state: usize, symbol: usize) -> Option<Transition> {
        self.table[state * self.symbols.len() + symbol]
    }

    /// The one textual form every equivalent description maps to.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("states: {}\n", self.states.join(" ")));
        out.push_str(&format!("start: {}\n", self.start_state()));
        out.push_str(&format!("halt: {}\n", self.halt_state()));
        if let Some((q, yes, no)) = self.query_states() {
            out.push_str(&format!("query: {q} yes={yes} no={no}\n"));
        }
        out.push_str(&format!("blank: {}\n", self.symbols[BLANK]));
        let mut rows = Vec::new();
        for (s, state) in self.states.iter().enumerate() {
            for (y, symbol) in self.symbols.iter().enumerate() {
                if let Some(t) = self.transition(s, y) {
                    rows.push((state, symbol, t));
                }
            }
        }
        rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for (state, symbol, t) in rows {
            out.push_str(&format!(
                "delta: {state} {symbol} -> {} {} {:?}\n",
                self.states[t.next], self.symbols[t.write], t.dir
            ));
        }
        out
    }
}

impl fmt::Display for OMachine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    GroundTruth,
    CoinBacked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status", content = "value")]
pub enum RunOutput {
    Halted(u64),
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub n: u64,
    pub answer: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineRun {
    pub output: RunOutput,
    pub steps: u64,
    pub queries: Vec<QueryRecord>,
    pub mode: RunMode,
    /// Coin tosses the oracle spent during this run.
    pub tosses_used: u64,
}

impl MachineRun {
    pub fn halted_output(&self) -> Option<u64> {
        match self.output {
            RunOutput::Halted(n) => Some(n),
            RunOutput::Diverged => None,
        }
    }

    /// Same output, steps and queries; the mode and toss count may differ.
    pub fn same_execution(&self, other: &MachineRun) -> bool {
        self.output == other.output && self.steps == other.steps && self.queries == other.queries
    }
}
