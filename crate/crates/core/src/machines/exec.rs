use super::{MachineError, MachineRun, Move, OMachine, QueryRecord, RunMode, RunOutput, BLANK, MARK, ONE};
use crate::oracle::{CoinOracle, MembershipOracle, OracleSet};

pub const DEFAULT_STEP_BUDGET: u64 = 1_000_000;

/// Two-sided tape: `right[i]` is square `i`, `left[i]` is square `-1 - i`.
struct Tape {
    right: Vec<usize>,
    left: Vec<usize>,
}

impl Tape {
    fn with_input(n: u64) -> Self {
        Tape { right: vec![ONE; n as usize], left: Vec::new() }
    }

    fn cell(&mut self, pos: i64) -> &mut usize {
        let (side, i) = if pos >= 0 { (&mut self.right, pos as usize) } else { (&mut self.left, (-1 - pos) as usize) };
        if i >= side.len() {
            side.resize(i + 1, BLANK);
        }
        &mut side[i]
    }

    fn read(&self, pos: i64) -> usize {
        let (side, i) = if pos >= 0 { (&self.right, pos as usize) } else { (&self.left, (-1 - pos) as usize) };
        side.get(i).copied().unwrap_or(BLANK)
    }

    fn positions_of(&self, symbol: usize) -> Vec<i64> {
        let left = self.left.iter().enumerate().rev().filter(|(_, &s)| s == symbol).map(|(i, _)| -1 - i as i64);
        let right = self.right.iter().enumerate().filter(|(_, &s)| s == symbol).map(|(i, _)| i as i64);
        left.chain(right).collect()
    }

    fn count(&self, symbol: usize) -> u64 {
        self.left.iter().chain(&self.right).filter(|&&s| s == symbol).count() as u64
    }
}

/// Runs `machine` on `input`, answering queries from `oracle`. Exceeding
/// `step_budget` steps yields [`RunOutput::Diverged`].
pub fn execute(
    machine: &OMachine,
    oracle: &dyn MembershipOracle,
    input: u64,
    step_budget: u64,
    mode: RunMode,
) -> Result<MachineRun, MachineError> {
    let tosses_before = oracle.tosses_total();
    let mut tape = Tape::with_input(input);
    let mut head = 0i64;
    let mut state = machine.start;
    let mut steps = 0u64;
    let mut queries = Vec::new();

    let output = loop {
        if state == machine.halt {
            break RunOutput::Halted(tape.count(ONE));
        }
        if let Some(q) = machine.query.as_ref().filter(|q| q.state == state) {
            let marks = tape.positions_of(MARK);
            let [a, b] = marks[..] else {
                return Err(MachineError::MalformedQuery { step: steps, marks: marks.len() });
            };
            let n = (b - a - 1) as u64;
            let answer = oracle.answer(n)?;
            queries.push(QueryRecord { n, answer });
            state = if answer { q.yes } else { q.no };
            continue;
        }
        if steps == step_budget {
            break RunOutput::Diverged;
        }
        let symbol = tape.read(head);
        let t = machine.transition(state, symbol).ok_or_else(|| MachineError::MissingTransition {
            state: machine.states[state].clone(),
            symbol: machine.symbols[symbol].clone(),
        })?;
        *tape.cell(head) = t.write;
        head += match t.dir {
            Move::L => -1,
            Move::R => 1,
        };
        state = t.next;
        steps += 1;
    };

    Ok(MachineRun { output, steps, queries, mode, tosses_used: oracle.tosses_total() - tosses_before })
}

/// Execution with queries answered directly from the set.
pub fn run_ground_truth(
    machine: &OMachine,
    set: &OracleSet,
    input: u64,
    step_budget: u64,
) -> Result<MachineRun, MachineError> {
    execute(machine, set, input, step_budget, RunMode::GroundTruth)
}

/// Execution with queries answered by extracting bits of a coin's bias.
pub fn run_with_coin(
    machine: &OMachine,
    oracle: &CoinOracle,
    input: u64,
    step_budget: u64,
) -> Result<MachineRun, MachineError> {
    execute(machine, oracle, input, step_budget, RunMode::CoinBacked)
}
