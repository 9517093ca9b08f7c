use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{MachineParseError, Move, OMachine, QueryStates, Transition, MU};

struct Row {
    line: usize,
    state: String,
    read: String,
    next: String,
    write: String,
    dir: Move,
}

fn symbol(token: &str) -> String {
    if token == "mu" {
        MU.to_string()
    } else {
        token.to_string()
    }
}

fn syntax(line: usize, message: impl Into<String>) -> MachineParseError {
    MachineParseError::Syntax { line, message: message.into() }
}

fn semantic(message: impl Into<String>) -> MachineParseError {
    MachineParseError::Semantic(message.into())
}

fn single(line: usize, key: &str, rest: &str) -> Result<String, MachineParseError> {
    let mut tokens = rest.split_whitespace();
    match (tokens.next(), tokens.next()) {
        (Some(t), None) => Ok(t.to_string()),
        _ => Err(syntax(line, format!("{key} takes exactly one name"))),
    }
}

fn set_once(slot: &mut Option<String>, value: String, line: usize, key: &str) -> Result<(), MachineParseError> {
    if slot.is_some() {
        return Err(syntax(line, format!("duplicate {key} line")));
    }
    *slot = Some(value);
    Ok(())
}

/// Parses and validates the line-based description format.
///
/// ```text
/// states: s h
/// start: s
/// halt: h
/// query: q yes=y no=n     # optional
/// blank: _                # optional, `_` by default
/// delta: s 1 -> h 1 R
/// ```
///
/// `mu` may be written for `μ`. Every reachable state other than the halt
/// and query states needs a row for the blank, for `1`, and for each symbol
/// some row writes.
pub fn parse_machine(text: &str) -> Result<OMachine, MachineParseError> {
    let mut declared: Option<(usize, Vec<String>)> = None;
    let mut start = None;
    let mut halt = None;
    let mut blank = None;
    let mut queries: Vec<(usize, String, Option<String>, Option<String>)> = Vec::new();
    let mut rows = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, rest) = content.split_once(':').ok_or_else(|| syntax(line, "expected `key: value`"))?;
        match key.trim() {
            "states" => {
                if declared.is_some() {
                    return Err(syntax(line, "duplicate states line"));
                }
                let names: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                if names.is_empty() {
                    return Err(syntax(line, "states line is empty"));
                }
                declared = Some((line, names));
            }
            "start" => set_once(&mut start, single(line, "start", rest)?, line, "start")?,
            "halt" => set_once(&mut halt, single(line, "halt", rest)?, line, "halt")?,
            "blank" => set_once(&mut blank, symbol(&single(line, "blank", rest)?), line, "blank")?,
            "query" => {
                let mut tokens = rest.split_whitespace();
                let state = tokens.next().ok_or_else(|| syntax(line, "query needs a state"))?.to_string();
                let (mut yes, mut no) = (None, None);
                for token in tokens {
                    match token.split_once('=') {
                        Some(("yes", s)) if !s.is_empty() => set_once(&mut yes, s.to_string(), line, "yes=")?,
                        Some(("no", s)) if !s.is_empty() => set_once(&mut no, s.to_string(), line, "no=")?,
                        _ => return Err(syntax(line, format!("unexpected query field {token:?}"))),
                    }
                }
                queries.push((line, state, yes, no));
            }
            "delta" => {
                let tokens: Vec<&str> = rest.split_whitespace().collect();
                let [state, read, "->", next, write, dir] = tokens[..] else {
                    return Err(syntax(line, "expected `delta: <state> <sym> -> <state> <sym> <L|R>`"));
                };
                let dir = match dir {
                    "L" => Move::L,
                    "R" => Move::R,
                    other => return Err(syntax(line, format!("move must be L or R, got {other:?}"))),
                };
                rows.push(Row {
                    line,
                    state: state.to_string(),
                    read: symbol(read),
                    next: next.to_string(),
                    write: symbol(write),
                    dir,
                });
            }
            other => return Err(syntax(line, format!("unknown key {other:?}"))),
        }
    }

    let (_, names) = declared.ok_or_else(|| semantic("missing states line"))?;
    let states: BTreeSet<String> = names.iter().cloned().collect();
    if states.len() != names.len() {
        return Err(semantic("a state is declared twice"));
    }
    let states: Vec<String> = states.into_iter().collect();
    let index = |name: &str, role: &str| {
        states
            .binary_search_by(|s| s.as_str().cmp(name))
            .map_err(|_| semantic(format!("unknown state {name:?} used as {role}")))
    };

    let start = index(&start.ok_or_else(|| semantic("missing start state"))?, "start")?;
    let halt = index(&halt.ok_or_else(|| semantic("missing halt state"))?, "halt")?;
    if queries.len() > 1 {
        return Err(semantic(format!("a machine has at most one query state; found {}", queries.len())));
    }
    let query = match queries.pop() {
        None => None,
        Some((_, state, yes, no)) => {
            let yes = yes.ok_or_else(|| semantic(format!("query state {state:?} has no yes-answer state")))?;
            let no = no.ok_or_else(|| semantic(format!("query state {state:?} has no no-answer state")))?;
            Some(QueryStates { state: index(&state, "query")?, yes: index(&yes, "yes")?, no: index(&no, "no")? })
        }
    };
    if query.as_ref().is_some_and(|q| q.state == halt) {
        return Err(semantic("the query state cannot be the halt state"));
    }

    let blank = blank.unwrap_or_else(|| "_".to_string());
    let mut symbols = vec![blank.clone()];
    for fixed in ["1", "0", MU] {
        if fixed == blank {
            return Err(semantic(format!("blank may not be {fixed:?}")));
        }
        symbols.push(fixed.to_string());
    }
    let extra: BTreeSet<&str> = rows
        .iter()
        .flat_map(|r| [r.read.as_str(), r.write.as_str()])
        .filter(|s| !symbols.iter().any(|k| k == s))
        .collect();
    symbols.extend(extra.into_iter().map(str::to_string));
    let sym = |name: &str| symbols.iter().position(|s| s == name).expect("collected above");

    let width = symbols.len();
    let mut table = vec![None; states.len() * width];
    let mut written = BTreeSet::from([sym(&blank), sym("1")]);
    for row in &rows {
        let s = index(&row.state, &format!("delta source on line {}", row.line))?;
        let next = index(&row.next, &format!("delta target on line {}", row.line))?;
        if s == halt {
            return Err(semantic(format!("line {}: the halt state has no transitions", row.line)));
        }
        if query.as_ref().is_some_and(|q| q.state == s) {
            return Err(semantic(format!("line {}: the query state has no transitions", row.line)));
        }
        let slot = &mut table[s * width + sym(&row.read)];
        if slot.is_some() {
            return Err(semantic(format!("line {}: second row for ({}, {})", row.line, row.state, row.read)));
        }
        let write = sym(&row.write);
        written.insert(write);
        *slot = Some(Transition { next, write, dir: row.dir });
    }

    let mut seen = vec![false; states.len()];
    let mut frontier = VecDeque::from([start]);
    seen[start] = true;
    while let Some(s) = frontier.pop_front() {
        let successors: Vec<usize> = match &query {
            Some(q) if q.state == s => vec![q.yes, q.no],
            _ => (0..width).filter_map(|y| table[s * width + y].map(|t| t.next)).collect(),
        };
        for next in successors {
            if !seen[next] {
                seen[next] = true;
                frontier.push_back(next);
            }
        }
    }
    let mut missing = BTreeMap::new();
    for s in (0..states.len()).filter(|&s| seen[s] && s != halt) {
        if query.as_ref().is_some_and(|q| q.state == s) {
            continue;
        }
        for &y in &written {
            if table[s * width + y].is_none() {
                missing.entry(states[s].clone()).or_insert_with(Vec::new).push(symbols[y].clone());
            }
        }
    }
    if let Some((state, syms)) = missing.into_iter().next() {
        return Err(semantic(format!(
            "transitions are not total: reachable state {state:?} has no row for {}",
            syms.join(", ")
        )));
    }

    Ok(OMachine { states, symbols, start, halt, query, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "states: s h\nstart: s\nhalt: h\ndelta: s _ -> h _ R\ndelta: s 1 -> h 1 R\n";

    #[test]
    fn minimal_halting_machine() {
        let m = parse_machine(MINIMAL).unwrap();
        assert_eq!(m.states().len(), 2);
        assert_eq!(m.query_state_count(), 0);
        assert_eq!(m.start_state(), "s");
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let shuffled =
            "# comment\ndelta: s 1 -> h 1 R\nhalt: h\n\nstates: h s\ndelta: s _ -> h _ R  # trailing\nstart: s\n";
        let a = parse_machine(MINIMAL).unwrap();
        let b = parse_machine(shuffled).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.canonical(), b.canonical());
        assert_eq!(parse_machine(&a.canonical()).unwrap(), a);
    }

    #[test]
    fn mu_alias() {
        let text = "states: s w q y n h\nstart: s\nhalt: h\nquery: q yes=y no=n\n\
                    delta: s _ -> w mu R\ndelta: s 1 -> w μ R\ndelta: s μ -> w μ R\n\
                    delta: w _ -> q mu R\ndelta: w 1 -> q mu R\ndelta: w μ -> q μ R\n\
                    delta: y _ -> h 1 R\ndelta: y 1 -> h 1 R\ndelta: y μ -> h 1 R\n\
                    delta: n _ -> h _ R\ndelta: n 1 -> h _ R\ndelta: n μ -> h _ R\n";
        let m = parse_machine(text).unwrap();
        assert_eq!(m.query_states(), Some(("q", "y", "n")));
        assert!(m.canonical().contains("delta: s _ -> w μ R"));
    }

    fn semantic_message(text: &str) -> String {
        match parse_machine(text) {
            Err(MachineParseError::Semantic(m)) => m,
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    #[test]
    fn missing_yes_state() {
        let text = format!("{MINIMAL}query: h2 no=s\n").replace("states: s h", "states: s h h2");
        assert!(semantic_message(&text).contains("yes-answer"));
    }

    #[test]
    fn semantic_errors() {
        assert!(semantic_message(&MINIMAL.replace("start: s", "start: x")).contains("unknown state"));
        assert!(semantic_message(&MINIMAL.replace("delta: s 1 -> h 1 R\n", "")).contains("not total"));
        let two = "states: s h a b\nstart: s\nhalt: h\nquery: a yes=h no=h\nquery: b yes=h no=h\n\
                   delta: s _ -> h _ R\ndelta: s 1 -> h 1 R\n";
        assert!(semantic_message(two).contains("at most one query state"));
        assert!(semantic_message(&format!("{MINIMAL}delta: s 1 -> s 1 L\n")).contains("second row"));
        assert!(semantic_message(&format!("{MINIMAL}delta: h 1 -> s 1 L\n")).contains("halt state"));
    }

    #[test]
    fn unreachable_states_may_be_partial() {
        let text = format!("{MINIMAL}delta: z 1 -> h 1 R\n").replace("states: s h", "states: s h z");
        assert!(parse_machine(&text).is_ok());
    }

    #[test]
    fn written_symbols_need_rows() {
        let text = "states: s t h\nstart: s\nhalt: h\n\
                    delta: s _ -> t x R\ndelta: s 1 -> t 1 R\ndelta: t _ -> h _ R\ndelta: t 1 -> h 1 R\n";
        let msg = semantic_message(text);
        assert!(msg.contains("\"s\"") && msg.contains('x'), "{msg}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let cases = [
            ("states: s h\nstart s\n", 2),
            ("states: s h\n\n\ndelta: s 1 -> h 1\n", 4),
            ("states: s h\ndelta: s 1 -> h 1 U\n", 2),
            ("halt: h\nhalt: h\n", 2),
            ("frobnicate: 3\n", 1),
            ("states: q y\nquery: q yes=y maybe=y\n", 2),
        ];
        for (text, expected) in cases {
            match parse_machine(text) {
                Err(MachineParseError::Syntax { line, .. }) => assert_eq!(line, expected, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }
}
