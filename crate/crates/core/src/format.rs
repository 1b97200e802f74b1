//! Line-oriented text formats for MDPs, value functions, solve reports and
//! certificates.
//!
//! MDP files:
//!
//! ```text
//! mdp
//! discount <literal>
//! states <n>
//! state <i> [final <literal>]
//! action <a> reward <literal>
//! to <j> p <literal>
//! ```
//!
//! One directive per line; `#` starts a comment and blank lines are
//! ignored. `to` lines belong to the preceding `action`, `action` lines to
//! the preceding `state`.
//!
//! Values are written as `v <state> <literal>` and rules as
//! `d <state> <action>`. Exact values carry an extra column with a
//! 15-significant-digit decimal approximation, which readers ignore.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::certify::Certificate;
use crate::error::{MdpError, Result};
use crate::model::{ActionEntry, DecisionRule, Distribution, ExplicitMdp, FinitePolicy, Mode};
use crate::numerics::{approx_decimal, Scalar, ValueFunction};
use crate::solvers::SolveReport;

/// A directive split into whitespace-separated tokens with 1-based columns.
struct Line<'a> {
    number: usize,
    tokens: Vec<(usize, &'a str)>,
}

impl<'a> Line<'a> {
    fn error(&self, column: usize, message: impl Into<String>) -> MdpError {
        MdpError::Parse {
            line: self.number,
            column,
            message: message.into(),
        }
    }

    fn keyword(&self) -> &'a str {
        self.tokens[0].1
    }

    fn end_column(&self) -> usize {
        self.tokens.last().map_or(1, |(c, t)| c + t.chars().count())
    }

    fn token(&self, k: usize, what: &str) -> Result<(usize, &'a str)> {
        self.tokens
            .get(k)
            .copied()
            .ok_or_else(|| self.error(self.end_column(), format!("expected {what}")))
    }

    fn expect_word(&self, k: usize, word: &str) -> Result<()> {
        let (col, tok) = self.token(k, &format!("'{word}'"))?;
        if tok != word {
            return Err(self.error(col, format!("expected '{word}', found '{tok}'")));
        }
        Ok(())
    }

    fn index(&self, k: usize, what: &str) -> Result<(usize, usize)> {
        let (col, tok) = self.token(k, what)?;
        if tok.is_empty() || !tok.bytes().all(|b| b.is_ascii_digit()) {
            return Err(self.error(col, format!("expected {what}, found '{tok}'")));
        }
        tok.parse::<usize>()
            .map(|v| (col, v))
            .map_err(|_| self.error(col, format!("{what} '{tok}' is too large")))
    }

    fn literal<S: Scalar>(&self, k: usize, what: &str) -> Result<S> {
        let (col, tok) = self.token(k, what)?;
        S::parse_literal(tok).map_err(|e| self.error(col + e.position, format!("{what}: {e}")))
    }

    fn expect_len(&self, min: usize, max: usize) -> Result<()> {
        if self.tokens.len() > max {
            let (col, tok) = self.tokens[max];
            return Err(self.error(col, format!("unexpected token '{tok}'")));
        }
        if self.tokens.len() < min {
            return Err(self.error(self.end_column(), "missing arguments"));
        }
        Ok(())
    }
}

fn lines(text: &str) -> impl Iterator<Item = Line<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start = None;
        for (ci, (bi, ch)) in content.char_indices().enumerate() {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some((ci, bi)),
                (true, Some((c0, b0))) => {
                    tokens.push((c0 + 1, &content[b0..bi]));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some((c0, b0)) = start {
            tokens.push((c0 + 1, &content[b0..]));
        }
        (!tokens.is_empty()).then_some(Line {
            number: i + 1,
            tokens,
        })
    })
}

struct PendingAction<S> {
    line: usize,
    column: usize,
    state: usize,
    action: usize,
    reward: S,
    support: Vec<(usize, S)>,
}

/// Parses and validates an MDP file. Validation uses the permissive
/// finite-horizon mode; infinite-horizon solvers recheck `λ < 1`.
pub fn parse_mdp<S: Scalar>(text: &str) -> Result<ExplicitMdp<S>> {
    let mut it = lines(text);
    let first = it
        .next()
        .ok_or_else(|| MdpError::Parse { line: 1, column: 1, message: "empty file, expected 'mdp'".into() })?;
    if first.keyword() != "mdp" {
        return Err(first.error(1, format!("expected 'mdp', found '{}'", first.keyword())));
    }
    first.expect_len(1, 1)?;

    let mut discount: Option<S> = None;
    let mut n_states: Option<usize> = None;
    let mut states: Vec<Option<BTreeMap<usize, ActionEntry<S>>>> = Vec::new();
    let mut finals: Vec<Option<S>> = Vec::new();
    let mut current_state: Option<usize> = None;
    let mut pending: Option<PendingAction<S>> = None;

    fn flush<S: Scalar>(
        pending: &mut Option<PendingAction<S>>,
        states: &mut [Option<BTreeMap<usize, ActionEntry<S>>>],
    ) -> Result<()> {
        let Some(p) = pending.take() else { return Ok(()) };
        let at = |message: String| MdpError::Parse { line: p.line, column: p.column, message };
        if p.support.is_empty() {
            return Err(at(format!("action {} of state {} has no transitions", p.action, p.state)));
        }
        let dist = Distribution::new(p.support).map_err(|e| {
            at(format!("{e} at state {}, action {}", p.state, p.action))
        })?;
        states[p.state]
            .as_mut()
            .expect("state declared")
            .insert(p.action, ActionEntry::new(p.reward, dist));
        Ok(())
    }

    for line in it {
        match line.keyword() {
            "discount" => {
                line.expect_len(2, 2)?;
                if discount.is_some() {
                    return Err(line.error(1, "duplicate 'discount'"));
                }
                discount = Some(line.literal(1, "discount")?);
            }
            "states" => {
                line.expect_len(2, 2)?;
                if n_states.is_some() {
                    return Err(line.error(1, "duplicate 'states'"));
                }
                let (_, n) = line.index(1, "state count")?;
                n_states = Some(n);
                states = (0..n).map(|_| None).collect();
                finals = vec![None; n];
            }
            "state" => {
                flush(&mut pending, &mut states)?;
                let n = n_states.ok_or_else(|| line.error(1, "'state' before 'states'"))?;
                line.expect_len(2, 4)?;
                let (col, s) = line.index(1, "state index")?;
                if s >= n {
                    return Err(line.error(col, format!("state {s} out of range (states {n})")));
                }
                if states[s].is_some() {
                    return Err(line.error(col, format!("state {s} declared twice")));
                }
                if line.tokens.len() > 2 {
                    line.expect_word(2, "final")?;
                    finals[s] = Some(line.literal(3, "final reward")?);
                }
                states[s] = Some(BTreeMap::new());
                current_state = Some(s);
            }
            "action" => {
                flush(&mut pending, &mut states)?;
                let s = current_state.ok_or_else(|| line.error(1, "'action' before any 'state'"))?;
                line.expect_len(4, 4)?;
                let (col, a) = line.index(1, "action index")?;
                line.expect_word(2, "reward")?;
                let reward = line.literal(3, "reward")?;
                if states[s].as_ref().is_some_and(|acts| acts.contains_key(&a)) {
                    return Err(line.error(col, format!("action {a} declared twice at state {s}")));
                }
                pending = Some(PendingAction {
                    line: line.number,
                    column: 1,
                    state: s,
                    action: a,
                    reward,
                    support: Vec::new(),
                });
            }
            "to" => {
                let n = n_states.unwrap_or(0);
                let p = pending
                    .as_mut()
                    .ok_or_else(|| line.error(1, "'to' before any 'action'"))?;
                line.expect_len(4, 4)?;
                let (col, t) = line.index(1, "target state")?;
                if t >= n {
                    return Err(line.error(col, format!("target {t} out of range (states {n})")));
                }
                line.expect_word(2, "p")?;
                let prob: S = line.literal(3, "probability")?;
                if p.support.iter().any(|(u, _)| *u == t) {
                    return Err(line.error(col, format!("duplicate target {t}")));
                }
                if !prob.is_positive() {
                    return Err(line.error(line.tokens[3].0, "probability must be positive"));
                }
                p.support.push((t, prob));
            }
            "mdp" => return Err(line.error(1, "duplicate 'mdp'")),
            other => return Err(line.error(1, format!("unknown directive '{other}'"))),
        }
    }
    flush(&mut pending, &mut states)?;

    let at_end = |message: &str| MdpError::Parse {
        line: text.lines().count().max(1),
        column: 1,
        message: message.into(),
    };
    let discount = discount.ok_or_else(|| at_end("missing 'discount'"))?;
    n_states.ok_or_else(|| at_end("missing 'states'"))?;
    let final_reward = finals
        .iter()
        .any(Option::is_some)
        .then(|| finals.into_iter().map(|f| f.unwrap_or_else(S::zero)).collect());
    let m = ExplicitMdp::new(
        discount,
        states.into_iter().map(Option::unwrap_or_default).collect(),
        final_reward,
    );
    m.validate(Mode::Finite)?;
    Ok(m)
}

/// Canonical serialization; `parse_mdp(&write_mdp(m)) == m`.
pub fn write_mdp<S: Scalar>(m: &ExplicitMdp<S>) -> String {
    let mut out = String::new();
    out.push_str("mdp\n");
    let _ = writeln!(out, "discount {}", m.discount());
    let _ = writeln!(out, "states {}", m.n_states());
    let finals = m.declared_final_reward();
    for (s, acts) in m.states().iter().enumerate() {
        match finals {
            Some(f) => {
                let _ = writeln!(out, "state {s} final {}", f[s]);
            }
            None => {
                let _ = writeln!(out, "state {s}");
            }
        }
        for (a, entry) in acts {
            let _ = writeln!(out, "action {a} reward {}", entry.reward);
            for (t, p) in entry.transition.iter() {
                let _ = writeln!(out, "to {t} p {p}");
            }
        }
    }
    out
}

/// `v <state> <literal>` lines.
pub fn write_values<S: Scalar>(v: &ValueFunction<S>) -> String {
    let mut out = String::new();
    for (s, x) in v.iter().enumerate() {
        if S::is_exact() {
            let _ = writeln!(out, "v {s} {x} {}", approx_decimal(x));
        } else {
            let _ = writeln!(out, "v {s} {x}");
        }
    }
    out
}

/// `d <state> <action>` lines.
pub fn write_rule(d: &DecisionRule) -> String {
    let mut out = String::new();
    for (s, a) in d.as_slice().iter().enumerate() {
        let _ = writeln!(out, "d {s} {a}");
    }
    out
}

/// Metadata keywords that may precede `v` lines in files read as values.
const METADATA: &[&str] = &[
    "report", "certificate", "algorithm", "backend", "states", "epsilon", "stop", "iterations",
    "sweeps", "residual", "horizon", "source", "d", "epoch",
];

/// Reads `v` lines for exactly `n` states. Reports and certificates are
/// accepted too: their metadata lines are skipped.
pub fn parse_values<S: Scalar>(text: &str, n: usize) -> Result<ValueFunction<S>> {
    let mut values: Vec<Option<S>> = vec![None; n];
    let mut last_line = 1;
    for line in lines(text) {
        last_line = line.number;
        match line.keyword() {
            "v" => {
                line.expect_len(3, 4)?;
                let (col, s) = line.index(1, "state index")?;
                if s >= n {
                    return Err(line.error(col, format!("state {s} out of range (states {n})")));
                }
                if values[s].is_some() {
                    return Err(line.error(col, format!("value of state {s} given twice")));
                }
                values[s] = Some(line.literal(2, "value")?);
            }
            kw if METADATA.contains(&kw) => {}
            other => return Err(line.error(1, format!("unknown directive '{other}'"))),
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(s, v)| {
            v.ok_or_else(|| MdpError::Parse {
                line: last_line,
                column: 1,
                message: format!("missing value for state {s}"),
            })
        })
        .collect()
}

/// Reads `d` lines for exactly `n` states, skipping other directives.
pub fn parse_rule(text: &str, n: usize) -> Result<DecisionRule> {
    let mut rule: Vec<Option<usize>> = vec![None; n];
    for line in lines(text) {
        if line.keyword() != "d" {
            continue;
        }
        line.expect_len(3, 3)?;
        let (col, s) = line.index(1, "state index")?;
        if s >= n {
            return Err(line.error(col, format!("state {s} out of range (states {n})")));
        }
        if rule[s].is_some() {
            return Err(line.error(col, format!("action of state {s} given twice")));
        }
        rule[s] = Some(line.index(2, "action index")?.1);
    }
    rule.into_iter()
        .enumerate()
        .map(|(s, a)| {
            a.ok_or_else(|| MdpError::Parse { line: 1, column: 1, message: format!("missing action for state {s}") })
        })
        .collect::<Result<Vec<_>>>()
        .map(DecisionRule::new)
}

pub fn write_report<S: Scalar>(r: &SolveReport<S>) -> String {
    let mut out = String::new();
    out.push_str("report\n");
    let _ = writeln!(out, "algorithm {}", r.algorithm);
    let _ = writeln!(out, "backend {}", r.backend);
    let _ = writeln!(out, "states {}", r.values.len());
    let _ = writeln!(out, "epsilon {}", r.epsilon);
    let _ = writeln!(out, "stop {}", r.stop_reason);
    let _ = writeln!(out, "iterations {}", r.iterations);
    let _ = writeln!(out, "sweeps {}", r.sweeps);
    let _ = writeln!(out, "residual {}", r.residual);
    out.push_str(&write_values(&r.values));
    out.push_str(&write_rule(&r.rule));
    out
}

pub fn write_finite_report<S: Scalar>(policy: &FinitePolicy, values: &ValueFunction<S>) -> String {
    let mut out = String::new();
    out.push_str("report\n");
    out.push_str("algorithm backward-induction\n");
    let _ = writeln!(out, "backend {}", S::BACKEND);
    let _ = writeln!(out, "states {}", values.len());
    let _ = writeln!(out, "horizon {}", policy.horizon());
    out.push_str(&write_values(values));
    for (t, rule) in policy.rules().iter().enumerate() {
        let _ = writeln!(out, "epoch {t}");
        out.push_str(&write_rule(rule));
    }
    out
}

pub fn write_certificate<S: Scalar>(c: &Certificate<S>) -> String {
    let mut out = String::new();
    out.push_str("certificate\n");
    let _ = writeln!(out, "states {}", c.values.len());
    let _ = writeln!(out, "epsilon {}", c.epsilon);
    let _ = writeln!(out, "residual {}", c.residual);
    let _ = writeln!(out, "iterations {}", c.iterations_used);
    let source: String = c.source.chars().map(|ch| if ch == '\n' || ch == '#' { ' ' } else { ch }).collect();
    let _ = writeln!(out, "source {}", source.trim());
    out.push_str(&write_values(&c.values));
    out.push_str(&write_rule(&c.rule));
    out
}

pub fn parse_certificate<S: Scalar>(text: &str) -> Result<Certificate<S>> {
    let mut header = lines(text);
    let first = header
        .next()
        .ok_or_else(|| MdpError::Parse { line: 1, column: 1, message: "empty file, expected 'certificate'".into() })?;
    if first.keyword() != "certificate" {
        return Err(first.error(1, format!("expected 'certificate', found '{}'", first.keyword())));
    }
    let mut n = None;
    let mut epsilon = None;
    let mut residual = None;
    let mut iterations = None;
    let mut source = String::new();
    for line in header {
        match line.keyword() {
            "states" => n = Some(line.index(1, "state count")?.1),
            "epsilon" => epsilon = Some(line.literal::<S>(1, "epsilon")?),
            "residual" => residual = Some(line.literal::<S>(1, "residual")?),
            "iterations" => {
                let (col, tok) = line.token(1, "iteration count")?;
                iterations = Some(tok.parse::<u64>().map_err(|_| line.error(col, "invalid iteration count"))?);
            }
            "source" => {
                source = line.tokens[1..].iter().map(|(_, t)| *t).collect::<Vec<_>>().join(" ");
            }
            "v" | "d" => {}
            other => return Err(line.error(1, format!("unknown directive '{other}'"))),
        }
    }
    let missing = |what: &str| MdpError::Parse { line: 1, column: 1, message: format!("certificate lacks '{what}'") };
    let n = n.ok_or_else(|| missing("states"))?;
    Ok(Certificate {
        values: parse_values(text, n)?,
        rule: parse_rule(text, n)?,
        epsilon: epsilon.ok_or_else(|| missing("epsilon"))?,
        residual: residual.ok_or_else(|| missing("residual"))?,
        iterations_used: iterations.ok_or_else(|| missing("iterations"))?,
        source,
    })
}
