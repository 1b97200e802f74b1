//! Brute-force reference answers for small instances.
//!
//! Nothing here shares code paths with the iterative solvers: the optimal
//! value comes from enumerating every deterministic stationary rule and
//! solving its linear system, and finite-horizon values come from a
//! memoized top-down recursion.

use std::collections::HashMap;

use crate::error::{MdpError, Result};
use crate::linsolve::policy_value_exact;
use crate::model::{DecisionRule, ExplicitMdp, Mode};
use crate::numerics::{Scalar, ValueFunction};

/// Default cap on the number of enumerated rules.
pub const DEFAULT_RULE_CAP: u128 = 1_000_000;

/// Pointwise maximum of `ν^d` over all rules `d`, with a rule attaining it.
pub fn nu_star_bruteforce<S: Scalar>(m: &ExplicitMdp<S>) -> Result<(ValueFunction<S>, DecisionRule)> {
    nu_star_bruteforce_capped(m, DEFAULT_RULE_CAP)
}

pub fn nu_star_bruteforce_capped<S: Scalar>(
    m: &ExplicitMdp<S>,
    cap: u128,
) -> Result<(ValueFunction<S>, DecisionRule)> {
    if !S::is_exact() {
        return Err(MdpError::UnsupportedBackend(
            "brute-force oracle requires exact backend".into(),
        ));
    }
    m.validate(Mode::Infinite)?;
    let rules = m.rule_count();
    if rules > cap {
        return Err(MdpError::EnumerationCap { rules, cap });
    }
    let choices: Vec<Vec<usize>> = m.states().iter().map(|acts| acts.keys().copied().collect()).collect();
    let mut digits = vec![0usize; choices.len()];
    let mut best: Option<ValueFunction<S>> = None;
    let mut evaluated = Vec::with_capacity(rules as usize);
    loop {
        let rule = DecisionRule::new(digits.iter().zip(&choices).map(|(&k, c)| c[k]).collect());
        let value = policy_value_exact(m, &rule)?;
        best = Some(match best {
            None => value.clone(),
            Some(b) => b.iter().zip(value.iter()).map(|(x, y)| x.max(y).clone()).collect(),
        });
        evaluated.push((rule, value));
        // mixed-radix increment, state 0 fastest
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                let best = best.expect("at least one rule");
                let witness = evaluated
                    .into_iter()
                    .find(|(_, v)| *v == best)
                    .map(|(d, _)| d)
                    .ok_or_else(|| {
                        MdpError::Domain("no single rule attains the pointwise maximum".into())
                    })?;
                return Ok((best, witness));
            }
            digits[pos] += 1;
            if digits[pos] < choices[pos].len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Optimal `horizon`-step value by direct recursion over remaining epochs.
pub fn expectimax<S: Scalar>(m: &ExplicitMdp<S>, horizon: usize) -> Result<ValueFunction<S>> {
    if !S::is_exact() {
        return Err(MdpError::UnsupportedBackend(
            "expectimax oracle requires exact backend".into(),
        ));
    }
    m.validate(Mode::Finite)?;
    let terminal = m.final_reward();
    let mut memo = HashMap::new();
    Ok((0..m.n_states())
        .map(|s| value_to_go(m, &terminal, s, horizon, &mut memo))
        .collect())
}

fn value_to_go<S: Scalar>(
    m: &ExplicitMdp<S>,
    terminal: &ValueFunction<S>,
    s: usize,
    remaining: usize,
    memo: &mut HashMap<(usize, usize), S>,
) -> S {
    if remaining == 0 {
        return terminal[s].clone();
    }
    if let Some(v) = memo.get(&(s, remaining)) {
        return v.clone();
    }
    let mut best: Option<S> = None;
    for entry in m.actions(s).values() {
        let mut expected = S::zero();
        for &(t, ref p) in entry.transition.support() {
            expected = expected + p.clone() * value_to_go(m, terminal, t, remaining - 1, memo);
        }
        let q = entry.reward.clone() + m.discount().clone() * expected;
        if best.as_ref().is_none_or(|b| q > *b) {
            best = Some(q);
        }
    }
    let v = best.expect("non-empty enabled set");
    memo.insert((s, remaining), v.clone());
    v
}
