//! Explicit MDP representation: an array indexed by state whose entries are
//! ordered maps from enabled action to reward and successor distribution.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{MdpError, Result};
use crate::numerics::{Scalar, ValueFunction};

/// Successor distribution of one (state, action) pair, sorted by target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution<S> {
    support: Vec<(usize, S)>,
}

impl<S: Scalar> Distribution<S> {
    /// Builds a distribution from `(target, probability)` pairs.
    ///
    /// Probabilities must be positive with distinct targets and total mass
    /// one. The float backend accepts mass within
    /// [`FLOAT_MASS_TOLERANCE`](crate::numerics::FLOAT_MASS_TOLERANCE) of one
    /// and renormalizes proportionally.
    pub fn new(mut support: Vec<(usize, S)>) -> Result<Self> {
        if support.is_empty() {
            return Err(MdpError::Validation("empty distribution".into()));
        }
        if let Some((t, p)) = support.iter().find(|(_, p)| !p.is_positive()) {
            return Err(MdpError::Validation(format!(
                "probability {p} of target {t} is not positive"
            )));
        }
        support.sort_by_key(|&(t, _)| t);
        if let Some(w) = support.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(MdpError::Validation(format!(
                "duplicate target {}",
                w[0].0
            )));
        }
        let mass = support
            .iter()
            .fold(S::zero(), |acc, (_, p)| acc + p);
        if mass != S::one() {
            let off = (mass.clone() - S::one()).abs();
            match S::mass_tolerance() {
                Some(tol) if off <= tol => {
                    for (_, p) in &mut support {
                        *p = p.checked_div(&mass)?;
                    }
                }
                _ => {
                    return Err(MdpError::Validation(format!("mass {mass} ≠ 1")));
                }
            }
        }
        Ok(Distribution { support })
    }

    /// Point mass on `target`.
    pub fn dirac(target: usize) -> Self {
        Distribution {
            support: vec![(target, S::one())],
        }
    }

    pub fn support(&self) -> &[(usize, S)] {
        &self.support
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &S)> + '_ {
        self.support.iter().map(|(t, p)| (*t, p))
    }

    /// `Σ p(t)·v(t)`.
    pub fn expect(&self, v: &ValueFunction<S>) -> S {
        self.support
            .iter()
            .fold(S::zero(), |acc, (t, p)| acc + p.clone() * &v[*t])
    }

    fn mass(&self) -> S {
        self.support.iter().fold(S::zero(), |acc, (_, p)| acc + p)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionEntry<S> {
    pub reward: S,
    pub transition: Distribution<S>,
}

impl<S: Scalar> ActionEntry<S> {
    pub fn new(reward: S, transition: Distribution<S>) -> Self {
        ActionEntry { reward, transition }
    }
}

/// Which solver family an MDP is being validated for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Discounted infinite horizon; requires `0 <= λ < 1`.
    Infinite,
    /// Finite horizon; permits `λ = 1`.
    Finite,
}

/// A finite MDP with rewards and a discount factor.
///
/// States and actions are dense 0-based indices. Construction does not
/// validate; call [`ExplicitMdp::validate`] before solving (the solvers do so
/// themselves).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplicitMdp<S> {
    discount: S,
    states: Vec<BTreeMap<usize, ActionEntry<S>>>,
    final_reward: Option<ValueFunction<S>>,
}

impl<S: Scalar> ExplicitMdp<S> {
    pub fn new(
        discount: S,
        states: Vec<BTreeMap<usize, ActionEntry<S>>>,
        final_reward: Option<ValueFunction<S>>,
    ) -> Self {
        ExplicitMdp {
            discount,
            states,
            final_reward,
        }
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn discount(&self) -> &S {
        &self.discount
    }

    /// Enabled actions of `s` in increasing index order.
    pub fn actions(&self, s: usize) -> &BTreeMap<usize, ActionEntry<S>> {
        &self.states[s]
    }

    pub fn entry(&self, s: usize, a: usize) -> Option<&ActionEntry<S>> {
        self.states.get(s)?.get(&a)
    }

    pub fn states(&self) -> &[BTreeMap<usize, ActionEntry<S>>] {
        &self.states
    }

    /// Declared final reward, if any.
    pub fn declared_final_reward(&self) -> Option<&ValueFunction<S>> {
        self.final_reward.as_ref()
    }

    /// `r_N`, defaulting to zero.
    pub fn final_reward(&self) -> ValueFunction<S> {
        self.final_reward
            .clone()
            .unwrap_or_else(|| ValueFunction::zeros(self.n_states()))
    }

    pub fn n_transitions(&self) -> usize {
        self.states
            .iter()
            .flat_map(|acts| acts.values())
            .map(|e| e.transition.support().len())
            .sum()
    }

    /// Number of deterministic stationary decision rules, saturating.
    pub fn rule_count(&self) -> u128 {
        self.states
            .iter()
            .fold(1u128, |acc, acts| acc.saturating_mul(acts.len() as u128))
    }

    /// Returns a copy with a different discount factor.
    pub fn with_discount(&self, discount: S) -> Self {
        ExplicitMdp {
            discount,
            ..self.clone()
        }
    }

    /// Checks every structural invariant for the given solving mode.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        let n = self.n_states();
        if n == 0 {
            return Err(MdpError::Validation("MDP has no states".into()));
        }
        if self.discount.is_negative() {
            return Err(MdpError::Validation(format!(
                "discount {} must be >= 0",
                self.discount
            )));
        }
        match mode {
            Mode::Infinite if self.discount >= S::one() => {
                return Err(MdpError::Validation(format!(
                    "discount must be < 1 (got {})",
                    self.discount
                )));
            }
            Mode::Finite if self.discount > S::one() => {
                return Err(MdpError::Validation(format!(
                    "discount must be <= 1 (got {})",
                    self.discount
                )));
            }
            _ => {}
        }
        if let Some(fr) = &self.final_reward {
            if fr.len() != n {
                return Err(MdpError::Dimension {
                    expected: n,
                    found: fr.len(),
                });
            }
        }
        for (s, acts) in self.states.iter().enumerate() {
            if acts.is_empty() {
                return Err(MdpError::Validation(format!(
                    "empty enabled set at state {s}"
                )));
            }
            for (a, entry) in acts {
                let dist = &entry.transition;
                if let Some((t, _)) = dist.iter().find(|&(t, _)| t >= n) {
                    return Err(MdpError::Validation(format!(
                        "target {t} out of range at state {s}, action {a}"
                    )));
                }
                if let Some((t, p)) = dist.iter().find(|(_, p)| !p.is_positive()) {
                    return Err(MdpError::Validation(format!(
                        "probability {p} of target {t} is not positive at state {s}, action {a}"
                    )));
                }
                if dist.support.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return Err(MdpError::Validation(format!(
                        "unsorted or duplicate targets at state {s}, action {a}"
                    )));
                }
                let mass = dist.mass();
                let ok = match S::mass_tolerance() {
                    None => mass == S::one(),
                    Some(tol) => (mass.clone() - S::one()).abs() <= tol,
                };
                if !ok {
                    return Err(MdpError::Validation(format!(
                        "mass {mass} ≠ 1 at state {s}, action {a}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_values(&self, v: &ValueFunction<S>) -> Result<()> {
        if v.len() != self.n_states() {
            return Err(MdpError::Dimension {
                expected: self.n_states(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `r^d`: the reward each state collects under `d`.
    pub fn reward_vector(&self, d: &DecisionRule) -> Result<ValueFunction<S>> {
        d.check(self)?;
        Ok((0..self.n_states())
            .map(|s| self.states[s][&d[s]].reward.clone())
            .collect())
    }

    /// `P_d v`: expected next value under `d`.
    pub fn apply_transition(
        &self,
        d: &DecisionRule,
        v: &ValueFunction<S>,
    ) -> Result<ValueFunction<S>> {
        d.check(self)?;
        self.check_values(v)?;
        Ok((0..self.n_states())
            .map(|s| self.states[s][&d[s]].transition.expect(v))
            .collect())
    }

    pub(crate) fn ensure_values(&self, v: &ValueFunction<S>) -> Result<()> {
        self.check_values(v)
    }
}

/// A deterministic stationary decision rule `S -> A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DecisionRule(Vec<usize>);

impl DecisionRule {
    pub fn new(actions: Vec<usize>) -> Self {
        DecisionRule(actions)
    }

    /// The rule choosing the smallest enabled action everywhere.
    pub fn first_enabled<S: Scalar>(m: &ExplicitMdp<S>) -> Self {
        DecisionRule(
            m.states()
                .iter()
                .map(|acts| acts.keys().next().copied().unwrap_or(0))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn set(&mut self, s: usize, a: usize) {
        self.0[s] = a;
    }

    /// Every chosen action is enabled.
    pub fn check<S: Scalar>(&self, m: &ExplicitMdp<S>) -> Result<()> {
        if self.len() != m.n_states() {
            return Err(MdpError::Dimension {
                expected: m.n_states(),
                found: self.len(),
            });
        }
        match self
            .0
            .iter()
            .enumerate()
            .find(|&(s, a)| !m.actions(s).contains_key(a))
        {
            Some((state, &action)) => Err(MdpError::InvalidRule { state, action }),
            None => Ok(()),
        }
    }
}

impl std::ops::Index<usize> for DecisionRule {
    type Output = usize;
    fn index(&self, s: usize) -> &usize {
        &self.0[s]
    }
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// A Markovian deterministic policy for a finite horizon, epoch 0 first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePolicy(Vec<DecisionRule>);

impl FinitePolicy {
    pub fn new(rules: Vec<DecisionRule>) -> Self {
        FinitePolicy(rules)
    }

    pub fn horizon(&self) -> usize {
        self.0.len()
    }

    pub fn rules(&self) -> &[DecisionRule] {
        &self.0
    }
}
