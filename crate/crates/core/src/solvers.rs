//! Value iteration, Gauss-Seidel value iteration, policy iteration,
//! modified policy iteration and finite-horizon backward induction.
//!
//! The infinite-horizon methods stop once successive iterates are closer
//! than `ε(1 - λ)/(2λ)` in sup distance, which makes the returned rule
//! ε-optimal. Policy iteration instead terminates with an exactly optimal
//! rule and needs the exact backend.

use std::fmt;
use std::str::FromStr;

use crate::bellman::{bellman_opt, gauss_seidel_sweep, q_value};
use crate::error::{MdpError, Result};
use crate::kernel::BellmanEngine;
use crate::linsolve::policy_value_unchecked;
use crate::model::{DecisionRule, ExplicitMdp, FinitePolicy, Mode};
use crate::numerics::{sup_dist, Backend, Scalar, ValueFunction};

/// Default cap on Bellman applications per solve.
pub const DEFAULT_MAX_ITERATIONS: u64 = 10_000_000;

/// Default number of extra evaluation steps per MPI iteration.
pub const DEFAULT_MPI_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    ValueIteration,
    GaussSeidel,
    PolicyIteration,
    ModifiedPolicyIteration,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::ValueIteration,
        Algorithm::GaussSeidel,
        Algorithm::PolicyIteration,
        Algorithm::ModifiedPolicyIteration,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Algorithm::ValueIteration => "vi",
            Algorithm::GaussSeidel => "gs",
            Algorithm::PolicyIteration => "pi",
            Algorithm::ModifiedPolicyIteration => "mpi",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Algorithm {
    type Err = MdpError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.short_name() == s)
            .ok_or_else(|| MdpError::Usage(format!("unknown algorithm {s:?} (expected vi, gs, pi or mpi)")))
    }
}

/// The sequence `m_i` of partial evaluation steps for MPI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MpiOrder {
    Constant(usize),
    /// Explicit prefix; the last entry repeats, an empty list means 0.
    List(Vec<usize>),
}

impl MpiOrder {
    pub fn at(&self, i: usize) -> usize {
        match self {
            MpiOrder::Constant(k) => *k,
            MpiOrder::List(xs) => xs.get(i).or(xs.last()).copied().unwrap_or(0),
        }
    }
}

impl Default for MpiOrder {
    fn default() -> Self {
        MpiOrder::Constant(DEFAULT_MPI_ORDER)
    }
}

impl FromStr for MpiOrder {
    type Err = MdpError;

    /// `"k"` for a constant, `"k0,k1,..."` for an explicit list.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |x: &str| {
            x.trim()
                .parse::<usize>()
                .map_err(|_| MdpError::Usage(format!("invalid MPI order {s:?}")))
        };
        if s.contains(',') {
            s.split(',').map(parse).collect::<Result<_>>().map(MpiOrder::List)
        } else {
            parse(s).map(MpiOrder::Constant)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveParams<S> {
    /// Target accuracy; must be positive except for policy iteration,
    /// which ignores it and also accepts 0.
    pub epsilon: S,
    /// Cap on Bellman applications; `None` means [`DEFAULT_MAX_ITERATIONS`].
    pub max_iterations: Option<u64>,
    pub mpi_order: MpiOrder,
    pub initial_values: Option<ValueFunction<S>>,
    /// Starting rule for policy iteration.
    pub initial_rule: Option<DecisionRule>,
    /// Keep every value iterate in [`SolveReport::trace`].
    pub record_trace: bool,
}

impl<S: Scalar> SolveParams<S> {
    pub fn new(epsilon: S) -> Self {
        SolveParams {
            epsilon,
            max_iterations: None,
            mpi_order: MpiOrder::default(),
            initial_values: None,
            initial_rule: None,
            record_trace: false,
        }
    }

    pub fn with_initial_values(mut self, v: ValueFunction<S>) -> Self {
        self.initial_values = Some(v);
        self
    }

    pub fn with_mpi_order(mut self, order: MpiOrder) -> Self {
        self.mpi_order = order;
        self
    }

    pub fn with_max_iterations(mut self, cap: u64) -> Self {
        self.max_iterations = Some(cap);
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    fn cap(&self) -> u64 {
        self.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS)
    }

    fn check(&self, algorithm: Algorithm) -> Result<()> {
        if self.epsilon.is_negative() {
            return Err(MdpError::Domain(format!("epsilon {} must be >= 0", self.epsilon)));
        }
        if self.epsilon.is_zero() && algorithm != Algorithm::PolicyIteration {
            return Err(MdpError::Domain(
                "epsilon = 0 is only meaningful for policy iteration".into(),
            ));
        }
        if self.max_iterations == Some(0) {
            return Err(MdpError::Domain("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    IterationCap,
    /// `λ = 0`: one application of `𝓛` is already exact.
    DegenerateLambda,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::IterationCap => "iteration-cap",
            StopReason::DegenerateLambda => "degenerate-lambda",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of an infinite-horizon solve.
///
/// `iterations` counts outer iterations: Bellman optimality evaluations for
/// VI, convergence sweeps for GS, improvement passes for MPI and policy
/// evaluations for PI. `sweeps` counts every full pass over the state space,
/// including GS's final policy-extracting sweep and MPI's partial
/// evaluation steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport<S> {
    pub algorithm: Algorithm,
    pub backend: Backend,
    pub epsilon: S,
    pub rule: DecisionRule,
    pub values: ValueFunction<S>,
    pub iterations: u64,
    pub sweeps: u64,
    pub stop_reason: StopReason,
    /// Sup distance between the last two iterates compared by the stopping test.
    pub residual: S,
    pub trace: Vec<ValueFunction<S>>,
}

impl<S: Scalar> SolveReport<S> {
    pub fn converged(&self) -> bool {
        self.stop_reason != StopReason::IterationCap
    }
}

/// Stopping bound of the ε-optimal methods.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopThreshold<S> {
    /// Stop when the sup distance falls strictly below this value.
    Bound(S),
    /// `λ = 0`: stop after a single application.
    OneStep,
}

/// `ε(1 - λ)/(2λ)` for `0 < λ < 1`.
pub fn stop_threshold<S: Scalar>(lambda: &S, epsilon: &S) -> Result<StopThreshold<S>> {
    if lambda.is_negative() || *lambda >= S::one() {
        return Err(MdpError::Domain(format!("discount {lambda} outside [0, 1)")));
    }
    if !epsilon.is_positive() {
        return Err(MdpError::Domain(format!("epsilon {epsilon} must be > 0")));
    }
    if lambda.is_zero() {
        return Ok(StopThreshold::OneStep);
    }
    let numer = epsilon.clone() * (S::one() - lambda);
    let denom = S::from_int(2) * lambda;
    Ok(StopThreshold::Bound(numer.checked_div(&denom)?))
}

struct Run<S> {
    trace: Vec<ValueFunction<S>>,
    record: bool,
}

impl<S: Scalar> Run<S> {
    fn new(record: bool) -> Self {
        Run {
            trace: Vec::new(),
            record,
        }
    }

    fn push(&mut self, v: &ValueFunction<S>) {
        self.push_with(|| v.clone());
    }

    fn push_with(&mut self, v: impl FnOnce() -> ValueFunction<S>) {
        if self.record {
            self.trace.push(v());
        }
    }
}

fn initial_values<S: Scalar>(m: &ExplicitMdp<S>, p: &SolveParams<S>) -> Result<ValueFunction<S>> {
    match &p.initial_values {
        Some(v) => {
            m.ensure_values(v)?;
            Ok(v.clone())
        }
        None => Ok(ValueFunction::zeros(m.n_states())),
    }
}

fn prepare<S: Scalar>(
    m: &ExplicitMdp<S>,
    p: &SolveParams<S>,
    algorithm: Algorithm,
) -> Result<StopThreshold<S>> {
    m.validate(Mode::Infinite)?;
    p.check(algorithm)?;
    stop_threshold(m.discount(), &p.epsilon)
}

#[allow(clippy::too_many_arguments)]
fn report<S: Scalar>(
    algorithm: Algorithm,
    p: &SolveParams<S>,
    rule: DecisionRule,
    values: ValueFunction<S>,
    iterations: u64,
    sweeps: u64,
    stop_reason: StopReason,
    residual: S,
    run: Run<S>,
) -> SolveReport<S> {
    SolveReport {
        algorithm,
        backend: S::BACKEND,
        epsilon: p.epsilon.clone(),
        rule,
        values,
        iterations,
        sweeps,
        stop_reason,
        residual,
        trace: run.trace,
    }
}

/// Applies `𝓛` until `d(v, 𝓛v)` drops below the stopping bound.
///
/// Returns the last iterate `v` checked by the bound together with the rule
/// that is greedy for it (taken from the same pass that computed `𝓛v`).
pub fn value_iteration<S: Scalar>(m: &ExplicitMdp<S>, p: &SolveParams<S>) -> Result<SolveReport<S>> {
    let alg = Algorithm::ValueIteration;
    let threshold = prepare(m, p, alg)?;
    let engine = S::Engine::new(m)?;
    let mut v = engine.load(&initial_values(m, p)?);
    let mut run = Run::new(p.record_trace);
    let cap = p.cap();
    let mut iterations = 0;
    loop {
        run.push_with(|| engine.unload(&v));
        let (next, rule) = engine.optimality_step(&v);
        iterations += 1;
        let residual = engine.sup_dist(&v, &next);
        let (values, stop) = match &threshold {
            StopThreshold::OneStep => (next, StopReason::DegenerateLambda),
            StopThreshold::Bound(t) if residual < *t => (v, StopReason::Converged),
            StopThreshold::Bound(_) if iterations >= cap => (next, StopReason::IterationCap),
            StopThreshold::Bound(_) => {
                v = next;
                continue;
            }
        };
        let values = engine.unload(&values);
        return Ok(report(alg, p, rule, values, iterations, iterations, stop, residual, run));
    }
}

/// Gauss-Seidel value iteration with the policy taken from a final
/// Gauss-Seidel sweep (not a plain Bellman step), which is what makes the
/// result ε-optimal.
pub fn gauss_seidel_iteration<S: Scalar>(m: &ExplicitMdp<S>, p: &SolveParams<S>) -> Result<SolveReport<S>> {
    let alg = Algorithm::GaussSeidel;
    let threshold = prepare(m, p, alg)?;
    let mut v = initial_values(m, p)?;
    let mut run = Run::new(p.record_trace);
    let cap = p.cap();
    let mut sweeps = 0;
    if threshold == StopThreshold::OneStep {
        run.push(&v);
        let (next, rule) = gauss_seidel_sweep(m, &v)?;
        let residual = sup_dist(&v, &next)?;
        return Ok(report(alg, p, rule, next, 1, 1, StopReason::DegenerateLambda, residual, run));
    }
    let StopThreshold::Bound(t) = threshold else { unreachable!() };
    let residual = loop {
        run.push(&v);
        let (next, rule) = gauss_seidel_sweep(m, &v)?;
        sweeps += 1;
        let change = sup_dist(&v, &next)?;
        v = next;
        if change < t {
            break change;
        }
        if sweeps >= cap {
            return Ok(report(alg, p, rule, v, sweeps, sweeps, StopReason::IterationCap, change, run));
        }
    };
    let iterations = sweeps;
    run.push(&v);
    let (values, rule) = gauss_seidel_sweep(m, &v)?;
    sweeps += 1;
    Ok(report(alg, p, rule, values, iterations, sweeps, StopReason::Converged, residual, run))
}

/// `(min_{s,a} r(s,a)) / (1 - λ)` everywhere; always satisfies `v <= 𝓛v`.
pub fn conservative_start<S: Scalar>(m: &ExplicitMdp<S>) -> Result<ValueFunction<S>> {
    let min_reward = m
        .states()
        .iter()
        .flat_map(|acts| acts.values())
        .map(|e| &e.reward)
        .min()
        .cloned()
        .ok_or_else(|| MdpError::Validation("MDP has no actions".into()))?;
    let value = min_reward.checked_div(&(S::one() - m.discount()))?;
    Ok(ValueFunction::constant(m.n_states(), value))
}

/// Modified policy iteration: each iteration improves greedily, stops if
/// `d(v, 𝓛v)` is below the bound, and otherwise sets `v <- L_d^{m_i+1}(v)`.
///
/// Starts from [`conservative_start`] unless initial values are given, in
/// which case they must satisfy `v <= 𝓛v`.
pub fn modified_policy_iteration<S: Scalar>(
    m: &ExplicitMdp<S>,
    p: &SolveParams<S>,
) -> Result<SolveReport<S>> {
    let alg = Algorithm::ModifiedPolicyIteration;
    let threshold = prepare(m, p, alg)?;
    let supplied = p.initial_values.is_some();
    let v = match &p.initial_values {
        Some(_) => initial_values(m, p)?,
        None => conservative_start(m)?,
    };
    let engine = S::Engine::new(m)?;
    let mut v = engine.load(&v);
    let mut run = Run::new(p.record_trace);
    let cap = p.cap();
    let (mut iterations, mut sweeps) = (0u64, 0u64);
    loop {
        run.push_with(|| engine.unload(&v));
        let (improved, rule) = engine.optimality_step(&v);
        if iterations == 0 && supplied {
            if let Some(state) = engine.first_exceeding(&v, &improved) {
                return Err(MdpError::ConservativeStart { state });
            }
        }
        iterations += 1;
        sweeps += 1;
        let residual = engine.sup_dist(&v, &improved);
        match &threshold {
            StopThreshold::OneStep => {
                let values = engine.unload(&improved);
                return Ok(report(alg, p, rule, values, iterations, sweeps, StopReason::DegenerateLambda, residual, run));
            }
            StopThreshold::Bound(t) if residual < *t => {
                let values = engine.unload(&v);
                return Ok(report(alg, p, rule, values, iterations, sweeps, StopReason::Converged, residual, run));
            }
            StopThreshold::Bound(_) => {}
        }
        // L_d(v) = 𝓛(v) for the greedy d, so one of the m_i + 1 steps is done
        v = improved;
        for _ in 0..p.mpi_order.at(iterations as usize - 1) {
            if sweeps >= cap {
                break;
            }
            v = engine.rule_step(&rule, &v);
            sweeps += 1;
        }
        if sweeps >= cap {
            let values = engine.unload(&v);
            return Ok(report(alg, p, rule, values, iterations, sweeps, StopReason::IterationCap, residual, run));
        }
    }
}

/// Policy iteration with exact policy evaluation. The improvement step
/// keeps `d(s)` whenever it already attains the maximum.
pub fn policy_iteration<S: Scalar>(m: &ExplicitMdp<S>, p: &SolveParams<S>) -> Result<SolveReport<S>> {
    let alg = Algorithm::PolicyIteration;
    if !S::is_exact() {
        return Err(MdpError::UnsupportedBackend(
            "policy iteration requires exact backend".into(),
        ));
    }
    m.validate(Mode::Infinite)?;
    p.check(alg)?;
    let mut rule = match &p.initial_rule {
        Some(d) => {
            d.check(m)?;
            d.clone()
        }
        None => DecisionRule::first_enabled(m),
    };
    let mut run = Run::new(p.record_trace);
    let cap = p.cap();
    let mut iterations = 0;
    loop {
        let v = policy_value_unchecked(m, &rule)?;
        run.push(&v);
        iterations += 1;
        let mut next = rule.clone();
        let mut best_values = Vec::with_capacity(m.n_states());
        for s in 0..m.n_states() {
            let (a, best) = crate::bellman::greedy_action(m, s, &v);
            let current = q_value(m, &m.actions(s)[&rule[s]], &v);
            if current != best {
                next.set(s, a);
            }
            best_values.push(best);
        }
        let residual = sup_dist(&v, &ValueFunction::new(best_values))?;
        if next == rule {
            return Ok(report(alg, p, rule, v, iterations, iterations, StopReason::Converged, residual, run));
        }
        if iterations >= cap {
            return Ok(report(alg, p, next, v, iterations, iterations, StopReason::IterationCap, residual, run));
        }
        rule = next;
    }
}

/// Dispatches on `algorithm`.
pub fn solve<S: Scalar>(m: &ExplicitMdp<S>, algorithm: Algorithm, p: &SolveParams<S>) -> Result<SolveReport<S>> {
    match algorithm {
        Algorithm::ValueIteration => value_iteration(m, p),
        Algorithm::GaussSeidel => gauss_seidel_iteration(m, p),
        Algorithm::PolicyIteration => policy_iteration(m, p),
        Algorithm::ModifiedPolicyIteration => modified_policy_iteration(m, p),
    }
}

/// Optimal `horizon`-step values `u_0*` and the maximizing rule of every
/// epoch, computed bottom-up from `u_N* = r_N`.
pub fn backward_induction<S: Scalar>(
    m: &ExplicitMdp<S>,
    horizon: usize,
) -> Result<(FinitePolicy, ValueFunction<S>)> {
    m.validate(Mode::Finite)?;
    let mut u = m.final_reward();
    let mut rules = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let (next, rule) = bellman_opt(m, &u)?;
        rules.push(rule);
        u = next;
    }
    rules.reverse();
    Ok((FinitePolicy::new(rules), u))
}
