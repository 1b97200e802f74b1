//! Turning external value estimates into exactly checked ε-optimality
//! certificates.
//!
//! The estimates (typically from a fast float solver) seed exact value
//! iteration. If they are close to the optimum the stopping test passes
//! after very few exact Bellman applications, and the certificate inherits
//! the usual guarantee: the greedy rule is within ε of optimal.

use crate::bellman::{bellman_opt, q_value};
use crate::error::{MdpError, Result};
use crate::model::{DecisionRule, ExplicitMdp, Mode};
use crate::numerics::{sup_dist, Scalar, ValueFunction};
use crate::solvers::{stop_threshold, value_iteration, SolveParams, StopReason, StopThreshold};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate<S> {
    pub rule: DecisionRule,
    pub values: ValueFunction<S>,
    pub epsilon: S,
    /// `sup_dist(values, 𝓛(values))`.
    pub residual: S,
    pub iterations_used: u64,
    pub source: String,
}

#[derive(Debug, Clone, Default)]
pub struct CertifyOptions {
    /// Free-form description of where the estimates came from.
    pub source: String,
    pub max_iterations: Option<u64>,
}

/// Certifies `v_ext` with the default options.
pub fn certify_values<S: Scalar>(
    m: &ExplicitMdp<S>,
    v_ext: &ValueFunction<S>,
    epsilon: &S,
) -> Result<Certificate<S>> {
    certify_values_with(m, v_ext, epsilon, &CertifyOptions::default())
}

pub fn certify_values_with<S: Scalar>(
    m: &ExplicitMdp<S>,
    v_ext: &ValueFunction<S>,
    epsilon: &S,
    options: &CertifyOptions,
) -> Result<Certificate<S>> {
    require_exact::<S>()?;
    let mut params = SolveParams::new(epsilon.clone()).with_initial_values(v_ext.clone());
    params.max_iterations = options.max_iterations;
    let report = value_iteration(m, &params)?;
    if report.stop_reason == StopReason::IterationCap {
        return Err(MdpError::NotCertified(format!(
            "iteration cap reached after {} iterations (residual {})",
            report.iterations, report.residual
        )));
    }
    let (image, _) = bellman_opt(m, &report.values)?;
    let residual = sup_dist(&report.values, &image)?;
    let certificate = Certificate {
        rule: report.rule,
        values: report.values,
        epsilon: epsilon.clone(),
        residual,
        iterations_used: report.iterations,
        source: options.source.clone(),
    };
    check_certificate(m, &certificate)?;
    Ok(certificate)
}

/// Re-verifies a certificate from scratch: the residual is recomputed from
/// the stored values, compared to the stopping bound, and every rule entry
/// must attain the maximal Q-value at its state.
pub fn check_certificate<S: Scalar>(m: &ExplicitMdp<S>, c: &Certificate<S>) -> Result<()> {
    require_exact::<S>()?;
    m.validate(Mode::Infinite)?;
    let invalid = |field: &'static str, reason: String| MdpError::InvalidCertificate { field, reason };
    let n = m.n_states();
    if c.values.len() != n {
        return Err(invalid("values", format!("{} entries for {n} states", c.values.len())));
    }
    if c.rule.len() != n {
        return Err(invalid("rule", format!("{} entries for {n} states", c.rule.len())));
    }
    let threshold = stop_threshold(m.discount(), &c.epsilon)
        .map_err(|e| invalid("epsilon", e.to_string()))?;
    let mut image = Vec::with_capacity(n);
    for s in 0..n {
        let chosen = m
            .entry(s, c.rule[s])
            .ok_or_else(|| invalid("rule", format!("action {} not enabled at state {s}", c.rule[s])))?;
        let chosen_q = q_value(m, chosen, &c.values);
        let best = m
            .actions(s)
            .values()
            .map(|e| q_value(m, e, &c.values))
            .max()
            .expect("validated MDP has actions");
        if chosen_q != best {
            return Err(invalid(
                "rule",
                format!("action {} at state {s} is not greedy ({chosen_q} < {best})", c.rule[s]),
            ));
        }
        image.push(best);
    }
    let residual = sup_dist(&c.values, &ValueFunction::new(image))?;
    if residual != c.residual {
        return Err(invalid(
            "residual",
            format!("recorded {} but recomputed {residual}", c.residual),
        ));
    }
    if let StopThreshold::Bound(t) = threshold {
        if residual >= t {
            return Err(invalid("residual", format!("{residual} is not below the bound {t}")));
        }
    }
    Ok(())
}

fn require_exact<S: Scalar>() -> Result<()> {
    if S::is_exact() {
        Ok(())
    } else {
        Err(MdpError::UnsupportedBackend(
            "certification requires exact backend".into(),
        ))
    }
}
