//! Bellman operators: `L_d` for a fixed rule, the optimality operator `𝓛`,
//! and the Gauss-Seidel operator built from the splitting
//! `(1 - λP_d) = (1 - λP^L_d) - λP^U_d`, where `P^L_d` is the strictly lower
//! triangular part of `P_d`.
//!
//! Every argmax breaks ties towards the smallest action index.

use crate::error::{MdpError, Result};
use crate::linsolve::DenseMatrix;
use crate::model::{ActionEntry, DecisionRule, ExplicitMdp};
use crate::numerics::{Scalar, ValueFunction};

/// The one-step lookahead value of a single (state, action) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QValue<S> {
    pub state: usize,
    pub action: usize,
    pub value: S,
}

/// `r(s,a) + λ·Σ K(s,a)(s')·v(s')`.
pub fn q_value<S: Scalar>(m: &ExplicitMdp<S>, entry: &ActionEntry<S>, v: &ValueFunction<S>) -> S {
    entry.reward.clone() + m.discount().clone() * entry.transition.expect(v)
}

/// All Q-values of state `s` in action order.
pub fn q_values<S: Scalar>(m: &ExplicitMdp<S>, s: usize, v: &ValueFunction<S>) -> Vec<QValue<S>> {
    m.actions(s)
        .iter()
        .map(|(&action, entry)| QValue {
            state: s,
            action,
            value: q_value(m, entry, v),
        })
        .collect()
}

/// Best action of `s` against `v` and its Q-value; ties go to the smallest index.
pub fn greedy_action<S: Scalar>(m: &ExplicitMdp<S>, s: usize, v: &ValueFunction<S>) -> (usize, S) {
    argmax(m.actions(s).iter().map(|(&a, e)| (a, q_value(m, e, v))))
}

fn argmax<S: Scalar>(mut candidates: impl Iterator<Item = (usize, S)>) -> (usize, S) {
    let mut best = candidates.next().expect("non-empty enabled set");
    for (a, q) in candidates {
        if q > best.1 {
            best = (a, q);
        }
    }
    best
}

/// `L_d(v) = r^d + λ P_d v`.
pub fn bellman_rule<S: Scalar>(
    m: &ExplicitMdp<S>,
    d: &DecisionRule,
    v: &ValueFunction<S>,
) -> Result<ValueFunction<S>> {
    d.check(m)?;
    m.ensure_values(v)?;
    Ok((0..m.n_states())
        .map(|s| q_value(m, &m.actions(s)[&d[s]], v))
        .collect())
}

/// `𝓛(v)` together with the greedy rule attaining it.
pub fn bellman_opt<S: Scalar>(
    m: &ExplicitMdp<S>,
    v: &ValueFunction<S>,
) -> Result<(ValueFunction<S>, DecisionRule)> {
    m.ensure_values(v)?;
    let (rule, values): (Vec<usize>, Vec<S>) =
        (0..m.n_states()).map(|s| greedy_action(m, s, v)).unzip();
    Ok((ValueFunction::new(values), DecisionRule::new(rule)))
}

/// One in-place Gauss-Seidel sweep in increasing state order.
///
/// State `s` sees the new values of states `< s` and the old values of
/// states `>= s` (including its own self-loop). The result is `𝓖(v)` and
/// the returned rule `d` satisfies `G_d(v) = 𝓖(v)`.
pub fn gauss_seidel_sweep<S: Scalar>(
    m: &ExplicitMdp<S>,
    v: &ValueFunction<S>,
) -> Result<(ValueFunction<S>, DecisionRule)> {
    m.ensure_values(v)?;
    let mut w = v.clone();
    let mut rule = Vec::with_capacity(m.n_states());
    for s in 0..m.n_states() {
        let (a, q) = greedy_action(m, s, &w);
        w[s] = q;
        rule.push(a);
    }
    Ok((w, DecisionRule::new(rule)))
}

/// `G_d(v) = (1 - λP^L_d)^{-1}(r^d + λP^U_d v)`, computed by a sweep with
/// the rule held fixed.
pub fn gauss_seidel_rule<S: Scalar>(
    m: &ExplicitMdp<S>,
    d: &DecisionRule,
    v: &ValueFunction<S>,
) -> Result<ValueFunction<S>> {
    d.check(m)?;
    m.ensure_values(v)?;
    let mut w = v.clone();
    for s in 0..m.n_states() {
        w[s] = q_value(m, &m.actions(s)[&d[s]], &w);
    }
    Ok(w)
}

/// Explicit matrices of the Gauss-Seidel splitting of one rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splitting<S> {
    /// Strictly lower triangular part of `P_d`.
    pub lower: DenseMatrix<S>,
    /// Upper triangular part of `P_d`, diagonal included.
    pub upper: DenseMatrix<S>,
    /// `Q_d = 1 - λP^L_d`.
    pub q: DenseMatrix<S>,
    pub q_inverse: DenseMatrix<S>,
    /// `R_d = λP^U_d`.
    pub r: DenseMatrix<S>,
}

/// Materializes the Gauss-Seidel splitting for `d` and checks it is a
/// regular splitting whose explicit operator agrees with the sweep at `v`.
///
/// Dense and cubic: a test oracle for small instances, never used by the
/// solvers.
pub fn splitting_check<S: Scalar>(
    m: &ExplicitMdp<S>,
    d: &DecisionRule,
    v: &ValueFunction<S>,
) -> Result<Splitting<S>> {
    if !S::is_exact() {
        return Err(MdpError::UnsupportedBackend(
            "splitting check requires exact backend".into(),
        ));
    }
    d.check(m)?;
    m.ensure_values(v)?;
    let n = m.n_states();
    let lambda = m.discount();
    let p = DenseMatrix::transition(m, d)?;
    let mut lower = DenseMatrix::zeros(n);
    let mut upper = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let target = if j < i { &mut lower } else { &mut upper };
            *target.get_mut(i, j) = p.get(i, j).clone();
        }
    }
    for i in 0..n {
        for j in 0..n {
            if lower.get(i, j).clone() + upper.get(i, j) != *p.get(i, j) {
                return Err(MdpError::Splitting(format!(
                    "P != P^L + P^U at ({i}, {j})"
                )));
            }
        }
    }
    let q = DenseMatrix::identity(n).sub(&lower.scale(lambda));
    let r = upper.scale(lambda);
    if let Some((i, j)) = r.first_negative() {
        return Err(MdpError::Splitting(format!("R_d negative at ({i}, {j})")));
    }
    let q_inverse = q.inverse()?;
    if let Some((i, j)) = q_inverse.first_negative() {
        return Err(MdpError::Splitting(format!(
            "Q_d^-1 negative at ({i}, {j})"
        )));
    }
    let rhs = r.mul_vec(v)?;
    let rd = m.reward_vector(d)?;
    let rhs: ValueFunction<S> = rd.iter().zip(rhs.iter()).map(|(a, b)| a.clone() + b).collect();
    let explicit = q_inverse.mul_vec(&rhs)?;
    let swept = gauss_seidel_rule(m, d, v)?;
    if let Some(s) = (0..n).find(|&s| explicit[s] != swept[s]) {
        return Err(MdpError::Splitting(format!(
            "explicit G_d = {} differs from sweep G_d = {} at state {s}",
            explicit[s], swept[s]
        )));
    }
    Ok(Splitting {
        lower,
        upper,
        q,
        q_inverse,
        r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::numerics::Rational;

    fn q(p: i64, d: i64) -> Rational {
        Rational::from_ratio(p, d).unwrap()
    }

    fn vf(xs: &[(i64, i64)]) -> ValueFunction<Rational> {
        xs.iter().map(|&(p, d)| q(p, d)).collect()
    }

    #[test]
    fn bellman_rule_examples() {
        let m = fixtures::self_loop::<Rational>();
        let d = DecisionRule::new(vec![0]);
        assert_eq!(bellman_rule(&m, &d, &vf(&[(0, 1)])).unwrap(), vf(&[(1, 1)]));
        assert_eq!(bellman_rule(&m, &d, &vf(&[(2, 1)])).unwrap(), vf(&[(2, 1)]));
        let m0 = m.with_discount(q(0, 1));
        assert_eq!(
            bellman_rule(&m0, &d, &vf(&[(17, 3)])).unwrap(),
            m0.reward_vector(&d).unwrap()
        );
    }

    #[test]
    fn bellman_opt_examples() {
        let m = fixtures::two_action::<Rational>();
        let (v, d) = bellman_opt(&m, &ValueFunction::zeros(1)).unwrap();
        assert_eq!(v, vf(&[(3, 1)]));
        assert_eq!(d, DecisionRule::new(vec![1]));

        let tied = fixtures::tied_actions::<Rational>();
        let (_, d) = bellman_opt(&tied, &ValueFunction::zeros(1)).unwrap();
        assert_eq!(d, DecisionRule::new(vec![0]));
    }

    #[test]
    fn gauss_seidel_examples() {
        let m = fixtures::self_loop::<Rational>();
        let (v, _) = gauss_seidel_sweep(&m, &ValueFunction::zeros(1)).unwrap();
        assert_eq!(v, vf(&[(1, 1)]));

        let up = fixtures::upward_chain::<Rational>();
        let (v, _) = gauss_seidel_sweep(&up, &ValueFunction::zeros(2)).unwrap();
        assert_eq!(v, vf(&[(0, 1), (1, 1)]));
        assert_eq!(bellman_opt(&up, &ValueFunction::zeros(2)).unwrap().0, v);

        let down = fixtures::reversed_chain::<Rational>();
        let (v, _) = gauss_seidel_sweep(&down, &ValueFunction::zeros(2)).unwrap();
        assert_eq!(v, vf(&[(1, 1), (1, 2)]));
        assert_eq!(
            bellman_opt(&down, &ValueFunction::zeros(2)).unwrap().0,
            vf(&[(1, 1), (0, 1)])
        );
    }

    #[test]
    fn sweep_rule_reproduces_sweep_values() {
        let m = fixtures::e2::<Rational>();
        let v = vf(&[(3, 1), (-1, 2), (5, 7)]);
        let (w, d) = gauss_seidel_sweep(&m, &v).unwrap();
        assert_eq!(gauss_seidel_rule(&m, &d, &v).unwrap(), w);
    }

    #[test]
    fn splitting_examples() {
        let m = fixtures::self_loop::<Rational>();
        let d = DecisionRule::new(vec![0]);
        let sp = splitting_check(&m, &d, &vf(&[(4, 1)])).unwrap();
        assert_eq!(sp.q, DenseMatrix::identity(1));
        assert_eq!(sp.r, DenseMatrix::from_rows(vec![vec![q(1, 2)]]).unwrap());

        let m = fixtures::reversed_chain::<Rational>();
        let d = DecisionRule::new(vec![0, 0]);
        let sp = splitting_check(&m, &d, &vf(&[(1, 3), (2, 1)])).unwrap();
        let lambda = q(1, 2);
        assert_eq!(
            sp.q,
            DenseMatrix::from_rows(vec![vec![q(1, 1), q(0, 1)], vec![-lambda.clone(), q(1, 1)]]).unwrap()
        );
        assert_eq!(
            sp.q_inverse,
            DenseMatrix::from_rows(vec![vec![q(1, 1), q(0, 1)], vec![lambda, q(1, 1)]]).unwrap()
        );
    }

    #[test]
    fn splitting_rejects_float_backend() {
        let m = fixtures::self_loop::<crate::numerics::Float>();
        let d = DecisionRule::new(vec![0]);
        assert!(matches!(
            splitting_check(&m, &d, &ValueFunction::zeros(1)),
            Err(MdpError::UnsupportedBackend(_))
        ));
    }
}
