//! Small hand-written instances used by tests, docs and the chain generator.

use std::collections::BTreeMap;

use crate::model::{ActionEntry, Distribution, ExplicitMdp};
use crate::numerics::Scalar;

type Frac = (i64, i64);

/// One action: `(action index, reward, [(target, probability)])`.
pub type ActionSpec<'a> = (usize, Frac, &'a [(usize, Frac)]);

fn s<S: Scalar>((p, q): Frac) -> S {
    S::from_ratio(p, q).expect("fixture denominators are nonzero")
}

/// Builds an MDP from a table of rational literals.
pub fn from_table<S: Scalar>(discount: Frac, states: &[&[ActionSpec<'_>]]) -> ExplicitMdp<S> {
    let rows = states
        .iter()
        .map(|actions| {
            actions
                .iter()
                .map(|&(a, reward, targets)| {
                    let dist = Distribution::new(targets.iter().map(|&(t, p)| (t, s(p))).collect())
                        .expect("fixture distributions are valid");
                    (a, ActionEntry::new(s(reward), dist))
                })
                .collect::<BTreeMap<_, _>>()
        })
        .collect();
    ExplicitMdp::new(s(discount), rows, None)
}

/// One state, one self-loop with reward 1, `λ = 1/2`.
pub fn self_loop<S: Scalar>() -> ExplicitMdp<S> {
    from_table((1, 2), &[&[(0, (1, 1), &[(0, (1, 1))])]])
}

/// One state, self-loops with rewards 1 and 3, `λ = 1/2`; `ν* = 6`.
pub fn two_action<S: Scalar>() -> ExplicitMdp<S> {
    from_table(
        (1, 2),
        &[&[(0, (1, 1), &[(0, (1, 1))]), (1, (3, 1), &[(0, (1, 1))])]],
    )
}

/// One state, two identical self-loop actions.
pub fn tied_actions<S: Scalar>() -> ExplicitMdp<S> {
    from_table(
        (1, 2),
        &[&[(0, (1, 1), &[(0, (1, 1))]), (1, (1, 1), &[(0, (1, 1))])]],
    )
}

/// `0 -> 1` with reward 0, state 1 self-loops with reward 1, `λ = 1/2`.
pub fn upward_chain<S: Scalar>() -> ExplicitMdp<S> {
    from_table(
        (1, 2),
        &[&[(0, (0, 1), &[(1, (1, 1))])], &[(0, (1, 1), &[(1, (1, 1))])]],
    )
}

/// `1 -> 0` with reward 0, state 0 self-loops with reward 1, `λ = 1/2`.
pub fn reversed_chain<S: Scalar>() -> ExplicitMdp<S> {
    from_table(
        (1, 2),
        &[&[(0, (1, 1), &[(0, (1, 1))])], &[(0, (0, 1), &[(0, (1, 1))])]],
    )
}

/// `0 -> 1` with reward 1, state 1 self-loops with reward 0, `λ = 1/2`.
pub fn chain_reward_then_absorb<S: Scalar>() -> ExplicitMdp<S> {
    from_table(
        (1, 2),
        &[&[(0, (1, 1), &[(1, (1, 1))])], &[(0, (0, 1), &[(1, (1, 1))])]],
    )
}

/// Three states, two actions each, `λ = 9/10`. The shared oracle instance.
pub fn e2<S: Scalar>() -> ExplicitMdp<S> {
    from_table(
        (9, 10),
        &[
            &[
                (0, (1, 1), &[(0, (1, 2)), (1, (1, 2))]),
                (1, (0, 1), &[(2, (1, 1))]),
            ],
            &[
                (0, (-1, 2), &[(0, (1, 3)), (2, (2, 3))]),
                (1, (1, 4), &[(1, (3, 4)), (2, (1, 4))]),
            ],
            &[
                (0, (1, 2), &[(2, (1, 1))]),
                (1, (-1, 1), &[(0, (3, 5)), (1, (2, 5))]),
            ],
        ],
    )
}
