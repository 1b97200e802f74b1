//! Backend-specific engines for the hot loops of value iteration and
//! modified policy iteration.
//!
//! [`PlainEngine`] simply calls the operators in [`crate::bellman`].
//! [`ExactEngine`] keeps a value vector as integer numerators over one
//! shared denominator. With rewards, probabilities and the discount also
//! brought to common denominators, a Bellman step needs only big-by-small
//! integer products and sums; a single vector-wide gcd keeps the shared
//! denominator small. Canonical per-entry rationals are only rebuilt when a
//! vector leaves the engine.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::bellman::{bellman_opt, bellman_rule};
use crate::error::Result;
use crate::model::{DecisionRule, ExplicitMdp};
use crate::numerics::{sup_dist, Rational, Scalar, ValueFunction};

/// Repeated Bellman steps over a backend-chosen vector representation.
pub trait BellmanEngine<S: Scalar>: Sized {
    type Vector: Clone;

    fn new(m: &ExplicitMdp<S>) -> Result<Self>;
    fn load(&self, v: &ValueFunction<S>) -> Self::Vector;
    fn unload(&self, v: &Self::Vector) -> ValueFunction<S>;
    /// `𝓛(v)` and its tie-broken greedy rule.
    fn optimality_step(&self, v: &Self::Vector) -> (Self::Vector, DecisionRule);
    /// `L_d(v)`.
    fn rule_step(&self, d: &DecisionRule, v: &Self::Vector) -> Self::Vector;
    fn sup_dist(&self, u: &Self::Vector, w: &Self::Vector) -> S;
    /// First state with `u(s) > w(s)`.
    fn first_exceeding(&self, u: &Self::Vector, w: &Self::Vector) -> Option<usize>;
}

/// Engine over plain value functions; used by the float backend.
pub struct PlainEngine<S> {
    m: ExplicitMdp<S>,
}

impl<S: Scalar> BellmanEngine<S> for PlainEngine<S> {
    type Vector = ValueFunction<S>;

    fn new(m: &ExplicitMdp<S>) -> Result<Self> {
        Ok(PlainEngine { m: m.clone() })
    }

    fn load(&self, v: &ValueFunction<S>) -> Self::Vector {
        v.clone()
    }

    fn unload(&self, v: &Self::Vector) -> ValueFunction<S> {
        v.clone()
    }

    fn optimality_step(&self, v: &Self::Vector) -> (Self::Vector, DecisionRule) {
        bellman_opt(&self.m, v).expect("engine vectors match the MDP")
    }

    fn rule_step(&self, d: &DecisionRule, v: &Self::Vector) -> Self::Vector {
        bellman_rule(&self.m, d, v).expect("engine rules are valid")
    }

    fn sup_dist(&self, u: &Self::Vector, w: &Self::Vector) -> S {
        sup_dist(u, w).expect("engine vectors match the MDP")
    }

    fn first_exceeding(&self, u: &Self::Vector, w: &Self::Vector) -> Option<usize> {
        u.first_exceeding(w).expect("engine vectors match the MDP")
    }
}

/// Values `numers[s] / denom` with `denom > 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaledVector {
    numers: Vec<BigInt>,
    denom: BigInt,
}

struct ScaledAction {
    action: usize,
    /// `r(s,a) · reward_denom`.
    reward: BigInt,
    /// `(target, p · prob_denom)`.
    support: Vec<(usize, BigInt)>,
}

/// Exact engine over common denominators.
pub struct ExactEngine {
    states: Vec<Vec<ScaledAction>>,
    reward_denom: BigInt,
    prob_denom: BigInt,
    discount_numer: BigInt,
    discount_denom: BigInt,
}

fn lcm_of<'a>(xs: impl Iterator<Item = &'a BigInt>) -> BigInt {
    xs.fold(BigInt::one(), |acc, x| acc.lcm(x))
}

fn scale_to(x: &Rational, denom: &BigInt) -> BigInt {
    x.numer() * (denom / x.denom())
}

impl ExactEngine {
    /// `(numers, denom) / g` for the gcd `g` of all entries and the denominator.
    fn reduce(mut numers: Vec<BigInt>, mut denom: BigInt) -> ScaledVector {
        let mut g = denom.clone();
        for n in &numers {
            if g.is_one() {
                break;
            }
            if n.is_zero() {
                continue;
            }
            g = match g.to_u64() {
                // gcd(n, g) = gcd(n mod g, g) keeps small-g steps cheap
                Some(small) => {
                    let r = (n.abs() % &g).to_u64().expect("remainder below g");
                    BigInt::from(r.gcd(&small))
                }
                None => g.gcd(n),
            };
        }
        if !g.is_one() {
            for n in &mut numers {
                *n /= &g;
            }
            denom /= &g;
        }
        ScaledVector { numers, denom }
    }

    fn q_numerator(&self, entry: &ScaledAction, v: &ScaledVector, reward_factor: &BigInt, value_factor: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for (t, p) in &entry.support {
            acc += p * &v.numers[*t];
        }
        &entry.reward * reward_factor + acc * value_factor
    }

    /// Common factors of a step: the result denominator `R·L·P·D`, the
    /// multiplier `L·P·D` of scaled rewards and `l·R` of expected values.
    fn step_factors(&self, v: &ScaledVector) -> (BigInt, BigInt, BigInt) {
        let reward_factor = &self.discount_denom * &self.prob_denom * &v.denom;
        let value_factor = &self.discount_numer * &self.reward_denom;
        let denom = &reward_factor * &self.reward_denom;
        (denom, reward_factor, value_factor)
    }
}

impl BellmanEngine<Rational> for ExactEngine {
    type Vector = ScaledVector;

    fn new(m: &ExplicitMdp<Rational>) -> Result<Self> {
        let entries = || m.states().iter().flat_map(|acts| acts.values());
        let reward_denom = lcm_of(entries().map(|e| e.reward.denom()));
        let prob_denom = lcm_of(entries().flat_map(|e| e.transition.iter().map(|(_, p)| p.denom())));
        let states = m
            .states()
            .iter()
            .map(|acts| {
                acts.iter()
                    .map(|(&action, e)| ScaledAction {
                        action,
                        reward: scale_to(&e.reward, &reward_denom),
                        support: e
                            .transition
                            .iter()
                            .map(|(t, p)| (t, scale_to(p, &prob_denom)))
                            .collect(),
                    })
                    .collect()
            })
            .collect();
        Ok(ExactEngine {
            states,
            reward_denom,
            prob_denom,
            discount_numer: m.discount().numer().clone(),
            discount_denom: m.discount().denom().clone(),
        })
    }

    fn load(&self, v: &ValueFunction<Rational>) -> ScaledVector {
        let denom = lcm_of(v.iter().map(|x| x.denom()));
        ScaledVector {
            numers: v.iter().map(|x| scale_to(x, &denom)).collect(),
            denom,
        }
    }

    fn unload(&self, v: &ScaledVector) -> ValueFunction<Rational> {
        v.numers
            .iter()
            .map(|n| Rational::new(n.clone(), v.denom.clone()))
            .collect()
    }

    fn optimality_step(&self, v: &ScaledVector) -> (ScaledVector, DecisionRule) {
        let (denom, rf, vf) = self.step_factors(v);
        let mut rule = Vec::with_capacity(self.states.len());
        let numers = self
            .states
            .iter()
            .map(|acts| {
                let mut best: Option<(usize, BigInt)> = None;
                for entry in acts {
                    let q = self.q_numerator(entry, v, &rf, &vf);
                    if best.as_ref().is_none_or(|(_, b)| q > *b) {
                        best = Some((entry.action, q));
                    }
                }
                let (a, q) = best.expect("non-empty enabled set");
                rule.push(a);
                q
            })
            .collect();
        (Self::reduce(numers, denom), DecisionRule::new(rule))
    }

    fn rule_step(&self, d: &DecisionRule, v: &ScaledVector) -> ScaledVector {
        let (denom, rf, vf) = self.step_factors(v);
        let numers = self
            .states
            .iter()
            .enumerate()
            .map(|(s, acts)| {
                let entry = acts
                    .iter()
                    .find(|e| e.action == d[s])
                    .expect("engine rules are valid");
                self.q_numerator(entry, v, &rf, &vf)
            })
            .collect();
        Self::reduce(numers, denom)
    }

    fn sup_dist(&self, u: &ScaledVector, w: &ScaledVector) -> Rational {
        let (numer, denom) = if u.denom == w.denom {
            let d = u.numers.iter().zip(&w.numers).map(|(a, b)| (a - b).abs()).max();
            (d, u.denom.clone())
        } else {
            let d = u
                .numers
                .iter()
                .zip(&w.numers)
                .map(|(a, b)| (a * &w.denom - b * &u.denom).abs())
                .max();
            (d, &u.denom * &w.denom)
        };
        Rational::new(numer.unwrap_or_default(), denom)
    }

    fn first_exceeding(&self, u: &ScaledVector, w: &ScaledVector) -> Option<usize> {
        u.numers
            .iter()
            .zip(&w.numers)
            .position(|(a, b)| (a * &w.denom - b * &u.denom).sign() == Sign::Plus)
    }
}
