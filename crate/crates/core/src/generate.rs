//! Reproducible benchmark instances.
//!
//! All randomness comes from SplitMix64 (Steele, Lea and Flood), seeded with
//! the user's 64-bit seed. Bounded draws take the high 64 bits of the
//! 128-bit product `next_u64() * bound`. Both steps are fixed here so the
//! same seed yields the same instance in any language.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{MdpError, Result};
use crate::model::{ActionEntry, Distribution, ExplicitMdp};
use crate::numerics::Scalar;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-ish draw from `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        ((u128::from(self.next_u64()) * u128::from(bound)) >> 64) as u64
    }

    /// Draw from the inclusive range `lo..=hi`.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.below(hi - lo + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Random,
    Chain,
    Grid,
}

impl Family {
    /// Discount used when the caller does not choose one.
    pub fn default_discount(self) -> (i64, i64) {
        match self {
            Family::Random | Family::Grid => (19, 20),
            Family::Chain => (1, 2),
        }
    }
}

impl FromStr for Family {
    type Err = MdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Family::Random),
            "chain" => Ok(Family::Chain),
            "grid" => Ok(Family::Grid),
            other => Err(MdpError::Usage(format!(
                "unknown family {other:?} (expected random, chain or grid)"
            ))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Random => "random",
            Family::Chain => "chain",
            Family::Grid => "grid",
        })
    }
}

/// Shape of a random instance.
#[derive(Debug, Clone)]
pub struct RandomShape {
    pub states: usize,
    pub min_actions: usize,
    pub max_actions: usize,
    /// Largest successor support per action (capped at `states`).
    pub max_support: usize,
}

impl RandomShape {
    pub fn new(states: usize) -> Self {
        RandomShape {
            states,
            min_actions: 2,
            max_actions: 4,
            max_support: 3,
        }
    }
}

/// Random sparse MDP: rewards are quarters in `[-1, 1]`, probabilities are
/// integer weights in `1..=4` normalized by their sum.
pub fn random_shaped<S: Scalar>(shape: &RandomShape, seed: u64, discount: S) -> Result<ExplicitMdp<S>> {
    let n = shape.states;
    if n == 0 {
        return Err(MdpError::Usage("size must be positive".into()));
    }
    if shape.min_actions == 0 || shape.min_actions > shape.max_actions || shape.max_support == 0 {
        return Err(MdpError::Usage(format!("invalid random shape {shape:?}")));
    }
    let mut rng = SplitMix64::new(seed);
    let max_support = shape.max_support.min(n) as u64;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let n_actions = rng.range(shape.min_actions as u64, shape.max_actions as u64) as usize;
        let mut actions = BTreeMap::new();
        for a in 0..n_actions {
            let k = rng.range(1, max_support) as usize;
            let mut targets: Vec<usize> = Vec::with_capacity(k);
            while targets.len() < k {
                let t = rng.below(n as u64) as usize;
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
            let weights: Vec<i64> = targets.iter().map(|_| rng.range(1, 4) as i64).collect();
            let total: i64 = weights.iter().sum();
            let support = targets
                .into_iter()
                .zip(weights)
                .map(|(t, w)| S::from_ratio(w, total).map(|p| (t, p)))
                .collect::<Result<Vec<_>>>()?;
            let reward = S::from_ratio(rng.range(0, 8) as i64 - 4, 4)?;
            actions.insert(a, ActionEntry::new(reward, Distribution::new(support)?));
        }
        rows.push(actions);
    }
    Ok(ExplicitMdp::new(discount, rows, None))
}

/// Random family with the default shape: 2–4 actions, up to 3 successors.
pub fn random_mdp<S: Scalar>(states: usize, seed: u64, discount: S) -> Result<ExplicitMdp<S>> {
    random_shaped(&RandomShape::new(states), seed, discount)
}

/// State 0 self-loops with reward 1; every other state `i` moves to `i - 1`
/// with reward 0. Size 2 is the reversed two-state chain.
pub fn chain_mdp<S: Scalar>(states: usize, discount: S) -> Result<ExplicitMdp<S>> {
    if states == 0 {
        return Err(MdpError::Usage("size must be positive".into()));
    }
    let rows = (0..states)
        .map(|s| {
            let (reward, target) = if s == 0 { (S::one(), 0) } else { (S::zero(), s - 1) };
            BTreeMap::from([(0, ActionEntry::new(reward, Distribution::dirac(target)))])
        })
        .collect();
    Ok(ExplicitMdp::new(discount, rows, None))
}

/// `side × side` gridworld, state `row * side + col`.
///
/// Actions 0–3 move north, east, south, west. The intended move succeeds
/// with probability 8/10 and each perpendicular move happens with 1/10;
/// moves into the border leave the agent in place. The last cell is an
/// absorbing goal paying 1 per step. Roughly one cell in ten (never the
/// start or the goal) is a pit costing 1 per step; other cells cost 1/25.
pub fn grid_mdp<S: Scalar>(side: usize, seed: u64, discount: S) -> Result<ExplicitMdp<S>> {
    if side == 0 {
        return Err(MdpError::Usage("size must be positive".into()));
    }
    let n = side * side;
    let goal = n - 1;
    let mut rng = SplitMix64::new(seed);
    let pits: Vec<bool> = (0..n)
        .map(|s| rng.below(10) == 0 && s != 0 && s != goal)
        .collect();
    const MOVES: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];
    let step = |s: usize, dir: usize| -> usize {
        let (r, c) = ((s / side) as isize, (s % side) as isize);
        let (dr, dc) = MOVES[dir];
        let (nr, nc) = (r + dr, c + dc);
        if nr < 0 || nc < 0 || nr >= side as isize || nc >= side as isize {
            s
        } else {
            nr as usize * side + nc as usize
        }
    };
    let mut rows = Vec::with_capacity(n);
    for (s, &pit) in pits.iter().enumerate() {
        let mut actions = BTreeMap::new();
        for a in 0..4 {
            if s == goal {
                actions.insert(a, ActionEntry::new(S::one(), Distribution::dirac(s)));
                continue;
            }
            let mut mass: BTreeMap<usize, i64> = BTreeMap::new();
            for (dir, tenths) in [(a, 8), ((a + 1) % 4, 1), ((a + 3) % 4, 1)] {
                *mass.entry(step(s, dir)).or_default() += tenths;
            }
            let support = mass
                .into_iter()
                .map(|(t, k)| S::from_ratio(k, 10).map(|p| (t, p)))
                .collect::<Result<Vec<_>>>()?;
            let reward = if pit { -S::one() } else { S::from_ratio(-1, 25)? };
            actions.insert(a, ActionEntry::new(reward, Distribution::new(support)?));
        }
        rows.push(actions);
    }
    Ok(ExplicitMdp::new(discount, rows, None))
}

/// Generates an instance of `family`. `size` is the state count for the
/// random and chain families and the side length for the grid.
pub fn generate_instance<S: Scalar>(family: Family, size: usize, seed: u64) -> Result<ExplicitMdp<S>> {
    let (p, q) = family.default_discount();
    generate_with_discount(family, size, seed, S::from_ratio(p, q)?)
}

pub fn generate_with_discount<S: Scalar>(
    family: Family,
    size: usize,
    seed: u64,
    discount: S,
) -> Result<ExplicitMdp<S>> {
    match family {
        Family::Random => random_mdp(size, seed, discount),
        Family::Chain => chain_mdp(size, discount),
        Family::Grid => grid_mdp(size, seed, discount),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Mode;
    use crate::numerics::{Float, Rational};

    #[test]
    fn splitmix_reference_values() {
        // published outputs for seed 1234567
        let mut rng = SplitMix64::new(1234567);
        let expected = [
            6457827717110365317u64,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
            16408922859458223821,
        ];
        for e in expected {
            assert_eq!(rng.next_u64(), e);
        }
    }

    #[test]
    fn chain_of_two_is_the_reversed_fixture() {
        let m = generate_instance::<Rational>(Family::Chain, 2, 99).unwrap();
        assert_eq!(m, fixtures::reversed_chain());
    }

    #[test]
    fn random_is_deterministic() {
        let a = generate_instance::<Rational>(Family::Random, 20, 7).unwrap();
        let b = generate_instance::<Rational>(Family::Random, 20, 7).unwrap();
        let c = generate_instance::<Rational>(Family::Random, 20, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn size_zero_is_a_usage_error() {
        for family in [Family::Random, Family::Chain, Family::Grid] {
            assert!(matches!(
                generate_instance::<Rational>(family, 0, 1),
                Err(MdpError::Usage(_))
            ));
        }
    }

    #[test]
    fn random_instances_validate() {
        for seed in 0..1000 {
            generate_instance::<Rational>(Family::Random, 5, seed)
                .unwrap()
                .validate(Mode::Infinite)
                .unwrap();
        }
        for seed in 0..50 {
            generate_instance::<Float>(Family::Random, 5, seed)
                .unwrap()
                .validate(Mode::Infinite)
                .unwrap();
        }
    }

    #[test]
    fn grid_validates_and_has_side_squared_states() {
        let m = generate_instance::<Rational>(Family::Grid, 6, 3).unwrap();
        m.validate(Mode::Infinite).unwrap();
        assert_eq!(m.n_states(), 36);
        assert!(m.actions(0).len() == 4);
        generate_instance::<Float>(Family::Grid, 6, 3)
            .unwrap()
            .validate(Mode::Infinite)
            .unwrap();
    }

    #[test]
    fn family_names_parse() {
        for f in [Family::Random, Family::Chain, Family::Grid] {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
        assert!("hex".parse::<Family>().is_err());
    }
}
