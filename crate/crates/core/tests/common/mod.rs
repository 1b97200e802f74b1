#![allow(dead_code)]

use mdpkit::generate::{random_shaped, RandomShape, SplitMix64};
use mdpkit::prelude::*;

pub fn q(p: i64, d: i64) -> Rational {
    Rational::from_ratio(p, d).unwrap()
}

/// Random instance with `1..=max_states` states and `1..=max_actions`
/// actions per state.
pub fn small_instance(seed: u64, max_states: usize, max_actions: usize, discount: Rational) -> ExplicitMdp<Rational> {
    let mut rng = SplitMix64::new(seed ^ 0x9e37_79b9);
    let shape = RandomShape {
        states: rng.range(1, max_states as u64) as usize,
        min_actions: 1,
        max_actions,
        max_support: 3,
    };
    random_shaped(&shape, seed, discount).unwrap()
}

/// Value function with entries `k/den` for `k` in `[-bound·den, bound·den]`.
pub fn random_values(rng: &mut SplitMix64, n: usize, bound: i64, den: i64) -> ValueFunction<Rational> {
    let span = (2 * bound * den) as u64;
    (0..n)
        .map(|_| q(rng.range(0, span) as i64 - bound * den, den))
        .collect()
}

pub fn random_rule(rng: &mut SplitMix64, m: &ExplicitMdp<Rational>) -> DecisionRule {
    DecisionRule::new(
        m.states()
            .iter()
            .map(|acts| {
                let keys: Vec<usize> = acts.keys().copied().collect();
                keys[rng.below(keys.len() as u64) as usize]
            })
            .collect(),
    )
}

/// Every deterministic rule of `m`.
pub fn all_rules(m: &ExplicitMdp<Rational>) -> Vec<DecisionRule> {
    let mut rules = vec![Vec::new()];
    for acts in m.states() {
        rules = rules
            .into_iter()
            .flat_map(|prefix| {
                acts.keys().map(move |&a| {
                    let mut r = prefix.clone();
                    r.push(a);
                    r
                })
            })
            .collect();
    }
    rules.into_iter().map(DecisionRule::new).collect()
}

pub fn pow(x: &Rational, n: u32) -> Rational {
    (0..n).fold(<Rational as Scalar>::one(), |acc, _| acc * x)
}

/// `u <= v` pointwise.
pub fn dominated(u: &ValueFunction<Rational>, v: &ValueFunction<Rational>) -> bool {
    u.iter().zip(v.iter()).all(|(a, b)| a <= b)
}

pub fn e2_nu_star() -> ValueFunction<Rational> {
    mdpkit::format::parse_values(include_str!("../fixtures/e2_nu_star.txt"), 3).unwrap()
}

pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the `mdpkit` binary with the iteration-cap variable cleared.
pub fn run_cli(args: &[&str]) -> Output {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_mdpkit"))
        .args(args)
        .env_remove(mdpkit::cli::MAX_ITER_ENV)
        .output()
        .expect("binary runs");
    Output {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

/// Writes `text` to a file in a per-test scratch directory.
pub fn scratch_file(dir: &str, name: &str, text: &str) -> String {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join(dir);
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

/// Input files shared by the CLI tests: the two-action fixture, E2, E2's
/// optimal values and a random 6-state instance.
pub struct CliFiles {
    pub two_action: String,
    pub e2: String,
    pub e2_values: String,
    pub random: String,
}

pub fn cli_files(dir: &str) -> CliFiles {
    use mdpkit::format::write_mdp;
    CliFiles {
        two_action: scratch_file(dir, "two_action.mdp", &write_mdp(&mdpkit::fixtures::two_action::<Rational>())),
        e2: scratch_file(dir, "e2.mdp", &write_mdp(&mdpkit::fixtures::e2::<Rational>())),
        e2_values: scratch_file(dir, "e2_values.txt", include_str!("../fixtures/e2_nu_star.txt")),
        random: scratch_file(
            dir,
            "random.mdp",
            &write_mdp(&mdpkit::generate::random_mdp::<Rational>(6, 11, q(9, 10)).unwrap()),
        ),
    }
}

/// Invocations whose stdout must be reproducible.
pub fn cli_matrix(f: &CliFiles) -> Vec<Vec<String>> {
    let mut runs = Vec::new();
    for file in [&f.two_action, &f.e2, &f.random] {
        for alg in ["vi", "gs", "mpi", "pi"] {
            runs.push(vec!["solve", "--alg", alg, file.as_str()]);
        }
        for alg in ["vi", "gs", "mpi"] {
            runs.push(vec!["solve", "--alg", alg, "--backend", "float", file.as_str()]);
        }
        runs.push(vec!["solve", "--alg", "mpi", "--mpi-order", "0,2,4", "--epsilon", "1/1000", file.as_str()]);
        runs.push(vec!["solve-finite", "--horizon", "6", file.as_str()]);
        runs.push(vec!["solve-finite", "--horizon", "6", "--backend", "float", file.as_str()]);
    }
    runs.push(vec!["certify", "--values", f.e2_values.as_str(), "--epsilon", "0.01", f.e2.as_str()]);
    runs.push(vec!["solve", "--alg", "vi", "--init", f.e2_values.as_str(), f.e2.as_str()]);
    for family in ["random", "chain", "grid"] {
        for backend in ["exact", "float"] {
            runs.push(vec!["bench", "--family", family, "--size", "4", "--seed", "3", "--backend", backend]);
        }
        runs.push(vec!["generate", "--family", family, "--size", "3", "--seed", "5"]);
    }
    runs.push(vec!["solve", "--alg", "pi", "--backend", "float", f.e2.as_str()]);
    runs.push(vec!["solve", "--alg", "vi", "--max-iter", "2", "--epsilon", "1/1000000", f.e2.as_str()]);
    runs.into_iter().map(|r| r.into_iter().map(str::to_owned).collect()).collect()
}
