mod common;

use common::*;
use mdpkit::prelude::*;

#[test]
fn vi_on_two_action_fixture_picks_action_one() {
    let f = cli_files("cli_two_action");
    let out = run_cli(&["solve", "--alg", "vi", "--epsilon", "0.05", &f.two_action]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.lines().any(|l| l == "d 0 1"), "{}", out.stdout);
    assert!(out.stdout.starts_with("report\n"));
    assert!(out.stderr.starts_with("time_ms "));
}

#[test]
fn float_policy_iteration_is_a_usage_error() {
    let f = cli_files("cli_pi_float");
    let out = run_cli(&["solve", "--alg", "pi", "--backend", "float", &f.e2]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("policy iteration requires exact backend"), "{}", out.stderr);
    assert!(out.stdout.is_empty());
}

#[test]
fn certify_e2_optimum_and_check_it() {
    let f = cli_files("cli_certify");
    let out = run_cli(&["certify", "--values", &f.e2_values, "--epsilon", "0.05", &f.e2]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.lines().any(|l| l == "residual 0"), "{}", out.stdout);
    assert!(out.stdout.lines().any(|l| l == "d 1 1"));

    let cert = scratch_file("cli_certify", "e2.cert", &out.stdout);
    let ok = run_cli(&["check-cert", "--cert", &cert, &f.e2]);
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    assert_eq!(ok.stdout, "certificate valid\n");

    let tampered = scratch_file("cli_certify", "bad.cert", &out.stdout.replace("d 1 1", "d 1 0"));
    let bad = run_cli(&["check-cert", "--cert", &tampered, &f.e2]);
    assert_eq!(bad.code, 3, "{}", bad.stderr);
}

#[test]
fn certification_failure_exits_three() {
    let f = cli_files("cli_not_certified");
    let zeros = scratch_file("cli_not_certified", "zeros.txt", "v 0 0\nv 1 0\nv 2 0\n");
    let out = run_cli(&["certify", "--values", &zeros, "--epsilon", "1/1000", "--max-iter", "3", &f.e2]);
    assert_eq!(out.code, 3);
    assert!(out.stdout.is_empty());
}

#[test]
fn iteration_cap_exits_three_and_still_reports() {
    let f = cli_files("cli_cap");
    let out = run_cli(&["solve", "--alg", "vi", "--max-iter", "2", "--epsilon", "1/1000000", &f.e2]);
    assert_eq!(out.code, 3);
    assert!(out.stdout.lines().any(|l| l == "stop iteration-cap"), "{}", out.stdout);
    assert!(out.stdout.lines().any(|l| l == "iterations 2"));
}

#[test]
fn environment_cap_applies_without_flag() {
    let f = cli_files("cli_env_cap");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_mdpkit"))
        .args(["solve", "--alg", "vi", "--epsilon", "1/1000000", &f.e2])
        .env(mdpkit::cli::MAX_ITER_ENV, "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let bad = std::process::Command::new(env!("CARGO_BIN_EXE_mdpkit"))
        .args(["solve", "--alg", "vi", &f.e2])
        .env(mdpkit::cli::MAX_ITER_ENV, "lots")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn input_errors_exit_two_with_position() {
    let bad_mass = scratch_file(
        "cli_input",
        "mass.mdp",
        "mdp\ndiscount 1/2\nstates 1\nstate 0\naction 0 reward 1\nto 0 p 1/3\n",
    );
    let out = run_cli(&["solve", "--alg", "vi", &bad_mass]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("mass 1/3 ≠ 1 at state 0, action 0"), "{}", out.stderr);

    let typo = scratch_file("cli_input", "typo.mdp", "mdp\ndiscount 0.5.5\n");
    let out = run_cli(&["solve", "--alg", "vi", &typo]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("line 2, column"), "{}", out.stderr);

    let missing = run_cli(&["solve", "--alg", "vi", "/nonexistent/file.mdp"]);
    assert_eq!(missing.code, 2);
}

#[test]
fn usage_errors_exit_one() {
    let f = cli_files("cli_usage");
    for args in [
        vec!["solve", &f.e2],
        vec!["solve", "--alg", "xx", &f.e2],
        vec!["solve", "--alg", "vi", "--epsilon", "abc", &f.e2],
        vec!["solve", "--alg", "vi", "--epsilon", "-1", &f.e2],
        vec!["bench", "--family", "grid", "--size", "0"],
        vec!["frobnicate"],
    ] {
        let out = run_cli(&args);
        assert_eq!(out.code, 1, "{args:?}: {}", out.stderr);
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn finite_horizon_report_lists_every_epoch() {
    let text = mdpkit::format::write_mdp(&mdpkit::fixtures::self_loop::<Rational>().with_discount(q(1, 1)));
    let file = scratch_file("cli_finite", "loop.mdp", &text);
    let out = run_cli(&["solve-finite", &file]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.lines().any(|l| l.starts_with("v 0 50 ")), "{}", out.stdout);
    assert_eq!(out.stdout.lines().filter(|l| l.starts_with("epoch ")).count(), 50);
}

#[test]
fn generate_chain_two_is_reversed_chain() {
    let out = run_cli(&["generate", "--family", "chain", "--size", "2"]);
    assert_eq!(out.code, 0);
    let m = mdpkit::format::parse_mdp::<Rational>(&out.stdout).unwrap();
    assert_eq!(m, mdpkit::fixtures::reversed_chain());
}

#[test]
fn solve_output_parses_back_as_values() {
    let f = cli_files("cli_values");
    let out = run_cli(&["solve", "--alg", "pi", &f.e2]);
    assert_eq!(out.code, 0);
    let v = mdpkit::format::parse_values::<Rational>(&out.stdout, 3).unwrap();
    assert_eq!(v, e2_nu_star());
    let rule = mdpkit::format::parse_rule(&out.stdout, 3).unwrap();
    assert_eq!(rule, DecisionRule::new(vec![0, 1, 0]));
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let f = cli_files("cli_determinism");
    for args in cli_matrix(&f) {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let a = run_cli(&args);
        let b = run_cli(&args);
        assert_eq!(a.code, b.code, "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}
