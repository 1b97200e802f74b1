mod common;

use common::*;
use mdpkit::format::write_values;
use mdpkit::oracle::nu_star_bruteforce;
use mdpkit::prelude::*;

#[test]
fn e2_optimum_matches_frozen_fixture() {
    let m = mdpkit::fixtures::e2::<Rational>();
    let (nu, witness) = nu_star_bruteforce(&m).unwrap();
    assert_eq!(nu, e2_nu_star());
    assert_eq!(witness, DecisionRule::new(vec![0, 1, 0]));
    assert_eq!(nu, ValueFunction::new(vec![q(755, 143), q(55, 13), q(5, 1)]));
    let frozen = include_str!("fixtures/e2_nu_star.txt");
    let body: String = frozen.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    assert_eq!(write_values(&nu), body);
}

#[test]
fn e2_optimum_is_a_fixed_point() {
    let m = mdpkit::fixtures::e2::<Rational>();
    let nu = e2_nu_star();
    let (image, rule) = bellman_opt(&m, &nu).unwrap();
    assert_eq!(image, nu);
    assert_eq!(rule, DecisionRule::new(vec![0, 1, 0]));
}

#[test]
fn e2_solvers_recover_the_optimal_rule() {
    let m = mdpkit::fixtures::e2::<Rational>();
    for alg in Algorithm::ALL {
        let r = solve(&m, alg, &SolveParams::new(q(1, 100))).unwrap();
        assert_eq!(r.rule, DecisionRule::new(vec![0, 1, 0]), "{alg}");
    }
    let pi = policy_iteration(&m, &SolveParams::new(q(0, 1))).unwrap();
    assert_eq!(pi.values, e2_nu_star());
}

#[test]
fn e2_certificate_from_optimum_has_zero_residual() {
    let m = mdpkit::fixtures::e2::<Rational>();
    let cert = certify_values(&m, &e2_nu_star(), &q(1, 100)).unwrap();
    assert_eq!(cert.iterations_used, 1);
    assert_eq!(cert.residual, q(0, 1));
    assert_eq!(cert.values, e2_nu_star());
}
