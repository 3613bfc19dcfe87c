use crdflab_core::di::{
    build_system, causally_conditional_di, conditional_mi, directed_info, directed_info_steps, random_causal_system,
    stream_mi, verify_chain_rule, verify_dpi, LinearStageMap, SystemBuilder, Tap,
};
use crdflab_core::gauss_tc::run_recursion;
use crdflab_core::ScenarioParams;
use proptest::prelude::*;

const ALL: &[&str] = &["x", "y", "z"];

fn three_streams(seed: u64, horizon: usize) -> crdflab_core::di::GaussianSystem {
    random_causal_system(seed, horizon, &[("x", ALL), ("y", ALL), ("z", ALL)]).unwrap()
}

#[test]
fn chain_rule_on_random_systems() {
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let sys = three_streams(seed, 1 + (seed as usize % 4));
        worst = worst.max(verify_chain_rule(&sys, "x", "y", "z").unwrap().max_residual());
    }
    assert!(worst < 1e-9, "max residual {worst:e}");
}

#[test]
fn chain_rule_with_zero_output() {
    let sys = SystemBuilder::new(3)
        .stream("x", 1.0, vec![Tap::new("x", 1, 0.7)])
        .stream("y", 0.5, vec![Tap::new("x", 0, 1.0)])
        .stream("z", 0.0, vec![])
        .build()
        .unwrap();
    let r = verify_chain_rule(&sys, "x", "y", "z").unwrap();
    assert!(r.joint_input.0.abs() < 1e-9 && r.joint_input.1.abs() < 1e-9);
    assert!(r.max_residual() < 1e-9);
}

#[test]
fn dpi_on_random_systems() {
    for seed in 0..100 {
        let sys = random_causal_system(
            1000 + seed,
            1 + (seed as usize % 4),
            &[("x", &["x", "u"]), ("a", &["x", "a", "u"]), ("u", &["a", "u"])],
        )
        .unwrap();
        let r = verify_dpi(&sys, "x", "a", "u").unwrap();
        assert!(r.holds(1e-9), "seed {seed}: {r:?}");
    }
}

/// `x_2 = a_1`, `u_2 = a_1 + noise`: the Markov chain on `u` holds, yet
/// `I(x -> u)` is positive while `I(x -> a || u^{T-1})` is zero.
#[test]
fn dpi_fails_when_source_reads_past_a() {
    let sys = SystemBuilder::new(2)
        .stream("x", 0.01, vec![Tap::new("a", 1, 1.0)])
        .stream("a", 1.0, vec![])
        .stream("u", 0.01, vec![Tap::new("a", 1, 1.0)])
        .build()
        .unwrap();
    let lhs = directed_info(&sys, "x", "u").unwrap();
    let rhs = causally_conditional_di(&sys, "x", "a", "u", 1).unwrap();
    assert!(lhs > 2.0 && rhs.abs() < 1e-12, "{lhs} {rhs}");
    assert!(verify_dpi(&sys, "x", "a", "u").is_err());
}

#[test]
fn dpi_with_noisy_identity_postprocessing() {
    for seed in 0..50u64 {
        let noise = 0.1 + (seed as f64) * 0.03;
        let feedback = -1.0 + (seed as f64) / 25.0;
        let sys = SystemBuilder::new(3)
            .stream("x", 1.0, vec![Tap::new("x", 1, 0.9)])
            .stream("a", 0.3, vec![Tap::new("x", 0, 1.0), Tap::new("a", 1, feedback)])
            .stream("u", noise, vec![Tap::new("a", 0, 1.0)])
            .build()
            .unwrap();
        let r = verify_dpi(&sys, "x", "a", "u").unwrap();
        assert!(r.holds(1e-9) && r.lhs < r.rhs, "{r:?}");
    }
}

#[test]
fn di_never_exceeds_mi() {
    for seed in 0..50 {
        let sys = three_streams(500 + seed, 1 + (seed as usize % 4));
        let di = directed_info(&sys, "x", "z").unwrap();
        let mi = stream_mi(&sys, "x", "z").unwrap();
        assert!(di >= 0.0 && di <= mi + 1e-10, "seed {seed}: {di} > {mi}");
    }
}

#[test]
fn memoryless_awgn_di_equals_rate_sum() {
    for &horizon in &[1usize, 8, 64] {
        let p = ScenarioParams::new(0.0, 1.0, 1.0 / 9.0, horizon).unwrap();
        let sys = build_system(&p, &LinearStageMap::awgn(0.3)).unwrap();
        let tr = run_recursion(&p, 0.3, horizon).unwrap();
        assert!((directed_info(&sys, "x", "w").unwrap() - tr.total_rate()).abs() < 1e-9);
    }
}

#[test]
fn gauss_markov_di_matches_exact_per_step_formula() {
    for &lambda in &[0.5, 0.9, -0.95] {
        let p = ScenarioParams::new(lambda, 1.0, 1.0 / 9.0, 64).unwrap();
        let sys = build_system(&p, &LinearStageMap::awgn(0.2)).unwrap();
        let tr = run_recursion(&p, 0.2, 64).unwrap();
        let steps = directed_info_steps(&sys, "x", "w").unwrap();
        for (a, b) in steps.iter().zip(tr.directed_info_steps(&p)) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        // The rate sum and the DI differ only by the telescoping boundary term.
        let l2 = lambda * lambda;
        let boundary = 0.5 * ((l2 * tr.d_tilde[0] + 1.0) / (l2 * tr.d_tilde[63] + 1.0)).log2();
        let di: f64 = steps.iter().sum();
        assert!((di - tr.total_rate() - boundary).abs() < 1e-9);
    }
}

#[test]
fn long_horizon_di_rate_matches_average_rate() {
    let p = ScenarioParams::new(0.9, 1.0, 1.0 / 9.0, 256).unwrap();
    let sys = build_system(&p, &LinearStageMap::awgn(0.05)).unwrap();
    let tr = run_recursion(&p, 0.05, 256).unwrap();
    let di = directed_info(&sys, "x", "w").unwrap();
    assert!((di / 256.0 - tr.average_rate()).abs() < 0.01);
}

#[test]
fn naive_sum_of_conditional_mi_matches_directed_info() {
    let sys = three_streams(77, 4);
    let x = &sys.stream("x").unwrap().indices;
    let z = &sys.stream("z").unwrap().indices;
    let naive: f64 = (0..4).map(|t| conditional_mi(&sys, &x[..=t], &[z[t]], &z[..t]).unwrap()).sum();
    assert!((naive - directed_info(&sys, "x", "z").unwrap()).abs() < 1e-10);
    let y = &sys.stream("y").unwrap().indices;
    let naive: f64 = (0..4)
        .map(|t| {
            let mut c = z[..t].to_vec();
            c.extend_from_slice(&y[..t]);
            conditional_mi(&sys, &x[..=t], &[z[t]], &c).unwrap()
        })
        .sum();
    assert!((naive - causally_conditional_di(&sys, "x", "z", "y", 1).unwrap()).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn information_is_nonnegative(seed in 0u64..10_000, horizon in 1usize..5) {
        let sys = three_streams(seed, horizon);
        let x = &sys.stream("x").unwrap().indices;
        let y = &sys.stream("y").unwrap().indices;
        let z = &sys.stream("z").unwrap().indices;
        prop_assert!(conditional_mi(&sys, x, y, z).unwrap() >= 0.0);
        for lag in 0..=1 {
            prop_assert!(causally_conditional_di(&sys, "x", "y", "z", lag).unwrap() >= 0.0);
        }
    }
}
