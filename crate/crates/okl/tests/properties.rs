//! Property-based invariants: config round-trips, the q-norm family's
//! declared constants across its whole parameter range, schedule shape, and
//! rate-fit recovery of planted power laws.

use okl::config::{
    Algorithm, DistributionConfig, ExperimentConfig, KernelConfig, Link, LossConfig,
    ReferenceConfig, ReferenceKind, ScheduleConfig,
};
use okl::experiments::fit_rate;
use okl::losses::ActivatingLoss;
use okl::trainers::{CheckpointPolicy, StepSchedule};
use proptest::prelude::*;

fn algorithm_strategy() -> impl Strategy<Value = Algorithm> {
    prop_oneof![Just(Algorithm::Pointwise), Just(Algorithm::Pairwise)]
}

fn loss_strategy() -> impl Strategy<Value = LossConfig> {
    prop_oneof![
        Just(LossConfig { name: "logistic".into(), q: None }),
        Just(LossConfig { name: "least_squares".into(), q: None }),
        (1.1f64..=2.0).prop_map(|q| LossConfig { name: "qnorm".into(), q: Some(q) }),
    ]
}

fn kernel_strategy() -> impl Strategy<Value = KernelConfig> {
    prop_oneof![
        (0.2f64..3.0, 0.5f64..4.0).prop_map(|(bw, r)| KernelConfig {
            family: "gaussian".into(),
            bandwidth: Some(bw),
            degree: None,
            offset: None,
            domain_radius: r,
        }),
        (0.5f64..4.0).prop_map(|r| KernelConfig {
            family: "linear".into(),
            bandwidth: None,
            degree: None,
            offset: None,
            domain_radius: r,
        }),
        (1u32..4, 0.0f64..2.0, 0.5f64..4.0).prop_map(|(d, o, r)| KernelConfig {
            family: "polynomial".into(),
            bandwidth: None,
            degree: Some(d),
            offset: Some(o),
            domain_radius: r,
        }),
    ]
}

fn checkpoint_strategy() -> impl Strategy<Value = CheckpointPolicy> {
    prop_oneof![
        (1u64..32).prop_map(|start| CheckpointPolicy::Geometric { start }),
        Just(CheckpointPolicy::FinalOnly),
        proptest::collection::vec(1u64..64, 1..6)
            .prop_map(|points| CheckpointPolicy::Explicit { points }),
    ]
}

fn config_strategy() -> impl Strategy<Value = ExperimentConfig> {
    (
        algorithm_strategy(),
        64u64..512,
        1u32..8,
        any::<u32>(),
        0u32..500,
        1u32..5,
        (0.001f64..0.24, "[a-z]{1,12}"),
        loss_strategy(),
        kernel_strategy(),
        (0.01f64..4.0, 0.05f64..0.95),
        checkpoint_strategy(),
    )
        .prop_map(
            |(
                algorithm,
                t_max,
                n_seeds,
                seed0,
                n_eval,
                dimension,
                (delta, out_dir),
                loss,
                kernel,
                (c, theta),
                checkpoints,
            )| {
                ExperimentConfig {
                    algorithm,
                    t_max,
                    n_seeds,
                    seed0: seed0 as u64,
                    n_eval,
                    dimension,
                    delta,
                    out_dir,
                    loss,
                    kernel,
                    schedule: ScheduleConfig { c, theta },
                    checkpoints,
                    distribution: DistributionConfig {
                        link: Link::Logistic,
                        planted_centers: 5,
                        planted_seed: 1,
                        planted_norm: 1.5,
                    },
                    reference: ReferenceConfig {
                        kind: ReferenceKind::Proxy,
                        proxy_t_multiplier: 4,
                        proxy_seeds: 2,
                    },
                }
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // parse(serialize(config)) == config for every generated config,
    // including float fields, without any value drift.
    #[test]
    fn config_round_trip(cfg in config_strategy()) {
        let text = cfg.to_toml().unwrap();
        let back: ExperimentConfig = toml::from_str(&text).unwrap();
        prop_assert_eq!(cfg, back);
    }

    // Across the whole q-norm range, the declared (alpha, L) = (q-1, q) pass
    // the Hölder certificate and the inequality residuals stay nonnegative.
    #[test]
    fn qnorm_family_constants_hold(
        q in 1.1f64..=2.0,
        s in -10.0f64..10.0,
        t in -10.0f64..10.0,
    ) {
        let loss = ActivatingLoss::qnorm(q).unwrap();
        let gap = (loss.grad(s).unwrap() - loss.grad(t).unwrap()).abs();
        prop_assert!(gap <= loss.holder_l() * (s - t).abs().powf(loss.alpha()) + 1e-9);
        let residuals = loss.smoothness_residuals(s, t).unwrap();
        prop_assert!(residuals.min() >= -1e-9, "{:?}", residuals);
    }

    // Polynomial schedules are positive and strictly decreasing.
    #[test]
    fn schedules_decrease(c in 0.01f64..10.0, theta in 0.01f64..0.99, t in 1u64..100_000) {
        let schedule = StepSchedule::new(c, theta).unwrap();
        prop_assert!(schedule.gamma(t) > 0.0);
        prop_assert!(schedule.gamma(t + 1) < schedule.gamma(t));
    }

    // fit_rate recovers a planted power law exactly (up to roundoff) from
    // any geometric grid.
    #[test]
    fn fit_recovers_power_laws(
        slope in -2.0f64..0.0,
        scale in 0.1f64..10.0,
        n in 4usize..10,
    ) {
        let points: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let t = 2f64.powi(i as i32 + 3);
                (t, scale * t.powf(slope))
            })
            .collect();
        let fit = fit_rate(&points).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-9);
        prop_assert!((fit.intercept - scale.ln()).abs() < 1e-9);
        prop_assert!(fit.residual_rms < 1e-9);
    }
}
