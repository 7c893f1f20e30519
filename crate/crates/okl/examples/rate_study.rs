//! A desk-scale replicated rate study: seed-averaged excess risk at geometric
//! checkpoints, fitted log-log slope next to the theoretical exponent.
//!
//! Run with: cargo run --release --example rate_study

use okl::config::{
    Algorithm, DistributionConfig, ExperimentConfig, KernelConfig, Link, LossConfig,
    ReferenceConfig, ReferenceKind, ScheduleConfig,
};
use okl::experiments::run_study;
use okl::trainers::CheckpointPolicy;

fn main() -> okl::Result<()> {
    let cfg = ExperimentConfig {
        algorithm: Algorithm::Pointwise,
        t_max: 1024,
        n_seeds: 16,
        seed0: 42,
        n_eval: 20_000,
        dimension: 3,
        delta: 0.02,
        out_dir: "out/example_rate_study".into(),
        loss: LossConfig { name: "logistic".into(), q: None },
        kernel: KernelConfig {
            family: "gaussian".into(),
            bandwidth: Some(1.0),
            degree: None,
            offset: None,
            domain_radius: 1.0,
        },
        schedule: ScheduleConfig { c: 0.5, theta: 2.0 / 3.0 },
        checkpoints: CheckpointPolicy::Explicit { points: vec![64, 128, 256, 512, 1024] },
        distribution: DistributionConfig { link: Link::Logistic, ..Default::default() },
        reference: ReferenceConfig { kind: ReferenceKind::Planted, ..Default::default() },
    };

    let result = run_study(&cfg, false, None)?;
    println!(
        "reference: {:?} risk {:.6}",
        result.reference_kind,
        result.reference_risk.unwrap()
    );
    for s in &result.checkpoints {
        println!("T={:>6}  mean excess {:+.5e}  stderr {:.2e}", s.t, s.mean_excess, s.stderr_excess);
    }
    let fit = result.rate_fit.as_ref().expect("enough checkpoints for a fit");
    println!(
        "fitted slope {:+.4} (residual rms {:.3e}) vs theoretical exponent {:.4}",
        fit.slope,
        fit.residual_rms,
        result.theoretical_exponent.unwrap()
    );
    Ok(())
}
