//! Train the pointwise algorithm on a synthetic logistic-link task and watch
//! the excess risk against the planted minimizer shrink.
//!
//! Run with: cargo run --release --example train_pointwise

use okl::config::Link;
use okl::experiments::{true_risk, EvalSet, PointwiseRiskTracker, SyntheticDistribution};
use okl::kernels::Kernel;
use okl::losses::ActivatingLoss;
use okl::trainers::{run_pointwise, CheckpointPolicy, RunOptions, StepSchedule};

fn main() -> okl::Result<()> {
    let kernel = Kernel::gaussian(1.0, 1.0)?;
    let loss = ActivatingLoss::logistic();
    // theta = 2/3 maximizes the predicted exponent min(theta/2, 1-theta).
    let schedule = StepSchedule::new(0.5, 2.0 / 3.0)?;

    let dist = SyntheticDistribution::new(&kernel, 3, 10, 2.0, Link::Logistic, 10_007)?;
    let eval = EvalSet::draw(&dist, 20_000, 1_000_042)?;
    let reference = true_risk(dist.planted(), &eval, &loss)?;
    println!("planted-minimizer risk: {reference:.6}");

    let t_max = 2048;
    let stream = dist.sample(t_max as usize, 42)?;
    let mut tracker = PointwiseRiskTracker::new(&eval, loss.clone(), kernel.clone(), Some(reference));
    let options = RunOptions {
        checkpoints: CheckpointPolicy::Geometric { start: 16 },
        ..Default::default()
    };
    let (hypothesis, record) = run_pointwise(
        &stream,
        t_max,
        &schedule,
        &loss,
        &kernel,
        &options,
        Some(&mut tracker),
    )?;

    println!("      t     gamma      norm      risk    excess");
    for row in &record.rows {
        println!(
            "{:>7} {:>9.5} {:>9.5} {:>9.6} {:>+9.6}",
            row.t,
            row.gamma,
            row.rkhs_norm,
            row.heldout_risk.unwrap_or(f64::NAN),
            row.excess_risk.unwrap_or(f64::NAN)
        );
    }
    println!(
        "final hypothesis: {} centers, norm {:.4}",
        hypothesis.len(),
        hypothesis.rkhs_norm()?
    );
    Ok(())
}
