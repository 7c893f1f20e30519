//! Train the pairwise algorithm at its step cap and verify the deterministic
//! norm envelope at every iteration along the way.
//!
//! Run with: cargo run --release --example train_pairwise

use okl::config::Link;
use okl::experiments::{EvalSet, PairwiseRiskTracker, SyntheticDistribution};
use okl::kernels::{Kernel, PairKernel};
use okl::losses::ActivatingLoss;
use okl::trainers::{run_pairwise, CheckpointPolicy, RunOptions, StepSchedule};

fn main() -> okl::Result<()> {
    let base = Kernel::gaussian(1.0, 1.0)?;
    let pair = PairKernel::new(base.clone());
    let loss = ActivatingLoss::logistic();
    // The largest admissible step constant: c = 1/(4 * kappa_tilde^2 * L).
    let kt = pair.kappa();
    let c = 1.0 / (4.0 * kt * kt * loss.holder_l());
    let schedule = StepSchedule::new(c, 0.75)?;
    println!("step cap gives c = {c}");

    let dist = SyntheticDistribution::new(&base, 3, 10, 2.0, Link::Logistic, 10_007)?;
    let eval = EvalSet::draw(&dist, 400, 1_000_042)?;

    let t_max = 512;
    let stream = dist.sample(t_max as usize, 7)?;
    let mut tracker = PairwiseRiskTracker::new(&eval, loss.clone(), base, t_max as usize, None);
    let options = RunOptions {
        checkpoints: CheckpointPolicy::Geometric { start: 8 },
        check_norm_envelope: true,
        ..Default::default()
    };
    let (hypothesis, record) =
        run_pairwise(&stream, t_max, &schedule, &loss, &pair, &options, Some(&mut tracker))?;

    println!("      t      norm  envelope      risk");
    for row in &record.rows {
        println!(
            "{:>7} {:>9.5} {:>9.5} {:>9.6}",
            row.t,
            row.rkhs_norm,
            row.norm_envelope.unwrap_or(f64::NAN),
            row.heldout_risk.unwrap_or(f64::NAN),
        );
    }
    println!(
        "envelope checked at every iteration: {} violations (precondition met: {})",
        record.envelope_violations.len(),
        record.envelope_precondition_met
    );
    println!("final expansion holds {} centers", hypothesis.len());
    Ok(())
}
