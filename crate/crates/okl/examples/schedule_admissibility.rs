//! Classify step schedules against the convergence conditions: summability
//! of the step powers, the pointwise rate interval, the pairwise step cap,
//! and the resulting rate exponents.
//!
//! Run with: cargo run --release --example schedule_admissibility

use okl::experiments::{theoretical_exponent, RateVariant};
use okl::kernels::{Kernel, PairKernel};
use okl::losses::ActivatingLoss;
use okl::trainers::{validate_schedule, StepSchedule};

fn main() -> okl::Result<()> {
    let pair = PairKernel::new(Kernel::gaussian(1.0, 1.0)?);

    println!("loss            c     theta  power_sum  rate_ok  pair_cap  exponent");
    let cases = [
        ("logistic", None, 0.5, 0.5),
        ("logistic", None, 0.51, 0.5),
        ("logistic", None, 2.0 / 3.0, 0.5),
        ("logistic", None, 0.75, 1.0),
        ("logistic", None, 0.75, 1.1),
        ("qnorm", Some(1.5), 0.6, 0.5),
        ("qnorm", Some(1.5), 0.8, 0.5),
        ("least_squares", None, 0.75, 0.125),
        ("least_squares", None, 0.75, 0.13),
    ];
    for (name, q, theta, c) in cases {
        let loss = ActivatingLoss::by_name(name, q)?;
        let schedule = StepSchedule::new(c, theta)?;
        let report = validate_schedule(&schedule, &loss, Some(&pair));
        println!(
            "{:>13} {:>6} {:>8.4} {:>9} {:>8} {:>9} {:>9.4}",
            format!("{}{}", name, q.map(|v| format!("({v})")).unwrap_or_default()),
            c,
            theta,
            report.power_sum_finite,
            report.pointwise_rate_valid,
            report.pairwise_step_ok.unwrap(),
            report.pointwise_exponent,
        );
    }

    // The best attainable exponents: alpha/(alpha+2) for the pointwise
    // algorithm (1/3 at alpha = 1), approaching 1/6 for the pairwise one and
    // 1/5 when the gradient is bounded.
    println!();
    for alpha in [0.5, 0.75, 1.0] {
        let theta = 2.0 / (alpha + 2.0);
        let e = theoretical_exponent(RateVariant::Pointwise, alpha, theta, None)?;
        println!("pointwise, alpha = {alpha}: best exponent {e:.4} at theta = {theta:.4}");
    }
    for delta in [0.1, 0.02, 0.004] {
        let e = theoretical_exponent(RateVariant::Pairwise, 1.0, 5.0 / 6.0, Some(delta))?;
        let eb = theoretical_exponent(RateVariant::PairwiseBoundedGrad, 1.0, 0.8, Some(delta))?;
        println!("pairwise at delta = {delta}: exponent {e:.4}; bounded-gradient {eb:.4}");
    }
    Ok(())
}
