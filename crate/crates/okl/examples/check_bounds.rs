//! The deterministic bound battery, driven through the library API: the
//! step-growth sup against C_phi^2, partial power sums against their cap,
//! the exact norm envelope under its closed form, and the logarithm
//! linearization inequality.
//!
//! Run with: cargo run --release --example check_bounds

use okl::losses::{log_linearization_bound, verify, ActivatingLoss};
use okl::trainers::{norm_envelope, norm_envelope_closed_form, StepSchedule};

fn main() -> okl::Result<()> {
    // sup_s [4 phi'(s)^2 (gamma kappa~^2) - 2 phi'(s) s] <= C_phi^2 for every
    // admissible step.
    for loss in
        [ActivatingLoss::least_squares(), ActivatingLoss::logistic(), ActivatingLoss::qnorm(2.0)?]
    {
        let cap = loss.norm_growth_constant()?;
        let at_max = loss.step_growth_sup(loss.max_step_kappa_sq())?;
        let at_zero = loss.step_growth_sup(0.0)?;
        let worst = verify::step_sup_excess_worst(&loss, 100, 42)?;
        println!(
            "{:>14}: C_phi^2 = {:.6}; sup at step cap = {:.6}; at zero step = {:.6}; worst excess {:+.2e}",
            loss.name(),
            cap * cap,
            at_max,
            at_zero,
            worst
        );
    }

    // Partial sums of gamma_j^{1+alpha} stay under 2c^{1+alpha}/(theta(1+alpha)-1).
    let schedule = StepSchedule::new(0.5, 0.75)?;
    for alpha in [0.5, 1.0] {
        let bound = schedule.power_sum_bound(alpha)?;
        let sum = schedule.power_partial_sum(alpha, 1_000_000);
        println!("alpha = {alpha}: partial power sum to 1e6 = {sum:.6} vs cap {bound:.6}");
    }

    // The exact envelope never exceeds its closed-form relaxation.
    let loss = ActivatingLoss::logistic();
    let mut worst = f64::NEG_INFINITY;
    for t in [2u64, 10, 100, 1_000, 10_000] {
        let exact = norm_envelope(&schedule, &loss, t)?;
        let closed = norm_envelope_closed_form(&schedule, &loss, t)?;
        worst = worst.max(exact - closed);
        println!("t = {t:>6}: exact envelope {exact:.6} <= closed form {closed:.6}");
    }
    assert!(worst <= 0.0);

    // a ln x <= nu x + a ln(a/(nu e)) over a log-uniform grid.
    let grid_worst = verify::log_linearization_violation_worst(20);
    println!("log linearization, worst violation on the 20^3 grid: {grid_worst:.3e}");
    let (lhs, rhs) = log_linearization_bound(std::f64::consts::E, 1.0, 1.0)?;
    println!("spot check at (e, 1, 1): {lhs:.6} <= {rhs:.6}");
    Ok(())
}
