//! Certify the declared constants of every built-in loss, then of a custom
//! loss supplied as closures.
//!
//! Run with: cargo run --release --example verify_loss

use okl::losses::{verify, ActivatingLoss};

fn report(loss: &ActivatingLoss) {
    let battery = verify::run_battery(loss, 10_000, 42);
    println!(
        "{} (alpha = {}, L = {}): {}",
        battery.loss_name,
        loss.alpha(),
        loss.holder_l(),
        if battery.passed() { "PASS" } else { "FAIL" }
    );
    for check in &battery.checks {
        println!("  {} {}", if check.passed { "ok  " } else { "FAIL" }, check.name);
    }
}

fn main() -> okl::Result<()> {
    for loss in [
        ActivatingLoss::least_squares(),
        ActivatingLoss::logistic(),
        ActivatingLoss::qnorm(1.5)?,
        ActivatingLoss::qnorm(2.0)?,
    ] {
        report(&loss);
    }

    // A custom loss: the shifted softplus phi(s) = ln(1 + e^{1-s}) is
    // 1-activating with L = 1/4 and |phi'| <= 1.
    let softplus = ActivatingLoss::custom(
        "shifted_softplus",
        1.0,
        0.25,
        Some(1.0),
        None,
        |s| ((1.0 - s).exp()).ln_1p(),
        |s| -1.0 / (1.0 + (s - 1.0).exp()),
    )?;
    report(&softplus);

    // Declaring a wrong Hölder constant is caught by the battery.
    let wrong = ActivatingLoss::custom(
        "least_squares_wrong_l",
        1.0,
        0.5, // true Lipschitz constant of the derivative is 2
        None,
        Some(1.0),
        |s| (1.0 - s) * (1.0 - s),
        |s| -2.0 * (1.0 - s),
    )?;
    report(&wrong);
    Ok(())
}
