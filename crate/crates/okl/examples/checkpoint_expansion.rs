//! Save a trained expansion to the flat record format (one row per section:
//! center coordinates, then the coefficient) and load it back with identical
//! evaluations.
//!
//! Run with: cargo run --release --example checkpoint_expansion

use okl::config::Link;
use okl::experiments::SyntheticDistribution;
use okl::hypothesis::DualExpansion;
use okl::kernels::Kernel;
use okl::losses::ActivatingLoss;
use okl::trainers::{run_pointwise, CheckpointPolicy, RunOptions, StepSchedule};

fn main() -> okl::Result<()> {
    let kernel = Kernel::gaussian(1.0, 1.0)?;
    let loss = ActivatingLoss::least_squares();
    let schedule = StepSchedule::new(0.3, 0.75)?;
    let dist = SyntheticDistribution::new(&kernel, 2, 6, 1.0, Link::Affine, 11)?;
    let stream = dist.sample(64, 5)?;
    let (trained, _) = run_pointwise(
        &stream,
        64,
        &schedule,
        &loss,
        &kernel,
        &RunOptions { checkpoints: CheckpointPolicy::FinalOnly, ..Default::default() },
        None,
    )?;

    let mut buf = Vec::new();
    trained.write_records(&mut buf)?;
    println!("checkpoint holds {} rows, {} bytes; first row:", trained.len(), buf.len());
    println!("  {}", String::from_utf8_lossy(buf.split(|&b| b == b'\n').next().unwrap()));

    let restored = DualExpansion::<Kernel>::read_records(kernel.clone(), buf.as_slice())?;
    let probes = dist.sample(5, 99)?;
    let mut worst: f64 = 0.0;
    for z in &probes {
        worst = worst.max((trained.evaluate(&z.x)? - restored.evaluate(&z.x)?).abs());
    }
    println!(
        "restored {} sections, norm {:.12} (trained {:.12}), worst evaluation gap {worst:e}",
        restored.len(),
        restored.rkhs_norm()?,
        trained.rkhs_norm()?
    );
    assert_eq!(trained.coefficients(), restored.coefficients());
    println!("coefficients round-tripped exactly");
    Ok(())
}
