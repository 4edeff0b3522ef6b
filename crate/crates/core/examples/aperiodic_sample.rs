//! Builds an aperiodic homoclinic sample and certifies it.

use smale_lab::{AperiodicSample, Sft};

fn main() -> smale_lab::Result<()> {
    let sys = Sft::golden_default();
    let sample = AperiodicSample::build(&sys, 3, 12)?;
    sample.fill_to(&sys, 5)?;
    let cert = sample.certify(&sys);
    println!("{} points, certificate {:?}", sample.len(), cert);
    for (cell, choice) in sample.entries().iter().take(8) {
        println!("{cell:?} -> {choice:?}");
    }
    Ok(())
}
