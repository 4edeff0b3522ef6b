//! Rank and norm of the difference blocks `T_n` for one linked pair.

use smale_lab::fredholm::TParams;
use smale_lab::groupoid::{linked_pairs, Link};
use smale_lab::verify::t_section;
use smale_lab::{AperiodicSample, IsometryFamily, Sft, ValueFn};

fn main() -> smale_lab::Result<()> {
    let sys = Sft::golden_default();
    let sample = AperiodicSample::build(&sys, 3, 12)?;
    let fam = IsometryFamily::new(&sys, &sample);
    let bump = ValueFn::Bump { height: 1.0 };
    let (a, b) = linked_pairs(&sys, 1, Link::StableFirst, -4, 2, bump.clone(), bump)?.swap_remove(0);
    for n in -3..=6 {
        let t = t_section(&fam, &a, &b, TParams { i: 0, k: 0, l: 0, n })?;
        let norm = if t.is_exactly_zero() { 0.0 } else { t.spectral_norm()?.norm };
        println!("n = {n:>2}  rank {:>2}  ‖T_n‖ = {norm:.6}  n‖T_n‖ = {:.6}", t.numerical_rank(), n as f64 * norm);
    }
    Ok(())
}
