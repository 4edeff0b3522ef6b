//! Columns of the basic isometries, `ι*ι = I` and mutual orthogonality.

use smale_lab::fredholm::seed_points;
use smale_lab::{AperiodicSample, IsometryFamily, Sft};

fn main() -> smale_lab::Result<()> {
    let sys = Sft::golden_default();
    let sample = AperiodicSample::build(&sys, 3, 12)?;
    let fam = IsometryFamily::new(&sys, &sample);
    let y = &seed_points(&sys, 4, 1)[0];
    println!("y = {y}");
    for n in 1..=3 {
        let col = fam.iota_column(n, 0, y)?;
        let back = fam.iota_adjoint_apply(n, 0, &col)?;
        println!("ι_({n},0) δ_y has {} terms; ι*ι δ_y = {:?}", col.len(), back.values().collect::<Vec<_>>());
    }
    let col = fam.iota_column(3, 1, y)?;
    for (m, s) in [(3, 0), (3, 2), (2, 1), (4, 1)] {
        let v = fam.iota_adjoint_apply(m, s, &col)?;
        println!("ι*_({m},{s}) ι_(3,1) δ_y = {} nonzero entries", v.values().filter(|x| **x != 0.0).count());
    }
    Ok(())
}
