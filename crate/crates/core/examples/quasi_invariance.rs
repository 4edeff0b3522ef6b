//! Measured `‖W_{n+j} - W_n‖` and `‖(u⊗u)^j W_n - W_n u^j‖` against the
//! closed forms.

use smale_lab::fredholm::seed_points;
use smale_lab::verify::suite_quasi_invariance;
use smale_lab::{AperiodicSample, IsometryFamily, Sft};

fn main() -> smale_lab::Result<()> {
    let sys = Sft::golden_default();
    let sample = AperiodicSample::build(&sys, 3, 12)?;
    let fam = IsometryFamily::new(&sys, &sample);
    let points = seed_points(&sys, 3, 3);
    let rec = suite_quasi_invariance(&fam, &points, 12, &[1, 2], 2)?;
    for r in rec.rows.iter().filter(|r| r.series.starts_with("step") || r.series.starts_with("shift")) {
        println!("{:<9} n = {:>2}  measured {:.9}  closed form {:.9}", r.series, r.n, r.measured, r.closed_form.unwrap_or(f64::NAN));
    }
    for c in &rec.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}
