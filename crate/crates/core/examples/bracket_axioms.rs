//! Randomised check of the bracket axioms and contraction rates.

use smale_lab::axioms::check_axioms;
use smale_lab::{Sft, Torus};

fn main() {
    for (name, rep) in [
        ("golden shift", check_axioms(&Sft::golden_default(), 1000, 0)),
        ("golden torus", check_axioms(&Torus::golden_default(), 1000, 0)),
        ("cat map", check_axioms(&Torus::cat_default(), 1000, 0)),
    ] {
        println!("{name}: {} violations, fewest checks {}", rep.violations(), rep.min_checked());
        println!("  {rep:?}");
    }
}
