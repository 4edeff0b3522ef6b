//! Constants of the shipped systems.

use smale_lab::{CoveredSystem, Sft, Torus};

fn show<S: CoveredSystem>(name: &str, sys: &S) {
    let c = sys.constants();
    println!(
        "{name:<13} λ = {:.6}  ε_X = {:.6}  ε'_X = {:.6}  h = {:.6}  #R_1 = {}  θ = {:.6}",
        c.lambda,
        c.eps_x,
        c.eps_x_prime,
        c.entropy,
        sys.coding().count(1),
        sys.level_diam(1)
    );
}

fn main() {
    show("golden shift", &Sft::golden_default());
    show("golden torus", &Torus::golden_default());
    show("cat map", &Torus::cat_default());
}
