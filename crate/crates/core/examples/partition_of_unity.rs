//! Weights of the level-n partition of unity at a random point, and the
//! empirical Lipschitz ratio against the analytic bound.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smale_lab::cover::cell_mates;
use smale_lab::points::random_point;
use smale_lab::pou::empirical_lipschitz;
use smale_lab::{PartitionOfUnity, Torus};

fn main() {
    let sys = Torus::golden_default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = random_point(&sys, &mut rng, 6);
    println!("x = {x}");
    for n in 1..=4 {
        let p = PartitionOfUnity::new(&sys, n);
        let w = p.weights(&x);
        let total: f64 = w.iter().map(|(_, f)| f).sum();
        println!("level {n}: {} cells, Σ F = {total:.15}", w.len());
        for (cell, f) in &w {
            println!("    {cell:?}  F = {f:.6}");
        }
        let lip = empirical_lipschitz(&p, &cell_mates(&sys, n, 300, n as u64));
        println!("    Lipschitz {:.3} <= {:.3e}", lip.lipschitz, p.lipschitz_bound());
    }
}
