//! Per-level statistics of the enlarged Markov covers.

use smale_lab::cover::{level_stats, log_count_slope, test_points};
use smale_lab::{CoveredSystem, Sft, Torus};

fn table<S: CoveredSystem>(name: &str, sys: &S, depth: u32) {
    let pts = test_points(sys, 500, 0);
    println!("{name}");
    println!("{:>3} {:>12} {:>12} {:>12} {:>12} {:>4}", "n", "count", "diam", "bound", "leb", "mult");
    for n in 1..=depth {
        let s = level_stats(sys, n, &pts);
        println!("{:>3} {:>12} {:>12.4e} {:>12.4e} {:>12.4e} {:>4}", n, s.count, s.diam, s.diam_bound, s.leb_bound, s.multiplicity);
    }
    let levels: Vec<u32> = (1..=depth).collect();
    println!("log-count slope {:.4}, 2h = {:.4}\n", log_count_slope(sys, &levels), 2.0 * sys.constants().entropy);
}

fn main() {
    table("golden shift", &Sft::golden_default(), 10);
    table("golden torus", &Torus::golden_default(), 6);
}
