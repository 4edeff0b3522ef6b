//! Rank-one products and eventual vanishing for linked bisections.

use smale_lab::groupoid::{linked_pairs, Link};
use smale_lab::verify::suite_groupoid_lemmas;
use smale_lab::{Sft, ValueFn};

fn main() -> smale_lab::Result<()> {
    let sys = Sft::golden_default();
    let bump = ValueFn::Bump { height: 1.0 };
    let pairs = linked_pairs(&sys, 5, Link::UnstableFirst, 2, 2, bump.clone(), bump)?;
    let rec = suite_groupoid_lemmas(&sys, &pairs, 24)?;
    for c in &rec.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    print!("{}", rec.to_csv());
    Ok(())
}
