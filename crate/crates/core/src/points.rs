//! Points built from itineraries: coded homoclinic candidates and random test
//! points for the sampled checks.

use rand::Rng;

use crate::markov::{Coding, CoveredSystem};
use crate::word::{rotate, BiSequence, Symbol};

/// The itinerary `left^∞ · b1 · core · b2 · right^∞` with `core` starting at
/// `core_start`, where `b1`, `b2` are the `pick`-th shortest admissible
/// bridges. `None` if either bridge does not exist.
pub fn assemble(
    coding: &Coding,
    left: &[Symbol],
    core: &[Symbol],
    core_start: i64,
    right: &[Symbol],
    pick: (usize, usize),
) -> Option<BiSequence> {
    assert!(!core.is_empty());
    let max_bridge = 2 * coding.alphabet() + 2;
    let b1 = coding.bridges(*left.last()?, core[0], max_bridge, pick.0 + 1).into_iter().nth(pick.0)?;
    let b2 = coding.bridges(*core.last()?, right[0], max_bridge, pick.1 + 1).into_iter().nth(pick.1)?;
    let cut = core_start - b1.len() as i64;
    let mut center = b1;
    center.extend_from_slice(core);
    center.extend_from_slice(&b2);
    let right_cut = cut + center.len() as i64;
    Some(BiSequence::new(rotate(left, -cut), cut, center, rotate(right, -right_cut)))
}

/// A random closed walk of about `len` symbols, as a cyclic word.
pub fn random_cycle<R: Rng>(coding: &Coding, rng: &mut R, len: usize) -> Vec<Symbol> {
    let k = coding.alphabet();
    let start = rng.random_range(0..k) as Symbol;
    let mut w = vec![start];
    while w.len() < len.max(1) {
        let succ: Vec<Symbol> = coding.successors(*w.last().unwrap()).collect();
        w.push(succ[rng.random_range(0..succ.len())]);
    }
    let back = coding.bridges(*w.last().unwrap(), start, 2 * k + 2, 1);
    w.extend_from_slice(&back[0]);
    w
}

pub fn random_word<R: Rng>(coding: &Coding, rng: &mut R, len: usize) -> Vec<Symbol> {
    let k = coding.alphabet();
    let mut w = vec![rng.random_range(0..k) as Symbol];
    while w.len() < len {
        let succ: Vec<Symbol> = coding.successors(*w.last().unwrap()).collect();
        w.push(succ[rng.random_range(0..succ.len())]);
    }
    w
}

/// A random point whose itinerary is random on `[-half, half]` and
/// eventually periodic with random periods outside.
pub fn random_point<S: CoveredSystem, R: Rng>(sys: &S, rng: &mut R, half: usize) -> S::Point {
    let coding = sys.coding();
    loop {
        let (ll, rl) = (rng.random_range(1..6), rng.random_range(1..6));
        let left = random_cycle(coding, rng, ll);
        let right = random_cycle(coding, rng, rl);
        let core = random_word(coding, rng, 2 * half + 1);
        if let Some(it) = assemble(coding, &left, &core, -(half as i64), &right, (0, 0)) {
            if let Some(x) = sys.decode(&it) {
                return x;
            }
        }
    }
}

/// A random point whose itinerary on `[-h, h]` is the given word, where
/// `word` has length `2h + 1`.
pub fn random_point_with_word<S: CoveredSystem, R: Rng>(sys: &S, rng: &mut R, word: &[Symbol], extra: usize) -> S::Point {
    let coding = sys.coding();
    let h = (word.len() / 2) as i64;
    loop {
        let (ll, rl) = (rng.random_range(1..6), rng.random_range(1..6));
        let left = random_cycle(coding, rng, ll);
        let right = random_cycle(coding, rng, rl);
        let mut pre = random_word_into(coding, rng, extra, word[0]);
        pre.reverse();
        let mut core = pre.clone();
        core.extend_from_slice(word);
        let post = random_word_from(coding, rng, extra, *word.last().unwrap());
        core.extend_from_slice(&post);
        let start = -h - pre.len() as i64;
        if let Some(it) = assemble(coding, &left, &core, start, &right, (0, 0)) {
            if let Some(x) = sys.decode(&it) {
                return x;
            }
        }
    }
}

/// Random word of length `len` whose successor is `next`, reversed.
fn random_word_into<R: Rng>(coding: &Coding, rng: &mut R, len: usize, next: Symbol) -> Vec<Symbol> {
    let k = coding.alphabet() as Symbol;
    let mut w = Vec::with_capacity(len);
    let mut cur = next;
    for _ in 0..len {
        let preds: Vec<Symbol> = (0..k).filter(|&a| coding.allowed(a, cur)).collect();
        cur = preds[rng.random_range(0..preds.len())];
        w.push(cur);
    }
    w
}

fn random_word_from<R: Rng>(coding: &Coding, rng: &mut R, len: usize, prev: Symbol) -> Vec<Symbol> {
    let mut w = Vec::with_capacity(len);
    let mut cur = prev;
    for _ in 0..len {
        let succ: Vec<Symbol> = coding.successors(cur).collect();
        cur = succ[rng.random_range(0..succ.len())];
        w.push(cur);
    }
    w
}

/// The `pick`-th coded homoclinic candidate for a cell word: backward
/// asymptotic to `Q`, forward asymptotic to `P`, itinerary `word` on
/// `[-h, h]`.
pub fn coded_homoclinic<S: CoveredSystem>(sys: &S, word: &[Symbol], pick: (usize, usize)) -> Option<S::Point> {
    let h = (word.len() / 2) as i64;
    let it = assemble(sys.coding(), sys.q_code(), word, -h, sys.p_code(), pick)?;
    sys.decode(&it)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{HomoclinicSystem, SmaleSpace};
    use crate::sft::Sft;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn coded_points_are_homoclinic_and_in_cell() {
        let sft = Sft::golden_default();
        let w = vec![1, 0, 0, 1, 0];
        let x = coded_homoclinic(&sft, &w, (0, 0)).unwrap();
        assert!(sft.is_homoclinic(&x));
        assert_eq!(x.window(-2, 2), w);
    }

    #[test]
    fn random_points_carry_their_word() {
        let sft = Sft::golden_default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w = random_word(sft.coding(), &mut rng, 7);
            let x = random_point_with_word(&sft, &mut rng, &w, 2);
            assert_eq!(x.window(-3, 3), w);
            assert!(sft.dist(&x, &x) == 0.0);
        }
    }
}
