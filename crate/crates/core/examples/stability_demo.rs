//! Permutations `b, t` from the regular action of `Z/2 ≀ Z/4` and their relation defects.

use cosofic::stability::{evaluate_word, hamming, regular_lamplighter_assignment, stability_demo, Permutation, Word};

fn main() -> cosofic::Result<()> {
    let (_, a) = regular_lamplighter_assignment(4, 10_000)?;
    println!("degree n = {}", a.degree);
    for j in [1, 2, 5] {
        let w = Word::lamplighter_relation(j);
        let p = evaluate_word(&a, &w)?;
        println!("{w}: d_n to identity = {}", hamming(&p, &Permutation::identity(a.degree))?);
    }
    let rep = stability_demo(4, 12, 1, "b", 3, 10_000)?;
    println!("one transposition on b: d(b, b') = {}", rep.dist_b);
    for r in rep.rows.iter().take(4) {
        println!("  j = {}: perturbed defect {} <= bound {}", r.j, r.perturbed_defect, r.lipschitz_bound);
    }
    println!("all within bound: {}", rep.passed());
    Ok(())
}
