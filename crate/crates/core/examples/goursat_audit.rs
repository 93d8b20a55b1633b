//! Subgroups of `Z/2 ≀ Z/k` by brute force against Goursat triplets.

use cosofic::finite::goursat_audit;

fn main() -> cosofic::Result<()> {
    for k in 1..=3 {
        let r = goursat_audit(k, 10_000, false)?;
        println!("k = {k}: |G| = {}, {} subgroups, {} triplets, passed = {}", r.order, r.brute_force_subgroups, r.triplets, r.passed());
    }
    let r = goursat_audit(2, 10_000, true)?;
    println!("with one flipped membership: passed = {}, {} mismatches", r.passed(), r.mismatches.len());
    Ok(())
}
