//! Goursat triplets in the lamplighter: membership, conjugation, normalizers.

use cosofic::goursat::{conjugate_membership, GoursatTriplet};
use cosofic::perm_module::Submodule;
use cosofic::wreath::WreathGroup;

fn main() -> cosofic::Result<()> {
    let g = WreathGroup::lamplighter();
    let pm = g.module();
    let d = |c: i64| pm.delta(&g.x().point(0, &[c]));

    let h = GoursatTriplet::in_base(&g, Submodule::laurent_poly(pm, &[1, 1])?);
    println!("H = {}", h.nh().describe());
    println!("index of H: {}", h.index());

    let pair = g.from_n(pm.add(&d(0), &d(1)));
    let single = g.from_n(d(0));
    println!("δ0 + δ1 in H: {}", h.contains(&g, &pair));
    println!("δ0 in H: {}", h.contains(&g, &single));

    let t = g.from_q(&[1]);
    println!("[t, δ0] = {}", serde_json::to_string(&g.commutator(&t, &single).n)?);
    println!("(δ0 + δ1)^t in H: {}", conjugate_membership(&g, &pair, &t, &h));

    // Q_H = 2Z lifted through δ0 with N_H = ideal(1 + t + t^3)
    let k = GoursatTriplet::new_validated(&g, vec![(vec![2], d(0))], Submodule::laurent_poly(pm, &[1, 1, 0, 1])?)?;
    println!("K has index {} and normalizer index {} in N", k.index(), k.normalizer_index_in_n(&g)?);
    let kt = k.conjugate(&g, &t)?;
    println!("K^t == K canonically: {}", kt.canonical(&g) == k.canonical(&g));
    Ok(())
}
