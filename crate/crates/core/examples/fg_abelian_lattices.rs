//! Boxes, balls, transversal multiplicities and the splitting `Q ⊇ U ⊕ V`.

use cosofic::fg_abelian::{decompose, is_finite_to_one_transversal, FgAbelianGroup};

fn main() -> cosofic::Result<()> {
    let q = FgAbelianGroup::new(2, vec![6])?;
    println!("Q = Z^2 + Z/6, dim {}", q.dim());

    let b = q.box_elements(3)?;
    println!("|box(Q, 3)| = {}", b.len());
    println!("|ball(2)| = {}", q.ball(2).len());
    println!("seminorm of (3, -1, 4) = {}", q.seminorm(&[3, -1, 4]));

    let s = q.subgroup([vec![3, 0, 0], vec![0, 3, 0], vec![0, 0, 1]]);
    println!("index of 3Z^2 + Z/6 = {}", s.index());
    match is_finite_to_one_transversal(&b, &s)? {
        Some(m) => println!("box(Q, 3) meets every coset {m} times"),
        None => println!("box(Q, 3) is not a finite-to-one transversal"),
    }

    let z3 = FgAbelianGroup::free(3);
    let r = z3.subgroup([vec![2, 0, 0]]);
    let stabs = vec![z3.subgroup([vec![0, 1, 0]]), z3.trivial()];
    let d = decompose(&z3, &r, &stabs)?;
    d.verify(&stabs)?;
    println!("R = 2Z e1 in Z^3: V basis {:?}, m = {}, m_l = {:?}, k = {}", d.v_basis, d.m, d.m_l, d.k);
    Ok(())
}
