//! Subgroups of `G = Q ⋉ N` as Goursat triplets `(Q_H, N_H, α_H)`.
//!
//! `α_H` is stored as lifts `(g_j, a_j)` of generators of `Q_H`; for
//! `q ∈ Q_H` the lift `a_q` is the N-part of the product of generator powers
//! given by `solve_in_generators`, in generator order.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fg_abelian::{AbelianElement, AbelianSubgroup, FgAbelianGroup, Index};
use crate::lattice::Lattice;
use crate::perm_module::{ModuleElement, Submodule, XPoint};
use crate::wreath::{GroupElement, WreathGroup};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GoursatTriplet {
    qh: AbelianSubgroup,
    nh: Submodule,
    gens: Vec<(AbelianElement, ModuleElement)>,
}

impl GoursatTriplet {
    pub fn new(g: &WreathGroup, gens: Vec<(AbelianElement, ModuleElement)>, nh: Submodule) -> Result<Self> {
        let mut clean = Vec::with_capacity(gens.len());
        for (q, a) in gens {
            clean.push((g.q().reduce(&q)?, g.module().normalize(&a)?));
        }
        let qh = g.q().subgroup(clean.iter().map(|(q, _)| q.clone()));
        Ok(GoursatTriplet { qh, nh, gens: clean })
    }

    /// `H ≤ N`.
    pub fn in_base(g: &WreathGroup, nh: Submodule) -> Self {
        GoursatTriplet { qh: g.q().trivial(), nh, gens: Vec::new() }
    }

    pub fn whole(g: &WreathGroup) -> Result<Self> {
        let gens = g.q().whole().generators().into_iter().map(|q| (q, ModuleElement::zero())).collect();
        Self::new(g, gens, Submodule::full(g.module())?)
    }

    /// Like [`GoursatTriplet::new`] but rejects anything failing [`GoursatTriplet::validate`].
    pub fn new_validated(g: &WreathGroup, gens: Vec<(AbelianElement, ModuleElement)>, nh: Submodule) -> Result<Self> {
        let h = Self::new(g, gens, nh)?;
        let v = h.validate(g);
        if v.is_empty() {
            Ok(h)
        } else {
            Err(Error::Validation(v.join("; ")))
        }
    }

    pub fn qh(&self) -> &AbelianSubgroup {
        &self.qh
    }

    pub fn nh(&self) -> &Submodule {
        &self.nh
    }

    pub fn lifts(&self) -> &[(AbelianElement, ModuleElement)] {
        &self.gens
    }

    fn gen_qs(&self) -> Vec<AbelianElement> {
        self.gens.iter().map(|(q, _)| q.clone()).collect()
    }

    fn word(&self, g: &WreathGroup, coeffs: &[i64]) -> GroupElement {
        let mut acc = g.identity();
        for ((q, a), &c) in self.gens.iter().zip(coeffs) {
            if c != 0 {
                let x = GroupElement { q: q.clone(), n: a.clone() };
                acc = g.multiply(&acc, &g.power(&x, c));
            }
        }
        acc
    }

    /// `a_q` with `α_H(q) = (q, a_q)N_H`.
    pub fn a_q(&self, g: &WreathGroup, q: &[i64]) -> Result<ModuleElement> {
        let c = self.qh.solve_in_generators(&self.gen_qs(), q)?;
        Ok(self.word(g, &c).n)
    }

    pub fn contains(&self, g: &WreathGroup, x: &GroupElement) -> bool {
        if !self.qh.contains(&x.q) {
            return false;
        }
        let a = self.a_q(g, &x.q).expect("q lies in Q_H");
        self.nh.contains(g.module(), &g.module().sub(&x.n, &a))
    }

    /// Lists violated conditions; empty means the triplet defines a subgroup.
    pub fn validate(&self, g: &WreathGroup) -> Vec<String> {
        let pm = g.module();
        let mut out = Vec::new();
        for (q, _) in &self.gens {
            if !self.nh.is_invariant(pm, q) {
                out.push(format!("N_H is not invariant under generator {q:?}"));
            }
        }
        for (j, (qj, aj)) in self.gens.iter().enumerate() {
            for (k, (qk, ak)) in self.gens.iter().enumerate().skip(j + 1) {
                let x = GroupElement { q: qj.clone(), n: aj.clone() };
                let y = GroupElement { q: qk.clone(), n: ak.clone() };
                let c = g.commutator(&x, &y);
                if !self.nh.contains(pm, &c.n) {
                    out.push(format!("lifts of generators {j} and {k} do not commute modulo N_H"));
                }
            }
        }
        let qs = self.gen_qs();
        if !qs.is_empty() {
            let relations = Lattice::preimage(&qs, g.q().trivial().lattice());
            for c in relations.rows() {
                let w = self.word(g, c);
                if !self.nh.contains(pm, &w.n) {
                    out.push(format!("relation {c:?} among the generators of Q_H lifts outside N_H"));
                }
            }
        }
        out
    }

    /// Canonical generators with lifts reduced modulo `N_H`; equal subgroups give equal values.
    pub fn canonical(&self, g: &WreathGroup) -> GoursatTriplet {
        let gens = self
            .qh
            .generators()
            .into_iter()
            .map(|q| {
                let a = self.a_q(g, &q).expect("generator lies in Q_H");
                let a = self.nh.reduce(g.module(), &a);
                (q, a)
            })
            .collect();
        GoursatTriplet { qh: self.qh.clone(), nh: self.nh.clone(), gens }
    }

    /// `H^x = x^{-1} H x`.
    pub fn conjugate(&self, g: &WreathGroup, x: &GroupElement) -> Result<GoursatTriplet> {
        let nh = self.nh.act(g.module(), &x.q)?;
        let gens = self
            .gens
            .iter()
            .map(|(q, a)| {
                let c = g.conjugate(&GroupElement { q: q.clone(), n: a.clone() }, x);
                (c.q, c.n)
            })
            .collect();
        Ok(GoursatTriplet { qh: self.qh.clone(), nh, gens })
    }

    pub fn index(&self) -> Index {
        self.qh.index().times(self.nh.index())
    }

    /// `[N : N_N(H)]` with `N_N(H) = ∩_j {m : m − m^{g_j} ∈ N_H}`.
    pub fn normalizer_in_n(&self, g: &WreathGroup) -> Result<Submodule> {
        let pm = g.module();
        let mut acc = Submodule::full(pm)?;
        for q in self.qh.generators() {
            let pre = self.nh.commutator_preimage(pm, &q)?;
            acc = acc.intersect(pm, &pre)?;
        }
        Ok(acc)
    }

    pub fn normalizer_index_in_n(&self, g: &WreathGroup) -> Result<Index> {
        Ok(self.normalizer_in_n(g)?.index())
    }

    /// `m ∈ N_N(H)`, tested by conjugating the generator lifts.
    pub fn normalized_by(&self, g: &WreathGroup, m: &ModuleElement) -> bool {
        let x = g.from_n(m.clone());
        self.gens.iter().all(|(q, a)| {
            let c = g.conjugate(&GroupElement { q: q.clone(), n: a.clone() }, &x);
            self.contains(g, &c)
        })
    }
}

/// `g^f ∈ H` decided as `q ∈ Q_H` and `[g, f] + n − a_q ∈ N_H`.
pub fn conjugate_membership(g: &WreathGroup, x: &GroupElement, f: &GroupElement, h: &GoursatTriplet) -> bool {
    if !h.qh.contains(&x.q) {
        return false;
    }
    let pm = g.module();
    let c = g.commutator(x, f);
    let a = h.a_q(g, &x.q).expect("q lies in Q_H");
    h.nh.contains(pm, &pm.add(&c.n, &pm.sub(&x.n, &a)))
}

fn factorial(j: u32) -> Option<i64> {
    (1..=j as i64).try_fold(1i64, |acc, x| acc.checked_mul(x))
}

/// `L + j!·B^X` for the least `j` separating `T \ L` from `L`, or everything when `T ⊆ L`.
///
/// Vectors are over the coordinate set of `L`; the relation lattice of `B` must
/// already be inside `L`.
pub fn separating_subgroup(l: &Lattice, t: &[Vec<i64>]) -> Result<(Lattice, u32)> {
    let outside: Vec<&Vec<i64>> = t.iter().filter(|v| !l.contains(v)).collect();
    if outside.is_empty() {
        return Ok((Lattice::full(l.dim()), 1));
    }
    let dim = l.dim();
    for j in 1u32.. {
        let f = factorial(j).ok_or_else(|| {
            Error::Unsupported(format!("separation needs j! beyond i64 (j = {j})"))
        })?;
        let scaled = (0..dim).map(|i| {
            let mut v = vec![0; dim];
            v[i] = f;
            v
        });
        let m = Lattice::from_generators(dim, l.rows().iter().cloned().chain(scaled));
        if outside.iter().all(|v| !m.contains(v)) {
            return Ok((m, j));
        }
    }
    unreachable!()
}

/// `E = B_B(k, Δ)`, handled coordinatewise so it is never materialized.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueBox {
    pub b: FgAbelianGroup,
    pub k: i64,
}

impl ValueBox {
    pub fn new(b: &FgAbelianGroup, k: i64) -> Self {
        ValueBox { b: b.clone(), k }
    }

    pub fn size(&self) -> BigUint {
        BigUint::from(self.k as u64).pow(self.b.free_rank() as u32) * BigUint::from(self.b.torsion_order())
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        self.b.box_contains(self.k, v)
    }

    /// `|{e ∈ E : v + e ∈ E}|`.
    pub fn overlap(&self, v: &[i64]) -> BigUint {
        let d = self.b.free_rank();
        let mut acc = BigUint::from(self.b.torsion_order());
        for &c in &v[..d] {
            let o = (self.k as u64).saturating_sub(c.unsigned_abs());
            acc *= BigUint::from(o);
        }
        acc
    }

    fn coordinate_sizes(&self) -> Vec<u64> {
        let d = self.b.free_rank();
        (0..d).map(|_| self.k as u64).chain(self.b.torsion().iter().map(|&m| m as u64)).collect()
    }

    /// The `idx`-th value, coordinates in mixed radix.
    pub fn nth(&self, mut idx: u64) -> Vec<i64> {
        let d = self.b.free_rank();
        let lo = *FgAbelianGroup::box_range(self.k).start();
        self.coordinate_sizes()
            .iter()
            .enumerate()
            .map(|(c, &s)| {
                let x = (idx % s) as i64;
                idx /= s;
                if c < d {
                    lo + x
                } else {
                    x
                }
            })
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<i64> {
        let d = self.b.free_rank();
        let lo = *FgAbelianGroup::box_range(self.k).start();
        self.coordinate_sizes()
            .iter()
            .enumerate()
            .map(|(c, &s)| {
                let x = rng.random_range(0..s) as i64;
                if c < d {
                    lo + x
                } else {
                    x
                }
            })
            .collect()
    }
}

/// `F = Î·E^Z`: `r ∈ I` lifted with zero N-part, times functions `Z → E`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductTransversal {
    pub i_set: Vec<AbelianElement>,
    pub z: Vec<XPoint>,
    pub e: ValueBox,
}

impl ProductTransversal {
    pub fn t_size(&self) -> BigUint {
        self.e.size().pow(self.z.len() as u32)
    }

    pub fn size(&self) -> BigUint {
        BigUint::from(self.i_set.len()) * self.t_size()
    }

    /// Exact size when it fits the bound.
    pub fn small_size(&self, bound: u64) -> Option<u64> {
        self.size().to_u64().filter(|&s| s <= bound)
    }

    /// The `idx`-th element of `T`.
    pub fn nth_t(&self, g: &WreathGroup, mut idx: u64) -> ModuleElement {
        let pm = g.module();
        let base = self.e.size().to_u64().expect("value box fits u64");
        let mut n = ModuleElement::zero();
        for x in &self.z {
            let v = self.e.nth(idx % base);
            idx /= base;
            n = pm.add(&n, &pm.single(x, &v));
        }
        n
    }

    /// The `idx`-th element in mixed-radix order (I slowest).
    pub fn nth(&self, g: &WreathGroup, idx: u64) -> GroupElement {
        let per_r = self.t_size().to_u64().expect("enumerable transversal");
        let r = (idx / per_r) as usize;
        GroupElement { q: self.i_set[r].clone(), n: self.nth_t(g, idx % per_r) }
    }

    pub fn iter<'a>(&'a self, g: &'a WreathGroup) -> Result<impl Iterator<Item = GroupElement> + 'a> {
        let n = self
            .size()
            .to_u64()
            .ok_or_else(|| Error::IndexTooLarge { index: self.size().to_string(), bound: u64::MAX })?;
        Ok((0..n).map(move |i| self.nth(g, i)))
    }

    /// Uniform sample: each coordinate drawn independently.
    pub fn sample<R: Rng + ?Sized>(&self, g: &WreathGroup, rng: &mut R) -> GroupElement {
        let pm = g.module();
        let r = rng.random_range(0..self.i_set.len());
        let mut n = ModuleElement::zero();
        for x in &self.z {
            let v = self.e.sample(rng);
            n = pm.add(&n, &pm.single(x, &v));
        }
        GroupElement { q: self.i_set[r].clone(), n }
    }

    /// Membership in `T = E^Z`.
    pub fn t_contains(&self, n: &ModuleElement) -> bool {
        n.support().iter().all(|(p, v)| self.z.binary_search(p).is_ok() && self.e.contains(v))
    }

    pub fn contains(&self, x: &GroupElement) -> bool {
        self.i_set.contains(&x.q) && self.t_contains(&x.n)
    }

    /// Multiplicity of `F` against `K` when both factor checks pass exhaustively.
    ///
    /// `I` is tested against `Q_K` by coset counting; `E^Z` against `N_K` by
    /// enumerating it (only when its size is at most `bound`).
    pub fn multiplicity(&self, g: &WreathGroup, k: &GoursatTriplet, bound: u64) -> Result<Option<u64>> {
        let qi = crate::fg_abelian::is_finite_to_one_transversal(&self.i_set, k.qh())?;
        let Some(qi) = qi else { return Ok(None) };
        let Index::Finite(nidx) = k.nh().index() else {
            return Err(Error::Unsupported("N_K has infinite index".into()));
        };
        let t = self
            .t_size()
            .to_u64()
            .filter(|&x| x <= bound)
            .ok_or_else(|| Error::IndexTooLarge { index: self.t_size().to_string(), bound })?;
        let pm = g.module();
        let mut counts: BTreeMap<ModuleElement, u64> = BTreeMap::new();
        for i in 0..t {
            let m = self.nth_t(g, i);
            *counts.entry(k.nh().reduce(pm, &m)).or_default() += 1;
        }
        if counts.len() as u64 != nidx {
            return Ok(None);
        }
        let first = *counts.values().next().expect("nonempty");
        if counts.values().any(|&c| c != first) {
            return Ok(None);
        }
        Ok(Some(qi * first))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm_module::Submodule;

    fn lamp() -> WreathGroup {
        WreathGroup::lamplighter()
    }

    fn poly(g: &WreathGroup, exps: &[i64]) -> ModuleElement {
        let pm = g.module();
        exps.iter().fold(ModuleElement::zero(), |acc, &e| pm.add(&acc, &pm.delta(&pm.qset().point(0, &[e]))))
    }

    #[test]
    fn validate_lamplighter_examples() {
        let g = lamp();
        let nh = Submodule::laurent_poly(g.module(), &[1, 1, 0, 1]).unwrap();
        let h = GoursatTriplet::new(&g, vec![(vec![1], poly(&g, &[0]))], nh).unwrap();
        assert!(h.validate(&g).is_empty());
    }

    #[test]
    fn validate_torsion_relation() {
        let g = WreathGroup::lamplighter_quotient(2);
        let pm = g.module();
        let x0 = pm.qset().point(0, &[0]);
        let x1 = pm.qset().point(0, &[1]);
        let a = pm.delta(&x0);
        let diag = pm.add(&pm.delta(&x0), &pm.delta(&x1));
        let nh = Submodule::finite_x(pm, &[diag]).unwrap();
        let h = GoursatTriplet::new(&g, vec![(vec![1], a.clone())], nh).unwrap();
        assert!(h.validate(&g).is_empty());
        let zero = Submodule::finite_x(pm, &[]).unwrap();
        let bad = GoursatTriplet::new(&g, vec![(vec![1], a)], zero).unwrap();
        let v = bad.validate(&g);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("relation"));
    }

    #[test]
    fn membership_examples() {
        let g = lamp();
        let h = GoursatTriplet::new(
            &g,
            vec![(vec![2], ModuleElement::zero())],
            Submodule::laurent_poly(g.module(), &[1, 1, 0, 1]).unwrap(),
        )
        .unwrap();
        assert!(h.contains(&g, &g.identity()));
        assert!(h.contains(&g, &g.from_q(&[2])));
        assert!(!h.contains(&g, &g.from_q(&[1])));
        let ideal = GoursatTriplet::in_base(&g, Submodule::laurent_poly(g.module(), &[1, 1]).unwrap());
        assert!(ideal.contains(&g, &g.from_n(poly(&g, &[0, 5]))));
        assert!(!ideal.contains(&g, &g.from_n(poly(&g, &[0]))));
    }

    #[test]
    fn conjugation_examples() {
        let g = lamp();
        let ideal = GoursatTriplet::in_base(&g, Submodule::laurent_poly(g.module(), &[1, 1]).unwrap());
        assert_eq!(ideal.conjugate(&g, &g.identity()).unwrap().canonical(&g), ideal.canonical(&g));
        assert_eq!(ideal.conjugate(&g, &g.from_q(&[5])).unwrap().canonical(&g), ideal.canonical(&g));
    }

    #[test]
    fn index_examples() {
        let g = lamp();
        assert_eq!(GoursatTriplet::whole(&g).unwrap().index(), Index::Finite(1));
        let h = GoursatTriplet::new(
            &g,
            vec![(vec![2], ModuleElement::zero())],
            Submodule::laurent_poly(g.module(), &[1, 1, 0, 1]).unwrap(),
        )
        .unwrap();
        assert_eq!(h.index(), Index::Finite(16));
        let ideal = GoursatTriplet::in_base(&g, Submodule::laurent_poly(g.module(), &[1, 1]).unwrap());
        assert_eq!(ideal.index(), Index::Infinite);
    }

    #[test]
    fn conjugate_membership_agrees_with_conjugation() {
        let g = lamp();
        let h = GoursatTriplet::new(
            &g,
            vec![(vec![1], poly(&g, &[0]))],
            Submodule::laurent_poly(g.module(), &[1, 1, 0, 1]).unwrap(),
        )
        .unwrap();
        let xs = [g.from_q(&[1]), GroupElement { q: vec![1], n: poly(&g, &[0]) }, g.from_n(poly(&g, &[0, 2]))];
        let fs = [g.identity(), g.from_q(&[3]), GroupElement { q: vec![-2], n: poly(&g, &[1, 4]) }];
        for x in &xs {
            for f in &fs {
                assert_eq!(conjugate_membership(&g, x, f, &h), h.contains(&g, &g.conjugate(x, f)));
            }
        }
    }

    #[test]
    fn normalizer_examples() {
        let g = lamp();
        let ideal = GoursatTriplet::in_base(&g, Submodule::laurent_poly(g.module(), &[1, 1]).unwrap());
        assert_eq!(ideal.normalizer_index_in_n(&g).unwrap(), Index::Finite(1));
        let h = GoursatTriplet::new(
            &g,
            vec![(vec![1], ModuleElement::zero())],
            Submodule::laurent_poly(g.module(), &[1, 1, 0, 1]).unwrap(),
        )
        .unwrap();
        assert!(h.normalizer_index_in_n(&g).unwrap().is_finite());
        let h0 = GoursatTriplet::new(&g, vec![(vec![1], ModuleElement::zero())], Submodule::zero(g.module()).unwrap())
            .unwrap();
        assert_eq!(h0.normalizer_index_in_n(&g).unwrap(), Index::Infinite);
    }

    #[test]
    fn separation_examples() {
        let zero_z = Lattice::zero(1);
        let (m, j) = separating_subgroup(&zero_z, &[vec![2]]).unwrap();
        assert_eq!((m.rows().to_vec(), j), (vec![vec![6]], 3));
        let zero_z4 = Lattice::from_generators(1, [vec![4]]);
        let (m, j) = separating_subgroup(&zero_z4, &[vec![2]]).unwrap();
        assert_eq!((m.rows().to_vec(), j), (vec![vec![4]], 4));
        let (m, _) = separating_subgroup(&zero_z4, &[vec![0], vec![4]]).unwrap();
        assert_eq!(m, Lattice::full(1));
    }

    #[test]
    fn product_transversal_trivial_case() {
        let g = lamp();
        let f = ProductTransversal { i_set: vec![vec![0]], z: Vec::new(), e: ValueBox::new(g.b(), 1) };
        assert_eq!(f.size(), BigUint::from(1u32));
        let whole = GoursatTriplet::whole(&g).unwrap();
        assert_eq!(f.multiplicity(&g, &whole, 100).unwrap(), Some(1));
    }
}
