//! Finitely generated abelian groups `Z^d ⊕ Z/m_1 ⊕ … ⊕ Z/m_t`.
//!
//! Elements are plain coordinate vectors of length `d + t`; subgroups are
//! their preimage lattices in `Z^{d+t}`, which always contain the relation
//! lattice spanned by `m_j·e_{d+j}`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{self, Lattice};

pub type AbelianElement = Vec<i64>;

/// Index of a subgroup, possibly infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Index {
    Finite(u64),
    Infinite,
}

impl Index {
    pub fn from_option(v: Option<u64>) -> Self {
        v.map_or(Index::Infinite, Index::Finite)
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Index::Finite(n) => Some(n),
            Index::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Index::Finite(_))
    }

    pub fn times(self, other: Index) -> Index {
        match (self, other) {
            (Index::Finite(a), Index::Finite(b)) => {
                Index::Finite(a.checked_mul(b).expect("index product overflowed u64"))
            }
            _ => Index::Infinite,
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Finite(n) => write!(f, "{n}"),
            Index::Infinite => write!(f, "infinite"),
        }
    }
}

#[derive(Deserialize)]
struct GroupDescriptor {
    free_rank: usize,
    #[serde(default)]
    torsion: Vec<i64>,
    #[serde(default)]
    labels: Vec<String>,
}

impl TryFrom<GroupDescriptor> for FgAbelianGroup {
    type Error = Error;

    fn try_from(d: GroupDescriptor) -> Result<Self> {
        let g = FgAbelianGroup::new(d.free_rank, d.torsion)?;
        if d.labels.is_empty() {
            Ok(g)
        } else {
            g.with_labels(d.labels)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "GroupDescriptor")]
pub struct FgAbelianGroup {
    free_rank: usize,
    torsion: Vec<i64>,
    labels: Vec<String>,
}

impl FgAbelianGroup {
    pub fn new(free_rank: usize, torsion: Vec<i64>) -> Result<Self> {
        if let Some(&m) = torsion.iter().find(|&&m| m < 2) {
            return Err(Error::Malformed(format!("torsion modulus {m} is below 2")));
        }
        if torsion.windows(2).any(|w| w[1] % w[0] != 0) {
            return Err(Error::Malformed(format!(
                "torsion moduli {torsion:?} are not in invariant-factor order"
            )));
        }
        let labels = if free_rank == 1 {
            vec!["t".to_string()]
        } else {
            (1..=free_rank).map(|i| format!("t{i}")).collect()
        };
        Ok(FgAbelianGroup { free_rank, torsion, labels })
    }

    pub fn free(d: usize) -> Self {
        Self::new(d, Vec::new()).expect("free group is well formed")
    }

    pub fn cyclic(m: i64) -> Result<Self> {
        Self::new(0, vec![m])
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.free_rank {
            return Err(Error::Malformed(format!(
                "{} labels given for free rank {}",
                labels.len(),
                self.free_rank
            )));
        }
        let mut seen = labels.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != labels.len() {
            return Err(Error::Malformed("basis labels must be distinct".into()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn free_rank(&self) -> usize {
        self.free_rank
    }

    pub fn torsion(&self) -> &[i64] {
        &self.torsion
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Number of coordinates `d + t`.
    pub fn dim(&self) -> usize {
        self.free_rank + self.torsion.len()
    }

    pub fn torsion_order(&self) -> u64 {
        self.torsion.iter().map(|&m| m as u64).product()
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank == 0
    }

    pub fn order(&self) -> Index {
        if self.is_finite() {
            Index::Finite(self.torsion_order())
        } else {
            Index::Infinite
        }
    }

    pub fn check(&self, q: &[i64]) -> Result<()> {
        if q.len() != self.dim() {
            return Err(Error::Malformed(format!(
                "element of length {} in a group of dimension {}",
                q.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Canonical form: torsion coordinates reduced into `[0, m_j)`.
    pub fn reduce(&self, q: &[i64]) -> Result<AbelianElement> {
        self.check(q)?;
        Ok(self.canon(q.to_vec()))
    }

    pub(crate) fn canon(&self, mut q: Vec<i64>) -> AbelianElement {
        for (x, &m) in q[self.free_rank..].iter_mut().zip(&self.torsion) {
            *x = x.rem_euclid(m);
        }
        q
    }

    pub fn zero(&self) -> AbelianElement {
        vec![0; self.dim()]
    }

    pub fn add(&self, a: &[i64], b: &[i64]) -> AbelianElement {
        self.canon(a.iter().zip(b).map(|(x, y)| x + y).collect())
    }

    pub fn sub(&self, a: &[i64], b: &[i64]) -> AbelianElement {
        self.canon(a.iter().zip(b).map(|(x, y)| x - y).collect())
    }

    pub fn neg(&self, a: &[i64]) -> AbelianElement {
        self.canon(a.iter().map(|x| -x).collect())
    }

    pub fn scale(&self, k: i64, a: &[i64]) -> AbelianElement {
        self.canon(a.iter().map(|x| k * x).collect())
    }

    pub fn is_zero(&self, a: &[i64]) -> bool {
        self.canon(a.to_vec()).iter().all(|&x| x == 0)
    }

    pub fn relation_rows(&self) -> Vec<Vec<i64>> {
        let dim = self.dim();
        self.torsion
            .iter()
            .enumerate()
            .map(|(j, &m)| {
                let mut r = vec![0; dim];
                r[self.free_rank + j] = m;
                r
            })
            .collect()
    }

    pub fn subgroup<I>(&self, gens: I) -> AbelianSubgroup
    where
        I: IntoIterator<Item = AbelianElement>,
    {
        let dim = self.dim();
        let rows: Vec<Vec<i64>> = gens
            .into_iter()
            .inspect(|g| assert_eq!(g.len(), dim, "generator dimension mismatch"))
            .chain(self.relation_rows())
            .collect();
        AbelianSubgroup {
            ambient: self.clone(),
            lattice: Lattice::from_generators(dim, rows),
        }
    }

    pub fn whole(&self) -> AbelianSubgroup {
        AbelianSubgroup { ambient: self.clone(), lattice: Lattice::full(self.dim()) }
    }

    pub fn trivial(&self) -> AbelianSubgroup {
        self.subgroup(std::iter::empty())
    }

    /// `Q[k] = kQ`.
    pub fn power_subgroup(&self, k: i64) -> Result<AbelianSubgroup> {
        if k < 1 {
            return Err(Error::Malformed(format!("power subgroup needs k ≥ 1, got {k}")));
        }
        let dim = self.dim();
        Ok(self.subgroup((0..dim).map(|i| {
            let mut r = vec![0; dim];
            r[i] = k;
            r
        })))
    }

    /// `max |n_σ|` over the free coordinates.
    pub fn seminorm(&self, q: &[i64]) -> u64 {
        q[..self.free_rank].iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn torsion_elements(&self) -> Vec<Vec<i64>> {
        let mut out = vec![Vec::new()];
        for &m in &self.torsion {
            out = out
                .into_iter()
                .flat_map(|p| {
                    (0..m).map(move |x| {
                        let mut v = p.clone();
                        v.push(x);
                        v
                    })
                })
                .collect();
        }
        out
    }

    /// Free coordinates of the box `B_Q(k, Σ)` along one axis.
    pub fn box_range(k: i64) -> std::ops::RangeInclusive<i64> {
        let lo = -((k + 1) / 2) + 1;
        let hi = k / 2;
        lo..=hi
    }

    pub fn box_contains(&self, k: i64, q: &[i64]) -> bool {
        let r = Self::box_range(k);
        q[..self.free_rank].iter().all(|x| r.contains(x))
    }

    /// `B_Q(k, Σ)` in lexicographic order on (free coords, torsion coords).
    pub fn box_elements(&self, k: i64) -> Result<Vec<AbelianElement>> {
        if k < 1 {
            return Err(Error::Malformed(format!("box needs k ≥ 1, got {k}")));
        }
        let mut free: Vec<Vec<i64>> = vec![Vec::new()];
        for _ in 0..self.free_rank {
            free = free
                .into_iter()
                .flat_map(|p| {
                    Self::box_range(k).map(move |x| {
                        let mut v = p.clone();
                        v.push(x);
                        v
                    })
                })
                .collect();
        }
        let tors = self.torsion_elements();
        Ok(free
            .iter()
            .flat_map(|f| {
                tors.iter().map(move |t| {
                    let mut v = f.clone();
                    v.extend_from_slice(t);
                    v
                })
            })
            .collect())
    }

    /// Every element; only for finite groups.
    pub fn elements(&self) -> Result<Vec<AbelianElement>> {
        if !self.is_finite() {
            return Err(Error::Unsupported("cannot list an infinite group".into()));
        }
        Ok(self.torsion_elements())
    }

    /// Elements with seminorm at most `r` (torsion arbitrary).
    pub fn ball(&self, r: i64) -> Vec<AbelianElement> {
        let mut free: Vec<Vec<i64>> = vec![Vec::new()];
        for _ in 0..self.free_rank {
            free = free
                .into_iter()
                .flat_map(|p| {
                    (-r..=r).map(move |x| {
                        let mut v = p.clone();
                        v.push(x);
                        v
                    })
                })
                .collect();
        }
        let tors = self.torsion_elements();
        free.iter()
            .flat_map(|f| {
                tors.iter().map(move |t| {
                    let mut v = f.clone();
                    v.extend_from_slice(t);
                    v
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbelianSubgroup {
    ambient: FgAbelianGroup,
    lattice: Lattice,
}

impl AbelianSubgroup {
    pub fn ambient(&self) -> &FgAbelianGroup {
        &self.ambient
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn from_lattice(ambient: &FgAbelianGroup, lattice: &Lattice) -> Self {
        ambient.subgroup(lattice.rows().iter().cloned())
    }

    pub fn contains(&self, q: &[i64]) -> bool {
        self.lattice.contains(q)
    }

    /// Canonical representative of the coset `q + S`.
    pub fn residue(&self, q: &[i64]) -> AbelianElement {
        self.lattice.reduce(q)
    }

    pub fn index(&self) -> Index {
        Index::from_option(self.lattice.index())
    }

    pub fn sum(&self, other: &AbelianSubgroup) -> AbelianSubgroup {
        AbelianSubgroup { ambient: self.ambient.clone(), lattice: self.lattice.sum(&other.lattice) }
    }

    pub fn intersect(&self, other: &AbelianSubgroup) -> AbelianSubgroup {
        AbelianSubgroup {
            ambient: self.ambient.clone(),
            lattice: self.lattice.intersect(&other.lattice),
        }
    }

    pub fn is_subgroup_of(&self, other: &AbelianSubgroup) -> bool {
        self.lattice.is_sublattice_of(&other.lattice)
    }

    /// `[sup : self]`.
    pub fn index_in(&self, sup: &AbelianSubgroup) -> Index {
        Index::from_option(self.lattice.index_in(&sup.lattice))
    }

    /// Least `m ≥ 1` with `sup[m] ≤ self`.
    pub fn exponent_in(&self, sup: &AbelianSubgroup) -> Option<u64> {
        self.lattice.exponent_in(&sup.lattice)
    }

    /// Nonzero HNF rows, reduced into the ambient group.
    pub fn generators(&self) -> Vec<AbelianElement> {
        self.lattice
            .rows()
            .iter()
            .map(|r| self.ambient.canon(r.clone()))
            .filter(|r| r.iter().any(|&x| x != 0))
            .collect()
    }

    pub fn scale(&self, k: i64) -> AbelianSubgroup {
        self.ambient.subgroup(self.generators().iter().map(|g| self.ambient.scale(k, g)))
    }

    /// Coefficients `c` with `Σ c_j·gens_j = q` in `Q`.
    pub fn solve_in_generators(&self, gens: &[AbelianElement], q: &[i64]) -> Result<Vec<i64>> {
        if !self.contains(q) {
            return Err(Error::NotAMember(format!("{q:?} is not in the subgroup")));
        }
        let rows: Vec<Vec<i64>> = gens.iter().cloned().chain(self.ambient.relation_rows()).collect();
        let c = lattice::solve(&rows, q).ok_or_else(|| {
            Error::Malformed(format!("{q:?} is not in the span of the given generators"))
        })?;
        Ok(c[..gens.len()].to_vec())
    }
}

/// Per-coset count of a finite multiset against a finite-index subgroup, if constant.
pub fn is_finite_to_one_transversal(f: &[AbelianElement], s: &AbelianSubgroup) -> Result<Option<u64>> {
    let Index::Finite(idx) = s.index() else {
        return Err(Error::Unsupported("transversal test needs a finite-index subgroup".into()));
    };
    let mut counts: BTreeMap<AbelianElement, u64> = BTreeMap::new();
    for q in f {
        *counts.entry(s.residue(q)).or_default() += 1;
    }
    if counts.len() as u64 != idx {
        return Ok(None);
    }
    let mut it = counts.values();
    let first = *it.next().expect("index is at least one");
    Ok(it.all(|&c| c == first).then_some(first))
}

/// Output of the structure-theorem splitting used by the stage construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionScheme {
    pub r: AbelianSubgroup,
    pub u: AbelianSubgroup,
    pub v: AbelianSubgroup,
    /// Free basis of `V`.
    pub v_basis: Vec<AbelianElement>,
    /// `(W_l, W'_l)` per orbit.
    pub w: Vec<(AbelianSubgroup, AbelianSubgroup)>,
    pub m: u64,
    pub m_l: Vec<u64>,
    /// Least `m'` with `W_l[m'] ≤ S_l`.
    pub m_prime_l: Vec<u64>,
    pub k: u64,
}

fn lcm(a: u64, b: u64) -> u64 {
    num_integer::Integer::lcm(&a, &b)
}

pub fn decompose(
    q: &FgAbelianGroup,
    r: &AbelianSubgroup,
    stabilizers: &[AbelianSubgroup],
) -> Result<DecompositionScheme> {
    let dim = q.dim();
    let u_lat = r.lattice().saturation();
    let u = AbelianSubgroup::from_lattice(q, &u_lat);
    let v_basis: Vec<Vec<i64>> = u_lat.complement();
    let v = q.subgroup(v_basis.iter().cloned());
    let m = r
        .exponent_in(&u)
        .ok_or_else(|| Error::Validation("R does not have finite index in its saturation".into()))?;
    let mut w = Vec::new();
    let mut m_l = Vec::new();
    let mut m_prime_l = Vec::new();
    for (l, s) in stabilizers.iter().enumerate() {
        let rs = r.sum(s);
        let sat = rs.lattice().saturation();
        // W_l and W'_l in the coordinates of the free basis of V
        let w_coords = Lattice::preimage(&v_basis, &sat);
        let w_prime_coords = w_coords.complement();
        let lift = |rows: &[Vec<i64>]| -> AbelianSubgroup {
            q.subgroup(rows.iter().map(|c| lattice::combine(c, &v_basis, dim)))
        };
        let wl = lift(w_coords.rows());
        let wpl = lift(&w_prime_coords);
        let uw = u.sum(&wl);
        let ml = rs.exponent_in(&uw).ok_or_else(|| {
            Error::Validation(format!("R + S_{l} does not have finite index in U ⊕ W_{l}"))
        })?;
        let mp = s.intersect(&wl).exponent_in(&wl).ok_or_else(|| {
            Error::Unsupported(format!(
                "no power of W_{l} lies in the stabilizer S_{l}, so the windows Y_i are not transversals"
            ))
        })?;
        w.push((wl, wpl));
        m_l.push(ml);
        m_prime_l.push(mp);
    }
    let k = m_l.iter().chain(&m_prime_l).fold(m, |acc, &x| lcm(acc, x));
    Ok(DecompositionScheme { r: r.clone(), u, v, v_basis, w, m, m_l, m_prime_l, k })
}

impl DecompositionScheme {
    /// Checks the defining containments by direct membership tests.
    pub fn verify(&self, stabilizers: &[AbelianSubgroup]) -> Result<()> {
        let q = self.r.ambient();
        let fail = |msg: String| Err(Error::Validation(msg));
        if !self.r.is_subgroup_of(&self.u) || !self.u.scale(self.m as i64).is_subgroup_of(&self.r) {
            return fail("U[m] ≤ R ≤ U fails".into());
        }
        if self.u.intersect(&self.v) != q.trivial() || self.u.sum(&self.v) != q.whole() {
            return fail("Q = U ⊕ V fails".into());
        }
        for (l, ((wl, wpl), s)) in self.w.iter().zip(stabilizers).enumerate() {
            if wl.intersect(wpl) != q.trivial() || wl.sum(wpl) != self.v {
                return fail(format!("V = W_{l} ⊕ W'_{l} fails"));
            }
            let rs = self.r.sum(s);
            let uw = self.u.sum(wl);
            if !uw.scale(self.m_l[l] as i64).is_subgroup_of(&rs) {
                return fail(format!("(U ⊕ W_{l})[m_{l}] ≤ R + S_{l} fails"));
            }
            if !rs.is_subgroup_of(&uw) || !rs.index_in(&uw).is_finite() {
                return fail(format!("R + S_{l} is not of finite index in U ⊕ W_{l}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> FgAbelianGroup {
        FgAbelianGroup::free(1)
    }

    #[test]
    fn reduce_examples() {
        let q = FgAbelianGroup::new(1, vec![3]).unwrap();
        assert_eq!(q.reduce(&[5, 7]).unwrap(), vec![5, 1]);
        assert_eq!(q.reduce(&[0, 0]).unwrap(), vec![0, 0]);
        assert!(q.reduce(&[1]).is_err());
        let z4 = FgAbelianGroup::cyclic(4).unwrap();
        assert_eq!(z4.reduce(&[-1]).unwrap(), vec![3]);
    }

    #[test]
    fn bad_moduli_rejected() {
        assert!(FgAbelianGroup::new(0, vec![2, 3]).is_err());
        assert!(FgAbelianGroup::new(0, vec![1]).is_err());
        assert!(FgAbelianGroup::free(2).with_labels(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn subgroup_examples() {
        let s = z().subgroup([vec![2], vec![4]]);
        assert_eq!(s.lattice().rows(), &[vec![2]]);
        let z2 = FgAbelianGroup::free(2);
        let s = z2.subgroup([vec![2, 0], vec![0, 3]]);
        assert_eq!(s.lattice().rows(), &[vec![2, 0], vec![0, 3]]);
        let z6 = FgAbelianGroup::cyclic(6).unwrap();
        let s = z6.subgroup([vec![2]]);
        let members: Vec<i64> = (0..6).filter(|&x| s.contains(&[x])).collect();
        assert_eq!(members, vec![0, 2, 4]);
    }

    #[test]
    fn contains_and_index() {
        let two = z().subgroup([vec![2]]);
        assert!(two.contains(&[4]));
        assert!(!two.contains(&[3]));
        assert_eq!(z().subgroup([vec![3]]).index(), Index::Finite(3));
        let s = FgAbelianGroup::free(2).subgroup([vec![2, 0], vec![0, 3]]);
        assert!(s.contains(&[2, 3]));
        assert_eq!(s.index(), Index::Finite(6));
        assert_eq!(z().trivial().index(), Index::Infinite);
    }

    #[test]
    fn sums_and_intersections() {
        let a = z().subgroup([vec![2]]);
        let b = z().subgroup([vec![3]]);
        assert_eq!(a.sum(&b), z().whole());
        let a = z().subgroup([vec![4]]);
        let b = z().subgroup([vec![6]]);
        assert_eq!(a.intersect(&b), z().subgroup([vec![12]]));
        let q = FgAbelianGroup::new(1, vec![2]).unwrap();
        let s = q.subgroup([vec![2, 0]]).sum(&q.subgroup([vec![0, 1]]));
        assert_eq!(s.index(), Index::Finite(2));
    }

    #[test]
    fn power_subgroups() {
        assert_eq!(z().power_subgroup(3).unwrap().index(), Index::Finite(3));
        let q = FgAbelianGroup::new(1, vec![2]).unwrap();
        let p = q.power_subgroup(2).unwrap();
        assert_eq!(p.index(), Index::Finite(4));
        assert_eq!(p, q.subgroup([vec![2, 0]]));
        assert_eq!(q.power_subgroup(1).unwrap(), q.whole());
        assert!(q.power_subgroup(0).is_err());
    }

    #[test]
    fn seminorm_examples() {
        let q = FgAbelianGroup::new(1, vec![3]).unwrap();
        assert_eq!(q.seminorm(&[5, 2]), 5);
        assert_eq!(q.seminorm(&[0, 2]), 0);
        assert_eq!(FgAbelianGroup::free(2).seminorm(&[-7, 1]), 7);
    }

    #[test]
    fn box_examples() {
        let flat = |v: Vec<Vec<i64>>| v.into_iter().map(|x| x[0]).collect::<Vec<_>>();
        assert_eq!(flat(z().box_elements(4).unwrap()), vec![-1, 0, 1, 2]);
        assert_eq!(flat(z().box_elements(3).unwrap()), vec![-1, 0, 1]);
        let z2 = FgAbelianGroup::cyclic(2).unwrap();
        assert_eq!(flat(z2.box_elements(5).unwrap()), vec![0, 1]);
    }

    #[test]
    fn transversal_examples() {
        let three = z().subgroup([vec![3]]);
        let b = z().box_elements(3).unwrap();
        assert_eq!(is_finite_to_one_transversal(&b, &three).unwrap(), Some(1));
        let six: Vec<_> = (0..6).map(|x| vec![x]).collect();
        assert_eq!(is_finite_to_one_transversal(&six, &three).unwrap(), Some(2));
        let uneven = vec![vec![0], vec![1], vec![1], vec![2]];
        assert_eq!(is_finite_to_one_transversal(&uneven, &three).unwrap(), None);
        assert!(is_finite_to_one_transversal(&b, &z().trivial()).is_err());
    }

    #[test]
    fn solve_examples() {
        let two = z().subgroup([vec![2]]);
        assert_eq!(two.solve_in_generators(&[vec![2]], &[6]).unwrap(), vec![3]);
        let z2 = FgAbelianGroup::free(2);
        let c = z2.whole().solve_in_generators(&[vec![1, 0], vec![1, 1]], &[0, 1]).unwrap();
        assert_eq!(c, vec![-1, 1]);
        assert!(two.solve_in_generators(&[vec![2]], &[3]).is_err());
    }

    #[test]
    fn solve_with_torsion_wraps() {
        let z4 = FgAbelianGroup::cyclic(4).unwrap();
        let c = z4.whole().solve_in_generators(&[vec![3]], &[1]).unwrap();
        assert_eq!(z4.scale(c[0], &[3]), vec![1]);
    }

    #[test]
    fn decompose_examples() {
        let s0 = z().trivial();
        let d = decompose(&z(), &z().trivial(), &[s0.clone()]).unwrap();
        assert_eq!(d.u, z().trivial());
        assert_eq!(d.v, z().whole());
        assert_eq!(d.w[0].0, z().trivial());
        assert_eq!(d.w[0].1, z().whole());
        assert_eq!(d.k, 1);
        d.verify(&[s0.clone()]).unwrap();

        let d = decompose(&z(), &z().subgroup([vec![2]]), &[s0.clone()]).unwrap();
        assert_eq!(d.u, z().whole());
        assert_eq!(d.v, z().trivial());
        assert_eq!((d.m, d.k), (2, 2));
        d.verify(&[s0.clone()]).unwrap();

        let d = decompose(&z(), &z().whole(), &[s0.clone()]).unwrap();
        assert_eq!((d.u.clone(), d.v.clone(), d.k), (z().whole(), z().trivial(), 1));
    }

    #[test]
    fn decompose_with_torsion_stabilizer() {
        // R = T in Z ⊕ Z/2 with a diagonal stabilizer needs W[2] ≤ S
        let q = FgAbelianGroup::new(1, vec![2]).unwrap();
        let r = q.subgroup([vec![0, 1]]);
        let s = q.subgroup([vec![1, 1]]);
        let d = decompose(&q, &r, &[s.clone()]).unwrap();
        assert_eq!(d.m_prime_l, vec![2]);
        assert_eq!(d.k, 2);
        d.verify(&[s]).unwrap();
    }
}
