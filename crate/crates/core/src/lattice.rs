//! Integer lattices in `Z^n`, stored in row-style Hermite normal form.
//!
//! Every subgroup of a finitely generated abelian group (and every finite
//! rank submodule of a permutational module) is handled through its full
//! preimage lattice, so equality of subgroups reduces to equality of HNF.
//!
//! Arithmetic is done in `i128` internally and narrowed back to `i64`; an
//! overflow there is a bug in the caller's sizing and panics.

use serde::{Deserialize, Serialize};

type Wide = i128;

fn narrow(x: Wide) -> i64 {
    i64::try_from(x).expect("lattice entry overflowed i64")
}

fn widen(rows: &[Vec<i64>]) -> Vec<Vec<Wide>> {
    rows.iter().map(|r| r.iter().map(|&x| x as Wide).collect()).collect()
}

fn row_sub(target: &mut [Wide], src: &[Wide], k: Wide) {
    if k == 0 {
        return;
    }
    for (t, s) in target.iter_mut().zip(src) {
        *t -= k * s;
    }
}

/// Row echelon (Hermite) reduction of `mat` on its first `ncols` columns.
///
/// The same row operations are applied to `transform` when given. Returns the
/// rank; rows `rank..` of `mat` are zero on the pivot columns afterwards.
fn echelon(mat: &mut [Vec<Wide>], ncols: usize, mut transform: Option<&mut [Vec<Wide>]>) -> usize {
    let m = mat.len();
    let mut r = 0;
    for c in 0..ncols {
        if r == m {
            break;
        }
        let mut found = false;
        loop {
            let piv = (r..m)
                .filter(|&i| mat[i][c] != 0)
                .min_by_key(|&i| (mat[i][c].abs(), i));
            let Some(piv) = piv else { break };
            found = true;
            mat.swap(r, piv);
            if let Some(t) = transform.as_deref_mut() {
                t.swap(r, piv);
            }
            let mut clean = true;
            for i in r + 1..m {
                if mat[i][c] != 0 {
                    let q = mat[i][c] / mat[r][c];
                    let (head, tail) = mat.split_at_mut(i);
                    row_sub(&mut tail[0], &head[r], q);
                    if let Some(t) = transform.as_deref_mut() {
                        let (th, tt) = t.split_at_mut(i);
                        row_sub(&mut tt[0], &th[r], q);
                    }
                    if mat[i][c] != 0 {
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
        if !found {
            continue;
        }
        if mat[r][c] < 0 {
            for x in mat[r].iter_mut() {
                *x = -*x;
            }
            if let Some(t) = transform.as_deref_mut() {
                for x in t[r].iter_mut() {
                    *x = -*x;
                }
            }
        }
        for i in 0..r {
            let q = mat[i][c].div_euclid(mat[r][c]);
            if q != 0 {
                let (head, tail) = mat.split_at_mut(r);
                row_sub(&mut head[i], &tail[0], q);
                if let Some(t) = transform.as_deref_mut() {
                    let (th, tt) = t.split_at_mut(r);
                    row_sub(&mut th[i], &tt[0], q);
                }
            }
        }
        r += 1;
    }
    r
}

fn identity(m: usize) -> Vec<Vec<Wide>> {
    (0..m)
        .map(|i| (0..m).map(|j| Wide::from(i == j)).collect())
        .collect()
}

/// Basis of the left kernel `{y : y·A = 0}` of the `m × ncols` matrix `a`.
pub fn left_kernel(a: &[Vec<i64>], ncols: usize) -> Vec<Vec<i64>> {
    let m = a.len();
    let mut mat = widen(a);
    let mut u = identity(m);
    let rank = echelon(&mut mat, ncols, Some(&mut u));
    u[rank..]
        .iter()
        .map(|r| r.iter().map(|&x| narrow(x)).collect())
        .collect()
}

/// A sublattice of `Z^n` in canonical Hermite normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    rows: Vec<Vec<i64>>,
}

impl Lattice {
    pub fn zero(dim: usize) -> Self {
        Lattice { dim, rows: Vec::new() }
    }

    pub fn full(dim: usize) -> Self {
        let rows = (0..dim)
            .map(|i| (0..dim).map(|j| i64::from(i == j)).collect())
            .collect();
        Lattice { dim, rows }
    }

    pub fn from_generators<I>(dim: usize, gens: I) -> Self
    where
        I: IntoIterator<Item = Vec<i64>>,
    {
        let gens: Vec<Vec<i64>> = gens.into_iter().collect();
        for g in &gens {
            assert_eq!(g.len(), dim, "generator length does not match lattice dimension");
        }
        let mut mat = widen(&gens);
        let rank = echelon(&mut mat, dim, None);
        let rows = mat[..rank]
            .iter()
            .map(|r| r.iter().map(|&x| narrow(x)).collect())
            .collect();
        Lattice { dim, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn pivot(row: &[i64]) -> usize {
        row.iter().position(|&x| x != 0).expect("HNF rows are nonzero")
    }

    pub fn pivots(&self) -> Vec<(usize, i64)> {
        self.rows
            .iter()
            .map(|r| {
                let p = Self::pivot(r);
                (p, r[p])
            })
            .collect()
    }

    /// Canonical residue of `v` modulo the lattice: pivot coordinates land in
    /// `[0, pivot)`, non-pivot coordinates are left alone.
    pub fn reduce(&self, v: &[i64]) -> Vec<i64> {
        assert_eq!(v.len(), self.dim);
        let mut w: Vec<Wide> = v.iter().map(|&x| x as Wide).collect();
        for row in &self.rows {
            let p = Self::pivot(row);
            let q = w[p].div_euclid(row[p] as Wide);
            if q != 0 {
                for (x, &r) in w.iter_mut().zip(row) {
                    *x -= q * r as Wide;
                }
            }
        }
        w.into_iter().map(narrow).collect()
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Coordinates of `v` in the HNF basis, if `v` lies in the lattice.
    pub fn coordinates(&self, v: &[i64]) -> Option<Vec<i64>> {
        assert_eq!(v.len(), self.dim);
        let mut w: Vec<Wide> = v.iter().map(|&x| x as Wide).collect();
        let mut coeffs = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let p = Self::pivot(row);
            let piv = row[p] as Wide;
            if w[p] % piv != 0 {
                return None;
            }
            let q = w[p] / piv;
            for (x, &r) in w.iter_mut().zip(row) {
                *x -= q * r as Wide;
            }
            coeffs.push(narrow(q));
        }
        w.iter().all(|&x| x == 0).then_some(coeffs)
    }

    /// `[Z^n : L]`, or `None` when the lattice is not of full rank.
    pub fn index(&self) -> Option<u64> {
        if self.rank() < self.dim {
            return None;
        }
        let mut acc: u64 = 1;
        for (_, p) in self.pivots() {
            acc = acc.checked_mul(p as u64).expect("lattice index overflowed u64");
        }
        Some(acc)
    }

    pub fn sum(&self, other: &Lattice) -> Lattice {
        assert_eq!(self.dim, other.dim);
        Lattice::from_generators(self.dim, self.rows.iter().chain(&other.rows).cloned())
    }

    pub fn intersect(&self, other: &Lattice) -> Lattice {
        assert_eq!(self.dim, other.dim);
        if self.rows.is_empty() || other.rows.is_empty() {
            return Lattice::zero(self.dim);
        }
        let stacked: Vec<Vec<i64>> = self.rows.iter().chain(&other.rows).cloned().collect();
        let k = self.rows.len();
        let kernel = left_kernel(&stacked, self.dim);
        let gens = kernel.iter().map(|y| combine(&y[..k], &self.rows, self.dim));
        Lattice::from_generators(self.dim, gens)
    }

    pub fn is_sublattice_of(&self, other: &Lattice) -> bool {
        self.rows.iter().all(|r| other.contains(r))
    }

    /// `[sup : self]` for `self ⊆ sup`; `None` when infinite.
    pub fn index_in(&self, sup: &Lattice) -> Option<u64> {
        assert!(self.is_sublattice_of(sup), "index_in needs a sublattice");
        if self.rank() < sup.rank() {
            return None;
        }
        let coords: Vec<Vec<i64>> = self
            .rows
            .iter()
            .map(|r| sup.coordinates(r).expect("sublattice row"))
            .collect();
        Lattice::from_generators(sup.rank(), coords).index()
    }

    /// Smallest `m ≥ 1` with `m·sup ⊆ self`, or `None` if the index is infinite.
    pub fn exponent_in(&self, sup: &Lattice) -> Option<u64> {
        let idx = self.index_in(sup)?;
        (1..=idx).find(|&m| {
            sup.rows
                .iter()
                .all(|r| self.contains(&r.iter().map(|&x| x * m as i64).collect::<Vec<_>>()))
        })
    }

    /// `{v ∈ Z^a : v·Φ ∈ target}` where `map_rows` are the images of the unit
    /// vectors of `Z^a`.
    pub fn preimage(map_rows: &[Vec<i64>], target: &Lattice) -> Lattice {
        let a = map_rows.len();
        let stacked: Vec<Vec<i64>> = map_rows.iter().chain(&target.rows).cloned().collect();
        let kernel = left_kernel(&stacked, target.dim);
        Lattice::from_generators(a, kernel.into_iter().map(|y| y[..a].to_vec()))
    }

    /// Image of the lattice under `v ↦ v·Φ`.
    pub fn image(&self, map_rows: &[Vec<i64>], target_dim: usize) -> Lattice {
        assert_eq!(map_rows.len(), self.dim);
        Lattice::from_generators(
            target_dim,
            self.rows.iter().map(|r| combine(r, map_rows, target_dim)),
        )
    }

    /// Saturation `(L ⊗ Q) ∩ Z^n`.
    pub fn saturation(&self) -> Lattice {
        let dual = right_kernel(&self.rows, self.dim);
        if dual.is_empty() {
            return Lattice::full(self.dim);
        }
        // v ∈ sat(L) iff v·w = 0 for every w in the right kernel
        let cols: Vec<Vec<i64>> = (0..self.dim)
            .map(|i| dual.iter().map(|w| w[i]).collect())
            .collect();
        Lattice::from_generators(self.dim, left_kernel(&cols, dual.len()))
    }

    /// A basis of a complement `C` with `Z^n = L ⊕ C`; requires `L` saturated.
    pub fn complement(&self) -> Vec<Vec<i64>> {
        debug_assert_eq!(self.saturation(), *self, "complement needs a saturated lattice");
        let dual = right_kernel(&self.rows, self.dim);
        if dual.is_empty() {
            return Vec::new();
        }
        let mut cols: Vec<Vec<Wide>> = (0..self.dim)
            .map(|i| dual.iter().map(|w| w[i] as Wide).collect())
            .collect();
        let mut u = identity(self.dim);
        let rank = echelon(&mut cols, dual.len(), Some(&mut u));
        debug_assert_eq!(rank, dual.len());
        let basis: Vec<Vec<i64>> = u[..rank]
            .iter()
            .map(|r| r.iter().map(|&x| narrow(x)).collect())
            .collect();
        // canonical choice: reduce each complement vector modulo L, then HNF
        let reduced: Vec<Vec<i64>> = basis.iter().map(|b| self.reduce(b)).collect();
        Lattice::from_generators(self.dim, reduced).rows
    }
}

/// Basis of `{w : A·w = 0}` for the row matrix `a`.
pub fn right_kernel(a: &[Vec<i64>], ncols: usize) -> Vec<Vec<i64>> {
    let transposed: Vec<Vec<i64>> = (0..ncols).map(|j| a.iter().map(|r| r[j]).collect()).collect();
    left_kernel(&transposed, a.len())
}

/// `Σ coeffs[j]·rows[j]`.
pub fn combine(coeffs: &[i64], rows: &[Vec<i64>], dim: usize) -> Vec<i64> {
    let mut out = vec![0 as Wide; dim];
    for (&c, row) in coeffs.iter().zip(rows) {
        if c != 0 {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += c as Wide * x as Wide;
            }
        }
    }
    out.into_iter().map(narrow).collect()
}

/// Integer coefficients `c` with `Σ c_j·gens_j = v`, if any exist.
///
/// The solution is the one produced by the echelon transform, so it is
/// deterministic for a fixed generator list.
pub fn solve(gens: &[Vec<i64>], v: &[i64]) -> Option<Vec<i64>> {
    let dim = v.len();
    let m = gens.len();
    if m == 0 {
        return v.iter().all(|&x| x == 0).then(Vec::new);
    }
    let mut mat = widen(gens);
    let mut u = identity(m);
    let rank = echelon(&mut mat, dim, Some(&mut u));
    let h = Lattice {
        dim,
        rows: mat[..rank]
            .iter()
            .map(|r| r.iter().map(|&x| narrow(x)).collect())
            .collect(),
    };
    let y = h.coordinates(v)?;
    let mut c = vec![0 as Wide; m];
    for (yr, urow) in y.iter().zip(&u[..rank]) {
        for (cj, &ux) in c.iter_mut().zip(urow) {
            *cj += *yr as Wide * ux;
        }
    }
    Some(c.into_iter().map(narrow).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hnf_of_diagonal_generators() {
        let l = Lattice::from_generators(2, vec![vec![2, 0], vec![0, 3]]);
        assert_eq!(l.rows(), &[vec![2, 0], vec![0, 3]]);
        assert_eq!(l.index(), Some(6));
        assert!(l.contains(&[2, 3]));
        assert!(!l.contains(&[1, 3]));
    }

    #[test]
    fn gcd_in_rank_one() {
        let l = Lattice::from_generators(1, vec![vec![4], vec![6]]);
        assert_eq!(l.rows(), &[vec![2]]);
    }

    #[test]
    fn intersection_is_lcm() {
        let a = Lattice::from_generators(1, vec![vec![4]]);
        let b = Lattice::from_generators(1, vec![vec![6]]);
        assert_eq!(a.intersect(&b).rows(), &[vec![12]]);
    }

    #[test]
    fn intersection_with_zero_rank() {
        let a = Lattice::from_generators(2, vec![vec![1, 1]]);
        let b = Lattice::from_generators(2, vec![vec![1, 0]]);
        assert_eq!(a.intersect(&b), Lattice::zero(2));
    }

    #[test]
    fn solve_unimodular_pair() {
        let c = solve(&[vec![1, 0], vec![1, 1]], &[0, 1]).unwrap();
        assert_eq!(c, vec![-1, 1]);
        assert!(solve(&[vec![2]], &[3]).is_none());
    }

    #[test]
    fn saturation_and_complement() {
        let l = Lattice::from_generators(2, vec![vec![2, 4]]);
        let s = l.saturation();
        assert_eq!(s.rows(), &[vec![1, 2]]);
        let c = s.complement();
        assert_eq!(c.len(), 1);
        let all = Lattice::from_generators(2, s.rows().iter().cloned().chain(c));
        assert_eq!(all, Lattice::full(2));
    }

    #[test]
    fn preimage_of_even_sum() {
        // v ↦ v0 + v1, preimage of 2Z
        let l = Lattice::preimage(&[vec![1], vec![1]], &Lattice::from_generators(1, vec![vec![2]]));
        assert_eq!(l.index(), Some(2));
        assert!(l.contains(&[1, 1]));
        assert!(!l.contains(&[1, 0]));
    }

    #[test]
    fn relative_index_and_exponent() {
        let sup = Lattice::from_generators(2, vec![vec![1, 0]]);
        let sub = Lattice::from_generators(2, vec![vec![6, 0]]);
        assert_eq!(sub.index_in(&sup), Some(6));
        assert_eq!(sub.exponent_in(&sup), Some(6));
        assert_eq!(Lattice::zero(2).index_in(&sup), None);
    }
}
