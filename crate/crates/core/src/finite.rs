//! Brute-force oracles for finite wreath products.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fg_abelian::{AbelianSubgroup, Index};
use crate::goursat::GoursatTriplet;
use crate::perm_module::{ModuleElement, Submodule};
use crate::wreath::{GroupElement, WreathGroup};

/// Sorted element indices of a subset.
pub type Subset = Vec<usize>;

pub struct FiniteGroup {
    g: WreathGroup,
    elems: Vec<GroupElement>,
    lookup: HashMap<GroupElement, usize>,
    mul: Vec<Vec<usize>>,
    inv: Vec<usize>,
}

impl FiniteGroup {
    pub fn new(g: &WreathGroup, bound: u64) -> Result<Self> {
        let elems = g.elements()?;
        if elems.len() as u64 > bound {
            return Err(Error::IndexTooLarge { index: elems.len().to_string(), bound });
        }
        let lookup: HashMap<GroupElement, usize> =
            elems.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let mul = elems
            .iter()
            .map(|a| elems.iter().map(|b| lookup[&g.multiply(a, b)]).collect())
            .collect();
        let inv = elems.iter().map(|a| lookup[&g.inverse(a)]).collect();
        Ok(FiniteGroup { g: g.clone(), elems, lookup, mul, inv })
    }

    pub fn group(&self) -> &WreathGroup {
        &self.g
    }

    pub fn order(&self) -> usize {
        self.elems.len()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elems
    }

    pub fn index_of(&self, x: &GroupElement) -> usize {
        self.lookup[x]
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mul[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn closure(&self, gens: impl IntoIterator<Item = usize>) -> Subset {
        let e = self.lookup[&self.g.identity()];
        let gens: Vec<usize> = gens.into_iter().collect();
        let mut seen = BTreeSet::from([e]);
        let mut queue = VecDeque::from([e]);
        while let Some(x) = queue.pop_front() {
            for &s in &gens {
                let y = self.mul[x][s];
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        seen.into_iter().collect()
    }

    pub fn subgroups(&self) -> Vec<Subset> {
        let trivial = self.closure([]);
        let mut found = BTreeSet::from([trivial.clone()]);
        let mut queue = VecDeque::from([trivial]);
        while let Some(s) = queue.pop_front() {
            let members: BTreeSet<usize> = s.iter().copied().collect();
            for x in 0..self.order() {
                if members.contains(&x) {
                    continue;
                }
                let t = self.closure(s.iter().copied().chain([x]));
                if found.insert(t.clone()) {
                    queue.push_back(t);
                }
            }
        }
        found.into_iter().collect()
    }

    /// `x^{-1} S x`.
    pub fn conjugate(&self, s: &Subset, x: usize) -> Subset {
        let xi = self.inv[x];
        let mut out: Subset = s.iter().map(|&h| self.mul[self.mul[xi][h]][x]).collect();
        out.sort_unstable();
        out
    }

    pub fn normalizer(&self, s: &Subset) -> Subset {
        (0..self.order()).filter(|&x| &self.conjugate(s, x) == s).collect()
    }

    /// Left cosets `xS`, each sorted, listed in order of their least element.
    pub fn left_cosets(&self, s: &Subset) -> Vec<Subset> {
        let mut seen = vec![false; self.order()];
        let mut out = Vec::new();
        for x in 0..self.order() {
            if seen[x] {
                continue;
            }
            let mut c: Subset = s.iter().map(|&h| self.mul[x][h]).collect();
            c.sort_unstable();
            for &y in &c {
                seen[y] = true;
            }
            out.push(c);
        }
        out
    }

    pub fn members_of(&self, h: &GoursatTriplet) -> Subset {
        (0..self.order()).filter(|&i| h.contains(&self.g, &self.elems[i])).collect()
    }
}

fn abelian_subgroups(g: &WreathGroup) -> Result<Vec<AbelianSubgroup>> {
    let q = g.q();
    let elems = q.elements()?;
    let mut found = BTreeSet::from([q.trivial()]);
    let mut queue = VecDeque::from([q.trivial()]);
    while let Some(s) = queue.pop_front() {
        for x in &elems {
            if s.contains(x) {
                continue;
            }
            let t = q.subgroup(s.generators().into_iter().chain([x.clone()]));
            if found.insert(t.clone()) {
                queue.push_back(t);
            }
        }
    }
    Ok(found.into_iter().collect())
}

fn base_subgroups(g: &WreathGroup) -> Result<Vec<Submodule>> {
    let pm = g.module();
    let ns: Vec<ModuleElement> = g.elements()?.into_iter().filter(|e| g.q().is_zero(&e.q)).map(|e| e.n).collect();
    let start = Submodule::finite_x(pm, &[])?;
    let mut gens_of: BTreeMap<Vec<Vec<i64>>, Vec<ModuleElement>> = BTreeMap::new();
    let key = |s: &Submodule| match s {
        Submodule::FiniteX { lattice, .. } => lattice.rows().to_vec(),
        _ => unreachable!("finite X gives lattice submodules"),
    };
    gens_of.insert(key(&start), Vec::new());
    let mut queue = VecDeque::from([(start, Vec::<ModuleElement>::new())]);
    let mut out = Vec::new();
    while let Some((s, gens)) = queue.pop_front() {
        for n in &ns {
            if s.contains(pm, n) {
                continue;
            }
            let mut more = gens.clone();
            more.push(n.clone());
            let t = Submodule::finite_x(pm, &more)?;
            if let std::collections::btree_map::Entry::Vacant(v) = gens_of.entry(key(&t)) {
                v.insert(more.clone());
                queue.push_back((t, more));
            }
        }
        out.push(s);
    }
    Ok(out)
}

/// Every validated triplet of a finite wreath product, canonicalized and deduplicated.
pub fn enumerate_triplets(g: &WreathGroup) -> Result<Vec<GoursatTriplet>> {
    let pm = g.module();
    let qs = abelian_subgroups(g)?;
    let nsubs = base_subgroups(g)?;
    let all_n: Vec<ModuleElement> =
        g.elements()?.into_iter().filter(|e| g.q().is_zero(&e.q)).map(|e| e.n).collect();
    let mut out = BTreeMap::new();
    for qh in &qs {
        let gens = qh.generators();
        for nh in &nsubs {
            if !gens.iter().all(|q| nh.is_invariant(pm, q)) {
                continue;
            }
            let reps: Vec<ModuleElement> =
                all_n.iter().map(|n| nh.reduce(pm, n)).collect::<BTreeSet<_>>().into_iter().collect();
            let mut choice = vec![0usize; gens.len()];
            loop {
                let lifts = gens.iter().cloned().zip(choice.iter().map(|&c| reps[c].clone())).collect();
                let h = GoursatTriplet::new(g, lifts, nh.clone())?;
                if h.validate(g).is_empty() {
                    let c = h.canonical(g);
                    out.insert(serde_json::to_string(&c)?, c);
                }
                // odometer over lift choices
                let mut pos = 0;
                while pos < choice.len() {
                    choice[pos] += 1;
                    if choice[pos] < reps.len() {
                        break;
                    }
                    choice[pos] = 0;
                    pos += 1;
                }
                if pos == choice.len() {
                    break;
                }
            }
        }
    }
    Ok(out.into_values().collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct AuditReport {
    pub k: i64,
    pub order: usize,
    pub brute_force_subgroups: usize,
    pub triplets: usize,
    pub mismatches: Vec<String>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.brute_force_subgroups == self.triplets
    }
}

/// Compares brute-force subgroups of `Z/2 ≀ Z/k` with validated triplets:
/// counts, memberships, indices and conjugates.
///
/// `mutate` flips one membership answer on the triplet side, as a negative control.
pub fn goursat_audit(k: i64, bound: u64, mutate: bool) -> Result<AuditReport> {
    let g = WreathGroup::lamplighter_quotient(k);
    let fg = FiniteGroup::new(&g, bound)?;
    let brute: BTreeSet<Subset> = fg.subgroups().into_iter().collect();
    let triplets = enumerate_triplets(&g)?;
    let mut mismatches = Vec::new();
    let mut member_sets = BTreeMap::new();
    for (t_idx, h) in triplets.iter().enumerate() {
        let mut members = fg.members_of(h);
        if mutate && t_idx == 0 {
            let last = fg.order() - 1;
            match members.binary_search(&last) {
                Ok(p) => {
                    members.remove(p);
                }
                Err(p) => members.insert(p, last),
            }
        }
        if !brute.contains(&members) {
            mismatches.push(format!("triplet {t_idx} has no matching brute-force subgroup"));
            continue;
        }
        let expected = Index::Finite((fg.order() / members.len()) as u64);
        if h.index() != expected {
            mismatches.push(format!("triplet {t_idx}: index {} but brute force gives {expected}", h.index()));
        }
        if let Some(prev) = member_sets.insert(members.clone(), t_idx) {
            mismatches.push(format!("triplets {prev} and {t_idx} describe the same subgroup"));
        }
        for x in 0..fg.order() {
            let conj = h.conjugate(&g, &fg.elements()[x])?;
            if fg.members_of(&conj) != fg.conjugate(&members, x) {
                mismatches.push(format!("triplet {t_idx}: conjugate by element {x} disagrees"));
            }
        }
    }
    for s in &brute {
        if !member_sets.contains_key(s) {
            mismatches.push(format!("brute-force subgroup of order {} has no triplet", s.len()));
        }
    }
    Ok(AuditReport {
        k,
        order: fg.order(),
        brute_force_subgroups: brute.len(),
        triplets: triplets.len(),
        mismatches,
    })
}
