//! The split group `G = Q ⋉ B^X`.
//!
//! Multiplication is `(q1, n1)(q2, n2) = (q1 + q2, n1^{q2} + n2)`, and the
//! commutator is `[g, f] = g^{-1} f^{-1} g f`, so that `g^f = g[g, f]`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fg_abelian::{AbelianElement, FgAbelianGroup};
use crate::perm_module::{ModuleElement, PermModule, QSet};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    pub q: AbelianElement,
    pub n: ModuleElement,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WreathGroup {
    module: PermModule,
}

impl WreathGroup {
    pub fn new(q: FgAbelianGroup, b: FgAbelianGroup, x: QSet) -> Self {
        assert_eq!(x.group(), &q, "the Q-set must be over Q");
        WreathGroup { module: PermModule::new(x, b) }
    }

    /// `B ≀ Q` with the regular action.
    pub fn regular(b: FgAbelianGroup, q: FgAbelianGroup) -> Self {
        let x = QSet::regular(&q);
        Self::new(q, b, x)
    }

    /// `Z/2 ≀ Z`.
    pub fn lamplighter() -> Self {
        Self::regular(FgAbelianGroup::cyclic(2).expect("Z/2"), FgAbelianGroup::free(1))
    }

    /// `Z/2 ≀ Z/k`; `k = 1` gives `Z/2`.
    pub fn lamplighter_quotient(k: i64) -> Self {
        let q = if k == 1 {
            FgAbelianGroup::new(0, Vec::new()).expect("trivial group")
        } else {
            FgAbelianGroup::cyclic(k).expect("k ≥ 2")
        };
        Self::regular(FgAbelianGroup::cyclic(2).expect("Z/2"), q)
    }

    pub fn module(&self) -> &PermModule {
        &self.module
    }

    pub fn q(&self) -> &FgAbelianGroup {
        self.module.q()
    }

    pub fn b(&self) -> &FgAbelianGroup {
        self.module.base()
    }

    pub fn x(&self) -> &QSet {
        self.module.qset()
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement { q: self.q().zero(), n: ModuleElement::zero() }
    }

    pub fn element(&self, q: &[i64], n: &ModuleElement) -> Result<GroupElement> {
        Ok(GroupElement { q: self.q().reduce(q)?, n: self.module.normalize(n)? })
    }

    pub fn from_q(&self, q: &[i64]) -> GroupElement {
        GroupElement { q: self.q().canon(q.to_vec()), n: ModuleElement::zero() }
    }

    pub fn from_n(&self, n: ModuleElement) -> GroupElement {
        GroupElement { q: self.q().zero(), n }
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let m = &self.module;
        GroupElement { q: self.q().add(&a.q, &b.q), n: m.add(&m.act(&b.q, &a.n), &b.n) }
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        let m = &self.module;
        let mq = self.q().neg(&a.q);
        GroupElement { n: m.neg(&m.act(&mq, &a.n)), q: mq }
    }

    pub fn product<'a>(&self, items: impl IntoIterator<Item = &'a GroupElement>) -> GroupElement {
        items.into_iter().fold(self.identity(), |acc, g| self.multiply(&acc, g))
    }

    pub fn power(&self, g: &GroupElement, k: i64) -> GroupElement {
        let base = if k < 0 { self.inverse(g) } else { g.clone() };
        let mut result = self.identity();
        let mut sq = base;
        let mut e = k.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = self.multiply(&result, &sq);
            }
            sq = self.multiply(&sq, &sq);
            e >>= 1;
        }
        result
    }

    /// `g^f = f^{-1} g f`.
    pub fn conjugate(&self, g: &GroupElement, f: &GroupElement) -> GroupElement {
        self.product([&self.inverse(f), g, f])
    }

    /// `[g, f] = g^{-1} f^{-1} g f`.
    pub fn commutator(&self, g: &GroupElement, f: &GroupElement) -> GroupElement {
        self.product([&self.inverse(g), &self.inverse(f), g, f])
    }

    /// `[q, m] − [r, n]` for `g = (q, n)`, `f = (r, m)`, by the closed formula.
    pub fn commutator_closed_form(&self, g: &GroupElement, f: &GroupElement) -> ModuleElement {
        let m = &self.module;
        let qm = m.sub(&f.n, &m.act(&g.q, &f.n));
        let rn = m.sub(&g.n, &m.act(&f.q, &g.n));
        m.sub(&qm, &rn)
    }

    pub fn is_identity(&self, g: &GroupElement) -> bool {
        self.q().is_zero(&g.q) && g.n.is_zero()
    }

    /// Every element; only for finite groups, in (Q, lexicographic N) order.
    pub fn elements(&self) -> Result<Vec<GroupElement>> {
        let qs = self.q().elements()?;
        let points = self.x().points()?;
        let bs = self.b().elements()?;
        let mut ns = vec![ModuleElement::zero()];
        for x in &points {
            ns = ns
                .into_iter()
                .flat_map(|n| {
                    bs.iter()
                        .map(|b| self.module.add(&n, &self.module.single(x, b)))
                        .collect::<Vec<_>>()
                })
                .collect();
        }
        Ok(qs
            .iter()
            .flat_map(|q| ns.iter().map(move |n| GroupElement { q: q.clone(), n: n.clone() }))
            .collect())
    }
}
