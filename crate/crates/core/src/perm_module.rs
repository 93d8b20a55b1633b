//! Q-sets with finitely many orbits and the permutational module `N = B^X`.
//!
//! Action convention: `(n^q)(x) = n(q·x)`, so the support of `n^q` is the
//! support of `n` translated by `−q`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fg_abelian::{AbelianElement, AbelianSubgroup, FgAbelianGroup, Index};
use crate::lattice::Lattice;
use crate::poly::{self, Poly};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct XPoint {
    pub orbit: usize,
    pub coset: AbelianElement,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QSet {
    q: FgAbelianGroup,
    stabilizers: Vec<AbelianSubgroup>,
}

impl QSet {
    pub fn new(q: FgAbelianGroup, stabilizers: Vec<AbelianSubgroup>) -> Result<Self> {
        if stabilizers.is_empty() {
            return Err(Error::Malformed("a Q-set needs at least one orbit".into()));
        }
        if stabilizers.iter().any(|s| s.ambient() != &q) {
            return Err(Error::Malformed("stabilizer lives in a different group".into()));
        }
        Ok(QSet { q, stabilizers })
    }

    /// `Q` acting on itself by translation.
    pub fn regular(q: &FgAbelianGroup) -> Self {
        QSet { q: q.clone(), stabilizers: vec![q.trivial()] }
    }

    pub fn group(&self) -> &FgAbelianGroup {
        &self.q
    }

    pub fn orbits(&self) -> usize {
        self.stabilizers.len()
    }

    pub fn stabilizers(&self) -> &[AbelianSubgroup] {
        &self.stabilizers
    }

    pub fn point(&self, orbit: usize, coset: &[i64]) -> XPoint {
        XPoint { orbit, coset: self.stabilizers[orbit].residue(coset) }
    }

    pub fn basepoint(&self, orbit: usize) -> XPoint {
        self.point(orbit, &self.q.zero())
    }

    pub fn act_point(&self, q: &[i64], x: &XPoint) -> XPoint {
        let moved: Vec<i64> = x.coset.iter().zip(q).map(|(a, b)| a + b).collect();
        self.point(x.orbit, &moved)
    }

    pub fn size(&self) -> Index {
        self.stabilizers.iter().fold(Index::Finite(0), |acc, s| match (acc, s.index()) {
            (Index::Finite(a), Index::Finite(b)) => Index::Finite(a + b),
            _ => Index::Infinite,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.size().is_finite()
    }

    /// All points, sorted; only for finite `X`.
    pub fn points(&self) -> Result<Vec<XPoint>> {
        if !self.is_finite() {
            return Err(Error::Unsupported("cannot list the points of an infinite Q-set".into()));
        }
        let dim = self.q.dim();
        let mut out = BTreeSet::new();
        for l in 0..self.orbits() {
            let start = self.basepoint(l);
            let mut seen = BTreeSet::from([start.clone()]);
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for i in 0..dim {
                    for s in [1, -1] {
                        let mut e = vec![0; dim];
                        e[i] = s;
                        let y = self.act_point(&e, &x);
                        if seen.insert(y.clone()) {
                            queue.push_back(y);
                        }
                    }
                }
            }
            out.extend(seen);
        }
        Ok(out.into_iter().collect())
    }

    /// `⊔_l I·x_l`, deduplicated and sorted.
    pub fn window(&self, i_set: &[AbelianElement]) -> Vec<XPoint> {
        let pts: BTreeSet<XPoint> = (0..self.orbits())
            .flat_map(|l| i_set.iter().map(move |q| self.point(l, q)))
            .collect();
        pts.into_iter().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
struct Entry {
    orbit: usize,
    coset: AbelianElement,
    value: AbelianElement,
}

/// Finitely supported function `X → B` with no zero values stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<Entry>", into = "Vec<Entry>")]
pub struct ModuleElement {
    support: BTreeMap<XPoint, AbelianElement>,
}

impl From<Vec<Entry>> for ModuleElement {
    fn from(v: Vec<Entry>) -> Self {
        ModuleElement {
            support: v
                .into_iter()
                .map(|e| (XPoint { orbit: e.orbit, coset: e.coset }, e.value))
                .collect(),
        }
    }
}

impl From<ModuleElement> for Vec<Entry> {
    fn from(m: ModuleElement) -> Self {
        m.support
            .into_iter()
            .map(|(x, value)| Entry { orbit: x.orbit, coset: x.coset, value })
            .collect()
    }
}

impl ModuleElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &BTreeMap<XPoint, AbelianElement> {
        &self.support
    }

    pub fn get(&self, x: &XPoint) -> Option<&AbelianElement> {
        self.support.get(x)
    }
}

/// `N = B^X` together with the data needed to act and canonicalize.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PermModule {
    x: QSet,
    b: FgAbelianGroup,
}

impl PermModule {
    pub fn new(x: QSet, b: FgAbelianGroup) -> Self {
        PermModule { x, b }
    }

    pub fn qset(&self) -> &QSet {
        &self.x
    }

    pub fn base(&self) -> &FgAbelianGroup {
        &self.b
    }

    pub fn q(&self) -> &FgAbelianGroup {
        self.x.group()
    }

    /// `p` when the module is `F_p[t^{±1}]`: `X = Q = Z` regular and `B = Z/p`, `p` prime.
    pub fn laurent_prime(&self) -> Option<u64> {
        let q = self.q();
        let regular = q.free_rank() == 1
            && q.torsion().is_empty()
            && self.x.orbits() == 1
            && self.x.stabilizers()[0] == q.trivial();
        let b = &self.b;
        if !regular || b.free_rank() != 0 || b.torsion().len() != 1 {
            return None;
        }
        let p = b.torsion()[0] as u64;
        is_prime(p).then_some(p)
    }

    pub fn single(&self, x: &XPoint, value: &[i64]) -> ModuleElement {
        let mut s = BTreeMap::new();
        let v = self.b.canon(value.to_vec());
        if v.iter().any(|&c| c != 0) {
            s.insert(self.x.point(x.orbit, &x.coset), v);
        }
        ModuleElement { support: s }
    }

    /// `δ_x` with the first generator of `B` as value.
    pub fn delta(&self, x: &XPoint) -> ModuleElement {
        let mut v = self.b.zero();
        v[0] = 1;
        self.single(x, &v)
    }

    /// Re-canonicalizes keys and values, merging collisions.
    pub fn normalize(&self, n: &ModuleElement) -> Result<ModuleElement> {
        let mut out = ModuleElement::zero();
        for (x, v) in &n.support {
            if x.orbit >= self.x.orbits() {
                return Err(Error::Malformed(format!("orbit {} does not exist", x.orbit)));
            }
            self.q().check(&x.coset)?;
            self.b.check(v)?;
            let single = self.single(x, v);
            out = self.add(&out, &single);
        }
        Ok(out)
    }

    pub fn add(&self, a: &ModuleElement, b: &ModuleElement) -> ModuleElement {
        let mut s = a.support.clone();
        for (x, v) in &b.support {
            let entry = s.entry(x.clone()).or_insert_with(|| self.b.zero());
            *entry = self.b.add(entry, v);
            if entry.iter().all(|&c| c == 0) {
                s.remove(x);
            }
        }
        ModuleElement { support: s }
    }

    pub fn neg(&self, a: &ModuleElement) -> ModuleElement {
        ModuleElement {
            support: a.support.iter().map(|(x, v)| (x.clone(), self.b.neg(v))).collect(),
        }
    }

    pub fn sub(&self, a: &ModuleElement, b: &ModuleElement) -> ModuleElement {
        self.add(a, &self.neg(b))
    }

    pub fn scale(&self, k: i64, a: &ModuleElement) -> ModuleElement {
        ModuleElement {
            support: a
                .support
                .iter()
                .map(|(x, v)| (x.clone(), self.b.scale(k, v)))
                .filter(|(_, v)| v.iter().any(|&c| c != 0))
                .collect(),
        }
    }

    /// `n^q`.
    pub fn act(&self, q: &[i64], n: &ModuleElement) -> ModuleElement {
        if q.iter().all(|&c| c == 0) {
            return n.clone();
        }
        let minus = self.q().neg(q);
        ModuleElement {
            support: n
                .support
                .iter()
                .map(|(x, v)| (self.x.act_point(&minus, x), v.clone()))
                .collect(),
        }
    }

    fn block(&self) -> usize {
        self.b.dim()
    }

    /// Relation lattice generators of `B^P` in the coordinates of `points`.
    pub fn coord_relations(&self, npoints: usize) -> Vec<Vec<i64>> {
        let db = self.block();
        let rel = self.b.relation_rows();
        (0..npoints)
            .flat_map(|i| {
                rel.iter().map(move |r| {
                    let mut v = vec![0; npoints * db];
                    v[i * db..(i + 1) * db].copy_from_slice(r);
                    v
                })
            })
            .collect()
    }

    pub fn vectorize(&self, points: &[XPoint], n: &ModuleElement) -> Result<Vec<i64>> {
        let db = self.block();
        let mut v = vec![0; points.len() * db];
        for (x, val) in &n.support {
            let i = points
                .binary_search(x)
                .map_err(|_| Error::Malformed(format!("point {x:?} is outside the coordinate set")))?;
            v[i * db..(i + 1) * db].copy_from_slice(val);
        }
        Ok(v)
    }

    pub fn devectorize(&self, points: &[XPoint], v: &[i64]) -> ModuleElement {
        let db = self.block();
        let mut out = BTreeMap::new();
        for (i, x) in points.iter().enumerate() {
            let val = self.b.canon(v[i * db..(i + 1) * db].to_vec());
            if val.iter().any(|&c| c != 0) {
                out.insert(x.clone(), val);
            }
        }
        ModuleElement { support: out }
    }

    /// Images of the unit coordinate vectors of `B^P` under `n ↦ n^q`, as rows over `B^P`.
    fn action_rows(&self, points: &[XPoint], q: &[i64], on: &QSet) -> Result<Vec<Vec<i64>>> {
        let db = self.block();
        let minus = self.q().neg(q);
        let mut rows = Vec::with_capacity(points.len() * db);
        for x in points {
            let y = on.act_point(&minus, x);
            let j = points
                .binary_search(&y)
                .map_err(|_| Error::Unsupported("action leaves the coordinate set".into()))?;
            for c in 0..db {
                let mut r = vec![0; points.len() * db];
                r[j * db + c] = 1;
                rows.push(r);
            }
        }
        Ok(rows)
    }

    /// Lattice spanned by `gens` over the coordinates `points`, relations included.
    pub fn span(&self, points: &[XPoint], gens: &[ModuleElement]) -> Result<Lattice> {
        let mut rows = Vec::new();
        for g in gens {
            rows.push(self.vectorize(points, g)?);
        }
        rows.extend(self.coord_relations(points.len()));
        Ok(Lattice::from_generators(points.len() * self.block(), rows))
    }

    /// Laurent form `(lowest exponent, coefficients)` of an element of `F_p[t^{±1}]`.
    pub fn to_laurent(&self, n: &ModuleElement) -> (i64, Poly) {
        let Some(lo) = n.support.keys().map(|x| x.coset[0]).min() else {
            return (0, Vec::new());
        };
        let hi = n.support.keys().map(|x| x.coset[0]).max().unwrap_or(lo);
        let mut coeffs = vec![0u64; (hi - lo + 1) as usize];
        for (x, v) in &n.support {
            coeffs[(x.coset[0] - lo) as usize] = v[0] as u64;
        }
        (lo, coeffs)
    }

    pub fn from_laurent(&self, lo: i64, coeffs: &[u64]) -> ModuleElement {
        let mut out = BTreeMap::new();
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0 {
                out.insert(self.x.point(0, &[lo + i as i64]), vec![c as i64]);
            }
        }
        ModuleElement { support: out }
    }

    /// Restriction of the support to the points of `keep`.
    pub fn restrict(&self, n: &ModuleElement, keep: impl Fn(&XPoint) -> bool) -> ModuleElement {
        ModuleElement {
            support: n.support.iter().filter(|(x, _)| keep(x)).map(|(x, v)| (x.clone(), v.clone())).collect(),
        }
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| p % d != 0)
}

/// `π: X → V\X` and its module-level push.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorMap {
    source: QSet,
    v: AbelianSubgroup,
    target: QSet,
}

impl FactorMap {
    pub fn new(x: &QSet, v: &AbelianSubgroup) -> Self {
        let target = QSet {
            q: x.group().clone(),
            stabilizers: x.stabilizers().iter().map(|s| s.sum(v)).collect(),
        };
        FactorMap { source: x.clone(), v: v.clone(), target }
    }

    pub fn kernel_subgroup(&self) -> &AbelianSubgroup {
        &self.v
    }

    pub fn source(&self) -> &QSet {
        &self.source
    }

    pub fn target(&self) -> &QSet {
        &self.target
    }

    pub fn push_point(&self, x: &XPoint) -> XPoint {
        self.target.point(x.orbit, &x.coset)
    }

    /// Canonical lift of a target point.
    pub fn section(&self, xbar: &XPoint) -> XPoint {
        self.source.point(xbar.orbit, &xbar.coset)
    }

    /// Fiber sums; the result lives in `B^{X̄}`.
    pub fn push(&self, pm: &PermModule, n: &ModuleElement) -> ModuleElement {
        let target = PermModule::new(self.target.clone(), pm.b.clone());
        let mut out = ModuleElement::zero();
        for (x, v) in &n.support {
            out = target.add(&out, &target.single(&self.push_point(x), v));
        }
        out
    }

    pub fn target_module(&self, pm: &PermModule) -> PermModule {
        PermModule::new(self.target.clone(), pm.b.clone())
    }

    /// Rows of the push map `B^P → B^{X̄}` on the given source coordinates.
    fn push_rows(&self, pm: &PermModule, points: &[XPoint], tpoints: &[XPoint]) -> Result<Vec<Vec<i64>>> {
        let db = pm.block();
        let mut rows = Vec::with_capacity(points.len() * db);
        for x in points {
            let y = self.push_point(x);
            let j = tpoints
                .binary_search(&y)
                .map_err(|_| Error::Validation("push left the target coordinates".into()))?;
            for c in 0..db {
                let mut r = vec![0; tpoints.len() * db];
                r[j * db + c] = 1;
                rows.push(r);
            }
        }
        Ok(rows)
    }

    /// The unique preimage of `nbar` supported in the finite set `y`.
    pub fn pull_within(&self, nbar: &ModuleElement, y: &[XPoint]) -> Result<ModuleElement> {
        let mut lift: BTreeMap<XPoint, XPoint> = BTreeMap::new();
        for p in y {
            if lift.insert(self.push_point(p), p.clone()).is_some() {
                return Err(Error::Malformed("Y meets a fiber twice".into()));
            }
        }
        let mut out = BTreeMap::new();
        for (xbar, v) in &nbar.support {
            let x = lift
                .get(xbar)
                .ok_or_else(|| Error::Malformed(format!("Y misses the fiber over {xbar:?}")))?;
            out.insert(x.clone(), v.clone());
        }
        Ok(ModuleElement { support: out })
    }
}

/// A submodule `S ≤ B^X` with an exact membership oracle.
///
/// Constructors always return the canonical form, so derived equality is
/// canonical equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Submodule {
    /// `X` finite; lattice over all points of `X`.
    FiniteX { points: Vec<XPoint>, lattice: Lattice },
    /// Principal ideal of `F_p[t^{±1}]`; `gen` monic with nonzero constant term, empty for zero.
    Laurent { p: u64, gen: Poly },
    /// `π^{-1}(N̄)` for `π: X → V\X` with `V\X` finite.
    Pullback { map: FactorMap, points: Vec<XPoint>, lattice: Lattice },
}

impl Submodule {
    pub fn finite_x(pm: &PermModule, gens: &[ModuleElement]) -> Result<Self> {
        let points = pm.x.points()?;
        let lattice = pm.span(&points, gens)?;
        Ok(Submodule::FiniteX { points, lattice })
    }

    pub fn finite_x_lattice(pm: &PermModule, lattice: Lattice) -> Result<Self> {
        let points = pm.x.points()?;
        Ok(Submodule::FiniteX { points, lattice })
    }

    /// The ideal generated by `gens` (Laurent coefficient lists with lowest exponents).
    pub fn laurent(pm: &PermModule, gens: &[(i64, Poly)]) -> Result<Self> {
        let p = pm.laurent_prime().ok_or_else(|| {
            Error::Unsupported(
                "ideal representation needs X = Q = Z acting regularly and B = Z/p with p prime".into(),
            )
        })?;
        let mut g: Poly = Vec::new();
        for (_, c) in gens {
            let c = poly::trim(c.iter().map(|&x| x % p).collect());
            g = poly::gcd(&g, &poly::normalize_unit(&c, p), p);
        }
        Ok(Submodule::Laurent { p, gen: poly::normalize_unit(&g, p) })
    }

    pub fn laurent_poly(pm: &PermModule, coeffs: &[u64]) -> Result<Self> {
        Self::laurent(pm, &[(0, coeffs.to_vec())])
    }

    pub fn full(pm: &PermModule) -> Result<Self> {
        if let Some(p) = pm.laurent_prime() {
            return Ok(Submodule::Laurent { p, gen: vec![1] });
        }
        if pm.x.is_finite() {
            let points = pm.x.points()?;
            let lattice = Lattice::full(points.len() * pm.block());
            return Ok(Submodule::FiniteX { points, lattice });
        }
        let q = pm.q();
        Self::pullback(pm, &q.whole(), &[], true)
    }

    pub fn zero(pm: &PermModule) -> Result<Self> {
        if let Some(p) = pm.laurent_prime() {
            return Ok(Submodule::Laurent { p, gen: Vec::new() });
        }
        Self::finite_x(pm, &[])
    }

    /// `π_V^{-1}(N̄)` with `N̄` spanned by `gens` (elements of `B^{V\X}`), or all of `B^{V\X}`.
    pub fn pullback(pm: &PermModule, v: &AbelianSubgroup, gens: &[ModuleElement], full: bool) -> Result<Self> {
        let map = FactorMap::new(&pm.x, v);
        let tm = map.target_module(pm);
        let points = map.target.points().map_err(|_| {
            Error::Unsupported("pullback needs a finite quotient V\\X".into())
        })?;
        let lattice = if full {
            Lattice::full(points.len() * pm.block())
        } else {
            tm.span(&points, gens)?
        };
        Self::pullback_lattice(pm, map, points, lattice)
    }

    pub fn pullback_lattice(pm: &PermModule, map: FactorMap, points: Vec<XPoint>, lattice: Lattice) -> Result<Self> {
        let s = Submodule::Pullback { map, points, lattice };
        s.canonicalize(pm)
    }

    fn canonicalize(self, pm: &PermModule) -> Result<Self> {
        let Submodule::Pullback { map, points, lattice } = self else {
            return Ok(self);
        };
        if pm.x.is_finite() {
            let src = pm.x.points()?;
            let rows = map.push_rows(pm, &src, &points)?;
            let lat = Lattice::preimage(&rows, &lattice);
            return Ok(Submodule::FiniteX { points: src, lattice: lat });
        }
        if let Some(p) = pm.laurent_prime() {
            let tm = map.target_module(pm);
            let n = points.len();
            let shift = tm.action_rows(&points, &[1], &map.target)?;
            let invariant = lattice.image(&shift, n).is_sublattice_of(&lattice);
            if invariant {
                let mut g = poly::cyclic_modulus(n, p);
                for r in lattice.rows() {
                    let c: Poly = poly::from_signed(r, p);
                    g = poly::gcd(&g, &c, p);
                }
                return Ok(Submodule::Laurent { p, gen: poly::normalize_unit(&g, p) });
            }
        }
        Ok(Submodule::Pullback { map, points, lattice })
    }

    pub fn contains(&self, pm: &PermModule, n: &ModuleElement) -> bool {
        match self {
            Submodule::FiniteX { points, lattice } => match pm.vectorize(points, n) {
                Ok(v) => lattice.contains(&v),
                Err(_) => false,
            },
            Submodule::Laurent { p, gen } => {
                let (_, c) = pm.to_laurent(n);
                if poly::is_zero(&c) {
                    return true;
                }
                if gen.is_empty() {
                    return false;
                }
                poly::rem(&c, gen, *p).is_empty()
            }
            Submodule::Pullback { map, points, lattice } => {
                let tm = map.target_module(pm);
                let pushed = map.push(pm, n);
                tm.vectorize(points, &pushed).map(|v| lattice.contains(&v)).unwrap_or(false)
            }
        }
    }

    /// Canonical representative of `n + S`.
    pub fn reduce(&self, pm: &PermModule, n: &ModuleElement) -> ModuleElement {
        match self {
            Submodule::FiniteX { points, lattice } => {
                let v = pm.vectorize(points, n).expect("element of a finite X");
                pm.devectorize(points, &lattice.reduce(&v))
            }
            Submodule::Laurent { p, gen } => {
                if gen.is_empty() {
                    return n.clone();
                }
                let (lo, c) = pm.to_laurent(n);
                let shift = poly::monomial_mod(lo, gen, *p);
                let r = poly::rem(&poly::mul(&shift, &poly::rem(&c, gen, *p), *p), gen, *p);
                pm.from_laurent(0, &r)
            }
            Submodule::Pullback { map, points, lattice } => {
                let tm = map.target_module(pm);
                let v = tm.vectorize(points, &map.push(pm, n)).expect("finite quotient");
                let r = tm.devectorize(points, &lattice.reduce(&v));
                ModuleElement {
                    support: r.support.into_iter().map(|(x, val)| (map.section(&x), val)).collect(),
                }
            }
        }
    }

    pub fn index(&self) -> Index {
        match self {
            Submodule::FiniteX { lattice, .. } | Submodule::Pullback { lattice, .. } => {
                Index::from_option(lattice.index())
            }
            Submodule::Laurent { p, gen } => match poly::degree(gen) {
                None => Index::Infinite,
                Some(d) => Index::Finite(p.checked_pow(d as u32).expect("index overflow")),
            },
        }
    }

    pub fn is_invariant(&self, pm: &PermModule, q: &[i64]) -> bool {
        match self {
            Submodule::Laurent { .. } => true,
            Submodule::FiniteX { points, lattice } => {
                let Ok(rows) = pm.action_rows(points, q, &pm.x) else { return false };
                lattice.image(&rows, lattice.dim()).is_sublattice_of(lattice)
            }
            Submodule::Pullback { map, points, lattice } => {
                let tm = map.target_module(pm);
                let Ok(rows) = tm.action_rows(points, q, &map.target) else { return false };
                lattice.image(&rows, lattice.dim()).is_sublattice_of(lattice)
            }
        }
    }

    /// `S^q = {n^q : n ∈ S}`.
    pub fn act(&self, pm: &PermModule, q: &[i64]) -> Result<Self> {
        match self {
            Submodule::Laurent { .. } => Ok(self.clone()),
            Submodule::FiniteX { points, lattice } => {
                let rows = pm.action_rows(points, q, &pm.x)?;
                Ok(Submodule::FiniteX { points: points.clone(), lattice: lattice.image(&rows, lattice.dim()) })
            }
            Submodule::Pullback { map, points, lattice } => {
                let tm = map.target_module(pm);
                let rows = tm.action_rows(points, q, &map.target)?;
                let lat = lattice.image(&rows, lattice.dim());
                Self::pullback_lattice(pm, map.clone(), points.clone(), lat)
            }
        }
    }

    /// `S ∩ B^Y` as a lattice over the sorted finite point set `y`.
    pub fn window_lattice(&self, pm: &PermModule, y: &[XPoint]) -> Result<Lattice> {
        let db = pm.block();
        let dim = y.len() * db;
        match self {
            Submodule::FiniteX { points, lattice } => {
                let rows: Vec<Vec<i64>> = y
                    .iter()
                    .flat_map(|x| (0..db).map(move |c| (x, c)))
                    .map(|(x, c)| {
                        let mut v = vec![0; pm.b.dim()];
                        v[c] = 1;
                        pm.vectorize(points, &ModuleElement { support: BTreeMap::from([(x.clone(), v)]) })
                    })
                    .collect::<Result<_>>()?;
                Ok(Lattice::preimage(&rows, lattice))
            }
            Submodule::Laurent { p, gen } => {
                if gen.is_empty() {
                    return Ok(Lattice::from_generators(dim, pm.coord_relations(y.len())));
                }
                let deg = poly::degree(gen).unwrap_or(0);
                if deg == 0 {
                    return Ok(Lattice::full(dim));
                }
                let rows: Vec<Vec<i64>> = y
                    .iter()
                    .map(|x| {
                        let r = poly::monomial_mod(x.coset[0], gen, *p);
                        (0..deg).map(|i| r.get(i).copied().unwrap_or(0) as i64).collect()
                    })
                    .collect();
                let target = Lattice::from_generators(
                    deg,
                    (0..deg).map(|i| {
                        let mut v = vec![0; deg];
                        v[i] = *p as i64;
                        v
                    }),
                );
                Ok(Lattice::preimage(&rows, &target))
            }
            Submodule::Pullback { map, points, lattice } => {
                let rows = map.push_rows(pm, y, points)?;
                Ok(Lattice::preimage(&rows, lattice))
            }
        }
    }

    /// `{m : m − m^q ∈ S}`.
    pub fn commutator_preimage(&self, pm: &PermModule, q: &[i64]) -> Result<Self> {
        if q.iter().all(|&c| c == 0) || pm.q().is_zero(q) {
            return Self::full(pm);
        }
        match self {
            Submodule::Laurent { p, gen } => {
                if gen.is_empty() {
                    return Ok(self.clone());
                }
                let e = q[0].unsigned_abs() as usize;
                let g = poly::gcd(gen, &poly::cyclic_modulus(e, *p), *p);
                let (quot, _) = poly::divrem(gen, &g, *p);
                Ok(Submodule::Laurent { p: *p, gen: poly::normalize_unit(&quot, *p) })
            }
            Submodule::FiniteX { points, lattice } => {
                let rows = minus_action_rows(pm.action_rows(points, q, &pm.x)?);
                Ok(Submodule::FiniteX { points: points.clone(), lattice: Lattice::preimage(&rows, lattice) })
            }
            Submodule::Pullback { map, points, lattice } => {
                let tm = map.target_module(pm);
                let rows = minus_action_rows(tm.action_rows(points, q, &map.target)?);
                let lat = Lattice::preimage(&rows, lattice);
                Self::pullback_lattice(pm, map.clone(), points.clone(), lat)
            }
        }
    }

    pub fn intersect(&self, pm: &PermModule, other: &Submodule) -> Result<Self> {
        match (self, other) {
            (Submodule::Laurent { p, gen: a }, Submodule::Laurent { gen: b, .. }) => {
                Ok(Submodule::Laurent { p: *p, gen: poly::normalize_unit(&poly::lcm(a, b, *p), *p) })
            }
            (Submodule::FiniteX { points, lattice: a }, Submodule::FiniteX { lattice: b, .. }) => {
                Ok(Submodule::FiniteX { points: points.clone(), lattice: a.intersect(b) })
            }
            (
                Submodule::Pullback { map, points, lattice: a },
                Submodule::Pullback { map: m2, lattice: b, .. },
            ) if map == m2 => Self::pullback_lattice(pm, map.clone(), points.clone(), a.intersect(b)),
            (Submodule::Laurent { .. }, Submodule::Pullback { .. }) => other.intersect(pm, self),
            (Submodule::Pullback { map, points, lattice }, Submodule::Laurent { .. }) => {
                // lift the ideal to the same finite quotient when it contains the kernel
                let lifted = other.window_lattice_on_quotient(pm, map, points)?;
                Self::pullback_lattice(pm, map.clone(), points.clone(), lattice.intersect(&lifted))
            }
            _ => Err(Error::Unsupported("intersection of incompatible submodule representations".into())),
        }
    }

    /// Image in `B^{V\X}` of an ideal that contains `ker π`.
    fn window_lattice_on_quotient(&self, pm: &PermModule, map: &FactorMap, points: &[XPoint]) -> Result<Lattice> {
        let Submodule::Laurent { p, gen } = self else {
            return Err(Error::Unsupported("expected an ideal".into()));
        };
        let n = points.len();
        let modulus = poly::cyclic_modulus(n, *p);
        if gen.is_empty() || !poly::rem(&modulus, gen, *p).is_empty() {
            return Err(Error::Unsupported("ideal does not contain the kernel of the factor map".into()));
        }
        let _ = map;
        let tm_rel = pm.coord_relations(n);
        let shifts = (0..n).map(|s| {
            let mut v = vec![0i64; n];
            for (i, &c) in gen.iter().enumerate() {
                v[(s + i) % n] = c as i64;
            }
            v
        });
        Ok(Lattice::from_generators(n, shifts.chain(tm_rel)))
    }

    /// Short human-readable tag.
    pub fn describe(&self) -> String {
        match self {
            Submodule::FiniteX { lattice, .. } => format!("finite-x(rank {})", lattice.rank()),
            Submodule::Laurent { p, gen } => format!("ideal({}) over F_{p}", poly_string(gen)),
            Submodule::Pullback { points, .. } => format!("pullback over {} points", points.len()),
        }
    }
}

fn minus_action_rows(mut rows: Vec<Vec<i64>>) -> Vec<Vec<i64>> {
    for (i, r) in rows.iter_mut().enumerate() {
        for x in r.iter_mut() {
            *x = -*x;
        }
        r[i] += 1;
    }
    rows
}

pub fn poly_string(g: &[u64]) -> String {
    if g.is_empty() {
        return "0".into();
    }
    let terms: Vec<String> = g
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0)
        .map(|(i, &c)| {
            let mono = match i {
                0 => String::new(),
                1 => "t".into(),
                _ => format!("t^{i}"),
            };
            match (c, i) {
                (1, 0) => "1".into(),
                (1, _) => mono,
                (_, 0) => c.to_string(),
                _ => format!("{c}{mono}"),
            }
        })
        .collect();
    terms.join("+")
}

/// `I·x_l` membership test for the window `Y_{i,l} = (U + W_l + I)x_l`.
pub fn in_y(x: &XPoint, u_plus_w: &[AbelianSubgroup], stabilizers: &[AbelianSubgroup], i_set: &[AbelianElement]) -> bool {
    let sub = u_plus_w[x.orbit].sum(&stabilizers[x.orbit]);
    i_set
        .iter()
        .any(|b| sub.contains(&x.coset.iter().zip(b).map(|(c, d)| c - d).collect::<Vec<_>>()))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn lamplighter() -> PermModule {
        let z = FgAbelianGroup::free(1);
        PermModule::new(QSet::regular(&z), FgAbelianGroup::cyclic(2).unwrap())
    }

    fn poly_elem(pm: &PermModule, exps: &[i64]) -> ModuleElement {
        exps.iter().fold(ModuleElement::zero(), |acc, &e| {
            pm.add(&acc, &pm.delta(&pm.qset().point(0, &[e])))
        })
    }

    #[test]
    fn act_point_examples() {
        let z = FgAbelianGroup::free(1);
        let x = QSet::regular(&z);
        assert_eq!(x.act_point(&[3], &x.point(0, &[5])).coset, vec![8]);
        let x4 = QSet::new(z.clone(), vec![z.subgroup([vec![4]])]).unwrap();
        assert_eq!(x4.act_point(&[3], &x4.point(0, &[2])).coset, vec![1]);
        assert_eq!(x4.act_point(&[4], &x4.basepoint(0)), x4.basepoint(0));
    }

    #[test]
    fn act_module_examples() {
        let pm = lamplighter();
        let d0 = poly_elem(&pm, &[0]);
        assert_eq!(pm.act(&[1], &d0), poly_elem(&pm, &[-1]));
        assert_eq!(pm.act(&[0], &d0), d0);
        let n = poly_elem(&pm, &[0, 2]);
        assert_eq!(pm.act(&[-3], &pm.act(&[3], &n)), n);
    }

    #[test]
    fn window_examples() {
        let z = FgAbelianGroup::free(1);
        let x = QSet::regular(&z);
        let w = x.window(&z.box_elements(3).unwrap());
        assert_eq!(w.iter().map(|p| p.coset[0]).collect::<Vec<_>>(), vec![-1, 0, 1]);
        let two = QSet::new(z.clone(), vec![z.trivial(), z.trivial()]).unwrap();
        assert_eq!(two.window(&[vec![0]]).len(), 2);
        let x2 = QSet::new(z.clone(), vec![z.subgroup([vec![2]])]).unwrap();
        assert_eq!(x2.window(&[vec![0], vec![1], vec![2]]).len(), 2);
    }

    #[test]
    fn factor_map_examples() {
        let pm = lamplighter();
        let z = pm.q().clone();
        let f = FactorMap::new(pm.qset(), &z.subgroup([vec![3]]));
        assert_eq!(f.target().size(), Index::Finite(3));
        let id = FactorMap::new(pm.qset(), &z.trivial());
        assert_eq!(id.push_point(&pm.qset().point(0, &[7])).coset, vec![7]);
        let n = poly_elem(&pm, &[0, 3]);
        assert!(f.push(&pm, &n).is_zero());
    }

    #[test]
    fn pull_round_trip() {
        let pm = lamplighter();
        let z = pm.q().clone();
        let f = FactorMap::new(pm.qset(), &z.subgroup([vec![3]]));
        let y = pm.qset().window(&z.box_elements(3).unwrap());
        let tm = f.target_module(&pm);
        let nbar = tm.delta(&f.target().point(0, &[1]));
        let n = f.pull_within(&nbar, &y).unwrap();
        assert_eq!(n, poly_elem(&pm, &[1]));
        assert_eq!(f.push(&pm, &n), nbar);
        assert!(f.pull_within(&ModuleElement::zero(), &y).unwrap().is_zero());
        let bad = vec![pm.qset().point(0, &[0]), pm.qset().point(0, &[3])];
        assert!(f.pull_within(&nbar, &bad).is_err());
    }

    #[test]
    fn ideal_membership() {
        let pm = lamplighter();
        let s = Submodule::laurent_poly(&pm, &[1, 1]).unwrap();
        assert!(s.contains(&pm, &poly_elem(&pm, &[0, 5])));
        assert!(!s.contains(&pm, &poly_elem(&pm, &[0])));
        assert!(s.contains(&pm, &poly_elem(&pm, &[-4, 7])));
        assert_eq!(s.index(), Index::Finite(2));
    }

    #[test]
    fn ideal_canonical_generator() {
        let pm = lamplighter();
        let s = Submodule::laurent(&pm, &[(0, vec![1, 1]), (0, vec![0, 1, 1])]).unwrap();
        assert_eq!(s, Submodule::Laurent { p: 2, gen: vec![1, 1] });
        assert_eq!(Submodule::full(&pm).unwrap().index(), Index::Finite(1));
        assert_eq!(Submodule::zero(&pm).unwrap().index(), Index::Infinite);
    }

    #[test]
    fn pullback_of_ideal_mod_t3() {
        let pm = lamplighter();
        let z = pm.q().clone();
        let f = FactorMap::new(pm.qset(), &z.subgroup([vec![3]]));
        let tm = f.target_module(&pm);
        let g = tm.add(&tm.delta(&f.target().point(0, &[0])), &tm.delta(&f.target().point(0, &[1])));
        let gens: Vec<_> = (0..3).map(|s| tm.act(&[s], &g)).collect();
        let s = Submodule::pullback(&pm, &z.subgroup([vec![3]]), &gens, false).unwrap();
        assert_eq!(s, Submodule::Laurent { p: 2, gen: vec![1, 1] });
        assert!(s.contains(&pm, &poly_elem(&pm, &[0, 3])));
    }

    #[test]
    fn pullback_non_invariant_stays_pullback() {
        let pm = lamplighter();
        let z = pm.q().clone();
        let v = z.subgroup([vec![4]]);
        let f = FactorMap::new(pm.qset(), &v);
        let tm = f.target_module(&pm);
        let g = tm.delta(&f.target().point(0, &[0]));
        let s = Submodule::pullback(&pm, &v, &[g], false).unwrap();
        assert!(matches!(s, Submodule::Pullback { .. }));
        assert!(s.contains(&pm, &poly_elem(&pm, &[4])));
        assert!(!s.contains(&pm, &poly_elem(&pm, &[1])));
        assert_eq!(s.index(), Index::Finite(8));
        assert!(!s.is_invariant(&pm, &[1]));
        assert!(s.is_invariant(&pm, &[4]));
        let r = s.reduce(&pm, &poly_elem(&pm, &[4, 5]));
        assert_eq!(r, poly_elem(&pm, &[1]));
    }

    #[test]
    fn finite_x_invariance() {
        let z2 = FgAbelianGroup::cyclic(2).unwrap();
        let pm = PermModule::new(QSet::regular(&z2), z2.clone());
        let x0 = pm.qset().point(0, &[0]);
        let x1 = pm.qset().point(0, &[1]);
        let diag = pm.add(&pm.delta(&x0), &pm.delta(&x1));
        let s = Submodule::finite_x(&pm, &[diag]).unwrap();
        assert!(s.is_invariant(&pm, &[1]));
        let s = Submodule::finite_x(&pm, &[pm.delta(&x0)]).unwrap();
        assert!(!s.is_invariant(&pm, &[1]));
        assert_eq!(s.index(), Index::Finite(2));
    }

    #[test]
    fn window_lattice_of_ideal_matches_division() {
        let pm = lamplighter();
        let s = Submodule::laurent_poly(&pm, &[1, 1, 0, 1]).unwrap();
        let y = pm.qset().window(&pm.q().box_elements(6).unwrap());
        let lat = s.window_lattice(&pm, &y).unwrap();
        for mask in 0u32..64 {
            let n = ModuleElement {
                support: y
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, x)| (x.clone(), vec![1]))
                    .collect(),
            };
            assert_eq!(lat.contains(&pm.vectorize(&y, &n).unwrap()), s.contains(&pm, &n));
        }
    }

    #[test]
    fn normalizer_preimage_of_ideal() {
        let pm = lamplighter();
        let s = Submodule::laurent_poly(&pm, &[1, 1, 0, 1]).unwrap();
        let pre = s.commutator_preimage(&pm, &[1]).unwrap();
        assert_eq!(pre, s);
        let zero = Submodule::zero(&pm).unwrap();
        assert_eq!(zero.commutator_preimage(&pm, &[1]).unwrap().index(), Index::Infinite);
        let h = Submodule::laurent_poly(&pm, &[1, 1]).unwrap();
        assert_eq!(h.commutator_preimage(&pm, &[1]).unwrap().index(), Index::Finite(1));
    }

    #[test]
    fn in_y_on_flagship() {
        let z = FgAbelianGroup::free(1);
        let x = QSet::regular(&z);
        let box3 = z.box_elements(3).unwrap();
        let uw = vec![z.trivial()];
        assert!(in_y(&x.point(0, &[0]), &uw, x.stabilizers(), &box3));
        assert!(!in_y(&x.point(0, &[8]), &uw, x.stabilizers(), &box3));
        let all = vec![z.whole()];
        assert!(in_y(&x.point(0, &[100]), &all, x.stabilizers(), &box3));
    }
}
