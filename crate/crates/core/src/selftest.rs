//! Fuzzed metric axioms and commutator identities, exact throughout.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chabauty::{d_prob_with_prefix, elements_for_pairs, EmpiricalMeasure, Enumeration};
use crate::error::Result;
use crate::fg_abelian::FgAbelianGroup;
use crate::finite::enumerate_triplets;
use crate::goursat::GoursatTriplet;
use crate::perm_module::{ModuleElement, QSet};
use crate::rng;
use crate::stability::{hamming, Permutation};
use crate::wreath::{GroupElement, WreathGroup};

#[derive(Clone, Debug, Serialize)]
pub struct Suite {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl Suite {
    fn new(name: &str) -> Self {
        Suite { name: name.into(), cases: 0, failures: 0, first_failure: None }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub suites: Vec<Suite>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.failures == 0)
    }
}

fn random_perm(n: usize, r: &mut ChaCha8Rng) -> Permutation {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(r);
    Permutation::new(v).expect("shuffle is a permutation")
}

/// Occasionally equal to `s`, otherwise a few transpositions away or fresh.
fn nearby_perm(s: &Permutation, r: &mut ChaCha8Rng) -> Permutation {
    let n = s.degree();
    match r.random_range(0..4) {
        0 => s.clone(),
        1 | 2 => {
            let mut t = s.clone();
            for _ in 0..r.random_range(1..=2) {
                let (a, b) = (r.random_range(0..n), r.random_range(0..n));
                t = t.then(&Permutation::transposition(n, a, b));
            }
            t
        }
        _ => random_perm(n, r),
    }
}

fn hamming_suites(cases: usize, seed: u64) -> Result<(Suite, Suite)> {
    let mut axioms = Suite::new("d_n metric axioms");
    let mut bi = Suite::new("d_n bi-invariance");
    for c in 0..cases {
        let mut r = rng::stream(seed, 0, "selftest/hamming", c as u64);
        let n = r.random_range(1..=24);
        let s = random_perm(n, &mut r);
        let t = nearby_perm(&s, &mut r);
        let u = random_perm(n, &mut r);
        let (st, ts) = (hamming(&s, &t)?, hamming(&t, &s)?);
        let (su, ut) = (hamming(&s, &u)?, hamming(&u, &t)?);
        axioms.cases += 1;
        axioms.check(hamming(&s, &s)?.is_zero(), || format!("d(s,s) != 0 for {s:?}"));
        axioms.check(st == ts, || format!("asymmetric on {s:?}, {t:?}"));
        axioms.check(st.is_zero() == (s == t), || format!("d(s,t) = {st} for {s:?}, {t:?}"));
        axioms.check(st <= &su + &ut, || format!("triangle fails via {u:?}"));
        bi.cases += 1;
        bi.check(hamming(&u.then(&s), &u.then(&t))? == st, || format!("left translation by {u:?}"));
        bi.check(hamming(&s.then(&u), &t.then(&u))? == st, || format!("right translation by {u:?}"));
    }
    Ok((axioms, bi))
}

fn random_measure(g: &WreathGroup, subs: &[GoursatTriplet], r: &mut ChaCha8Rng) -> Result<EmpiricalMeasure> {
    let atoms = r.random_range(1..=3);
    let items: Vec<(GoursatTriplet, u64)> =
        (0..atoms).map(|_| (subs[r.random_range(0..subs.len())].clone(), r.random_range(1..=4))).collect();
    EmpiricalMeasure::from_counts(g, items, false)
}

/// Distribution of membership patterns on `elems`, the quantity `d_prob` is built from.
fn profile(g: &WreathGroup, mu: &EmpiricalMeasure, elems: &[GroupElement]) -> BTreeMap<Vec<bool>, BigRational> {
    let mut out = BTreeMap::new();
    for (h, w) in mu.atoms() {
        let key: Vec<bool> = elems.iter().map(|x| h.contains(g, x)).collect();
        *out.entry(key).or_insert_with(BigRational::zero) += w;
    }
    out
}

/// On `Z/2 ≀ Z/3` with `D = 81` every pattern on `g_1..g_4` is tested, so `d = 0` exactly
/// when the pattern distributions on those four elements agree.
fn d_prob_suite(cases: usize, seed: u64) -> Result<Suite> {
    let mut s = Suite::new("d_prob metric axioms");
    let g = WreathGroup::lamplighter_quotient(3);
    let subs = enumerate_triplets(&g)?;
    let depth = 81;
    let m = elements_for_pairs(depth);
    let elems = Enumeration::new(&g).prefix(m)?.to_vec();
    for c in 0..cases {
        let mut r = rng::stream(seed, 0, "selftest/d_prob", c as u64);
        let mu = random_measure(&g, &subs, &mut r)?;
        let nu = if r.random_bool(0.25) { mu.clone() } else { random_measure(&g, &subs, &mut r)? };
        let la = random_measure(&g, &subs, &mut r)?;
        let d = |a: &EmpiricalMeasure, b: &EmpiricalMeasure| d_prob_with_prefix(&g, a, b, depth, &elems);
        let (mn, nm) = (d(&mu, &nu)?, d(&nu, &mu)?);
        s.cases += 1;
        s.check(d(&mu, &mu)?.is_zero(), || "d(mu, mu) != 0".into());
        s.check(mn == nm, || format!("asymmetric: {mn} vs {nm}"));
        s.check(mn <= d(&mu, &la)? + d(&la, &nu)?, || "triangle inequality fails".into());
        let same = profile(&g, &mu, &elems) == profile(&g, &nu, &elems);
        s.check(mn.is_zero() == same, || format!("d = {mn} but equal patterns = {same}"));
    }
    Ok(s)
}

/// Lamplighter plus `Z²` acting on `Z²/⟨(1,1)⟩ ⊔ Z²/⟨(2,0),(0,3)⟩` with `B = Z/3 ⊕ Z`.
fn test_groups() -> Result<Vec<WreathGroup>> {
    let q = FgAbelianGroup::free(2);
    let x = QSet::new(q.clone(), vec![q.subgroup([vec![1, 1]]), q.subgroup([vec![2, 0], vec![0, 3]])])?;
    let b = FgAbelianGroup::new(1, vec![3])?;
    Ok(vec![WreathGroup::lamplighter(), WreathGroup::new(q, b, x)])
}

fn random_element(g: &WreathGroup, r: &mut ChaCha8Rng) -> GroupElement {
    let pm = g.module();
    let rand_vec = |r: &mut ChaCha8Rng, d: usize| -> Vec<i64> { (0..d).map(|_| r.random_range(-4..=4)).collect() };
    let q = g.q().canon(rand_vec(r, g.q().dim()));
    let mut n = ModuleElement::zero();
    for _ in 0..r.random_range(0..=4) {
        let orbit = r.random_range(0..g.x().orbits());
        let shift = rand_vec(r, g.q().dim());
        let x = g.x().act_point(&shift, &g.x().basepoint(orbit));
        n = pm.add(&n, &pm.single(&x, &rand_vec(r, g.b().dim())));
    }
    GroupElement { q, n }
}

fn commutator_suites(cases: usize, seed: u64) -> Result<(Suite, Suite)> {
    let mut ids = Suite::new("commutator identities");
    let mut closed = Suite::new("[qn, rm] = [q, m] - [r, n]");
    for (gi, g) in test_groups()?.iter().enumerate() {
        let share = cases.div_ceil(2);
        for c in 0..share {
            let mut r = rng::stream(seed, gi as u64, "selftest/commutator", c as u64);
            let (x, y, z) = (random_element(g, &mut r), random_element(g, &mut r), random_element(g, &mut r));
            let xy = g.multiply(&x, &y);
            let yz = g.multiply(&y, &z);
            let lhs1 = g.commutator(&xy, &z);
            let rhs1 = g.multiply(&g.conjugate(&g.commutator(&x, &z), &y), &g.commutator(&y, &z));
            let lhs2 = g.commutator(&x, &yz);
            let rhs2 = g.multiply(&g.commutator(&x, &z), &g.conjugate(&g.commutator(&x, &y), &z));
            ids.cases += 1;
            ids.check(lhs1 == rhs1, || format!("[xy,z] on {x:?}, {y:?}, {z:?}"));
            ids.check(lhs2 == rhs2, || format!("[x,yz] on {x:?}, {y:?}, {z:?}"));
            let comm = g.commutator(&x, &y);
            closed.cases += 1;
            closed.check(g.q().is_zero(&comm.q) && comm.n == g.commutator_closed_form(&x, &y), || {
                format!("closed form on {x:?}, {y:?}")
            });
        }
    }
    Ok((ids, closed))
}

/// Runs every suite with at least `cases` fuzzed instances each.
pub fn metrics_selftest(cases: usize, seed: u64) -> Result<SelftestReport> {
    let (axioms, bi) = hamming_suites(cases, seed)?;
    let dp = d_prob_suite(cases, seed)?;
    let (ids, closed) = commutator_suites(cases, seed)?;
    Ok(SelftestReport { seed, suites: vec![axioms, bi, dp, ids, closed] })
}
