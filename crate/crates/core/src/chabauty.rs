//! Truncated Chabauty and probability metrics, empirical measures `F*H`,
//! the statistic `p_i(g)`, and Folner-type defects.
//!
//! Elements are enumerated radius by radius: the radius of `(q, n)` is the
//! largest of `‖q‖`, the least `r` with each support point in
//! `⊔_l ball(r)·x_l`, and the seminorms of the values. Inside one radius the
//! order is the derived `Ord` on `GroupElement`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fg_abelian::{AbelianElement, AbelianSubgroup, FgAbelianGroup};
use crate::goursat::{conjugate_membership, GoursatTriplet, ProductTransversal};
use crate::perm_module::{ModuleElement, XPoint};
use crate::rng;
use crate::wreath::{GroupElement, WreathGroup};

const BATCH_LIMIT: u64 = 1 << 22;
const MC_BATCH: u64 = 4096;

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// Serializes an exact rational as `"num/den"`.
pub fn ser_ratio<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

fn big(u: &BigUint) -> BigInt {
    BigInt::from(u.clone())
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    group: WreathGroup,
    elems: Vec<GroupElement>,
    next_radius: i64,
}

impl Enumeration {
    pub fn new(g: &WreathGroup) -> Self {
        Enumeration { group: g.clone(), elems: Vec::new(), next_radius: 0 }
    }

    pub fn group(&self) -> &WreathGroup {
        &self.group
    }

    fn within(&self, x: &GroupElement, r: i64) -> bool {
        if r < 0 {
            return false;
        }
        let g = &self.group;
        if g.q().seminorm(&x.q) > r as u64 {
            return false;
        }
        let pts: BTreeSet<XPoint> = g.x().window(&g.q().ball(r)).into_iter().collect();
        x.n.support().iter().all(|(p, v)| pts.contains(p) && g.b().seminorm(v) <= r as u64)
    }

    /// Least `r` at which `x` is listed.
    pub fn radius(&self, x: &GroupElement) -> i64 {
        (0..).find(|&r| self.within(x, r)).expect("every element has a radius")
    }

    fn batch(&self, r: i64) -> Result<Vec<GroupElement>> {
        let g = &self.group;
        let pm = g.module();
        let qs = g.q().ball(r);
        let points = g.x().window(&qs);
        let values: Vec<AbelianElement> = g.b().ball(r).into_iter().filter(|v| !g.b().is_zero(v)).collect();
        let per_point = values.len() as u64 + 1;
        per_point
            .checked_pow(points.len() as u32)
            .and_then(|c| c.checked_mul(qs.len() as u64))
            .filter(|&c| c <= BATCH_LIMIT)
            .ok_or_else(|| Error::IndexTooLarge { index: format!("radius {r} batch"), bound: BATCH_LIMIT })?;
        let mut ns = vec![ModuleElement::zero()];
        for p in &points {
            let mut next = Vec::with_capacity(ns.len() * per_point as usize);
            for n in &ns {
                next.push(n.clone());
                for v in &values {
                    next.push(pm.add(n, &pm.single(p, v)));
                }
            }
            ns = next;
        }
        let mut out: Vec<GroupElement> = qs
            .iter()
            .flat_map(|q| ns.iter().map(move |n| GroupElement { q: q.clone(), n: n.clone() }))
            .filter(|x| !self.within(x, r - 1))
            .collect();
        out.sort();
        Ok(out)
    }

    /// The first `count` elements `g_1, …, g_count`.
    pub fn prefix(&mut self, count: usize) -> Result<&[GroupElement]> {
        while self.elems.len() < count {
            let r = self.next_radius;
            let b = self.batch(r)?;
            let exhausted = b.is_empty() && self.group.q().is_finite() && self.group.x().is_finite() && self.group.b().is_finite();
            self.elems.extend(b);
            self.next_radius += 1;
            if exhausted && r > 0 {
                break;
            }
        }
        let n = count.min(self.elems.len());
        Ok(&self.elems[..n])
    }
}

/// Pair `i ≥ 1` reads the base-3 digits of `i − 1`, least significant first:
/// digit `k` is 1 when `g_{k+1} ∈ A`, 2 when `g_{k+1} ∈ B`. Indices are zero-based.
pub fn pair(i: u64) -> (Vec<usize>, Vec<usize>) {
    assert!(i >= 1, "pairs are numbered from 1");
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let mut x = i - 1;
    let mut k = 0;
    while x > 0 {
        match x % 3 {
            1 => a.push(k),
            2 => b.push(k),
            _ => {}
        }
        x /= 3;
        k += 1;
    }
    (a, b)
}

/// How many enumerated elements the first `depth` pairs mention.
pub fn elements_for_pairs(depth: u64) -> usize {
    let mut x = depth.saturating_sub(1);
    let mut k = 0;
    while x > 0 {
        x /= 3;
        k += 1;
    }
    k
}

/// `Σ_{n ≤ D} 1_{A △ B}(g_n) / 2^n` over the given prefix.
pub fn d_pow(prefix: &[GroupElement], a: impl Fn(&GroupElement) -> bool, b: impl Fn(&GroupElement) -> bool) -> BigRational {
    let mut acc = BigRational::zero();
    let mut w = ratio(1, 2);
    for x in prefix {
        if a(x) != b(x) {
            acc += &w;
        }
        w /= BigRational::from_integer(2.into());
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    MonteCarlo(u64),
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "exact" {
            return Ok(Mode::Exact);
        }
        if let Some(n) = s.strip_prefix("mc:") {
            let n: u64 = n.parse().map_err(|_| Error::Config(format!("bad sample count in mode '{s}'")))?;
            if n == 0 {
                return Err(Error::Config("mc mode needs at least one sample".into()));
            }
            return Ok(Mode::MonteCarlo(n));
        }
        Err(Error::Config(format!("mode must be 'exact' or 'mc:N', got '{s}'")))
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => write!(f, "exact"),
            Mode::MonteCarlo(n) => write!(f, "mc:{n}"),
        }
    }
}

/// How a statistic over a transversal is evaluated.
///
/// `Exact` still falls back to sampling `fallback_samples` when `|F|` exceeds `exact_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sampler {
    pub mode: Mode,
    pub seed: u64,
    pub exact_max: u64,
    pub fallback_samples: u64,
}

impl Sampler {
    pub fn exact() -> Self {
        Sampler { mode: Mode::Exact, seed: 0, exact_max: 1 << 24, fallback_samples: 100_000 }
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Sampler { mode: Mode::MonteCarlo(samples), seed, ..Self::exact() }
    }

    /// Exhaustive size when exact evaluation applies, otherwise the sample count.
    fn plan(&self, f: &ProductTransversal) -> std::result::Result<u64, u64> {
        match self.mode {
            Mode::Exact => f.small_size(self.exact_max).ok_or(self.fallback_samples),
            Mode::MonteCarlo(n) => Err(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Estimate {
    Exact(BigRational),
    Sampled { hits: u64, samples: u64, seed: u64 },
}

impl Estimate {
    pub fn value(&self) -> f64 {
        match self {
            Estimate::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Estimate::Sampled { hits, samples, .. } => *hits as f64 / *samples as f64,
        }
    }

    /// Binomial standard error; zero in exact mode.
    pub fn stderr(&self) -> f64 {
        match self {
            Estimate::Exact(_) => 0.0,
            Estimate::Sampled { samples, .. } => {
                let p = self.value();
                (p * (1.0 - p) / *samples as f64).sqrt()
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Estimate::Exact(_))
    }

    pub fn fraction(&self) -> (BigInt, BigInt) {
        match self {
            Estimate::Exact(r) => (r.numer().clone(), r.denom().clone()),
            Estimate::Sampled { hits, samples, .. } => (BigInt::from(*hits), BigInt::from(*samples)),
        }
    }

    pub fn mode_label(&self) -> String {
        match self {
            Estimate::Exact(_) => "exact".into(),
            Estimate::Sampled { samples, .. } => format!("mc:{samples}"),
        }
    }

    pub fn samples(&self) -> u64 {
        match self {
            Estimate::Exact(_) => 0,
            Estimate::Sampled { samples, .. } => *samples,
        }
    }
}

/// Fraction of `f ∈ F` satisfying `pred`, exhaustively or by sampling.
pub fn fraction_over<P>(g: &WreathGroup, f: &ProductTransversal, s: &Sampler, stage: u64, label: &str, pred: P) -> Estimate
where
    P: Fn(&GroupElement) -> bool + Sync,
{
    match s.plan(f) {
        Ok(n) => {
            let hits = (0..n).into_par_iter().filter(|&i| pred(&f.nth(g, i))).count() as u64;
            Estimate::Exact(ratio(hits, n))
        }
        Err(samples) => {
            let batches = samples.div_ceil(MC_BATCH);
            let mut counts: HashMap<GroupElement, u64> = HashMap::new();
            for b in 0..batches {
                let mut r = rng::stream(s.seed, stage, label, b);
                for _ in 0..MC_BATCH.min(samples - b * MC_BATCH) {
                    *counts.entry(f.sample(g, &mut r)).or_default() += 1;
                }
            }
            let counts: Vec<(GroupElement, u64)> = counts.into_iter().collect();
            let hits: u64 = counts.par_iter().filter(|(x, _)| pred(x)).map(|(_, c)| c).sum();
            Estimate::Sampled { hits, samples, seed: s.seed }
        }
    }
}

/// `p(x) = |{f ∈ F : x^f ∈ K △ H}| / |F|`.
pub fn p_statistic(
    g: &WreathGroup,
    x: &GroupElement,
    k: &GoursatTriplet,
    h: &GoursatTriplet,
    f: &ProductTransversal,
    s: &Sampler,
    stage: u64,
    label: &str,
) -> Estimate {
    fraction_over(g, f, s, stage, label, |fe| conjugate_membership(g, x, fe, k) != conjugate_membership(g, x, fe, h))
}

/// A finitely supported probability measure on subgroups, atoms canonical.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    atoms: Vec<(GoursatTriplet, BigRational)>,
    pub estimated: bool,
}

impl EmpiricalMeasure {
    pub fn dirac(g: &WreathGroup, h: &GoursatTriplet) -> Self {
        EmpiricalMeasure { atoms: vec![(h.canonical(g), BigRational::one())], estimated: false }
    }

    /// Normalizes integer multiplicities of (not necessarily canonical) triplets.
    pub fn from_counts(g: &WreathGroup, items: impl IntoIterator<Item = (GoursatTriplet, u64)>, estimated: bool) -> Result<Self> {
        let mut acc: HashMap<GoursatTriplet, u64> = HashMap::new();
        for (h, c) in items {
            *acc.entry(h.canonical(g)).or_default() += c;
        }
        let total: u64 = acc.values().sum();
        if total == 0 {
            return Err(Error::Validation("empty measure".into()));
        }
        let mut keyed = Vec::with_capacity(acc.len());
        for (h, c) in acc {
            keyed.push((serde_json::to_string(&h)?, h, ratio(c, total)));
        }
        keyed.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(EmpiricalMeasure { atoms: keyed.into_iter().map(|(_, h, w)| (h, w)).collect(), estimated })
    }

    pub fn atoms(&self) -> &[(GoursatTriplet, BigRational)] {
        &self.atoms
    }

    pub fn total(&self) -> BigRational {
        self.atoms.iter().map(|(_, w)| w.clone()).sum()
    }
}

/// `F*H = |F|^{-1} Σ_f δ_{fHf^{-1}}` over an explicit finite `F`.
pub fn empirical_measure<'a>(
    g: &WreathGroup,
    fs: impl IntoIterator<Item = &'a GroupElement>,
    h: &GoursatTriplet,
) -> Result<EmpiricalMeasure> {
    let mut items = Vec::new();
    for f in fs {
        items.push((h.conjugate(g, &g.inverse(f))?, 1));
    }
    EmpiricalMeasure::from_counts(g, items, false)
}

/// `F*H` for a product transversal, sampled when `F` is too large or MC is requested.
pub fn transversal_measure(
    g: &WreathGroup,
    f: &ProductTransversal,
    h: &GoursatTriplet,
    s: &Sampler,
    stage: u64,
    label: &str,
) -> Result<EmpiricalMeasure> {
    let conj = |fe: &GroupElement| h.conjugate(g, &g.inverse(fe)).map(|c| c.canonical(g));
    let (list, estimated): (Vec<GoursatTriplet>, bool) = match s.plan(f) {
        Ok(n) => ((0..n).into_par_iter().map(|i| conj(&f.nth(g, i))).collect::<Result<_>>()?, false),
        Err(samples) => {
            let batches = samples.div_ceil(MC_BATCH);
            let per: Vec<Vec<GroupElement>> = (0..batches)
                .into_par_iter()
                .map(|b| {
                    let mut r = rng::stream(s.seed, stage, label, b);
                    let len = MC_BATCH.min(samples - b * MC_BATCH);
                    (0..len).map(|_| f.sample(g, &mut r)).collect()
                })
                .collect();
            let mut counts: HashMap<GroupElement, u64> = HashMap::new();
            for x in per.into_iter().flatten() {
                *counts.entry(x).or_default() += 1;
            }
            let counts: Vec<(GroupElement, u64)> = counts.into_iter().collect();
            let items = counts.par_iter().map(|(x, c)| Ok((conj(x)?, *c))).collect::<Result<Vec<_>>>()?;
            return EmpiricalMeasure::from_counts(g, items, true);
        }
    };
    EmpiricalMeasure::from_counts(g, list.into_iter().map(|h| (h, 1)), estimated)
}

/// `μ(E_{A,B})`: mass of atoms containing `A` and missing `B`.
pub fn e_ab_mass(g: &WreathGroup, mu: &EmpiricalMeasure, a: &[GroupElement], b: &[GroupElement]) -> BigRational {
    mu.atoms
        .iter()
        .filter(|(h, _)| a.iter().all(|x| h.contains(g, x)) && b.iter().all(|x| !h.contains(g, x)))
        .map(|(_, w)| w.clone())
        .sum()
}

/// Mass per membership pattern on `g_1..g_m`; bit `k` set when `g_{k+1} ∈ H`.
fn profile(g: &WreathGroup, mu: &EmpiricalMeasure, elems: &[GroupElement]) -> BTreeMap<u64, BigRational> {
    let masks: Vec<u64> = mu
        .atoms
        .par_iter()
        .map(|(h, _)| {
            elems.iter().enumerate().filter(|(_, x)| h.contains(g, x)).fold(0u64, |m, (k, _)| m | (1 << k))
        })
        .collect();
    let mut out: BTreeMap<u64, BigRational> = BTreeMap::new();
    for (m, (_, w)) in masks.into_iter().zip(&mu.atoms) {
        *out.entry(m).or_insert_with(BigRational::zero) += w;
    }
    out
}

/// `Σ_{i ≤ D} |μ(E_{A_i,B_i}) − ν(E_{A_i,B_i})| / 2^i`.
pub fn d_prob(g: &WreathGroup, mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, depth: u64, en: &mut Enumeration) -> Result<BigRational> {
    let m = elements_for_pairs(depth);
    if m > 63 {
        return Err(Error::Config(format!("depth {depth} needs more than 63 enumerated elements")));
    }
    let elems = en.prefix(m)?.to_vec();
    d_prob_with_prefix(g, mu, nu, depth, &elems)
}

/// As [`d_prob`], with `g_1..g_m` supplied by the caller.
pub fn d_prob_with_prefix(
    g: &WreathGroup,
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    depth: u64,
    elems: &[GroupElement],
) -> Result<BigRational> {
    let m = elements_for_pairs(depth);
    if m > 63 || elems.len() < m {
        return Err(Error::Config(format!("depth {depth} needs {m} enumerated elements (at most 63), got {}", elems.len())));
    }
    let elems = &elems[..m];
    let (pm, pn) = (profile(g, mu, elems), profile(g, nu, elems));
    let mass = |prof: &BTreeMap<u64, BigRational>, a: u64, b: u64| -> BigRational {
        prof.iter().filter(|(&k, _)| k & a == a && k & b == 0).map(|(_, w)| w.clone()).sum()
    };
    let mut acc = BigRational::zero();
    let mut w = ratio(1, 2);
    for i in 1..=depth {
        let (a, b) = pair(i);
        let bits = |v: &[usize]| v.iter().fold(0u64, |m, &k| m | (1 << k));
        let (a, b) = (bits(&a), bits(&b));
        let diff = mass(&pm, a, b) - mass(&pn, a, b);
        acc += diff.abs() * &w;
        w /= BigRational::from_integer(2.into());
    }
    Ok(acc)
}

/// Atomwise `H ∩ (L ⋉ N)`.
pub fn restrict_measure(g: &WreathGroup, mu: &EmpiricalMeasure, l: &AbelianSubgroup) -> Result<EmpiricalMeasure> {
    let mut items = Vec::new();
    for (h, w) in &mu.atoms {
        let q = h.qh().intersect(l);
        let lifts = q.generators().into_iter().map(|x| h.a_q(g, &x).map(|a| (x, a))).collect::<Result<Vec<_>>>()?;
        let r = GoursatTriplet::new(g, lifts, h.nh().clone())?;
        items.push((r.canonical(g), w.clone()));
    }
    let mut acc: HashMap<GoursatTriplet, BigRational> = HashMap::new();
    for (h, w) in items {
        *acc.entry(h).or_insert_with(BigRational::zero) += w;
    }
    let mut keyed = Vec::new();
    for (h, w) in acc {
        keyed.push((serde_json::to_string(&h)?, h, w));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(EmpiricalMeasure { atoms: keyed.into_iter().map(|(_, h, w)| (h, w)).collect(), estimated: mu.estimated })
}

/// Image under `H ↦ Q_H`.
pub fn pushforward_to_q(mu: &EmpiricalMeasure) -> BTreeMap<AbelianSubgroup, BigRational> {
    let mut out: BTreeMap<AbelianSubgroup, BigRational> = BTreeMap::new();
    for (h, w) in &mu.atoms {
        *out.entry(h.qh().clone()).or_insert_with(BigRational::zero) += w;
    }
    out
}

/// `|xF △ F| / |F|` for `F = Î·E^Z`, by counting box overlaps.
pub fn folner_defect(g: &WreathGroup, f: &ProductTransversal, x: &GroupElement) -> BigRational {
    let q = g.q();
    let pm = g.module();
    let members: BTreeSet<&AbelianElement> = f.i_set.iter().collect();
    let mut inter = BigUint::zero();
    for r in &f.i_set {
        if !members.contains(&q.add(&x.q, r)) {
            continue;
        }
        let u = pm.act(r, &x.n);
        if u.support().keys().any(|p| f.z.binary_search(p).is_err()) {
            continue;
        }
        let mut c = BigUint::one();
        for z in &f.z {
            let v = u.get(z).cloned().unwrap_or_else(|| g.b().zero());
            c *= f.e.overlap(&v);
        }
        inter += c;
    }
    let size = f.size();
    ratio(big(&size) * 2 - big(&inter) * 2, big(&size))
}

/// `1 − |{q ∈ I : q + r ∈ I}| / |I|`.
pub fn centered_defect(q: &FgAbelianGroup, i_set: &[AbelianElement], r: &[i64]) -> BigRational {
    let members: BTreeSet<&AbelianElement> = i_set.iter().collect();
    let kept = i_set.iter().filter(|x| members.contains(&q.add(x, r))).count();
    BigRational::one() - ratio(kept, i_set.len())
}

/// `|∪_{j<i} F_j^{-1} F_i| / |F_i|` for the last set of the prefix.
pub fn tempered_ratio(q: &FgAbelianGroup, prefix: &[Vec<AbelianElement>]) -> BigRational {
    let Some((last, earlier)) = prefix.split_last() else {
        return BigRational::zero();
    };
    let mut u = BTreeSet::new();
    for fj in earlier {
        for a in fj {
            for b in last {
                u.insert(q.sub(b, a));
            }
        }
    }
    ratio(u.len(), last.len())
}

/// `|{b ∈ I : [x, b] + φ ∈ T for all φ ∈ Φ}| / |I|`, with `b` lifted as `(b, 0)`.
pub fn adapted_statistic(g: &WreathGroup, t: &ProductTransversal, i_set: &[AbelianElement], x: &GroupElement, phi: &[ModuleElement]) -> BigRational {
    let pm = g.module();
    let good = i_set
        .iter()
        .filter(|b| {
            let c = g.commutator(x, &g.from_q(b)).n;
            phi.iter().all(|p| t.t_contains(&pm.add(&c, p)))
        })
        .count();
    ratio(good, i_set.len())
}
