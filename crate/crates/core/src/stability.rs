//! Permutations with the normalized Hamming metric, coset actions of
//! finite-index triplets, and relation defects of almost-homomorphisms.
//!
//! Products compose left to right: `(σ·τ)(j) = τ(σ(j))`. Cosets are right
//! cosets `Kx`, acted on by right multiplication, so the coset action is a
//! homomorphism for this convention.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chabauty::ratio;
use crate::error::{Error, Result};
use crate::fg_abelian::Index;
use crate::goursat::GoursatTriplet;
use crate::perm_module::Submodule;
use crate::rng;
use crate::wreath::{GroupElement, WreathGroup};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    images: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(images: Vec<usize>) -> Result<Self> {
        Permutation::new(images)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.images
    }
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; images.len()];
        for &j in &images {
            if j >= images.len() || std::mem::replace(&mut seen[j], true) {
                return Err(Error::Malformed(format!("{images:?} is not a bijection")));
            }
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    pub fn transposition(n: usize, a: usize, b: usize) -> Self {
        let mut p = Self::identity(n);
        p.images.swap(a, b);
        p
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, j: usize) -> usize {
        self.images[j]
    }

    /// `self` first, then `other`.
    pub fn then(&self, other: &Permutation) -> Permutation {
        assert_eq!(self.degree(), other.degree(), "degree mismatch");
        Permutation { images: self.images.iter().map(|&j| other.images[j]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.degree()];
        for (j, &k) in self.images.iter().enumerate() {
            inv[k] = j;
        }
        Permutation { images: inv }
    }

    pub fn fixed_points(&self) -> usize {
        self.images.iter().enumerate().filter(|(j, &k)| *j == k).count()
    }

    pub fn is_identity(&self) -> bool {
        self.fixed_points() == self.degree()
    }
}

/// `d_n(σ, τ) = 1 − |Fix(σ^{-1}τ)| / n`.
pub fn hamming(s: &Permutation, t: &Permutation) -> Result<BigRational> {
    if s.degree() != t.degree() {
        return Err(Error::Malformed(format!("degrees {} and {} differ", s.degree(), t.degree())));
    }
    if s.degree() == 0 {
        return Ok(BigRational::zero());
    }
    let agree = s.images.iter().zip(&t.images).filter(|(a, b)| a == b).count();
    Ok(BigRational::one() - ratio(agree, s.degree()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorAssignment {
    pub degree: usize,
    pub gens: BTreeMap<String, Permutation>,
}

impl GeneratorAssignment {
    pub fn get(&self, name: &str) -> Result<&Permutation> {
        self.gens.get(name).ok_or_else(|| Error::Malformed(format!("unknown generator '{name}'")))
    }
}

/// Action on the right cosets of a finite-index `K`, enumerated breadth first from `K`.
pub fn coset_action(
    g: &WreathGroup,
    k: &GoursatTriplet,
    generators: &[(String, GroupElement)],
    bound: u64,
) -> Result<GeneratorAssignment> {
    let n = match k.index() {
        Index::Finite(n) if n <= bound => n as usize,
        Index::Finite(n) => return Err(Error::IndexTooLarge { index: n.to_string(), bound }),
        Index::Infinite => return Err(Error::IndexTooLarge { index: "infinite".into(), bound }),
    };
    let mut reps: Vec<GroupElement> = vec![g.identity()];
    let mut inv_reps: Vec<GroupElement> = vec![g.identity()];
    let lookup = |x: &GroupElement, inv_reps: &[GroupElement]| -> Option<usize> {
        inv_reps.iter().position(|ri| k.contains(g, &g.multiply(x, ri)))
    };
    let mut table: Vec<Vec<usize>> = vec![Vec::new(); generators.len()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(j) = queue.pop_front() {
        for (s, (_, x)) in generators.iter().enumerate() {
            let y = g.multiply(&reps[j], x);
            let idx = match lookup(&y, &inv_reps) {
                Some(i) => i,
                None => {
                    if reps.len() >= n {
                        return Err(Error::Validation("more cosets than the index of K".into()));
                    }
                    inv_reps.push(g.inverse(&y));
                    reps.push(y);
                    queue.push_back(reps.len() - 1);
                    reps.len() - 1
                }
            };
            if table[s].len() <= j {
                table[s].resize(j + 1, usize::MAX);
            }
            table[s][j] = idx;
        }
    }
    if reps.len() != n {
        return Err(Error::Validation(format!(
            "generators reach {} cosets but K has index {n}",
            reps.len()
        )));
    }
    let mut gens = BTreeMap::new();
    for ((name, _), images) in generators.iter().zip(table) {
        gens.insert(name.clone(), Permutation::new(images)?);
    }
    Ok(GeneratorAssignment { degree: n, gens })
}

/// Group words with the fixed expansions `x^y = y^{-1}xy` and `[x, y] = x^{-1}y^{-1}xy`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Word {
    Gen(String),
    Inv(Box<Word>),
    Mul(Vec<Word>),
    Pow(Box<Word>, i64),
    Conj(Box<Word>, Box<Word>),
    Comm(Box<Word>, Box<Word>),
}

impl Word {
    pub fn gen(name: &str) -> Word {
        Word::Gen(name.into())
    }

    pub fn pow(self, e: i64) -> Word {
        Word::Pow(Box::new(self), e)
    }

    pub fn conj(self, by: Word) -> Word {
        Word::Conj(Box::new(self), Box::new(by))
    }

    pub fn comm(self, other: Word) -> Word {
        Word::Comm(Box::new(self), Box::new(other))
    }

    /// `[b, b^{t^j}]`.
    pub fn lamplighter_relation(j: i64) -> Word {
        Word::gen("b").comm(Word::gen("b").conj(Word::gen("t").pow(j)))
    }

    /// Letters `(generator, inverted)` of the fully expanded word.
    pub fn expand(&self) -> Vec<(String, bool)> {
        fn invert(v: Vec<(String, bool)>) -> Vec<(String, bool)> {
            v.into_iter().rev().map(|(n, i)| (n, !i)).collect()
        }
        match self {
            Word::Gen(n) => vec![(n.clone(), false)],
            Word::Inv(w) => invert(w.expand()),
            Word::Mul(ws) => ws.iter().flat_map(|w| w.expand()).collect(),
            Word::Pow(w, e) => {
                let base = if *e < 0 { invert(w.expand()) } else { w.expand() };
                (0..e.unsigned_abs()).flat_map(|_| base.clone()).collect()
            }
            Word::Conj(x, y) => {
                let (x, y) = (x.expand(), y.expand());
                invert(y.clone()).into_iter().chain(x).chain(y).collect()
            }
            Word::Comm(x, y) => {
                let (x, y) = (x.expand(), y.expand());
                invert(x.clone()).into_iter().chain(invert(y.clone())).chain(x).chain(y).collect()
            }
        }
    }

    /// Occurrences of `name` in the expansion, inverses included.
    pub fn occurrences(&self, name: &str) -> usize {
        self.expand().iter().filter(|(n, _)| n == name).count()
    }

    pub fn eval_in_group(&self, g: &WreathGroup, gens: &BTreeMap<String, GroupElement>) -> Result<GroupElement> {
        let mut acc = g.identity();
        for (n, inv) in self.expand() {
            let x = gens.get(&n).ok_or_else(|| Error::Malformed(format!("unknown generator '{n}'")))?;
            acc = g.multiply(&acc, &if inv { g.inverse(x) } else { x.clone() });
        }
        Ok(acc)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Word::Gen(n) => write!(f, "{n}"),
            Word::Inv(w) => write!(f, "({w})^-1"),
            Word::Mul(ws) => {
                let parts: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
                write!(f, "{}", parts.join("·"))
            }
            Word::Pow(w, e) => write!(f, "{w}^{e}"),
            Word::Conj(x, y) => write!(f, "{x}^({y})"),
            Word::Comm(x, y) => write!(f, "[{x}, {y}]"),
        }
    }
}

pub fn evaluate_word(a: &GeneratorAssignment, w: &Word) -> Result<Permutation> {
    let mut acc = Permutation::identity(a.degree);
    for (n, inv) in w.expand() {
        let p = a.get(&n)?;
        acc = acc.then(&if inv { p.inverse() } else { p.clone() });
    }
    Ok(acc)
}

/// Per-word `d_n(w, id)` and their maximum.
pub fn relation_defect(a: &GeneratorAssignment, words: &[Word]) -> Result<(BigRational, Vec<BigRational>)> {
    let id = Permutation::identity(a.degree);
    let per = words
        .iter()
        .map(|w| hamming(&evaluate_word(a, w)?, &id))
        .collect::<Result<Vec<_>>>()?;
    let max = per.iter().cloned().max().unwrap_or_else(BigRational::zero);
    Ok((max, per))
}

/// Exact `b, t` for `Z/2 ≀ Z/k` acting on itself by right multiplication.
pub fn regular_lamplighter_assignment(k: i64, bound: u64) -> Result<(WreathGroup, GeneratorAssignment)> {
    if k < 1 {
        return Err(Error::Config(format!("k must be positive, got {k}")));
    }
    let g = WreathGroup::lamplighter_quotient(k);
    let trivial = GoursatTriplet::in_base(&g, Submodule::zero(g.module())?);
    let b = g.from_n(g.module().delta(&g.x().basepoint(0)));
    let t = g.from_q(&g.q().whole().generators().first().cloned().unwrap_or_else(|| g.q().zero()));
    let a = coset_action(&g, &trivial, &[("b".into(), b), ("t".into(), t)], bound)?;
    Ok((g, a))
}

#[derive(Clone, Debug, Serialize)]
pub struct RelationRow {
    pub j: i64,
    pub word: String,
    #[serde(serialize_with = "crate::chabauty::ser_ratio")]
    pub exact_defect: BigRational,
    #[serde(serialize_with = "crate::chabauty::ser_ratio")]
    pub perturbed_defect: BigRational,
    /// `Σ_x c_x·d_n(x, x')` over the letters of the word.
    #[serde(serialize_with = "crate::chabauty::ser_ratio")]
    pub lipschitz_bound: BigRational,
    pub occurrences_b: usize,
    pub occurrences_t: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DemoReport {
    pub k: i64,
    pub degree: usize,
    pub perturbations: usize,
    pub target: String,
    pub seed: u64,
    #[serde(serialize_with = "crate::chabauty::ser_ratio")]
    pub dist_b: BigRational,
    #[serde(serialize_with = "crate::chabauty::ser_ratio")]
    pub dist_t: BigRational,
    pub rows: Vec<RelationRow>,
}

impl DemoReport {
    /// The exact pair satisfies every tested relation and the perturbed pair stays within its bound.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.exact_defect.is_zero() && r.perturbed_defect <= r.lipschitz_bound)
    }
}

/// `perturbations` random transpositions composed onto generator `target`.
pub fn stability_demo(k: i64, j_max: i64, perturbations: usize, target: &str, seed: u64, bound: u64) -> Result<DemoReport> {
    if target != "b" && target != "t" {
        return Err(Error::Config(format!("perturbation target must be 'b' or 't', got '{target}'")));
    }
    let (_, exact) = regular_lamplighter_assignment(k, bound)?;
    let n = exact.degree;
    let mut perturbed = exact.clone();
    let mut r = rng::stream(seed, k as u64, "perturb", 0);
    if n >= 2 {
        for _ in 0..perturbations {
            let a = r.random_range(0..n);
            let mut b = r.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            let p = perturbed.gens.get_mut(target).expect("generator present");
            *p = p.then(&Permutation::transposition(n, a, b));
        }
    }
    let dist_b = hamming(exact.get("b")?, perturbed.get("b")?)?;
    let dist_t = hamming(exact.get("t")?, perturbed.get("t")?)?;
    let words: Vec<(i64, Word)> = (1..=j_max).map(|j| (j, Word::lamplighter_relation(j))).collect();
    let ws: Vec<Word> = words.iter().map(|(_, w)| w.clone()).collect();
    let (_, exact_d) = relation_defect(&exact, &ws)?;
    let (_, pert_d) = relation_defect(&perturbed, &ws)?;
    let rows = words
        .into_iter()
        .zip(exact_d.into_iter().zip(pert_d))
        .map(|((j, w), (e, p))| {
            let (cb, ct) = (w.occurrences("b"), w.occurrences("t"));
            RelationRow {
                j,
                word: w.to_string(),
                exact_defect: e,
                perturbed_defect: p,
                lipschitz_bound: &dist_b * BigRational::from_integer(cb.into()) + &dist_t * BigRational::from_integer(ct.into()),
                occurrences_b: cb,
                occurrences_t: ct,
            }
        })
        .collect();
    Ok(DemoReport { k, degree: n, perturbations, target: target.into(), seed, dist_b, dist_t, rows })
}
