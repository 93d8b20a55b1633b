//! The staged controlled approximation `(K_i, M_i, T_i)` of a subgroup `H`
//! and its product transversals `F_i = I_i·E_i^{Z_i}`.
//!
//! Three configurations are handled exactly:
//! finite `X`; `Q` of free rank at most one with finite `B` and finite
//! quotients `V\X`; and `R = Q_H` of finite index with `N_H` of finite
//! index, where `N_i = N_H`.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fg_abelian::{decompose, AbelianElement, AbelianSubgroup, DecompositionScheme, Index};
use crate::goursat::{separating_subgroup, GoursatTriplet, ProductTransversal, ValueBox};
use crate::lattice::Lattice;
use crate::perm_module::{FactorMap, ModuleElement, Submodule, XPoint};
use crate::rng;
use crate::wreath::WreathGroup;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Pullback,
    Shortcut,
}

#[derive(Clone, Debug)]
pub struct Scheme {
    pub g: WreathGroup,
    pub h: GoursatTriplet,
    pub decomposition: DecompositionScheme,
    pub normalizer_index: u64,
    shortcut: bool,
    pullback: std::result::Result<(), String>,
    /// Largest `|T_i|` enumerated when separating with infinite `B`.
    pub probe_bound: u64,
}

fn factorial(i: u64) -> Option<i64> {
    (1..=i as i64).try_fold(1i64, |a, x| a.checked_mul(x))
}

/// Rejects `H` when the construction is not available, naming the failing requirement.
pub fn build_scheme(g: &WreathGroup, h: &GoursatTriplet) -> Result<Scheme> {
    let problems = h.validate(g);
    if !problems.is_empty() {
        return Err(Error::Validation(problems.join("; ")));
    }
    let normalizer_index = match h.normalizer_index_in_n(g)? {
        Index::Finite(d) => d,
        Index::Infinite => {
            return Err(Error::Hypothesis(
                "the normalizer of H in N has infinite index; no controlled approximation is constructed".into(),
            ))
        }
    };
    let q = g.q();
    let stabs = g.x().stabilizers();
    let r = h.qh().clone();
    let decomposition = decompose(q, &r, stabs)?;
    decomposition.verify(stabs)?;
    let shortcut = r.index().is_finite() && h.nh().index().is_finite();
    let pullback = if g.x().is_finite() {
        Ok(())
    } else if q.free_rank() > 1 {
        Err("Q has free rank above one and X is infinite".to_string())
    } else if !g.b().is_finite() {
        Err("B is infinite and X is infinite".to_string())
    } else if let Some(l) = stabs.iter().position(|s| !s.sum(&decomposition.v).index().is_finite()) {
        Err(format!("the quotient V\\X_{l} is infinite"))
    } else {
        Ok(())
    };
    if !shortcut {
        if let Err(why) = &pullback {
            return Err(Error::Unsupported(format!(
                "no exact construction: {why}, and H does not have finite index"
            )));
        }
    }
    Ok(Scheme { g: g.clone(), h: h.clone(), decomposition, normalizer_index, shortcut, pullback, probe_bound: 1 << 20 })
}

#[derive(Clone, Debug)]
pub struct StageData {
    pub i: u64,
    pub n_i: i64,
    pub q_i: AbelianSubgroup,
    pub v_i: AbelianSubgroup,
    pub v_i_basis: Vec<AbelianElement>,
    pub i_set: Vec<AbelianElement>,
    /// `Y_i`, sorted; `None` when infinite (shortcut only).
    pub y: Option<Vec<XPoint>>,
    pub z: Vec<XPoint>,
    pub e: ValueBox,
    pub n_i_sub: Submodule,
    pub k_i: GoursatTriplet,
    pub f: ProductTransversal,
    pub branch: Branch,
}

impl StageData {
    /// `M_i = B^{Y_i}` membership.
    pub fn in_m(&self, n: &ModuleElement) -> bool {
        match &self.y {
            Some(y) => n.support().keys().all(|p| y.binary_search(p).is_ok()),
            None => true,
        }
    }

    /// A copy with `N_i` replaced by all of `N`, for negative controls.
    pub fn corrupted(&self, g: &WreathGroup) -> Result<StageData> {
        let mut s = self.clone();
        s.n_i_sub = Submodule::full(g.module())?;
        s.k_i = GoursatTriplet::new(g, self.k_i.lifts().to_vec(), s.n_i_sub.clone())?;
        Ok(s)
    }
}

fn orbit(g: &WreathGroup, start: &XPoint, gens: &[AbelianElement], bound: usize) -> Result<BTreeSet<XPoint>> {
    let q = g.q();
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(x) = queue.pop_front() {
        for s in gens {
            for t in [s.clone(), q.neg(s)] {
                let y = g.x().act_point(&t, &x);
                if seen.insert(y.clone()) {
                    if seen.len() > bound {
                        return Err(Error::IndexTooLarge { index: format!("more than {bound} window points"), bound: bound as u64 });
                    }
                    queue.push_back(y);
                }
            }
        }
    }
    Ok(seen)
}

impl Scheme {
    pub fn k(&self) -> u64 {
        self.decomposition.k
    }

    pub fn uses_shortcut(&self) -> bool {
        self.shortcut
    }

    /// `e_i = i!`; for finite `B` every box is `B`, so the value only has to be positive.
    pub fn e_schedule(&self, i: u64) -> Result<i64> {
        match factorial(i) {
            Some(e) => Ok(e),
            None if self.g.b().is_finite() => Ok(i64::MAX),
            None => Err(Error::Unsupported(format!("e_{i} = {i}! exceeds i64"))),
        }
    }

    fn window_y(&self, i_set: &[AbelianElement], v_i: &AbelianSubgroup) -> Result<(Vec<XPoint>, FactorMap, Vec<XPoint>)> {
        let g = &self.g;
        let d = &self.decomposition;
        let mut y = BTreeSet::new();
        for (l, (wl, _)) in d.w.iter().enumerate() {
            let gens = d.u.sum(wl).generators();
            let base = orbit(g, &g.x().basepoint(l), &gens, 1 << 20)?;
            for x in &base {
                for b in i_set {
                    y.insert(g.x().act_point(b, x));
                }
            }
        }
        let y: Vec<XPoint> = y.into_iter().collect();
        let map = FactorMap::new(g.x(), v_i);
        let tpoints = map.target().points()?;
        let pushed: BTreeSet<XPoint> = y.iter().map(|x| map.push_point(x)).collect();
        if pushed.len() != y.len() || pushed.len() != tpoints.len() {
            return Err(Error::Validation(format!(
                "Y_i is not a transversal of the factor map: {} points, {} images, {} targets",
                y.len(),
                pushed.len(),
                tpoints.len()
            )));
        }
        Ok((y, map, tpoints))
    }

    pub fn stage(&self, i: u64) -> Result<StageData> {
        if i == 0 {
            return Err(Error::Config("stages are numbered from 1".into()));
        }
        let g = &self.g;
        let pm = g.module();
        let q = g.q();
        let d = &self.decomposition;
        let n_i = (i as i64)
            .checked_mul(d.k as i64)
            .ok_or_else(|| Error::Unsupported("n_i overflows".into()))?;
        let q_i = d.r.sum(&q.power_subgroup(n_i)?);
        let v_i_basis: Vec<AbelianElement> = d.v_basis.iter().map(|v| q.scale(n_i, v)).collect();
        let v_i = q.subgroup(v_i_basis.iter().cloned());
        if d.r.sum(&v_i) != q_i || !d.r.intersect(&v_i).is_subgroup_of(&q.trivial()) {
            return Err(Error::Validation("Q_i = R ⊕ V_i fails".into()));
        }
        let i_set = q.box_elements(n_i)?;
        let z = g.x().window(&i_set);
        let e = ValueBox::new(g.b(), self.e_schedule(i)?);
        let f = ProductTransversal { i_set: i_set.clone(), z: z.clone(), e: e.clone() };

        let shortcut_here = self.shortcut && q_i.generators().iter().all(|x| self.h.nh().is_invariant(pm, x));
        let (y, n_i_sub, branch) = if shortcut_here {
            let y = if g.x().is_finite() { Some(g.x().points()?) } else { None };
            (y, self.h.nh().clone(), Branch::Shortcut)
        } else {
            if let Err(why) = &self.pullback {
                return Err(Error::Unsupported(format!("stage {i}: {why}")));
            }
            let (y, map, tpoints) = self.window_y(&i_set, &v_i)?;
            if !z.iter().all(|x| y.binary_search(x).is_ok()) {
                return Err(Error::Validation("Z_i is not inside Y_i".into()));
            }
            let win = self.h.nh().window_lattice(pm, &y)?;
            let gens: Vec<ModuleElement> =
                win.rows().iter().map(|r| map.push(pm, &pm.devectorize(&y, r))).collect();
            let n_i_sub = if g.b().is_finite() {
                Submodule::pullback(pm, &v_i, &gens, false)?
            } else {
                let tm = map.target_module(pm);
                let l = tm.span(&tpoints, &gens)?;
                let size = f.t_size();
                let n = num_traits::ToPrimitive::to_u64(&size)
                    .filter(|&n| n <= self.probe_bound)
                    .ok_or_else(|| Error::IndexTooLarge { index: size.to_string(), bound: self.probe_bound })?;
                let probe: Vec<Vec<i64>> = (0..n)
                    .map(|k| tm.vectorize(&tpoints, &map.push(pm, &f.nth_t(g, k))))
                    .collect::<Result<_>>()?;
                let (lat, _) = separating_subgroup(&l, &probe)?;
                Submodule::pullback_lattice(pm, map, tpoints, lat)?
            };
            (Some(y), n_i_sub, Branch::Pullback)
        };

        let mut lifts: Vec<(AbelianElement, ModuleElement)> = self.h.lifts().to_vec();
        lifts.extend(v_i_basis.iter().map(|v| (v.clone(), ModuleElement::zero())));
        let k_i = GoursatTriplet::new(g, lifts, n_i_sub.clone())?;
        if k_i.qh() != &q_i {
            return Err(Error::Validation("lifts of K_i do not generate Q_i".into()));
        }
        let problems = k_i.validate(g);
        if !problems.is_empty() {
            return Err(Error::Validation(format!("K_{i} is not a subgroup: {}", problems.join("; "))));
        }
        if !k_i.index().is_finite() {
            return Err(Error::Validation(format!("K_{i} has infinite index")));
        }
        Ok(StageData { i, n_i, q_i, v_i, v_i_basis, i_set, y, z, e, n_i_sub, k_i, f, branch })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub trials: u64,
    pub violations: u64,
    pub first_failure: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub stage: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.violations == 0)
    }

    pub fn violations(&self) -> u64 {
        self.checks.iter().map(|c| c.violations).sum()
    }
}

struct Tally {
    check: Check,
}

impl Tally {
    fn new(name: &str) -> Self {
        Tally { check: Check { name: name.into(), trials: 0, violations: 0, first_failure: None } }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.check.trials += 1;
        if !ok {
            self.check.violations += 1;
            if self.check.first_failure.is_none() {
                self.check.first_failure = Some(what());
            }
        }
    }
}

fn random_in_lattice<R: Rng>(g: &WreathGroup, lat: &Lattice, points: &[XPoint], rng: &mut R) -> ModuleElement {
    let dim = lat.dim();
    let mut v = vec![0i64; dim];
    for row in lat.rows() {
        let c: i64 = rng.random_range(-2..=2);
        for (a, b) in v.iter_mut().zip(row) {
            *a += c * b;
        }
    }
    g.module().devectorize(points, &v)
}

/// Exact window checks plus `samples` random trials of each stage check.
pub fn verify_stage(scheme: &Scheme, st: &StageData, samples: u64, seed: u64) -> Result<VerifyReport> {
    let g = &scheme.g;
    let pm = g.module();
    let h = &scheme.h;
    let ni = &st.n_i_sub;
    let mut checks = Vec::new();

    let mut consistent = Tally::new("consistency of R-lifts");
    for (a, b) in h.lifts().iter().zip(st.k_i.lifts()) {
        consistent.record(a == b, || format!("lift {a:?} replaced by {b:?}"));
    }
    checks.push(consistent.check);

    // coordinates where exact window comparisons are made
    let window: Vec<XPoint> = st.y.clone().unwrap_or_else(|| st.z.clone());
    let nh_win = h.nh().window_lattice(pm, &window)?;
    let ni_win = ni.window_lattice(pm, &window)?;
    let mut contain = Tally::new("N_H ∩ M_i ≤ N_i ∩ M_i");
    for r in nh_win.rows() {
        contain.record(ni_win.contains(r), || format!("generator {r:?} of N_H ∩ M_i is not in N_i"));
    }
    checks.push(contain.check);
    if g.b().is_finite() {
        let mut eq = Tally::new("window equality N_H ∩ M_i = N_i ∩ M_i");
        eq.record(nh_win == ni_win, || "window lattices differ".into());
        checks.push(eq.check);
    }

    let mut rng = rng::stream(seed, st.i, "verify", 0);
    let mut tset = Tally::new("T_i + (N_H ∩ M_i) avoids N_H △ N_i");
    for _ in 0..samples {
        let t = st.f.sample(g, &mut rng).n;
        let n = random_in_lattice(g, &nh_win, &window, &mut rng);
        let x = pm.add(&t, &n);
        let ok = h.nh().contains(pm, &x) == ni.contains(pm, &x);
        tset.record(ok, || format!("t + n = {x:?}"));
    }
    checks.push(tset.check);

    let nn = h.normalizer_in_n(g)?;
    let nn_win = nn.window_lattice(pm, &window)?;
    let mut norm = Tally::new("N_N(H) ∩ M_i ≤ N_N(K_i)");
    for _ in 0..samples {
        let m = random_in_lattice(g, &nn_win, &window, &mut rng);
        let ok = st.k_i.normalized_by(g, &m);
        norm.record(ok, || format!("m = {m:?}"));
    }
    checks.push(norm.check);

    let mut comm = Tally::new("[v, g] ∈ N_i");
    for _ in 0..samples {
        let mut v = g.q().zero();
        for b in &st.v_i_basis {
            v = g.q().add(&v, &g.q().scale(rng.random_range(-3..=3), b));
        }
        let x = st.f.sample(g, &mut rng);
        let c = g.commutator(&g.from_q(&v), &x);
        comm.record(g.q().is_zero(&c.q) && ni.contains(pm, &c.n), || format!("v = {v:?}, g = {x:?}"));
    }
    checks.push(comm.check);

    Ok(VerifyReport { stage: st.i, checks })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum TransversalCertificate {
    /// `I_i` meets each coset of `Q_i` `q_multiplicity` times and `T_i` meets each
    /// coset of `N_N(K_i)` `t_multiplicity` times.
    Certified { q_multiplicity: u64, t_multiplicity: String, normalizer_index: u64 },
    NotYet { reason: String },
}

/// Certifies `F_i` as a finite-to-one transversal of `Q_i ⋉ N_N(K_i) ≤ N_G(K_i)`.
pub fn transversal_check(scheme: &Scheme, st: &StageData) -> Result<TransversalCertificate> {
    let g = &scheme.g;
    let pm = g.module();
    let Some(mq) = crate::fg_abelian::is_finite_to_one_transversal(&st.i_set, &st.q_i)? else {
        return Ok(TransversalCertificate::NotYet { reason: "I_i is not a finite-to-one transversal of Q_i".into() });
    };
    let nn = st.k_i.normalizer_in_n(g)?;
    let Index::Finite(d) = nn.index() else {
        return Ok(TransversalCertificate::NotYet { reason: "N_N(K_i) has infinite index".into() });
    };
    let win = nn.window_lattice(pm, &st.z)?;
    if win.index() != Some(d) {
        return Ok(TransversalCertificate::NotYet {
            reason: format!("B^{{Z_i}} does not yet see the full index {d} of N_N(K_i)"),
        });
    }
    // E_i^{Z_i} is a transversal of (e_i·B)^{Z_i} on the free coordinates
    let db = g.b().dim();
    let free = g.b().free_rank();
    let dim = win.dim();
    for p in 0..st.z.len() {
        for c in 0..free {
            let mut v = vec![0i64; dim];
            v[p * db + c] = st.e.k;
            if !win.contains(&v) {
                return Ok(TransversalCertificate::NotYet {
                    reason: format!("e_{} = {} is not a multiple of the exponent needed", st.i, st.e.k),
                });
            }
        }
    }
    let t = st.f.t_size() / num_bigint::BigUint::from(d);
    Ok(TransversalCertificate::Certified { q_multiplicity: mq, t_multiplicity: t.to_string(), normalizer_index: d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fg_abelian::FgAbelianGroup;
    use crate::perm_module::QSet;

    fn lamp() -> WreathGroup {
        WreathGroup::lamplighter()
    }

    fn delta(g: &WreathGroup, e: i64) -> ModuleElement {
        g.module().delta(&g.x().point(0, &[e]))
    }

    fn ideal(g: &WreathGroup, c: &[u64]) -> GoursatTriplet {
        GoursatTriplet::in_base(g, Submodule::laurent_poly(g.module(), c).unwrap())
    }

    #[test]
    fn flagship_scheme_and_stage_three() {
        let g = lamp();
        let s = build_scheme(&g, &ideal(&g, &[1, 1])).unwrap();
        assert_eq!(s.k(), 1);
        let st = s.stage(3).unwrap();
        assert_eq!(st.q_i, g.q().subgroup([vec![3]]));
        assert_eq!(st.z, vec![g.x().point(0, &[-1]), g.x().point(0, &[0]), g.x().point(0, &[1])]);
        assert_eq!(st.n_i_sub, Submodule::laurent_poly(g.module(), &[1, 1]).unwrap());
        assert_eq!(st.branch, Branch::Pullback);
        assert!(verify_stage(&s, &st, 200, 1).unwrap().passed());
    }

    #[test]
    fn shortcut_scheme() {
        let g = lamp();
        let pm = g.module();
        let h = GoursatTriplet::new_validated(&g, vec![(vec![2], delta(&g, 0))], Submodule::laurent_poly(pm, &[1, 1, 0, 1]).unwrap()).unwrap();
        let s = build_scheme(&g, &h).unwrap();
        assert_eq!(s.k(), 2);
        for i in 1..=4 {
            let st = s.stage(i).unwrap();
            assert_eq!(st.branch, Branch::Shortcut);
            assert_eq!(st.k_i.canonical(&g), h.canonical(&g));
            assert!(verify_stage(&s, &st, 50, 2).unwrap().passed());
        }
    }

    #[test]
    fn infinite_normalizer_rejected() {
        let g = lamp();
        let h = GoursatTriplet::new_validated(&g, vec![(vec![1], ModuleElement::zero())], Submodule::zero(g.module()).unwrap()).unwrap();
        assert!(matches!(build_scheme(&g, &h), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn unsupported_rank_two_rejected() {
        let q = FgAbelianGroup::free(2);
        let g = WreathGroup::regular(FgAbelianGroup::cyclic(2).unwrap(), q);
        let h = GoursatTriplet::in_base(&g, Submodule::full(g.module()).unwrap());
        match build_scheme(&g, &h) {
            Err(Error::Unsupported(msg)) => assert!(msg.contains("free rank")),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn trinomial_stages_are_not_normal_off_multiples_of_three() {
        let g = lamp();
        let s = build_scheme(&g, &ideal(&g, &[1, 1, 1])).unwrap();
        for i in 1..=7 {
            let st = s.stage(i).unwrap();
            let laurent = matches!(st.n_i_sub, Submodule::Laurent { .. });
            assert_eq!(laurent, i % 3 == 0 || i < 3, "stage {i}: {}", st.n_i_sub.describe());
            assert!(verify_stage(&s, &st, 100, 3).unwrap().passed());
        }
    }

    #[test]
    fn mutation_caught() {
        let g = lamp();
        let s = build_scheme(&g, &ideal(&g, &[1, 1])).unwrap();
        let st = s.stage(4).unwrap().corrupted(&g).unwrap();
        assert!(!verify_stage(&s, &st, 200, 1).unwrap().passed());
    }

    #[test]
    fn finite_x_stage() {
        let q = FgAbelianGroup::cyclic(4).unwrap();
        let g = WreathGroup::new(q.clone(), FgAbelianGroup::cyclic(2).unwrap(), QSet::regular(&q));
        let h = GoursatTriplet::in_base(&g, Submodule::finite_x(g.module(), &[delta(&g, 0)]).unwrap());
        let s = build_scheme(&g, &h).unwrap();
        for i in 1..=3 {
            let st = s.stage(i).unwrap();
            assert!(st.k_i.index().is_finite());
            assert!(verify_stage(&s, &st, 100, 4).unwrap().passed(), "stage {i}");
        }
    }

    #[test]
    fn transversal_certificates() {
        let g = lamp();
        let s = build_scheme(&g, &ideal(&g, &[1, 1])).unwrap();
        let st = s.stage(4).unwrap();
        match transversal_check(&s, &st).unwrap() {
            TransversalCertificate::Certified { q_multiplicity, normalizer_index, .. } => {
                assert_eq!(q_multiplicity, 1);
                assert_eq!(normalizer_index, 1);
            }
            other => panic!("{other:?}"),
        }
        // Z/2 swapping two copies of Z; N_N(H) = {a ≡ b mod 3} has index 3, so e_i must be a multiple of 3
        let q2 = FgAbelianGroup::cyclic(2).unwrap();
        let g2 = WreathGroup::regular(FgAbelianGroup::free(1), q2);
        let pm = g2.module();
        let (x0, x1) = (g2.x().point(0, &[0]), g2.x().point(0, &[1]));
        let nh = Submodule::finite_x(pm, &[pm.single(&x0, &[3]), pm.single(&x1, &[3])]).unwrap();
        let h = GoursatTriplet::new_validated(&g2, vec![(vec![1], ModuleElement::zero())], nh).unwrap();
        let s2 = build_scheme(&g2, &h).unwrap();
        assert_eq!(s2.normalizer_index, 3);
        for i in 1..=2 {
            let st = s2.stage(i).unwrap();
            assert!(matches!(transversal_check(&s2, &st).unwrap(), TransversalCertificate::NotYet { .. }));
        }
        match transversal_check(&s2, &s2.stage(3).unwrap()).unwrap() {
            TransversalCertificate::Certified { t_multiplicity, normalizer_index, .. } => {
                assert_eq!(normalizer_index, 3);
                assert_eq!(t_multiplicity, "12");
            }
            other => panic!("{other:?}"),
        }
    }
}
