//! JSON experiment configuration and its presets.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chabauty::{Mode, Sampler};
use crate::error::{Error, Result};
use crate::fg_abelian::FgAbelianGroup;
use crate::goursat::GoursatTriplet;
use crate::perm_module::{ModuleElement, QSet, Submodule};
use crate::wreath::{GroupElement, WreathGroup};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Lamplighter,
    LamplighterQuotient { k: i64 },
    /// `stabilizers[l]` lists generators of `S_l`; omitted means the regular action.
    Custom { q: FgAbelianGroup, b: FgAbelianGroup, stabilizers: Option<Vec<Vec<Vec<i64>>>> },
}

impl GroupSpec {
    pub fn build(&self) -> Result<WreathGroup> {
        Ok(match self {
            GroupSpec::Lamplighter => WreathGroup::lamplighter(),
            GroupSpec::LamplighterQuotient { k } if *k >= 1 => WreathGroup::lamplighter_quotient(*k),
            GroupSpec::LamplighterQuotient { k } => return Err(Error::Config(format!("k must be positive, got {k}"))),
            GroupSpec::Custom { q, b, stabilizers } => {
                let x = match stabilizers {
                    None => QSet::regular(q),
                    Some(s) => {
                        for gens in s {
                            for v in gens {
                                q.check(v).map_err(|e| Error::Config(e.to_string()))?;
                            }
                        }
                        QSet::new(q.clone(), s.iter().map(|gens| q.subgroup(gens.iter().cloned())).collect())?
                    }
                };
                WreathGroup::new(q.clone(), b.clone(), x)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NhSpec {
    Zero,
    Full,
    /// Coefficients of a polynomial over `F_p`, lowest degree first.
    Ideal(Vec<u64>),
    /// Submodule generated by the listed elements (finite `X` only).
    Generators(Vec<ModuleElement>),
    /// `π_V^{-1}` of the span of `generators` in `B^{V\X}`.
    Pullback { v: Vec<Vec<i64>>, generators: Vec<ModuleElement> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftSpec {
    pub q: Vec<i64>,
    #[serde(default)]
    pub a: ModuleElement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgroupSpec {
    #[serde(default)]
    pub lifts: Vec<LiftSpec>,
    pub nh: NhSpec,
}

impl SubgroupSpec {
    pub fn build(&self, g: &WreathGroup) -> Result<GoursatTriplet> {
        let pm = g.module();
        let bad = |e: Error| Error::Config(format!("subgroup: {e}"));
        let nh = match &self.nh {
            NhSpec::Zero => Submodule::zero(pm),
            NhSpec::Full => Submodule::full(pm),
            NhSpec::Ideal(c) => Submodule::laurent_poly(pm, c),
            NhSpec::Generators(gs) => {
                let gs = gs.iter().map(|n| pm.normalize(n)).collect::<Result<Vec<_>>>().map_err(bad)?;
                Submodule::finite_x(pm, &gs)
            }
            NhSpec::Pullback { v, generators } => {
                let v = g.q().subgroup(v.iter().cloned());
                Submodule::pullback(pm, &v, generators, false)
            }
        }
        .map_err(bad)?;
        let lifts = self.lifts.iter().map(|l| (l.q.clone(), l.a.clone())).collect();
        GoursatTriplet::new_validated(g, lifts, nh).map_err(bad)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordSpec {
    pub label: String,
    pub q: Vec<i64>,
    #[serde(default)]
    pub n: ModuleElement,
}

impl WordSpec {
    pub fn build(&self, g: &WreathGroup) -> Result<GroupElement> {
        g.element(&self.q, &self.n).map_err(|e| Error::Config(format!("word '{}': {e}", self.label)))
    }
}

fn default_depth() -> u64 {
    128
}

fn default_mode() -> String {
    "exact".into()
}

fn default_samples() -> u64 {
    100_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub group: GroupSpec,
    pub subgroup: SubgroupSpec,
    pub stages: (u64, u64),
    pub words: Vec<WordSpec>,
    /// Finite sets `Φ` for the adapted statistic.
    #[serde(default)]
    pub phi: Vec<Vec<ModuleElement>>,
    /// Shifts `r` for the centered defect of `I_i`.
    #[serde(default)]
    pub shifts: Vec<Vec<i64>>,
    #[serde(default = "default_depth")]
    pub depth: u64,
    /// `exact` or `mc:N`.
    #[serde(default = "default_mode")]
    pub mode: String,
    /// In exact mode, stages above this are sampled with `mc_samples`.
    #[serde(default)]
    pub exact_through: Option<u64>,
    #[serde(default = "default_samples")]
    pub mc_samples: u64,
    #[serde(default)]
    pub seed: u64,
    /// Random trials per stage check; 0 skips stage verification.
    #[serde(default)]
    pub verify_samples: u64,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        let (a, b) = self.stages;
        if a == 0 || b < a {
            return Err(Error::Config(format!("stage range {a}..{b} is empty or starts at 0")));
        }
        if self.depth == 0 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        self.parsed_mode()?;
        Ok(())
    }

    pub fn parsed_mode(&self) -> Result<Mode> {
        self.mode.parse()
    }

    /// Evaluation plan for stage `i`.
    pub fn sampler(&self, i: u64, exact_max: u64) -> Result<Sampler> {
        let mode = match self.parsed_mode()? {
            Mode::Exact if self.exact_through.is_some_and(|t| i > t) => Mode::MonteCarlo(self.mc_samples),
            m => m,
        };
        Ok(Sampler { mode, seed: self.seed, exact_max, fallback_samples: self.mc_samples })
    }

    /// SHA-256 of the compact JSON serialization.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn delta(coset: i64) -> ModuleElement {
    let g = WreathGroup::lamplighter();
    g.module().delta(&g.x().point(0, &[coset]))
}

fn lamp_sum(cosets: &[i64]) -> ModuleElement {
    let g = WreathGroup::lamplighter();
    cosets.iter().fold(ModuleElement::zero(), |acc, &c| g.module().add(&acc, &delta(c)))
}

fn lamplighter_words() -> Vec<WordSpec> {
    let w = |label: &str, q: i64, n: ModuleElement| WordSpec { label: label.into(), q: vec![q], n };
    vec![
        w("t", 1, ModuleElement::zero()),
        w("t^2", 2, ModuleElement::zero()),
        w("t^3", 3, ModuleElement::zero()),
        w("b", 0, delta(0)),
        w("b·b^t", 0, lamp_sum(&[0, -1])),
        w("tb", 1, delta(0)),
    ]
}

/// `Z/2 ≀ Z` with `H = ideal(1 + t)` in the base.
pub fn flagship() -> ExperimentConfig {
    ExperimentConfig {
        group: GroupSpec::Lamplighter,
        subgroup: SubgroupSpec { lifts: Vec::new(), nh: NhSpec::Ideal(vec![1, 1]) },
        stages: (1, 10),
        words: lamplighter_words(),
        phi: vec![vec![lamp_sum(&[0, 2])]],
        shifts: vec![vec![1], vec![2], vec![-3]],
        depth: 128,
        mode: "exact".into(),
        exact_through: Some(5),
        mc_samples: 100_000,
        seed: 20_240_601,
        verify_samples: 0,
    }
}

/// `H = ideal(1 + t + t^2)`, whose stages are not normal unless `3 | i`.
pub fn trinomial() -> ExperimentConfig {
    ExperimentConfig {
        subgroup: SubgroupSpec { lifts: Vec::new(), nh: NhSpec::Ideal(vec![1, 1, 1]) },
        stages: (1, 7),
        exact_through: None,
        ..flagship()
    }
}

/// Finite-index `H` with `Q_H = 2Z`, `N_H = ideal(1 + t + t^3)` and lift `δ_0`.
pub fn shortcut() -> ExperimentConfig {
    ExperimentConfig {
        subgroup: SubgroupSpec {
            lifts: vec![LiftSpec { q: vec![2], a: delta(0) }],
            nh: NhSpec::Ideal(vec![1, 1, 0, 1]),
        },
        stages: (1, 6),
        exact_through: None,
        ..flagship()
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    match name {
        "flagship" => Ok(flagship()),
        "trinomial" => Ok(trinomial()),
        "shortcut" => Ok(shortcut()),
        _ => Err(Error::Config(format!("unknown preset '{name}' (flagship, trinomial, shortcut)"))),
    }
}

/// Numeric bound from the environment, or `default` when unset.
pub fn env_bound(var: &str, default: u64) -> Result<u64> {
    match std::env::var(var) {
        Ok(s) => s.trim().parse().map_err(|_| Error::Config(format!("{var}={s} is not a non-negative integer"))),
        Err(_) => Ok(default),
    }
}

/// Bounds that environment variables may override.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    /// `COSOFIC_EXACT_MAX`: largest `|F_i|` evaluated exhaustively.
    pub exact_max: u64,
    /// `COSOFIC_AUDIT_MAX`: largest finite quotient audited.
    pub audit_max: u64,
    /// `COSOFIC_DEGREE_MAX`: largest permutation degree.
    pub degree_max: u64,
    /// `COSOFIC_PROBE_MAX`: largest probe set enumerated when `B` is infinite.
    pub probe_bound: u64,
}

impl Bounds {
    pub fn from_env() -> Result<Self> {
        Ok(Bounds {
            exact_max: env_bound("COSOFIC_EXACT_MAX", 1 << 24)?,
            audit_max: env_bound("COSOFIC_AUDIT_MAX", 10_000)?,
            degree_max: env_bound("COSOFIC_DEGREE_MAX", 10_000)?,
            probe_bound: env_bound("COSOFIC_PROBE_MAX", 1 << 20)?,
        })
    }
}
