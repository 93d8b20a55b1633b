//! Staged convergence experiment with CSV and manifest output.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chabauty::{
    adapted_statistic, centered_defect, d_prob_with_prefix, folner_defect, p_statistic, tempered_ratio, transversal_measure, Enumeration,
    Estimate,
};
use crate::config::{Bounds, ExperimentConfig};
use crate::error::{Error, Result};
use crate::goursat::GoursatTriplet;
use crate::weiss::{build_scheme, transversal_check, verify_stage, Scheme, StageData, TransversalCertificate};
use crate::wreath::GroupElement;

const HEADER: [&str; 12] =
    ["stage", "statistic", "item", "num", "den", "value", "stderr", "mode", "samples", "seed", "config_hash", "error"];

pub const FAMILIES: [&str; 7] = ["p", "folner", "centered", "adapted", "tempered", "d_prob", "stages"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub stage: u64,
    pub statistic: String,
    /// Word label, shift, `Φ` index or check name.
    pub item: String,
    pub num: String,
    pub den: String,
    pub value: String,
    pub stderr: String,
    pub mode: String,
    pub samples: u64,
    pub seed: u64,
    pub config_hash: String,
    pub error: String,
}

impl Row {
    fn exact(stage: u64, statistic: &str, item: &str, r: &BigRational, hash: &str) -> Self {
        Self::from_estimate(stage, statistic, item, &Estimate::Exact(r.clone()), hash)
    }

    fn from_estimate(stage: u64, statistic: &str, item: &str, e: &Estimate, hash: &str) -> Self {
        let (num, den) = e.fraction();
        Row {
            stage,
            statistic: statistic.into(),
            item: item.into(),
            num: num.to_string(),
            den: den.to_string(),
            value: format!("{:.9}", e.value()),
            stderr: format!("{:.9}", e.stderr()),
            mode: e.mode_label(),
            samples: e.samples(),
            seed: match e {
                Estimate::Sampled { seed, .. } => *seed,
                Estimate::Exact(_) => 0,
            },
            config_hash: hash.into(),
            error: String::new(),
        }
    }

    fn note(stage: u64, statistic: &str, item: &str, text: String, hash: &str, error: bool) -> Self {
        Row {
            stage,
            statistic: statistic.into(),
            item: item.into(),
            num: String::new(),
            den: String::new(),
            value: if error { String::new() } else { text.clone() },
            stderr: String::new(),
            mode: String::new(),
            samples: 0,
            seed: 0,
            config_hash: hash.into(),
            error: if error { text } else { String::new() },
        }
    }

    pub fn is_error(&self) -> bool {
        !self.error.is_empty()
    }

    pub fn ratio(&self) -> Option<BigRational> {
        let n = self.num.parse().ok()?;
        let d = self.den.parse().ok()?;
        Some(BigRational::new(n, d))
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub config_hash: String,
    pub scheme_k: u64,
    pub rows: Vec<Row>,
}

impl ExperimentReport {
    pub fn family<'a>(&'a self, statistic: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.statistic == statistic)
    }

    pub fn find(&self, statistic: &str, item: &str, stage: u64) -> Option<&Row> {
        self.rows.iter().find(|r| r.statistic == statistic && r.item == item && r.stage == stage)
    }

    pub fn errors(&self) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.is_error()).collect()
    }

    /// Fixed-width table of the headline columns per stage.
    pub fn summary(&self) -> String {
        let mut stages: Vec<u64> = self.rows.iter().map(|r| r.stage).collect();
        stages.dedup();
        let max_of = |stat: &str, s: u64| -> String {
            self.rows
                .iter()
                .filter(|r| r.statistic == stat && r.stage == s && !r.is_error())
                .filter_map(|r| r.value.parse::<f64>().ok())
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
                .map_or("-".into(), |v| format!("{v:.6}"))
        };
        let mut out = format!(
            "{:>5}  {:>10}  {:>10}  {:>10}  {:>10}  {:>6}\n",
            "stage", "max p", "max folner", "min adapt", "d_prob", "errors"
        );
        for s in stages {
            let min_adapt = self
                .rows
                .iter()
                .filter(|r| r.statistic == "adapted" && r.stage == s)
                .filter_map(|r| r.value.parse::<f64>().ok())
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
                .map_or("-".into(), |v| format!("{v:.6}"));
            let errs = self.rows.iter().filter(|r| r.stage == s && r.is_error()).count();
            out += &format!(
                "{:>5}  {:>10}  {:>10}  {:>10}  {:>10}  {:>6}\n",
                s,
                max_of("p", s),
                max_of("folner", s),
                min_adapt,
                max_of("d_prob", s),
                errs
            );
        }
        out
    }
}

struct Inputs<'a> {
    cfg: &'a ExperimentConfig,
    bounds: Bounds,
    scheme: &'a Scheme,
    h: &'a GoursatTriplet,
    words: &'a [(String, GroupElement)],
    elems: &'a [GroupElement],
    hash: &'a str,
}

fn stage_rows(inp: &Inputs, i: u64) -> Vec<Row> {
    match stage_rows_inner(inp, i) {
        Ok(rows) => rows,
        Err(e) => vec![Row::note(i, "stages", "build", e.to_string(), inp.hash, true)],
    }
}

fn stage_rows_inner(inp: &Inputs, i: u64) -> Result<Vec<Row>> {
    let (cfg, scheme, hash) = (inp.cfg, inp.scheme, inp.hash);
    let g = &scheme.g;
    let st: StageData = scheme.stage(i)?;
    let s = cfg.sampler(i, inp.bounds.exact_max)?;
    let mut rows = vec![
        Row::note(i, "stages", "n_i", st.n_i.to_string(), hash, false),
        Row::note(i, "stages", "branch", format!("{:?}", st.branch).to_lowercase(), hash, false),
        Row::note(i, "stages", "N_i", st.n_i_sub.describe(), hash, false),
        Row::note(i, "stages", "index K_i", st.k_i.index().to_string(), hash, false),
        Row::note(i, "stages", "size F_i", st.f.size().to_string(), hash, false),
    ];
    match transversal_check(scheme, &st) {
        Ok(TransversalCertificate::Certified { q_multiplicity, t_multiplicity, .. }) => rows.push(Row::note(
            i,
            "stages",
            "transversal",
            format!("certified {q_multiplicity}x{t_multiplicity}"),
            hash,
            false,
        )),
        Ok(TransversalCertificate::NotYet { reason }) => {
            rows.push(Row::note(i, "stages", "transversal", format!("not yet: {reason}"), hash, false))
        }
        Err(e) => rows.push(Row::note(i, "stages", "transversal", e.to_string(), hash, true)),
    }
    if cfg.verify_samples > 0 {
        let rep = verify_stage(scheme, &st, cfg.verify_samples, cfg.seed)?;
        for c in rep.checks {
            let text = format!("{}/{} violations", c.violations, c.trials);
            let failed = c.violations > 0;
            let detail = match (&c.first_failure, failed) {
                (Some(f), true) => format!("{text}: {f}"),
                _ => text,
            };
            rows.push(Row::note(i, "stages", &format!("verify {}", c.name), detail, hash, failed));
        }
    }

    for (label, w) in inp.words {
        let est = p_statistic(g, w, &st.k_i, inp.h, &st.f, &s, i, &format!("p/{label}"));
        rows.push(Row::from_estimate(i, "p", label, &est, hash));
        rows.push(Row::exact(i, "folner", label, &folner_defect(g, &st.f, w), hash));
        for (pi, phi) in cfg.phi.iter().enumerate() {
            let a = adapted_statistic(g, &st.f, &st.i_set, w, phi);
            rows.push(Row::exact(i, "adapted", &format!("{label}|phi{pi}"), &a, hash));
        }
    }
    for r in &cfg.shifts {
        if g.q().check(r).is_err() {
            return Err(Error::Config(format!("shift {r:?} is not an element of Q")));
        }
        let c = centered_defect(g.q(), &st.i_set, r);
        rows.push(Row::exact(i, "centered", &format!("{r:?}"), &c, hash));
    }
    let k = scheme.k() as i64;
    let prefix = (1..=i as i64).map(|j| g.q().box_elements(j * k)).collect::<Result<Vec<_>>>()?;
    rows.push(Row::exact(i, "tempered", "I_1..I_i", &tempered_ratio(g.q(), &prefix), hash));

    let mu = transversal_measure(g, &st.f, &st.k_i, &s, i, "d_prob")?;
    let nu = transversal_measure(g, &st.f, inp.h, &s, i, "d_prob")?;
    let d = d_prob_with_prefix(g, &mu, &nu, cfg.depth, inp.elems)?;
    let mut row = Row::exact(i, "d_prob", &format!("D={}", cfg.depth), &d, hash);
    if mu.estimated {
        let n = match s.mode {
            crate::chabauty::Mode::MonteCarlo(n) => n,
            crate::chabauty::Mode::Exact => s.fallback_samples,
        };
        row.mode = format!("mc:{n}");
        row.samples = n;
        row.seed = s.seed;
    }
    rows.push(row);
    Ok(rows)
}

/// Runs every configured stage; stage failures become error rows.
pub fn run_experiment(cfg: &ExperimentConfig, bounds: Bounds) -> Result<ExperimentReport> {
    cfg.check()?;
    let g = cfg.group.build()?;
    let h = cfg.subgroup.build(&g)?;
    let words = cfg
        .words
        .iter()
        .map(|w| Ok((w.label.clone(), w.build(&g)?)))
        .collect::<Result<Vec<_>>>()?;
    for phi in &cfg.phi {
        for n in phi {
            g.module().normalize(n).map_err(|e| Error::Config(format!("phi: {e}")))?;
        }
    }
    let mut scheme = build_scheme(&g, &h)?;
    scheme.probe_bound = bounds.probe_bound;
    let mut en = Enumeration::new(&g);
    let m = crate::chabauty::elements_for_pairs(cfg.depth);
    let elems = en.prefix(m)?.to_vec();
    let hash = cfg.hash();
    let inp = Inputs { cfg, bounds, scheme: &scheme, h: &h, words: &words, elems: &elems, hash: &hash };
    let (a, b) = cfg.stages;
    let per: Vec<Vec<Row>> = (a..=b).into_par_iter().map(|i| stage_rows(&inp, i)).collect();
    Ok(ExperimentReport { config_hash: hash.clone(), scheme_k: scheme.k(), rows: per.into_iter().flatten().collect() })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub files: BTreeMap<String, String>,
    pub rows: usize,
    pub errors: usize,
    pub version: String,
    pub unix_time: u64,
}

/// Refuses an output directory whose manifest records a different config hash.
pub fn check_out_dir(out: &Path, hash: &str) -> Result<()> {
    let path = out.join("manifest.json");
    if !path.exists() {
        return Ok(());
    }
    let old: Manifest = serde_json::from_str(&fs::read_to_string(&path)?)?;
    if old.config_hash != hash {
        return Err(Error::Config(format!(
            "{} holds results for config {}, not {hash}; choose another --out",
            out.display(),
            old.config_hash
        )));
    }
    Ok(())
}

/// One CSV per family, then `manifest.json`; the timestamp lives only in the manifest.
pub fn write_report(out: &Path, cfg: &ExperimentConfig, rep: &ExperimentReport) -> Result<Manifest> {
    check_out_dir(out, &rep.config_hash)?;
    fs::create_dir_all(out)?;
    let mut files = BTreeMap::new();
    for fam in FAMILIES {
        let name = format!("{fam}.csv");
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(out.join(&name))?;
        w.write_record(HEADER)?;
        for r in rep.family(fam) {
            w.serialize(r)?;
        }
        w.flush()?;
        files.insert(fam.to_string(), name);
    }
    let unix_time = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = Manifest {
        config_hash: rep.config_hash.clone(),
        config: cfg.clone(),
        files,
        rows: rep.rows.len(),
        errors: rep.errors().len(),
        version: env!("CARGO_PKG_VERSION").into(),
        unix_time,
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
