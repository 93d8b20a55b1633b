//! Subcommands behind the `cosofic` binary.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::chabauty::Mode;
use crate::config::{self, Bounds, ExperimentConfig};
use crate::error::{Error, Result};
use crate::experiment::{run_experiment, write_report};
use crate::finite::goursat_audit;
use crate::selftest::metrics_selftest;
use crate::stability::stability_demo;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "cosofic", version, about = "Subgroup approximation experiments for wreath products")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Brute-force subgroups of Z/2 wr Z/k against Goursat triplets.
    GoursatAudit(AuditArgs),
    /// Staged approximation experiment from a JSON config or preset.
    WeissRun(WeissArgs),
    /// Permutation witnesses for the lamplighter relations.
    StabilityDemo(StabilityArgs),
    /// Fuzzed metric axioms and commutator identities.
    MetricsSelftest(SelftestArgs),
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// Quotient orders k, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub k: Vec<i64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flip one membership answer; the audit must then fail.
    #[arg(long, hide = true)]
    pub mutate: bool,
}

#[derive(Args, Debug)]
pub struct WeissArgs {
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// flagship, trinomial or shortcut.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub depth: Option<u64>,
    /// exact or mc:N.
    #[arg(long)]
    pub mode: Option<String>,
    /// First and last stage, as FROM..TO.
    #[arg(long)]
    pub stages: Option<String>,
    /// Random trials per stage check.
    #[arg(long)]
    pub verify: Option<u64>,
    #[arg(long, default_value = "weiss-out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub k: i64,
    #[arg(long, default_value_t = 12)]
    pub j_max: i64,
    #[arg(long, default_value_t = 1)]
    pub perturbations: usize,
    /// Generator receiving the transpositions: b or t.
    #[arg(long, default_value = "b")]
    pub target: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 500)]
    pub cases: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct StabilityFile {
    k: Option<i64>,
    j_max: Option<i64>,
    perturbations: Option<usize>,
    target: Option<String>,
    seed: Option<u64>,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Malformed(_)
        | Error::Json(_)
        | Error::Unsupported(_)
        | Error::Hypothesis(_)
        | Error::IndexTooLarge { .. }
        | Error::NotAMember(_) => EXIT_CONFIG,
        _ => EXIT_FAILED,
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = Bounds::from_env().and_then(|b| match cli.command {
        Command::GoursatAudit(a) => audit(a, b),
        Command::WeissRun(a) => weiss(a, b),
        Command::StabilityDemo(a) => stability(a, b),
        Command::MetricsSelftest(a) => selftest(a),
    });
    match outcome {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn write_json(out: &Path, name: &str, v: &impl serde::Serialize) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join(name), serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn audit(a: AuditArgs, b: Bounds) -> Result<bool> {
    let mut reports = Vec::new();
    println!("{:>3}  {:>5}  {:>9}  {:>8}  {:>10}  result", "k", "|G|", "subgroups", "triplets", "mismatches");
    for &k in &a.k {
        if !(1..=62).contains(&k) {
            return Err(Error::Config(format!("k must lie in 1..=62, got {k}")));
        }
        let r = goursat_audit(k, b.audit_max, a.mutate)?;
        println!(
            "{:>3}  {:>5}  {:>9}  {:>8}  {:>10}  {}",
            k,
            r.order,
            r.brute_force_subgroups,
            r.triplets,
            r.mismatches.len(),
            if r.passed() { "match" } else { "MISMATCH" }
        );
        for m in r.mismatches.iter().take(5) {
            println!("     {m}");
        }
        reports.push(r);
    }
    if let Some(out) = &a.out {
        write_json(out, "goursat_audit.json", &reports)?;
    }
    Ok(reports.iter().all(|r| r.passed()))
}

fn parse_stages(s: &str) -> Result<(u64, u64)> {
    let bad = || Error::Config(format!("--stages expects FROM..TO, got '{s}'"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn weiss_config(a: &WeissArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&a.config, &a.preset) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        (None, Some(name)) => config::preset(name)?,
        (None, None) => config::flagship(),
    };
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(d) = a.depth {
        cfg.depth = d;
    }
    if let Some(m) = &a.mode {
        cfg.mode = m.parse::<Mode>()?.to_string();
        cfg.exact_through = None;
    }
    if let Some(s) = &a.stages {
        cfg.stages = parse_stages(s)?;
    }
    if let Some(v) = a.verify {
        cfg.verify_samples = v;
    }
    cfg.check()?;
    Ok(cfg)
}

fn weiss(a: WeissArgs, b: Bounds) -> Result<bool> {
    let cfg = weiss_config(&a)?;
    crate::experiment::check_out_dir(&a.out, &cfg.hash())?;
    let rep = run_experiment(&cfg, b)?;
    let manifest = write_report(&a.out, &cfg, &rep)?;
    print!("{}", rep.summary());
    println!("config {} -> {} ({} rows)", manifest.config_hash, a.out.display(), manifest.rows);
    for e in rep.errors() {
        println!("stage {} {}: {}", e.stage, e.item, e.error);
    }
    Ok(rep.errors().is_empty())
}

fn stability(mut a: StabilityArgs, b: Bounds) -> Result<bool> {
    if let Some(p) = &a.config {
        let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        let f: StabilityFile = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        a.k = f.k.unwrap_or(a.k);
        a.j_max = f.j_max.unwrap_or(a.j_max);
        a.perturbations = f.perturbations.unwrap_or(a.perturbations);
        a.target = f.target.unwrap_or(a.target);
        a.seed = f.seed.unwrap_or(a.seed);
    }
    if !(1..=20).contains(&a.k) || a.j_max < 0 {
        return Err(Error::Config(format!("need 1 <= k <= 20 and j_max >= 0, got k = {}, j_max = {}", a.k, a.j_max)));
    }
    let rep = stability_demo(a.k, a.j_max, a.perturbations, &a.target, a.seed, b.degree_max)?;
    println!(
        "n = {}  d(b, b') = {}  d(t, t') = {}  ({} transpositions on {})",
        rep.degree, rep.dist_b, rep.dist_t, rep.perturbations, rep.target
    );
    println!("{:>3}  {:>10}  {:>10}  {:>10}", "j", "exact", "perturbed", "bound");
    for r in &rep.rows {
        println!("{:>3}  {:>10}  {:>10}  {:>10}", r.j, r.exact_defect, r.perturbed_defect, r.lipschitz_bound);
    }
    if let Some(out) = &a.out {
        write_json(out, "stability.json", &rep)?;
        let mut w = csv::Writer::from_path(out.join("stability.csv"))?;
        for r in &rep.rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(rep.passed())
}

fn selftest(a: SelftestArgs) -> Result<bool> {
    if a.cases == 0 {
        return Err(Error::Config("--cases must be positive".into()));
    }
    let rep = metrics_selftest(a.cases, a.seed)?;
    for s in &rep.suites {
        let status = if s.failures == 0 { "ok" } else { "FAILED" };
        println!("{:<32} {:>6} cases  {:>4} failures  {status}", s.name, s.cases, s.failures);
        if let Some(f) = &s.first_failure {
            println!("    {f}");
        }
    }
    if let Some(out) = &a.out {
        write_json(out, "selftest.json", &rep)?;
    }
    Ok(rep.passed())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_ranges_parse() {
        assert_eq!(parse_stages("2..7").unwrap(), (2, 7));
        assert!(parse_stages("7").is_err());
    }

    #[test]
    fn overrides_apply() {
        let a = WeissArgs {
            config: None,
            preset: Some("shortcut".into()),
            seed: Some(9),
            depth: Some(27),
            mode: Some("mc:50".into()),
            stages: Some("1..2".into()),
            verify: None,
            out: "x".into(),
        };
        let c = weiss_config(&a).unwrap();
        assert_eq!((c.seed, c.depth, c.mode.as_str(), c.stages), (9, 27, "mc:50", (1, 2)));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["cosofic", "no-such-command"]), EXIT_CONFIG);
        assert_eq!(run(["cosofic", "weiss-run", "--mode", "quick"]), EXIT_CONFIG);
        assert_eq!(run(["cosofic", "goursat-audit", "--k", "0"]), EXIT_CONFIG);
    }
}
