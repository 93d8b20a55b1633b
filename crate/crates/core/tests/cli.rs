use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cosofic(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_cosofic"));
    c.args(args);
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn goursat_audit_matches_and_mutation_fails() {
    let ok = cosofic(&["goursat-audit", "--k", "2,3"], &[]);
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));
    assert!(stdout(&ok).contains("match"));
    let bad = cosofic(&["goursat-audit", "--k", "2", "--mutate"], &[]);
    assert_eq!(code(&bad), 1);
    let big = cosofic(&["goursat-audit", "--k", "3"], &[("COSOFIC_AUDIT_MAX", "10")]);
    assert_eq!(code(&big), 2, "oversize quotient must be refused");
    let env = cosofic(&["goursat-audit"], &[("COSOFIC_AUDIT_MAX", "lots")]);
    assert_eq!(code(&env), 2);
}

#[test]
fn weiss_run_is_reproducible_and_guards_its_directory() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = |out: &Path| -> Vec<String> {
        ["weiss-run", "--preset", "flagship", "--stages", "1..4", "--mode", "mc:2000", "--depth", "27", "--seed", "5", "--out"]
            .iter()
            .map(|s| s.to_string())
            .chain([out.display().to_string()])
            .collect()
    };
    for out in [&a, &b] {
        let v = args(out);
        let o = cosofic(&v.iter().map(String::as_str).collect::<Vec<_>>(), &[]);
        assert_eq!(code(&o), 0, "{}{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("max p"));
    }
    for fam in ["p", "folner", "centered", "adapted", "tempered", "d_prob", "stages"] {
        let f = format!("{fam}.csv");
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{f}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["config_hash"].as_str().unwrap();
    let p = fs::read_to_string(a.join("p.csv")).unwrap();
    assert!(p.lines().skip(1).all(|l| l.contains(hash)));

    // rerunning into the same directory with another seed is a configuration error
    let mut v = args(&a);
    v[10] = "6".into();
    let o = cosofic(&v.iter().map(String::as_str).collect::<Vec<_>>(), &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn weiss_run_shortcut_and_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = cosofic(&["weiss-run", "--preset", "shortcut", "--stages", "1..3", "--out", out.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    let p = fs::read_to_string(out.join("p.csv")).unwrap();
    for line in p.lines().skip(1) {
        assert_eq!(line.split(',').nth(3), Some("0"), "{line}");
    }

    let bad = dir.path().join("bad.json");
    for text in [
        r#"{"group": "lamplighter", "subgroup": {"nh": {"polynomial": [1, 1]}}, "stages": [1, 2], "words": []}"#,
        r#"{"group": "lamplighter_quotient", "subgroup": {"nh": {"generators": [[{"orbit": 0, "coset": [0], "value": [1]}]]}, "lifts": [{"q": [1]}]}, "stages": [1, 2], "words": []}"#,
        r#"{"group": "lamplighter", "subgroup": {"nh": "zero"}, "stages": [3, 2], "words": []}"#,
    ] {
        fs::write(&bad, text).unwrap();
        let o = cosofic(&["weiss-run", "--config", bad.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()], &[]);
        assert_eq!(code(&o), 2, "{text}: {}", String::from_utf8_lossy(&o.stderr));
    }
    fs::write(
        &bad,
        r#"{"group": {"lamplighter_quotient": {"k": 3}}, "subgroup": {"nh": {"generators": [[{"orbit": 0, "coset": [0], "value": [1]}]]}, "lifts": [{"q": [1]}]}, "stages": [1, 2], "words": []}"#,
    )
    .unwrap();
    let o = cosofic(&["weiss-run", "--config", bad.to_str().unwrap(), "--out", dir.path().join("x").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2, "non-invariant N_H: {}", String::from_utf8_lossy(&o.stderr));

    fs::write(&bad, "{ not json").unwrap();
    let o = cosofic(&["weiss-run", "--config", bad.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
    let o = cosofic(&["weiss-run", "--config", "/no/such/file.json"], &[]);
    assert_eq!(code(&o), 2);

    // H = Q_H = Z, N_H = 0 has a normalizer of infinite index
    let good = dir.path().join("inf.json");
    fs::write(&good, r#"{"group": "lamplighter", "subgroup": {"nh": "zero", "lifts": [{"q": [1]}]}, "stages": [1, 2], "words": []}"#).unwrap();
    let o = cosofic(&["weiss-run", "--config", good.to_str().unwrap(), "--out", dir.path().join("y").to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn stability_demo_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = cosofic(&["stability-demo", "--k", "4", "--perturbations", "0", "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("stability.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    let o = cosofic(&["stability-demo", "--k", "4", "--perturbations", "1"], &[]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("d(b, b') = 1/32"));
    let o = cosofic(&["stability-demo", "--k", "3", "--j-max", "9", "--perturbations", "0"], &[]);
    assert_eq!(code(&o), 0);
    let o = cosofic(&["stability-demo", "--k", "4"], &[("COSOFIC_DEGREE_MAX", "10")]);
    assert_eq!(code(&o), 2);
    let o = cosofic(&["stability-demo", "--target", "x"], &[]);
    assert_eq!(code(&o), 2);
}

#[test]
fn metrics_selftest_passes() {
    let o = cosofic(&["metrics-selftest", "--cases", "100"], &[]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).matches(" ok").count(), 5);
}
