//! Acceptance suite: runs every experiment at its acceptance settings and prints one
//! PASS/FAIL line per criterion. The test fails if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use quadcusp_cli::config::load_file;
use quadcusp_cli::{run_experiment, Check, ConfigOverrides, ExperimentConfig, Outcome};

struct Verdict {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
    notes: Vec<String>,
}

fn run(name: &str, overrides: ConfigOverrides, out: &Path) -> (Outcome, Duration) {
    let cfg = ExperimentConfig::resolve(Some(name), &overrides).expect("config resolves");
    let start = Instant::now();
    let outcome = run_experiment(&cfg, out).expect("experiment runs");
    (outcome, start.elapsed())
}

fn find<'a>(outcome: &'a Outcome, fragment: &str) -> Vec<&'a Check> {
    outcome.checks.iter().filter(|c| c.name.contains(fragment)).collect()
}

fn describe(checks: &[&Check]) -> String {
    checks
        .iter()
        .map(|c| format!("{}={:.6e}[{}]", c.name, c.value, if c.pass { "ok" } else { "fail" }))
        .collect::<Vec<_>>()
        .join("; ")
}

fn all_pass(checks: &[&Check]) -> bool {
    !checks.is_empty() && checks.iter().all(|c| c.pass)
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("readable")).expect("valid json")
}

fn single_form(name: &str, form: &str, q_max: i64) -> ConfigOverrides {
    ConfigOverrides {
        experiment: Some(name.into()),
        forms: Some(vec![form.into()]),
        q_max: Some(vec![q_max]),
        ..Default::default()
    }
}

fn counting(root: &Path) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for (form, q_max) in [("circle", 4096), ("sphere", 512)] {
        let (outcome, elapsed) = run("counting", single_form("counting", form, q_max), &root.join(format!("c1-{form}")));
        let checks = find(&outcome, form);
        let fast = elapsed <= Duration::from_secs(60);
        pass &= all_pass(&checks) && fast;
        parts.push(format!("{} runtime={:.1}s", describe(&checks), elapsed.as_secs_f64()));
    }
    Verdict { id: "1", title: "counting law", pass, detail: parts.join("; "), notes: vec![] }
}

fn equidist(root: &Path) -> Verdict {
    let (outcome, _) = run("equidist", ConfigOverrides::default(), &root.join("c2"));
    let checks = find(&outcome, "ratio");
    Verdict { id: "2", title: "equidistribution ratios", pass: all_pass(&checks), detail: describe(&checks), notes: vec![] }
}

fn geometry(root: &Path) -> Vec<Verdict> {
    let (outcome, _) = run("geometry", ConfigOverrides::default(), &root.join("c3"));
    let report = read_json(&outcome.dir.join("report.json"));
    let mut notes = Vec::new();
    if let Some(results) = report["results"].as_object() {
        for (form, r) in results {
            for f in r["busemann_by_family"].as_array().into_iter().flatten() {
                notes.push(format!(
                    "{form} {}: error {} at T=40, {} at T=80",
                    f["family"].as_str().unwrap_or("?"),
                    f["error_at_t"],
                    f["error_at_2t"]
                ));
            }
        }
    }
    let parts = [
        ("3a", "Busemann closed forms at T=40", "busemann"),
        ("3b", "odist vs numerical minimization", "odist"),
        ("3c", "unipotent chart round trip", "chart"),
        ("3d", "SL depth identity dual path", "sl identity"),
    ];
    parts
        .into_iter()
        .map(|(id, title, key)| {
            let checks = find(&outcome, key);
            Verdict {
                id,
                title,
                pass: all_pass(&checks),
                detail: describe(&checks),
                notes: if id == "3a" { notes.clone() } else { vec![] },
            }
        })
        .collect()
}

fn trace(root: &Path) -> Verdict {
    let (outcome, elapsed) = run("trace", ConfigOverrides::default(), &root.join("c4"));
    let checks: Vec<&Check> = outcome.checks.iter().collect();
    let fast = elapsed <= Duration::from_secs(120);
    Verdict {
        id: "4",
        title: "trace-set law",
        pass: all_pass(&checks) && fast,
        detail: format!("{} runtime={:.1}s", describe(&checks), elapsed.as_secs_f64()),
        notes: vec![],
    }
}

fn aprox(root: &Path) -> Verdict {
    let (outcome, _) = run("aprox", ConfigOverrides::default(), &root.join("c5"));
    let checks: Vec<&Check> = outcome.checks.iter().collect();
    let notes = checks.iter().filter(|c| !c.pass).map(|c| format!("{}: {}", c.name, c.target)).collect();
    Verdict { id: "5", title: "approximation rigidity", pass: all_pass(&checks), detail: describe(&checks), notes }
}

fn crossover(root: &Path) -> Verdict {
    let (outcome, _) = run("crossover", ConfigOverrides::default(), &root.join("c6"));
    let checks: Vec<&Check> = outcome.checks.iter().collect();
    Verdict { id: "6", title: "dimension crossover", pass: all_pass(&checks), detail: describe(&checks), notes: vec![] }
}

fn ubiquity(root: &Path) -> Vec<Verdict> {
    let (outcome, _) = run("ubiquity", ConfigOverrides::default(), &root.join("c78"));
    let flips = find(&outcome, "classifier flips");
    let numeric = find(&outcome, "numeric classifier");
    let mut ubiq = find(&outcome, "regularity");
    ubiq.extend(find(&outcome, "kappa_hat"));
    vec![
        Verdict {
            id: "7",
            title: "divergence classifier",
            pass: all_pass(&flips),
            detail: describe(&flips),
            notes: vec![format!("partial-sum cross-check: {}", describe(&numeric))],
        },
        Verdict { id: "8", title: "ubiquity inequality", pass: all_pass(&ubiq), detail: describe(&ubiq), notes: vec![] },
    ]
}

fn excursion(root: &Path) -> Verdict {
    let (outcome, _) = run("excursion", ConfigOverrides::default(), &root.join("c9"));
    let checks: Vec<&Check> = outcome.checks.iter().collect();
    Verdict { id: "9", title: "excursion correspondence", pass: all_pass(&checks), detail: describe(&checks), notes: vec![] }
}

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).expect("readable dir") {
            let path = entry.expect("entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn determinism(root: &Path) -> Verdict {
    let cases = [
        ("counting", single_form("counting", "circle", 512)),
        ("excursion", ConfigOverrides { beta: Some(vec!["1/2".into()]), ..Default::default() }),
        ("geometry", ConfigOverrides { instances: Some(20), ..Default::default() }),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, overrides) in cases {
        let a = root.join(format!("c10-{name}-a"));
        let b = root.join(format!("c10-{name}-b"));
        let c = root.join(format!("c10-{name}-c"));
        let (first, _) = run(name, overrides.clone(), &a);
        run(name, overrides, &b);
        let manifest = first.dir.join("manifest.json");
        let from_manifest = load_file(&manifest).expect("manifest loads");
        run(name, from_manifest, &c);
        let (sa, sb, sc) = (snapshot(&a), snapshot(&b), snapshot(&c));
        let same = !sa.is_empty() && sa == sb && sa == sc;
        pass &= same;
        parts.push(format!("{name}: {} files {}", sa.len(), if same { "identical" } else { "differ" }));
    }
    Verdict { id: "10", title: "determinism", pass, detail: parts.join("; "), notes: vec![] }
}

#[test]
fn acceptance() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let root = tmp.path();
    let mut verdicts = vec![counting(root), equidist(root)];
    verdicts.extend(geometry(root));
    verdicts.push(trace(root));
    verdicts.push(aprox(root));
    verdicts.push(crossover(root));
    verdicts.extend(ubiquity(root));
    verdicts.push(excursion(root));
    verdicts.push(determinism(root));

    println!();
    for v in &verdicts {
        println!("{} criterion {:<3} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.id, v.title, v.detail);
        for n in &v.notes {
            println!("     note: {n}");
        }
    }
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    println!("acceptance: {} of {} criteria pass", verdicts.len() - failed.len(), verdicts.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
