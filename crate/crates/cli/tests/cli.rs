use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn sample() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/sample")
}

fn coursekg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coursekg")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// A scratch copy of the sample project; outputs land inside it.
fn workspace() -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    for sub in ["html", "gold"] {
        copy_dir(&sample().join(sub), &dir.path().join(sub));
    }
    fs::copy(sample().join("ontology.tsv"), dir.path().join("ontology.tsv")).unwrap();
    let config = fs::read_to_string(sample().join("config.toml")).unwrap();
    let cfg = dir.path().join("config.toml");
    fs::write(&cfg, config).unwrap();
    (dir, cfg)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn build_profile(cfg: &Path) -> Output {
    let o = coursekg(&["build-profile", "-c", s(cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    o
}

#[test]
fn build_profile_reports_counts_and_a_stable_hash() {
    let (dir, cfg) = workspace();
    let first = stdout(&build_profile(&cfg));
    let entities = fs::read_to_string(dir.path().join("ontology.tsv"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .count();
    assert!(first.contains(&format!("{entities} entities")), "{first}");
    assert!(dir.path().join("out/profile.json").is_file());
    let second = stdout(&build_profile(&cfg));
    assert_eq!(first, second);
}

#[test]
fn missing_ontology_is_reported_with_its_path() {
    let (dir, cfg) = workspace();
    let missing = dir.path().join("nope.tsv");
    let o = coursekg(&["build-profile", "-c", s(&cfg), "--ontology", s(&missing)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nope.tsv"), "{}", stderr(&o));
}

#[test]
fn empty_corpus_gives_zero_statements() {
    let (dir, cfg) = workspace();
    build_profile(&cfg);
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = coursekg(&["extract", "-c", s(&cfg), "--input", s(&empty)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/run_report.json")).unwrap()).unwrap();
    assert_eq!(report["documents"], 0);
    assert_eq!(report["statements"]["total"], 0);
    assert_eq!(fs::read_to_string(dir.path().join("out/kg.nt")).unwrap(), "");
}

/// Short predicate names by counting N-Triples lines directly.
fn count_nt(nt: &str) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for line in nt.lines().filter(|l| !l.is_empty()) {
        let predicate = line.split(' ').nth(1).unwrap();
        let name = predicate.trim_matches(['<', '>']).rsplit(['#', '/']).next().unwrap().to_string();
        *counts.entry(name).or_default() += 1;
    }
    counts
}

#[test]
fn extract_writes_graph_report_and_predictions() {
    let (dir, cfg) = workspace();
    build_profile(&cfg);
    let o = coursekg(&["extract", "-c", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let nt = fs::read_to_string(out.join("kg.nt")).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_report.json")).unwrap()).unwrap();
    assert_eq!(report["documents"], 55);
    assert_eq!(report["failures"].as_array().unwrap().len(), 0);

    let recount = count_nt(&nt);
    let total: u64 = recount.values().sum();
    assert_eq!(report["statements"]["total"].as_u64(), Some(total));
    for (name, n) in report["statements"]["by_predicate"].as_object().unwrap() {
        assert_eq!(recount.get(name).copied().unwrap_or(0), n.as_u64().unwrap(), "{name}");
    }
    // one school per course
    assert_eq!(recount["school"], 55);
    assert!(stdout(&o).contains(&format!("{total} statements")));

    let ttl = fs::read_to_string(out.join("kg.ttl")).unwrap();
    assert!(ttl.starts_with("@prefix edu:"));
    assert!(ttl.contains("<https://sae.edu#c01>"));
    assert!(out.join("predictions.json").is_file());
    let silver = fs::read_to_string(out.join("silver.tsv")).unwrap();
    assert!(silver.starts_with("#coursekg-tokens\tv1\n"));
}

#[test]
fn extract_is_deterministic_across_worker_counts() {
    let (dir, cfg) = workspace();
    build_profile(&cfg);
    let mut graphs = Vec::new();
    for extra in [&["--workers", "4"][..], &["--workers", "1"], &["--sequential"]] {
        let out = dir.path().join(format!("run{}", graphs.len()));
        let mut args = vec!["extract", "-c", s(&cfg), "--out", s(&out)];
        args.extend_from_slice(extra);
        let o = coursekg(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        graphs.push((fs::read(out.join("kg.nt")).unwrap(), fs::read(out.join("run_report.json")).unwrap()));
    }
    assert!(graphs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn gold_scored_against_itself_is_perfect() {
    let (dir, _) = workspace();
    let gold = dir.path().join("gold");
    let o = coursekg(&["eval", "--gold", s(&gold), "--pred", s(&gold), "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("eval_report.json")).unwrap()).unwrap();
    let scores = report["scores"].as_array().unwrap();
    // T1, T2 once; T3..T6 in two settings
    assert_eq!(scores.len(), 10);
    assert!(scores.iter().all(|s| s["f1"] == 1.0), "{report}");
    assert!(dir.path().join("eval_report.txt").is_file());
}

#[test]
fn eval_runs_the_pipeline_when_no_predictions_are_given() {
    let (dir, cfg) = workspace();
    build_profile(&cfg);
    let o = coursekg(&[
        "eval",
        "--gold",
        s(&dir.path().join("gold")),
        "-c",
        s(&cfg),
        "--tasks",
        "T1,T6",
        "--setting",
        "strict",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.contains("T1") && table.contains("T6") && !table.contains("T3"), "{table}");
}

#[test]
fn five_fold_eval_gives_five_reports_and_an_aggregate() {
    let (dir, _) = workspace();
    let gold = dir.path().join("gold");
    let out = dir.path().join("folds");
    let o =
        coursekg(&["eval", "--gold", s(&gold), "--pred", s(&gold), "--kfolds", "5", "--seed", "3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("eval_report.json")).unwrap()).unwrap();
    let folds = report["folds"].as_array().unwrap();
    assert_eq!(folds.len(), 5);
    let docs: u64 = folds.iter().map(|f| f["documents"].as_u64().unwrap()).sum();
    assert_eq!(docs, 55);
    assert_eq!(report["aggregate"]["documents"], 55);
}

#[test]
fn malformed_gold_exits_with_data_error() {
    let dir = TempDir::new().unwrap();
    let gold = dir.path().join("gold.json");
    fs::write(
        &gold,
        r#"{"documents": [{"doc_id": "c01", "text": "abc", "mentions": [{"start": 1, "end": 9, "type": "skill"}]}]}"#,
    )
    .unwrap();
    let o = coursekg(&["eval", "--gold", s(&gold), "--pred", s(&gold)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("c01"), "{}", stderr(&o));
}

#[test]
fn bad_config_exits_with_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("config.toml");
    fs::write(&cfg, "input_dir = \"html\"\nprofile_path = \"p.json\"\nunknown_key = 1\n").unwrap();
    let o = coursekg(&["extract", "-c", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = coursekg(&["extract"]);
    assert_eq!(o.status.code(), Some(2));
}

const NIF: &str = r#"
@prefix nif: <http://persistence.uni-leipzig.org/nlp2rdf/ontologies/nif-core#> .
@prefix itsrdf: <http://www.w3.org/2005/11/its/rdf#> .
@prefix cls: <https://example.org/classes#> .

<https://example.org/doc/c07#char=0,25> a nif:Context ;
    nif:isString "Voraussetzungen\nÜber Java" .

<https://example.org/doc/c07#char=21,25> a nif:Phrase ;
    nif:referenceContext <https://example.org/doc/c07#char=0,25> ;
    nif:beginIndex "21" ; nif:endIndex "25" ;
    itsrdf:taClassRef cls:Skill ;
    itsrdf:taIdentRef <https://example.org/edu#java_lang> .
"#;

#[test]
fn convert_nif_then_agreement_with_itself() {
    let dir = TempDir::new().unwrap();
    let nif = dir.path().join("corpus.ttl");
    let out = dir.path().join("gold/corpus.json");
    fs::write(&nif, NIF).unwrap();
    let o = coursekg(&["convert-nif", "--input", s(&nif), "--out", s(&out), "--partition", "p2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let gold: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let doc = &gold["documents"][0];
    assert_eq!(doc["doc_id"], "c07");
    assert_eq!(doc["mentions"][0]["entity"], "edu:java_lang");
    assert_eq!(doc["mentions"][0]["surface"], "Java");

    let o = coursekg(&["agreement", "--a", s(&out), "--b", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("kappa: 1.0000") && text.contains("pairwise_f1: 1.0000"), "{text}");
}
