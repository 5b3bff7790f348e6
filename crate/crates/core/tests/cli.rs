use std::path::Path;
use std::process::{Command, Output};

fn docgen(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docgen")).args(args).current_dir(dir).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn error_code(out: &Output) -> String {
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).expect("stderr is a JSON error");
    err["error"].as_str().unwrap().to_string()
}

#[test]
fn generate_writes_pages_annotations_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&docgen(&["generate", "--count", "3", "--out", "ds", "--seed", "2", "--quiet", "--emit-plans"], tmp.path()));
    let ds = tmp.path().join("ds");
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(ds.join("manifest.json")).unwrap()).unwrap();
    let docs = manifest["documents"].as_array().unwrap();
    assert_eq!(docs.len(), 3);
    for d in docs {
        for page in d["pages"].as_array().unwrap() {
            assert!(ds.join("images").join(page.as_str().unwrap()).is_file());
        }
        assert!(ds.join(d["plan_file"].as_str().unwrap()).is_file());
    }
    let coco: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(ds.join("annotations.json")).unwrap()).unwrap();
    assert_eq!(coco["categories"].as_array().unwrap().len(), 10);
    assert!(!coco["annotations"].as_array().unwrap().is_empty());
}

#[test]
fn zero_documents_is_an_empty_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&docgen(&["generate", "--count", "0", "--out", "ds", "--quiet"], tmp.path()));
    let coco: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("ds/annotations.json")).unwrap()).unwrap();
    assert!(coco["images"].as_array().unwrap().is_empty());
    ok(&docgen(&["stats", "--dataset", "ds"], tmp.path()));
    let cats = std::fs::read_to_string(tmp.path().join("ds/categories.csv")).unwrap();
    assert_eq!(cats.lines().count(), 11);
    assert!(cats.lines().skip(1).all(|l| l.ends_with(",0,0")));
}

#[test]
fn jpeg_and_environment_settings() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_docgen"))
        .args(["generate", "--out", "ds", "--quiet"])
        .env("DOCGEN_COUNT", "1")
        .env("DOCGEN_FORMAT", "jpeg")
        .env("DOCGEN_TEMPLATE", "forms")
        .current_dir(tmp.path())
        .output()
        .unwrap();
    ok(&out);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("ds/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["template"], "forms");
    assert_eq!(manifest["image_format"], "jpg");
    let page = manifest["documents"][0]["pages"][0].as_str().unwrap();
    assert!(std::fs::read(tmp.path().join("ds/images").join(page)).unwrap().starts_with(&[0xFF, 0xD8]));
}

#[test]
fn stats_reports_categories_and_histograms() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&docgen(&["generate", "--count", "40", "--out", "ds", "--plan-only", "--quiet"], tmp.path()));
    ok(&docgen(&["stats", "--dataset", "ds", "--out", "report"], tmp.path()));
    let hist = std::fs::read_to_string(tmp.path().join("report/histograms.csv")).unwrap();
    assert_eq!(hist.lines().next(), Some("variable,bin_low,bin_high,count"));
    let columns: usize = hist
        .lines()
        .filter(|l| l.starts_with("columns,"))
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(columns, 40);
    let cats = std::fs::read_to_string(tmp.path().join("report/categories.csv")).unwrap();
    assert_eq!(cats.lines().next(), Some("category,documents,instances"));
}

#[test]
fn metrics_of_different_datasets() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&docgen(&["generate", "--count", "4", "--out", "a", "--seed", "1", "--quiet"], tmp.path()));
    ok(&docgen(&["generate", "--count", "4", "--out", "b", "--seed", "2", "--quiet", "--template", "forms"], tmp.path()));
    let text = ok(&docgen(&["metrics", "--a", "a", "--b", "b"], tmp.path()));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "metric,a,b,difference");
    let names: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["overlap_index", "alignment_index", "average_element_count"]);
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
        assert!((v[2] - (v[0] - v[1]).abs()).abs() < 1e-12);
    }
}

#[test]
fn infer_writes_a_posterior_template() {
    let tmp = tempfile::tempdir().unwrap();
    let obs: String = (0..10).map(|i| format!("{{\"node_id\": \"doc.columns\", \"category_index\": {}}}\n", i % 2)).collect();
    std::fs::write(tmp.path().join("obs.jsonl"), obs).unwrap();
    let text = ok(&docgen(&["infer", "--template", "scientific", "--observations", "obs.jsonl", "--out", "post.toml"], tmp.path()));
    assert!(text.starts_with("doc.columns\tn=10\t"));
    let out = tmp.path().join("post.toml");
    assert!(out.is_file());
    // the updated template loads and generates
    ok(&docgen(&["generate", "--count", "1", "--out", "ds", "--quiet", "--template", out.to_str().unwrap()], tmp.path()));
}

#[test]
fn failures_are_reported_as_json() {
    let tmp = tempfile::tempdir().unwrap();
    let out = docgen(&["generate", "--count", "1", "--out", "ds", "--template", "missing.toml"], tmp.path());
    assert!(!error_code(&out).is_empty());
    std::fs::write(tmp.path().join("obs.jsonl"), "{\"node_id\": \"nope\", \"value\": 1}\n").unwrap();
    let out = docgen(&["infer", "--template", "scientific", "--observations", "obs.jsonl", "--out", "p.toml"], tmp.path());
    assert_eq!(error_code(&out), "UnknownNode");
    let out = docgen(&["infer", "--template", "mixture", "--observations", "obs.jsonl", "--out", "p.toml"], tmp.path());
    assert_eq!(error_code(&out), "InvalidMixture");
    let out = docgen(&["stats", "--dataset", "nowhere"], tmp.path());
    assert_eq!(error_code(&out), "MissingManifest");
}

#[test]
fn preview_writes_plan_pages_and_overlays() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&docgen(&["preview", "--template", "resume", "--doc", "4", "--out", "pv", "--boxes"], tmp.path()));
    let pv = tmp.path().join("pv");
    assert!(pv.join("4.json").is_file());
    assert!(pv.join("4_0.png").is_file());
    assert!(pv.join("4_0_boxes.png").is_file());
}
