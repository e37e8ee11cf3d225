use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lexalign(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lexalign"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env_remove("LEXALIGN_K")
        .output()
        .expect("binary runs")
}

fn fixture(dir: &Path) {
    let docs = [
        ("h1", "human", "the cat sat on the mat with another cat", "p1"),
        ("l1", "llm", "a feline rested upon the mat", "p1"),
        ("h2", "human", "dogs chase cats in the park", "p2"),
        ("l2", "llm", "canines pursue felines across the park", "p2"),
        ("h3", "human", "an important result about cats", "p3"),
        ("l3", "llm", "a crucial and significant finding regarding cats", "p3"),
    ];
    let mut s = String::new();
    for (id, src, text, pair) in docs {
        s.push_str(&format!("{{\"id\":\"{id}\",\"text\":\"{text}\",\"source\":\"{src}\",\"pair_id\":\"{pair}\"}}\n"));
    }
    fs::write(dir.join("corpus.jsonl"), s).unwrap();
    fs::write(
        dir.join("queries.jsonl"),
        "{\"id\":\"q1\",\"text\":\"cat mat\",\"source\":\"human\"}\n{\"id\":\"q2\",\"text\":\"park dogs\",\"source\":\"human\"}\n",
    )
    .unwrap();
    fs::write(dir.join("qrels.txt"), "q1 0 h1 2\nq1 0 l1 1\nq2 0 h2 1\nq2 0 l2 1\n").unwrap();
    fs::write(
        dir.join("run.toml"),
        r#"dataset = "toy"
output_dir = "out"

[inputs]
corpus = ["corpus.jsonl"]
qrels = "qrels.txt"
[inputs.queries]
human = "queries.jsonl"

[retrieval]
k = 10

[profile]
r_c = 3

[metrics]
k = 3
resamples = 100
"#,
    )
    .unwrap();
}

#[test]
fn stages_run_one_at_a_time() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);
    let c = ["-c", "run.toml"];
    for stage in [&["ingest"][..], &["index"], &["retrieve", "--scorer", "bm25", "--k", "5"]] {
        let out = lexalign(&[&c[..], stage].concat(), dir);
        assert!(out.status.success(), "{stage:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let run = fs::read_to_string(dir.join("out/runs/human.bm25.run")).unwrap();
    let first = run.lines().next().unwrap();
    let cols: Vec<&str> = first.split(' ').collect();
    assert_eq!(cols.len(), 6);
    assert_eq!((cols[0], cols[1], cols[3], cols[5]), ("q1", "Q0", "1", "bm25"));
    assert_eq!(cols[4].split('.').nth(1).unwrap().len(), 6);
    assert!(!dir.join("out/runs/human.tfidf.run").exists());
    assert!(fs::read_to_string(dir.join("out/runs/sources.jsonl")).unwrap().contains("\"source\":\"llm\""));

    for kind in ["zipf", "idf", "ttr", "synonyms"] {
        let out = lexalign(&[&c[..], &["profile", kind]].concat(), dir);
        assert!(out.status.success(), "{kind}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let zipf = fs::read_to_string(dir.join("out/profile/zipf.csv")).unwrap();
    let mut lines = zipf.lines();
    assert!(lines.next().unwrap().starts_with("# config_sha256="));
    assert_eq!(lines.next().unwrap(), "corpus,source,r_c,alpha1,r2_core,alpha2,r2_ext,n_core,n_ext");
    assert!(lines.next().unwrap().starts_with("toy,human,3,"));
    let tsv = fs::read_to_string(dir.join("out/profile/rank_frequency.human.tsv")).unwrap();
    assert!(tsv.lines().all(|l| l.split('\t').count() == 2));

    let out = lexalign(&[&c[..], &["metrics", "--scorer", "bm25", "--k", "5"]].concat(), dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = fs::read_to_string(dir.join("out/metrics/metrics.csv")).unwrap();
    assert!(m.contains("toy,human,bm25,masr,"));
    assert!(m.contains("toy,human,bm25,rel_delta_ndcg,"));
}

#[test]
fn snapshot_is_reused_until_the_corpus_changes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);
    assert!(lexalign(&["-c", "run.toml", "ingest"], dir).status.success());
    assert!(lexalign(&["-c", "run.toml", "index"], dir).status.success());
    let snap = dir.join("out/index/index.snap");
    let before = fs::metadata(&snap).unwrap().modified().unwrap();
    std::thread::sleep(std::time::Duration::from_millis(20));
    let out = lexalign(&["-c", "run.toml", "index"], dir);
    assert!(out.status.success());
    assert_eq!(fs::metadata(&snap).unwrap().modified().unwrap(), before);
    let out = lexalign(&["-c", "run.toml", "index", "--force"], dir);
    assert!(out.status.success());
    assert_ne!(fs::metadata(&snap).unwrap().modified().unwrap(), before);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);
    // config errors
    fs::write(dir.join("bad.toml"), "[retrieval]\nk = 0\n").unwrap();
    assert_eq!(lexalign(&["-c", "bad.toml", "ingest"], dir).status.code(), Some(2));
    fs::write(dir.join("typo.toml"), "datset = \"x\"\n").unwrap();
    assert_eq!(lexalign(&["-c", "typo.toml", "ingest"], dir).status.code(), Some(2));
    assert_eq!(lexalign(&["frobnicate"], dir).status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_lexalign"))
        .args(["-c", "run.toml", "ingest"])
        .current_dir(dir)
        .env("LEXALIGN_SEED", "minus one")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // missing upstream outputs and inputs name the stage
    let out = lexalign(&["-c", "run.toml", "metrics"], dir);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("metrics"));
    fs::remove_file(dir.join("qrels.txt")).unwrap();
    let out = lexalign(&["-c", "run.toml", "ingest"], dir);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));

    // malformed corpus
    fixture(dir);
    fs::write(dir.join("corpus.jsonl"), "{not json}\n").unwrap();
    assert_eq!(lexalign(&["-c", "run.toml", "ingest"], dir).status.code(), Some(3));
}

#[test]
fn failed_stage_leaves_earlier_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);
    assert!(lexalign(&["-c", "run.toml", "report"], dir).status.success());
    let corpus = fs::read(dir.join("out/ingest/corpus.jsonl")).unwrap();
    fs::write(dir.join("corpus.jsonl"), "{\"id\":\"x\"}\n").unwrap();
    assert_ne!(lexalign(&["-c", "run.toml", "ingest"], dir).status.code(), Some(0));
    assert_eq!(fs::read(dir.join("out/ingest/corpus.jsonl")).unwrap(), corpus);
}

#[test]
fn reports_carry_the_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fixture(dir);
    assert!(lexalign(&["-c", "run.toml", "report"], dir).status.success());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("out/report.json")).unwrap()).unwrap();
    let hash = manifest["config_sha256"].as_str().unwrap().to_string();
    let line = format!("# config_sha256={hash}");
    for rel in ["profile/zipf.csv", "profile/idf.csv", "profile/ttr.csv", "metrics/metrics.csv", "align/alignment.csv"] {
        let text = fs::read_to_string(dir.join("out").join(rel)).unwrap();
        assert_eq!(text.lines().next().unwrap(), line, "{rel}");
    }
    let n = manifest["artifacts"].as_array().unwrap().len();
    assert!(n >= 15, "{n} artifacts");
}
