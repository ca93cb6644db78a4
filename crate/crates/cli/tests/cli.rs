use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;

use longfact_cli::commands::{RetrieveFlags, ScoreOptions};
use longfact_cli::output::{bench_csv, calibration_csv, curve_csv};
use longfact_cli::{cmd_bench, cmd_calibrate, cmd_evaluate, cmd_retrieve, cmd_score, CliError, RunConfig};
use longfact_core::metrics::{f1_macro_optimal, kendall_tau, pearson, roc_auc};
use longfact_core::scorer::backends::MaxComposableBackend;
use longfact_core::{Claim, Corpus, Document, Scorer, ScorerConfig, WhitespaceCounter};

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn corpus() -> Corpus {
    Corpus::load(
        &bundled("documents.jsonl"),
        &bundled("claims.jsonl"),
        &WhitespaceCounter,
    )
    .unwrap()
}

fn overlap(config: &RunConfig) -> Scorer {
    config.build_scorer(Arc::new(WhitespaceCounter)).unwrap()
}

fn longfact(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_longfact"))
        .args(args)
        .env_remove("LONGFACT_ENDPOINT")
        .env_remove("LONGFACT_AUTH_HEADER")
        .output()
        .unwrap()
}

fn corpus_args(extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = extra.iter().map(|s| s.to_string()).collect();
    v.push("--docs".into());
    v.push(bundled("documents.jsonl").display().to_string());
    v.push("--claims".into());
    v.push(bundled("claims.jsonl").display().to_string());
    v
}

fn run_cli(extra: &[&str]) -> std::process::Output {
    let args = corpus_args(extra);
    longfact(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

/// Set `LONGFACT_BLESS=1` to rewrite the golden file after an intended change.
#[test]
fn score_report_matches_golden() {
    let config = RunConfig::default();
    let env = cmd_score(&corpus(), &config, &overlap(&config), &ScoreOptions::default()).unwrap();
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/score_report.json");
    if std::env::var_os("LONGFACT_BLESS").is_some() {
        std::fs::write(&golden, env.canonical_json()).unwrap();
    }
    assert_eq!(env.canonical_json(), std::fs::read_to_string(&golden).unwrap());
    assert_eq!(env.report.sentences.len(), 12);
    assert_eq!(env.report.texts.len(), 3);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let config = RunConfig {
        budget: 32,
        ..RunConfig::default()
    };
    let c = corpus();
    let twice = |f: &dyn Fn() -> String| assert_eq!(f(), f());
    twice(&|| {
        cmd_score(&c, &config, &overlap(&config), &ScoreOptions { explain: true })
            .unwrap()
            .canonical_json()
    });
    twice(&|| {
        let flags = RetrieveFlags {
            trace: true,
            brute_force: true,
        };
        cmd_retrieve(&c, &config, &overlap(&config), &flags)
            .unwrap()
            .canonical_json()
    });
    twice(&|| cmd_evaluate(&c, &config, &overlap(&config)).unwrap().0.canonical_json());
    twice(&|| {
        cmd_calibrate(&c, &config, &overlap(&config), &[16, 64])
            .unwrap()
            .canonical_json()
    });
    twice(&|| {
        cmd_bench(&c, &config, &overlap(&config), &[16, 64])
            .unwrap()
            .canonical_json()
    });
}

#[test]
fn every_report_embeds_config_hash_and_version() {
    let config = RunConfig::default();
    let c = corpus();
    let env = cmd_evaluate(&c, &config, &overlap(&config)).unwrap().0;
    let v: serde_json::Value = serde_json::from_str(&env.to_json()).unwrap();
    assert_eq!(v["artifact"], "longfact");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["corpus_hash"], c.content_hash());
    assert_eq!(v["config"]["budget"], 512);
    assert!(v["metadata"]["wall_clock_s"].as_f64().unwrap() > 0.0);
    let canonical: serde_json::Value = serde_json::from_str(&env.canonical_json()).unwrap();
    assert!(canonical.get("metadata").is_none());
}

#[test]
fn evaluate_agrees_with_metric_functions() {
    let config = RunConfig {
        budget: 16,
        ..RunConfig::default()
    };
    let (env, eval) = cmd_evaluate(&corpus(), &config, &overlap(&config)).unwrap();
    let r = &env.report;
    let s: Vec<f64> = r.scores.iter().map(|x| x.score).collect();
    let l: Vec<bool> = r.scores.iter().map(|x| x.label).collect();
    let y: Vec<f64> = l.iter().map(|&b| b as u8 as f64).collect();
    assert_eq!(r.roc_auc, roc_auc(&s, &l).unwrap());
    assert_eq!(r.pearson, pearson(&s, &y).unwrap());
    assert_eq!(r.kendall_tau, kendall_tau(&s, &y).unwrap());
    assert_eq!((r.f1_macro, r.optimal_threshold), f1_macro_optimal(&s, &l).unwrap());
    assert!(eval.wall_clock_s > 0.0);
    let retrieval = r.retrieval.as_ref().unwrap();
    assert_eq!(retrieval.claims, 8);
    assert!(r.scorer_calls_total as usize > retrieval.scorer_calls);
}

#[test]
fn evaluate_without_labels_is_a_validation_error() {
    let c = corpus();
    let mut claims = c.claims().to_vec();
    claims[2].label = None;
    let unlabeled = Corpus::new(c.documents().to_vec(), claims).unwrap();
    let config = RunConfig::default();
    match cmd_evaluate(&unlabeled, &config, &overlap(&config)) {
        Err(e @ CliError::Validation(_)) => assert!(e.to_string().contains("c03"), "{e}"),
        other => panic!("expected validation error, got {other:?}"),
    }
}

fn mock_corpus(base: &[f64], claims: Vec<Claim>) -> (Corpus, Scorer) {
    let units: Vec<(Option<String>, String)> = (0..base.len()).map(|i| (None, format!("unit {i}"))).collect();
    let backend = MaxComposableBackend::new(units.iter().map(|(_, t)| t.clone()).zip(base.iter().copied()));
    let doc = Document::new("doc", units, &WhitespaceCounter).unwrap();
    let scorer = Scorer::new(Arc::new(backend), Arc::new(WhitespaceCounter), ScorerConfig::default());
    (Corpus::new(vec![doc], claims).unwrap(), scorer)
}

#[test]
fn retrieve_reproduces_the_four_unit_walkthrough() {
    let (c, scorer) = mock_corpus(
        &[0.1, 0.9, 0.3, 0.2],
        vec![Claim::new("c", "doc", "claim").with_relevant_units([1])],
    );
    let flags = RetrieveFlags {
        trace: true,
        brute_force: true,
    };
    let env = cmd_retrieve(&c, &RunConfig::default(), &scorer, &flags).unwrap();
    let r = &env.report.claims[0];
    let levels = r.levels.as_ref().unwrap();
    assert_eq!(levels[0].scores, vec![0.9, 0.3]);
    assert_eq!(levels[0].chosen, 0);
    assert_eq!(levels[1].scores, vec![0.1, 0.9]);
    assert_eq!(levels[1].chosen, 1);
    assert_eq!((r.result_unit, r.scorer_calls), (1, 4));
    assert_eq!(r.agrees, Some(true));
    assert_eq!(r.hit, Some(true));
    assert_eq!(env.report.recall, Some(1.0));
    assert_eq!(env.report.brute_force_scorer_calls, Some(4));
}

#[test]
fn ternary_retrieval_on_nine_units() {
    let base: Vec<f64> = (0..9).map(|i| ((i * 7) % 9) as f64 / 10.0).collect();
    let (c, scorer) = mock_corpus(&base, vec![Claim::new("c", "doc", "claim")]);
    let config = RunConfig {
        k: 3,
        ..RunConfig::default()
    };
    let flags = RetrieveFlags {
        trace: true,
        brute_force: false,
    };
    let env = cmd_retrieve(&c, &config, &scorer, &flags).unwrap();
    assert!(env.report.claims[0].levels.as_ref().unwrap().len() <= 2);
}

#[test]
fn empty_claim_list_gives_empty_report() {
    let (c, scorer) = mock_corpus(&[0.5, 0.5], vec![]);
    let env = cmd_retrieve(&c, &RunConfig::default(), &scorer, &RetrieveFlags::default()).unwrap();
    assert!(env.report.claims.is_empty());
    assert_eq!(env.report.scorer_calls, 0);
    assert_eq!(env.report.recall, None);
    let env = cmd_score(&c, &RunConfig::default(), &scorer, &ScoreOptions::default()).unwrap();
    assert!(env.report.sentences.is_empty());
}

fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect();
    (header, rows)
}

#[test]
fn sweeps_emit_one_row_per_budget() {
    let config = RunConfig::default();
    let c = corpus();
    let cal = cmd_calibrate(&c, &config, &overlap(&config), &[64, 512]).unwrap();
    let (header, rows) = parse_csv(&calibration_csv(&cal.report));
    assert_eq!(header, ["budget", "ece"]);
    assert_eq!(rows.len(), 2);
    for (row, want) in rows.iter().zip(&cal.report.rows) {
        assert_eq!(row[0].parse::<usize>().unwrap(), want.budget);
        assert_eq!(row[1].parse::<f64>().unwrap(), want.ece);
    }
    let (header, rows) = parse_csv(&curve_csv(&cal.report));
    assert_eq!(header, ["budget", "x", "y", "bin_size"]);
    assert_eq!(rows.len(), cal.report.rows.iter().map(|r| r.curve.len()).sum::<usize>());

    let bench = cmd_bench(&c, &config, &overlap(&config), &[64, 512]).unwrap();
    let (header, rows) = parse_csv(&bench_csv(&bench.report));
    assert_eq!(header, ["budget", "roc_auc", "wall_clock_s", "scorer_calls"]);
    assert_eq!(rows.len(), 2);
    let calls: Vec<usize> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(calls[0] >= calls[1]);
    assert_eq!(bench.metadata.sweep_wall_clock_s.len(), 2);
}

#[test]
fn binary_writes_reports_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.json");
    let csv_path = dir.path().join("bench.csv");
    let o = run_cli(&[
        "bench",
        "--sweep",
        "64,128,512",
        "--csv",
        csv_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = parse_csv(&std::fs::read_to_string(&csv_path).unwrap());
    assert_eq!(rows.len(), 3);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["command"], "bench");

    let chunks = dir.path().join("chunks.json");
    let o = run_cli(&[
        "score",
        "--budget",
        "20",
        "--explain",
        "--dump-chunks",
        chunks.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(report["report"]["sentences"][0]["per_chunk"].is_array());
    let plans: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&chunks).unwrap()).unwrap();
    assert_eq!(plans.as_array().unwrap().len(), 3);
    assert_eq!(plans[0]["budget"], 20);
}

fn stderr_json(o: &std::process::Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr)
        .unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn exit_codes() {
    let o = run_cli(&["stats"]);
    assert_eq!(o.status.code(), Some(0));

    let o = run_cli(&["score", "-k", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["kind"], "validation");

    let o = longfact(&[
        "score",
        "--docs",
        "/nonexistent/docs.jsonl",
        "--claims",
        "/nonexistent/claims.jsonl",
    ]);
    assert_eq!(o.status.code(), Some(1));

    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/score", listener.local_addr().unwrap());
    drop(listener);
    let o = run_cli(&["score", "--backend", "remote", "--endpoint", &url, "--retries", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["error"]["endpoint"], url.as_str());
    assert!(err["error"]["message"].as_str().unwrap().contains(&url));
}

#[test]
fn endpoint_from_environment_and_config_file() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/env", listener.local_addr().unwrap());
    drop(listener);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "backend = \"remote\"\nretries = 0\nendpoint = \"http://unused.invalid/\"\n",
    )
    .unwrap();
    let args = corpus_args(&["score", "--config", cfg.to_str().unwrap()]);
    let o = Command::new(env!("CARGO_BIN_EXE_longfact"))
        .args(&args)
        .env("LONGFACT_ENDPOINT", &url)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["endpoint"], url.as_str());

    std::fs::write(&cfg, "budgte = 3\n").unwrap();
    let o = run_cli(&["stats", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}
