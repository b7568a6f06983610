//! End-to-end command-line behavior: file formats, exit codes, defaults.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jstrr::checkpoint::Checkpoint;
use jstrr::corpus::Vocabulary;
use jstrr::priors::Hyperparams;
use jstrr::sampler::ModelParams;

const BIN: &str = env!("CARGO_BIN_EXE_jstrr");
const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let output = run(args);
    assert!(
        output.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn out_arg(dir: &Path) -> String {
    format!("--out={}", dir.display())
}

#[test]
fn preprocess_balances_six_review_demo() {
    // Three positive, two negative, one neutral review: the neutral one is
    // dropped and one positive is sampled away, leaving D = 4.
    let dir = tempfile::tempdir().unwrap();
    let reviews = dir.path().join("six.jsonl");
    fs::write(
        &reviews,
        concat!(
            "{\"text\":\"great laptop great screen\",\"rating\":5}\n",
            "{\"text\":\"great battery great keyboard\",\"rating\":4}\n",
            "{\"text\":\"great display great laptop\",\"rating\":5}\n",
            "{\"text\":\"terrible screen terrible battery\",\"rating\":1}\n",
            "{\"text\":\"terrible keyboard terrible display\",\"rating\":2}\n",
            "{\"text\":\"average laptop average screen\",\"rating\":3}\n",
        ),
    )
    .unwrap();
    let output = run_ok(&[
        "preprocess",
        &format!("--reviews={}", reviews.display()),
        "--min-doc-frequency=1",
        "--balance=true",
        &out_arg(dir.path()),
        "--seed=0",
    ]);
    assert!(stdout(&output).contains("D=4"), "{}", stdout(&output));
    let documents = fs::read_to_string(dir.path().join("documents.jsonl")).unwrap();
    assert_eq!(documents.lines().count(), 4);
    assert!(dir.path().join("vocabulary.tsv").exists());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn preprocess_missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(&[
        "preprocess",
        "--reviews=/nonexistent/reviews.jsonl",
        &out_arg(dir.path()),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(
        stderr(&output).contains("/nonexistent/reviews.jsonl"),
        "{}",
        stderr(&output)
    );
}

fn preprocess_demo(dir: &Path) {
    run_ok(&[
        "preprocess",
        &format!("--reviews={FIXTURES}/reviews.jsonl"),
        &format!("--stopwords={FIXTURES}/stopwords.txt"),
        "--min-doc-frequency=2",
        "--train-fraction=0.75",
        &out_arg(dir),
        "--seed=0",
    ]);
}

fn train_demo(dir: &Path) {
    run_ok(&[
        "train",
        &format!("--documents={}/train.jsonl", dir.display()),
        &format!("--vocabulary={}/vocabulary.tsv", dir.display()),
        &format!("--lexicon-positive={FIXTURES}/lexicon_positive.txt"),
        &format!("--lexicon-negative={FIXTURES}/lexicon_negative.txt"),
        "--topics=2",
        "--iterations=200",
        &out_arg(dir),
        "--seed=0",
    ]);
}

#[test]
fn train_defaults_sigma_to_one_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_demo(dir.path());
    train_demo(dir.path());
    let model = Checkpoint::read(dir.path().join("model.json")).unwrap();
    assert_eq!(model.sigma, 1.0);
    assert_eq!(model.iterations, 200);
    let first = fs::read(dir.path().join("model.json")).unwrap();
    train_demo(dir.path());
    let second = fs::read(dir.path().join("model.json")).unwrap();
    assert_eq!(first, second);
    let diagnostics = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert!(diagnostics.starts_with("sweep,joint_log_score\n"));
    assert_eq!(diagnostics.lines().count(), 201);
}

#[test]
fn evaluate_trained_demo_beats_upper_bound() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_demo(dir.path());
    train_demo(dir.path());
    let output = run_ok(&[
        "evaluate",
        &format!("--checkpoint={}/model.json", dir.path().display()),
        &format!("--documents={}/documents.jsonl", dir.path().display()),
        &format!("--vocabulary={}/vocabulary.tsv", dir.path().display()),
        &out_arg(dir.path()),
        "--seed=0",
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("perplexity.json")).unwrap())
            .unwrap();
    let wp = report["word_perplexity"].as_f64().unwrap();
    let bound = report["upper_bound"].as_f64().unwrap();
    assert!(wp < bound, "{}", stdout(&output));
    assert!(report["rating_perplexity"].as_f64().unwrap() > 0.0);
    assert!(report["config"]["seed"].is_number());
}

#[test]
fn evaluate_uniform_checkpoint_scores_vocabulary_size() {
    let dir = tempfile::tempdir().unwrap();
    let v = 9;
    let hyper = Hyperparams::standard(2, 2, v, 0.0).unwrap();
    let params = ModelParams::uniform(1, 2, 2, v);
    let vocab = Vocabulary::new((0..v).map(|i| format!("w{i}")).collect(), vec![1; v]).unwrap();
    Checkpoint::new(&hyper, &params, vocab.sha256(), 0, 1)
        .write(dir.path().join("uniform.json"))
        .unwrap();
    fs::write(
        dir.path().join("test.jsonl"),
        "{\"id\":\"t\",\"word_ids\":[0,3,8,2],\"ratings\":[]}\n",
    )
    .unwrap();
    let output = run_ok(&[
        "evaluate",
        &format!("--checkpoint={}/uniform.json", dir.path().display()),
        &format!("--documents={}/test.jsonl", dir.path().display()),
        &out_arg(dir.path()),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("perplexity.json")).unwrap())
            .unwrap();
    let wp = report["word_perplexity"].as_f64().unwrap();
    assert!(
        ((wp - v as f64) / v as f64).abs() < 1e-12,
        "{}",
        stdout(&output)
    );
}

#[test]
fn evaluate_empty_test_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_demo(dir.path());
    train_demo(dir.path());
    fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let output = run(&[
        "evaluate",
        &format!("--checkpoint={}/model.json", dir.path().display()),
        &format!("--documents={}/empty.jsonl", dir.path().display()),
        &out_arg(dir.path()),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn evaluate_zero_probability_word_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // Word 1 has zero prior mass everywhere, so a fresh model assigns it
    // zero probability in every cell.
    let mut beta = vec![0.01; 2 * 2 * 3];
    for lz in 0..4 {
        beta[lz * 3 + 1] = 0.0;
    }
    let hyper = Hyperparams::new(
        2,
        2,
        3,
        vec![1.5, 1.5],
        vec![0.75; 4],
        beta,
        vec![10.0; 10],
        0.0,
    )
    .unwrap();
    let mut params = ModelParams::uniform(1, 2, 2, 3);
    for lz in 0..4 {
        params.phi[lz * 3] = 0.5;
        params.phi[lz * 3 + 1] = 0.0;
        params.phi[lz * 3 + 2] = 0.5;
    }
    let vocab = Vocabulary::new(
        vec!["a".into(), "forbidden".into(), "z".into()],
        vec![1, 1, 1],
    )
    .unwrap();
    Checkpoint::new(&hyper, &params, vocab.sha256(), 0, 1)
        .write(dir.path().join("model.json"))
        .unwrap();
    fs::write(
        dir.path().join("test.jsonl"),
        "{\"id\":\"poisoned\",\"word_ids\":[0,1],\"ratings\":[]}\n",
    )
    .unwrap();
    let output = run(&[
        "evaluate",
        &format!("--checkpoint={}/model.json", dir.path().display()),
        &format!("--documents={}/test.jsonl", dir.path().display()),
        &out_arg(dir.path()),
    ]);
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr(&output).contains("poisoned"), "{}", stderr(&output));
}

#[test]
fn cv_reports_grid_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_demo(dir.path());
    let cv = |out: &Path| {
        run_ok(&[
            "cv",
            &format!("--documents={}/documents.jsonl", dir.path().display()),
            &format!("--vocabulary={}/vocabulary.tsv", dir.path().display()),
            "--topics=2",
            "--sigma-grid=0,1,5",
            "--folds=2",
            "--iterations=40",
            "--particles=5",
            &out_arg(out),
            "--seed=1",
        ]);
    };
    cv(dir.path());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cv.json")).unwrap()).unwrap();
    assert_eq!(report["grid"].as_array().unwrap().len(), 3);
    for scores in report["fold_scores"].as_array().unwrap() {
        assert_eq!(scores.as_array().unwrap().len(), 2);
    }
    let selected = report["selected_sigma"].as_f64().unwrap();
    assert!([0.0, 1.0, 5.0].contains(&selected));
    let curve = fs::read_to_string(dir.path().join("cv_curve.csv")).unwrap();
    assert!(curve.starts_with("sigma,mean_word_perplexity\n"));
    assert_eq!(curve.lines().count(), 4);
    let first = fs::read(dir.path().join("cv_curve.csv")).unwrap();
    cv(dir.path());
    assert_eq!(first, fs::read(dir.path().join("cv_curve.csv")).unwrap());
}

#[test]
fn cv_singleton_grid_selects_it() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_demo(dir.path());
    run_ok(&[
        "cv",
        &format!("--documents={}/documents.jsonl", dir.path().display()),
        &format!("--vocabulary={}/vocabulary.tsv", dir.path().display()),
        "--topics=2",
        "--sigma-grid=2.5",
        "--folds=2",
        "--iterations=20",
        "--particles=3",
        &out_arg(dir.path()),
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cv.json")).unwrap()).unwrap();
    assert_eq!(report["selected_sigma"].as_f64().unwrap(), 2.5);
}

#[test]
fn simulate_smoke_and_pairing() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "simulate",
        "--topics=2",
        "--vocabulary-size=50",
        "--documents=50",
        "--m-list=1",
        "--ratio-list=10",
        "--mu-kind=unif",
        "--sigma=0",
        "--iterations=30",
        &out_arg(dir.path()),
        "--seed=2",
    ]);
    let csv = fs::read_to_string(dir.path().join("simulation.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("m,n,model,mean_kl,std_error"));
    let row = lines.next().unwrap();
    assert!(row.starts_with("1,10,jst,"), "{row}");
    let mean: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!(mean.is_finite() && mean >= 0.0);
    assert_eq!(lines.next(), None);
}

#[test]
fn simulate_paired_sigmas_order_mean_kl() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "simulate",
        "--topics=2",
        "--vocabulary-size=100",
        "--documents=300",
        "--m-list=1",
        "--ratio-list=10",
        "--mu-kind=diff",
        "--sigma=0,5",
        "--iterations=150",
        &out_arg(dir.path()),
        "--seed=5",
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("simulation.json")).unwrap())
            .unwrap();
    let runs = report["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    let kl_jst = runs[0]["result"]["mean_kl"].as_f64().unwrap();
    let kl_rr = runs[1]["result"]["mean_kl"].as_f64().unwrap();
    assert!(
        kl_rr < kl_jst,
        "informative ratings should lower KL: jst {kl_jst} vs jst-rr {kl_rr}"
    );
}

#[test]
fn simulate_unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.toml"),
        "[simulate]\nmisspelled_key = 3\n",
    )
    .unwrap();
    let output = run(&[
        "simulate",
        &format!("--config={}/bad.toml", dir.path().display()),
        &out_arg(dir.path()),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(
        stderr(&output).contains("misspelled_key"),
        "{}",
        stderr(&output)
    );
}

#[test]
fn topics_layout_and_mu_rows() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_demo(dir.path());
    train_demo(dir.path());
    let output = run_ok(&[
        "topics",
        &format!("--checkpoint={}/model.json", dir.path().display()),
        &format!("--vocabulary={}/vocabulary.tsv", dir.path().display()),
        "--top=5",
        &out_arg(dir.path()),
    ]);
    assert!(output.stderr.is_empty());
    let table = fs::read_to_string(dir.path().join("top_words.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("sentiment,topic,rank,term,prob"));
    // 2 sentiments x 2 topics x 5 ranks.
    assert_eq!(lines.count(), 20);
    assert!(table.contains("positive,0,1,"));
    assert!(table.contains("negative,1,5,"));

    let mu = fs::read_to_string(dir.path().join("mu.csv")).unwrap();
    let mut sums = [0.0f64; 2];
    for line in mu.lines().skip(1) {
        let mut fields = line.split(',');
        let sentiment = fields.next().unwrap();
        let _rating = fields.next().unwrap();
        let p: f64 = fields.next().unwrap().parse().unwrap();
        sums[usize::from(sentiment == "negative")] += p;
    }
    for sum in sums {
        assert!((sum - 1.0).abs() < 1e-12, "mu row sums to {sum}");
    }
}

#[test]
fn topics_clamps_top_beyond_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_demo(dir.path());
    train_demo(dir.path());
    let output = run_ok(&[
        "topics",
        &format!("--checkpoint={}/model.json", dir.path().display()),
        &format!("--vocabulary={}/vocabulary.tsv", dir.path().display()),
        "--top=10000",
        &out_arg(dir.path()),
    ]);
    assert!(stderr(&output).contains("clamping"), "{}", stderr(&output));
    let table = fs::read_to_string(dir.path().join("top_words.csv")).unwrap();
    let v = fs::read_to_string(dir.path().join("vocabulary.tsv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    assert_eq!(table.lines().count() - 1, 2 * 2 * v);
}

#[test]
fn topics_vocabulary_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    preprocess_demo(dir.path());
    train_demo(dir.path());
    let other = Vocabulary::new(vec!["different".into()], vec![1]).unwrap();
    fs::write(dir.path().join("other.tsv"), other.to_tsv()).unwrap();
    let output = run(&[
        "topics",
        &format!("--checkpoint={}/model.json", dir.path().display()),
        &format!("--vocabulary={}/other.tsv", dir.path().display()),
        &out_arg(dir.path()),
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("mismatch"), "{}", stderr(&output));
}

#[test]
fn config_file_drives_full_demo_pipeline() {
    // The bundled demo config runs end to end from the crate directory.
    let dir = tempfile::tempdir().unwrap();
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let steps = ["preprocess", "train", "evaluate", "topics"];
    for step in steps {
        let output = Command::new(BIN)
            .current_dir(manifest)
            .args([
                step,
                "--config=fixtures/demo.toml",
                &out_arg(dir.path()),
                "--seed=0",
            ])
            .output()
            .expect("binary runs");
        // The demo config points at out/..., so patch paths via flags.
        if !output.status.success() {
            // Steps after preprocess need explicit paths into the tempdir.
            let extra: Vec<String> = match step {
                "train" => vec![
                    format!("--documents={}/train.jsonl", dir.path().display()),
                    format!("--vocabulary={}/vocabulary.tsv", dir.path().display()),
                ],
                "evaluate" => vec![
                    format!("--checkpoint={}/model.json", dir.path().display()),
                    format!("--documents={}/documents.jsonl", dir.path().display()),
                    format!("--vocabulary={}/vocabulary.tsv", dir.path().display()),
                ],
                "topics" => vec![
                    format!("--checkpoint={}/model.json", dir.path().display()),
                    format!("--vocabulary={}/vocabulary.tsv", dir.path().display()),
                ],
                _ => vec![],
            };
            let output = Command::new(BIN)
                .current_dir(manifest)
                .args([step, "--config=fixtures/demo.toml"])
                .args(&extra)
                .args([&out_arg(dir.path()), "--seed=0"])
                .output()
                .expect("binary runs");
            assert!(
                output.status.success(),
                "{step}: {}",
                String::from_utf8_lossy(&output.stderr)
            );
        }
    }
    assert!(dir.path().join("perplexity.json").exists());
    assert!(dir.path().join("top_words.csv").exists());
}
