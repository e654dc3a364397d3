use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use recipe_align::eval::{parse_report_table, run_ablation, PrecisionDenominator, VideoCase};
use recipe_align::simulator::{generate_recipe, generate_video, SimConfig};
use recipe_align::{load_trace, PipelineConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_recipe-align")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn simulate(dir: &Path, extra: &[&str]) -> String {
    let out = dir.to_str().unwrap().to_string();
    let mut args = vec!["simulate", "--out", &out, "--videos", "4"];
    args.extend_from_slice(extra);
    ok(&args);
    dir.join("manifest.json").to_str().unwrap().to_string()
}

#[test]
fn pipeline_composes_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate(&tmp.path().join("c"), &["--seed", "5", "--detection-noise", "0.3"]);
    ok(&["propose", "--manifest", &manifest]);
    let first = ok(&["align", "--manifest", &manifest]);
    let align_dir = tmp.path().join("c/out/alignments");
    let snapshot: Vec<Vec<u8>> = {
        let mut files: Vec<_> = fs::read_dir(&align_dir).unwrap().map(|e| e.unwrap().path()).collect();
        files.sort();
        files.iter().map(|f| fs::read(f).unwrap()).collect()
    };
    assert_eq!(snapshot.len(), 4);
    let second = ok(&["align", "--manifest", &manifest]);
    assert_eq!(first, second);
    let mut files: Vec<_> = fs::read_dir(&align_dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    let again: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    assert_eq!(snapshot, again);
    ok(&["eval", "--manifest", &manifest]);
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(&tmp.path().join("a"), &["--seed", "9"]);
    simulate(&tmp.path().join("b"), &["--seed", "9"]);
    for f in ["recipe.conllu", "embeddings.txt", "manifest.json", "traces/sim0009_v003.json"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
    let t = load_trace(tmp.path().join("a/traces/sim0009_v000.json")).unwrap();
    assert!(t.ground_truth.is_some());
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("c");
    simulate(&c, &[]);
    let out = tmp.path().join("x.json");
    let out = out.to_str().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"video_id":"m","fps":30,"num_frames":1,"action_scores":[2.0],"detections":[[]]}"#).unwrap();
    let r = run(&["propose", "--trace", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("action_scores"));

    assert_eq!(code(&["propose", "--trace", "/nonexistent/t.json", "--out", out]), 1);

    let trace = c.join("traces/sim0000_v000.json");
    let recipe = c.join("recipe.conllu");
    assert_eq!(
        code(&[
            "align",
            "--trace",
            trace.to_str().unwrap(),
            "--recipe",
            recipe.to_str().unwrap(),
            "--embeddings",
            "/nonexistent/vectors.txt",
            "--out",
            out,
        ]),
        1
    );
    let sim_out = tmp.path().join("tiny");
    assert_eq!(code(&["simulate", "--out", sim_out.to_str().unwrap(), "--frames", "40"]), 2);
    assert_eq!(code(&["align", "--mode", "sideways"]), 2);
}

#[test]
fn all_zero_trace_gives_empty_segments() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("z.json");
    fs::write(&trace, r#"{"video_id":"z","fps":30,"num_frames":5,"action_scores":[0,0,0,0,0],"detections":[[],[],[],[],[]]}"#).unwrap();
    let out = tmp.path().join("segs.json");
    ok(&["propose", "--trace", trace.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(v, serde_json::json!([]));
}

#[test]
fn proposals_equal_truth_on_indicator_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("c");
    simulate(&c, &["--seed", "2"]);
    let trace_path = c.join("traces/sim0002_v001.json");
    let out = tmp.path().join("segs.json");
    ok(&["propose", "--trace", trace_path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let got: Vec<(usize, usize, f64)> = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    let trace = load_trace(&trace_path).unwrap();
    let truth: Vec<(usize, usize)> = trace.ground_truth.unwrap().segments.iter().map(|s| (s.start, s.end)).collect();
    assert_eq!(got.iter().map(|g| (g.0, g.1)).collect::<Vec<_>>(), truth);
}

#[test]
fn report_table_round_trips_and_recall_is_ordered() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate(&tmp.path().join("c"), &["--seed", "4", "--detection-noise", "0.5", "--distractor-rate", "0.3"]);
    ok(&["propose", "--manifest", &manifest, "--score-threshold", "0.5"]);
    ok(&["align", "--manifest", &manifest]);
    let printed = ok(&["eval", "--manifest", &manifest, "--precision-denominator", "labeled"]);
    let out = tmp.path().join("c/out");
    let table = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(printed.trim(), table.trim());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let parsed = parse_report_table(&table).unwrap();
    let close = |a: f64, b: &serde_json::Value| (a - b.as_f64().unwrap()).abs() < 5e-7;
    assert!(close(parsed["mean"], &json["mean_frame_precision"]));
    assert!(close(parsed["mean (all frames)"], &json["mean_frame_precision_all"]));
    for (id, v) in json["frame_precision_per_video"].as_object().unwrap() {
        assert!(close(parsed[&format!("video:{id}")], v));
    }
    for a in ["0.3", "0.4", "0.5"] {
        assert!(close(parsed[&format!("recall@{a}")], &json["iou_at"][a]));
    }
    assert!(parsed["recall@0.3"] >= parsed["recall@0.5"]);
}

#[test]
fn perfect_alignment_scores_one() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = simulate(&tmp.path().join("c"), &["--seed", "1"]);
    ok(&["propose", "--manifest", &manifest]);
    ok(&["align", "--manifest", &manifest]);
    ok(&["eval", "--manifest", &manifest]);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("c/out/report.json")).unwrap()).unwrap();
    assert_eq!(json["mean_frame_precision"], 1.0);
    for a in ["0.3", "0.4", "0.5"] {
        assert_eq!(json["iou_at"][a], 1.0);
    }
}

#[test]
fn temporal_mode_matches_ablation_entry() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("c");
    let manifest = simulate(&dir, &["--seed", "3", "--detection-noise", "0.2"]);
    ok(&["align", "--manifest", &manifest, "--mode", "temporal_only"]);
    ok(&["eval", "--manifest", &manifest]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap();

    let cfg = SimConfig {
        seed: 3,
        detection_noise: 0.2,
        ..SimConfig::default()
    };
    let recipe = generate_recipe(&cfg).unwrap();
    let traces: Vec<_> = (0..4).map(|i| generate_video(&cfg, &recipe, i).unwrap()).collect();
    let corpus: Vec<VideoCase> = traces
        .iter()
        .map(|trace| VideoCase {
            trace,
            recipe: &recipe.parsed,
            store: &recipe.store,
        })
        .collect();
    let ablation = run_ablation(&corpus, &PipelineConfig::default(), PrecisionDenominator::All).unwrap();
    let temporal = ablation[&recipe_align::ScoreMode::TemporalOnly].unwrap();
    assert!((json["mean_frame_precision"].as_f64().unwrap() - temporal).abs() < 1e-12);
}

#[test]
fn single_video_align_and_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("c");
    simulate(&c, &[]);
    let p = |s: &str| c.join(s).to_str().unwrap().to_string();
    let timeline = tmp.path().join("timeline.csv");
    let report = ok(&[
        "align",
        "--trace",
        &p("traces/sim0000_v000.json"),
        "--recipe",
        &p("recipe.conllu"),
        "--embeddings",
        &p("embeddings.txt"),
        "--out",
        &p("a.json"),
        "--weights",
        "0.5,0.2,0.3",
        "--top-k",
        "3",
        "--timeline-csv",
        timeline.to_str().unwrap(),
    ]);
    assert!(report.contains("step  1"));
    assert!(fs::read_to_string(&timeline).unwrap().lines().count() > 1);
    let evald = tmp.path().join("eval");
    let out = ok(&["eval", "--alignment", &p("a.json"), "--trace", &p("traces/sim0000_v000.json"), "--out", evald.to_str().unwrap()]);
    assert!(out.contains("1.000000"));
    assert!(evald.join("report.json").is_file());
}

#[test]
fn parse_and_nms_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("c");
    simulate(&c, &[]);
    let json = ok(&["parse", "--recipe", c.join("recipe.conllu").to_str().unwrap()]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["steps"].as_array().unwrap().len(), 6);

    let props = tmp.path().join("p.json");
    fs::write(&props, "[[0, 10, 0.8], [0, 10, 0.9], [20, 30, 0.5]]").unwrap();
    let out = tmp.path().join("kept.json");
    ok(&["nms", "--proposals", props.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let kept: Vec<(usize, usize, f64)> = serde_json::from_str(&fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(kept, vec![(0, 10, 0.9), (20, 30, 0.5)]);
}

#[test]
fn fold_selection_partitions_videos() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("c");
    let manifest = simulate(&dir, &[]);
    ok(&["propose", "--manifest", &manifest]);
    ok(&["align", "--manifest", &manifest]);
    let mut seen = 0;
    for fold in 0..2 {
        ok(&["eval", "--manifest", &manifest, "--folds", "2", "--fold", &fold.to_string()]);
        let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap();
        seen += json["frame_precision_per_video"].as_object().unwrap().len();
    }
    assert_eq!(seen, 4);
}
