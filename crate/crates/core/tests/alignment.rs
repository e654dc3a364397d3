mod common;

use std::collections::BTreeSet;

use recipe_align::aligner::{
    align, frame_step_score, gaussian_weights, segment_step_score, temporal_similarity, AlignConfig, ScoreMode,
};
use recipe_align::eval::{run_ablation, PrecisionDenominator, VideoCase};
use recipe_align::evidence::{collect_evidence, ObjectEvidence};
use recipe_align::recipe::{parse_conllu, parse_recipe, ParsedRecipe, ParsedStep, RelationLabels};
use recipe_align::simulator::{generate, generate_recipe, generate_video, SimConfig};
use recipe_align::trace::{Label, Segment};
use recipe_align::{load_embeddings, run_video, EmbeddingStore, PipelineConfig};

use common::fixture;

fn step(index: u32, actions: &[&str], primary: &[&str], secondary: &[&str]) -> ParsedStep {
    let mut s = ParsedStep::new(index);
    s.actions = actions.iter().map(|s| s.to_string()).collect();
    s.primary_objects = primary.iter().map(|s| s.to_string()).collect();
    s.secondary_objects = secondary.iter().map(|s| s.to_string()).collect();
    s
}

fn evidence(segment: Segment, labels: &[&str]) -> ObjectEvidence {
    let mut e = ObjectEvidence::empty(segment);
    e.top_k = labels.iter().map(|s| s.to_string()).collect();
    for l in labels {
        e.histogram.insert(l.to_string(), 1);
    }
    e
}

#[test]
fn frame_score_matches_hand_computation() {
    let store = load_embeddings(fixture("vectors3.txt")).unwrap();
    let s = step(2, &["pour"], &["cup"], &["board"]);
    let ev = evidence(Segment::new(20, 40), &["spoon", "cutting_board"]);
    let got = frame_step_score(30, 100, &s, 4, &ev, &store, &AlignConfig::default()).unwrap();
    // S_obj: cup vs (0.5, 0.5, 1) at distance sqrt(1.5); S_act: pour vs spoon at distance 1;
    // S_temp: 1 - |0.3 - 0.5|.
    let want = 0.5 * (1.0 / (1.0 + 1.5f64.sqrt())) + 0.2 * 0.5 + 0.3 * 0.8;
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

#[test]
fn temporal_term_examples() {
    assert_eq!(temporal_similarity(50, 100, 3, 6), 1.0);
    assert!((temporal_similarity(0, 100, 6, 6) - 0.0).abs() < 1e-15);
}

#[test]
fn exact_object_match_scores_one() {
    let store = load_embeddings(fixture("vectors3.txt")).unwrap();
    let s = step(1, &[], &["cup"], &[]);
    let ev = evidence(Segment::new(0, 10), &["cup"]);
    let cfg = AlignConfig {
        w_obj: 0.7,
        w_act: 0.0,
        w_temp: 0.3,
        ..AlignConfig::default()
    }
    .with_mode(ScoreMode::SemanticOnly);
    assert_eq!(frame_step_score(3, 10, &s, 1, &ev, &store, &cfg).unwrap(), 1.0);
}

#[test]
fn gaussian_weight_properties() {
    assert_eq!(gaussian_weights(1, 0.25), vec![1.0]);
    for len in [2, 7, 31, 100] {
        let w = gaussian_weights(len, 0.25);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for j in 0..len / 2 {
            assert!((w[j] - w[len - 1 - j]).abs() < 1e-15);
        }
    }
}

#[test]
fn constant_frame_scores_give_constant_segment_score() {
    let store = load_embeddings(fixture("vectors3.txt")).unwrap();
    let s = step(1, &["pour"], &["cup"], &[]);
    let ev = evidence(Segment::new(0, 25), &["spoon"]);
    let cfg = AlignConfig::default().with_mode(ScoreMode::SemanticOnly);
    let c = frame_step_score(0, 25, &s, 1, &ev, &store, &cfg).unwrap();
    let seg = segment_step_score(Segment::new(0, 25), 25, &s, 1, &ev, &store, &cfg).unwrap();
    assert!((seg - c).abs() < 1e-12);
}

#[test]
fn no_segments_means_all_background() {
    let recipe = ParsedRecipe {
        steps: vec![step(1, &["pour"], &["cup"], &[])],
        warnings: vec![],
    };
    let store = EmbeddingStore::new(3).unwrap();
    let a = align("v", 40, &[], &recipe, &store, &AlignConfig::default()).unwrap();
    assert!(a.frame_labels.iter().all(|l| *l == Label::Background));
    assert!(a.discarded.is_empty());
}

fn one_hot_store(words: &[&str]) -> EmbeddingStore {
    let mut store = EmbeddingStore::new(words.len()).unwrap();
    for (i, w) in words.iter().enumerate() {
        let mut v = vec![0.0; words.len()];
        v[i] = 1.0;
        store.insert(w, v).unwrap();
    }
    store
}

#[test]
fn temporal_only_recovers_order_on_evenly_spaced_segments() {
    for n in [2usize, 3, 6, 9] {
        let nf = 600;
        let recipe = ParsedRecipe {
            steps: (1..=n as u32).map(|i| step(i, &["do"], &["x"], &[])).collect(),
            warnings: vec![],
        };
        let len = nf / (2 * n) - 1;
        let evs: Vec<ObjectEvidence> = (1..=n)
            .map(|i| {
                let mid = ((i as f64 - 0.25) / n as f64 * nf as f64) as usize;
                evidence(Segment::new(mid - len / 2, mid - len / 2 + len), &[])
            })
            .collect();
        let cfg = AlignConfig::default().with_mode(ScoreMode::TemporalOnly);
        let a = align("v", nf, &evs, &recipe, &one_hot_store(&["do", "x"]), &cfg).unwrap();
        let want: Vec<Option<u32>> = (1..=n as u32).map(Some).collect();
        assert_eq!(a.assignments, want, "n = {n}");
    }
}

#[test]
fn single_term_weights_equal_mode() {
    for seed in 0..5 {
        let cfg = SimConfig {
            seed,
            detection_noise: 0.4,
            ..SimConfig::default()
        };
        let (trace, recipe) = generate(&cfg).unwrap();
        let run = |align: AlignConfig| {
            let p = PipelineConfig {
                align,
                ..PipelineConfig::default()
            };
            run_video(&trace, None, &recipe.parsed, &recipe.store, &p).unwrap()
        };
        let by_weights = run(AlignConfig {
            w_obj: 0.0,
            w_act: 0.0,
            w_temp: 1.0,
            ..AlignConfig::default()
        });
        let by_mode = run(AlignConfig::default().with_mode(ScoreMode::TemporalOnly));
        assert_eq!(by_weights, by_mode);

        let by_weights = run(AlignConfig {
            w_obj: 0.5 / 0.7,
            w_act: 0.2 / 0.7,
            w_temp: 0.0,
            ..AlignConfig::default()
        });
        let by_mode = run(AlignConfig::default().with_mode(ScoreMode::SemanticOnly));
        assert_eq!(by_weights.assignments, by_mode.assignments);
        assert_eq!(by_weights.frame_labels, by_mode.frame_labels);
    }
}

#[test]
fn raising_threshold_only_discards() {
    for seed in 0..20 {
        let cfg = SimConfig {
            seed,
            detection_noise: 0.6,
            distractor_segment_rate: 0.3,
            ..SimConfig::default()
        };
        let (trace, recipe) = generate(&cfg).unwrap();
        assert!(recipe.parsed.steps.iter().all(|s| s.prerequisites.is_empty()));
        let mut prev: Option<Vec<Option<u32>>> = None;
        for t in [0.0, 0.2, 0.35, 0.5, 0.6, 0.7, 0.9] {
            let p = PipelineConfig {
                align: AlignConfig {
                    score_threshold: t,
                    ..AlignConfig::default()
                },
                ..PipelineConfig::default()
            };
            let a = run_video(&trace, None, &recipe.parsed, &recipe.store, &p).unwrap();
            if let Some(prev) = &prev {
                for (before, now) in prev.iter().zip(&a.assignments) {
                    assert!(now.is_none() || now == before, "seed {seed} threshold {t}");
                }
            }
            prev = Some(a.assignments);
        }
    }
}

#[test]
fn alignment_invariants_on_simulated_traces() {
    for seed in 0..10 {
        let cfg = SimConfig {
            seed,
            detection_noise: 0.3,
            out_of_order_rate: 0.3,
            distractor_segment_rate: 0.3,
            ..SimConfig::default()
        };
        let (trace, recipe) = generate(&cfg).unwrap();
        let a = run_video(&trace, None, &recipe.parsed, &recipe.store, &PipelineConfig::default()).unwrap();
        let mut inside = vec![false; trace.num_frames];
        for (i, seg) in a.segments.iter().enumerate() {
            let labels: BTreeSet<Label> = seg.frames().map(|f| a.frame_labels[f]).collect();
            assert_eq!(labels.len(), 1);
            let expected = a.assignments[i].map_or(Label::Background, Label::Step);
            assert_eq!(labels.into_iter().next(), Some(expected));
            assert_eq!(a.discarded.contains(&i), a.assignments[i].is_none());
            seg.frames().for_each(|f| inside[f] = true);
            assert!(a.segment_scores[i].iter().all(|s| (0.0..=1.0).contains(s)));
        }
        for (f, covered) in inside.iter().enumerate() {
            if !covered {
                assert_eq!(a.frame_labels[f], Label::Background);
            }
        }
    }
}

#[test]
fn prerequisite_released_by_earlier_segment() {
    let steps = recipe_align::recipe::load_conllu(fixture("prerequisite.conllu")).unwrap();
    let recipe = parse_recipe(&steps, &RelationLabels::default(), None).unwrap();
    let store = load_embeddings(fixture("prerequisite.vectors.txt")).unwrap();
    let mut trace = recipe_align::load_trace(fixture("prerequisite.trace.json")).unwrap();
    for f in 10..30 {
        trace.action_scores[f] = 1.0;
        trace.detections[f] = vec![recipe_align::trace::Detection::new("egg", 0.9)];
    }
    let segs = vec![Segment::new(10, 30), Segment::new(60, 90)];
    let ev = collect_evidence(&trace, &segs, 1, 3).unwrap();
    let a = align("v", trace.num_frames, &ev, &recipe, &store, &AlignConfig::default()).unwrap();
    assert_eq!(a.assignments, vec![Some(1), Some(2)]);
}

#[test]
fn ablation_runner_shape_and_determinism() {
    let cfg = SimConfig::default();
    let recipe = generate_recipe(&cfg).unwrap();
    let trace = generate_video(&cfg, &recipe, 0).unwrap();
    let corpus = [VideoCase {
        trace: &trace,
        recipe: &recipe.parsed,
        store: &recipe.store,
    }];
    let a = run_ablation(&corpus, &PipelineConfig::default(), PrecisionDenominator::All).unwrap();
    assert_eq!(a.len(), 3);
    assert_eq!(a, run_ablation(&corpus, &PipelineConfig::default(), PrecisionDenominator::All).unwrap());
}

#[test]
fn invalid_weights_rejected() {
    let cfg = AlignConfig {
        w_obj: 0.6,
        ..AlignConfig::default()
    };
    assert!(cfg.validate().is_err());
    let text = "1\tStir\tstir\tVERB\t_\t_\t0\troot\t_\t_\n";
    let recipe = parse_recipe(&parse_conllu(text, "t").unwrap(), &RelationLabels::default(), None).unwrap();
    let store = EmbeddingStore::new(2).unwrap();
    assert!(align("v", 10, &[], &recipe, &store, &cfg).is_err());
}
