//! Synthetic recipe and trace corpora with known ground truth.
//!
//! Each recipe step is a "verb the object" sentence with its own object.
//! Every object and verb gets its own basis vector, so identical labels are
//! at distance 0 and distinct labels at distance sqrt(2).

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{save_embeddings, EmbeddingStore};
use crate::error::{Error, Result};
use crate::manifest::{ManifestVideo, RunManifest};
use crate::recipe::{extract_pairs, resolve_coreference, write_conllu, ParsedRecipe, RecipeStep, RelationLabels, Token};
use crate::trace::{save_trace, Detection, GroundTruth, GroundTruthSegment, Label, VideoTrace};

const OBJECTS: [&str; 40] = [
    "bowl", "pan", "egg", "milk", "sugar", "coffee", "mug", "knife", "board", "carrot", "onion", "pepper", "salt",
    "oil", "butter", "flour", "spoon", "fork", "plate", "cup", "kettle", "tea", "bread", "cheese", "tomato", "lettuce",
    "jar", "lid", "pot", "water", "rice", "pasta", "sauce", "garlic", "lemon", "honey", "whisk", "spatula", "oven",
    "fridge",
];

const VERBS: [&str; 12] = [
    "pour", "crack", "stir", "chop", "take", "put", "open", "close", "wash", "cut", "mix", "fill",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub num_steps: usize,
    pub segments_per_step: usize,
    pub object_vocab_size: usize,
    pub detection_noise: f64,
    pub out_of_order_rate: f64,
    pub distractor_segment_rate: f64,
    /// Inclusive range of segment lengths.
    pub frames_per_segment: (usize, usize),
    /// Inclusive range of background gaps between (and around) segments.
    pub gap_frames: (usize, usize),
    /// Fixed video length; the layout must fit. `None` sizes the video to the layout.
    pub num_frames: Option<usize>,
    pub fps: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            num_steps: 6,
            segments_per_step: 2,
            object_vocab_size: 20,
            detection_noise: 0.0,
            out_of_order_rate: 0.0,
            distractor_segment_rate: 0.0,
            frames_per_segment: (20, 40),
            gap_frames: (5, 15),
            num_frames: None,
            fps: 30.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} {p} outside [0, 1]")))
            }
        };
        prob("detection_noise", self.detection_noise)?;
        prob("out_of_order_rate", self.out_of_order_rate)?;
        prob("distractor_segment_rate", self.distractor_segment_rate)?;
        if self.num_steps == 0 || self.segments_per_step == 0 {
            return Err(Error::Config("num_steps and segments_per_step must be positive".into()));
        }
        if self.object_vocab_size < self.num_steps {
            return Err(Error::Config(format!(
                "object_vocab_size {} smaller than num_steps {}",
                self.object_vocab_size, self.num_steps
            )));
        }
        if self.distractor_segment_rate > 0.0 && self.object_vocab_size == self.num_steps {
            return Err(Error::Config("distractor segments need objects outside the recipe".into()));
        }
        let (lo, hi) = self.frames_per_segment;
        if lo == 0 || lo > hi {
            return Err(Error::Config(format!("frames_per_segment range ({lo}, {hi}) invalid")));
        }
        let (glo, ghi) = self.gap_frames;
        if glo == 0 || glo > ghi {
            return Err(Error::Config(format!("gap_frames range ({glo}, {ghi}) must start at 1 or more")));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::Config("fps must be positive".into()));
        }
        if let Some(n) = self.num_frames {
            let min_needed = self.num_steps * self.segments_per_step * (lo + glo) + glo;
            if n < min_needed {
                return Err(Error::Config(format!(
                    "{n} frames cannot hold {} segments; at least {min_needed} needed",
                    self.num_steps * self.segments_per_step
                )));
            }
        }
        Ok(())
    }
}

fn object_name(i: usize) -> String {
    OBJECTS.get(i).map_or_else(|| format!("item{i}"), |s| s.to_string())
}

/// The recipe side of a simulated corpus, shared by all its videos.
#[derive(Debug, Clone)]
pub struct SimRecipe {
    pub steps: Vec<RecipeStep>,
    pub parsed: ParsedRecipe,
    pub store: EmbeddingStore,
    /// Object of step `i + 1`.
    pub step_objects: Vec<String>,
    pub vocabulary: Vec<String>,
}

fn step_sentence(index: u32, verb: &str, object: &str) -> RecipeStep {
    let mut text = format!("{verb} the {object}.");
    text[..1].make_ascii_uppercase();
    let tok = |id, form: &str, lemma: &str, upos: &str, head, deprel: &str| Token {
        id,
        form: form.to_string(),
        lemma: lemma.to_string(),
        upos: upos.to_string(),
        xpos: "_".to_string(),
        feats: "_".to_string(),
        head,
        deprel: deprel.to_string(),
    };
    RecipeStep {
        index,
        text,
        tokens: vec![
            tok(1, verb, verb, "VERB", 0, "root"),
            tok(2, "the", "the", "DET", 3, "det"),
            tok(3, object, object, "NOUN", 1, "obj"),
            tok(4, ".", ".", "PUNCT", 1, "punct"),
        ],
    }
}

fn sim_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Builds the recipe, vocabulary and embeddings for `cfg.seed`.
pub fn generate_recipe(cfg: &SimConfig) -> Result<SimRecipe> {
    cfg.validate()?;
    let mut rng = sim_rng(cfg.seed, 0);
    let mut vocabulary: Vec<String> = (0..cfg.object_vocab_size).map(object_name).collect();
    vocabulary.shuffle(&mut rng);
    let step_objects: Vec<String> = vocabulary[..cfg.num_steps].to_vec();

    let steps: Vec<RecipeStep> = step_objects
        .iter()
        .enumerate()
        .map(|(i, obj)| {
            let verb = VERBS[rng.random_range(0..VERBS.len())];
            step_sentence(i as u32 + 1, verb, obj)
        })
        .collect();

    let mut names: Vec<String> = vocabulary.clone();
    names.extend(VERBS.iter().map(|v| v.to_string()));
    names.sort();
    let mut store = EmbeddingStore::new(names.len())?;
    for (i, name) in names.iter().enumerate() {
        let mut v = vec![0.0; names.len()];
        v[i] = 1.0;
        store.insert(name, v)?;
    }

    // Go through the text format so the recipe is exactly what a reader of the file sees.
    let reparsed = crate::recipe::parse_conllu(&write_conllu(&steps), "simulated recipe")?;
    let labels = RelationLabels::default();
    let parsed = resolve_coreference(reparsed.iter().map(|s| extract_pairs(s, &labels)).collect(), None)?;
    Ok(SimRecipe {
        steps: reparsed,
        parsed,
        store,
        step_objects,
        vocabulary,
    })
}

/// Generates video `video_index` for a recipe built from the same config.
pub fn generate_video(cfg: &SimConfig, recipe: &SimRecipe, video_index: usize) -> Result<VideoTrace> {
    cfg.validate()?;
    let mut rng = sim_rng(cfg.seed, 1 + video_index as u64);

    let mut order: Vec<usize> = (0..cfg.num_steps).collect();
    for i in 0..order.len().saturating_sub(1) {
        if rng.random_bool(cfg.out_of_order_rate) {
            order.swap(i, i + 1);
        }
    }

    let distractors: Vec<&String> = recipe.vocabulary[cfg.num_steps..].iter().collect();
    // (label, object) per segment in temporal order
    let mut plan: Vec<(Label, String)> = Vec::new();
    for &s in &order {
        for _ in 0..cfg.segments_per_step {
            plan.push((Label::Step(s as u32 + 1), recipe.step_objects[s].clone()));
            if !distractors.is_empty() && rng.random_bool(cfg.distractor_segment_rate) {
                let d = distractors[rng.random_range(0..distractors.len())];
                plan.push((Label::Background, d.clone()));
            }
        }
    }

    let (lo, hi) = cfg.frames_per_segment;
    let (glo, ghi) = cfg.gap_frames;
    let mut cursor = rng.random_range(glo..=ghi);
    let mut gt = Vec::with_capacity(plan.len());
    for (label, object) in plan {
        let len = rng.random_range(lo..=hi);
        gt.push(GroundTruthSegment {
            start: cursor,
            end: cursor + len,
            label,
            main_object: object,
        });
        cursor += len + rng.random_range(glo..=ghi);
    }
    let num_frames = match cfg.num_frames {
        Some(n) if n < cursor => {
            return Err(Error::Config(format!("layout needs {cursor} frames but only {n} are available")));
        }
        Some(n) => n,
        None => cursor,
    };

    let mut action_scores = vec![0.0; num_frames];
    let mut detections: Vec<Vec<Detection>> = vec![Vec::new(); num_frames];
    for seg in &gt {
        for f in seg.start..seg.end {
            action_scores[f] = 1.0;
            let label = if rng.random_bool(cfg.detection_noise) {
                recipe.vocabulary[rng.random_range(0..recipe.vocabulary.len())].clone()
            } else {
                seg.main_object.clone()
            };
            let confidence = rng.random_range(0.5..=1.0);
            detections[f].push(Detection { label, confidence });
        }
    }

    let trace = VideoTrace {
        video_id: format!("sim{:04}_v{:03}", cfg.seed, video_index),
        fps: cfg.fps,
        num_frames,
        action_scores,
        detections,
        ground_truth: Some(GroundTruth::new(gt, num_frames)?),
    };
    trace.validate()?;
    Ok(trace)
}

/// A recipe with a single video, all derived from `cfg.seed`.
pub fn generate(cfg: &SimConfig) -> Result<(VideoTrace, SimRecipe)> {
    let recipe = generate_recipe(cfg)?;
    let trace = generate_video(cfg, &recipe, 0)?;
    Ok((trace, recipe))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes `recipe.conllu`, `embeddings.txt`, `traces/<id>.json` and
/// `manifest.json` under `dir`.
pub fn write_corpus(cfg: &SimConfig, num_videos: usize, dir: &Path) -> Result<RunManifest> {
    if num_videos == 0 {
        return Err(Error::Config("at least one video is required".into()));
    }
    let recipe = generate_recipe(cfg)?;
    let traces = (0..num_videos)
        .map(|i| generate_video(cfg, &recipe, i))
        .collect::<Result<Vec<_>>>()?;

    create_dir(dir)?;
    create_dir(&dir.join("traces"))?;
    let recipe_path = dir.join("recipe.conllu");
    fs::write(&recipe_path, write_conllu(&recipe.steps)).map_err(|e| Error::io(&recipe_path, e))?;
    save_embeddings(&recipe.store, dir.join("embeddings.txt"))?;

    let mut videos = Vec::with_capacity(num_videos);
    for t in &traces {
        let rel = PathBuf::from("traces").join(format!("{}.json", t.video_id));
        save_trace(t, dir.join(&rel))?;
        videos.push(ManifestVideo {
            trace: rel,
            segments: Some(PathBuf::from("segments").join(format!("{}.json", t.video_id))),
        });
    }
    let manifest = RunManifest {
        recipe: "recipe.conllu".into(),
        embeddings: "embeddings.txt".into(),
        coref: None,
        videos,
        out_dir: "out".into(),
    };
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::from_json("manifest", e))?;
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest)
}
