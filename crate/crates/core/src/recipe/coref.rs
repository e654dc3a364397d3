//! Pronoun antecedent resolution across recipe steps.
//!
//! "it" takes the last singular primary object of the nearest earlier step
//! that has one; "them"/"they" take the full primary list of the nearest
//! earlier step with any primary object. A resolved pronoun in step x that
//! points at step y makes y a prerequisite of x. A sidecar file can pin
//! resolutions explicitly.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::{ParsedRecipe, ParsedStep};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
pub struct CorefOverride {
    pub step: u32,
    pub token: usize,
    pub antecedent_step: u32,
    pub antecedent_lemma: String,
}

/// Sidecar format: `{"overrides": [[step, token_index, antecedent_step, antecedent_lemma]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorefOverrides {
    pub overrides: Vec<CorefOverride>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OverrideFile {
    overrides: Vec<(u32, usize, u32, String)>,
}

impl CorefOverrides {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: OverrideFile = serde_json::from_str(text).map_err(|e| Error::from_json("coreference overrides", e))?;
        Ok(CorefOverrides {
            overrides: file
                .overrides
                .into_iter()
                .map(|(step, token, antecedent_step, antecedent_lemma)| CorefOverride {
                    step,
                    token,
                    antecedent_step,
                    antecedent_lemma: antecedent_lemma.to_lowercase(),
                })
                .collect(),
        })
    }

    fn find(&self, step: u32, token: usize) -> Option<&CorefOverride> {
        self.overrides.iter().find(|o| o.step == step && o.token == token)
    }
}

pub fn load_coref_overrides(path: impl AsRef<Path>) -> Result<CorefOverrides> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CorefOverrides::from_json_str(&text)
}

fn check_override(o: &CorefOverride, num_steps: usize) -> Result<()> {
    let field = || format!("override for step {} token {}", o.step, o.token);
    if o.step == 0 || o.step as usize > num_steps {
        return Err(Error::validation(field(), format!("step outside 1..={num_steps}")));
    }
    if o.antecedent_step == 0 || o.antecedent_step >= o.step {
        return Err(Error::validation(field(), "antecedent must be an earlier step"));
    }
    if o.antecedent_lemma.is_empty() {
        return Err(Error::validation(field(), "empty antecedent lemma"));
    }
    Ok(())
}

/// Nearest compatible antecedent among `earlier`: `(step index, [(lemma, plural)])`.
fn heuristic_antecedent(earlier: &[ParsedStep], plural: bool) -> Option<(u32, Vec<(String, bool)>)> {
    for prev in earlier.iter().rev() {
        if plural {
            if !prev.primary_objects.is_empty() {
                let objs = prev
                    .primary_objects
                    .iter()
                    .map(|o| (o.clone(), prev.plural_objects.contains(o)))
                    .collect();
                return Some((prev.index, objs));
            }
        } else if let Some(o) = prev.primary_objects.iter().rev().find(|o| !prev.plural_objects.contains(*o)) {
            return Some((prev.index, vec![(o.clone(), false)]));
        }
    }
    None
}

/// Resolves pronoun objects in step order and records prerequisites.
///
/// Unresolvable pronouns are dropped and reported in `warnings`. Invalid
/// overrides are a validation error.
pub fn resolve_coreference(mut steps: Vec<ParsedStep>, overrides: Option<&CorefOverrides>) -> Result<ParsedRecipe> {
    for (i, s) in steps.iter().enumerate() {
        if s.index as usize != i + 1 {
            return Err(Error::validation("steps", format!("step at position {} has index {}", i + 1, s.index)));
        }
    }
    let empty = CorefOverrides::default();
    let overrides = overrides.unwrap_or(&empty);
    for o in &overrides.overrides {
        check_override(o, steps.len())?;
    }

    let mut warnings = Vec::new();
    for pos in 0..steps.len() {
        let (earlier, rest) = steps.split_at_mut(pos);
        let step = &mut rest[0];
        let pronouns = std::mem::take(&mut step.pronouns);

        for m in &pronouns {
            if let Some(o) = overrides.find(step.index, m.token) {
                let plural = earlier[o.antecedent_step as usize - 1].plural_objects.contains(&o.antecedent_lemma);
                step.add_primary(&o.antecedent_lemma, plural);
                step.prerequisites.insert(o.antecedent_step);
                continue;
            }
            match heuristic_antecedent(earlier, m.plural) {
                Some((from, objs)) => {
                    for (lemma, plural) in objs {
                        step.add_primary(&lemma, plural);
                    }
                    step.prerequisites.insert(from);
                }
                None => {
                    let msg = format!(
                        "step {}: no antecedent for pronoun {:?} (token {}); dropped",
                        step.index, m.lemma, m.token
                    );
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
            }
        }

        // Overrides on tokens the extractor did not flag still link the steps.
        let index = step.index;
        for o in overrides.overrides.iter().filter(|o| o.step == index) {
            if !pronouns.iter().any(|m| m.token == o.token) {
                let plural = earlier[o.antecedent_step as usize - 1].plural_objects.contains(&o.antecedent_lemma);
                step.add_primary(&o.antecedent_lemma, plural);
                step.prerequisites.insert(o.antecedent_step);
            }
        }
    }
    Ok(ParsedRecipe { steps, warnings })
}
