//! Recipe parsing: action verbs, primary and secondary objects per step,
//! pronoun resolution across steps, and the ordering prerequisites it induces.

mod conllu;
mod coref;

use std::collections::BTreeSet;

use serde::Serialize;

pub use conllu::{load_conllu, parse_conllu, write_conllu, RecipeStep, Token};
pub use coref::{load_coref_overrides, resolve_coreference, CorefOverride, CorefOverrides};

/// Dependency labels that drive extraction. Matching ignores relation
/// subtypes, so `nmod:into` matches `nmod`.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationLabels {
    pub direct_object: Vec<String>,
    pub conjunct: Vec<String>,
    pub nominal_modifier: Vec<String>,
    pub case_marker: Vec<String>,
    /// Older Stanford scheme: verb -prep-> preposition -pobj-> noun.
    pub preposition: Vec<String>,
    pub preposition_object: Vec<String>,
}

impl Default for RelationLabels {
    fn default() -> Self {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        RelationLabels {
            direct_object: v(&["dobj", "obj"]),
            conjunct: v(&["conj"]),
            nominal_modifier: v(&["nmod", "obl"]),
            case_marker: v(&["case"]),
            preposition: v(&["prep"]),
            preposition_object: v(&["pobj"]),
        }
    }
}

fn has(labels: &[String], rel: &str) -> bool {
    labels.iter().any(|l| l == rel)
}

const PRONOUNS: [&str; 3] = ["it", "them", "they"];

/// A pronoun found in direct-object position, waiting for an antecedent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PronounMention {
    pub token: usize,
    pub lemma: String,
    pub plural: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParsedStep {
    pub index: u32,
    pub text: String,
    pub actions: Vec<String>,
    pub primary_objects: Vec<String>,
    pub secondary_objects: Vec<String>,
    /// Earlier steps that must be aligned before this one.
    pub prerequisites: BTreeSet<u32>,
    /// Primary objects known to be grammatically plural.
    #[serde(skip)]
    pub plural_objects: BTreeSet<String>,
    #[serde(skip)]
    pub pronouns: Vec<PronounMention>,
    /// The step contains no verb at all.
    pub degenerate: bool,
}

impl ParsedStep {
    pub fn new(index: u32) -> Self {
        ParsedStep {
            index,
            text: String::new(),
            actions: Vec::new(),
            primary_objects: Vec::new(),
            secondary_objects: Vec::new(),
            prerequisites: BTreeSet::new(),
            plural_objects: BTreeSet::new(),
            pronouns: Vec::new(),
            degenerate: false,
        }
    }

    pub(crate) fn add_primary(&mut self, lemma: &str, plural: bool) {
        if !self.primary_objects.iter().any(|o| o == lemma) {
            self.primary_objects.push(lemma.to_string());
        }
        if plural {
            self.plural_objects.insert(lemma.to_string());
        }
        self.secondary_objects.retain(|o| o != lemma);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParsedRecipe {
    pub steps: Vec<ParsedStep>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ParsedRecipe {
    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn step(&self, index: u32) -> Option<&ParsedStep> {
        index.checked_sub(1).and_then(|i| self.steps.get(i as usize))
    }
}

fn push_unique(list: &mut Vec<String>, item: &str) {
    if !list.iter().any(|x| x == item) {
        list.push(item.to_string());
    }
}

/// Nouns conjoined (transitively) to `id`.
fn conjoined_nouns<'a>(step: &'a RecipeStep, id: usize, labels: &RelationLabels, out: &mut Vec<&'a Token>) {
    for child in step.children(id) {
        if has(&labels.conjunct, child.base_relation()) && child.is_noun() {
            out.push(child);
            conjoined_nouns(step, child.id, labels, out);
        }
    }
}

/// Extracts actions and objects from one dependency-parsed step.
///
/// Actions are the heads of direct-object relations, or the root verb when
/// the step has no direct object. Primary objects are direct-object nouns and
/// the nouns conjoined to them. Secondary objects are nouns attached to an
/// action through a prepositional nominal modifier. Pronoun objects are kept
/// aside for [`resolve_coreference`].
pub fn extract_pairs(step: &RecipeStep, labels: &RelationLabels) -> ParsedStep {
    let mut parsed = ParsedStep::new(step.index);
    parsed.text = step.text.clone();
    let mut action_ids: Vec<usize> = Vec::new();

    for tok in &step.tokens {
        if !has(&labels.direct_object, tok.base_relation()) || tok.head == 0 {
            continue;
        }
        let head = &step.tokens[tok.head - 1];
        if !action_ids.contains(&head.id) {
            action_ids.push(head.id);
        }
        if PRONOUNS.contains(&tok.lemma.as_str()) {
            parsed.pronouns.push(PronounMention {
                token: tok.id,
                lemma: tok.lemma.clone(),
                plural: tok.lemma != "it",
            });
            continue;
        }
        if tok.is_noun() {
            parsed.add_primary(&tok.lemma, tok.is_plural());
            let mut conj = Vec::new();
            conjoined_nouns(step, tok.id, labels, &mut conj);
            for c in conj {
                parsed.add_primary(&c.lemma, c.is_plural());
            }
        }
    }

    if action_ids.is_empty() {
        let verb = step
            .root()
            .filter(|r| r.is_verb())
            .or_else(|| step.tokens.iter().find(|t| t.is_verb()));
        match verb {
            Some(v) => action_ids.push(v.id),
            None => parsed.degenerate = true,
        }
    }
    for &id in &action_ids {
        push_unique(&mut parsed.actions, &step.tokens[id - 1].lemma);
    }

    let mut secondary: Vec<&Token> = Vec::new();
    for &id in &action_ids {
        for child in step.children(id) {
            let rel = child.base_relation();
            if has(&labels.nominal_modifier, rel) && child.is_noun() {
                let marked = child.deprel.contains(':')
                    || step.children(child.id).any(|c| has(&labels.case_marker, c.base_relation()));
                if marked {
                    secondary.push(child);
                    conjoined_nouns(step, child.id, labels, &mut secondary);
                }
            } else if has(&labels.preposition, rel) {
                for pobj in step.children(child.id) {
                    if has(&labels.preposition_object, pobj.base_relation()) && pobj.is_noun() {
                        secondary.push(pobj);
                        conjoined_nouns(step, pobj.id, labels, &mut secondary);
                    }
                }
            }
        }
    }
    for tok in secondary {
        if !parsed.primary_objects.contains(&tok.lemma) {
            push_unique(&mut parsed.secondary_objects, &tok.lemma);
        }
    }
    parsed
}

/// Full parse: extraction on every step followed by coreference resolution.
pub fn parse_recipe(
    steps: &[RecipeStep],
    labels: &RelationLabels,
    overrides: Option<&CorefOverrides>,
) -> crate::error::Result<ParsedRecipe> {
    let parsed = steps.iter().map(|s| extract_pairs(s, labels)).collect();
    resolve_coreference(parsed, overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(rows: &[(&str, &str, &str, usize, &str)]) -> RecipeStep {
        let text = rows.iter().map(|r| r.0).collect::<Vec<_>>().join(" ");
        let mut conllu = format!("# text = {text}\n");
        for (i, (form, lemma, pos, head, rel)) in rows.iter().enumerate() {
            conllu.push_str(&format!("{}\t{form}\t{lemma}\t{pos}\t_\t_\t{head}\t{rel}\t_\t_\n", i + 1));
        }
        parse_conllu(&conllu, "test").unwrap().remove(0)
    }

    #[test]
    fn verb_only_step() {
        let s = step(&[("Stir", "stir", "VERB", 0, "root"), (".", ".", "PUNCT", 1, "punct")]);
        let p = extract_pairs(&s, &RelationLabels::default());
        assert_eq!(p.actions, vec!["stir"]);
        assert!(p.primary_objects.is_empty() && p.secondary_objects.is_empty());
        assert!(!p.degenerate);
    }

    #[test]
    fn no_verb_is_degenerate() {
        let s = step(&[("Salt", "salt", "NOUN", 0, "root")]);
        let p = extract_pairs(&s, &RelationLabels::default());
        assert!(p.degenerate);
        assert!(p.actions.is_empty());
    }

    #[test]
    fn stanford_prep_pobj_scheme() {
        let s = step(&[
            ("Put", "put", "VERB", 0, "root"),
            ("eggs", "egg", "NOUN", 1, "dobj"),
            ("in", "in", "ADP", 1, "prep"),
            ("pan", "pan", "NOUN", 3, "pobj"),
        ]);
        let p = extract_pairs(&s, &RelationLabels::default());
        assert_eq!(p.primary_objects, vec!["egg"]);
        assert_eq!(p.secondary_objects, vec!["pan"]);
    }

    #[test]
    fn unmarked_obl_is_not_secondary() {
        // "Bake it today": obl without a case marker is not a prepositional modifier.
        let s = step(&[
            ("Bake", "bake", "VERB", 0, "root"),
            ("bread", "bread", "NOUN", 1, "obj"),
            ("today", "today", "NOUN", 1, "obl"),
        ]);
        let p = extract_pairs(&s, &RelationLabels::default());
        assert!(p.secondary_objects.is_empty());
    }

    #[test]
    fn object_never_in_both_lists() {
        let s = step(&[
            ("Mix", "mix", "VERB", 0, "root"),
            ("flour", "flour", "NOUN", 1, "obj"),
            ("with", "with", "ADP", 4, "case"),
            ("flour", "flour", "NOUN", 1, "obl"),
        ]);
        let p = extract_pairs(&s, &RelationLabels::default());
        assert_eq!(p.primary_objects, vec!["flour"]);
        assert!(p.secondary_objects.is_empty());
    }
}
