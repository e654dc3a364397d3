//! Minimal CoNLL-U reader and writer: one sentence per recipe step.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// 1-based position in the sentence.
    pub id: usize,
    pub form: String,
    /// Lowercased; falls back to the form when the LEMMA column is `_`.
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    /// 0 for the root.
    pub head: usize,
    pub deprel: String,
}

impl Token {
    /// Relation without its subtype (`nmod:into` -> `nmod`).
    pub fn base_relation(&self) -> &str {
        self.deprel.split(':').next().unwrap_or("")
    }

    pub fn is_noun(&self) -> bool {
        matches!(self.upos.as_str(), "NOUN" | "PROPN") || self.xpos.starts_with("NN")
    }

    pub fn is_verb(&self) -> bool {
        self.upos == "VERB" || self.xpos.starts_with("VB")
    }

    pub fn is_plural(&self) -> bool {
        self.feats.split('|').any(|f| f == "Number=Plur") || matches!(self.xpos.as_str(), "NNS" | "NNPS")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecipeStep {
    /// 1-based step number.
    pub index: u32,
    pub text: String,
    pub tokens: Vec<Token>,
}

impl RecipeStep {
    pub fn token(&self, id: usize) -> Option<&Token> {
        id.checked_sub(1).and_then(|i| self.tokens.get(i))
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = &Token> + '_ {
        self.tokens.iter().filter(move |t| t.head == id)
    }

    pub fn root(&self) -> Option<&Token> {
        self.tokens.iter().find(|t| t.head == 0)
    }

    /// Checks that heads form a single tree rooted at one token.
    pub fn validate_tree(&self) -> Result<()> {
        let n = self.tokens.len();
        let field = || format!("step {}", self.index);
        if n == 0 {
            return Err(Error::validation(field(), "sentence has no tokens"));
        }
        for t in &self.tokens {
            if t.head > n {
                return Err(Error::validation(field(), format!("token {} has head {} beyond sentence", t.id, t.head)));
            }
            if t.head == t.id {
                return Err(Error::validation(field(), format!("token {} is its own head", t.id)));
            }
        }
        let roots = self.tokens.iter().filter(|t| t.head == 0).count();
        if roots != 1 {
            return Err(Error::validation(field(), format!("expected exactly one root, found {roots}")));
        }
        for t in &self.tokens {
            let mut cur = t.head;
            let mut steps = 0;
            while cur != 0 {
                steps += 1;
                if steps > n {
                    return Err(Error::validation(field(), format!("head cycle through token {}", t.id)));
                }
                cur = self.tokens[cur - 1].head;
            }
        }
        Ok(())
    }
}

fn parse_token(line: &str, line_no: usize, expected_id: usize, ctx: &str) -> Result<Option<Token>> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 10 {
        return Err(Error::schema(ctx, line_no, 0, format!("expected 10 tab-separated columns, found {}", cols.len())));
    }
    // Multiword ranges (1-2) and empty nodes (1.1) do not take part in the basic tree.
    if cols[0].contains('-') || cols[0].contains('.') {
        return Ok(None);
    }
    let id: usize = cols[0]
        .parse()
        .map_err(|_| Error::schema(ctx, line_no, 1, format!("bad token id {:?}", cols[0])))?;
    if id != expected_id {
        return Err(Error::schema(ctx, line_no, 1, format!("token id {id} out of sequence, expected {expected_id}")));
    }
    let head: usize = cols[6]
        .parse()
        .map_err(|_| Error::schema(ctx, line_no, 7, format!("bad head {:?}", cols[6])))?;
    let form = cols[1].to_string();
    let lemma = if cols[2] == "_" { form.to_lowercase() } else { cols[2].to_lowercase() };
    Ok(Some(Token {
        id,
        form,
        lemma,
        upos: cols[3].to_string(),
        xpos: cols[4].to_string(),
        feats: cols[5].to_string(),
        head,
        deprel: cols[7].to_string(),
    }))
}

/// Parses CoNLL-U text; every sentence becomes one step, numbered in file order.
pub fn parse_conllu(text: &str, ctx: &str) -> Result<Vec<RecipeStep>> {
    let mut steps = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut sent_text: Option<String> = None;

    let mut flush = |tokens: &mut Vec<Token>, sent_text: &mut Option<String>| -> Result<()> {
        if tokens.is_empty() {
            *sent_text = None;
            return Ok(());
        }
        let toks = std::mem::take(tokens);
        let text = sent_text
            .take()
            .unwrap_or_else(|| toks.iter().map(|t| t.form.as_str()).collect::<Vec<_>>().join(" "));
        let step = RecipeStep {
            index: steps.len() as u32 + 1,
            text,
            tokens: toks,
        };
        step.validate_tree()?;
        steps.push(step);
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut tokens, &mut sent_text)?;
        } else if let Some(comment) = line.strip_prefix('#') {
            if let Some(t) = comment.trim_start().strip_prefix("text") {
                if let Some(t) = t.trim_start().strip_prefix('=') {
                    sent_text = Some(t.trim().to_string());
                }
            }
        } else if let Some(tok) = parse_token(line, line_no, tokens.len() + 1, ctx)? {
            tokens.push(tok);
        }
    }
    flush(&mut tokens, &mut sent_text)?;
    Ok(steps)
}

pub fn load_conllu(path: impl AsRef<Path>) -> Result<Vec<RecipeStep>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_conllu(&text, &path.display().to_string())
}

/// Serializes steps back to CoNLL-U with a `# text =` comment per sentence.
pub fn write_conllu(steps: &[RecipeStep]) -> String {
    let mut out = String::new();
    for step in steps {
        let _ = writeln!(out, "# sent_id = {}", step.index);
        let _ = writeln!(out, "# text = {}", step.text);
        for t in &step.tokens {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t_\t_",
                t.id, t.form, t.lemma, t.upos, t.xpos, t.feats, t.head, t.deprel
            );
        }
        out.push('\n');
    }
    out
}
