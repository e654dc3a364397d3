//! Pretrained word vectors in the plain text format
//! (`[<count> <dim>]` header, then `token v1 ... vd` per line).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// What a phrase with no in-vocabulary token maps to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovPolicy {
    /// No vector; contributes no similarity.
    #[default]
    Neutral,
    /// The mean of all stored vectors.
    AverageOfKnown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dimension: usize,
    table: HashMap<String, Vec<f64>>,
    pub oov_policy: OovPolicy,
    pub warnings: Vec<String>,
}

impl EmbeddingStore {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Argument("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingStore {
            dimension,
            table: HashMap::new(),
            oov_policy: OovPolicy::Neutral,
            warnings: Vec::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Inserts a vector; returns the previous one if the token was present.
    pub fn insert(&mut self, token: &str, vector: Vec<f64>) -> Result<Option<Vec<f64>>> {
        if vector.len() != self.dimension {
            return Err(Error::Argument(format!(
                "vector for {token:?} has dimension {}, store has {}",
                vector.len(),
                self.dimension
            )));
        }
        Ok(self.table.insert(token.to_lowercase(), vector))
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.table.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let ctx = "embeddings";
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).peekable();

        let mut declared: Option<(usize, usize)> = None;
        if let Some((_, first)) = lines.peek() {
            let fields: Vec<&str> = first.split_whitespace().collect();
            if let [a, b] = fields.as_slice() {
                if let (Ok(count), Ok(dim)) = (a.parse::<usize>(), b.parse::<usize>()) {
                    declared = Some((count, dim));
                    lines.next();
                }
            }
        }

        let mut store: Option<EmbeddingStore> = None;
        let mut rows = 0usize;
        for (i, line) in lines {
            let line_no = i + 1;
            let mut fields = line.split_whitespace();
            let token = fields.next().expect("non-blank line has a field");
            let vector = fields
                .enumerate()
                .map(|(j, f)| {
                    f.parse::<f64>()
                        .map_err(|e| Error::schema(ctx, line_no, j + 2, format!("{f:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if let Some(v) = vector.iter().find(|v| !v.is_finite()) {
                return Err(Error::schema(ctx, line_no, 0, format!("non-finite component {v}")));
            }
            let dim = declared.map_or(vector.len(), |(_, d)| d);
            let s = match &mut store {
                Some(s) => s,
                None => store.insert(
                    EmbeddingStore::new(dim).map_err(|_| Error::schema(ctx, line_no, 0, "empty vector"))?,
                ),
            };
            if vector.len() != s.dimension {
                return Err(Error::schema(
                    ctx,
                    line_no,
                    0,
                    format!("vector has dimension {}, expected {}", vector.len(), s.dimension),
                ));
            }
            if s.insert(token, vector)?.is_some() {
                let msg = format!("line {line_no}: duplicate token {token:?}; keeping the last vector");
                log::warn!("{msg}");
                s.warnings.push(msg);
            }
            rows += 1;
        }

        let mut store = match (store, declared) {
            (Some(s), _) => s,
            (None, Some((_, dim))) => EmbeddingStore::new(dim)?,
            (None, None) => return Err(Error::schema(ctx, 1, 0, "no vectors")),
        };
        if let Some((count, _)) = declared {
            if count != rows {
                let msg = format!("header declares {count} vectors, found {rows}");
                log::warn!("{msg}");
                store.warnings.push(msg);
            }
        }
        Ok(store)
    }

    /// Text form with a header line; tokens are written in sorted order.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.table.len(), self.dimension);
        let mut tokens: Vec<&String> = self.table.keys().collect();
        tokens.sort();
        for t in tokens {
            out.push_str(t);
            for v in &self.table[t] {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    fn mean_of_known(&self) -> Option<Vec<f64>> {
        if self.table.is_empty() {
            return None;
        }
        let mut acc = vec![0.0; self.dimension];
        for v in self.table.values() {
            acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
        }
        let n = self.table.len() as f64;
        Some(acc.into_iter().map(|a| a / n).collect())
    }

    /// Mean vector of the phrase's in-vocabulary tokens. Tokens are split on
    /// whitespace and underscores and lowercased.
    pub fn phrase_vector(&self, phrase: &str) -> Option<Vec<f64>> {
        let mut acc = vec![0.0; self.dimension];
        let mut hits = 0usize;
        for tok in phrase.split(|c: char| c == '_' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            if let Some(v) = self.get(tok) {
                acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
                hits += 1;
            }
        }
        if hits == 0 {
            return match self.oov_policy {
                OovPolicy::Neutral => None,
                OovPolicy::AverageOfKnown => self.mean_of_known(),
            };
        }
        let n = hits as f64;
        Some(acc.into_iter().map(|a| a / n).collect())
    }

    /// Euclidean distance between the two phrase vectors.
    pub fn word_distance(&self, a: &str, b: &str) -> Option<f64> {
        let va = self.phrase_vector(a)?;
        let vb = self.phrase_vector(b)?;
        Some(va.iter().zip(&vb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
    }
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingStore> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    EmbeddingStore::from_text(&text).map_err(|e| match e {
        Error::Schema { line, column, message, .. } => Error::schema(path.display().to_string(), line, column, message),
        other => other,
    })
}

pub fn save_embeddings(store: &EmbeddingStore, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, store.to_text()).map_err(|e| Error::io(path, e))
}

/// Maps a distance to a similarity in (0, 1] via `1 / (1 + d)`; no distance means 0.
pub fn similarity(distance: Option<f64>) -> f64 {
    match distance {
        Some(d) => 1.0 / (1.0 + d),
        None => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = "5 3\ncup 1 0 0\nmug 0 1 0\ncutting 0 0 1\nboard 1 1 0\npour 0.5 0.5 0.5\n";

    #[test]
    fn loads_fixture() {
        let s = EmbeddingStore::from_text(FIXTURE).unwrap();
        assert_eq!(s.dimension(), 3);
        assert_eq!(s.len(), 5);
        assert_eq!(s.get("pour").unwrap(), &[0.5, 0.5, 0.5]);
    }

    #[test]
    fn headerless_file() {
        let s = EmbeddingStore::from_text("a 1 2\nb 3 4\n").unwrap();
        assert_eq!(s.dimension(), 2);
    }

    #[test]
    fn mixed_dimensions_rejected() {
        assert!(matches!(
            EmbeddingStore::from_text("a 1 2 3\nb 1 2 3 4\n"),
            Err(Error::Schema { line: 2, .. })
        ));
        assert!(EmbeddingStore::from_text("2 3\na 1 2\n").is_err());
    }

    #[test]
    fn duplicate_last_wins() {
        let s = EmbeddingStore::from_text("a 1 2\nA 3 4\n").unwrap();
        assert_eq!(s.get("a").unwrap(), &[3.0, 4.0]);
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn phrase_mean() {
        let s = EmbeddingStore::from_text(FIXTURE).unwrap();
        assert_eq!(s.phrase_vector("cutting_board").unwrap(), vec![0.5, 0.5, 0.5]);
        assert_eq!(s.phrase_vector("cutting board"), s.phrase_vector("cutting_board"));
        assert_eq!(s.phrase_vector("cup knife").unwrap(), vec![1.0, 0.0, 0.0]);
        assert_eq!(s.phrase_vector("knife"), None);
    }

    #[test]
    fn average_of_known_policy() {
        let mut s = EmbeddingStore::from_text("a 1 0\nb 0 1\n").unwrap();
        s.oov_policy = OovPolicy::AverageOfKnown;
        assert_eq!(s.phrase_vector("zzz").unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn distances() {
        let s = EmbeddingStore::from_text(FIXTURE).unwrap();
        assert_eq!(s.word_distance("cup", "cup"), Some(0.0));
        assert_eq!(s.word_distance("cup", "mug"), Some(2f64.sqrt()));
        assert_eq!(s.word_distance("cup", "knife"), None);
    }

    #[test]
    fn similarity_map() {
        assert_eq!(similarity(Some(0.0)), 1.0);
        assert_eq!(similarity(None), 0.0);
        let grid: Vec<f64> = (0..200).map(|i| similarity(Some(i as f64 * 0.5))).collect();
        assert!(grid.windows(2).all(|w| w[1] < w[0]));
        assert!(similarity(Some(1e12)) < 1e-11);
    }

    #[test]
    fn text_round_trip() {
        let s = EmbeddingStore::from_text(FIXTURE).unwrap();
        let again = EmbeddingStore::from_text(&s.to_text()).unwrap();
        assert_eq!(s, again);
    }
}
