//! Run manifests: the recipe, embeddings and videos of one experiment.
//!
//! Relative paths inside a manifest are resolved against the manifest's
//! own directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub recipe: PathBuf,
    pub embeddings: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coref: Option<PathBuf>,
    pub videos: Vec<ManifestVideo>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestVideo {
    pub trace: PathBuf,
    /// Proposal list for this video; written by `propose`, read by `align`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<PathBuf>,
}

impl RunManifest {
    /// Rewrites every relative path to be relative to `base`.
    pub fn resolve(mut self, base: &Path) -> Self {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.recipe);
        fix(&mut self.embeddings);
        if let Some(c) = self.coref.as_mut() {
            fix(c);
        }
        fix(&mut self.out_dir);
        for v in &mut self.videos {
            fix(&mut v.trace);
            if let Some(s) = v.segments.as_mut() {
                fix(s);
            }
        }
        self
    }

    /// Checks that every input file exists.
    pub fn check_inputs(&self) -> Result<()> {
        let mut inputs = vec![&self.recipe, &self.embeddings];
        inputs.extend(self.coref.iter());
        inputs.extend(self.videos.iter().map(|v| &v.trace));
        for p in inputs {
            if !p.is_file() {
                return Err(Error::io(p, std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found")));
            }
        }
        Ok(())
    }
}

/// Loads a manifest and resolves its paths against the manifest directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<RunManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::from_json(path.display().to_string(), e))?;
    Ok(manifest.resolve(path.parent().unwrap_or(Path::new("."))))
}

/// Cross-validation fold of a video: 64-bit FNV-1a of the id, modulo `folds`.
pub fn fold_of(video_id: &str, folds: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in video_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h % folds.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        // FNV-1a 64 of "" and "a".
        assert_eq!(fold_of("", u64::MAX), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fold_of("a", u64::MAX), 0xaf63_dc4c_8601_ec8c);
        assert!(fold_of("video7", 5) < 5);
    }

    #[test]
    fn relative_paths_resolve_against_manifest_dir() {
        let m: RunManifest = serde_json::from_str(
            r#"{"recipe":"r.conllu","embeddings":"/abs/e.txt","videos":[{"trace":"t/a.json"}],"out_dir":"out"}"#,
        )
        .unwrap();
        let m = m.resolve(Path::new("/data/run"));
        assert_eq!(m.recipe, Path::new("/data/run/r.conllu"));
        assert_eq!(m.embeddings, Path::new("/abs/e.txt"));
        assert_eq!(m.videos[0].trace, Path::new("/data/run/t/a.json"));
    }
}
