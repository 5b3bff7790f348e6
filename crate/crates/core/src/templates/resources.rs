use std::path::{Path, PathBuf};

use super::TemplateError;

/// Root of the bundled assets: `$DOCGEN_ASSETS` if set, else the crate's `assets/`.
pub fn assets_dir() -> PathBuf {
    match std::env::var_os("DOCGEN_ASSETS") {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("assets"),
    }
}

pub fn resolve_builtin(rel: &str) -> PathBuf {
    assets_dir().join(rel)
}

/// `builtin:x` resolves under the assets root, relative paths under `base`.
pub(crate) fn resolve_ref(reference: &str, base: &Path) -> PathBuf {
    if let Some(rel) = reference.strip_prefix("builtin:") {
        resolve_builtin(rel)
    } else {
        let p = Path::new(reference);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }
}

/// Text resources of one language.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    pub vocabulary: Vec<String>,
    pub sentences: Vec<String>,
    pub qa_pairs: Vec<(String, String)>,
}

fn read_lines(path: &Path, required: bool) -> Result<Vec<String>, TemplateError> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from).collect()),
        Err(_) if !required => Ok(Vec::new()),
        Err(_) => Err(TemplateError::UnresolvedResource { what: "corpus file".into(), path: path.to_path_buf() }),
    }
}

impl Corpus {
    /// Load `vocabulary.txt` (required, one token per line), `sentences.txt`
    /// and tab-separated `qa_pairs.txt` from a directory.
    pub fn load(dir: &Path) -> Result<Self, TemplateError> {
        let vocabulary = read_lines(&dir.join("vocabulary.txt"), true)?;
        if vocabulary.is_empty() {
            return Err(TemplateError::UnresolvedResource {
                what: "non-empty vocabulary".into(),
                path: dir.join("vocabulary.txt"),
            });
        }
        let sentences = read_lines(&dir.join("sentences.txt"), false)?;
        let qa_pairs = read_lines(&dir.join("qa_pairs.txt"), false)?
            .into_iter()
            .filter_map(|l| l.split_once('\t').map(|(q, a)| (q.trim().to_string(), a.trim().to_string())))
            .collect();
        Ok(Self { vocabulary, sentences, qa_pairs })
    }
}

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Raster images under `dir`, recursively, in sorted order.
pub fn list_images(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = walkdir::WalkDir::new(dir)
        .follow_links(true)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        })
        .collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_corpora_load() {
        for lang in ["en", "el"] {
            let c = Corpus::load(&resolve_builtin(&format!("corpus/{lang}"))).unwrap();
            assert!(c.vocabulary.len() > 50);
            assert!(!c.sentences.is_empty());
            assert!(!c.qa_pairs.is_empty());
        }
    }

    #[test]
    fn image_library_found() {
        assert!(list_images(&resolve_builtin("images")).len() >= 3);
    }

    #[test]
    fn refs_resolve() {
        assert_eq!(resolve_ref("a/b.toml", Path::new("/x")), PathBuf::from("/x/a/b.toml"));
        assert_eq!(resolve_ref("/abs", Path::new("/x")), PathBuf::from("/abs"));
        assert!(resolve_ref("builtin:fonts", Path::new("/x")).ends_with("assets/fonts"));
    }
}
