//! Stochastic templates: named bundles of hyperparameters for every network
//! node, page geometry, fonts, palettes and content resources.

mod file;
mod resources;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::{Fill, Rgb};
use crate::probnet::{dirichlet, categorical, DistributionSpec, Family, NodeParams, RngStream};
use crate::subnets::network::{self, Arity, TEMPLATE_NODE};

pub use file::{parse_template_str, template_to_toml};
pub use resources::{assets_dir, list_images, resolve_builtin, Corpus};

/// Field-level overrides keyed by node id.
pub type Overrides = BTreeMap<String, toml::Table>;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("missing hyperparameters for nodes: {}", .0.join(", "))]
    MissingNodeParams(Vec<String>),
    #[error("hyperparameters given for unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{node}` must use family {expected}, found {found}")]
    FamilyMismatch { node: String, expected: Family, found: Family },
    #[error("node `{node}`: {reason}")]
    InvalidParam { node: String, reason: String },
    #[error("unknown override key `{0}`")]
    UnknownOverrideKey(String),
    #[error("unresolved {what}: {path}")]
    UnresolvedResource { what: String, path: PathBuf },
    #[error("invalid page geometry: {0}")]
    InvalidPage(String),
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),
    #[error("include cycle through {0}")]
    IncludeCycle(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageSpec {
    pub width: u32,
    pub height: u32,
    pub dpi: u32,
}

impl Default for PageSpec {
    fn default() -> Self {
        Self { width: 1240, height: 1754, dpi: 150 }
    }
}

impl PageSpec {
    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.width == 0 || self.height == 0 {
            return Err(TemplateError::InvalidPage(format!("{}x{} px", self.width, self.height)));
        }
        if !(50..=600).contains(&self.dpi) {
            return Err(TemplateError::InvalidPage(format!("dpi {} outside [50, 600]", self.dpi)));
        }
        Ok(())
    }

    /// Pixels per typographic point.
    pub fn px_per_pt(&self) -> f64 {
        f64::from(self.dpi) / 72.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceRefs {
    /// Directory holding `vocabulary.txt`, `sentences.txt` and `qa_pairs.txt`.
    pub corpus: PathBuf,
    /// Directory of natural images, searched recursively.
    pub images: PathBuf,
    #[serde(default)]
    pub watermark_texts: Vec<String>,
}

/// One font family; missing styles are synthesized from the regular face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FontFace {
    pub name: String,
    pub regular: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bold: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub italic: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bold_italic: Option<PathBuf>,
}

impl FontFace {
    pub fn paths(&self) -> impl Iterator<Item = &PathBuf> {
        std::iter::once(&self.regular)
            .chain(self.bold.iter())
            .chain(self.italic.iter())
            .chain(self.bold_italic.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Palette {
    pub background: Vec<Rgb>,
    pub text: Vec<Rgb>,
    pub accent: Vec<Rgb>,
    pub fill: Vec<Fill>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemplateSpec {
    pub template_id: String,
    pub display_name: String,
    pub page: PageSpec,
    pub resources: ResourceRefs,
    pub fonts: Vec<FontFace>,
    pub palette: Palette,
    pub params: NodeParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemplateMixture {
    pub alpha: Vec<f64>,
    pub templates: Vec<TemplateSpec>,
}

impl TemplateMixture {
    pub fn single(template: TemplateSpec) -> Self {
        Self { alpha: vec![1.0], templates: vec![template] }
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        if self.templates.is_empty() {
            return Err(TemplateError::InvalidMixture("no templates".into()));
        }
        if self.alpha.len() != self.templates.len() {
            return Err(TemplateError::InvalidMixture(format!(
                "{} concentrations for {} templates",
                self.alpha.len(),
                self.templates.len()
            )));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(TemplateError::InvalidMixture(format!("concentration {a} must be positive")));
        }
        Ok(())
    }
}

/// Draw the mixture weights, then a template index from them.
pub fn choose_template(mixture: &TemplateMixture, rng: &mut RngStream) -> (usize, Vec<f64>) {
    let probs = dirichlet(rng, &mixture.alpha);
    let index = categorical(rng, &probs);
    (index, probs)
}

impl TemplateSpec {
    /// Number of categories a Dirichlet node must have, if fixed by the template.
    pub fn arity_dim(&self, arity: Arity, vocabulary: Option<usize>) -> Option<usize> {
        match arity {
            Arity::Fixed(n) => Some(n),
            Arity::Vocabulary => vocabulary,
            Arity::Fonts => Some(self.fonts.len()),
            Arity::BackgroundPalette => Some(self.palette.background.len()),
            Arity::TextPalette => Some(self.palette.text.len()),
            Arity::AccentPalette => Some(self.palette.accent.len()),
            Arity::FillPalette => Some(self.palette.fill.len()),
            Arity::WatermarkTexts => Some(self.resources.watermark_texts.len()),
            Arity::Dynamic => None,
        }
    }

    /// Check parameters against the document network: coverage, families,
    /// hyperparameter validity and categorical dimensions.
    pub fn validate_params(&self, vocabulary: Option<usize>) -> Result<(), TemplateError> {
        self.page.validate()?;
        for id in self.params.keys() {
            if network::declaration(id).is_none_or(|d| d.id == TEMPLATE_NODE) {
                return Err(TemplateError::UnknownNode(id.clone()));
            }
        }
        let missing: Vec<String> = network::declarations()
            .iter()
            .filter(|d| d.id != TEMPLATE_NODE && !self.params.contains_key(&d.id))
            .map(|d| d.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(TemplateError::MissingNodeParams(missing));
        }
        for decl in network::declarations().iter().filter(|d| d.id != TEMPLATE_NODE) {
            let spec = &self.params[&decl.id];
            if spec.family() != decl.family {
                return Err(TemplateError::FamilyMismatch {
                    node: decl.id.clone(),
                    expected: decl.family,
                    found: spec.family(),
                });
            }
            spec.validate().map_err(|f| TemplateError::InvalidParam {
                node: decl.id.clone(),
                reason: format!("{}: {}", f.field, f.reason),
            })?;
            if let (Some(arity), DistributionSpec::DirichletCategorical { alpha }) = (decl.arity, spec) {
                let expected = self.arity_dim(arity, vocabulary);
                match (expected, alpha.dim()) {
                    (Some(0), _) => {
                        return Err(TemplateError::InvalidParam {
                            node: decl.id.clone(),
                            reason: "the resource list it selects from is empty".into(),
                        })
                    }
                    (Some(e), Some(found)) if e != found => {
                        return Err(TemplateError::InvalidParam {
                            node: decl.id.clone(),
                            reason: format!("expected {e} concentrations, found {found}"),
                        })
                    }
                    (None, Some(_)) if arity == Arity::Dynamic => {
                        return Err(TemplateError::InvalidParam {
                            node: decl.id.clone(),
                            reason: "dimension varies per draw; give a symmetric concentration".into(),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Check that every referenced file or directory exists.
    pub fn check_resources(&self) -> Result<(), TemplateError> {
        let need = |what: &str, path: &Path, dir: bool| {
            let ok = if dir { path.is_dir() } else { path.is_file() };
            if ok {
                Ok(())
            } else {
                Err(TemplateError::UnresolvedResource { what: what.into(), path: path.to_path_buf() })
            }
        };
        need("corpus directory", &self.resources.corpus, true)?;
        need("vocabulary", &self.resources.corpus.join("vocabulary.txt"), false)?;
        need("image library", &self.resources.images, true)?;
        if self.fonts.is_empty() {
            return Err(TemplateError::UnresolvedResource { what: "font list".into(), path: PathBuf::new() });
        }
        for face in &self.fonts {
            for p in face.paths() {
                need(&format!("font `{}`", face.name), p, false)?;
            }
        }
        Ok(())
    }
}

const FAMILY_FIELDS: &[(Family, &[&str])] = &[
    (Family::DirichletCategorical, &["alpha"]),
    (Family::BetaBernoulli, &["a", "b"]),
    (Family::NormalInvGamma, &["prior_mean", "prior_var", "var_shape", "var_scale", "min", "max"]),
    (Family::ShiftedExponential, &["location", "shape", "scale", "max"]),
    (Family::Poisson, &["rate", "min", "max"]),
    (Family::TruncatedCauchy, &["location", "scale", "min", "max"]),
    (Family::UniformContinuous, &["min", "max"]),
    (Family::UniformDiscrete, &["min", "max"]),
];

fn family_fields(family: Family) -> &'static [&'static str] {
    FAMILY_FIELDS.iter().find(|(f, _)| *f == family).map(|(_, v)| *v).unwrap_or(&[])
}

/// Replace individual hyperparameter fields of a template.
pub fn apply_preset_overrides(base: &TemplateSpec, overrides: &Overrides) -> Result<TemplateSpec, TemplateError> {
    let mut out = base.clone();
    for (node, fields) in overrides {
        let spec = base.params.get(node).ok_or_else(|| TemplateError::UnknownOverrideKey(node.clone()))?;
        let allowed = family_fields(spec.family());
        let mut table = match toml::Value::try_from(spec) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("distribution specs serialize to tables"),
        };
        for (field, value) in fields {
            if !allowed.contains(&field.as_str()) {
                return Err(TemplateError::UnknownOverrideKey(format!("{node}.{field}")));
            }
            table.insert(field.clone(), value.clone());
        }
        let updated: DistributionSpec = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| TemplateError::InvalidParam { node: node.clone(), reason: e.message().to_string() })?;
        updated
            .validate()
            .map_err(|f| TemplateError::InvalidParam { node: node.clone(), reason: format!("{}: {}", f.field, f.reason) })?;
        out.params.insert(node.clone(), updated);
    }
    Ok(out)
}

/// Load a template or a mixture file, optionally layering a language pack
/// over every template.
pub fn load_mixture_with(path: &Path, lang: Option<&str>) -> Result<TemplateMixture, TemplateError> {
    let path = resolve_template_path(path)?;
    let lang_path = match lang {
        Some(l) if !l.is_empty() && l != "en" => Some(resolve_lang_path(l)?),
        _ => None,
    };
    let mixture = file::load_mixture_file(&path, lang_path.as_deref())?;
    mixture.validate()?;
    for t in &mixture.templates {
        t.check_resources()?;
        let corpus = Corpus::load(&t.resources.corpus)?;
        t.validate_params(Some(corpus.vocabulary.len()))?;
    }
    Ok(mixture)
}

pub fn load_mixture(path: &Path) -> Result<TemplateMixture, TemplateError> {
    load_mixture_with(path, None)
}

/// Resolve a template argument: an existing file, or the stem of a bundled preset.
pub fn resolve_template_path(arg: &Path) -> Result<PathBuf, TemplateError> {
    if arg.is_file() {
        return Ok(arg.to_path_buf());
    }
    let text = arg.to_string_lossy();
    let name = text.strip_prefix("builtin:").unwrap_or(&text);
    let stem = Path::new(name).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let candidate = assets_dir().join("templates").join(format!("{stem}.toml"));
    if candidate.is_file() {
        Ok(candidate)
    } else {
        Err(TemplateError::UnresolvedResource { what: "template".into(), path: arg.to_path_buf() })
    }
}

fn resolve_lang_path(lang: &str) -> Result<PathBuf, TemplateError> {
    let p = Path::new(lang);
    if p.is_file() {
        return Ok(p.to_path_buf());
    }
    let candidate = assets_dir().join("lang").join(format!("{lang}.toml"));
    if candidate.is_file() {
        Ok(candidate)
    } else {
        Err(TemplateError::UnresolvedResource { what: "language pack".into(), path: p.to_path_buf() })
    }
}

/// Names of the bundled presets.
pub const PRESETS: [&str; 3] = ["scientific", "resume", "forms"];
