//! End-to-end document generation and dataset writing.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::annotate::{
    coco_categories, element_counts, export_coco, ingest_coco, AnnotateError, Category, CocoDataset,
    DatasetManifest, DocumentAnnotations, ManifestEntry, MANIFEST_SCHEMA_VERSION,
};
use crate::color::Rgb;
use crate::defects::apply_defects;
use crate::fonts::{FontBook, FontError};
use crate::layout::{compose, ComposedDocument, LayoutError, LayoutResources, PageGeometry};
use crate::probnet::{parse_observations, posterior_infer, ObservationSet, RngStream};
use crate::render::{page_file_name, render, render_with_audit, ImageCache, InkAudit, PageFormat, RasterPage, RenderError};
use crate::subnets::{network::network, DocumentPlan, ElementPlan, PlanSampler, SubnetError};
use crate::templates::{load_mixture_with, TemplateError, TemplateMixture, TemplateSpec};

pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const ANNOTATION_FILE: &str = "annotations.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const IMAGE_DIR: &str = "images";
pub const PLAN_DIR: &str = "plans";

/// Stream index under a document's defect stream used while applying defects.
const DEFECT_APPLY: u64 = u64::MAX;
const DEFECT_STREAM: u64 = 8;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Subnet(#[from] SubnetError),
    #[error(transparent)]
    Font(#[from] FontError),
    #[error("document {doc}: {source}")]
    Layout { doc: u64, source: LayoutError },
    #[error("document {doc}: {source}")]
    Render { doc: u64, source: RenderError },
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("verification failed: {0}")]
    Verify(String),
    #[error("no dataset manifest at {0}")]
    MissingManifest(PathBuf),
}

/// Leading variant name of a `Debug` rendering, unwrapping transparent wrappers.
fn variant_name(e: &dyn Debug) -> String {
    let text = format!("{e:?}");
    let mut rest = text.as_str();
    loop {
        let end = rest.find(|c: char| !c.is_alphanumeric() && c != '_').unwrap_or(rest.len());
        let name = &rest[..end];
        if matches!(name, "Prob" | "Template" | "Subnet" | "Font") && rest[end..].starts_with('(') {
            rest = &rest[end + 1..];
            continue;
        }
        return name.to_string();
    }
}

impl GenerateError {
    /// Machine-readable error code.
    pub fn code(&self) -> String {
        match self {
            GenerateError::Template(e) => variant_name(e),
            GenerateError::Subnet(e) => variant_name(e),
            GenerateError::Font(e) => variant_name(e),
            GenerateError::Layout { source, .. } => variant_name(source),
            GenerateError::Render { source, .. } => variant_name(source),
            GenerateError::Annotate(e) => variant_name(e),
            GenerateError::Io { .. } => "IoError".into(),
            GenerateError::Verify(_) => "VerificationFailed".into(),
            GenerateError::MissingManifest(_) => "MissingManifest".into(),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> GenerateError + '_ {
    move |source| GenerateError::Io { path: path.to_path_buf(), source }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorOptions {
    /// Render resolution; `None` keeps each template's own.
    pub dpi: Option<u32>,
    pub defects: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self { dpi: None, defects: true }
    }
}

/// A fully produced document.
#[derive(Clone, Debug)]
pub struct GeneratedDocument {
    pub plan: DocumentPlan,
    pub composed: ComposedDocument,
    pub pages: Vec<RasterPage>,
}

/// Loaded templates, fonts and images, shared by all document workers.
#[derive(Debug)]
pub struct Generator {
    sampler: PlanSampler,
    fonts: Vec<FontBook>,
    chart_colors: Vec<Vec<Rgb>>,
    images: ImageCache,
    options: GeneratorOptions,
}

impl Generator {
    pub fn from_mixture(mixture: TemplateMixture, options: GeneratorOptions) -> Result<Self, GenerateError> {
        let fonts = mixture.templates.iter().map(|t| FontBook::load(&t.fonts)).collect::<Result<Vec<_>, _>>()?;
        let chart_colors = mixture
            .templates
            .iter()
            .map(|t| t.palette.accent.iter().chain(&t.palette.text).copied().collect())
            .collect();
        let sampler = PlanSampler::new(mixture)?;
        Ok(Self { sampler, fonts, chart_colors, images: ImageCache::default(), options })
    }

    /// Load a template or mixture file, or a bundled preset by name.
    pub fn load(template: &Path, lang: Option<&str>, options: GeneratorOptions) -> Result<Self, GenerateError> {
        Self::from_mixture(load_mixture_with(template, lang)?, options)
    }

    pub fn options(&self) -> GeneratorOptions {
        self.options
    }

    pub fn sampler(&self) -> &PlanSampler {
        &self.sampler
    }

    pub fn fonts(&self, template_index: usize) -> &FontBook {
        &self.fonts[template_index]
    }

    pub fn geometry(&self, template_index: usize) -> PageGeometry {
        PageGeometry::from_spec(&self.sampler.template(template_index).page, self.options.dpi)
    }

    pub fn plan(&self, doc: u64, seed: u64) -> Result<DocumentPlan, GenerateError> {
        Ok(self.sampler.sample_document_plan(doc, seed)?)
    }

    pub fn compose(&self, plan: &DocumentPlan) -> Result<ComposedDocument, GenerateError> {
        let t = plan.template_index;
        let assets = self.sampler.assets(t);
        let res = LayoutResources {
            fonts: &self.fonts[t],
            corpus: &assets.corpus,
            images_root: &assets.images_root,
            chart_colors: &self.chart_colors[t],
        };
        compose(plan, &self.geometry(t), &res).map_err(|source| GenerateError::Layout { doc: plan.doc_index, source })
    }

    fn degrade(&self, plan: &DocumentPlan, pages: &mut [RasterPage]) {
        if self.options.defects && !plan.defects.is_empty() {
            let mut rng = RngStream::at(plan.seed, &[plan.doc_index, DEFECT_STREAM, DEFECT_APPLY]);
            apply_defects(pages, &plan.defects, &self.fonts[plan.template_index], plan.shared_style.font_index, &mut rng);
        }
    }

    pub fn render(&self, plan: &DocumentPlan, composed: &ComposedDocument) -> Result<Vec<RasterPage>, GenerateError> {
        let mut pages = render(composed, &self.fonts[plan.template_index], &self.images)
            .map_err(|source| GenerateError::Render { doc: plan.doc_index, source })?;
        self.degrade(plan, &mut pages);
        Ok(pages)
    }

    /// Render with a per-element ink audit taken before defects are applied.
    pub fn render_audited(
        &self,
        plan: &DocumentPlan,
        composed: &ComposedDocument,
    ) -> Result<(Vec<RasterPage>, InkAudit), GenerateError> {
        let (mut pages, audit) = render_with_audit(composed, &self.fonts[plan.template_index], &self.images)
            .map_err(|source| GenerateError::Render { doc: plan.doc_index, source })?;
        self.degrade(plan, &mut pages);
        Ok((pages, audit))
    }

    pub fn generate(&self, doc: u64, seed: u64) -> Result<GeneratedDocument, GenerateError> {
        let plan = self.plan(doc, seed)?;
        let composed = self.compose(&plan)?;
        let pages = self.render(&plan, &composed)?;
        Ok(GeneratedDocument { plan, composed, pages })
    }
}

/// Settings of a dataset run.
#[derive(Clone, Debug)]
pub struct DatasetConfig {
    pub out: PathBuf,
    pub count: u64,
    pub seed: u64,
    pub workers: usize,
    pub format: PageFormat,
    pub emit_plans: bool,
    /// Sample plans only: no layout, images or annotation file.
    pub plan_only: bool,
    /// Template argument as given, recorded in the manifest.
    pub template: String,
    pub progress: bool,
}

struct DocOutput {
    entry: ManifestEntry,
    annotations: Option<DocumentAnnotations>,
    files: Vec<(String, Vec<u8>)>,
}

/// Distinct planned elements per category, for runs without layout. Page
/// count is unknown before layout, so each planned header or footer band
/// counts once.
pub fn plan_counts(plan: &DocumentPlan) -> BTreeMap<String, usize> {
    let mut counts: BTreeMap<String, usize> = Category::ALL.iter().map(|c| (c.name().to_string(), 0)).collect();
    let mut add = |c: Category, n: usize| *counts.get_mut(c.name()).expect("listed") += n;
    add(Category::Title, usize::from(plan.title.is_some()));
    add(Category::HeaderFooter, usize::from(plan.header.is_some()) + usize::from(plan.footer.is_some()));
    for e in &plan.body {
        match e {
            ElementPlan::Section(_) => add(Category::Section, 1),
            ElementPlan::Paragraph(_) => add(Category::Paragraph, 1),
            ElementPlan::Bullet(_) => add(Category::Bullet, 1),
            ElementPlan::Equation(_) => add(Category::Equation, 1),
            ElementPlan::Figure(f) => {
                add(Category::Figure, 1);
                add(Category::Caption, usize::from(f.caption.is_some()));
            }
            ElementPlan::Table(t) => {
                add(Category::Table, 1);
                add(Category::TableCell, t.cells.iter().map(Vec::len).sum());
                add(Category::Caption, usize::from(t.caption.is_some()));
            }
        }
    }
    counts.retain(|_, n| *n > 0);
    counts
}

/// Selected plan variables, for histograms.
pub fn plan_variables(plan: &DocumentPlan) -> BTreeMap<String, Vec<f64>> {
    let mut v: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut put = |k: &str, x: f64| v.entry(k.to_string()).or_default().push(x);
    put("font_size", plan.shared_style.font_size);
    put("columns", plan.columns as f64);
    put("margin", plan.margin);
    put("element_count", plan.body.len() as f64);
    put("text_color_luma", plan.shared_style.text_color.luma());
    let sections = plan.title.iter().chain(plan.body.iter().filter_map(|e| match e {
        ElementPlan::Section(s) => Some(s),
        _ => None,
    }));
    for s in sections {
        s.words_per_line.iter().for_each(|&w| put("words_per_line", w as f64));
        put("font_style", s.style.font_style.index() as f64);
        put("alignment", s.style.align.index() as f64);
    }
    for e in &plan.body {
        if let ElementPlan::Table(t) = e {
            put("table_rows", t.rows as f64);
            put("table_cols", t.cols as f64);
            put("table_h_pad", t.h_pad);
            put("table_v_pad", t.v_pad);
        }
    }
    v
}

fn produce(gen: &Generator, doc: u64, cfg: &DatasetConfig) -> Result<DocOutput, GenerateError> {
    let plan = gen.plan(doc, cfg.seed)?;
    let mut files = Vec::new();
    let plan_file = (cfg.emit_plans || cfg.plan_only).then(|| format!("{PLAN_DIR}/{doc}.json"));
    if let Some(f) = &plan_file {
        files.push((f.clone(), plan.to_json().into_bytes()));
    }
    let mut entry = ManifestEntry {
        doc_id: doc,
        template_id: plan.template_id.clone(),
        seed: cfg.seed,
        pages: vec![],
        annotation_counts: plan_counts(&plan),
        plan_file,
        plan_variables: plan_variables(&plan),
        forced_breaks: 0,
    };
    if cfg.plan_only {
        return Ok(DocOutput { entry, annotations: None, files });
    }
    let composed = gen.compose(&plan)?;
    let pages = gen.render(&plan, &composed)?;
    for (i, page) in pages.iter().enumerate() {
        let name = page_file_name(doc, i, cfg.format);
        let bytes = page.encode(cfg.format).map_err(|source| GenerateError::Render { doc, source })?;
        files.push((format!("{IMAGE_DIR}/{name}"), bytes));
        entry.pages.push(name);
    }
    entry.annotation_counts = element_counts(&composed.elements);
    entry.forced_breaks = composed.forced_breaks;
    let annotations = DocumentAnnotations {
        doc_id: doc,
        width: composed.geometry.width,
        height: composed.geometry.height,
        pages: entry.pages.clone(),
        elements: composed.elements,
    };
    Ok(DocOutput { entry, annotations: Some(annotations), files })
}

fn write_verified(root: &Path, rel: &str, bytes: &[u8]) -> Result<(), GenerateError> {
    let path = root.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(&path, bytes).map_err(io_err(&path))?;
    let back = fs::read(&path).map_err(io_err(&path))?;
    if back != bytes {
        return Err(GenerateError::Verify(format!("{} reads back differently", path.display())));
    }
    Ok(())
}

/// Generate `cfg.count` documents into `cfg.out`. Documents are produced by a
/// fixed pool of workers and written in id order by this thread alone, so the
/// output does not depend on the worker count.
pub fn generate_dataset(gen: &Generator, cfg: &DatasetConfig) -> Result<DatasetManifest, GenerateError> {
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| GenerateError::Verify(format!("worker pool: {e}")))?;
    let chunk = (cfg.workers.max(1) * 4) as u64;
    let mut documents = Vec::with_capacity(cfg.count as usize);
    let mut annotations = Vec::new();
    let mut start = 0;
    while start < cfg.count {
        let end = (start + chunk).min(cfg.count);
        let batch: Vec<Result<DocOutput, GenerateError>> =
            pool.install(|| (start..end).into_par_iter().map(|d| produce(gen, d, cfg)).collect());
        for out in batch {
            let out = out?;
            for (rel, bytes) in &out.files {
                write_verified(&cfg.out, rel, bytes)?;
            }
            documents.push(out.entry);
            annotations.extend(out.annotations);
        }
        if cfg.progress {
            eprintln!("generated {end}/{}", cfg.count);
        }
        start = end;
    }

    let annotation_file = if cfg.plan_only {
        None
    } else {
        let coco = export_coco(&annotations);
        let text = coco.to_json();
        write_verified(&cfg.out, ANNOTATION_FILE, text.as_bytes())?;
        let path = cfg.out.join(ANNOTATION_FILE);
        let reread = fs::read_to_string(&path).map_err(io_err(&path))?;
        if ingest_coco(&CocoDataset::from_json(&reread)?)? != annotations {
            return Err(GenerateError::Verify(format!("{} does not reproduce the layout", path.display())));
        }
        Some(ANNOTATION_FILE.to_string())
    };

    let manifest = DatasetManifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        generator_version: GENERATOR_VERSION.to_string(),
        seed: cfg.seed,
        template: cfg.template.clone(),
        count: cfg.count,
        dpi: gen.geometry(0).dpi,
        image_format: cfg.format.extension().to_string(),
        defects: gen.options.defects,
        plan_only: cfg.plan_only,
        annotation_file,
        categories: coco_categories(),
        notes: {
            let mut notes = vec![
                "elements split across columns or pages are annotated once per fragment; fragments share element_id"
                    .to_string(),
                "table cells carry their table's element_id in parent_id".to_string(),
            ];
            if cfg.plan_only {
                notes.push("plan-only counts: each planned header or footer band counts once".to_string());
            }
            notes
        },
        documents,
    };
    write_verified(&cfg.out, MANIFEST_FILE, manifest.to_json().as_bytes())?;
    Ok(manifest)
}

/// Read a dataset's manifest.
pub fn read_manifest(dir: &Path) -> Result<DatasetManifest, GenerateError> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|_| GenerateError::MissingManifest(path.clone()))?;
    Ok(DatasetManifest::from_json(&text)?)
}

/// Read a dataset's annotations, grouped by document.
pub fn read_annotations(dir: &Path) -> Result<Vec<DocumentAnnotations>, GenerateError> {
    let manifest = read_manifest(dir)?;
    let Some(file) = manifest.annotation_file else { return Ok(vec![]) };
    let path = dir.join(file);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    Ok(ingest_coco(&CocoDataset::from_json(&text)?)?)
}

/// A template whose observed nodes were replaced by their posteriors.
#[derive(Clone, Debug)]
pub struct Inference {
    pub prior: TemplateSpec,
    pub posterior: TemplateSpec,
    pub observations: Vec<ObservationSet>,
}

/// Update a single template from line-delimited JSON observations.
pub fn infer_template(template: &Path, observations: &str) -> Result<Inference, GenerateError> {
    let mixture = load_mixture_with(template, None)?;
    if mixture.templates.len() != 1 {
        return Err(TemplateError::InvalidMixture("inference needs a single template".into()).into());
    }
    let prior = mixture.templates.into_iter().next().expect("one template");
    let prob = |e| GenerateError::Subnet(SubnetError::Prob(e));
    let observations = parse_observations(observations).map_err(prob)?;
    let params = posterior_infer(&observations, network(), &prior.params).map_err(prob)?;
    let posterior = TemplateSpec { params, ..prior.clone() };
    Ok(Inference { prior, posterior, observations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_unwrap_wrappers() {
        let e = GenerateError::Subnet(SubnetError::Prob(crate::probnet::ProbError::UnknownNode("x".into())));
        assert_eq!(e.code(), "UnknownNode");
        let e = GenerateError::Layout { doc: 1, source: LayoutError::FontGlyphMissing('q') };
        assert_eq!(e.code(), "FontGlyphMissing");
        assert_eq!(GenerateError::MissingManifest(PathBuf::new()).code(), "MissingManifest");
    }

    #[test]
    fn documents_generate_for_every_preset() {
        for name in ["scientific", "resume", "forms"] {
            let gen = Generator::load(Path::new(name), None, GeneratorOptions::default()).unwrap();
            for doc in 0..3 {
                let d = gen.generate(doc, 1).unwrap();
                assert_eq!(d.pages.len(), d.composed.page_count);
                assert!(!d.composed.elements.is_empty());
            }
        }
    }
}
