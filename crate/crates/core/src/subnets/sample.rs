use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use crate::color::{Fill, Rgb};
use crate::defects::sample_defect_plan;
use crate::probnet::{categorical, DistributionSpec, ParamTable, Realized, RngStream, Value};
use crate::templates::{choose_template, list_images, Corpus, TemplateMixture, TemplateSpec};

use super::network::{self, Arity, BODY_KINDS};
use super::plan::*;
use super::SubnetError;

/// Stream layout under a document root `(seed, [doc_index])`.
mod path {
    pub const TEMPLATE: u64 = 0;
    pub const PARAMS: u64 = 1;
    pub const DOCUMENT: u64 = 2;
    pub const HEADER: u64 = 3;
    pub const FOOTER: u64 = 4;
    pub const TITLE: u64 = 5;
    pub const SHARED: u64 = 6;
    pub const BODY: u64 = 7;
    pub const DEFECTS: u64 = 8;
}

/// Resources of one template, loaded once.
#[derive(Debug)]
pub struct TemplateAssets {
    pub corpus: Arc<Corpus>,
    pub images_root: PathBuf,
    pub images: Vec<PathBuf>,
}

/// A loaded mixture with its dense parameter table and content resources.
#[derive(Debug)]
pub struct PlanSampler {
    pub mixture: TemplateMixture,
    table: ParamTable,
    assets: Vec<TemplateAssets>,
}

impl PlanSampler {
    pub fn new(mixture: TemplateMixture) -> Result<Self, SubnetError> {
        let per_template: Vec<_> = mixture.templates.iter().map(|t| &t.params).collect();
        let table = ParamTable::from_templates(network::network(), &per_template);
        let mut assets = Vec::with_capacity(mixture.templates.len());
        for t in &mixture.templates {
            let corpus = Arc::new(Corpus::load(&t.resources.corpus)?);
            assets.push(TemplateAssets {
                corpus,
                images_root: t.resources.images.clone(),
                images: list_images(&t.resources.images),
            });
        }
        Ok(Self { mixture, table, assets })
    }

    pub fn template(&self, index: usize) -> &TemplateSpec {
        &self.mixture.templates[index]
    }

    pub fn assets(&self, index: usize) -> &TemplateAssets {
        &self.assets[index]
    }

    pub fn context(&self, template_index: usize, seed: u64, doc_index: u64) -> SampleCtx<'_> {
        SampleCtx {
            sampler: self,
            template_index,
            params_rng: RngStream::at(seed, &[doc_index, path::PARAMS]),
            realized: BTreeMap::new(),
        }
    }
}

/// Per-document sampling state: the first-stage parameters of each node are
/// drawn once, on first use, from a stream keyed by the node's position.
pub struct SampleCtx<'a> {
    sampler: &'a PlanSampler,
    template_index: usize,
    params_rng: RngStream,
    realized: BTreeMap<String, Realized>,
}

impl<'a> SampleCtx<'a> {
    pub fn template(&self) -> &'a TemplateSpec {
        self.sampler.template(self.template_index)
    }

    pub fn corpus(&self) -> &'a Corpus {
        &self.sampler.assets(self.template_index).corpus
    }

    pub fn vocabulary_size(&self) -> usize {
        self.corpus().vocabulary.len()
    }

    fn spec(&self, id: &str) -> Result<(&'a DistributionSpec, Option<Arity>, usize), SubnetError> {
        let reg = network::network();
        let handle = reg.handle(id).ok_or_else(|| SubnetError::UnknownNode(id.to_string()))?;
        let decl = network::declaration(id).ok_or_else(|| SubnetError::UnknownNode(id.to_string()))?;
        Ok((self.sampler.table.spec(handle, self.template_index)?, decl.arity, handle.index()))
    }

    /// First-stage parameters of a node for this document.
    pub fn realized(&mut self, id: &str) -> Result<&Realized, SubnetError> {
        if !self.realized.contains_key(id) {
            let (spec, arity, index) = self.spec(id)?;
            let dim = arity.and_then(|a| self.template().arity_dim(a, Some(self.vocabulary_size())));
            let mut rng = self.params_rng.child(index as u64);
            let r = spec.draw_params(&mut rng, dim);
            self.realized.insert(id.to_string(), r);
        }
        Ok(&self.realized[id])
    }

    pub fn draw(&mut self, id: &str, rng: &mut RngStream) -> Result<Value, SubnetError> {
        Ok(self.realized(id)?.draw(rng))
    }

    pub fn category(&mut self, id: &str, rng: &mut RngStream) -> Result<usize, SubnetError> {
        Ok(self.draw(id, rng)?.as_index())
    }

    pub fn flag(&mut self, id: &str, rng: &mut RngStream) -> Result<bool, SubnetError> {
        Ok(self.draw(id, rng)?.as_flag())
    }

    pub fn real(&mut self, id: &str, rng: &mut RngStream) -> Result<f64, SubnetError> {
        Ok(self.draw(id, rng)?.as_f64())
    }

    /// Rounded draw, at least `min`.
    pub fn count(&mut self, id: &str, rng: &mut RngStream, min: usize) -> Result<usize, SubnetError> {
        let x = self.real(id, rng)?.round();
        Ok(if x.is_finite() && x > min as f64 { x as usize } else { min })
    }

    /// A fresh Dirichlet draw of the given dimension, for nodes whose
    /// dimension varies per instance.
    pub fn fractions(&mut self, id: &str, dim: usize, rng: &mut RngStream) -> Result<Vec<f64>, SubnetError> {
        if dim <= 1 {
            return Ok(vec![1.0; dim]);
        }
        let (spec, _, _) = self.spec(id)?;
        let mut probs = spec.draw_params(rng, Some(dim)).probs().map(<[f64]>::to_vec).unwrap_or_default();
        // exact unit sum
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= s);
        let head: f64 = probs[..dim - 1].iter().sum();
        probs[dim - 1] = (1.0 - head).max(0.0);
        Ok(probs)
    }

    pub fn palette_text(&mut self, id: &str, rng: &mut RngStream) -> Result<Rgb, SubnetError> {
        let k = self.category(id, rng)?;
        let p = &self.template().palette.text;
        Ok(p[k.min(p.len() - 1)])
    }

    fn palette_accent(&mut self, id: &str, rng: &mut RngStream) -> Result<Rgb, SubnetError> {
        let k = self.category(id, rng)?;
        let p = &self.template().palette.accent;
        Ok(p[k.min(p.len() - 1)])
    }

    fn palette_fill(&mut self, id: &str, rng: &mut RngStream) -> Result<Fill, SubnetError> {
        let k = self.category(id, rng)?;
        let p = &self.template().palette.fill;
        Ok(p[k.min(p.len() - 1)])
    }

    /// Vocabulary token drawn from the document's realized vocabulary distribution.
    pub fn token(&mut self, rng: &mut RngStream) -> Result<usize, SubnetError> {
        let probs = self.realized("doc.vocabulary")?.probs().unwrap_or(&[]);
        Ok(if probs.is_empty() { 0 } else { categorical(rng, probs) })
    }

    fn token_lines(&mut self, words: &[usize], rng: &mut RngStream) -> Result<Vec<Vec<usize>>, SubnetError> {
        words.iter().map(|&w| (0..w).map(|_| self.token(rng)).collect()).collect()
    }

    fn sentence_refs(&mut self, n: usize, rng: &mut RngStream) -> Result<Vec<usize>, SubnetError> {
        let pool = self.corpus().sentences.len();
        if pool == 0 {
            return (0..n * 12).map(|_| self.token(rng)).collect();
        }
        Ok((0..n).map(|_| ((rng.unit() * pool as f64) as usize).min(pool - 1)).collect())
    }

    pub fn into_realized(self) -> BTreeMap<String, Realized> {
        self.realized
    }
}

/// Pan-section style variables of a text block kind (`section` or `title`).
pub fn sample_text_style(ctx: &mut SampleCtx<'_>, prefix: &str, rng: &mut RngStream) -> Result<TextStyle, SubnetError> {
    let id = |s: &str| format!("{prefix}.{s}");
    let font_style = FontStyle::from_index(ctx.category(&id("font_style"), rng)?);
    let align = HAlign::from_index(ctx.category(&id("align"), rng)?);
    let fore_color = ctx.palette_text(&id("fore_color"), rng)?;
    let back_color = ctx.palette_fill(&id("back_color"), rng)?;
    let border_type = BorderType::from_index(ctx.category(&id("border_type"), rng)?);
    let border_color = ctx.palette_accent(&id("border_color"), rng)?;
    Ok(TextStyle {
        font_style,
        align,
        fore_color,
        back_color,
        border_type,
        border_color,
        font_scale: ctx.real(&id("font_scale"), rng)?.max(0.1),
        pre_space: ctx.real(&id("pre_space"), rng)?.max(0.0),
        post_space: ctx.real(&id("post_space"), rng)?.max(0.0),
    })
}

/// Lines, words per line and tokens of one section or title.
pub fn sample_section(
    ctx: &mut SampleCtx<'_>,
    prefix: &str,
    style: &TextStyle,
    rng: &mut RngStream,
) -> Result<SectionPlan, SubnetError> {
    let line_count = ctx.category(&format!("{prefix}.lines"), rng)? + 1;
    let words_id = format!("{prefix}.words");
    let words_per_line = (0..line_count).map(|_| ctx.count(&words_id, rng, 1)).collect::<Result<Vec<_>, _>>()?;
    let tokens = ctx.token_lines(&words_per_line, rng)?;
    Ok(SectionPlan { line_count, words_per_line, tokens, style: style.clone() })
}

pub fn sample_caption(ctx: &mut SampleCtx<'_>, rng: &mut RngStream) -> Result<CaptionPlan, SubnetError> {
    let position = if ctx.flag("caption.position", rng)? { CaptionPosition::Below } else { CaptionPosition::Above };
    let line_count = ctx.count("caption.lines", rng, 1)?.min(3);
    let words_per_line =
        (0..line_count).map(|_| ctx.count("caption.words", rng, 1)).collect::<Result<Vec<_>, _>>()?;
    let tokens = ctx.token_lines(&words_per_line, rng)?;
    Ok(CaptionPlan {
        position,
        line_count,
        words_per_line,
        tokens,
        font_style: FontStyle::from_index(ctx.category("caption.font_style", rng)?),
        font_scale: ctx.real("caption.font_scale", rng)?.max(0.1),
    })
}

pub fn sample_table(ctx: &mut SampleCtx<'_>, rng: &mut RngStream) -> Result<TablePlan, SubnetError> {
    let width_fraction = ctx.real("table.width", rng)?.clamp(0.05, 1.0);
    let align = HAlign::from_index(ctx.category("table.align", rng)?);
    let borders = TableBorders::from_index(ctx.category("table.borders", rng)?);
    let h_pad = ctx.real("table.h_pad", rng)?.max(0.0);
    let v_pad = ctx.real("table.v_pad", rng)?.max(0.0);
    let pre_space = ctx.real("table.pre_space", rng)?.max(0.0);
    let post_space = ctx.real("table.post_space", rng)?.max(0.0);
    let rows = ctx.count("table.rows", rng, 1)?;
    let question_answer = ctx.flag("table.qa", rng)? && !ctx.corpus().qa_pairs.is_empty();
    let sampled_cols = ctx.category("table.cols", rng)? + 1;
    let cols = if question_answer { 2 } else { sampled_cols };
    let cell_width_fractions = ctx.fractions("table.cell_widths", cols, rng)?;
    let header_row = ctx.flag("table.header_row", rng)? && !question_answer;
    let font_style = FontStyle::from_index(ctx.category("table.font_style", rng)?);
    let header_style = FontStyle::from_index(ctx.category("table.header_style", rng)?);
    let cell_align = HAlign::from_index(ctx.category("table.cell_align", rng)?);
    let header_fill = ctx.palette_fill("table.header_fill", rng)?;
    let stripe = ctx.flag("table.stripe", rng)?;
    let font_scale = ctx.real("table.font_scale", rng)?.max(0.1);

    let mut cells = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut row = Vec::with_capacity(cols);
        if question_answer {
            let pairs = ctx.corpus().qa_pairs.len();
            let q = ((rng.unit() * pairs as f64) as usize).min(pairs - 1);
            row.push(CellPlan { lines: CellLines::Single, content: CellContent::Question(q), font_style: Some(FontStyle::Bold) });
            row.push(CellPlan { lines: CellLines::Single, content: CellContent::Answer(q), font_style: Some(FontStyle::Regular) });
        } else {
            for _ in 0..cols {
                let lines = CellLines::from_index(ctx.category("table.cell_lines", rng)?);
                let n_lines = match lines {
                    CellLines::Empty => 0,
                    CellLines::Single => 1,
                    CellLines::Wrapped => 2,
                };
                let words = (0..n_lines).map(|_| ctx.count("table.cell_words", rng, 1)).collect::<Result<Vec<_>, _>>()?;
                let content = if n_lines == 0 { CellContent::Empty } else { CellContent::Tokens(ctx.token_lines(&words, rng)?) };
                row.push(CellPlan { lines, content, font_style: None });
            }
        }
        cells.push(row);
    }
    let caption = if ctx.flag("table.caption", rng)? { Some(sample_caption(ctx, rng)?) } else { None };
    Ok(TablePlan {
        width_fraction,
        align,
        borders,
        h_pad,
        v_pad,
        pre_space,
        post_space,
        rows,
        cols,
        cell_width_fractions,
        header_row,
        font_style,
        header_style,
        cell_align,
        header_fill: if header_row { header_fill } else { Fill(None) },
        stripe,
        question_answer,
        font_scale,
        cells,
        caption,
    })
}

fn uniform_row(n: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..n).map(|_| rng.unit()).collect()
}

fn sample_subplot(ctx: &mut SampleCtx<'_>, rng: &mut RngStream) -> Result<SubplotPlan, SubnetError> {
    let chart_type = ChartType::from_index(ctx.category("figure.chart_type", rng)?);
    let points = ctx.count("figure.points", rng, 1)?;
    let series = ctx.count("figure.series", rng, 1)?;
    let data = match chart_type {
        ChartType::Bar | ChartType::Line => (0..series).map(|_| uniform_row(points, rng)).collect(),
        ChartType::Scatter => (0..2 * series).map(|_| uniform_row(points, rng)).collect(),
        ChartType::Pie => vec![(0..points.clamp(2, 8)).map(|_| 0.05 + 0.95 * rng.unit()).collect()],
        ChartType::Heatmap => {
            let side = points.clamp(2, 10);
            (0..side).map(|_| uniform_row(side, rng)).collect()
        }
    };
    Ok(SubplotPlan { chart_type, data })
}

pub fn sample_figure(ctx: &mut SampleCtx<'_>, rng: &mut RngStream) -> Result<FigurePlan, SubnetError> {
    let chart = ctx.flag("figure.source", rng)?;
    let source = if chart {
        let n = ctx.category("figure.subplots", rng)? + 1;
        let subplots = (0..n).map(|_| sample_subplot(ctx, rng)).collect::<Result<Vec<_>, _>>()?;
        FigureSource::SyntheticChart { subplots }
    } else {
        let assets = ctx.sampler.assets(ctx.template_index);
        if assets.images.is_empty() {
            return Err(SubnetError::EmptyImageLibrary(assets.images_root.clone()));
        }
        let k = ((rng.unit() * assets.images.len() as f64) as usize).min(assets.images.len() - 1);
        let rel = assets.images[k].strip_prefix(&assets.images_root).unwrap_or(&assets.images[k]);
        FigureSource::LibraryImage { path: rel.to_string_lossy().replace('\\', "/") }
    };
    let width_fraction = ctx.real("figure.width", rng)?.clamp(0.05, 1.0);
    let height_fraction = ctx.real("figure.height", rng)?.clamp(0.05, 1.0);
    let pre_space = ctx.real("figure.pre_space", rng)?.max(0.0);
    let post_space = ctx.real("figure.post_space", rng)?.max(0.0);
    let caption = if ctx.flag("figure.caption", rng)? { Some(sample_caption(ctx, rng)?) } else { None };
    Ok(FigurePlan { source, width_fraction, height_fraction, pre_space, post_space, caption })
}

pub fn sample_paragraph(ctx: &mut SampleCtx<'_>, rng: &mut RngStream) -> Result<ParagraphPlan, SubnetError> {
    let line_count = ctx.count("paragraph.lines", rng, 1)?;
    let line_spacing = ctx.real("paragraph.line_spacing", rng)?.max(1.0);
    let block_spacing = ctx.real("paragraph.block_spacing", rng)?.max(0.0);
    let sentences = ctx.sentence_refs(line_count + 2, rng)?;
    Ok(ParagraphPlan { line_count, line_spacing, block_spacing, sentences })
}

pub fn sample_bullet(ctx: &mut SampleCtx<'_>, rng: &mut RngStream) -> Result<BulletPlan, SubnetError> {
    let n = ctx.count("bullet.items", rng, 1)?;
    let mut items = Vec::with_capacity(n);
    for _ in 0..n {
        let line_count = ctx.count("bullet.lines", rng, 1)?;
        let sentences = ctx.sentence_refs(line_count + 1, rng)?;
        items.push(BulletItem { line_count, sentences });
    }
    Ok(BulletPlan {
        bullet_type: BulletType::from_index(ctx.category("bullet.type", rng)?),
        offset: ctx.real("bullet.offset", rng)?.max(0.0),
        line_spacing: ctx.real("bullet.line_spacing", rng)?.max(1.0),
        block_spacing: ctx.real("bullet.block_spacing", rng)?.max(0.0),
        items,
    })
}

const EQ_LETTERS: &[char] = &[
    'a', 'b', 'c', 'd', 'f', 'g', 'k', 'n', 'p', 'q', 'r', 's', 't', 'x', 'y', 'z', 'A', 'B', 'F', 'L', 'N', 'X',
    'α', 'β', 'γ', 'δ', 'θ', 'λ', 'μ', 'π', 'σ', 'φ', 'ω', 'Σ', 'Δ',
];
const EQ_DIGITS: &[char] = &['0', '1', '2', '3', '4', 'n', 'i', 'k'];
const EQ_OPERATORS: &[&str] = &["+", "−", "=", "×", "·", "≤", "≥", "→", "≈", "/"];

fn pick<T: Copy>(items: &[T], rng: &mut RngStream) -> T {
    items[((rng.unit() * items.len() as f64) as usize).min(items.len() - 1)]
}

pub fn sample_equation(ctx: &mut SampleCtx<'_>, rng: &mut RngStream) -> Result<EquationPlan, SubnetError> {
    let n = ctx.count("equation.groups", rng, 1)?;
    let mut groups = Vec::with_capacity(n);
    for i in 0..n {
        // operands at even positions, operators between them
        if i % 2 == 1 && i + 1 < n {
            groups.push(EquationGroup { text: pick(EQ_OPERATORS, rng).to_string(), level: 0 });
            continue;
        }
        let scripted = ctx.flag("equation.script", rng)?;
        if scripted && i > 0 && groups.last().is_some_and(|g: &EquationGroup| g.level == 0) {
            let level = if rng.unit() < 0.5 { 1 } else { -1 };
            let len = 1 + (rng.unit() * 2.0) as usize;
            let text: String = (0..len).map(|_| pick(EQ_DIGITS, rng)).collect();
            groups.push(EquationGroup { text, level });
        } else {
            let len = 1 + (rng.unit() * 3.0) as usize;
            let text: String = (0..len).map(|_| pick(EQ_LETTERS, rng)).collect();
            groups.push(EquationGroup { text, level: 0 });
        }
    }
    Ok(EquationPlan { groups, spacing: ctx.real("equation.spacing", rng)?.max(0.0) })
}

pub fn sample_header(ctx: &mut SampleCtx<'_>, prefix: &str, rng: &mut RngStream) -> Result<HeaderPlan, SubnetError> {
    let id = |s: &str| format!("{prefix}.{s}");
    let columns = ctx.category(&id("columns"), rng)? + 1;
    let mut slots = Vec::with_capacity(columns);
    for slot in 0..columns {
        let content = HeaderContent::from_index(ctx.category(&id(&format!("content.{slot}")), rng)?);
        let align = HAlign::from_index(ctx.category(&id(&format!("align.{slot}")), rng)?);
        let words = match content {
            HeaderContent::LogoText => ctx.count(&id("logo_words"), rng, 1)?,
            HeaderContent::RunningTitle => ctx.count(&id("title_words"), rng, 1)?,
            _ => 0,
        };
        let tokens = (0..words).map(|_| ctx.token(rng)).collect::<Result<Vec<_>, _>>()?;
        slots.push(HeaderSlot { content, align, tokens });
    }
    Ok(HeaderPlan {
        slots,
        font_style: FontStyle::from_index(ctx.category(&id("font_style"), rng)?),
        color: ctx.palette_text(&id("color"), rng)?,
        font_scale: ctx.real(&id("font_scale"), rng)?.max(0.1),
        rule: ctx.flag(&id("rule"), rng)?,
    })
}

impl PlanSampler {
    /// Sample the complete plan of document `doc_index`.
    pub fn sample_document_plan(&self, doc_index: u64, seed: u64) -> Result<DocumentPlan, SubnetError> {
        let root = RngStream::at(seed, &[doc_index]);
        let (template_index, template_probs) = choose_template(&self.mixture, &mut root.child(path::TEMPLATE));
        let mut ctx = self.context(template_index, seed, doc_index);
        let template = ctx.template();
        let mut rng = root.child(path::DOCUMENT);

        let margin = ctx.real("doc.margin", &mut rng)?.clamp(1e-3, 0.449);
        let columns = ctx.category("doc.columns", &mut rng)? + 1;
        let column_widths = ctx.fractions("doc.column_widths", columns, &mut rng)?;
        let bg = ctx.category("doc.background", &mut rng)?;
        let background = template.palette.background[bg.min(template.palette.background.len() - 1)];
        let font_index = ctx.category("doc.font", &mut rng)?.min(template.fonts.len() - 1);
        let font_size = ctx.real("doc.font_size", &mut rng)?;
        let text_color = ctx.palette_text("doc.text_color", &mut rng)?;
        let has_header = ctx.flag("doc.header", &mut rng)?;
        let has_footer = ctx.flag("doc.footer", &mut rng)?;
        let has_title = ctx.flag("doc.title", &mut rng)?;
        let count = match ctx.draw("doc.element_count", &mut rng)? {
            Value::Count(n) => n.max(1) as usize,
            v => (v.as_f64().round() as usize).max(1),
        };
        let kinds = (0..count).map(|_| ctx.category("doc.elements", &mut rng)).collect::<Result<Vec<_>, _>>()?;

        let header = if has_header { Some(sample_header(&mut ctx, "header", &mut root.child(path::HEADER))?) } else { None };
        let footer = if has_footer { Some(sample_header(&mut ctx, "footer", &mut root.child(path::FOOTER))?) } else { None };
        let title = if has_title {
            let mut r = root.child(path::TITLE);
            let style = sample_text_style(&mut ctx, "title", &mut r)?;
            Some(sample_section(&mut ctx, "title", &style, &mut r)?)
        } else {
            None
        };
        let section_style = sample_text_style(&mut ctx, "section", &mut root.child(path::SHARED))?;

        let body_root = root.child(path::BODY);
        let mut body = Vec::with_capacity(count);
        for (i, &k) in kinds.iter().enumerate() {
            let mut r = body_root.child(i as u64);
            let element = match BODY_KINDS.get(k).copied().unwrap_or("paragraph") {
                "section" => ElementPlan::Section(sample_section(&mut ctx, "section", &section_style, &mut r)?),
                "table" => ElementPlan::Table(sample_table(&mut ctx, &mut r)?),
                "figure" => ElementPlan::Figure(sample_figure(&mut ctx, &mut r)?),
                "bullet" => ElementPlan::Bullet(sample_bullet(&mut ctx, &mut r)?),
                "equation" => ElementPlan::Equation(sample_equation(&mut ctx, &mut r)?),
                _ => ElementPlan::Paragraph(sample_paragraph(&mut ctx, &mut r)?),
            };
            body.push(element);
        }
        let defects = sample_defect_plan(&mut ctx, &mut root.child(path::DEFECTS))?;

        Ok(DocumentPlan {
            schema_version: PLAN_SCHEMA_VERSION,
            doc_index,
            seed,
            template_index,
            template_id: template.template_id.clone(),
            template_probs,
            margin,
            columns,
            column_widths,
            background,
            shared_style: SharedStyle {
                font_index,
                font_name: template.fonts[font_index].name.clone(),
                font_size,
                text_color,
            },
            header,
            footer,
            title,
            body,
            defects,
            realized: ctx.into_realized(),
        })
    }
}
