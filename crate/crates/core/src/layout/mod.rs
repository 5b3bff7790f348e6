//! Page composition: turns a document plan into placed payloads and
//! ground-truth boxes on integer pixel pages.

mod blocks;
mod flow;
pub mod text;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate::LayoutElement;
use crate::color::Rgb;
use crate::fonts::{quantize_px, FaceId, FontBook};
use crate::subnets::{DocumentPlan, HAlign, HeaderContent, HeaderPlan, SubplotPlan};
use crate::templates::{Corpus, PageSpec};

pub use blocks::column_widths;
pub use text::{measure_text, LineSlot, MeasuredLine, TextMeasure, VerticalMetrics};

/// Axis-aligned integer rectangle, top-left origin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub const fn new(x: i32, y: i32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    /// Rectangle spanning `[x0, x1) x [y0, y1)`; inverted edges give zero size.
    pub fn from_edges(x0: i32, y0: i32, x1: i32, y1: i32) -> Self {
        Self { x: x0, y: y0, w: (x1 - x0).max(0) as u32, h: (y1 - y0).max(0) as u32 }
    }

    pub fn right(&self) -> i32 {
        self.x + self.w as i32
    }

    pub fn bottom(&self) -> i32 {
        self.y + self.h as i32
    }

    pub fn area(&self) -> u64 {
        u64::from(self.w) * u64::from(self.h)
    }

    pub fn is_empty(&self) -> bool {
        self.w == 0 || self.h == 0
    }

    pub fn intersect(&self, o: &Rect) -> Rect {
        Rect::from_edges(self.x.max(o.x), self.y.max(o.y), self.right().min(o.right()), self.bottom().min(o.bottom()))
    }

    pub fn intersection_area(&self, o: &Rect) -> u64 {
        self.intersect(o).area()
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect::from_edges(self.x.min(o.x), self.y.min(o.y), self.right().max(o.right()), self.bottom().max(o.bottom()))
    }

    pub fn contains(&self, o: &Rect) -> bool {
        o.x >= self.x && o.y >= self.y && o.right() <= self.right() && o.bottom() <= self.bottom()
    }

    pub fn contains_point(&self, x: i32, y: i32) -> bool {
        x >= self.x && y >= self.y && x < self.right() && y < self.bottom()
    }

    pub fn translate(&self, dx: i32, dy: i32) -> Rect {
        Rect { x: self.x + dx, y: self.y + dy, ..*self }
    }
}

/// A box on a specific page.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PageBox {
    pub page_index: usize,
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

impl PageBox {
    pub fn new(page_index: usize, r: Rect) -> Self {
        Self { page_index, x: r.x, y: r.y, w: r.w, h: r.h }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x, self.y, self.w, self.h)
    }
}

/// Page size in pixels at a resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageGeometry {
    pub width: u32,
    pub height: u32,
    pub dpi: u32,
}

impl PageGeometry {
    /// The template page, rescaled when a different resolution is requested.
    pub fn from_spec(spec: &PageSpec, dpi: Option<u32>) -> Self {
        let dpi = dpi.unwrap_or(spec.dpi).max(1);
        let scale = f64::from(dpi) / f64::from(spec.dpi);
        Self {
            width: (f64::from(spec.width) * scale).round().max(1.0) as u32,
            height: (f64::from(spec.height) * scale).round().max(1.0) as u32,
            dpi,
        }
    }

    pub fn px_per_pt(&self) -> f64 {
        f64::from(self.dpi) / 72.0
    }
}

/// Something to draw.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Fill { rect: Rect, color: Rgb },
    Text { face: FaceId, px: f32, text: String, x: i32, baseline: i32, color: Rgb, clip: Option<Rect> },
    Chart { rect: Rect, subplots: Vec<SubplotPlan>, colors: Vec<Rgb>, axis: Rgb, background: Rgb },
    Image { rect: Rect, path: PathBuf },
}

/// A payload on a page, with the index of the element whose box must hold its ink.
#[derive(Clone, Debug, PartialEq)]
pub struct Placed {
    pub page: usize,
    pub owner: Option<usize>,
    pub payload: Payload,
}

/// Output of composition: everything needed to render and annotate a document.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposedDocument {
    pub geometry: PageGeometry,
    pub background: Rgb,
    pub page_count: usize,
    pub placed: Vec<Placed>,
    pub elements: Vec<LayoutElement>,
    pub forced_breaks: usize,
}

/// Shared read-only inputs of composition.
#[derive(Clone, Copy)]
pub struct LayoutResources<'a> {
    pub fonts: &'a FontBook,
    pub corpus: &'a Corpus,
    pub images_root: &'a Path,
    pub chart_colors: &'a [Rgb],
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("font family {family} cannot be resolved ({available} loaded)")]
    FontResolutionFailed { family: usize, available: usize },
    #[error("no loaded font has a glyph for {0:?}")]
    FontGlyphMissing(char),
    #[error("{element} needs {needed}px but a column holds {available}px")]
    ElementTooLargeForPage { element: String, needed: i32, available: i32 },
}

/// Geometry derived from the plan and the page.
#[derive(Clone, Debug)]
pub(crate) struct Frame {
    pub margin: i32,
    pub body: Rect,
    pub column_x: Vec<i32>,
    pub column_w: Vec<i32>,
}

impl Frame {
    fn new(plan: &DocumentPlan, geometry: &PageGeometry, base_px: f64) -> Self {
        let (w, h) = (geometry.width as i32, geometry.height as i32);
        let margin = ((plan.margin * f64::from(geometry.width)).round() as i32).clamp(1, (w.min(h) - 2) / 2 - 8);
        let body = Rect::from_edges(margin, margin, w - margin, h - margin);
        let columns = plan.columns.max(1);
        let gutter = if columns > 1 { (base_px * 1.5).round() as i32 } else { 0 };
        let usable = (body.w as i32 - gutter * (columns as i32 - 1)).max(columns as i32);
        let fractions = if plan.column_widths.len() == columns {
            plan.column_widths.clone()
        } else {
            vec![1.0 / columns as f64; columns]
        };
        let column_w = column_widths(&fractions, usable);
        let mut column_x = Vec::with_capacity(columns);
        let mut x = body.x;
        for &cw in &column_w {
            column_x.push(x);
            x += cw + gutter;
        }
        Self { margin, body, column_x, column_w }
    }

    fn content_width(&self) -> i32 {
        self.column_w.iter().copied().min().unwrap_or(1).max(1)
    }
}

/// Flow a document plan onto pages.
pub fn compose(
    plan: &DocumentPlan,
    geometry: &PageGeometry,
    res: &LayoutResources<'_>,
) -> Result<ComposedDocument, LayoutError> {
    let family = plan.shared_style.font_index;
    if family >= res.fonts.family_count() {
        return Err(LayoutError::FontResolutionFailed { family, available: res.fonts.family_count() });
    }
    let base_px = plan.shared_style.font_size * geometry.px_per_pt();
    let frame = Frame::new(plan, geometry, base_px);
    let mut builder = blocks::Builder::new(res, plan, base_px, frame.content_width());

    let title = match &plan.title {
        Some(t) => Some(builder.title(t, frame.body.w as i32)?),
        None => None,
    };
    let mut body = Vec::new();
    for element in &plan.body {
        body.extend(builder.element(element)?);
    }

    let mut flow = flow::Flow::new(&frame, geometry);
    if let Some(title) = title {
        flow.place_title(title)?;
    }
    for block in body {
        flow.place(block)?;
    }
    let (page_count, mut placed, mut elements) = flow.finish();

    let mut next_id = builder.next_id();
    for page in 0..page_count {
        for (plan_band, top) in [(&plan.header, true), (&plan.footer, false)] {
            if let Some(band) = plan_band {
                header_band(res, plan, band, &frame, geometry, base_px, page, top, next_id, &mut placed, &mut elements)?;
                next_id += 1;
            }
        }
    }

    Ok(ComposedDocument {
        geometry: *geometry,
        background: plan.background,
        page_count,
        placed,
        elements,
        forced_breaks: builder.forced_breaks(),
    })
}

#[allow(clippy::too_many_arguments)]
fn header_band(
    res: &LayoutResources<'_>,
    plan: &DocumentPlan,
    band: &HeaderPlan,
    frame: &Frame,
    geometry: &PageGeometry,
    base_px: f64,
    page: usize,
    top: bool,
    element_id: u32,
    placed: &mut Vec<Placed>,
    elements: &mut Vec<LayoutElement>,
) -> Result<(), LayoutError> {
    let fonts = res.fonts;
    let face = fonts.resolve_face(plan.shared_style.font_index, band.font_style);
    let m = frame.margin;
    let gap = (m / 6).max(1);
    let stroke = ((base_px / 16.0).round() as i32).max(1);
    let avail_h = (m - 2 * gap - stroke - 1).max(1);

    let mut px = quantize_px(base_px * band.font_scale);
    let mut metrics = VerticalMetrics::new(fonts, face, px);
    while metrics.ascent + metrics.descent > avail_h && px > 1.0 {
        px = quantize_px(f64::from(px) * 0.9);
        metrics = VerticalMetrics::new(fonts, face, px);
    }

    let band_top = if top { gap } else { geometry.height as i32 - m + gap + stroke + 1 };
    let rule_y = if top { m - gap - stroke } else { geometry.height as i32 - m + gap };
    let slots = band.slots.len().max(1) as i32;
    let slot_w = frame.body.w as i32 / slots;
    let owner = elements.len();
    let mut ink: Option<Rect> = None;

    for (i, slot) in band.slots.iter().enumerate() {
        let words: Vec<&str> = match slot.content {
            HeaderContent::PageNumber => vec![],
            HeaderContent::Empty => continue,
            _ => slot.tokens.iter().filter_map(|&t| res.corpus.vocabulary.get(t).map(String::as_str)).collect(),
        };
        let number = (page + 1).to_string();
        let words = if slot.content == HeaderContent::PageNumber { vec![number.as_str()] } else { words };
        let x0 = frame.body.x + slot_w * i as i32;
        let w = if i + 1 == band.slots.len() { frame.body.right() - x0 } else { slot_w };
        let line = fit_words(fonts, face, px, &words, w)?;
        let Some(line) = line else { continue };
        let shift = match slot.align {
            HAlign::Left => 0,
            HAlign::Center => (w - line.extent()) / 2,
            HAlign::Right => w - line.extent(),
        };
        let origin = x0 + shift - line.left();
        let slot_box = metrics.slot(line.ink, 1.0);
        let baseline = band_top + (avail_h - slot_box.height).max(0) / 2 + slot_box.baseline;
        if let Some(b) = line.ink {
            let r = Rect::from_edges(origin + b.x0, baseline + b.y0, origin + b.x1, baseline + b.y1);
            ink = Some(ink.map_or(r, |u| u.union(&r)));
        }
        placed.push(Placed {
            page,
            owner: Some(owner),
            payload: Payload::Text { face, px, text: line.text, x: origin, baseline, color: band.color, clip: None },
        });
    }
    if band.rule {
        let r = Rect::new(frame.body.x, rule_y, frame.body.w, stroke as u32);
        ink = Some(ink.map_or(r, |u| u.union(&r)));
        placed.push(Placed { page, owner: Some(owner), payload: Payload::Fill { rect: r, color: band.color } });
    }
    match ink {
        Some(r) => elements.push(LayoutElement {
            category: crate::annotate::Category::HeaderFooter,
            bbox: PageBox::new(page, r),
            element_id,
            parent_id: None,
        }),
        None => {
            // nothing visible: drop any payloads claiming this owner
            placed.retain(|p| p.owner != Some(owner));
        }
    }
    Ok(())
}

/// The longest prefix of `words` that fits in `width` on one line.
fn fit_words(
    fonts: &FontBook,
    face: FaceId,
    px: f32,
    words: &[&str],
    width: i32,
) -> Result<Option<MeasuredLine>, LayoutError> {
    let mut n = words.len();
    while n > 0 {
        let m = measure_text(fonts, face, px, &words[..n], width)?;
        if m.lines.len() == 1 && m.lines[0].extent() <= width {
            return Ok(m.lines.into_iter().next());
        }
        n -= 1;
    }
    Ok(None)
}
