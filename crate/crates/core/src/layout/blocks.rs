//! Element plans to flowable blocks of line slots.

use std::path::PathBuf;

use crate::annotate::Category;
use crate::color::Rgb;
use crate::fonts::{quantize_px, FaceId, InkBox};
use crate::subnets::{
    BorderType, BulletPlan, BulletType, CaptionPlan, CaptionPosition, CellContent, CellLines, DocumentPlan,
    ElementPlan, EquationPlan, FigurePlan, FigureSource, FontStyle, HAlign, ParagraphPlan, SectionPlan,
    SubplotPlan, TableBorders, TablePlan,
};

use super::text::{measure_text, MeasuredLine, VerticalMetrics};
use super::{LayoutError, LayoutResources, Rect};

/// Split `total` pixels by `fractions`: every part is floored and the last
/// part absorbs the remainder, so the parts always sum to `total`.
pub fn column_widths(fractions: &[f64], total: i32) -> Vec<i32> {
    let total = total.max(0);
    let n = fractions.len();
    let mut out = Vec::with_capacity(n);
    let mut used = 0;
    for (i, f) in fractions.iter().enumerate() {
        if i + 1 == n {
            out.push(total - used);
        } else {
            let w = ((f.max(0.0) * f64::from(total)).floor() as i32).min(total - used);
            used += w;
            out.push(w);
        }
    }
    out
}

const MIN_FIGURE: i32 = 44;

#[derive(Clone, Debug)]
pub(super) enum Item {
    Text { face: FaceId, px: f32, text: String, x: i32, baseline: i32, color: Rgb, clip: Option<Rect> },
    Fill { rect: Rect, color: Rgb },
}

/// An indivisible horizontal strip; coordinates are relative to its top-left.
#[derive(Clone, Debug)]
pub(super) struct Slot {
    pub h: i32,
    pub w: i32,
    pub align: HAlign,
    /// Items with the index of the cell they belong to.
    pub items: Vec<(Item, Option<usize>)>,
    pub ink: Option<Rect>,
    pub cells: Vec<(u32, Rect)>,
}

#[derive(Clone, Debug)]
pub(super) struct Decoration {
    pub fill: Option<Rgb>,
    pub border: BorderType,
    pub color: Rgb,
    pub stroke: i32,
}

#[derive(Clone, Debug)]
pub(super) enum Atomic {
    Chart { subplots: Vec<SubplotPlan>, colors: Vec<Rgb>, axis: Rgb, background: Rgb },
    Image(PathBuf),
}

#[derive(Clone, Debug)]
pub(super) enum Body {
    /// Breakable between slots. Framed blocks take the slot extents as their
    /// box; others take the ink.
    Lines { slots: Vec<Slot>, framed: bool, decoration: Option<Decoration> },
    Atomic { w: i32, h: i32, align: HAlign, content: Atomic },
}

#[derive(Clone, Debug)]
pub(super) struct Block {
    pub category: Category,
    pub element_id: u32,
    pub parent_id: Option<u32>,
    pub pre: i32,
    pub post: i32,
    /// Horizontal inset on both sides of the column.
    pub inset: i32,
    pub body: Body,
}

pub(super) struct Builder<'a> {
    res: LayoutResources<'a>,
    family: usize,
    base: f64,
    color: Rgb,
    background: Rgb,
    width: i32,
    next_id: u32,
    forced: usize,
}

fn px_of(base: f64, scale: f64) -> f32 {
    quantize_px(base * scale).max(1.0)
}

fn union_ink(a: Option<InkBox>, b: Option<InkBox>) -> Option<InkBox> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.union(b)),
        (a, b) => a.or(b),
    }
}

impl<'a> Builder<'a> {
    pub fn new(res: &LayoutResources<'a>, plan: &DocumentPlan, base: f64, width: i32) -> Self {
        Self {
            res: *res,
            family: plan.shared_style.font_index,
            base,
            color: plan.shared_style.text_color,
            background: plan.background,
            width,
            next_id: 0,
            forced: 0,
        }
    }

    pub fn next_id(&self) -> u32 {
        self.next_id
    }

    pub fn forced_breaks(&self) -> usize {
        self.forced
    }

    fn alloc(&mut self) -> u32 {
        self.next_id += 1;
        self.next_id - 1
    }

    fn face(&self, style: FontStyle) -> FaceId {
        self.res.fonts.resolve_face(self.family, style)
    }

    fn space(&self, multiple: f64) -> i32 {
        (multiple.max(0.0) * self.base).round() as i32
    }

    fn vocab(&self, tokens: &[usize]) -> Vec<&'a str> {
        let v = &self.res.corpus.vocabulary;
        tokens.iter().filter_map(|&t| v.get(t).map(String::as_str)).collect()
    }

    fn sentence_words(&self, refs: &[usize]) -> Vec<&'a str> {
        let corpus = self.res.corpus;
        if corpus.sentences.is_empty() {
            return self.vocab(refs);
        }
        refs.iter().filter_map(|&i| corpus.sentences.get(i)).flat_map(|s| s.split_whitespace()).collect()
    }

    fn lines(&mut self, face: FaceId, px: f32, words: &[&str], width: i32) -> Result<Vec<MeasuredLine>, LayoutError> {
        let m = measure_text(self.res.fonts, face, px, words, width.max(1))?;
        self.forced += m.forced_breaks;
        Ok(m.lines)
    }

    fn line_slots(&self, face: FaceId, px: f32, lines: Vec<MeasuredLine>, spacing: f64, align: HAlign, color: Rgb) -> Vec<Slot> {
        let vm = VerticalMetrics::new(self.res.fonts, face, px);
        lines
            .into_iter()
            .map(|line| {
                let s = vm.slot(line.ink, spacing);
                let x = -line.left();
                let ink = line.ink.map(|b| Rect::from_edges(b.x0 + x, b.y0 + s.baseline, b.x1 + x, b.y1 + s.baseline));
                let w = line.extent();
                let text = Item::Text { face, px, text: line.text, x, baseline: s.baseline, color, clip: None };
                Slot { h: s.height, w, align, items: vec![(text, None)], ink, cells: vec![] }
            })
            .collect()
    }

    fn text_block(&mut self, plan: &SectionPlan, width: i32, category: Category) -> Result<Block, LayoutError> {
        let style = &plan.style;
        let decorated = style.back_color.0.is_some() || style.border_type != BorderType::None;
        let stroke = ((self.base / 12.0).round() as i32).max(1);
        let inset = if decorated { self.space(0.4).max(stroke + 2) } else { 0 };
        let face = self.face(style.font_style);
        let px = px_of(self.base, style.font_scale);
        let mut lines = Vec::new();
        for tokens in &plan.tokens {
            let words = self.vocab(tokens);
            lines.extend(self.lines(face, px, &words, width - 2 * inset)?);
        }
        let slots = self.line_slots(face, px, lines, 1.2, style.align, style.fore_color);
        let decoration = decorated.then_some(Decoration {
            fill: style.back_color.0,
            border: style.border_type,
            color: style.border_color,
            stroke,
        });
        Ok(Block {
            category,
            element_id: self.alloc(),
            parent_id: None,
            pre: self.space(style.pre_space),
            post: self.space(style.post_space),
            inset,
            body: Body::Lines { slots, framed: false, decoration },
        })
    }

    pub fn title(&mut self, plan: &SectionPlan, width: i32) -> Result<Block, LayoutError> {
        self.text_block(plan, width, Category::Title)
    }

    pub fn element(&mut self, element: &ElementPlan) -> Result<Vec<Block>, LayoutError> {
        Ok(match element {
            ElementPlan::Section(s) => vec![self.text_block(s, self.width, Category::Section)?],
            ElementPlan::Paragraph(p) => vec![self.paragraph(p)?],
            ElementPlan::Bullet(b) => vec![self.bullet(b)?],
            ElementPlan::Equation(e) => vec![self.equation(e)?],
            ElementPlan::Figure(f) => self.figure(f)?,
            ElementPlan::Table(t) => self.table(t)?,
        })
    }

    fn paragraph(&mut self, p: &ParagraphPlan) -> Result<Block, LayoutError> {
        let face = self.face(FontStyle::Regular);
        let px = px_of(self.base, 1.0);
        let words = self.sentence_words(&p.sentences);
        let mut lines = self.lines(face, px, &words, self.width)?;
        lines.truncate(p.line_count.max(1));
        let slots = self.line_slots(face, px, lines, p.line_spacing, HAlign::Left, self.color);
        Ok(Block {
            category: Category::Paragraph,
            element_id: self.alloc(),
            parent_id: None,
            pre: 0,
            post: self.space(p.block_spacing),
            inset: 0,
            body: Body::Lines { slots, framed: false, decoration: None },
        })
    }

    fn bullet(&mut self, b: &BulletPlan) -> Result<Block, LayoutError> {
        let face = self.face(FontStyle::Regular);
        let px = px_of(self.base, 1.0);
        let vm = VerticalMetrics::new(self.res.fonts, face, px);
        let mut slots = Vec::new();
        for (k, item) in b.items.iter().enumerate() {
            let marker = match b.bullet_type {
                BulletType::Disc => "\u{2022}".to_string(),
                BulletType::Dash => "\u{2013}".to_string(),
                BulletType::Number => format!("{}.", k + 1),
                BulletType::Square => "\u{25AA}".to_string(),
            };
            let mline = self.lines(face, px, &[marker.as_str()], self.width)?.into_iter().next();
            let mext = mline.as_ref().map_or(0, MeasuredLine::extent);
            let text_x = self.space(b.offset).max(mext + self.space(0.4)).min(self.width / 2);
            let words = self.sentence_words(&item.sentences);
            let mut lines = self.lines(face, px, &words, self.width - text_x)?;
            lines.truncate(item.line_count.max(1));
            for (j, line) in lines.into_iter().enumerate() {
                let first = j == 0;
                let marker_ink = if first { mline.as_ref().and_then(|m| m.ink) } else { None };
                let s = vm.slot(union_ink(line.ink, marker_ink), b.line_spacing);
                let gap = if k > 0 && first { self.space(b.block_spacing * 0.5) } else { 0 };
                let baseline = s.baseline + gap;
                let mut items = Vec::new();
                let mut ink: Option<Rect> = None;
                let mut add = |ml: &MeasuredLine, x: i32, items: &mut Vec<(Item, Option<usize>)>| {
                    if let Some(bx) = ml.ink {
                        let r = Rect::from_edges(bx.x0 + x, bx.y0 + baseline, bx.x1 + x, bx.y1 + baseline);
                        ink = Some(ink.map_or(r, |u| u.union(&r)));
                    }
                    let text = ml.text.clone();
                    items.push((Item::Text { face, px, text, x, baseline, color: self.color, clip: None }, None));
                };
                if let (true, Some(m)) = (first, mline.as_ref()) {
                    add(m, -m.left(), &mut items);
                }
                add(&line, text_x - line.left(), &mut items);
                slots.push(Slot { h: s.height + gap, w: self.width, align: HAlign::Left, items, ink, cells: vec![] });
            }
        }
        Ok(Block {
            category: Category::Bullet,
            element_id: self.alloc(),
            parent_id: None,
            pre: 0,
            post: self.space(b.block_spacing),
            inset: 0,
            body: Body::Lines { slots, framed: false, decoration: None },
        })
    }

    fn equation(&mut self, e: &EquationPlan) -> Result<Block, LayoutError> {
        let fonts = self.res.fonts;
        let (italic, roman) = (self.face(FontStyle::Italic), self.face(FontStyle::Regular));
        let mut scale = 1.0;
        loop {
            let p = px_of(self.base, scale);
            let gap = (e.spacing * 0.25 * f64::from(p)).round() as i32;
            let mut pen = 0;
            let mut ink: Option<InkBox> = None;
            let mut parts = Vec::with_capacity(e.groups.len());
            for (i, g) in e.groups.iter().enumerate() {
                let gpx = if g.level == 0 { p } else { quantize_px(f64::from(p) * 0.7).max(1.0) };
                let face = if g.level == 0 && g.text.chars().any(char::is_alphabetic) { italic } else { roman };
                let run = fonts.shape(face, &g.text, gpx).map_err(LayoutError::FontGlyphMissing)?;
                let shift = match g.level {
                    1 => -(f64::from(p) * 0.45).round() as i32,
                    -1 => (f64::from(p) * 0.2).round() as i32,
                    _ => 0,
                };
                if i > 0 && g.level == 0 {
                    pen += gap;
                }
                if let Some(b) = run.ink {
                    let b = InkBox { x0: b.x0 + pen, x1: b.x1 + pen, y0: b.y0 + shift, y1: b.y1 + shift };
                    ink = union_ink(ink, Some(b));
                }
                parts.push((face, gpx, g.text.clone(), pen, shift));
                pen += run.advance.ceil() as i32;
            }
            let left = ink.map_or(0, |b| b.x0.min(0));
            let extent = ink.map_or(pen, |b| b.x1.max(pen)) - left;
            if extent > self.width && scale > 0.2 {
                scale *= 0.85;
                continue;
            }
            let vm = VerticalMetrics::new(fonts, roman, p);
            let s = vm.slot(ink, 1.0);
            let items = parts
                .into_iter()
                .map(|(face, px, text, x, shift)| {
                    let item = Item::Text { face, px, text, x: x - left, baseline: s.baseline + shift, color: self.color, clip: None };
                    (item, None)
                })
                .collect();
            let ink = ink.map(|b| Rect::from_edges(b.x0 - left, b.y0 + s.baseline, b.x1 - left, b.y1 + s.baseline));
            let slot = Slot { h: s.height, w: extent, align: HAlign::Center, items, ink, cells: vec![] };
            return Ok(Block {
                category: Category::Equation,
                element_id: self.alloc(),
                parent_id: None,
                pre: self.space(e.spacing * 0.5),
                post: self.space(e.spacing * 0.5),
                inset: 0,
                body: Body::Lines { slots: vec![slot], framed: false, decoration: None },
            });
        }
    }

    fn caption(&mut self, cap: &CaptionPlan, owner_w: i32, parent: u32, id: u32) -> Result<Block, LayoutError> {
        let face = self.face(cap.font_style);
        let px = px_of(self.base, cap.font_scale);
        let width = owner_w.max(self.width / 3).min(self.width);
        let mut lines = Vec::new();
        for tokens in &cap.tokens {
            let words = self.vocab(tokens);
            lines.extend(self.lines(face, px, &words, width)?);
        }
        lines.truncate(3);
        let slots = self.line_slots(face, px, lines, 1.1, HAlign::Center, self.color);
        Ok(Block {
            category: Category::Caption,
            element_id: id,
            parent_id: Some(parent),
            pre: 0,
            post: 0,
            inset: 0,
            body: Body::Lines { slots, framed: false, decoration: None },
        })
    }

    /// Order an element and its optional caption, moving the element's outer
    /// spacing onto the pair.
    fn with_caption(
        &mut self,
        mut owner: Block,
        cap: Option<(&CaptionPlan, u32)>,
        owner_w: i32,
    ) -> Result<Vec<Block>, LayoutError> {
        let Some((cap, id)) = cap else { return Ok(vec![owner]) };
        let mut caption = self.caption(cap, owner_w, owner.element_id, id)?;
        let gap = self.space(0.4);
        Ok(match cap.position {
            CaptionPosition::Above => {
                caption.pre = owner.pre;
                caption.post = gap;
                owner.pre = 0;
                vec![caption, owner]
            }
            CaptionPosition::Below => {
                caption.post = owner.post;
                owner.post = gap;
                vec![owner, caption]
            }
        })
    }

    fn figure(&mut self, f: &FigurePlan) -> Result<Vec<Block>, LayoutError> {
        // shrinking by a quarter must keep charts drawable
        let w = ((f.width_fraction * f64::from(self.width)).round() as i32).clamp(MIN_FIGURE.min(self.width), self.width);
        let h = ((f.height_fraction * f64::from(self.width)).round() as i32).max(MIN_FIGURE);
        let content = match &f.source {
            FigureSource::SyntheticChart { subplots } => {
                let colors = if self.res.chart_colors.is_empty() { vec![self.color] } else { self.res.chart_colors.to_vec() };
                Atomic::Chart { subplots: subplots.clone(), colors, axis: self.color, background: self.background }
            }
            FigureSource::LibraryImage { path } => Atomic::Image(self.res.images_root.join(path)),
        };
        let element_id = self.alloc();
        let caption = f.caption.as_ref().map(|c| (c, self.alloc()));
        let owner = Block {
            category: Category::Figure,
            element_id,
            parent_id: None,
            pre: self.space(f.pre_space),
            post: self.space(f.post_space),
            inset: 0,
            body: Body::Atomic { w, h, align: HAlign::Center, content },
        };
        self.with_caption(owner, caption, w)
    }

    fn cell_words(&self, content: &CellContent) -> Vec<&'a str> {
        let qa = &self.res.corpus.qa_pairs;
        match content {
            CellContent::Empty => vec![],
            CellContent::Tokens(lines) => lines.iter().flat_map(|l| self.vocab(l)).collect(),
            CellContent::Question(i) => qa.get(*i).map(|p| p.0.split_whitespace().collect()).unwrap_or_default(),
            CellContent::Answer(i) => qa.get(*i).map(|p| p.1.split_whitespace().collect()).unwrap_or_default(),
        }
    }

    fn table(&mut self, t: &TablePlan) -> Result<Vec<Block>, LayoutError> {
        let id = self.alloc();
        let cols = t.cols.max(1);
        let table_w = ((t.width_fraction.clamp(0.05, 1.0) * f64::from(self.width)).round() as i32)
            .clamp((2 * cols as i32).min(self.width), self.width);
        let fractions = if t.cell_width_fractions.len() == cols {
            t.cell_width_fractions.clone()
        } else {
            vec![1.0 / cols as f64; cols]
        };
        let widths = column_widths(&fractions, table_w);
        let mut xs = Vec::with_capacity(cols);
        let mut acc = 0;
        for &w in &widths {
            xs.push(acc);
            acc += w;
        }
        let hp = self.space(t.h_pad);
        let vp = self.space(t.v_pad);
        let px = px_of(self.base, t.font_scale);
        let stroke = ((self.base / 16.0).round() as i32).max(1);
        let stripe = self.background.lerp(self.color, 0.08);

        let caption = t.caption.as_ref().map(|c| (c, self.alloc()));
        let mut slots = Vec::with_capacity(t.rows);
        for (r, row) in t.cells.iter().enumerate() {
            let header = t.header_row && r == 0;
            let mut texts = Vec::with_capacity(cols);
            let mut content_h = 0;
            let mut min_h = 0;
            for (c, cell) in row.iter().enumerate().take(cols) {
                let style = cell.font_style.unwrap_or(if header { t.header_style } else { t.font_style });
                let face = self.face(style);
                let vm = VerticalMetrics::new(self.res.fonts, face, px);
                min_h = min_h.max(vm.ascent + vm.descent);
                let words = self.cell_words(&cell.content);
                let mut lines = self.lines(face, px, &words, widths[c] - 2 * hp)?;
                let keep = match (cell.lines, &cell.content) {
                    (_, CellContent::Question(_) | CellContent::Answer(_)) => 4,
                    (CellLines::Empty, _) => 0,
                    (CellLines::Single, _) => 1,
                    (CellLines::Wrapped, _) => 4,
                };
                lines.truncate(keep);
                let placed: Vec<_> = lines.into_iter().map(|l| (vm.slot(l.ink, 1.0), l)).collect();
                content_h = content_h.max(placed.iter().map(|(s, _)| s.height).sum::<i32>());
                texts.push((face, placed));
            }
            let row_h = content_h.max(min_h) + 2 * vp;
            let mut items = Vec::new();
            let full = Rect::new(0, 0, table_w as u32, row_h as u32);
            if header {
                if let Some(color) = t.header_fill.0 {
                    items.push((Item::Fill { rect: full, color }, None));
                }
            } else if t.stripe && (r - usize::from(t.header_row)) % 2 == 1 {
                items.push((Item::Fill { rect: full, color: stripe }, None));
            }
            let mut cells = Vec::with_capacity(cols);
            for (c, (face, lines)) in texts.into_iter().enumerate() {
                let cell = Rect::new(xs[c], 0, widths[c] as u32, row_h as u32);
                let align = if t.question_answer { HAlign::Left } else { t.cell_align };
                let inner = (widths[c] - 2 * hp).max(0);
                let mut y = vp;
                for (s, line) in lines {
                    let off = match align {
                        HAlign::Left => 0,
                        HAlign::Center => (inner - line.extent()) / 2,
                        HAlign::Right => inner - line.extent(),
                    }
                    .max(0);
                    let x = xs[c] + hp + off - line.left();
                    let item = Item::Text { face, px, text: line.text, x, baseline: y + s.baseline, color: self.color, clip: Some(cell) };
                    items.push((item, Some(c)));
                    y += s.height;
                }
                cells.push((self.alloc(), cell));
            }
            self.borders(t, r, &xs, &widths, table_w, row_h, stroke, &mut items);
            slots.push(Slot { h: row_h, w: table_w, align: t.align, items, ink: None, cells });
        }
        let owner = Block {
            category: Category::Table,
            element_id: id,
            parent_id: None,
            pre: self.space(t.pre_space),
            post: self.space(t.post_space),
            inset: 0,
            body: Body::Lines { slots, framed: true, decoration: None },
        };
        self.with_caption(owner, caption, table_w)
    }

    #[allow(clippy::too_many_arguments)]
    fn borders(
        &self,
        t: &TablePlan,
        r: usize,
        xs: &[i32],
        widths: &[i32],
        table_w: i32,
        row_h: i32,
        stroke: i32,
        items: &mut Vec<(Item, Option<usize>)>,
    ) {
        let color = self.color;
        let last = r + 1 == t.rows;
        let h = |y: i32| (Item::Fill { rect: Rect::new(0, y, table_w as u32, stroke as u32), color }, None);
        let v = |x: i32| (Item::Fill { rect: Rect::new(x, 0, stroke as u32, row_h as u32), color }, None);
        match t.borders {
            TableBorders::None => {}
            TableBorders::Rows => {
                if r > 0 {
                    items.push(h(0));
                }
            }
            TableBorders::Columns => items.extend(xs.iter().skip(1).map(|&x| v(x))),
            TableBorders::Header => {
                if r == 0 || (t.header_row && r == 1) {
                    items.push(h(0));
                }
                if last {
                    items.push(h(row_h - stroke));
                }
            }
            TableBorders::Grid => {
                items.push(h(0));
                if last {
                    items.push(h(row_h - stroke));
                }
                items.push(v(0));
                items.push(v(table_w - stroke));
                items.extend(xs.iter().skip(1).map(|&x| v(x)));
            }
            TableBorders::Cells => {
                for (c, &x) in xs.iter().enumerate() {
                    let cell = Rect::new(x + 1, 1, (widths[c] - 2).max(0) as u32, (row_h - 2).max(0) as u32);
                    items.extend(outline(cell, stroke, color).into_iter().map(|i| (i, Some(c))));
                }
            }
        }
    }
}

/// Four strokes drawn just inside `r`.
pub(super) fn outline(r: Rect, stroke: i32, color: Rgb) -> Vec<Item> {
    let s = (stroke.max(1) as u32).min(r.w.min(r.h));
    if s == 0 {
        return vec![];
    }
    vec![
        Item::Fill { rect: Rect::new(r.x, r.y, r.w, s), color },
        Item::Fill { rect: Rect::new(r.x, r.bottom() - s as i32, r.w, s), color },
        Item::Fill { rect: Rect::new(r.x, r.y, s, r.h), color },
        Item::Fill { rect: Rect::new(r.right() - s as i32, r.y, s, r.h), color },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_floor_with_remainder_on_last() {
        assert_eq!(column_widths(&[0.5, 0.5], 301), vec![150, 151]);
        assert_eq!(column_widths(&[1.0], 77), vec![77]);
        assert_eq!(column_widths(&[0.2, 0.3, 0.5], 100).iter().sum::<i32>(), 100);
        assert_eq!(column_widths(&[0.999, 0.001], 0), vec![0, 0]);
    }
}
