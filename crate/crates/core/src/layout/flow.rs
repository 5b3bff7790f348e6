//! Column and page flow of blocks.

use crate::annotate::LayoutElement;
use crate::subnets::{BorderType, HAlign};

use super::blocks::{outline, Atomic, Block, Body, Decoration, Item, Slot};
use super::{Frame, LayoutError, PageBox, PageGeometry, Payload, Placed, Rect};

struct Fragment {
    page: usize,
    band: (i32, i32),
    top: i32,
    bottom: i32,
    frame: Option<Rect>,
    ink: Option<Rect>,
    items: Vec<(Payload, Option<usize>)>,
    cells: Vec<(u32, Rect)>,
}

impl Fragment {
    fn new(page: usize, band: (i32, i32), top: i32) -> Self {
        Self { page, band, top, bottom: top, frame: None, ink: None, items: vec![], cells: vec![] }
    }
}

pub(super) struct Flow<'f> {
    frame: &'f Frame,
    bottom: i32,
    first_top: i32,
    page: usize,
    col: usize,
    y: i32,
    pages: usize,
    placed: Vec<Placed>,
    elements: Vec<LayoutElement>,
}

fn offset(align: HAlign, avail: i32, w: i32) -> i32 {
    match align {
        HAlign::Left => 0,
        HAlign::Center => (avail - w) / 2,
        HAlign::Right => avail - w,
    }
    .max(0)
}

fn translate(item: Item, dx: i32, dy: i32) -> Payload {
    match item {
        Item::Text { face, px, text, x, baseline, color, clip } => Payload::Text {
            face,
            px,
            text,
            x: x + dx,
            baseline: baseline + dy,
            color,
            clip: clip.map(|c| c.translate(dx, dy)),
        },
        Item::Fill { rect, color } => Payload::Fill { rect: rect.translate(dx, dy), color },
    }
}

impl<'f> Flow<'f> {
    pub fn new(frame: &'f Frame, _geometry: &PageGeometry) -> Self {
        Self {
            frame,
            bottom: frame.body.bottom(),
            first_top: frame.body.y,
            page: 0,
            col: 0,
            y: frame.body.y,
            pages: 1,
            placed: vec![],
            elements: vec![],
        }
    }

    fn col_top(&self) -> i32 {
        if self.page == 0 {
            self.first_top
        } else {
            self.frame.body.y
        }
    }

    fn at_top(&self) -> bool {
        self.y <= self.col_top()
    }

    fn band(&self) -> (i32, i32) {
        (self.frame.column_x[self.col], self.frame.column_w[self.col])
    }

    fn advance(&mut self) {
        if self.col + 1 < self.frame.column_x.len() {
            self.col += 1;
        } else {
            self.col = 0;
            self.page += 1;
            self.pages = self.pages.max(self.page + 1);
        }
        self.y = self.col_top();
    }

    fn too_large(block: &Block, needed: i32, available: i32) -> LayoutError {
        LayoutError::ElementTooLargeForPage { element: format!("{:?} {}", block.category, block.element_id), needed, available }
    }

    /// Title across the full body width at the top of the first page.
    pub fn place_title(&mut self, block: Block) -> Result<(), LayoutError> {
        let band = (self.frame.body.x, self.frame.body.w as i32);
        let available = self.bottom - self.y;
        if let Body::Lines { slots, .. } = &block.body {
            let needed: i32 = slots.iter().map(|s| s.h).sum::<i32>() + block.post;
            if needed > available {
                return Err(Self::too_large(&block, needed, available));
            }
        }
        self.place_lines(block, Some(band))?;
        self.first_top = self.y;
        Ok(())
    }

    pub fn place(&mut self, block: Block) -> Result<(), LayoutError> {
        match block.body {
            Body::Lines { .. } => self.place_lines(block, None),
            Body::Atomic { .. } => self.place_atomic(block),
        }
    }

    fn place_lines(&mut self, block: Block, fixed: Option<(i32, i32)>) -> Result<(), LayoutError> {
        let Body::Lines { slots, framed, decoration } = &block.body else { unreachable!() };
        if !self.at_top() {
            self.y += block.pre;
        }
        let mut frag = Fragment::new(self.page, fixed.unwrap_or(self.band()), self.y);
        for slot in slots {
            if self.y + slot.h > self.bottom {
                let column = self.bottom - self.frame.body.y;
                if slot.h > column || fixed.is_some() {
                    return Err(Self::too_large(&block, slot.h, column));
                }
                self.close(&block, *framed, decoration.as_ref(), frag);
                self.advance();
                frag = Fragment::new(self.page, self.band(), self.y);
            }
            self.put_slot(&block, slot, &mut frag);
            self.y += slot.h;
        }
        self.close(&block, *framed, decoration.as_ref(), frag);
        self.y += block.post;
        Ok(())
    }

    fn put_slot(&mut self, block: &Block, slot: &Slot, frag: &mut Fragment) {
        let (cx, cw) = frag.band;
        let avail = cw - 2 * block.inset;
        let sx = cx + block.inset + offset(slot.align, avail, slot.w);
        let sy = self.y;
        let first_cell = frag.cells.len();
        for (item, cell) in &slot.items {
            frag.items.push((translate(item.clone(), sx, sy), cell.map(|c| first_cell + c)));
        }
        frag.cells.extend(slot.cells.iter().map(|(id, r)| (*id, r.translate(sx, sy))));
        if let Some(ink) = slot.ink {
            let r = ink.translate(sx, sy);
            frag.ink = Some(frag.ink.map_or(r, |u| u.union(&r)));
        }
        let r = Rect::new(sx, sy, slot.w.max(0) as u32, slot.h.max(0) as u32);
        frag.frame = Some(frag.frame.map_or(r, |u| u.union(&r)));
        frag.bottom = sy + slot.h;
    }

    fn close(&mut self, block: &Block, framed: bool, decoration: Option<&Decoration>, frag: Fragment) {
        if frag.frame.is_none() {
            return;
        }
        let (cx, cw) = frag.band;
        let deco_rect = Rect::from_edges(cx, frag.top, cx + cw, frag.bottom);
        let mut bbox = if framed { frag.frame } else { frag.ink };
        let mut payloads = Vec::new();
        if let Some(d) = decoration {
            bbox = Some(bbox.map_or(deco_rect, |b| b.union(&deco_rect)));
            if let Some(color) = d.fill {
                payloads.push(Payload::Fill { rect: deco_rect, color });
            }
            let s = d.stroke.max(1) as u32;
            let strokes = match d.border {
                BorderType::None => vec![],
                BorderType::Box => outline(deco_rect, d.stroke, d.color),
                BorderType::TopRule => vec![Item::Fill { rect: Rect::new(cx, frag.top, cw as u32, s), color: d.color }],
                BorderType::LeftBar => {
                    let w = (2 * s).min((block.inset - 1).max(1) as u32);
                    vec![Item::Fill { rect: Rect::new(cx, frag.top, w, deco_rect.h), color: d.color }]
                }
            };
            payloads.extend(strokes.into_iter().map(|i| translate(i, 0, 0)));
        }
        let owner = bbox.map(|b| {
            self.elements.push(LayoutElement {
                category: block.category,
                bbox: PageBox::new(frag.page, b),
                element_id: block.element_id,
                parent_id: block.parent_id,
            });
            self.elements.len() - 1
        });
        for (id, r) in &frag.cells {
            self.elements.push(LayoutElement {
                category: crate::annotate::Category::TableCell,
                bbox: PageBox::new(frag.page, *r),
                element_id: *id,
                parent_id: Some(block.element_id),
            });
        }
        let page = frag.page;
        self.placed.extend(payloads.into_iter().map(|payload| Placed { page, owner, payload }));
        for (payload, cell) in frag.items {
            let owner = match (owner, cell) {
                (Some(o), Some(c)) => Some(o + 1 + c),
                (o, _) => o,
            };
            self.placed.push(Placed { page, owner, payload });
        }
    }

    fn place_atomic(&mut self, block: Block) -> Result<(), LayoutError> {
        let Body::Atomic { w, h, align, content } = &block.body else { unreachable!() };
        let (w, h) = (*w, *h);
        if !self.at_top() {
            self.y += block.pre;
        }
        let scale = loop {
            let avail = self.bottom - self.y;
            if h <= avail {
                break 1.0;
            }
            if f64::from(h) * 0.75 <= f64::from(avail) {
                break f64::from(avail) / f64::from(h);
            }
            if self.at_top() && (self.page > 0 || self.first_top == self.frame.body.y) {
                return Err(Self::too_large(&block, h, avail));
            }
            self.advance();
        };
        let (sw, sh) = ((f64::from(w) * scale).floor() as i32, (f64::from(h) * scale).floor() as i32);
        let (cx, cw) = self.band();
        let rect = Rect::new(cx + offset(*align, cw, sw), self.y, sw as u32, sh as u32);
        let payload = match content {
            Atomic::Chart { subplots, colors, axis, background } => Payload::Chart {
                rect,
                subplots: subplots.clone(),
                colors: colors.clone(),
                axis: *axis,
                background: *background,
            },
            Atomic::Image(path) => Payload::Image { rect, path: path.clone() },
        };
        self.elements.push(LayoutElement {
            category: block.category,
            bbox: PageBox::new(self.page, rect),
            element_id: block.element_id,
            parent_id: block.parent_id,
        });
        self.placed.push(Placed { page: self.page, owner: Some(self.elements.len() - 1), payload });
        self.y += sh + block.post;
        Ok(())
    }

    pub fn finish(self) -> (usize, Vec<Placed>, Vec<LayoutElement>) {
        (self.pages, self.placed, self.elements)
    }
}
