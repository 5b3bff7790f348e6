//! Greedy line breaking and vertical line metrics.

use crate::fonts::{FaceId, FontBook, InkBox};

use super::LayoutError;

/// A laid-out line: its text, pen advance and ink relative to its origin.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredLine {
    pub text: String,
    pub advance: f32,
    pub ink: Option<InkBox>,
}

impl MeasuredLine {
    /// Left edge of everything the line occupies, relative to its origin.
    pub fn left(&self) -> i32 {
        self.ink.map_or(0, |b| b.x0.min(0))
    }

    /// Right edge of everything the line occupies, relative to its origin.
    pub fn right(&self) -> i32 {
        let adv = self.advance.ceil() as i32;
        self.ink.map_or(adv, |b| b.x1.max(adv))
    }

    pub fn extent(&self) -> i32 {
        self.right() - self.left()
    }
}

/// Result of breaking a token sequence into lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TextMeasure {
    pub lines: Vec<MeasuredLine>,
    /// Tight ink box of all lines stacked at unit spacing, relative to the
    /// block's top-left corner with lines left-aligned.
    pub extent: Option<InkBox>,
    /// Tokens wider than the line that had to be broken between glyphs.
    pub forced_breaks: usize,
}

#[derive(Clone)]
struct LineState {
    text: String,
    pen: f32,
    ink: Option<InkBox>,
}

impl LineState {
    fn empty() -> Self {
        Self { text: String::new(), pen: 0.0, ink: None }
    }

    fn extent(&self) -> i32 {
        let adv = self.pen.ceil() as i32;
        let right = self.ink.map_or(adv, |b| b.x1.max(adv));
        let left = self.ink.map_or(0, |b| b.x0.min(0));
        right - left
    }

    fn push(&mut self, fonts: &FontBook, face: FaceId, px: f32, piece: &str) -> Result<(), LayoutError> {
        for ch in piece.chars() {
            let g = fonts.glyph(face, ch, px).ok_or(LayoutError::FontGlyphMissing(ch))?;
            let x = self.pen.round() as i32 + g.xmin;
            let y = -(g.ymin + g.height as i32);
            if let Some((x0, y0, x1, y1)) = g.ink {
                let b = InkBox { x0: x + x0 as i32, y0: y + y0 as i32, x1: x + x1 as i32, y1: y + y1 as i32 };
                self.ink = Some(self.ink.map_or(b, |r| r.union(b)));
            }
            self.pen += g.advance;
            self.text.push(ch);
        }
        Ok(())
    }

    fn finish(self) -> MeasuredLine {
        MeasuredLine { text: self.text, advance: self.pen, ink: self.ink }
    }
}

/// Greedy first-fit breaking at token boundaries. A token that does not fit
/// on an empty line is broken between glyphs and counted in `forced_breaks`.
pub fn measure_text(
    fonts: &FontBook,
    face: FaceId,
    px: f32,
    tokens: &[&str],
    max_width: i32,
) -> Result<TextMeasure, LayoutError> {
    let mut out = TextMeasure::default();
    let mut cur = LineState::empty();
    for token in tokens.iter().filter(|t| !t.is_empty()) {
        if !cur.text.is_empty() {
            let mut candidate = cur.clone();
            candidate.push(fonts, face, px, " ")?;
            candidate.push(fonts, face, px, token)?;
            if candidate.extent() <= max_width {
                cur = candidate;
                continue;
            }
            out.lines.push(std::mem::replace(&mut cur, LineState::empty()).finish());
        }
        let mut whole = LineState::empty();
        whole.push(fonts, face, px, token)?;
        if whole.extent() <= max_width {
            cur = whole;
            continue;
        }
        out.forced_breaks += 1;
        for ch in token.chars() {
            let mut candidate = cur.clone();
            candidate.push(fonts, face, px, ch.encode_utf8(&mut [0u8; 4]))?;
            if candidate.extent() <= max_width || cur.text.is_empty() {
                cur = candidate;
            } else {
                out.lines.push(std::mem::replace(&mut cur, LineState::empty()).finish());
                cur.push(fonts, face, px, ch.encode_utf8(&mut [0u8; 4]))?;
            }
        }
    }
    if !cur.text.is_empty() {
        out.lines.push(cur.finish());
    }
    let metrics = VerticalMetrics::new(fonts, face, px);
    let mut top = 0;
    for line in &out.lines {
        let slot = metrics.slot(line.ink, 1.0);
        if let Some(b) = line.ink {
            let shift = -line.left();
            let placed = InkBox { x0: b.x0 + shift, x1: b.x1 + shift, y0: b.y0 + top + slot.baseline, y1: b.y1 + top + slot.baseline };
            out.extent = Some(out.extent.map_or(placed, |e| e.union(placed)));
        }
        top += slot.height;
    }
    Ok(out)
}

/// Font ascent and descent in whole pixels.
#[derive(Clone, Copy, Debug)]
pub struct VerticalMetrics {
    pub ascent: i32,
    pub descent: i32,
}

/// Height of a line slot and the baseline offset from its top.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LineSlot {
    pub baseline: i32,
    pub height: i32,
}

impl VerticalMetrics {
    pub fn new(fonts: &FontBook, face: FaceId, px: f32) -> Self {
        match fonts.line_metrics(face, px) {
            Some(m) => Self { ascent: m.ascent.ceil() as i32, descent: (-m.descent).ceil().max(0.0) as i32 },
            None => Self { ascent: px.ceil() as i32, descent: (px * 0.25).ceil() as i32 },
        }
    }

    /// A slot tall enough for the font's line box scaled by `spacing` and for
    /// any ink that reaches beyond it.
    pub fn slot(&self, ink: Option<InkBox>, spacing: f64) -> LineSlot {
        let base = self.ascent + self.descent;
        let spaced = ((f64::from(base) * spacing).round() as i32).max(base);
        let baseline = ink.map_or(self.ascent, |b| self.ascent.max(-b.y0));
        let below = ink.map_or(self.descent, |b| self.descent.max(b.y1));
        let height = (spaced + baseline - self.ascent).max(baseline + below);
        LineSlot { baseline, height }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subnets::FontStyle;

    fn setup() -> (FontBook, FaceId) {
        let fonts = FontBook::bundled_default();
        let face = fonts.resolve_face(1, FontStyle::Regular);
        (fonts, face)
    }

    #[test]
    fn empty_and_single() {
        let (fonts, face) = setup();
        let m = measure_text(&fonts, face, 20.0, &[], 100).unwrap();
        assert!(m.lines.is_empty() && m.extent.is_none());
        let m = measure_text(&fonts, face, 20.0, &["word"], 500).unwrap();
        assert_eq!(m.lines.len(), 1);
        assert_eq!(m.lines[0].text, "word");
    }

    #[test]
    fn exact_fit_then_wrap() {
        let (fonts, face) = setup();
        let tokens = ["mum", "nun", "mom"];
        let whole = fonts.shape(face, "mum nun mom", 20.0).unwrap();
        let ink = whole.ink.unwrap();
        let width = (whole.advance.ceil() as i32).max(ink.x1) - ink.x0.min(0);
        assert_eq!(measure_text(&fonts, face, 20.0, &tokens, width).unwrap().lines.len(), 1);
        let more = ["mum", "nun", "momm"];
        assert_eq!(measure_text(&fonts, face, 20.0, &more, width).unwrap().lines.len(), 2);
    }

    #[test]
    fn wide_token_is_force_broken() {
        let (fonts, face) = setup();
        let m = measure_text(&fonts, face, 20.0, &["abcdefghijklmnop"], 40).unwrap();
        assert_eq!(m.forced_breaks, 1);
        assert!(m.lines.len() > 2);
        assert!(m.lines.iter().all(|l| l.extent() <= 40 || l.text.chars().count() == 1));
        assert_eq!(m.lines.iter().map(|l| l.text.as_str()).collect::<String>(), "abcdefghijklmnop");
    }

    #[test]
    fn missing_glyph_is_an_error() {
        let (fonts, face) = setup();
        assert!(matches!(
            measure_text(&fonts, face, 20.0, &["\u{E123}"], 100),
            Err(LayoutError::FontGlyphMissing('\u{E123}'))
        ));
    }
}
