//! Font loading, glyph rasterization with a shared cache, and run shaping.
//!
//! Layout and render shape text through the same [`FontBook`], so measured
//! ink extents and drawn pixels agree exactly.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use thiserror::Error;

use crate::subnets::FontStyle;
use crate::templates::{resolve_builtin, FontFace};

#[derive(Debug, Error)]
pub enum FontError {
    #[error("font resolution failed for {path}: {reason}")]
    FontResolutionFailed { path: PathBuf, reason: String },
    #[error("empty font list")]
    NoFonts,
}

/// Shear of synthetic italics, in pixels per pixel of height.
const ITALIC_SHEAR: f32 = 0.2;
/// Glyph cache size at which the cache is dropped and rebuilt.
const CACHE_LIMIT: usize = 200_000;

#[derive(Clone, Copy, Debug)]
struct Slot {
    font: usize,
    synth_bold: bool,
    synth_italic: bool,
}

#[derive(Debug)]
struct FamilyFaces {
    name: String,
    slots: [Slot; 4],
}

/// A family and style to draw with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FaceId {
    pub family: u16,
    pub style: FontStyle,
}

/// A rasterized glyph. `xmin`/`ymin` place the bitmap's bottom-left corner
/// relative to the pen position on the baseline (y up).
#[derive(Debug, Clone)]
pub struct Glyph {
    pub advance: f32,
    pub xmin: i32,
    pub ymin: i32,
    pub width: usize,
    pub height: usize,
    pub coverage: Vec<u8>,
    /// Tight box of nonzero coverage in bitmap coordinates `(x0, y0, x1, y1)`, exclusive ends.
    pub ink: Option<(u32, u32, u32, u32)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineMetrics {
    pub ascent: f32,
    pub descent: f32,
    pub line_gap: f32,
}

/// A glyph placed relative to a run origin: `x` from the origin to the bitmap's
/// left edge, `y` from the baseline to the bitmap's top row (y down).
#[derive(Debug, Clone)]
pub struct PlacedGlyph {
    pub x: i32,
    pub y: i32,
    pub glyph: Arc<Glyph>,
}

/// Pixel box `[x0, x1) x [y0, y1)` relative to a run origin on the baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InkBox {
    pub x0: i32,
    pub y0: i32,
    pub x1: i32,
    pub y1: i32,
}

impl InkBox {
    pub fn union(self, o: InkBox) -> InkBox {
        InkBox { x0: self.x0.min(o.x0), y0: self.y0.min(o.y0), x1: self.x1.max(o.x1), y1: self.y1.max(o.y1) }
    }

    pub fn width(&self) -> i32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> i32 {
        self.y1 - self.y0
    }
}

#[derive(Debug, Clone, Default)]
pub struct Run {
    pub glyphs: Vec<PlacedGlyph>,
    /// Pen advance in (fractional) pixels.
    pub advance: f32,
    pub ink: Option<InkBox>,
}

type CacheKey = (FaceId, char, u32);

#[derive(Debug)]
pub struct FontBook {
    fonts: Vec<fontdue::Font>,
    families: Vec<FamilyFaces>,
    cache: RwLock<HashMap<CacheKey, Option<Arc<Glyph>>>>,
}

/// Pixel sizes are quantized to quarter pixels so cached glyphs are shared.
pub fn quantize_px(px: f64) -> f32 {
    ((px * 4.0).round() / 4.0).max(1.0) as f32
}

fn load_font(path: &Path) -> Result<fontdue::Font, FontError> {
    let bytes = std::fs::read(path)
        .map_err(|e| FontError::FontResolutionFailed { path: path.to_path_buf(), reason: e.to_string() })?;
    fontdue::Font::from_bytes(bytes, fontdue::FontSettings::default())
        .map_err(|e| FontError::FontResolutionFailed { path: path.to_path_buf(), reason: e.to_string() })
}

fn ink_bounds(width: usize, height: usize, coverage: &[u8]) -> Option<(u32, u32, u32, u32)> {
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..height {
        for x in 0..width {
            if coverage[y * width + x] > 0 {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x + 1);
                y1 = y1.max(y + 1);
            }
        }
    }
    (x0 != usize::MAX).then_some((x0 as u32, y0 as u32, x1 as u32, y1 as u32))
}

fn embolden(width: usize, height: usize, coverage: &[u8]) -> (usize, Vec<u8>) {
    let w2 = width + 1;
    let mut out = vec![0u8; w2 * height];
    for y in 0..height {
        for x in 0..w2 {
            let a = if x < width { coverage[y * width + x] } else { 0 };
            let b = if x > 0 { coverage[y * width + x - 1] } else { 0 };
            out[y * w2 + x] = a.max(b);
        }
    }
    (w2, out)
}

/// Shear rows about the baseline; returns the new width, xmin shift and bitmap.
fn shear(width: usize, height: usize, ymin: i32, coverage: &[u8]) -> (usize, i32, Vec<u8>) {
    let shifts: Vec<i32> =
        (0..height).map(|r| ((ymin + (height as i32 - 1 - r as i32)) as f32 * ITALIC_SHEAR).round() as i32).collect();
    let lo = shifts.iter().copied().min().unwrap_or(0);
    let hi = shifts.iter().copied().max().unwrap_or(0);
    let w2 = width + (hi - lo) as usize;
    let mut out = vec![0u8; w2 * height];
    for (r, s) in shifts.iter().enumerate() {
        let off = (s - lo) as usize;
        out[r * w2 + off..r * w2 + off + width].copy_from_slice(&coverage[r * width..(r + 1) * width]);
    }
    (w2, lo, out)
}

impl FontBook {
    pub fn load(faces: &[FontFace]) -> Result<Self, FontError> {
        if faces.is_empty() {
            return Err(FontError::NoFonts);
        }
        let mut fonts = Vec::new();
        let mut loaded: HashMap<PathBuf, usize> = HashMap::new();
        let mut load = |p: &Path| -> Result<usize, FontError> {
            if let Some(&i) = loaded.get(p) {
                return Ok(i);
            }
            fonts.push(load_font(p)?);
            loaded.insert(p.to_path_buf(), fonts.len() - 1);
            Ok(fonts.len() - 1)
        };
        let mut families = Vec::with_capacity(faces.len());
        for face in faces {
            let regular = load(&face.regular)?;
            let pick = |p: &Option<PathBuf>, load: &mut dyn FnMut(&Path) -> Result<usize, FontError>| {
                p.as_deref().map(load).transpose()
            };
            let bold = pick(&face.bold, &mut load)?;
            let italic = pick(&face.italic, &mut load)?;
            let bold_italic = pick(&face.bold_italic, &mut load)?;
            let slot = |f: Option<usize>, b: bool, i: bool| match f {
                Some(font) => Slot { font, synth_bold: false, synth_italic: false },
                None => Slot { font: regular, synth_bold: b, synth_italic: i },
            };
            let bi = match (bold_italic, bold, italic) {
                (Some(f), _, _) => Slot { font: f, synth_bold: false, synth_italic: false },
                (None, Some(f), _) => Slot { font: f, synth_bold: false, synth_italic: true },
                (None, None, Some(f)) => Slot { font: f, synth_bold: true, synth_italic: false },
                _ => Slot { font: regular, synth_bold: true, synth_italic: true },
            };
            families.push(FamilyFaces {
                name: face.name.clone(),
                slots: [slot(Some(regular), false, false), slot(bold, true, false), slot(italic, false, true), bi],
            });
        }
        Ok(Self { fonts, families, cache: RwLock::new(HashMap::new()) })
    }

    /// The bundled DejaVu families.
    pub fn bundled_default() -> Self {
        let face = |name: &str, stem: &str, italic: &str| FontFace {
            name: name.to_string(),
            regular: resolve_builtin(&format!("fonts/{stem}.ttf")),
            bold: Some(resolve_builtin(&format!("fonts/{stem}-Bold.ttf"))),
            italic: Some(resolve_builtin(&format!("fonts/{stem}-{italic}.ttf"))),
            bold_italic: Some(resolve_builtin(&format!("fonts/{stem}-Bold{italic}.ttf"))),
        };
        Self::load(&[face("DejaVu Serif", "DejaVuSerif", "Italic"), face("DejaVu Sans", "DejaVuSans", "Oblique")])
            .expect("bundled fonts load")
    }

    pub fn family_count(&self) -> usize {
        self.families.len()
    }

    pub fn family_name(&self, family: usize) -> &str {
        &self.families[family].name
    }

    pub fn resolve_face(&self, family: usize, style: FontStyle) -> FaceId {
        FaceId { family: family.min(self.families.len() - 1) as u16, style }
    }

    fn slot(&self, face: FaceId) -> Slot {
        self.families[face.family as usize].slots[face.style.index()]
    }

    pub fn line_metrics(&self, face: FaceId, px: f32) -> Option<LineMetrics> {
        let slot = self.slot(face);
        self.fonts[slot.font]
            .horizontal_line_metrics(px)
            .map(|m| LineMetrics { ascent: m.ascent, descent: m.descent, line_gap: m.line_gap })
    }

    fn rasterize(&self, face: FaceId, ch: char, px: f32) -> Option<Glyph> {
        let slot = self.slot(face);
        let font = &self.fonts[slot.font];
        if !ch.is_whitespace() && font.lookup_glyph_index(ch) == 0 {
            return None;
        }
        let (m, mut coverage) = font.rasterize(ch, px);
        let (mut width, height, mut xmin) = (m.width, m.height, m.xmin);
        let mut advance = m.advance_width;
        if slot.synth_bold && width > 0 {
            let (w, c) = embolden(width, height, &coverage);
            width = w;
            coverage = c;
            advance += 1.0;
        }
        if slot.synth_italic && width > 0 {
            let (w, shift, c) = shear(width, height, m.ymin, &coverage);
            width = w;
            xmin += shift;
            coverage = c;
        }
        let ink = ink_bounds(width, height, &coverage);
        Some(Glyph { advance, xmin, ymin: m.ymin, width, height, coverage, ink })
    }

    /// The glyph for `ch`, falling back through the other families of the
    /// font list in order. `None` when no family covers the character.
    pub fn glyph(&self, face: FaceId, ch: char, px: f32) -> Option<Arc<Glyph>> {
        let key = (face, ch, px.to_bits());
        if let Some(hit) = self.cache.read().expect("glyph cache").get(&key) {
            return hit.clone();
        }
        let order = std::iter::once(face.family as usize)
            .chain((0..self.families.len()).filter(|&f| f != face.family as usize));
        let glyph = order
            .filter_map(|family| self.rasterize(FaceId { family: family as u16, style: face.style }, ch, px))
            .next()
            .map(Arc::new);
        let mut cache = self.cache.write().expect("glyph cache");
        if cache.len() >= CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, glyph.clone());
        glyph
    }

    /// Pen advance of `text`; `Err(ch)` names the first character no font covers.
    pub fn advance(&self, face: FaceId, text: &str, px: f32) -> Result<f32, char> {
        let mut pen = 0.0f32;
        for ch in text.chars() {
            pen += self.glyph(face, ch, px).ok_or(ch)?.advance;
        }
        Ok(pen)
    }

    /// Lay out `text` on a baseline starting at pen position 0.
    pub fn shape(&self, face: FaceId, text: &str, px: f32) -> Result<Run, char> {
        let mut run = Run::default();
        let mut pen = 0.0f32;
        for ch in text.chars() {
            let glyph = self.glyph(face, ch, px).ok_or(ch)?;
            let x = pen.round() as i32 + glyph.xmin;
            let y = -(glyph.ymin + glyph.height as i32);
            if let Some((gx0, gy0, gx1, gy1)) = glyph.ink {
                let b = InkBox { x0: x + gx0 as i32, y0: y + gy0 as i32, x1: x + gx1 as i32, y1: y + gy1 as i32 };
                run.ink = Some(run.ink.map_or(b, |r| r.union(b)));
            }
            pen += glyph.advance;
            run.glyphs.push(PlacedGlyph { x, y, glyph });
        }
        run.advance = pen;
        Ok(run)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fonts_cover_latin_and_greek() {
        let book = FontBook::bundled_default();
        let face = book.resolve_face(0, FontStyle::Regular);
        assert!(book.shape(face, "Hello αβγ ΣΔ", 20.0).is_ok());
        assert_eq!(book.shape(face, "\u{E000}", 20.0).unwrap_err(), '\u{E000}');
    }

    #[test]
    fn space_has_no_ink() {
        let book = FontBook::bundled_default();
        let run = book.shape(book.resolve_face(1, FontStyle::Bold), "   ", 24.0).unwrap();
        assert!(run.ink.is_none());
        assert!(run.advance > 0.0);
    }

    #[test]
    fn synthetic_styles_widen() {
        let cov = vec![255u8; 4 * 3];
        let (w, c) = embolden(4, 3, &cov);
        assert_eq!((w, c.len()), (5, 15));
        let (w, _, c) = shear(4, 10, 0, &[255u8; 40]);
        assert_eq!(w, 4 + 2);
        assert_eq!(c.len(), 60);
    }

    #[test]
    fn quantization() {
        assert_eq!(quantize_px(12.1), 12.0);
        assert_eq!(quantize_px(12.13), 12.25);
        assert_eq!(quantize_px(0.01), 1.0);
    }
}
