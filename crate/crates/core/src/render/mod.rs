//! Rasterization of composed documents.

mod chart;

use std::collections::HashMap;
use std::io::Cursor;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::Rgb;
use crate::fonts::FontBook;
use crate::layout::{ComposedDocument, Payload, Rect};

pub use chart::render_chart;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("chart box {w}x{h} is below the 32x32 minimum")]
    BoxTooSmall { w: u32, h: u32 },
    #[error("no loaded font has a glyph for {0:?}")]
    FontGlyphMissing(char),
    #[error("cannot read image {path}: {reason}")]
    Image { path: PathBuf, reason: String },
    #[error("cannot encode page: {0}")]
    Encode(String),
}

/// An RGB page buffer, row-major, three bytes per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterPage {
    pub width: u32,
    pub height: u32,
    pub background: Rgb,
    pub pixels: Vec<u8>,
}

impl RasterPage {
    pub fn new(width: u32, height: u32, background: Rgb) -> Self {
        let pixels = background.0.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Self { width, height, background, pixels }
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let o = self.offset(x, y);
        [self.pixels[o], self.pixels[o + 1], self.pixels[o + 2]]
    }

    pub fn pixel_mut(&mut self, x: u32, y: u32) -> &mut [u8] {
        let o = self.offset(x, y);
        &mut self.pixels[o..o + 3]
    }

    /// Fill the part of a rectangle that lies on the page.
    pub fn fill_rect(&mut self, x: i64, y: i64, w: u32, h: u32, color: Rgb) {
        let x0 = x.clamp(0, i64::from(self.width)) as u32;
        let y0 = y.clamp(0, i64::from(self.height)) as u32;
        let x1 = (x + i64::from(w)).clamp(0, i64::from(self.width)) as u32;
        let y1 = (y + i64::from(h)).clamp(0, i64::from(self.height)) as u32;
        for yy in y0..y1 {
            for xx in x0..x1 {
                self.pixel_mut(xx, yy).copy_from_slice(&color.0);
            }
        }
    }

    /// Alpha-composite `color` over one pixel.
    pub fn blend(&mut self, x: u32, y: u32, color: Rgb, alpha: f64) {
        let a = alpha.clamp(0.0, 1.0);
        let px = self.pixel_mut(x, y);
        for (p, c) in px.iter_mut().zip(color.0) {
            *p = (f64::from(*p) * (1.0 - a) + f64::from(c) * a).round() as u8;
        }
    }

    pub fn to_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.pixels.clone()).expect("buffer matches size")
    }

    pub fn encode(&self, format: PageFormat) -> Result<Vec<u8>, RenderError> {
        let mut buf = Vec::new();
        let img = self.to_image();
        match format {
            PageFormat::Png => img
                .write_to(&mut Cursor::new(&mut buf), image::ImageFormat::Png)
                .map_err(|e| RenderError::Encode(e.to_string()))?,
            PageFormat::Jpeg => {
                let enc = image::codecs::jpeg::JpegEncoder::new_with_quality(&mut buf, 90);
                img.write_with_encoder(enc).map_err(|e| RenderError::Encode(e.to_string()))?;
            }
        }
        Ok(buf)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PageFormat {
    #[default]
    Png,
    Jpeg,
}

impl PageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            PageFormat::Png => "png",
            PageFormat::Jpeg => "jpg",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "png" => Some(PageFormat::Png),
            "jpg" | "jpeg" => Some(PageFormat::Jpeg),
            _ => None,
        }
    }
}

/// File name of a page image.
pub fn page_file_name(doc_id: u64, page: usize, format: PageFormat) -> String {
    format!("{doc_id}_{page}.{}", format.extension())
}

/// Decoded library images shared across documents.
#[derive(Debug, Default)]
pub struct ImageCache {
    images: RwLock<HashMap<PathBuf, Arc<RgbImage>>>,
}

impl ImageCache {
    pub fn get(&self, path: &Path) -> Result<Arc<RgbImage>, RenderError> {
        if let Some(img) = self.images.read().expect("image cache").get(path) {
            return Ok(img.clone());
        }
        let img = image::open(path)
            .map_err(|e| RenderError::Image { path: path.to_path_buf(), reason: e.to_string() })?
            .to_rgb8();
        let img = Arc::new(img);
        self.images.write().expect("image cache").insert(path.to_path_buf(), img.clone());
        Ok(img)
    }
}

/// Drawn pixels per element and how many of them fall inside its box.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InkAudit {
    /// `(drawn, inside)` per element index.
    pub per_element: Vec<(u64, u64)>,
    /// Pixels drawn by payloads that belong to no element.
    pub unowned: u64,
}

impl InkAudit {
    pub fn inside_fraction(&self, element: usize) -> f64 {
        match self.per_element.get(element) {
            Some(&(drawn, inside)) if drawn > 0 => inside as f64 / drawn as f64,
            _ => 1.0,
        }
    }

    /// The lowest inside fraction over all elements that drew anything.
    pub fn worst(&self) -> f64 {
        (0..self.per_element.len()).map(|i| self.inside_fraction(i)).fold(1.0, f64::min)
    }
}

struct Painter<'a> {
    pages: Vec<RasterPage>,
    boxes: Vec<(usize, Rect)>,
    audit: Option<&'a mut InkAudit>,
}

impl Painter<'_> {
    #[allow(clippy::too_many_arguments)]
    fn plot(&mut self, page: usize, x: i32, y: i32, color: Rgb, alpha: f64, owner: Option<usize>, clip: Option<Rect>) {
        if alpha <= 0.0 || clip.is_some_and(|c| !c.contains_point(x, y)) {
            return;
        }
        let p = &mut self.pages[page];
        if x < 0 || y < 0 || x >= p.width as i32 || y >= p.height as i32 {
            return;
        }
        p.blend(x as u32, y as u32, color, alpha);
        if let Some(audit) = self.audit.as_deref_mut() {
            match owner {
                Some(o) => {
                    let (bp, b) = self.boxes[o];
                    let slot = &mut audit.per_element[o];
                    slot.0 += 1;
                    if bp == page && b.contains_point(x, y) {
                        slot.1 += 1;
                    }
                }
                None => audit.unowned += 1,
            }
        }
    }
}

fn paint(
    doc: &ComposedDocument,
    fonts: &FontBook,
    images: &ImageCache,
    audit: Option<&mut InkAudit>,
) -> Result<Vec<RasterPage>, RenderError> {
    let g = doc.geometry;
    let pages = (0..doc.page_count).map(|_| RasterPage::new(g.width, g.height, doc.background)).collect();
    let boxes = doc.elements.iter().map(|e| (e.bbox.page_index, e.bbox.rect())).collect();
    let audit = audit.map(|a| {
        *a = InkAudit { per_element: vec![(0, 0); doc.elements.len()], unowned: 0 };
        a
    });
    let mut painter = Painter { pages, boxes, audit };
    for placed in &doc.placed {
        let (page, owner) = (placed.page, placed.owner);
        match &placed.payload {
            Payload::Fill { rect, color } => {
                for y in rect.y..rect.bottom() {
                    for x in rect.x..rect.right() {
                        painter.plot(page, x, y, *color, 1.0, owner, None);
                    }
                }
            }
            Payload::Text { face, px, text, x, baseline, color, clip } => {
                let run = fonts.shape(*face, text, *px).map_err(RenderError::FontGlyphMissing)?;
                for pg in &run.glyphs {
                    let gl = &pg.glyph;
                    for gy in 0..gl.height {
                        for gx in 0..gl.width {
                            let cov = gl.coverage[gy * gl.width + gx];
                            if cov > 0 {
                                let (px_, py) = (x + pg.x + gx as i32, baseline + pg.y + gy as i32);
                                painter.plot(page, px_, py, *color, f64::from(cov) / 255.0, owner, *clip);
                            }
                        }
                    }
                }
            }
            Payload::Chart { rect, subplots, colors, axis, background } => {
                let img = render_chart(rect.w, rect.h, subplots, colors, *axis, *background)?;
                blit(&mut painter, page, *rect, &img, owner);
            }
            Payload::Image { rect, path } => {
                let src = images.get(path)?;
                let img = letterbox(&src, rect.w, rect.h, doc.background);
                blit(&mut painter, page, *rect, &img, owner);
            }
        }
    }
    Ok(painter.pages)
}

fn blit(painter: &mut Painter<'_>, page: usize, rect: Rect, img: &RgbImage, owner: Option<usize>) {
    for (x, y, p) in img.enumerate_pixels() {
        painter.plot(page, rect.x + x as i32, rect.y + y as i32, Rgb(p.0), 1.0, owner, None);
    }
}

/// Scale `src` to fit `w` x `h` keeping its aspect ratio, centered on `fill`.
pub fn letterbox(src: &RgbImage, w: u32, h: u32, fill: Rgb) -> RgbImage {
    let mut out = RgbImage::from_pixel(w, h, image::Rgb(fill.0));
    if src.width() == 0 || src.height() == 0 || w == 0 || h == 0 {
        return out;
    }
    let s = (f64::from(w) / f64::from(src.width())).min(f64::from(h) / f64::from(src.height()));
    let sw = ((f64::from(src.width()) * s).round() as u32).clamp(1, w);
    let sh = ((f64::from(src.height()) * s).round() as u32).clamp(1, h);
    let scaled = image::imageops::resize(src, sw, sh, image::imageops::FilterType::Triangle);
    image::imageops::replace(&mut out, &scaled, i64::from((w - sw) / 2), i64::from((h - sh) / 2));
    out
}

/// Draw every page of a composed document.
pub fn render(doc: &ComposedDocument, fonts: &FontBook, images: &ImageCache) -> Result<Vec<RasterPage>, RenderError> {
    paint(doc, fonts, images, None)
}

/// Draw every page and count, per element, the drawn pixels that land inside
/// its ground-truth box.
pub fn render_with_audit(
    doc: &ComposedDocument,
    fonts: &FontBook,
    images: &ImageCache,
) -> Result<(Vec<RasterPage>, InkAudit), RenderError> {
    let mut audit = InkAudit::default();
    let pages = paint(doc, fonts, images, Some(&mut audit))?;
    Ok((pages, audit))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_and_blend() {
        let mut p = RasterPage::new(4, 3, Rgb::WHITE);
        p.fill_rect(-1, -1, 3, 2, Rgb::BLACK);
        assert_eq!(p.pixel(0, 0), [0, 0, 0]);
        assert_eq!(p.pixel(1, 0), [0, 0, 0]);
        assert_eq!(p.pixel(2, 0), [255, 255, 255]);
        assert_eq!(p.pixel(0, 1), [255, 255, 255]);
        p.blend(3, 2, Rgb::BLACK, 0.5);
        assert_eq!(p.pixel(3, 2), [128, 128, 128]);
    }

    #[test]
    fn encodes_png_and_jpeg() {
        let p = RasterPage::new(16, 8, Rgb([10, 200, 30]));
        let png = p.encode(PageFormat::Png).unwrap();
        let back = image::load_from_memory(&png).unwrap().to_rgb8();
        assert_eq!(back.as_raw(), &p.pixels);
        let jpg = p.encode(PageFormat::Jpeg).unwrap();
        assert_eq!(&jpg[..2], &[0xFF, 0xD8]);
    }

    #[test]
    fn letterbox_keeps_aspect() {
        let src = RgbImage::from_pixel(20, 10, image::Rgb([0, 0, 0]));
        let out = letterbox(&src, 40, 40, Rgb::WHITE);
        assert_eq!(out.get_pixel(20, 20).0, [0, 0, 0]);
        assert_eq!(out.get_pixel(20, 2).0, [255, 255, 255]);
        assert_eq!(page_file_name(7, 2, PageFormat::Jpeg), "7_2.jpg");
    }
}
