//! Photometric page defects: bleed-through, shadows, dark corners,
//! watermarks, occlusions and blur.

use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::fonts::FontBook;
use crate::probnet::RngStream;
use crate::render::RasterPage;
use crate::subnets::{SampleCtx, SubnetError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Top,
    Right,
    Bottom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefectOp {
    BleedThrough {
        opacity: f64,
    },
    Shadow {
        side: Side,
        /// Fraction of the page width.
        width: f64,
        strength: f64,
    },
    DarkCorner {
        corner: Corner,
        /// Fraction of the page width.
        radius: f64,
        darkness: f64,
    },
    Watermark {
        text: String,
        /// Degrees, counter-clockwise.
        angle: f64,
        /// Center, as fractions of the page size.
        x: f64,
        y: f64,
        opacity: f64,
        /// Glyph height as a fraction of the page width.
        size: f64,
        color: Rgb,
    },
    Occlusion {
        /// Fraction of the page area.
        area: f64,
        /// Width over height.
        aspect: f64,
        /// Position of the rectangle within the free range, in [0, 1].
        x: f64,
        y: f64,
    },
    Blur {
        /// Gaussian sigma in pixels.
        radius: f64,
    },
}

impl DefectOp {
    pub fn kind_name(&self) -> &'static str {
        match self {
            DefectOp::BleedThrough { .. } => "bleed_through",
            DefectOp::Shadow { .. } => "shadow",
            DefectOp::DarkCorner { .. } => "dark_corner",
            DefectOp::Watermark { .. } => "watermark",
            DefectOp::Occlusion { .. } => "occlusion",
            DefectOp::Blur { .. } => "blur",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DefectPlan {
    pub ops: Vec<DefectOp>,
}

impl DefectPlan {
    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Sample each defect independently from its presence flag, in layering
/// order: bleed-through, shadow, dark corner, watermark, occlusion, blur.
pub fn sample_defect_plan(ctx: &mut SampleCtx<'_>, rng: &mut RngStream) -> Result<DefectPlan, SubnetError> {
    let mut ops = Vec::new();
    if ctx.flag("defects.bleed.present", rng)? {
        ops.push(DefectOp::BleedThrough { opacity: ctx.real("defects.bleed.opacity", rng)?.clamp(0.0, 1.0) });
    }
    if ctx.flag("defects.shadow.present", rng)? {
        let side = [Side::Left, Side::Top, Side::Right, Side::Bottom][ctx.category("defects.shadow.side", rng)?.min(3)];
        ops.push(DefectOp::Shadow {
            side,
            width: ctx.real("defects.shadow.width", rng)?.clamp(0.0, 1.0),
            strength: ctx.real("defects.shadow.strength", rng)?.clamp(0.0, 1.0),
        });
    }
    if ctx.flag("defects.corner.present", rng)? {
        let corner = [Corner::TopLeft, Corner::TopRight, Corner::BottomLeft, Corner::BottomRight]
            [ctx.category("defects.corner.which", rng)?.min(3)];
        ops.push(DefectOp::DarkCorner {
            corner,
            radius: ctx.real("defects.corner.radius", rng)?.clamp(0.0, 1.0),
            darkness: ctx.real("defects.corner.darkness", rng)?.clamp(0.0, 1.0),
        });
    }
    if ctx.flag("defects.watermark.present", rng)? {
        let texts = &ctx.template().resources.watermark_texts;
        let text = if texts.is_empty() {
            String::new()
        } else {
            let k = ctx.category("defects.watermark.text", rng)?;
            ctx.template().resources.watermark_texts[k.min(texts.len() - 1)].clone()
        };
        let angle = ctx.real("defects.watermark.angle", rng)?.clamp(-180.0, 180.0);
        let x = ctx.real("defects.watermark.x", rng)?;
        let y = ctx.real("defects.watermark.y", rng)?;
        let opacity = ctx.real("defects.watermark.opacity", rng)?.clamp(0.0, 1.0);
        let size = ctx.real("defects.watermark.size", rng)?.max(0.0);
        let color = ctx.palette_text("defects.watermark.color", rng)?;
        if !text.is_empty() {
            ops.push(DefectOp::Watermark { text, angle, x, y, opacity, size, color });
        }
    }
    if ctx.flag("defects.occlusion.present", rng)? {
        ops.push(DefectOp::Occlusion {
            area: ctx.real("defects.occlusion.area", rng)?.clamp(0.0, 0.1),
            aspect: ctx.real("defects.occlusion.aspect", rng)?.max(1e-3),
            x: ctx.real("defects.occlusion.x", rng)?.clamp(0.0, 1.0),
            y: ctx.real("defects.occlusion.y", rng)?.clamp(0.0, 1.0),
        });
    }
    if ctx.flag("defects.blur.present", rng)? {
        ops.push(DefectOp::Blur { radius: ctx.real("defects.blur.radius", rng)?.max(0.0) });
    }
    Ok(DefectPlan { ops })
}

fn blend_channel(base: u8, over: u8, alpha: f64) -> u8 {
    (f64::from(base) + (f64::from(over) - f64::from(base)) * alpha).round().clamp(0.0, 255.0) as u8
}

fn darken(page: &mut RasterPage, x: u32, y: u32, factor: f64) {
    let px = page.pixel_mut(x, y);
    for c in px.iter_mut() {
        *c = (f64::from(*c) * (1.0 - factor)).round().clamp(0.0, 255.0) as u8;
    }
}

fn bleed_through(pages: &mut [RasterPage], opacity: f64) {
    let sources: Vec<RasterPage> = pages.to_vec();
    let n = pages.len();
    for (i, page) in pages.iter_mut().enumerate() {
        let src = &sources[if n > 1 { (i + 1) % n } else { i }];
        let paper = page.background;
        let (w, h) = (page.width, page.height);
        for y in 0..h {
            for x in 0..w {
                let mirrored = src.pixel(w - 1 - x, y);
                // only ink shows through; paper-colored source pixels leave the page as is
                let ink = paper
                    .0
                    .iter()
                    .zip(mirrored)
                    .map(|(&p, m)| (f64::from(p) - f64::from(m)).abs() / 255.0)
                    .fold(0.0f64, f64::max);
                if ink <= 0.0 {
                    continue;
                }
                let px = page.pixel_mut(x, y);
                for c in 0..3 {
                    px[c] = blend_channel(px[c], mirrored[c], opacity * ink);
                }
            }
        }
    }
}

fn shadow(page: &mut RasterPage, side: Side, width: f64, strength: f64) {
    let (w, h) = (page.width, page.height);
    let band = (width * f64::from(w)).round().max(1.0);
    for y in 0..h {
        for x in 0..w {
            let d = match side {
                Side::Left => f64::from(x),
                Side::Right => f64::from(w - 1 - x),
                Side::Top => f64::from(y),
                Side::Bottom => f64::from(h - 1 - y),
            };
            if d < band {
                let t = 1.0 - d / band;
                darken(page, x, y, strength * t * t);
            }
        }
    }
}

fn dark_corner(page: &mut RasterPage, corner: Corner, radius: f64, darkness: f64, rng: &mut RngStream) {
    let (w, h) = (page.width, page.height);
    let r = (radius * f64::from(w)).max(1.0);
    let (cx, cy) = match corner {
        Corner::TopLeft => (0.0, 0.0),
        Corner::TopRight => (f64::from(w - 1), 0.0),
        Corner::BottomLeft => (0.0, f64::from(h - 1)),
        Corner::BottomRight => (f64::from(w - 1), f64::from(h - 1)),
    };
    // a ragged edge: the damage boundary radius wobbles with angle
    let wobble: Vec<f64> = (0..16).map(|_| 0.85 + 0.3 * rng.unit()).collect();
    let ri = r.ceil() as u32;
    let xs = if cx == 0.0 { 0..ri.min(w) } else { w.saturating_sub(ri)..w };
    let ys = if cy == 0.0 { 0..ri.min(h) } else { h.saturating_sub(ri)..h };
    for y in ys {
        for x in xs.clone() {
            let dx = f64::from(x) - cx;
            let dy = f64::from(y) - cy;
            let d = (dx * dx + dy * dy).sqrt();
            let angle = dy.abs().atan2(dx.abs()) / std::f64::consts::FRAC_PI_2;
            let k = ((angle * 15.0).round() as usize).min(15);
            let edge = r * wobble[k];
            if d < edge {
                let t = 1.0 - d / edge;
                darken(page, x, y, darkness * t.sqrt());
            }
        }
    }
}

fn occlusion(page: &mut RasterPage, area: f64, aspect: f64, fx: f64, fy: f64, color: Rgb) {
    let (w, h) = (f64::from(page.width), f64::from(page.height));
    let px_area = area * w * h;
    let rw = (px_area * aspect).sqrt().min(w).round();
    let rh = (px_area / aspect).sqrt().min(h).round();
    let x0 = ((w - rw) * fx).round() as u32;
    let y0 = ((h - rh) * fy).round() as u32;
    page.fill_rect(x0 as i64, y0 as i64, rw as u32, rh as u32, color);
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let half = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-half..=half).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

fn blur(page: &mut RasterPage, sigma: f64) {
    if sigma <= 0.0 {
        return;
    }
    let kernel = gaussian_kernel(sigma);
    let half = (kernel.len() / 2) as i64;
    let (w, h) = (page.width as i64, page.height as i64);
    let src = page.pixels.clone();
    let mut tmp = vec![0f32; src.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (i, kv) in kernel.iter().enumerate() {
                    let sx = (x + i as i64 - half).clamp(0, w - 1);
                    acc += kv * f64::from(src[((y * w + sx) * 3 + c) as usize]);
                }
                tmp[((y * w + x) * 3 + c) as usize] = acc as f32;
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for (i, kv) in kernel.iter().enumerate() {
                    let sy = (y + i as i64 - half).clamp(0, h - 1);
                    acc += kv * f64::from(tmp[((sy * w + x) * 3 + c) as usize]);
                }
                page.pixels[((y * w + x) * 3 + c) as usize] = acc.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
}

fn watermark(
    page: &mut RasterPage,
    fonts: &FontBook,
    font_index: usize,
    text: &str,
    spec: (f64, f64, f64, f64, f64),
    color: Rgb,
) {
    let (angle, fx, fy, opacity, size) = spec;
    let px_size = (size * f64::from(page.width)).max(4.0) as f32;
    // render the text upright into a coverage mask, then rotate it onto the page
    let mut glyphs = Vec::new();
    let mut pen = 0.0f32;
    let face = fonts.resolve_face(font_index, crate::subnets::FontStyle::Bold);
    for ch in text.chars() {
        let Some(g) = fonts.glyph(face, ch, px_size) else {
            continue;
        };
        glyphs.push((pen, g.clone()));
        pen += g.advance;
    }
    let Some(line) = fonts.line_metrics(face, px_size) else {
        return;
    };
    let mw = pen.ceil().max(1.0) as i64;
    let mh = (line.ascent - line.descent).ceil().max(1.0) as i64;
    let mut mask = vec![0f32; (mw * mh) as usize];
    for (x0, g) in &glyphs {
        for gy in 0..g.height as i64 {
            for gx in 0..g.width as i64 {
                let mx = (*x0 + g.xmin as f32).round() as i64 + gx;
                let my = (line.ascent.round() as i64) - (g.ymin as i64 + g.height as i64) + gy;
                if mx >= 0 && mx < mw && my >= 0 && my < mh {
                    let cov = f32::from(g.coverage[(gy * g.width as i64 + gx) as usize]) / 255.0;
                    let slot = &mut mask[(my * mw + mx) as usize];
                    *slot = slot.max(cov);
                }
            }
        }
    }
    let (sin, cos) = (-angle.to_radians()).sin_cos();
    let cx = fx * f64::from(page.width);
    let cy = fy * f64::from(page.height);
    let half_diag = ((mw * mw + mh * mh) as f64).sqrt() / 2.0 + 2.0;
    let x_lo = (cx - half_diag).floor().max(0.0) as u32;
    let x_hi = (cx + half_diag).ceil().min(f64::from(page.width)) as u32;
    let y_lo = (cy - half_diag).floor().max(0.0) as u32;
    let y_hi = (cy + half_diag).ceil().min(f64::from(page.height)) as u32;
    for y in y_lo..y_hi {
        for x in x_lo..x_hi {
            let dx = f64::from(x) + 0.5 - cx;
            let dy = f64::from(y) + 0.5 - cy;
            // inverse rotation into mask coordinates
            let mx = cos * dx + sin * dy + mw as f64 / 2.0;
            let my = -sin * dx + cos * dy + mh as f64 / 2.0;
            if mx < 0.0 || my < 0.0 {
                continue;
            }
            let (ix, iy) = (mx as i64, my as i64);
            if ix >= mw || iy >= mh {
                continue;
            }
            let cov = f64::from(mask[(iy * mw + ix) as usize]);
            if cov > 0.0 {
                page.blend(x, y, color, opacity * cov);
            }
        }
    }
}

/// Apply defects in plan order. Geometry and annotations are untouched.
pub fn apply_defects(pages: &mut [RasterPage], plan: &DefectPlan, fonts: &FontBook, font_index: usize, rng: &mut RngStream) {
    for op in &plan.ops {
        match op {
            DefectOp::BleedThrough { opacity } => bleed_through(pages, *opacity),
            DefectOp::Shadow { side, width, strength } => {
                pages.iter_mut().for_each(|p| shadow(p, *side, *width, *strength))
            }
            DefectOp::DarkCorner { corner, radius, darkness } => {
                for (i, p) in pages.iter_mut().enumerate() {
                    dark_corner(p, *corner, *radius, *darkness, &mut rng.child(i as u64));
                }
            }
            DefectOp::Watermark { text, angle, x, y, opacity, size, color } => {
                for p in pages.iter_mut() {
                    watermark(p, fonts, font_index, text, (*angle, *x, *y, *opacity, *size), *color);
                }
            }
            DefectOp::Occlusion { area, aspect, x, y } => {
                for p in pages.iter_mut() {
                    let color = Rgb::BLACK.lerp(p.background, 0.15);
                    occlusion(p, *area, *aspect, *x, *y, color);
                }
            }
            DefectOp::Blur { radius } => pages.iter_mut().for_each(|p| blur(p, *radius)),
        }
    }
}
