//! Synthetic chart rasterization.

use image::RgbImage;

use crate::color::Rgb;
use crate::subnets::{ChartType, SubplotPlan};

use super::RenderError;

const MIN_SIDE: u32 = 32;

struct Panel<'a> {
    img: &'a mut RgbImage,
    x0: i32,
    y0: i32,
    w: i32,
    h: i32,
}

impl Panel<'_> {
    fn put(&mut self, x: i32, y: i32, c: Rgb) {
        let (px, py) = (self.x0 + x, self.y0 + y);
        if x >= 0 && y >= 0 && x < self.w && y < self.h && px >= 0 && py >= 0 {
            let (px, py) = (px as u32, py as u32);
            if px < self.img.width() && py < self.img.height() {
                self.img.put_pixel(px, py, image::Rgb(c.0));
            }
        }
    }

    fn rect(&mut self, x: i32, y: i32, w: i32, h: i32, c: Rgb) {
        for yy in y..y + h {
            for xx in x..x + w {
                self.put(xx, yy, c);
            }
        }
    }

    fn line(&mut self, (x0, y0): (i32, i32), (x1, y1): (i32, i32), thick: i32, c: Rgb) {
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).max(1);
        for s in 0..=steps {
            let t = f64::from(s) / f64::from(steps);
            let x = (f64::from(x0) + t * f64::from(x1 - x0)).round() as i32;
            let y = (f64::from(y0) + t * f64::from(y1 - y0)).round() as i32;
            self.rect(x - thick / 2, y - thick / 2, thick, thick, c);
        }
    }
}

fn color(colors: &[Rgb], k: usize) -> Rgb {
    if colors.is_empty() {
        Rgb::BLACK
    } else {
        colors[k % colors.len()]
    }
}

/// Draw `subplots` on a `w` x `h` canvas laid out as a near-square grid.
pub fn render_chart(
    w: u32,
    h: u32,
    subplots: &[SubplotPlan],
    colors: &[Rgb],
    axis: Rgb,
    background: Rgb,
) -> Result<RgbImage, RenderError> {
    if w < MIN_SIDE || h < MIN_SIDE {
        return Err(RenderError::BoxTooSmall { w, h });
    }
    let mut img = RgbImage::from_pixel(w, h, image::Rgb(background.0));
    let n = subplots.len().max(1);
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let (cw, ch) = (w as i32 / cols as i32, h as i32 / rows as i32);
    for (i, sp) in subplots.iter().enumerate() {
        let (r, c) = (i / cols, i % cols);
        let pad_x = (cw / 12).max(2);
        let pad_y = (ch / 12).max(2);
        let mut panel = Panel {
            img: &mut img,
            x0: c as i32 * cw + pad_x,
            y0: r as i32 * ch + pad_y,
            w: cw - 2 * pad_x,
            h: ch - 2 * pad_y,
        };
        draw_subplot(&mut panel, sp, colors, axis, background);
    }
    Ok(img)
}

fn draw_subplot(p: &mut Panel<'_>, sp: &SubplotPlan, colors: &[Rgb], axis: Rgb, background: Rgb) {
    let (w, h) = (p.w, p.h);
    if w < 4 || h < 4 {
        return;
    }
    let thick = ((w.min(h)) / 80).max(1);
    let max = sp.data.iter().flatten().copied().fold(0.0f64, f64::max);
    let scale = if max > 0.0 { 1.0 / max } else { 1.0 };
    let y_of = |v: f64| h - 1 - ((v * scale).clamp(0.0, 1.0) * f64::from(h - 1)).round() as i32;
    let axes = |p: &mut Panel<'_>| {
        p.rect(0, 0, thick, h, axis);
        p.rect(0, h - thick, w, thick, axis);
    };
    match sp.chart_type {
        ChartType::Bar => {
            let series = sp.data.len().max(1);
            let points = sp.data.iter().map(Vec::len).max().unwrap_or(0).max(1);
            let group = f64::from(w) / points as f64;
            let bar = (group * 0.8 / series as f64).max(1.0);
            for (s, row) in sp.data.iter().enumerate() {
                for (k, &v) in row.iter().enumerate() {
                    let x = (group * k as f64 + group * 0.1 + bar * s as f64).round() as i32;
                    let top = y_of(v);
                    p.rect(x, top, bar.round().max(1.0) as i32, h - top, color(colors, s));
                }
            }
            axes(p);
        }
        ChartType::Line => {
            for (s, row) in sp.data.iter().enumerate() {
                let step = f64::from(w - 1) / (row.len().max(2) - 1) as f64;
                let pts: Vec<(i32, i32)> =
                    row.iter().enumerate().map(|(k, &v)| ((step * k as f64).round() as i32, y_of(v))).collect();
                for seg in pts.windows(2) {
                    p.line(seg[0], seg[1], thick + 1, color(colors, s));
                }
            }
            axes(p);
        }
        ChartType::Scatter => {
            let dot = (thick * 3).max(3);
            for (s, pair) in sp.data.chunks(2).enumerate() {
                if let [xs, ys] = pair {
                    for (&x, &y) in xs.iter().zip(ys) {
                        let px = (x.clamp(0.0, 1.0) * f64::from(w - 1)).round() as i32;
                        p.rect(px - dot / 2, y_of(y) - dot / 2, dot, dot, color(colors, s));
                    }
                }
            }
            axes(p);
        }
        ChartType::Pie => {
            let weights = sp.data.first().cloned().unwrap_or_default();
            let total: f64 = weights.iter().sum();
            let (cx, cy) = (f64::from(w) / 2.0, f64::from(h) / 2.0);
            let radius = f64::from(w.min(h)) * 0.45;
            for y in 0..h {
                for x in 0..w {
                    let (dx, dy) = (f64::from(x) + 0.5 - cx, f64::from(y) + 0.5 - cy);
                    if dx * dx + dy * dy > radius * radius {
                        continue;
                    }
                    let frac = (dy.atan2(dx) + std::f64::consts::PI) / std::f64::consts::TAU;
                    let mut acc = 0.0;
                    let mut wedge = 0;
                    if total > 0.0 {
                        for (k, v) in weights.iter().enumerate() {
                            acc += v / total;
                            wedge = k;
                            if frac <= acc {
                                break;
                            }
                        }
                    }
                    p.put(x, y, color(colors, wedge));
                }
            }
        }
        ChartType::Heatmap => {
            let rows = sp.data.len().max(1);
            let base = color(colors, 0);
            for (r, row) in sp.data.iter().enumerate() {
                let cols = row.len().max(1);
                for (c, &v) in row.iter().enumerate() {
                    let x0 = (w as usize * c / cols) as i32;
                    let x1 = (w as usize * (c + 1) / cols) as i32;
                    let y0 = (h as usize * r / rows) as i32;
                    let y1 = (h as usize * (r + 1) / rows) as i32;
                    p.rect(x0, y0, x1 - x0, y1 - y0, background.lerp(base, v.clamp(0.0, 1.0)));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(t: ChartType, data: Vec<Vec<f64>>) -> SubplotPlan {
        SubplotPlan { chart_type: t, data }
    }

    #[test]
    fn small_boxes_are_rejected() {
        let sp = [plan(ChartType::Bar, vec![vec![0.5]])];
        assert_eq!(render_chart(31, 100, &sp, &[Rgb::BLACK], Rgb::BLACK, Rgb::WHITE), Err(RenderError::BoxTooSmall { w: 31, h: 100 }));
        assert!(render_chart(32, 32, &sp, &[Rgb::BLACK], Rgb::BLACK, Rgb::WHITE).is_ok());
    }

    #[test]
    fn every_chart_type_draws_something() {
        let red = Rgb([255, 0, 0]);
        for t in ChartType::ALL {
            let data = match t {
                ChartType::Scatter => vec![vec![0.1, 0.5, 0.9], vec![0.2, 0.8, 0.4]],
                _ => vec![vec![0.3, 1.0, 0.6], vec![0.9, 0.2, 0.5]],
            };
            let img = render_chart(120, 90, &[plan(*t, data)], &[red], Rgb::BLACK, Rgb::WHITE).unwrap();
            let colored = img.pixels().filter(|p| p.0 != [255, 255, 255]).count();
            assert!(colored > 50, "{t:?} drew {colored} pixels");
        }
    }

    #[test]
    fn tallest_bar_reaches_the_top() {
        let img = render_chart(100, 100, &[plan(ChartType::Bar, vec![vec![0.25, 0.5]])], &[Rgb::BLACK], Rgb::BLACK, Rgb::WHITE).unwrap();
        let top_row_dark = (0..100).any(|x| img.get_pixel(x, 100 / 12).0 == [0, 0, 0]);
        assert!(top_row_dark);
    }
}
