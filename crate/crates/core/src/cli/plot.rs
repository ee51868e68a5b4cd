//! Data-map scatter plot as a self-contained SVG.

use std::io::Write;

use crate::cartography::DataMap;
use crate::error::Result;
use crate::format::{self, Metadata};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const X_MAX: f64 = 0.5;
const MAX_EPOCHS: usize = 1000;

/// Smallest epoch count for which every correctness value is a multiple of
/// `1 / epochs`.
pub(super) fn infer_epochs(correctness: &[f64]) -> Option<usize> {
    (1..=MAX_EPOCHS).find(|&e| {
        correctness.iter().all(|&c| {
            let k = c * e as f64;
            (k - k.round()).abs() < 1e-6
        })
    })
}

/// Blue at 0 through yellow to red at 1.
fn color(t: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 3] = [
        (0.0, [44.0, 123.0, 182.0]),
        (0.5, [235.0, 200.0, 60.0]),
        (1.0, [215.0, 25.0, 28.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    let (a, b) = if t <= 0.5 { (STOPS[0], STOPS[1]) } else { (STOPS[1], STOPS[2]) };
    let f = (t - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + (b.1[i] - a.1[i]) * f).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub(super) struct Scatter<'a> {
    map: &'a DataMap,
    epochs: Option<usize>,
}

impl<'a> Scatter<'a> {
    pub(super) fn new(map: &'a DataMap) -> Self {
        let correctness: Vec<f64> = map.points.iter().map(|p| p.correctness).collect();
        let epochs = if map.epochs > 0 { Some(map.epochs) } else { infer_epochs(&correctness) };
        Self { map, epochs }
    }

    pub(super) fn epochs(&self) -> Option<usize> {
        self.epochs
    }

    fn px(&self, variability: f64) -> f64 {
        LEFT + variability.clamp(0.0, X_MAX) / X_MAX * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, confidence: f64) -> f64 {
        HEIGHT - BOTTOM - confidence.clamp(0.0, 1.0) * (HEIGHT - TOP - BOTTOM)
    }

    pub(super) fn write_svg<W: Write>(&self, w: &mut W, meta: &Metadata) -> Result<()> {
        writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        )?;
        writeln!(w, "<metadata>{}</metadata>", xml_escape(&meta.to_json()))?;
        writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
        let (x0, x1) = (self.px(0.0), self.px(X_MAX));
        let (y0, y1) = (self.py(0.0), self.py(1.0));
        writeln!(w, r##"<g stroke="#ccc" stroke-width="0.5">"##)?;
        for i in 0..=5 {
            let x = self.px(i as f64 * 0.1);
            writeln!(w, r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}"/>"#)?;
            let y = self.py(i as f64 * 0.2);
            writeln!(w, r#"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}"/>"#)?;
        }
        writeln!(w, "</g>")?;
        writeln!(w, r##"<g fill="#333">"##)?;
        for i in 0..=5 {
            let x = self.px(i as f64 * 0.1);
            writeln!(w, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{:.1}</text>"#, y0 + 16.0, i as f64 * 0.1)?;
            let y = self.py(i as f64 * 0.2);
            writeln!(w, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{:.1}</text>"#, x0 - 6.0, y + 4.0, i as f64 * 0.2)?;
        }
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">variability</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0
        )?;
        writeln!(
            w,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">confidence</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0
        )?;
        writeln!(w, "</g>")?;
        writeln!(
            w,
            r##"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
            x1 - x0,
            y0 - y1
        )?;
        writeln!(w, r#"<g fill-opacity="0.6">"#)?;
        for p in &self.map.points {
            writeln!(
                w,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{}"/>"#,
                self.px(p.variability),
                self.py(p.confidence),
                color(p.correctness)
            )?;
        }
        writeln!(w, "</g>")?;
        self.write_legend(w, x1 + 20.0, y1)?;
        writeln!(w, "</svg>")?;
        Ok(())
    }

    fn write_legend<W: Write>(&self, w: &mut W, x: f64, y: f64) -> Result<()> {
        writeln!(w, r##"<g fill="#333">"##)?;
        writeln!(w, r#"<text x="{x:.2}" y="{:.2}">correctness</text>"#, y + 10.0)?;
        let levels: Vec<f64> = match self.epochs {
            Some(e) if e <= 10 => (0..=e).map(|k| k as f64 / e as f64).collect(),
            _ => (0..=5).map(|k| k as f64 / 5.0).collect(),
        };
        for (i, &c) in levels.iter().rev().enumerate() {
            let cy = y + 30.0 + i as f64 * 20.0;
            writeln!(
                w,
                r#"<circle cx="{:.2}" cy="{cy:.2}" r="5" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                x + 6.0,
                color(c),
                x + 18.0,
                cy + 4.0,
                format_level(c)
            )?;
        }
        writeln!(w, "</g>")?;
        Ok(())
    }

    pub(super) fn write_points<W: Write>(&self, w: &mut W, meta: &Metadata) -> Result<()> {
        format::write_tsv_header(w, meta)?;
        writeln!(w, "item_id\tannotator_id\tvariability\tconfidence\tcorrectness\tcolor")?;
        for p in &self.map.points {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}",
                format::tsv_cell(&p.key.item_id),
                format::tsv_cell(p.key.annotator_id.as_deref().unwrap_or("")),
                format::num(p.variability),
                format::num(p.confidence),
                format::num(p.correctness),
                color(p.correctness)
            )?;
        }
        Ok(())
    }
}

fn format_level(c: f64) -> String {
    let s = format!("{c:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epochs_from_correctness() {
        assert_eq!(infer_epochs(&[0.0, 0.2, 0.4, 1.0]), Some(5));
        assert_eq!(infer_epochs(&[0.0, 1.0]), Some(1));
        assert_eq!(infer_epochs(&[1.0 / 3.0, 0.5]), Some(6));
        assert_eq!(infer_epochs(&[std::f64::consts::FRAC_1_SQRT_2]), None);
    }

    #[test]
    fn color_endpoints() {
        assert_eq!(color(0.0), "#2c7bb6");
        assert_eq!(color(1.0), "#d7191c");
        assert_eq!(color(0.5), "#ebc83c");
    }

    #[test]
    fn levels() {
        assert_eq!(format_level(0.2), "0.2");
        assert_eq!(format_level(1.0), "1");
        assert_eq!(format_level(0.0), "0");
    }
}
