//! File emission: CSV tables, JSON documents and SVG heatmaps.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// 17 significant digits, the round-trip precision of `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Output(format!("{}: {e}", path.display()))
}

pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Colormap stops (value, r, g, b); linear interpolation in between, values
/// clamped to [0, 1].
pub const COLORMAP: [(f64, u8, u8, u8); 5] = [
    (0.00, 0x44, 0x01, 0x54),
    (0.25, 0x3b, 0x52, 0x8b),
    (0.50, 0x21, 0x91, 0x8c),
    (0.75, 0x5e, 0xc9, 0x62),
    (1.00, 0xfd, 0xe7, 0x25),
];

pub fn color(value: f64) -> String {
    let v = if value.is_nan() { 0.0 } else { value.clamp(0.0, 1.0) };
    let k = COLORMAP.iter().rposition(|s| s.0 <= v).unwrap_or(0).min(COLORMAP.len() - 2);
    let (a, b) = (COLORMAP[k], COLORMAP[k + 1]);
    let f = (v - a.0) / (b.0 - a.0);
    let mix = |x: u8, y: u8| (x as f64 + f * (y as f64 - x as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.1, b.1), mix(a.2, b.2), mix(a.3, b.3))
}

pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// `cells[row][col]`, drawn with row 0 at the top.
    pub cells: &'a [Vec<f64>],
    pub row_labels: Vec<String>,
    /// Vertical rules at these column positions (fractions of the width).
    pub rules: Vec<f64>,
    pub config_hash: &'a str,
}

const LEFT: f64 = 60.0;
const TOP: f64 = 30.0;
const PLOT_W: f64 = 720.0;
const ROW_H: f64 = 24.0;

impl Heatmap<'_> {
    pub fn render(&self) -> String {
        let rows = self.cells.len();
        let cols = self.cells.first().map_or(0, Vec::len).max(1);
        let cell_w = PLOT_W / cols as f64;
        let plot_h = ROW_H * rows as f64;
        let width = LEFT + PLOT_W + 90.0;
        let height = TOP + plot_h + 50.0;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#
        );
        let _ = writeln!(s, "<metadata>config-sha256: {}</metadata>", self.config_hash);
        let _ = writeln!(s, r#"<title>{}</title>"#, escape(self.title));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="18" font-family="sans-serif" font-size="13">{}</text>"#,
            LEFT,
            escape(self.title)
        );
        let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
        for (r, row) in self.cells.iter().enumerate() {
            let y = TOP + r as f64 * ROW_H;
            for (c, v) in row.iter().enumerate() {
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.3}" y="{y:.1}" width="{:.3}" height="{ROW_H:.1}" fill="{}"/>"#,
                    LEFT + c as f64 * cell_w,
                    cell_w + 0.05,
                    color(*v)
                );
            }
        }
        let _ = writeln!(s, "</g>");
        for f in &self.rules {
            let x = LEFT + f * PLOT_W;
            let _ = writeln!(
                s,
                r#"<line x1="{x:.3}" y1="{TOP:.1}" x2="{x:.3}" y2="{:.1}" stroke="white" stroke-width="1"/>"#,
                TOP + plot_h
            );
        }
        for (r, label) in self.row_labels.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                TOP + (r as f64 + 0.65) * ROW_H,
                escape(label)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            LEFT + PLOT_W / 2.0,
            TOP + plot_h + 30.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.1}" font-family="sans-serif" font-size="12" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(self.y_label)
        );
        // colorbar
        let bar_x = LEFT + PLOT_W + 20.0;
        for k in 0..50 {
            let v = 1.0 - k as f64 / 49.0;
            let _ = writeln!(
                s,
                r#"<rect x="{bar_x:.1}" y="{:.3}" width="16" height="{:.3}" fill="{}"/>"#,
                TOP + k as f64 * plot_h / 50.0,
                plot_h / 50.0 + 0.05,
                color(v)
            );
        }
        for (v, y) in [(1.0, TOP + 8.0), (0.0, TOP + plot_h)] {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{y:.1}" font-family="sans-serif" font-size="10">{v:.1}</text>"#,
                bar_x + 20.0
            );
        }
        s.push_str("</svg>\n");
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.render()).map_err(|e| io_err(path, e))
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
