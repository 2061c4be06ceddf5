//! SVG 1.1 profile panels. Output is a pure function of the inputs (fixed decimals, no
//! timestamps), so regenerated files are byte-identical.

use std::fmt::Write;

/// One profile panel: the unit disc in the `(x₀, x₁)` plane, `x₀` to the right.
#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    /// Dashed chord `x₀ = chord`.
    pub chord: f64,
    /// Polyline in `(x₀, x₁)`.
    pub curve: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

const SIZE: f64 = 320.0;
const MARGIN: f64 = 20.0;

fn px(x0: f64, x1: f64) -> (f64, f64) {
    let s = 0.5 * (SIZE - 2.0 * MARGIN);
    (SIZE / 2.0 + s * x0, SIZE / 2.0 - s * x1)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(panel: &Panel) -> String {
    let mut out = String::new();
    let h = SIZE + 16.0 * panel.notes.len() as f64 + 8.0;
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE:.0}" height="{h:.0}" viewBox="0 0 {SIZE:.0} {h:.0}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(&panel.title));
    let (cx, cy) = px(0.0, 0.0);
    let rad = 0.5 * (SIZE - 2.0 * MARGIN);
    let _ = writeln!(
        out,
        r##"<circle cx="{cx:.3}" cy="{cy:.3}" r="{rad:.3}" fill="none" stroke="#888888" stroke-width="1"/>"##
    );
    let c = panel.chord.clamp(-1.0, 1.0);
    let half = (1.0 - c * c).max(0.0).sqrt();
    let (ax, ay) = px(c, half);
    let (bx, by) = px(c, -half);
    let _ = writeln!(
        out,
        r##"<line x1="{ax:.3}" y1="{ay:.3}" x2="{bx:.3}" y2="{by:.3}" stroke="#444444" stroke-width="1" stroke-dasharray="5,4"/>"##
    );
    let pts: Vec<String> = panel
        .curve
        .iter()
        .map(|&(a, b)| {
            let (x, y) = px(a, b);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#1f4e9c" stroke-width="2"/>"##, pts.join(" "));
    for (i, note) in panel.notes.iter().enumerate() {
        let y = SIZE + 12.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<text x="{MARGIN:.0}" y="{y:.0}" font-family="monospace" font-size="12">{}</text>"#,
            escape(note)
        );
    }
    out.push_str("</svg>\n");
    out
}
