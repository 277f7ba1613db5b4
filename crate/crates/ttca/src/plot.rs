//! Static SVG of driven paths. The lateral axis is stretched to fill the
//! frame, so lane changes stay visible over a few hundred metres.

use std::fmt::Write;

use ttca_core::sim::TrajectoryLog;

const W: f64 = 900.0;
const H: f64 = 300.0;
const PAD: f64 = 40.0;
const COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

pub fn paths_svg(runs: &[(&str, &TrajectoryLog)]) -> String {
    let pts = runs.iter().flat_map(|(_, l)| l.samples.iter().map(|s| (s.x, s.y)));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r##"<rect width="{W}" height="{H}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#888888"/>"##,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}" font-size="11">x {x0:.1} m</text>"#, H - 12.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">x {x1:.1} m</text>"#, W - PAD, H - 12.0);
    let _ = writeln!(s, r#"<text x="4" y="{}" font-size="11">y {y1:.2}</text>"#, PAD - 6.0);
    let _ = writeln!(s, r#"<text x="4" y="{}" font-size="11">y {y0:.2}</text>"#, H - PAD + 14.0);
    for (i, (name, log)) in runs.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        // every fifth sample is plenty at 100 Hz
        for (k, p) in log.samples.iter().step_by(5).enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, sx(p.x), sy(p.y));
        }
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" fill="{color}">{name}</text>"#, W - PAD - 80.0, PAD + 16.0 * (i + 1) as f64);
    }
    s.push_str("</svg>\n");
    s
}
