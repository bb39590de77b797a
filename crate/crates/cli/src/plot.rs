use std::fmt::Write;

use crate::SweepPoint;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 7] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"];

/// APA against the swept parameter, one polyline per configuration.
pub fn line_plot(points: &[SweepPoint], x_label: &str) -> String {
    let mut configs = Vec::new();
    for p in points {
        if !configs.contains(&p.config) {
            configs.push(p.config);
        }
    }
    let x_max = points.iter().map(|p| p.value).fold(0.0, f64::max);
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let sx = |x: f64| MARGIN + x / x_max * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - y.clamp(0.0, 1.0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#);
    for i in 0..=5 {
        let v = f64::from(i) / 5.0;
        let y = sy(v);
        let _ = writeln!(s, r##"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="#ddd"/>"##);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.0}</text>"#, x0 - 6.0, y + 4.0, v * 100.0);
        let xv = x_max * v;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{:.2}</text>"#, sx(xv), y0 + 18.0, xv);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, WIDTH / 2.0, HEIGHT - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">APA</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for (i, c) in configs.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts: Vec<&SweepPoint> = points.iter().filter(|p| p.config == *c).collect();
        pts.sort_by(|a, b| a.value.total_cmp(&b.value));
        let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.value), sy(p.apa))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#, path.join(" "));
        for p in &pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(p.value), sy(p.apa));
        }
        let ly = y1 + 16.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, x1 - 150.0, x1 - 130.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{c}</text>"#, x1 - 124.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}
