//! Hand-written SVG bar charts with fixed coordinates, so identical input
//! always produces identical bytes.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChartError {
    #[error("cannot draw a chart without rows")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// One bar per category; series are stacked.
    Stacked,
    /// One bar per series side by side within each category.
    Grouped,
}

#[derive(Debug, Clone)]
pub struct BarChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub categories: Vec<String>,
    /// `(name, value per category)`.
    pub series: Vec<(String, Vec<f64>)>,
    pub layout: Layout,
}

fn nice_ceiling(v: f64) -> f64 {
    if v <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(v.log10().floor());
    for step in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if step * mag >= v {
            return step * mag;
        }
    }
    10.0 * mag
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

impl BarChart {
    pub fn render(&self) -> Result<String, ChartError> {
        if self.categories.is_empty() {
            return Err(ChartError::Empty);
        }
        let n = self.categories.len();
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let peak = (0..n)
            .map(|i| match self.layout {
                Layout::Stacked => self.series.iter().map(|(_, v)| v[i].max(0.0)).sum::<f64>(),
                Layout::Grouped => self.series.iter().map(|(_, v)| v[i]).fold(0.0, f64::max),
            })
            .fold(0.0, f64::max);
        let y_max = nice_ceiling(peak);
        let y = |v: f64| TOP + plot_h - v / y_max * plot_h;
        let slot = plot_w / n as f64;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(&self.title)
        );
        for t in 0..=5 {
            let v = y_max * t as f64 / 5.0;
            let yy = y(v);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT:.2}" y1="{yy:.2}" x2="{:.2}" y2="{yy:.2}" stroke="#dddddd"/>"##,
                LEFT + plot_w
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.0}</text>"#,
                LEFT - 6.0,
                yy + 4.0
            );
        }
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + plot_h,
            LEFT + plot_w,
            TOP + plot_h
        );
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{:.2}" stroke="black"/>"#,
            TOP + plot_h
        );

        for (i, cat) in self.categories.iter().enumerate() {
            let x0 = LEFT + slot * i as f64;
            let _ = writeln!(
                s,
                r#"<g class="bar-group" data-category="{}">"#,
                escape(cat)
            );
            match self.layout {
                Layout::Stacked => {
                    let bw = slot * 0.6;
                    let bx = x0 + (slot - bw) / 2.0;
                    let mut acc = 0.0;
                    for (k, (name, vals)) in self.series.iter().enumerate() {
                        let v = vals[i].max(0.0);
                        if v > 0.0 {
                            let (top, bot) = (y(acc + v), y(acc));
                            let _ = writeln!(
                                s,
                                r#"<rect x="{bx:.2}" y="{top:.2}" width="{bw:.2}" height="{:.2}" fill="{}"><title>{}: {v}</title></rect>"#,
                                bot - top,
                                PALETTE[k % PALETTE.len()],
                                escape(name)
                            );
                        }
                        acc += v;
                    }
                }
                Layout::Grouped => {
                    let m = self.series.len().max(1) as f64;
                    let bw = slot * 0.8 / m;
                    for (k, (name, vals)) in self.series.iter().enumerate() {
                        let v = vals[i].max(0.0);
                        let bx = x0 + slot * 0.1 + bw * k as f64;
                        let top = y(v);
                        let _ = writeln!(
                            s,
                            r#"<rect x="{bx:.2}" y="{top:.2}" width="{bw:.2}" height="{:.2}" fill="{}"><title>{}: {v}</title></rect>"#,
                            y(0.0) - top,
                            PALETTE[k % PALETTE.len()],
                            escape(name)
                        );
                    }
                }
            }
            let _ = writeln!(s, "</g>");
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                x0 + slot / 2.0,
                TOP + plot_h + 18.0,
                escape(cat)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );
        for (k, (name, _)) in self.series.iter().enumerate() {
            let ly = TOP + 10.0 + 22.0 * k as f64;
            let lx = WIDTH - RIGHT + 16.0;
            let _ = writeln!(
                s,
                r#"<rect x="{lx:.2}" y="{:.2}" width="12" height="12" fill="{}"/>"#,
                ly - 10.0,
                PALETTE[k % PALETTE.len()]
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#,
                lx + 18.0,
                escape(name)
            );
        }
        s.push_str("</svg>\n");
        Ok(s)
    }
}
