//! Minimal SVG writer and the three chart types used in reports.
//!
//! All output uses a fixed 800×500 viewBox and fixed number formatting, so
//! identical inputs give identical bytes.

use std::fmt::Write as _;

use super::fmt4;
use crate::attention::HeadMatrix;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 500.0;

const PLOT_LEFT: f64 = 80.0;
const PLOT_RIGHT: f64 = 640.0;
const PLOT_TOP: f64 = 50.0;
const PLOT_BOTTOM: f64 = 440.0;

/// Light blue for comma-absent, dark blue for comma-present.
pub const COMMA_COLORS: [&str; 2] = ["#9ecae1", "#08519c"];
const SERIES_COLORS: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];

const NEGATIVE: (f64, f64, f64) = (33.0, 102.0, 172.0);
const NEUTRAL: (f64, f64, f64) = (247.0, 247.0, 247.0);
const POSITIVE: (f64, f64, f64) = (178.0, 24.0, 43.0);

pub(crate) fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Svg {
    body: String,
}

impl Svg {
    fn new() -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {w} {h}" width="{w}" height="{h}" font-family="sans-serif">"#,
            w = WIDTH,
            h = HEIGHT
        );
        let mut svg = Svg { body };
        svg.rect(0.0, 0.0, WIDTH, HEIGHT, "#ffffff", None);
        svg
    }

    fn raw(&mut self, element: &str) {
        self.body.push_str(element);
        self.body.push('\n');
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, class: Option<&str>) {
        let class = class.map(|c| format!(r#" class="{c}""#)).unwrap_or_default();
        self.raw(&format!(
            r#"<rect{class} x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
            fmt4(x),
            fmt4(y),
            fmt4(w),
            fmt4(h)
        ));
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        self.raw(&format!(
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{stroke}" stroke-width="1"/>"#,
            fmt4(x1),
            fmt4(y1),
            fmt4(x2),
            fmt4(y2)
        ));
    }

    fn text(&mut self, x: f64, y: f64, size: u32, anchor: &str, content: &str) {
        self.raw(&format!(
            r#"<text x="{}" y="{}" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            fmt4(x),
            fmt4(y),
            escape(content)
        ));
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn lerp(a: (f64, f64, f64), b: (f64, f64, f64), t: f64) -> String {
    let c = |x: f64, y: f64| (x + (y - x) * t).round().clamp(0.0, 255.0) as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

/// Diverging color for `value` on a scale symmetric about 0 with half-width `limit`.
pub fn diverging_color(value: f64, limit: f64) -> String {
    let t = if limit > 0.0 {
        (value / limit).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    if t < 0.0 {
        lerp(NEUTRAL, NEGATIVE, -t)
    } else {
        lerp(NEUTRAL, POSITIVE, t)
    }
}

/// Elements drawn by [`heatmap`] besides the cells.
pub const HEATMAP_CHROME: usize = 18;

/// Layer on the y axis (layer 0 at the top), head on the x axis.
pub fn heatmap(title: &str, m: &HeadMatrix) -> String {
    let (lo, hi) = m.min_max();
    let limit = lo.abs().max(hi.abs());
    let mut svg = Svg::new();
    svg.text(WIDTH / 2.0, 30.0, 18, "middle", title);

    let cell_w = (PLOT_RIGHT - PLOT_LEFT) / m.n_heads as f64;
    let cell_h = (PLOT_BOTTOM - PLOT_TOP) / m.n_layers as f64;
    for layer in 0..m.n_layers {
        for head in 0..m.n_heads {
            let fill = diverging_color(m.get(layer, head), limit);
            svg.rect(
                PLOT_LEFT + head as f64 * cell_w,
                PLOT_TOP + layer as f64 * cell_h,
                cell_w,
                cell_h,
                &fill,
                Some("cell"),
            );
        }
    }
    svg.text((PLOT_LEFT + PLOT_RIGHT) / 2.0, HEIGHT - 15.0, 14, "middle", "head");
    svg.text(20.0, (PLOT_TOP + PLOT_BOTTOM) / 2.0, 14, "middle", "layer");
    svg.text(PLOT_LEFT + cell_w / 2.0, PLOT_BOTTOM + 18.0, 11, "middle", "0");
    svg.text(PLOT_RIGHT - cell_w / 2.0, PLOT_BOTTOM + 18.0, 11, "middle", &(m.n_heads - 1).to_string());
    svg.text(PLOT_LEFT - 8.0, PLOT_TOP + cell_h / 2.0 + 4.0, 11, "end", "0");
    svg.text(PLOT_LEFT - 8.0, PLOT_BOTTOM - cell_h / 2.0 + 4.0, 11, "end", &(m.n_layers - 1).to_string());

    // legend: gradient from −limit to +limit, labelled with the data min/max
    let (lx, ly, lw, lh) = (680.0, PLOT_TOP, 24.0, PLOT_BOTTOM - PLOT_TOP);
    svg.raw(&format!(
        r#"<defs><linearGradient id="scale" x1="0" y1="1" x2="0" y2="0"><stop offset="0" stop-color="{}"/><stop offset="0.5" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>"#,
        diverging_color(-1.0, 1.0),
        diverging_color(0.0, 1.0),
        diverging_color(1.0, 1.0)
    ));
    svg.raw(&format!(
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="url(#scale)" stroke="#333333"/>"##,
        fmt4(lx),
        fmt4(ly),
        fmt4(lw),
        fmt4(lh)
    ));
    svg.text(lx + lw + 6.0, ly + 10.0, 11, "start", &format!("max {}", fmt4(hi)));
    svg.text(lx + lw + 6.0, ly + lh, 11, "start", &format!("min {}", fmt4(lo)));
    svg.text(lx + lw + 6.0, ly + lh / 2.0 + 4.0, 11, "start", &format!("±{}", fmt4(limit)));
    svg.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSeries {
    pub label: String,
    pub values: Vec<Option<f64>>,
    pub dashed: bool,
    pub color: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineChart {
    pub title: String,
    pub y_label: String,
    pub x_labels: Vec<String>,
    pub y_range: (f64, f64),
    pub series: Vec<LineSeries>,
}

fn y_pos(v: f64, (lo, hi): (f64, f64)) -> f64 {
    let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
    PLOT_BOTTOM - t * (PLOT_BOTTOM - PLOT_TOP)
}

fn axes(svg: &mut Svg, title: &str, y_label: &str, y_range: (f64, f64)) {
    svg.text(WIDTH / 2.0, 30.0, 18, "middle", title);
    svg.line(PLOT_LEFT, PLOT_BOTTOM, PLOT_RIGHT, PLOT_BOTTOM, "#333333");
    svg.line(PLOT_LEFT, PLOT_TOP, PLOT_LEFT, PLOT_BOTTOM, "#333333");
    for k in 0..=4 {
        let v = y_range.0 + (y_range.1 - y_range.0) * k as f64 / 4.0;
        let y = y_pos(v, y_range);
        svg.line(PLOT_LEFT - 4.0, y, PLOT_LEFT, y, "#333333");
        svg.text(PLOT_LEFT - 8.0, y + 4.0, 11, "end", &fmt4(v));
    }
    svg.raw(&format!(
        r#"<text x="20" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        fmt4((PLOT_TOP + PLOT_BOTTOM) / 2.0),
        fmt4((PLOT_TOP + PLOT_BOTTOM) / 2.0),
        escape(y_label)
    ));
}

pub fn line_chart(chart: &LineChart) -> String {
    let mut svg = Svg::new();
    axes(&mut svg, &chart.title, &chart.y_label, chart.y_range);
    let n = chart.x_labels.len().max(1);
    let x_pos = |i: usize| {
        if n == 1 {
            (PLOT_LEFT + PLOT_RIGHT) / 2.0
        } else {
            PLOT_LEFT + 30.0 + i as f64 * (PLOT_RIGHT - PLOT_LEFT - 60.0) / (n - 1) as f64
        }
    };
    for (i, label) in chart.x_labels.iter().enumerate() {
        svg.text(x_pos(i), PLOT_BOTTOM + 18.0, 11, "middle", label);
    }
    for (s_idx, series) in chart.series.iter().enumerate() {
        let color = series
            .color
            .clone()
            .unwrap_or_else(|| SERIES_COLORS[s_idx % SERIES_COLORS.len()].to_string());
        // break the path at missing values
        let mut d = String::new();
        let mut pen_down = false;
        for (i, v) in series.values.iter().enumerate() {
            match v {
                Some(v) if v.is_finite() => {
                    let cmd = if pen_down { 'L' } else { 'M' };
                    let _ = write!(d, "{cmd}{} {} ", fmt4(x_pos(i)), fmt4(y_pos(*v, chart.y_range)));
                    pen_down = true;
                }
                _ => pen_down = false,
            }
        }
        let dash = if series.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        svg.raw(&format!(
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            d.trim_end()
        ));
        for (i, v) in series.values.iter().enumerate() {
            if let Some(v) = v.filter(|v| v.is_finite()) {
                svg.raw(&format!(
                    r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                    fmt4(x_pos(i)),
                    fmt4(y_pos(v, chart.y_range))
                ));
            }
        }
        let ly = PLOT_TOP + 16.0 * s_idx as f64;
        svg.raw(&format!(
            r#"<line x1="655" y1="{y}" x2="685" y2="{y}" stroke="{color}" stroke-width="2"{dash}/>"#,
            y = fmt4(ly)
        ));
        svg.text(690.0, ly + 4.0, 11, "start", &series.label);
    }
    svg.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarGroup {
    pub label: String,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub title: String,
    pub y_label: String,
    pub y_range: (f64, f64),
    pub series_labels: Vec<String>,
    pub colors: Vec<String>,
    pub groups: Vec<BarGroup>,
}

pub fn bar_chart(chart: &BarChart) -> String {
    let mut svg = Svg::new();
    axes(&mut svg, &chart.title, &chart.y_label, chart.y_range);
    let groups = chart.groups.len().max(1);
    let per_group = chart.series_labels.len().max(1);
    let group_w = (PLOT_RIGHT - PLOT_LEFT) / groups as f64;
    let bar_w = group_w * 0.8 / per_group as f64;
    for (g, group) in chart.groups.iter().enumerate() {
        let x0 = PLOT_LEFT + g as f64 * group_w + group_w * 0.1;
        for (s, v) in group.values.iter().enumerate() {
            let Some(v) = v.filter(|v| v.is_finite()) else {
                continue;
            };
            let top = y_pos(v, chart.y_range);
            svg.rect(
                x0 + s as f64 * bar_w,
                top,
                bar_w,
                PLOT_BOTTOM - top,
                &chart.colors[s % chart.colors.len()],
                Some("bar"),
            );
            svg.text(x0 + (s as f64 + 0.5) * bar_w, top - 4.0, 10, "middle", &format!("{v:.2}"));
        }
        svg.text(x0 + group_w * 0.4, PLOT_BOTTOM + 18.0, 11, "middle", &group.label);
    }
    for (s, label) in chart.series_labels.iter().enumerate() {
        let ly = PLOT_TOP + 16.0 * s as f64;
        svg.rect(655.0, ly - 6.0, 12.0, 12.0, &chart.colors[s % chart.colors.len()], None);
        svg.text(672.0, ly + 4.0, 11, "start", label);
    }
    svg.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_elements(svg: &str) -> usize {
        svg.match_indices('<')
            .filter(|(i, _)| svg[i + 1..].starts_with(|c: char| c.is_ascii_alphabetic()))
            .count()
    }

    #[test]
    fn single_zero_cell_is_neutral() {
        let svg = heatmap("t", &HeadMatrix::zeros(1, 1));
        assert_eq!(svg.matches(r#"class="cell""#).count(), 1);
        assert!(svg.contains(r##"class="cell" x="80" y="50" width="560" height="390" fill="#f7f7f7"##), "{svg}");
    }

    #[test]
    fn extremes_at_corners() {
        let m = HeadMatrix {
            n_layers: 2,
            n_heads: 2,
            values: vec![-1.0, 0.0, 0.0, 1.0],
        };
        let svg = heatmap("t", &m);
        let fills: Vec<&str> = svg
            .lines()
            .filter(|l| l.contains(r#"class="cell""#))
            .map(|l| &l[l.find("fill=\"").unwrap() + 6..l.find("fill=\"").unwrap() + 13])
            .collect();
        assert_eq!(fills, ["#2166ac", "#f7f7f7", "#f7f7f7", "#b2182b"]);
    }

    #[test]
    fn element_count_is_cells_plus_chrome() {
        for (l, h) in [(24, 16), (1, 1), (40, 40)] {
            let svg = heatmap("t", &HeadMatrix::zeros(l, h));
            assert_eq!(count_elements(&svg), l * h + HEATMAP_CHROME, "{l}x{h}");
        }
    }

    #[test]
    fn constant_series_is_horizontal_mid_axis() {
        let chart = LineChart {
            title: "t".into(),
            y_label: "p".into(),
            x_labels: (1..=5).map(|k| k.to_string()).collect(),
            y_range: (0.0, 1.0),
            series: vec![LineSeries {
                label: "s".into(),
                values: vec![Some(0.5); 5],
                dashed: false,
                color: None,
            }],
        };
        let svg = line_chart(&chart);
        let mid = fmt4((PLOT_TOP + PLOT_BOTTOM) / 2.0);
        let path = svg.lines().find(|l| l.starts_with("<path")).unwrap();
        assert_eq!(path.matches(&format!(" {mid}")).count(), 5, "{path}");
        assert!(!path.contains("stroke-dasharray"));
    }

    #[test]
    fn escapes_text() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
