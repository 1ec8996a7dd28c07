//! Static SVG line charts: daily profile panels and ground-truth/prediction overlays.

use std::fmt::Write as _;

use crate::scenario::Dataset;
use crate::surrogate::slot_group;

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
    pub dashed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 10] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];
const PANEL_W: f64 = 480.0;
const PANEL_H: f64 = 300.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

fn draw_panel(svg: &mut String, p: &Panel, ox: f64, oy: f64) {
    let (l, r, t, b) = (56.0, 12.0, 28.0, 40.0);
    let (pw, ph) = (PANEL_W - l - r, PANEL_H - t - b);
    let n = p.series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    let finite = p.series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite());
    let (mut lo, mut hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let xmax = (n.max(2) - 1) as f64;
    let sx = |i: f64| ox + l + pw * i / xmax;
    let sy = |v: f64| oy + t + ph * (1.0 - (v - lo) / (hi - lo));

    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#, ox + l + pw / 2.0, oy + 18.0, esc(&p.title));
    let _ = writeln!(svg, r##"<rect x="{:.1}" y="{:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#444"/>"##, ox + l, oy + t);
    for v in ticks(lo, hi) {
        let y = sy(v);
        let _ = writeln!(svg, r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, ox + l, ox + l + pw);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#, ox + l - 4.0, y + 3.0, fmt_tick(v));
    }
    for v in ticks(0.0, xmax) {
        let x = sx(v);
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#, oy + t + ph + 14.0, fmt_tick(v));
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#, ox + l + pw / 2.0, oy + PANEL_H - 6.0, esc(&p.x_label));
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        ox + 14.0,
        oy + t + ph / 2.0,
        ox + 14.0,
        oy + t + ph / 2.0,
        esc(&p.y_label)
    );
    for (k, s) in p.series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .map(|(i, &v)| format!("{:.1},{:.1}", sx(i as f64), sy(v)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#, pts.join(" "));
        if k < 12 {
            let ly = oy + t + 10.0 + 12.0 * k as f64;
            let lx = ox + l + pw - 110.0;
            let _ = writeln!(svg, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{colour}" stroke-width="2"{dash}/>"#, lx + 14.0);
            let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="9">{}</text>"#, lx + 18.0, ly + 3.0, esc(&s.name));
        }
    }
}

fn fmt_tick(v: f64) -> String {
    if v == v.round() && v.abs() < 1e6 {
        format!("{v:.0}")
    } else if v.abs() >= 1e-2 && v.abs() < 1e4 {
        format!("{v:.2}").trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

/// Panels laid out two per row in one SVG document.
pub fn render(panels: &[Panel]) -> String {
    let cols = panels.len().clamp(1, 2);
    let rows = panels.len().div_ceil(2).max(1);
    let (w, h) = (PANEL_W * cols as f64, PANEL_H * rows as f64);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut svg, p, PANEL_W * (i % 2) as f64, PANEL_H * (i / 2) as f64);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Long-format CSV of every plotted point: `panel,series,index,value`.
pub fn panels_csv(panels: &[Panel]) -> String {
    let mut s = String::from("panel,series,index,value\n");
    for p in panels {
        for ser in &p.series {
            for (i, v) in ser.values.iter().enumerate() {
                let _ = writeln!(s, "{},{},{i},{v}", p.title, ser.name);
            }
        }
    }
    s
}

/// `|V|`, `|I|`, `θ_V` and `θ_I` panels over the first `hours` rows of a
/// dataset, each slot min-max normalized over the plotted rows.
pub fn profile_panels(ds: &Dataset, hours: usize) -> Vec<Panel> {
    let rows = hours.min(ds.len());
    [("V", "Normalized output voltage"), ("I", "Normalized output current"), ("thV", "Normalized voltage angle"), ("thI", "Normalized current angle")]
        .iter()
        .map(|&(group, title)| {
            let series = ds
                .y_names
                .iter()
                .enumerate()
                .filter(|(_, n)| slot_group(n) == group)
                .map(|(j, n)| {
                    let raw: Vec<f64> = (0..rows).map(|r| ds.y_row(r)[j]).collect();
                    let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                    let values = raw.iter().map(|v| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 }).collect();
                    Series { name: n.split_once(':').map_or(n.as_str(), |(_, rest)| rest).to_string(), values, dashed: false }
                })
                .collect();
            Panel { title: title.into(), x_label: "hour".into(), y_label: "normalized".into(), series }
        })
        .collect()
}

/// Ground truth (solid) against prediction (dashed) for the named slots.
pub fn overlay_panel(title: &str, slots: &[(String, Vec<f64>, Vec<f64>)]) -> Panel {
    let mut series = Vec::new();
    for (name, gt, pred) in slots {
        series.push(Series { name: format!("{name} GT"), values: gt.clone(), dashed: false });
        series.push(Series { name: format!("{name} NN"), values: pred.clone(), dashed: true });
    }
    Panel { title: title.into(), x_label: "hour".into(), y_label: "value".into(), series }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_values_are_round() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(ticks(0.0, 23.0), vec![0.0, 5.0, 10.0, 15.0, 20.0]);
    }

    #[test]
    fn svg_is_well_formed() {
        let p = Panel {
            title: "a<b".into(),
            x_label: "hour".into(),
            y_label: "pu".into(),
            series: vec![Series { name: "x".into(), values: vec![1.0, 2.0, f64::NAN, 1.5], dashed: true }],
        };
        let svg = render(&[p.clone(), p.clone(), p]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("height=\"600\""));
    }

    #[test]
    fn four_profile_panels() {
        let net = crate::assets::ieee4();
        let cfg = crate::scenario::ScenarioConfig { horizon: 24, noise: 0.05, ..Default::default() };
        let ds = crate::scenario::generate_dataset(&net, &cfg, &Default::default()).unwrap().0;
        let panels = profile_panels(&ds, 24);
        assert_eq!(panels.len(), 4);
        assert!(panels.iter().all(|p| p.series.len() == 12 && p.series[0].values.len() == 24));
        assert!(panels_csv(&panels).lines().count() == 1 + 4 * 12 * 24);
    }
}
