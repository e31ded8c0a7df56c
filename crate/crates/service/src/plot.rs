//! Plot data for lexicons, calibration curves and benchmark tables, as CSV
//! or as minimal SVG line charts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use verbum_core::lexicon::Lexicon;
use verbum_core::rasch::CalibrationCurve;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;
const COLOURS: [&str; 9] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#17becf",
];

/// Named polylines in data coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

impl Chart {
    fn sx(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        PAD + (x - lo) / (hi - lo) * (W - 2.0 * PAD)
    }

    fn sy(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        H - PAD - (y - lo) / (hi - lo) * (H - 2.0 * PAD)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,x,y\n");
        for (name, pts) in &self.series {
            for (x, y) in pts {
                let _ = writeln!(out, "{name},{x},{y}");
            }
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        let (x0, x1, y0, y1) = (PAD, W - PAD, H - PAD, PAD);
        let _ = writeln!(s, r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" fill="none" stroke="black"/>"#);
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x_range.0 + f * (self.x_range.1 - self.x_range.0);
            let yv = self.y_range.0 + f * (self.y_range.1 - self.y_range.0);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                self.sx(xv),
                y0 + 16.0,
                tick(xv)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                x0 - 6.0,
                self.sy(yv) + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(&self.y_label)
        );
        for (i, (name, pts)) in self.series.iter().enumerate() {
            let colour = COLOURS[i % COLOURS.len()];
            let points: Vec<String> = pts
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", self.sx(x), self.sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
                points.join(" ")
            );
            let ly = PAD + 14.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{ly:.1}" fill="{colour}">{}</text>"#,
                W - PAD - 120.0,
                escape(name)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    format!("{r}")
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn lexicon_chart(lex: &Lexicon) -> Chart {
    Chart {
        title: format!("lexicon of {}", lex.owner()),
        x_label: "proportion".into(),
        y_label: "membership".into(),
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        series: lex
            .labels()
            .iter()
            .map(|l| {
                let [a, b, c, d] = l.meaning.corners();
                (l.name.clone(), vec![(a, 0.0), (b, 1.0), (c, 1.0), (d, 0.0)])
            })
            .collect(),
    }
}

pub fn curve_chart(curve: &CalibrationCurve) -> Chart {
    Chart {
        title: "difficulty by label".into(),
        x_label: "label median".into(),
        y_label: "mean model probability".into(),
        x_range: (0.0, 1.0),
        y_range: (0.0, 1.0),
        series: vec![
            ("identity".into(), vec![(0.0, 0.0), (1.0, 1.0)]),
            (
                "observed".into(),
                curve.points.iter().map(|p| (p.median, p.mean_probability)).collect(),
            ),
        ],
    }
}

/// Chart from `step,kind,mean_abs_deviation` rows.
pub fn bench_chart(rows: &[(usize, String, f64)]) -> Chart {
    let mut by_kind: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    let mut order = Vec::new();
    for (step, kind, dev) in rows {
        if !by_kind.contains_key(kind.as_str()) {
            order.push(kind.as_str());
        }
        by_kind.entry(kind).or_default().push((*step as f64, *dev));
    }
    let max_step = rows.iter().map(|r| r.0).max().unwrap_or(1).max(2) as f64;
    let max_dev = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    Chart {
        title: "deviation from Bayes".into(),
        x_label: "draw".into(),
        y_label: "mean |reported - Bayes|".into(),
        x_range: (1.0, max_step),
        y_range: (0.0, if max_dev > 0.0 { max_dev * 1.1 } else { 1.0 }),
        series: order
            .into_iter()
            .map(|k| (k.to_string(), by_kind.remove(k).unwrap_or_default()))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_chart_traces_trapezoids() {
        let chart = lexicon_chart(&Lexicon::default_lexicon(3).unwrap());
        assert_eq!(chart.series.len(), 3);
        assert_eq!(chart.series[0].1[1].1, 1.0);
        let svg = chart.to_svg();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(chart.to_csv().starts_with("series,x,y\nL1,0,0\n"));
    }

    #[test]
    fn bench_chart_keeps_kind_order() {
        let rows = vec![
            (1, "b".to_string(), 0.1),
            (1, "a".to_string(), 0.2),
            (2, "b".to_string(), 0.05),
            (2, "a".to_string(), 0.1),
        ];
        let c = bench_chart(&rows);
        assert_eq!(c.series[0].0, "b");
        assert_eq!(c.series[1].1, vec![(1.0, 0.2), (2.0, 0.1)]);
    }
}
