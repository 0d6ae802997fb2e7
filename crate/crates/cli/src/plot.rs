//! Static SVG charts drawn from a results directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fsbench_core::harness::{k_for_proportion, AggregateReport, RuntimeRow};
use fsbench_core::EvalCurve;
use indexmap::IndexMap;

use crate::error::{CliError, CliResult};
use crate::run::{mean_over_seeds, slug, write_text, Timings, CURVES_DIR, REPORT_JSON, TIMINGS_JSON};

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

const W: f64 = 760.0;
const H: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

struct Svg {
    buf: String,
}

impl Svg {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut buf = String::new();
        let _ = writeln!(
            buf,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
        );
        let _ = writeln!(buf, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
        let mut svg = Self { buf };
        svg.text(width / 2.0, 28.0, title, "middle", 17.0, "");
        svg
    }

    fn text(&mut self, x: f64, y: f64, s: &str, anchor: &str, size: f64, extra: &str) {
        let _ = writeln!(
            self.buf,
            r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" font-size="{size}"{extra}>{}</text>"#,
            escape(s)
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.buf,
            r#"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}" stroke="{stroke}"/>"#
        );
    }

    fn finish(mut self) -> String {
        self.buf.push_str("</svg>\n");
        self.buf
    }
}

/// Linear map from data range to pixel range.
#[derive(Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn at(self, v: f64) -> f64 {
        let span = self.d1 - self.d0;
        let t = if span == 0.0 { 0.5 } else { (v - self.d0) / span };
        self.p0 + t * (self.p1 - self.p0)
    }
}

/// AUROC axis range padded around the data and snapped to 0.05.
fn auroc_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let lo = ((lo - 0.02) / 0.05 + 1e-9).floor() * 0.05;
    let hi = ((hi + 0.02) / 0.05 - 1e-9).ceil() * 0.05;
    (lo.max(0.0), hi.min(1.0).max(lo.max(0.0) + 0.05))
}

fn y_axis(svg: &mut Svg, y: Scale, label: &str) {
    let steps = ((y.d1 - y.d0) / 0.05).round() as usize;
    let every = steps.div_ceil(8).max(1);
    for i in (0..=steps).step_by(every) {
        let v = y.d0 + i as f64 * 0.05;
        let py = y.at(v);
        svg.line(LEFT, py, W - RIGHT, py, "#e0e0e0");
        svg.text(LEFT - 8.0, py + 4.0, &format!("{v:.2}"), "end", 11.0, "");
    }
    svg.line(LEFT, TOP, LEFT, H - BOTTOM, "black");
    svg.line(LEFT, H - BOTTOM, W - RIGHT, H - BOTTOM, "black");
    let cy = (TOP + H - BOTTOM) / 2.0;
    svg.text(18.0, cy, label, "middle", 13.0, &format!(r#" transform="rotate(-90 18 {cy:.1})""#));
}

/// Colors follow the report's method order so a method keeps its color
/// across charts.
fn color(methods: &[String], name: &str) -> &'static str {
    let i = methods.iter().position(|m| m == name).unwrap_or(methods.len());
    PALETTE[i % PALETTE.len()]
}

fn legend(svg: &mut Svg, methods: &[String], names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + i as f64 * 20.0;
        let x = W - RIGHT + 16.0;
        let _ = writeln!(
            svg.buf,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/>"#,
            y - 10.0,
            color(methods, name)
        );
        svg.text(x + 18.0, y, name, "start", 12.0, "");
    }
}

/// AUROC against selected proportion, one series per method.
pub fn line_chart(methods: &[String], dataset: &str, curves: &[&EvalCurve]) -> String {
    let mut svg = Svg::new(W, H, &format!("AUROC vs. selected proportion: {dataset}"));
    let x = Scale { d0: 0.0, d1: 1.0, p0: LEFT, p1: W - RIGHT };
    let (lo, hi) = auroc_range(curves.iter().flat_map(|c| c.points.iter().map(|p| p.auroc)));
    let y = Scale { d0: lo, d1: hi, p0: H - BOTTOM, p1: TOP };
    y_axis(&mut svg, y, "Test AUROC");
    for i in 0..=10 {
        let v = i as f64 / 10.0;
        svg.text(x.at(v), H - BOTTOM + 18.0, &format!("{:.0}%", v * 100.0), "middle", 11.0, "");
    }
    svg.text((LEFT + W - RIGHT) / 2.0, H - 18.0, "Proportion of selected features", "middle", 13.0, "");
    for c in curves {
        let color = color(methods, &c.method);
        let pts: Vec<String> = c.points.iter().map(|p| format!("{:.1},{:.1}", x.at(p.proportion), y.at(p.auroc))).collect();
        let _ = writeln!(
            svg.buf,
            r#"<polyline class="series" data-method="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(&c.method),
            pts.join(" ")
        );
        for p in &c.points {
            let _ = writeln!(
                svg.buf,
                r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                x.at(p.proportion),
                y.at(p.auroc)
            );
        }
    }
    let names: Vec<&str> = curves.iter().map(|c| c.method.as_str()).collect();
    legend(&mut svg, methods, &names);
    svg.finish()
}

/// Vertical bars in the given order.
pub fn bar_chart(methods: &[String], title: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let mut svg = Svg::new(W, H, title);
    let (lo, hi) = auroc_range(bars.iter().map(|b| b.1));
    let y = Scale { d0: lo, d1: hi, p0: H - BOTTOM, p1: TOP };
    y_axis(&mut svg, y, y_label);
    let slot = (W - RIGHT - LEFT) / bars.len().max(1) as f64;
    for (i, (name, v)) in bars.iter().enumerate() {
        let x0 = LEFT + i as f64 * slot + slot * 0.15;
        let top = y.at(*v);
        let _ = writeln!(
            svg.buf,
            r#"<rect class="bar" data-method="{}" x="{x0:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
            escape(name),
            slot * 0.7,
            (H - BOTTOM - top).max(0.0),
            color(methods, name)
        );
        svg.text(x0 + slot * 0.35, top - 4.0, &format!("{v:.3}"), "middle", 10.0, "");
    }
    let names: Vec<&str> = bars.iter().map(|b| b.0.as_str()).collect();
    legend(&mut svg, methods, &names);
    svg.finish()
}

/// Mean AUROC against total selector runtime on a log axis.
pub fn runtime_scatter(methods: &[String], rows: &[RuntimeRow]) -> String {
    let mut svg = Svg::new(W, H, "Mean AUROC vs. selector runtime");
    let floor = 1e-4;
    let logs: Vec<f64> = rows.iter().map(|r| r.selector_runtime_seconds.max(floor).log10()).collect();
    let (mut l0, mut l1) = logs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !l0.is_finite() {
        (l0, l1) = (-1.0, 1.0);
    }
    let (l0, l1) = (l0.floor(), l1.ceil().max(l0.floor() + 1.0));
    let x = Scale { d0: l0, d1: l1, p0: LEFT, p1: W - RIGHT };
    let (lo, hi) = auroc_range(rows.iter().map(|r| r.mean_auroc));
    let y = Scale { d0: lo, d1: hi, p0: H - BOTTOM, p1: TOP };
    y_axis(&mut svg, y, "Mean AUROC");
    for e in (l0 as i32)..=(l1 as i32) {
        svg.text(x.at(e as f64), H - BOTTOM + 18.0, &format!("1e{e}"), "middle", 11.0, "");
    }
    svg.text((LEFT + W - RIGHT) / 2.0, H - 18.0, "Total selector runtime (s, log scale)", "middle", 13.0, "");
    for (r, lx) in rows.iter().zip(&logs) {
        let _ = writeln!(
            svg.buf,
            r#"<circle class="mark" data-method="{}" cx="{:.1}" cy="{:.1}" r="6" fill="{}"/>"#,
            escape(&r.method),
            x.at(*lx),
            y.at(r.mean_auroc),
            color(methods, &r.method)
        );
    }
    let names: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    legend(&mut svg, methods, &names);
    svg.finish()
}

/// Selected feature sets at the exported proportions, as a table.
pub fn path_table(report: &AggregateReport) -> String {
    let header = ["Method", "Dataset", "Proportion", "k", "Selected features"];
    let rows: Vec<[String; 5]> = report
        .paths
        .iter()
        .map(|p| {
            [
                p.method.clone(),
                p.dataset.clone(),
                format!("{:.0}%", p.proportion * 100.0),
                p.k.to_string(),
                p.selected.join(", "),
            ]
        })
        .collect();
    let char_w = 7.0;
    let widths: Vec<f64> = (0..header.len())
        .map(|c| {
            let longest = rows.iter().map(|r| r[c].chars().count()).chain([header[c].len()]).max().unwrap_or(0);
            longest as f64 * char_w + 20.0
        })
        .collect();
    let width = widths.iter().sum::<f64>() + 20.0;
    let row_h = 20.0;
    let height = TOP + (rows.len() + 1) as f64 * row_h + 20.0;
    let mut svg = Svg::new(width, height, "Selection paths");
    let mut y = TOP;
    for (r, cells) in std::iter::once(header.map(String::from)).chain(rows).enumerate() {
        if r % 2 == 1 {
            let _ = writeln!(
                svg.buf,
                r##"<rect x="10" y="{:.1}" width="{:.1}" height="{row_h}" fill="#f3f3f3"/>"##,
                y - 14.0,
                width - 20.0
            );
        }
        let mut x = 20.0;
        let weight = if r == 0 { r#" font-weight="bold""# } else { r#" class="path-row""# };
        for (c, cell) in cells.iter().enumerate() {
            svg.text(x, y, cell, "start", 12.0, weight);
            x += widths[c];
        }
        y += row_h;
    }
    svg.finish()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Curve files of a results directory, in file-name order.
pub fn read_curves(results: &Path) -> CliResult<Vec<EvalCurve>> {
    let dir = results.join(CURVES_DIR);
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map(|it| it.flatten().map(|e| e.path()).filter(|p| p.extension().is_some_and(|x| x == "json")).collect())
        .unwrap_or_default();
    paths.sort();
    paths.iter().map(|p| read_json(p)).collect()
}

/// Writes every chart into `out` and returns the written paths.
pub fn cmd_plot(results: &Path, out: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let curves = read_curves(results)?;
    if curves.is_empty() {
        return Err(CliError::data(format!("{} holds no curve files", results.display())));
    }
    let report: AggregateReport = read_json(&results.join(REPORT_JSON))?;
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| results.join("plots"));
    let mut written = Vec::new();
    let mut emit = |name: String, svg: String| -> CliResult<()> {
        let path = out.join(name);
        write_text(&path, &svg)?;
        written.push(path);
        Ok(())
    };

    let means = mean_over_seeds(&curves);
    let mut by_dataset: IndexMap<&str, Vec<&EvalCurve>> = IndexMap::new();
    for c in &means {
        by_dataset.entry(c.dataset.as_str()).or_default().push(c);
    }
    let methods = &report.methods;
    for (dataset, cs) in &mut by_dataset {
        cs.sort_by_key(|c| methods.iter().position(|m| *m == c.method));
        emit(format!("auroc_{}.svg", slug(dataset)), line_chart(methods, dataset, cs))?;
    }

    let ranked = report.methods_by_mean();
    emit(
        "average_auroc.svg".into(),
        bar_chart(methods, "Mean AUROC over proportions and datasets", "Mean AUROC", &ranked),
    )?;

    // Each curve contributes its point at k = k_for_proportion(0.3, n), which
    // exists even where 0.3 collapsed into a smaller proportion.
    let mut at30: Vec<(String, f64)> = methods
        .iter()
        .filter_map(|m| {
            let vals: Vec<f64> = means
                .iter()
                .filter(|c| &c.method == m)
                .filter_map(|c| {
                    let n = c.points.last()?.k;
                    c.points.iter().find(|p| p.k == k_for_proportion(0.3, n)).map(|p| p.auroc)
                })
                .collect();
            (!vals.is_empty()).then(|| (m.clone(), vals.iter().sum::<f64>() / vals.len() as f64))
        })
        .collect();
    at30.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    emit("auroc_at_30pct.svg".into(), bar_chart(methods, "Mean AUROC at 30% of features", "AUROC", &at30))?;

    let timings = results.join(TIMINGS_JSON);
    if timings.is_file() {
        let t: Timings = read_json(&timings)?;
        emit("runtime_vs_auroc.svg".into(), runtime_scatter(methods, &t.runtime))?;
    } else {
        tracing::warn!("no {TIMINGS_JSON}; skipping the runtime scatter");
    }

    emit("selection_paths.svg".into(), path_table(&report))?;
    Ok(written)
}
