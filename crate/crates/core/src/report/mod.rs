//! Text tables in the layout of the classification result tables, and SVG
//! charts: top-k feature importance bars and F1 grouped by dataset.

use std::fmt::Write as _;

use crate::evaluation::EvaluationReport;
use crate::explain::GlobalRanking;
use crate::flow_meter::SchemaName;
use crate::util::fmt_float;

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub accuracy: f64,
    pub f1: f64,
    pub dr: f64,
    pub far: f64,
    pub auc: f64,
    /// `None` renders as "-" (timing not available).
    pub prediction_time_micros: Option<f64>,
}

impl TableRow {
    pub fn from_report(r: &EvaluationReport, with_timing: bool) -> Self {
        Self {
            label: row_label(r),
            accuracy: r.mean.accuracy,
            f1: r.mean.f1,
            dr: r.mean.dr,
            far: r.mean.far,
            auc: r.mean.auc,
            prediction_time_micros: with_timing.then_some(r.mean.prediction_time_micros),
        }
    }

    fn cells(&self) -> [String; 7] {
        [
            self.label.clone(),
            format!("{:.2}%", 100.0 * self.accuracy),
            format!("{:.2}", self.f1),
            format!("{:.2}%", 100.0 * self.dr),
            format!("{:.2}%", 100.0 * self.far),
            format!("{:.4}", self.auc),
            self.prediction_time_micros.map_or("-".into(), |t| format!("{t:.2}µs")),
        ]
    }
}

/// `NF-<dataset>` / `CIC-<dataset>` unless the name already carries a prefix.
pub fn row_label(r: &EvaluationReport) -> String {
    let tag = r.schema.parse::<SchemaName>().map(|s| s.tag()).unwrap_or("");
    if tag.is_empty() || r.dataset.starts_with(&format!("{tag}-")) {
        r.dataset.clone()
    } else {
        format!("{tag}-{}", r.dataset)
    }
}

pub const TABLE_HEADER: [&str; 7] = ["Dataset", "Accuracy", "F1 Score", "DR", "FAR", "AUC", "Prediction Time"];

/// Fixed-width table; the label column is left-aligned, numbers right-aligned.
pub fn render_table(title: &str, rows: &[TableRow]) -> String {
    let cells: Vec<[String; 7]> = rows.iter().map(TableRow::cells).collect();
    let mut widths = TABLE_HEADER.map(|h| h.chars().count());
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |row: &[String]| {
        let parts: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| {
                let pad = " ".repeat(w - c.chars().count());
                if i == 0 {
                    format!("{c}{pad}")
                } else {
                    format!("{pad}{c}")
                }
            })
            .collect();
        parts.join(" | ")
    };
    let header: Vec<String> = TABLE_HEADER.iter().map(|s| s.to_string()).collect();
    let head = line(&header);
    let rule = "-".repeat(head.chars().count());
    let mut out = format!("{title}\n{head}\n{rule}\n");
    for row in &cells {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

/// One table per model, rows in report order.
pub fn render_reports(reports: &[EvaluationReport], with_timing: bool) -> String {
    let mut models: Vec<&str> = Vec::new();
    for r in reports {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let tables: Vec<String> = models
        .iter()
        .map(|m| {
            let rows: Vec<TableRow> =
                reports.iter().filter(|r| r.model == *m).map(|r| TableRow::from_report(r, with_timing)).collect();
            render_table(&format!("{} classification results", m.to_uppercase()), &rows)
        })
        .collect();
    tables.join("\n")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Plot-area width of the ranking chart, in SVG units.
pub const BAR_PLOT_WIDTH: f64 = 480.0;
const LABEL_WIDTH: f64 = 260.0;
const BAR_HEIGHT: f64 = 18.0;
const BAR_GAP: f64 = 6.0;

/// Horizontal bars of the top `k` normalised scores; a score of 1 spans the
/// whole plot width.
pub fn ranking_svg(title: &str, ranking: &GlobalRanking, k: usize) -> String {
    let top = ranking.top_k(k);
    let top_margin = 40.0;
    let width = LABEL_WIDTH + BAR_PLOT_WIDTH + 70.0;
    let height = top_margin + top.len() as f64 * (BAR_HEIGHT + BAR_GAP) + 30.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = fmt_float(width),
        h = fmt_float(height)
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#, fmt_float(width / 2.0), escape(title));
    let _ = writeln!(s, r#"<g class="plot" transform="translate({},{})">"#, fmt_float(LABEL_WIDTH), fmt_float(top_margin));
    for (i, f) in top.iter().enumerate() {
        let y = i as f64 * (BAR_HEIGHT + BAR_GAP);
        let len = f.normalized.clamp(0.0, 1.0) * BAR_PLOT_WIDTH;
        let _ = writeln!(
            s,
            r##"<rect class="bar" x="0" y="{}" width="{}" height="{}" fill="#1f77b4"/>"##,
            fmt_float(y),
            fmt_float(len),
            fmt_float(BAR_HEIGHT)
        );
        let ty = fmt_float(y + BAR_HEIGHT * 0.7);
        let _ = writeln!(s, r#"<text x="-6" y="{ty}" text-anchor="end">{}</text>"#, escape(&f.feature));
        let _ = writeln!(s, r#"<text x="{}" y="{ty}">{:.2}</text>"#, fmt_float(len + 4.0), f.normalized);
    }
    let axis_y = fmt_float(top.len() as f64 * (BAR_HEIGHT + BAR_GAP));
    let _ = writeln!(s, r#"<line x1="0" y1="{axis_y}" x2="{}" y2="{axis_y}" stroke="black"/>"#, fmt_float(BAR_PLOT_WIDTH));
    let _ = writeln!(s, "</g>\n</svg>");
    s
}

const PALETTE: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

/// Vertical F1 bars, one group per dataset and one bar per schema in each.
pub fn f1_grouped_svg(title: &str, reports: &[EvaluationReport]) -> String {
    let mut groups: Vec<&str> = Vec::new();
    let mut series: Vec<&str> = Vec::new();
    for r in reports {
        if !groups.contains(&r.dataset.as_str()) {
            groups.push(&r.dataset);
        }
        if !series.contains(&r.schema.as_str()) {
            series.push(&r.schema);
        }
    }
    let plot_h = 300.0;
    let bar_w = 28.0;
    let group_w = bar_w * series.len() as f64 + 30.0;
    let (left, top) = (60.0, 40.0);
    let width = left + group_w * groups.len() as f64 + 160.0;
    let height = top + plot_h + 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = fmt_float(width),
        h = fmt_float(height)
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#, fmt_float(width / 2.0), escape(title));
    let _ = writeln!(s, r#"<g class="plot" transform="translate({},{})">"#, fmt_float(left), fmt_float(top));
    for tick in 0..=5 {
        let v = tick as f64 / 5.0;
        let y = fmt_float(plot_h * (1.0 - v));
        let _ = writeln!(s, r#"<text x="-8" y="{y}" text-anchor="end" dy="4">{v:.1}</text>"#);
        let _ = writeln!(s, r##"<line x1="0" y1="{y}" x2="{}" y2="{y}" stroke="#dddddd"/>"##, fmt_float(group_w * groups.len() as f64));
    }
    let _ = writeln!(s, r#"<text transform="translate(-40,{}) rotate(-90)" text-anchor="middle">F1 score</text>"#, fmt_float(plot_h / 2.0));
    for (g, dataset) in groups.iter().enumerate() {
        let gx = g as f64 * group_w + 15.0;
        let _ = writeln!(s, r#"<g class="group" data-dataset="{}">"#, escape(dataset));
        for (k, schema) in series.iter().enumerate() {
            let Some(r) = reports.iter().find(|r| r.dataset == *dataset && r.schema == *schema) else { continue };
            let h = r.mean.f1.clamp(0.0, 1.0) * plot_h;
            let _ = writeln!(
                s,
                r#"<rect class="bar" data-schema="{}" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                escape(schema),
                fmt_float(gx + k as f64 * bar_w),
                fmt_float(plot_h - h),
                fmt_float(bar_w - 2.0),
                fmt_float(h),
                PALETTE[k % PALETTE.len()]
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            fmt_float(gx + bar_w * series.len() as f64 / 2.0),
            fmt_float(plot_h + 18.0),
            escape(dataset)
        );
        let _ = writeln!(s, "</g>");
    }
    let lx = group_w * groups.len() as f64 + 20.0;
    for (k, schema) in series.iter().enumerate() {
        let y = k as f64 * 20.0;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="12" height="12" fill="{}"/>"#, fmt_float(lx), fmt_float(y), PALETTE[k % PALETTE.len()]);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, fmt_float(lx + 18.0), fmt_float(y + 10.0), escape(schema));
    }
    let _ = writeln!(s, r#"<line x1="0" y1="{h}" x2="{}" y2="{h}" stroke="black"/>"#, fmt_float(group_w * groups.len() as f64), h = fmt_float(plot_h));
    let _ = writeln!(s, "</g>\n</svg>");
    s
}
