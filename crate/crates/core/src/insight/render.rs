//! Static HTML rendering of a report with inline SVG charts.

use std::fmt::Write;

use serde_json::Value;

use super::report::{MetricEntry, MetricReport, Section, SectionKind, Status};

const STYLE: &str = "body{font-family:sans-serif;max-width:1100px;margin:2em auto;color:#222}\
h2{border-bottom:2px solid #ccc;padding-bottom:.2em}\
table{border-collapse:collapse;margin:.5em 0}td,th{border:1px solid #ddd;padding:.3em .6em;text-align:left;vertical-align:top}\
.status{font-size:.8em;padding:.1em .5em;border-radius:3px;color:#fff}\
.computed{background:#2a7}.skipped{background:#999}.failed{background:#c33}.disabled{background:#bbb}\
pre{background:#f6f6f6;padding:.6em;max-height:24em;overflow:auto;font-size:.8em}\
svg text{font-size:11px;font-family:sans-serif}";

fn esc(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

fn status_name(s: Status) -> &'static str {
    match s {
        Status::Computed => "computed",
        Status::Skipped => "skipped",
        Status::Failed => "failed",
        Status::Disabled => "disabled",
    }
}

/// Horizontal bar chart. Values are drawn relative to the largest one.
fn bar_chart(title: &str, items: &[(String, f64)]) -> String {
    if items.is_empty() {
        return String::new();
    }
    let row = 18.0;
    let label_w = 190.0;
    let bar_w = 520.0;
    let height = row * items.len() as f64 + 30.0;
    let max = items.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let mut svg = String::new();
    let _ = write!(
        svg,
        r#"<figure><figcaption>{}</figcaption><svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" role="img">"#,
        esc(title),
        label_w + bar_w + 80.0
    );
    for (i, (label, v)) in items.iter().enumerate() {
        let y = 10.0 + row * i as f64;
        let w = if max > 0.0 { bar_w * v / max } else { 0.0 };
        let _ = write!(
            svg,
            r##"<text x="{}" y="{}" text-anchor="end">{}</text><rect x="{label_w}" y="{y}" width="{w:.1}" height="{}" fill="#4a7fb5"/><text x="{}" y="{}">{}</text>"##,
            label_w - 6.0,
            y + row * 0.7,
            esc(label),
            row - 4.0,
            label_w + w + 4.0,
            y + row * 0.7,
            fmt_num(*v)
        );
    }
    svg.push_str("</svg></figure>");
    svg
}

/// Scatter of (x, y) points with labels, axes from zero to the maxima.
fn scatter(title: &str, x_name: &str, y_name: &str, points: &[(String, f64, f64, bool)]) -> String {
    if points.is_empty() {
        return String::new();
    }
    let (w, h, pad) = (560.0, 320.0, 50.0);
    let xmax = points.iter().map(|p| p.1).fold(0.0, f64::max).max(1e-12);
    let ymax = points.iter().map(|p| p.2).fold(0.0, f64::max).max(1e-12);
    let mut svg = String::new();
    let _ = write!(
        svg,
        r##"<figure><figcaption>{}</figcaption><svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" role="img"><line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="#666"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{}" stroke="#666"/><text x="{}" y="{}" text-anchor="middle">{}</text><text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">{}</text>"##,
        esc(title),
        w + 2.0 * pad + 120.0,
        h + 2.0 * pad,
        h + pad,
        w + pad,
        h + pad,
        h + pad,
        pad + w / 2.0,
        h + pad + 35.0,
        esc(x_name),
        pad + h / 2.0,
        pad + h / 2.0,
        esc(y_name)
    );
    for (label, x, y, flagged) in points {
        let cx = pad + w * x / xmax;
        let cy = pad + h - h * y / ymax;
        let fill = if *flagged { "#c33" } else { "#4a7fb5" };
        let _ = write!(
            svg,
            r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="5" fill="{fill}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            cx + 7.0,
            cy + 4.0,
            esc(label)
        );
    }
    svg.push_str("</svg></figure>");
    svg
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e12 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn num(v: &Value, key: &str) -> f64 {
    v.get(key).and_then(Value::as_f64).unwrap_or(0.0)
}

fn text<'a>(v: &'a Value, key: &str) -> &'a str {
    v.get(key).and_then(Value::as_str).unwrap_or("")
}

fn items<'a>(v: &'a Value, key: &str) -> &'a [Value] {
    v.get(key).and_then(Value::as_array).map_or(&[], Vec::as_slice)
}

fn charts(entry: &MetricEntry) -> String {
    let Some(r) = &entry.result else {
        return String::new();
    };
    match entry.id {
        "object_counts" => {
            let bars: Vec<(String, f64)> = items(r, "categories")
                .iter()
                .take(25)
                .map(|c| (text(c, "category").to_string(), num(c, "instances")))
                .collect();
            bar_chart("Instances per category (top 25)", &bars)
        }
        "object_scale" => {
            let labels = items(r, "bin_labels");
            let bars: Vec<(String, f64)> = items(r, "bin_populations")
                .iter()
                .zip(labels)
                .map(|(n, l)| (l.as_str().unwrap_or("").to_string(), n.as_f64().unwrap_or(0.0)))
                .collect();
            bar_chart("Instances per size bin", &bars)
        }
        "scene_diversity" => {
            let bars: Vec<(String, f64)> = items(r, "categories")
                .iter()
                .take(25)
                .map(|c| (text(c, "category").to_string(), num(c, "normalized_entropy")))
                .collect();
            bar_chart("Normalized scene entropy, least diverse first", &bars)
        }
        "appearance_diversity" => {
            let bars: Vec<(String, f64)> = items(r, "categories")
                .iter()
                .take(25)
                .map(|c| (text(c, "category").to_string(), num(c, "mean_pairwise_distance")))
                .collect();
            bar_chart("Mean pairwise embedding distance, least diverse first", &bars)
        }
        "country_distribution" => {
            let bars: Vec<(String, f64)> = items(r, "countries")
                .iter()
                .take(20)
                .map(|c| (text(c, "name").to_string(), num(c, "images")))
                .collect();
            bar_chart("Images per country (top 20)", &bars)
        }
        "local_language" => {
            let bars: Vec<(String, f64)> = r
                .get("nonlocal")
                .map_or(&[][..], |n| items(n, "countries"))
                .iter()
                .take(20)
                .map(|c| (text(c, "country").to_string(), num(c, "wilson_lower_bound")))
                .collect();
            bar_chart("Non-local tag language share, Wilson lower bound (top 20)", &bars)
        }
        "query_recommendations" => items(r, "results")
            .iter()
            .map(|q| {
                let bars: Vec<(String, f64)> = items(q, "recommendations")
                    .iter()
                    .take(10)
                    .map(|c| (text(c, "term").to_string(), num(c, "probability")))
                    .collect();
                bar_chart(
                    &format!("{}: P({}) by paired term", text(q, "target"), text(q, "outcome")),
                    &bars,
                )
            })
            .collect(),
        "diversity_tradeoff" => items(r, "results")
            .iter()
            .map(|t| {
                let pts: Vec<(String, f64, f64, bool)> = items(t, "points")
                    .iter()
                    .map(|p| {
                        (
                            text(p, "scene_group").to_string(),
                            num(p, "commonness"),
                            num(p, "diversity_gain"),
                            p.get("efficient").and_then(Value::as_bool).unwrap_or(false),
                        )
                    })
                    .collect();
                scatter(
                    &format!("{}: scene group commonness vs diversity gain", text(t, "target")),
                    "commonness",
                    "diversity gain",
                    &pts,
                )
            })
            .collect(),
        _ => String::new(),
    }
}

fn render_metric(out: &mut String, entry: &MetricEntry) {
    let _ = write!(
        out,
        r#"<h3 id="{0}">{0} <span class="status {1}">{1}</span></h3>"#,
        esc(entry.id),
        status_name(entry.status)
    );
    if let Some(reason) = &entry.reason {
        let _ = write!(out, "<p>{}</p>", esc(reason));
    }
    if !entry.findings.is_empty() {
        out.push_str("<table><tr><th>Finding</th><th>Suggested action</th></tr>");
        for f in &entry.findings {
            let _ = write!(out, "<tr><td>{}</td><td>{}</td></tr>", esc(&f.insight), esc(&f.action));
        }
        out.push_str("</table>");
    }
    out.push_str(&charts(entry));
    if let Some(r) = &entry.result {
        let json = serde_json::to_string_pretty(r).expect("values serialize");
        let _ = write!(out, "<details><summary>Data</summary><pre>{}</pre></details>", esc(&json));
    }
}

fn render_section(out: &mut String, kind: SectionKind, section: &Section) {
    let _ = write!(
        out,
        r#"<h2>{} <span class="status {1}">{1}</span></h2>"#,
        kind.as_str(),
        status_name(section.status)
    );
    if !section.missing.is_empty() {
        let names: Vec<&str> = section.missing.iter().map(|a| a.as_str()).collect();
        let _ = write!(out, "<p>Missing annotations: {}</p>", esc(&names.join(", ")));
    }
    for m in &section.metrics {
        render_metric(out, m);
    }
}

/// Self-contained HTML document; it references no external resources.
pub fn render_html(report: &MetricReport) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        r#"<!DOCTYPE html><html lang="en"><head><meta charset="utf-8"><title>{} report</title><style>{STYLE}</style></head><body>"#,
        esc(report.tool.name)
    );
    let _ = write!(
        out,
        "<h1>Dataset report</h1><p>{} {} &middot; schema {} &middot; generated {}</p>",
        esc(report.tool.name),
        esc(report.tool.version),
        esc(report.schema_version),
        esc(&report.generated_at)
    );
    let d = &report.dataset;
    let _ = write!(
        out,
        "<table><tr><th>Source</th><td>{}</td></tr><tr><th>SHA-256</th><td>{}</td></tr><tr><th>Images</th><td>{}</td></tr><tr><th>Instances</th><td>{}</td></tr><tr><th>Categories</th><td>{}</td></tr>",
        esc(&d.provenance.source),
        esc(&d.provenance.content_sha256),
        d.n_images,
        d.n_instances,
        d.n_categories
    );
    for (name, present) in &d.annotations {
        let _ = write!(out, "<tr><th>{}</th><td>{}</td></tr>", esc(name), if *present { "yes" } else { "no" });
    }
    out.push_str("</table>");
    for w in &report.inputs.warnings {
        let _ = write!(out, "<p><strong>Warning:</strong> {}</p>", esc(w));
    }
    for c in &report.caveats {
        let _ = write!(out, "<p><em>{}</em></p>", esc(c));
    }
    for kind in SectionKind::ALL {
        render_section(&mut out, kind, report.sections.get(kind));
    }
    out.push_str("</body></html>\n");
    out
}
