//! Report files: metrics JSON, confusion CSV and SVG, markdown tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

use super::ladder::LadderRow;
use super::{ConfusionMatrix, Report};

pub fn confusion_csv(m: &ConfusionMatrix) -> String {
    let mut out = String::from("true\\predicted");
    for l in &m.labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (label, row) in m.labels.iter().zip(&m.counts) {
        out.push_str(label);
        for c in row {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

/// Grayscale heatmap, darker for larger counts, one `rect` per cell.
pub fn confusion_svg(m: &ConfusionMatrix, title: &str) -> String {
    let k = m.k();
    let cell = 22;
    let margin = 90;
    let size = margin + k * cell + 10;
    let max = m.counts.iter().flatten().copied().max().unwrap_or(0).max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{}" font-family="monospace" font-size="9">"#,
        size + 20
    );
    let _ = writeln!(s, r#"<text x="4" y="14" font-size="12">{}</text>"#, escape(title));
    for (j, l) in m.labels.iter().enumerate() {
        let x = margin + j * cell + cell / 2;
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" transform="rotate(-60 {x} {})" text-anchor="start">{}</text>"#,
            margin - 4,
            margin - 4,
            escape(l)
        );
    }
    for (i, l) in m.labels.iter().enumerate() {
        let y = margin + i * cell;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, margin - 4, y + cell / 2 + 3, escape(l));
        for (j, &c) in m.counts[i].iter().enumerate() {
            let shade = (255.0 * (1.0 - c as f64 / max)).round() as u8;
            let _ = writeln!(
                s,
                r##"<rect x="{}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},{shade})" stroke="#999" stroke-width="0.5"><title>{} → {}: {c}</title></rect>"##,
                margin + j * cell,
                escape(l),
                escape(&m.labels[j])
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn pct(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

pub const TABLE_HEADER: &str = "| config | dims | alignment | motivation | profile | lift |\n|---|---|---|---|---|---|\n";

pub fn table_row(report: &Report) -> String {
    let s = &report.spec;
    let space = if s.label_space == crate::taxonomy::LabelSpace::Profile36 {
        String::new()
    } else {
        format!(" [{}]", s.label_space.short_name())
    };
    format!(
        "| {}{} | {} | {} | {} | {} | {:.1}× ({:.1}× vs 1/36) |\n",
        s.label,
        space,
        s.features.label(),
        pct(report.alignment.accuracy),
        pct(report.motivation.accuracy),
        pct(report.primary.accuracy),
        report.primary.lift,
        report.lift_full_space
    )
}

/// One row per ladder rung, failures marked.
pub fn comparison_table(rows: &[LadderRow]) -> String {
    let mut out = String::from(TABLE_HEADER);
    for r in rows {
        match &r.result {
            Ok(report) => out.push_str(&table_row(report)),
            Err(e) => {
                let _ = writeln!(out, "| {} | {} | failed | failed | failed | {} |", r.spec.label, r.spec.features.label(), e.replace('|', "/"));
            }
        }
    }
    out
}

/// Writes `metrics.json`, `table.md` and a CSV and SVG confusion matrix per
/// distinct label space.
pub fn emit_report(report: &Report, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(dir.join("metrics.json"), json)?;
    fs::write(dir.join("table.md"), format!("{TABLE_HEADER}{}", table_row(report)))?;
    let mut seen = Vec::new();
    for head in [&report.primary, &report.alignment, &report.motivation] {
        if seen.contains(&head.space) {
            continue;
        }
        seen.push(head.space);
        let name = head.space.short_name();
        fs::write(dir.join(format!("confusion_{name}.csv")), confusion_csv(&head.confusion))?;
        let title = format!("{}: {} ({})", report.spec.label, name, pct(head.accuracy));
        fs::write(dir.join(format!("confusion_{name}.svg")), confusion_svg(&head.confusion, &title))?;
    }
    Ok(())
}
