//! Report writers: CSV, structured JSON, markdown tables and an SVG scatter.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wmlab::codecs::CodecKind;

use crate::bench::{BenchCell, BenchReport, BITACC_REMOVED, P_REMOVED};
use crate::config::ReportFormat;
use crate::error::{HarnessError, Result};

pub const CSV_FILE: &str = "cells.csv";
pub const STRUCTURED_FILE: &str = "report.json";
pub const MARKDOWN_FILE: &str = "tables.md";
pub const SVG_FILE: &str = "scatter.svg";

#[derive(Serialize)]
struct CsvRow<'a> {
    watermark: &'a str,
    attack: &'a str,
    succeeded: usize,
    failed: usize,
    ave_value: Option<f64>,
    median_value: Option<f64>,
    removed: Option<bool>,
    ave_mssim: Option<f64>,
    mssim_std: Option<f64>,
    mssim_ci95: Option<f64>,
    ave_ssim: Option<f64>,
    ave_psnr: Option<f64>,
    ave_mse: Option<f64>,
    ave_masked_mse: Option<f64>,
    ave_masked_psnr: Option<f64>,
    ave_preserved_mssim: Option<f64>,
    ave_preserved_coverage: Option<f64>,
}

pub fn to_csv(report: &BenchReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &report.cells {
        let a = &c.aggregates;
        w.serialize(CsvRow {
            watermark: c.watermark.name(),
            attack: &c.attack,
            succeeded: a.succeeded,
            failed: a.failed,
            ave_value: a.ave_value,
            median_value: a.median_value,
            removed: c.removed,
            ave_mssim: a.ave_mssim,
            mssim_std: a.mssim_std,
            mssim_ci95: a.mssim_ci95,
            ave_ssim: a.ave_ssim,
            ave_psnr: a.ave_psnr,
            ave_mse: a.ave_mse,
            ave_masked_mse: a.ave_masked_mse,
            ave_masked_psnr: a.ave_masked_psnr,
            ave_preserved_mssim: a.ave_preserved_mssim,
            ave_preserved_coverage: a.ave_preserved_coverage,
        })
        .map_err(|e| HarnessError::Report(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Report(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn to_structured(report: &BenchReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// p-values below 0.01 in scientific notation, everything else to 2–3 places.
fn fmt_value(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.is_infinite() {
        "inf".into()
    } else if v.abs() < 0.01 {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn value_header(kind: CodecKind) -> &'static str {
    if kind.is_bit_codec() {
        "(Ave Bit Acc)"
    } else {
        "(Ave p-value)"
    }
}

fn cell_text(cell: Option<&BenchCell>, pick: impl Fn(&BenchCell) -> Option<f64>, flag: bool) -> String {
    let Some(c) = cell else { return "-".into() };
    let mut s = match pick(c) {
        Some(v) if flag && c.removed == Some(true) => format!("**{}** (removed)", fmt_value(v)),
        Some(v) => fmt_value(v),
        None => "n/a".into(),
    };
    if c.aggregates.failed > 0 {
        let _ = write!(s, " [{} failed]", c.aggregates.failed);
    }
    s
}

fn header_row(out: &mut String, first: &str, kinds: &[CodecKind], sub: impl Fn(CodecKind) -> &'static str) {
    let _ = writeln!(
        out,
        "| {first} | {} |",
        kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(" | ")
    );
    let _ = writeln!(out, "|  | {} |", kinds.iter().map(|&k| sub(k)).collect::<Vec<_>>().join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(kinds.len()));
}

pub fn to_markdown(report: &BenchReport) -> String {
    let cfg = &report.config;
    let kinds = &cfg.watermarks;
    let mut out = String::new();
    let _ = writeln!(out, "# Watermark robustness report\n");
    let _ = writeln!(
        out,
        "{} scenes of {}×{} px, base seed {}. A cell is marked removed when p > {P_REMOVED} (ring) or bit accuracy < {BITACC_REMOVED} (bit codecs).\n",
        cfg.seed_count, cfg.image_size, cfg.image_size, cfg.base_seed
    );

    let _ = writeln!(out, "## Watermark removal\n");
    header_row(&mut out, "Attack", kinds, value_header);
    for a in &cfg.attacks {
        let cells: Vec<String> = kinds
            .iter()
            .map(|&k| cell_text(report.cell(k, a), |c| c.aggregates.ave_value, true))
            .collect();
        let _ = writeln!(out, "| {a} | {} |", cells.join(" | "));
    }
    let _ = writeln!(out, "| # of scenes | {} |\n", vec![cfg.seed_count.to_string(); kinds.len()].join(" | "));

    let _ = writeln!(out, "## Image quality (mSSIM over the object mask)\n");
    header_row(&mut out, "Attack", kinds, |_| "(Ave mSSIM)");
    for a in &cfg.attacks {
        let cells: Vec<String> = kinds
            .iter()
            .map(|&k| cell_text(report.cell(k, a), |c| c.aggregates.ave_mssim, false))
            .collect();
        let _ = writeln!(out, "| {a} | {} |", cells.join(" | "));
    }
    let _ = writeln!(out, "| # of scenes | {} |\n", vec![cfg.seed_count.to_string(); kinds.len()].join(" | "));

    let _ = writeln!(out, "## Quality before and after masking\n");
    for a in &cfg.attacks {
        let _ = writeln!(out, "### {a}\n");
        let _ = writeln!(out, "| Watermark | Metric | Image (original) | Image (masked) |");
        let _ = writeln!(out, "|---|---|---|---|");
        for &k in kinds {
            let Some(c) = report.cell(k, a) else { continue };
            let g = &c.aggregates;
            let f = |v: Option<f64>| v.map(fmt_value).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(out, "| {k} | MSE | {} | {} |", f(g.ave_mse), f(g.ave_masked_mse));
            let _ = writeln!(out, "|  | SSIM | {} | {} |", f(g.ave_ssim), f(g.ave_mssim));
            let _ = writeln!(out, "|  | PSNR | {} | {} |", f(g.ave_psnr), f(g.ave_masked_psnr));
        }
        let _ = writeln!(out);
    }
    out
}

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Removal success on a 0..1 scale: the p-value for ring, 1 − accuracy for
/// bit codecs.
pub fn removal_score(cell: &BenchCell) -> Option<f64> {
    let v = cell.aggregates.ave_value?;
    Some(if cell.watermark.is_bit_codec() { 1.0 - v } else { v })
}

pub fn to_svg(report: &BenchReport) -> String {
    let (w, h) = (640.0, 480.0);
    let (left, right, top, bottom) = (60.0, 220.0, 30.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let px = |x: f64| left + x.clamp(0.0, 1.0) * pw;
    let py = |y: f64| top + (1.0 - y.clamp(0.0, 1.0)) * ph;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">
<rect width="{w}" height="{h}" fill="white"/>
<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{t:.2}</text><text x="{:.1}" y="{:.1}" text-anchor="end">{t:.2}</text>"#,
            px(t),
            top + ph + 15.0,
            left - 5.0,
            py(t) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">x: average mSSIM (object mask)</text>
<text x="15" y="{:.1}" text-anchor="middle" transform="rotate(-90 15 {:.1})">y: removal (ring: ave p; bit codecs: 1 - ave bit acc)</text>"#,
        left + pw / 2.0,
        h - 12.0,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (ai, a) in report.config.attacks.iter().enumerate() {
        let color = PALETTE[ai % PALETTE.len()];
        let id = a.to_string();
        let _ = writeln!(s, r#"<g class="series" data-attack="{}">"#, xml_escape(&id));
        for c in report.cells.iter().filter(|c| c.attack == id) {
            if let (Some(x), Some(y)) = (c.aggregates.ave_mssim, removal_score(c)) {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}"><title>{} / {}: mSSIM {:.3}, removal {:.3}</title></circle>"#,
                    px(x),
                    py(y),
                    xml_escape(&id),
                    c.watermark,
                    x,
                    y
                );
            }
        }
        let ly = top + 12.0 + 16.0 * ai as f64;
        let _ = writeln!(
            s,
            r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text></g>"#,
            w - right + 15.0,
            ly - 4.0,
            w - right + 25.0,
            ly,
            xml_escape(&id)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

/// Writes the requested formats into `dir` and returns the written paths.
pub fn emit_report(report: &BenchReport, formats: &[ReportFormat], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut formats = formats.to_vec();
    formats.sort();
    formats.dedup();
    formats
        .into_iter()
        .map(|f| match f {
            ReportFormat::Csv => write_file(dir, CSV_FILE, &to_csv(report)?),
            ReportFormat::Structured => write_file(dir, STRUCTURED_FILE, &to_structured(report)),
            ReportFormat::Markdown => write_file(dir, MARKDOWN_FILE, &to_markdown(report)),
            ReportFormat::Svg => write_file(dir, SVG_FILE, &to_svg(report)),
        })
        .collect()
}

pub fn load_report(path: &Path) -> Result<BenchReport> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    BenchReport::from_json(&text)
}
