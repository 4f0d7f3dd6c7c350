//! Dataset and report file formats. All writes are whole-file atomic.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::SuiteResult;
use crate::verify::{GroupId, PairRecord, ScoreDataset};

pub const DATASET_HEADER: [&str; 4] = ["distance", "is_genuine", "group_a", "group_b"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

/// Writes `bytes` to a temporary file beside `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn parse_err(path: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

pub fn parse_dataset(text: &str, origin: &str) -> Result<ScoreDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| parse_err(origin, 1, e.to_string()))?.clone();
    if header.is_empty() && text.trim().is_empty() {
        return Err(parse_err(origin, 1, "missing header"));
    }
    if header.iter().ne(DATASET_HEADER) {
        return Err(parse_err(
            origin,
            1,
            format!("expected header {:?}, got {:?}", DATASET_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut pairs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(origin, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let distance: f64 = rec[0]
            .parse()
            .map_err(|_| parse_err(origin, line, format!("bad distance {:?}", &rec[0])))?;
        let is_genuine = match &rec[1] {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(origin, line, format!("is_genuine must be 0 or 1, got {other:?}"))),
        };
        if rec[2].is_empty() || rec[3].is_empty() {
            return Err(parse_err(origin, line, "empty group label"));
        }
        let pair = PairRecord::new(distance, is_genuine, GroupId::new(&rec[2]), GroupId::new(&rec[3]))
            .map_err(|e| parse_err(origin, line, e.to_string()))?;
        pairs.push(pair);
    }
    ScoreDataset::new(pairs)
}

pub fn load_dataset(path: &Path) -> Result<ScoreDataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}

/// Distances use the shortest text that parses back to the same f64.
pub fn dataset_to_csv(ds: &ScoreDataset) -> String {
    let mut out = String::with_capacity(ds.len() * 24 + 40);
    out.push_str(&DATASET_HEADER.join(","));
    out.push('\n');
    for p in ds.pairs() {
        let _ = writeln!(out, "{},{},{},{}", p.distance, p.is_genuine as u8, p.group_a, p.group_b);
    }
    out
}

pub fn save_dataset(ds: &ScoreDataset, path: &Path) -> Result<()> {
    write_atomic(path, dataset_to_csv(ds).as_bytes())
}

#[derive(Serialize)]
struct Provenance<'a> {
    suite_id: &'a str,
    seed: u64,
    mode: &'a Option<crate::synth::ErrorMode>,
    config: &'a crate::harness::ConfigSnapshot,
}

fn provenance(r: &SuiteResult) -> String {
    serde_json::to_string(&Provenance {
        suite_id: &r.suite_id,
        seed: r.seed,
        mode: &r.mode,
        config: &r.config,
    })
    .expect("config serializes")
}

fn render_csv(r: &SuiteResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["ratio_label", "ir", "garbe", "fdr", "std_eer_g", "sed_std", "sed_mean", "flags"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for row in &r.rows {
        w.write_record([
            row.ratio_label.clone(),
            row.ir.to_string(),
            row.garbe.to_string(),
            row.fdr.to_string(),
            row.std_eer_g.to_string(),
            row.sed_std.to_string(),
            row.sed_mean.to_string(),
            row.flags.join("; "),
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(format!("# config={}\n{}", provenance(r), String::from_utf8(body).expect("utf-8 csv")))
}

fn render_markdown(r: &SuiteResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<!-- bvfair report config={} -->", provenance(r));
    let _ = writeln!(out, "| Ratio | IR | GARBE | FDR | STD EER_G | STD SED_G | Mean SED_G |");
    let _ = writeln!(out, "|---|---:|---:|---:|---:|---:|---:|");
    for row in &r.rows {
        let _ = writeln!(
            out,
            "| {} | {:.4} | {:.4} | {:.4} | {:.2e} | {:.3} | {:.3} |",
            row.ratio_label, row.ir, row.garbe, row.fdr, row.std_eer_g, row.sed_std, row.sed_mean
        );
    }
    let flagged: Vec<_> = r.rows.iter().filter(|row| !row.flags.is_empty()).collect();
    if !flagged.is_empty() {
        out.push_str("\nFlags:\n\n");
        for row in flagged {
            for f in &row.flags {
                let _ = writeln!(out, "- {}: {}", row.ratio_label, f);
            }
        }
    }
    if !r.properties.is_empty() {
        out.push_str("\nProperties:\n\n");
        for p in &r.properties {
            let _ = writeln!(out, "- {} {}: {}", if p.passed { "PASS" } else { "FAIL" }, p.name, p.detail);
        }
    }
    out
}

pub fn render_report(r: &SuiteResult, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(r)
            .map(|s| s + "\n")
            .map_err(|e| Error::Format(e.to_string())),
        ReportFormat::Csv => render_csv(r),
        ReportFormat::Markdown => Ok(render_markdown(r)),
    }
}

pub fn save_report(r: &SuiteResult, format: ReportFormat, path: &Path) -> Result<()> {
    write_atomic(path, render_report(r, format)?.as_bytes())
}

pub fn load_suite_result(path: &Path) -> Result<SuiteResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(&path.display().to_string(), e.line() as u64, e.to_string()))
}
