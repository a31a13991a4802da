//! Report envelopes and their serialization.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! that identical runs produce identical bytes. Timestamps live on their own
//! lines (`"started"`/`"finished"` in JSON, `# started:`/`# finished:` in
//! CSV) and are the only content that differs between repeated runs.

use std::io;

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::experiments::{SweepPoint, Verdict};
use crate::haar::Seed;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Column order of sweep tables.
pub const SWEEP_COLUMNS: [&str; 7] = ["m", "trials", "passes", "pass_fraction", "mean_y", "max_y", "std_error"];

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: serde_json::Value,
    pub tool_version: String,
    pub started: String,
    pub finished: String,
    pub seed: Seed,
}

impl Manifest {
    pub fn start(command: &str, config: serde_json::Value, seed: Seed) -> Self {
        let now = timestamp();
        Self {
            command: command.to_string(),
            config,
            tool_version: TOOL_VERSION.to_string(),
            started: now.clone(),
            finished: now,
            seed,
        }
    }

    pub fn finish(&mut self) {
        self.finished = timestamp();
    }
}

pub fn timestamp() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<T> {
    pub manifest: Manifest,
    pub verdicts: Vec<Verdict>,
    pub result: T,
}

impl<T> Report<T> {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Pretty JSON layout with fixed-precision floats.
struct FixedPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FixedPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty-printed JSON with 17 significant digits per float and a
/// trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Manifest as `# key: value` lines followed by a CSV table.
pub fn to_csv(manifest: &Manifest, header: &[&str], rows: &[Vec<String>]) -> io::Result<String> {
    let mut out = String::new();
    out.push_str(&format!("# command: {}\n", manifest.command));
    out.push_str(&format!("# config: {}\n", serde_json::to_string(&manifest.config)?));
    out.push_str(&format!("# tool_version: {}\n", manifest.tool_version));
    out.push_str(&format!("# seed: {} {}\n", manifest.seed.value, manifest.seed.stream));
    out.push_str(&format!("# started: {}\n", manifest.started));
    out.push_str(&format!("# finished: {}\n", manifest.finished));
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("CSV of UTF-8 fields"));
    Ok(out)
}

pub fn sweep_rows(points: &[SweepPoint]) -> Vec<Vec<String>> {
    points
        .iter()
        .map(|p| {
            vec![
                p.m.to_string(),
                p.trials.to_string(),
                p.passes.to_string(),
                format_float(p.pass_fraction),
                format_float(p.mean_y),
                format_float(p.max_y),
                format_float(p.std_error),
            ]
        })
        .collect()
}

/// Drops the timestamp lines so two reports can be compared byte for byte.
pub fn strip_timestamps(report: &str) -> String {
    report
        .lines()
        .filter(|l| {
            let t = l.trim_start();
            !(t.starts_with("\"started\"")
                || t.starts_with("\"finished\"")
                || t.starts_with("# started:")
                || t.starts_with("# finished:"))
        })
        .collect::<Vec<_>>()
        .join("\n")
}
