//! Output sinks. Every artifact carries the resolved config: JSON under a
//! top-level `config` key, CSV as a leading `# config: {...}` line.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use serde_json::{Map, Value};
use std::io::Write;
use std::path::Path;

fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn config_line(cfg: &RunConfig) -> Result<String> {
    Ok(format!("# config: {}", serde_json::to_string(cfg)?))
}

/// Writes `body` (an object) with the config inserted first.
pub fn write_json(cfg: &RunConfig, body: Value) -> Result<()> {
    let mut obj = Map::new();
    obj.insert("config".into(), serde_json::to_value(cfg)?);
    match body {
        Value::Object(m) => obj.extend(m),
        other => {
            obj.insert("result".into(), other);
        }
    }
    let mut w = open(cfg.output.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &Value::Object(obj))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Writes a CSV with the config line and optional extra comment lines.
pub fn write_csv(cfg: &RunConfig, comments: &[String], header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let w = open(cfg.output.as_deref())?;
    write_csv_to(w, cfg, comments, header, rows)
}

pub fn write_csv_to(mut w: impl Write, cfg: &RunConfig, comments: &[String], header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    writeln!(w, "{}", config_line(cfg)?)?;
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(header)?;
    for r in rows {
        cw.write_record(r)?;
    }
    cw.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
