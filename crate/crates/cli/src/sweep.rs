//! Stability-region sweeps over an (ω, p) grid.
//!
//! Points run on a rayon pool; results go through one writer in sorted
//! order. An existing output file is read first and its points are
//! skipped, so an interrupted sweep resumes where it stopped.

use crate::config::{Format, RunConfig};
use crate::output::{config_line, num, write_csv, write_json};
use anyhow::{Context, Result};
use pnls::gss::{analyze, star_threshold};
use pnls::profiles::make_profile;
use pnls::slope::{find_omega_star, ProfileFamily};
use pnls::ModelKind;
use rayon::prelude::*;
use serde_json::json;
use std::collections::BTreeMap;
use std::io::Write;

pub const HEADER: [&str; 5] = ["omega", "p", "verdict", "n_negative", "J"];

/// Grid point keyed by bit patterns so that `BTreeMap` order is the
/// numeric (p, ω) order for positive values.
type Key = (u64, u64);

fn key(omega: f64, p: f64) -> Key {
    (p.to_bits(), omega.to_bits())
}

#[derive(Debug, Clone)]
struct Row {
    omega: f64,
    p: f64,
    verdict: String,
    n_negative: Option<usize>,
    j: Option<f64>,
}

impl Row {
    fn cells(&self) -> Vec<String> {
        vec![
            num(self.omega),
            num(self.p),
            self.verdict.clone(),
            self.n_negative.map(|n| n.to_string()).unwrap_or_default(),
            self.j.map(num).unwrap_or_default(),
        ]
    }
}

fn evaluate(cfg: &RunConfig, omega: f64, p: f64) -> Row {
    let attempt = || -> Result<(String, usize, f64)> {
        let spec = make_profile(cfg.interaction()?, omega, p, cfg.variant()?)?;
        let a = analyze(&spec, cfg.h, cfg.x_max)?;
        Ok((a.verdict.verdict.to_string(), a.verdict.n_negative, a.slope.j))
    };
    match attempt() {
        Ok((verdict, n, j)) => Row { omega, p, verdict, n_negative: Some(n), j: Some(j) },
        Err(e) => {
            eprintln!("ω = {omega}, p = {p}: {e:#}");
            Row { omega, p, verdict: "indeterminate".into(), n_negative: None, j: None }
        }
    }
}

fn read_existing(path: &std::path::Path) -> Result<BTreeMap<Key, Row>> {
    let mut out = BTreeMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    for rec in rdr.records() {
        let rec = rec?;
        let f = |i: usize| rec.get(i).unwrap_or_default();
        let (Ok(omega), Ok(p)) = (f(0).parse::<f64>(), f(1).parse::<f64>()) else {
            continue;
        };
        let row = Row {
            omega,
            p,
            verdict: f(2).to_string(),
            n_negative: f(3).parse().ok(),
            j: f(4).parse().ok(),
        };
        out.insert(key(omega, p), row);
    }
    Ok(out)
}

/// Remarks on `ω*` against the spectral threshold for graph-δ′, p > 5.
fn remarks(cfg: &RunConfig) -> Vec<String> {
    let mut out = Vec::new();
    if cfg.model != ModelKind::GraphDeltaPrime {
        return out;
    }
    for p in cfg.p_values() {
        if p <= 5.0 {
            continue;
        }
        let Ok(model) = cfg.interaction() else { continue };
        let Ok(variant) = cfg.variant() else { continue };
        let fam = ProfileFamily::new(model, p, variant);
        if let Ok(star) = find_omega_star(&fam) {
            if let Some(t) = fam.at(star.omega_star).ok().as_ref().and_then(star_threshold) {
                out.push(format!(
                    "p = {p}: omega_star = {}, threshold = {t}, omega_star > threshold: {}",
                    star.omega_star,
                    star.omega_star > t
                ));
            }
        }
    }
    out
}

pub fn sweep(cfg: &RunConfig, jobs: Option<usize>) -> Result<()> {
    let grid = cfg.grid()?;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for p in cfg.p_values() {
        for w in grid.omegas() {
            points.push((w, p));
        }
    }
    points.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)));
    points.dedup();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .context("building the worker pool")?;
    let notes = remarks(cfg);

    let format = cfg.format_or(Format::Csv);
    if format == Format::Json || cfg.output.is_none() {
        let rows: Vec<Row> = pool.install(|| points.par_iter().map(|&(w, p)| evaluate(cfg, w, p)).collect());
        let cells: Vec<Vec<String>> = rows.iter().map(Row::cells).collect();
        return match format {
            Format::Csv => write_csv(cfg, &notes, &HEADER, &cells),
            Format::Json => {
                let pts: Vec<_> = rows
                    .iter()
                    .map(|r| json!({"omega": r.omega, "p": r.p, "verdict": r.verdict, "n_negative": r.n_negative, "J": r.j}))
                    .collect();
                write_json(cfg, json!({"remarks": notes, "rows": pts}))
            }
        };
    }

    let path = cfg.output.as_deref().expect("checked above");
    let mut done = read_existing(path)?;
    let todo: Vec<(f64, f64)> = points.iter().copied().filter(|&(w, p)| !done.contains_key(&key(w, p))).collect();
    if !done.is_empty() {
        eprintln!("resuming: {} of {} points already present", points.len() - todo.len(), points.len());
    }

    // Append chunk by chunk so an interruption loses at most one chunk.
    let chunk = pool.current_num_threads().max(1) * 4;
    {
        let fresh = !path.exists();
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        if fresh {
            writeln!(f, "{}", config_line(cfg)?)?;
            writeln!(f, "{}", HEADER.join(","))?;
        }
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(f);
        for batch in todo.chunks(chunk) {
            let rows: Vec<Row> = pool.install(|| batch.par_iter().map(|&(om, p)| evaluate(cfg, om, p)).collect());
            for r in rows {
                w.write_record(r.cells())?;
                done.insert(key(r.omega, r.p), r);
            }
            w.flush()?;
        }
    }

    // Final rewrite in sorted order with the current config and remarks.
    let cells: Vec<Vec<String>> = done.values().map(Row::cells).collect();
    let tmp = path.with_extension("tmp");
    {
        let f = std::fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        crate::output::write_csv_to(std::io::BufWriter::new(f), cfg, &notes, &HEADER, &cells)?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
