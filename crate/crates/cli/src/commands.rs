//! Single-run commands.

use crate::config::{invalid, Format, PerturbationKind, RunConfig};
use crate::output::{num, opt_num, write_csv, write_json};
use anyhow::{Context, Result};
use pnls::domain::h1_norm_sq;
use pnls::dynamics::{evolve as run_evolution, EvolutionConfig, Perturbation};
use pnls::gss::{analyze, star_threshold};
use pnls::operators::{assemble, spectral_report, SpectralReport};
use pnls::profiles::{make_profile, stationary_residual};
use pnls::slope::{find_omega_star, slope_report, ProfileFamily, SlopeReport};
use pnls::snapshot::write_snapshots;
use pnls::{ModelKind, ProfileSpec};
use serde_json::{json, Value};

pub fn spec_of(cfg: &RunConfig) -> Result<ProfileSpec> {
    Ok(make_profile(cfg.interaction()?, cfg.omega()?, cfg.p, cfg.variant()?)?)
}

pub fn profile(cfg: &RunConfig) -> Result<()> {
    let spec = spec_of(cfg)?;
    let dom = spec.domain(cfg.h, cfg.x_max)?;
    let mut rows = Vec::new();
    for j in 0..dom.n_edges {
        for k in 0..dom.nodes_per_edge() {
            let x = dom.x(k);
            rows.push(vec![j.to_string(), num(x), num(spec.eval(j, x, 0)), num(spec.eval(j, x, 1))]);
        }
    }
    match cfg.format_or(Format::Csv) {
        Format::Csv => write_csv(cfg, &[], &["edge", "x", "value", "dvalue"], &rows),
        Format::Json => {
            let residual = stationary_residual(&spec, &dom)?;
            let samples: Vec<Value> = rows
                .iter()
                .map(|r| json!({"edge": r[0].parse::<usize>().unwrap_or(0), "x": r[1].parse::<f64>().unwrap_or(f64::NAN),
                                "value": r[2].parse::<f64>().unwrap_or(f64::NAN), "dvalue": r[3].parse::<f64>().unwrap_or(f64::NAN)}))
                .collect();
            write_json(
                cfg,
                json!({
                    "model": spec.model.kind.name(),
                    "omega": spec.omega,
                    "p": spec.p,
                    "variant": spec.variant.to_string(),
                    "matching": spec.matching,
                    "edges": spec.edges,
                    "stationary_residual": residual,
                    "vertex_residuals": spec.vertex_residuals(),
                    "h": dom.h,
                    "X": dom.x_max,
                    "samples": samples,
                }),
            )
        }
    }
}

pub fn report_json(r: &SpectralReport) -> Value {
    json!({
        "which": r.which,
        "subspace": r.subspace,
        "model": r.spec.model.kind.name(),
        "omega": r.spec.omega,
        "p": r.spec.p,
        "n_negative": r.n_negative,
        "kernel_dim": r.kernel_dim,
        "lowest_eigs": r.eigenvalues(),
        "tol_zero": r.tol_zero,
        "h": r.h,
        "X": r.x_max,
    })
}

pub fn spectrum(cfg: &RunConfig) -> Result<()> {
    let spec = spec_of(cfg)?;
    let dom = spec.domain(cfg.h, cfg.x_max)?;
    let op = assemble(cfg.operator, &spec, &dom, cfg.subspace)?;
    let r = spectral_report(&op, cfg.eigs)?;
    match cfg.format_or(Format::Json) {
        Format::Json => write_json(cfg, report_json(&r)),
        Format::Csv => {
            let eigs: Vec<String> = r.eigenvalues().into_iter().map(num).collect();
            write_csv(
                cfg,
                &[],
                &["which", "subspace", "model", "omega", "p", "n_negative", "kernel_dim", "lowest_eigs", "tol_zero", "h", "X"],
                &[vec![
                    format!("{:?}", r.which),
                    r.subspace.to_string(),
                    spec.model.kind.name().into(),
                    num(spec.omega),
                    num(spec.p),
                    r.n_negative.to_string(),
                    r.kernel_dim.to_string(),
                    eigs.join(";"),
                    num(r.tol_zero),
                    num(r.h),
                    num(r.x_max),
                ]],
            )
        }
    }
}

fn slope_row(r: &SlopeReport) -> Vec<String> {
    vec![num(r.omega), num(r.norm_sq), opt_num(r.j_closed), num(r.j_fd), r.p_of_omega.to_string()]
}

pub fn slope(cfg: &RunConfig) -> Result<()> {
    let family = ProfileFamily::new(cfg.interaction()?, cfg.p, cfg.variant()?);
    if cfg.find_omega_star {
        let star = find_omega_star(&family)?;
        let mut body = json!({
            "omega_star": star.omega_star,
            "sign_change": {"J_below": star.j_below, "J_above": star.j_above, "at": [star.omega_star * (1.0 - 1e-3), star.omega_star * (1.0 + 1e-3)]},
            "J1_decreasing": star.monotone,
            "bracket": [star.bracket.0, star.bracket.1],
        });
        if cfg.model == ModelKind::GraphDeltaPrime {
            let spec = family.at(star.omega_star)?;
            if let Some(t) = star_threshold(&spec) {
                body["threshold"] = json!(t);
                body["omega_star_above_threshold"] = json!(star.omega_star > t);
            }
        }
        if let Some(w) = cfg.omega {
            body["slope"] = serde_json::to_value(slope_report(&family, w)?)?;
        }
        return write_json(cfg, body);
    }
    if let Some(g) = &cfg.grid {
        let mut rows = Vec::new();
        for w in g.omegas() {
            let r = slope_report(&family, w).with_context(|| format!("ω = {w}"))?;
            rows.push(slope_row(&r));
        }
        return match cfg.format_or(Format::Csv) {
            Format::Csv => write_csv(cfg, &[], &["omega", "norm_sq", "J_closed", "J_fd", "p_of_omega"], &rows),
            Format::Json => {
                let pts: Vec<Value> = g
                    .omegas()
                    .into_iter()
                    .map(|w| slope_report(&family, w).map(|r| serde_json::to_value(r).unwrap_or(Value::Null)))
                    .collect::<pnls::Result<_>>()?;
                write_json(cfg, json!({ "points": pts }))
            }
        };
    }
    let r = slope_report(&family, cfg.omega()?)?;
    match cfg.format_or(Format::Json) {
        Format::Json => write_json(cfg, serde_json::to_value(&r)?),
        Format::Csv => write_csv(cfg, &[], &["omega", "norm_sq", "J_closed", "J_fd", "p_of_omega"], &[slope_row(&r)]),
    }
}

pub fn classify(cfg: &RunConfig) -> Result<()> {
    let spec = spec_of(cfg)?;
    let a = analyze(&spec, cfg.h, cfg.x_max)?;
    let v = &a.verdict;
    match cfg.format_or(Format::Json) {
        Format::Json => {
            let mut body = serde_json::to_value(v)?;
            body["omega"] = json!(spec.omega);
            body["p"] = json!(spec.p);
            body["model"] = json!(spec.model.kind.name());
            body["J"] = json!(a.slope.j);
            body["reports"] = Value::Array(a.reports.iter().map(report_json).collect());
            write_json(cfg, body)
        }
        Format::Csv => write_csv(
            cfg,
            &[],
            &["omega", "p", "verdict", "n_negative", "J"],
            &[vec![num(spec.omega), num(spec.p), v.verdict.to_string(), v.n_negative.to_string(), num(a.slope.j)]],
        ),
    }
}

pub fn evolve(cfg: &RunConfig) -> Result<()> {
    let spec = spec_of(cfg)?;
    let dom = spec.domain(cfg.h, cfg.x_max)?;
    let perturbation = match cfg.perturbation {
        PerturbationKind::Relative => Perturbation::RelativeAmplitude { eps: cfg.eps },
        PerturbationKind::EdgeAsymmetric => Perturbation::EdgeAsymmetric { eps: cfg.eps },
    };
    let ecfg = EvolutionConfig {
        record_every: cfg.record_every,
        snapshot_every: cfg.snapshot_every.or(cfg.snapshots.as_ref().map(|_| cfg.record_every)),
        ..EvolutionConfig::new(cfg.dt(), cfg.t_final, perturbation)
    };
    if cfg.snapshot_every.is_some() && cfg.snapshots.is_none() {
        return Err(invalid("--snapshot-every needs --snapshots <path>"));
    }
    let tr = run_evolution(&spec, &dom, &ecfg)?;
    if let Some(path) = &cfg.snapshots {
        let f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_snapshots(std::io::BufWriter::new(f), &dom, &tr.snapshots)?;
    }
    let phi_norm = h1_norm_sq(&spec.sample(&dom)?).sqrt();
    // Growth threshold is a reporting convention, not a stability test.
    let threshold = 100.0 * cfg.eps * phi_norm;
    let crossed = tr.first_exceedance(threshold);
    let summary = json!({
        "mass_drift": tr.mass_drift(),
        "energy_drift": tr.energy_drift(),
        "max_orbital_distance": tr.max_orbital_distance(),
        "profile_h1_norm": phi_norm,
        "growth_threshold": threshold,
        "growth": match crossed { Some(_) => "threshold crossed", None => "no growth observed" },
        "crossed_at": crossed,
        "boundary_warning": tr.boundary_warning,
        "blowup_time": tr.blowup_time,
        "h": dom.h,
        "X": dom.x_max,
        "dt": ecfg.dt,
    });
    match cfg.format_or(Format::Csv) {
        Format::Csv => {
            let rows: Vec<Vec<String>> = (0..tr.times.len())
                .map(|i| {
                    vec![num(tr.times[i]), num(tr.orbital_distance[i]), num(tr.mass[i]), num(tr.energy[i]), num(tr.max_amplitude[i])]
                })
                .collect();
            let comments = vec![format!("summary: {summary}")];
            write_csv(cfg, &comments, &["t", "orbital_distance", "mass", "energy", "max_amplitude"], &rows)
        }
        Format::Json => write_json(
            cfg,
            json!({
                "summary": summary,
                "t": tr.times,
                "orbital_distance": tr.orbital_distance,
                "mass": tr.mass,
                "energy": tr.energy,
                "max_amplitude": tr.max_amplitude,
            }),
        ),
    }
}
