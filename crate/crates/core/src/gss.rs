//! Orbital-stability verdicts from spectral counts and the slope sign.
//!
//! The generic rule compares `n = n(L1)` with `p(ω) ∈ {0, 1}`, the
//! indicator of `∂_ω‖Φ_ω‖² > 0`: the wave is stable when `n - p(ω) = 0` and
//! unstable when `n - p(ω)` is odd, provided `L2 ≥ 0` has the profile as its
//! only kernel direction and `L1` has no kernel. A few regimes override the
//! generic rule; each verdict records which one fired.

use crate::domain::l2_inner;
use crate::error::{Error, Result};
use crate::operators::{assemble, spectral_report, SpectralReport, Subspace, Which};
use crate::profiles::{ModelKind, ProfileSpec, Variant};
use crate::slope::{slope_report, ProfileFamily, SlopeReport, SlopeSign};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

/// Function space the verdict refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    #[serde(rename = "H1_line")]
    H1Line,
    #[serde(rename = "H1_line_minus_origin")]
    H1LineMinusOrigin,
    /// Edgewise-symmetric functions on the star.
    #[serde(rename = "E_graph")]
    EGraph,
    #[serde(rename = "H1_graph")]
    H1Graph,
    #[serde(rename = "H1_even_graph")]
    H1EvenGraph,
    #[serde(rename = "H1_odd_line")]
    H1OddLine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    pub space: Space,
    pub n_negative: usize,
    pub kernel_ok: bool,
    pub p_of_omega: SlopeSign,
    pub rule: String,
    /// False for regimes where the verdict is cited rather than proved.
    pub asserted: bool,
    pub diagnostics: Vec<String>,
}

pub const RULE_GENERIC: &str = "GSS count n(L1) - p(omega)";
pub const RULE_ODD_SECTOR: &str = "odd-subspace GSS";
pub const RULE_EVEN_SECTOR: &str = "even-sector GSS count above the star threshold";
pub const RULE_REPULSIVE_LINE: &str = "cited instability for attractive strength of the wrong sign";
pub const RULE_BUMP: &str = "no criterion for bump profiles";
pub const RULE_ODD_STAR: &str = "full-space parity unknown for odd N above the star threshold";

fn default_space(spec: &ProfileSpec) -> Space {
    match spec.model.kind {
        ModelKind::LineDeltaAttractive | ModelKind::LineDeltaRepulsive => Space::H1Line,
        ModelKind::LineDeltaPrime => Space::H1LineMinusOrigin,
        ModelKind::GraphDelta => Space::EGraph,
        ModelKind::GraphDeltaPrime => Space::H1Graph,
    }
}

/// `N²/λ² · (p+1)/(p-1)`, where the δ′ star changes its spectral count.
pub fn star_threshold(spec: &ProfileSpec) -> Option<f64> {
    (spec.model.kind == ModelKind::GraphDeltaPrime).then(|| {
        let n = spec.model.n_edges as f64;
        n * n / (spec.model.strength * spec.model.strength) * (spec.p + 1.0) / (spec.p - 1.0)
    })
}

/// Same threshold for the odd line-δ′ profile, `4/β² · (p+1)/(p-1)`.
pub fn line_prime_threshold(spec: &ProfileSpec) -> Option<f64> {
    (spec.model.kind == ModelKind::LineDeltaPrime).then(|| {
        4.0 / (spec.model.strength * spec.model.strength) * (spec.p + 1.0) / (spec.p - 1.0)
    })
}

fn find<'a>(reports: &'a [SpectralReport], which: Which, subspace: Subspace) -> Option<&'a SpectralReport> {
    reports.iter().find(|r| r.which == which && r.subspace == subspace)
}

/// `|⟨v, Φ⟩| / (‖v‖ ‖Φ‖)` for the lowest `L2` eigenfield.
fn kernel_correlation(spec: &ProfileSpec, l2: &SpectralReport) -> Result<Option<f64>> {
    let Some((_, v)) = l2.lowest_eigs.first() else {
        return Ok(None);
    };
    let phi = spec.sample(v.domain())?;
    let c = l2_inner(v, &phi)?;
    Ok(Some(c.abs() / (l2_inner(v, v)? * l2_inner(&phi, &phi)?).sqrt()))
}

/// Checks the GSS spectral hypotheses on one sector; returns diagnostics
/// for every failure.
fn kernel_checks(spec: &ProfileSpec, l1: &SpectralReport, l2: &SpectralReport) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    if l2.n_negative != 0 {
        bad.push(format!("{}: n(L2) = {} (expected 0)", l2.subspace, l2.n_negative));
    }
    if l2.kernel_dim != 1 {
        bad.push(format!("{}: dim ker L2 = {} (expected 1)", l2.subspace, l2.kernel_dim));
    } else {
        match kernel_correlation(spec, l2)? {
            Some(c) if c >= 1.0 - 1e-6 => {}
            Some(c) => bad.push(format!("{}: ker L2 correlates with the profile at {c:.9}", l2.subspace)),
            None => bad.push(format!("{}: no L2 eigenpair to check the kernel", l2.subspace)),
        }
    }
    // Without the interaction the line is translation invariant.
    let translation = spec.model.kind == ModelKind::LineDeltaAttractive && spec.model.strength == 0.0 && l1.subspace == Subspace::Full;
    let expected = usize::from(translation);
    if l1.kernel_dim != expected {
        bad.push(format!("{}: dim ker L1 = {} (expected {expected})", l1.subspace, l1.kernel_dim));
    }
    if !(spec.omega > 0.0) {
        bad.push(format!("essential spectrum floor ω = {} is not positive", spec.omega));
    }
    Ok(bad)
}

fn check_consistent(spec: &ProfileSpec, reports: &[SpectralReport], slope: &SlopeReport) -> Result<()> {
    for r in reports {
        if &r.spec != spec {
            return Err(Error::InconsistentInputs(format!(
                "{:?} report on {} was computed for a different profile",
                r.which, r.subspace
            )));
        }
    }
    if slope.omega != spec.omega {
        return Err(Error::InconsistentInputs(format!(
            "slope evaluated at ω = {}, profile has ω = {}",
            slope.omega, spec.omega
        )));
    }
    Ok(())
}

/// Verdict from the count `n` and slope sign, given passing kernel checks.
fn count_rule(n: usize, p: SlopeSign, kernel_ok: bool, diagnostics: &mut Vec<String>) -> Verdict {
    let Some(pi) = p.as_int() else {
        diagnostics.push(
            "|J| within tolerance: degenerate slope, second-derivative criterion not implemented".into(),
        );
        return Verdict::Indeterminate;
    };
    if !kernel_ok {
        return Verdict::Indeterminate;
    }
    let d = n as i64 - pi;
    if d == 0 {
        Verdict::Stable
    } else if d > 0 && d % 2 == 1 {
        Verdict::Unstable
    } else {
        diagnostics.push(format!("n(L1) - p(ω) = {d} decides nothing"));
        Verdict::Indeterminate
    }
}

/// Combines spectral reports (at least full-space `L1` and `L2`) and the
/// slope at the same frequency into a verdict.
pub fn classify(spec: &ProfileSpec, reports: &[SpectralReport], slope: &SlopeReport) -> Result<StabilityVerdict> {
    check_consistent(spec, reports, slope)?;
    let missing = |w: Which, s: Subspace| Error::InconsistentInputs(format!("no {w:?} report on {s}"));
    let l1 = find(reports, Which::L1, Subspace::Full).ok_or_else(|| missing(Which::L1, Subspace::Full))?;
    let l2 = find(reports, Which::L2, Subspace::Full).ok_or_else(|| missing(Which::L2, Subspace::Full))?;

    let mut diagnostics = kernel_checks(spec, l1, l2)?;
    let kernel_ok = diagnostics.is_empty();
    let p = slope.p_of_omega;
    let mut out = StabilityVerdict {
        verdict: Verdict::Indeterminate,
        space: default_space(spec),
        n_negative: l1.n_negative,
        kernel_ok,
        p_of_omega: p,
        rule: RULE_GENERIC.into(),
        asserted: true,
        diagnostics: Vec::new(),
    };
    if slope.disagreement {
        diagnostics.push(format!("closed-form and finite-difference slopes disagree ({:?} vs {:e})", slope.j_closed, slope.j_fd));
    }

    let kind = spec.model.kind;
    if matches!(spec.variant, Variant::Bump(m) if m >= 1) {
        out.rule = RULE_BUMP.into();
        out.asserted = false;
        out.diagnostics = diagnostics;
        return Ok(out);
    }
    if kind == ModelKind::LineDeltaAttractive && spec.model.strength < 0.0 {
        out.verdict = Verdict::Unstable;
        out.rule = RULE_REPULSIVE_LINE.into();
        out.asserted = false;
        out.diagnostics = diagnostics;
        return Ok(out);
    }
    if kind == ModelKind::LineDeltaPrime && spec.variant == Variant::Odd && p == SlopeSign::Zero {
        out.space = Space::H1OddLine;
        out.rule = RULE_ODD_SECTOR.into();
        match (find(reports, Which::L1, Subspace::OddSector), find(reports, Which::L2, Subspace::OddSector)) {
            (Some(s1), Some(s2)) => {
                let mut d = kernel_checks(spec, s1, s2)?;
                out.kernel_ok = d.is_empty();
                out.n_negative = s1.n_negative;
                diagnostics.append(&mut d);
                out.verdict = count_rule(s1.n_negative, p, out.kernel_ok, &mut diagnostics);
            }
            _ => diagnostics.push("odd-sector reports missing".into()),
        }
        out.diagnostics = diagnostics;
        return Ok(out);
    }
    if let Some(thr) = star_threshold(spec) {
        if spec.omega > thr && kernel_ok {
            let n = spec.model.n_edges;
            if n % 2 == 1 {
                out.rule = RULE_ODD_STAR.into();
                out.asserted = false;
                diagnostics.push(format!("measured n(L1) = {} on the full space", l1.n_negative));
                out.diagnostics = diagnostics;
                return Ok(out);
            }
            out.space = Space::H1EvenGraph;
            out.rule = RULE_EVEN_SECTOR.into();
            match (find(reports, Which::L1, Subspace::EdgewiseEven), find(reports, Which::L2, Subspace::EdgewiseEven)) {
                (Some(s1), Some(s2)) => {
                    let mut d = kernel_checks(spec, s1, s2)?;
                    out.kernel_ok = d.is_empty();
                    out.n_negative = s1.n_negative;
                    diagnostics.append(&mut d);
                    out.verdict = count_rule(s1.n_negative, p, out.kernel_ok, &mut diagnostics);
                }
                _ => diagnostics.push("edgewise-even reports missing".into()),
            }
            out.diagnostics = diagnostics;
            return Ok(out);
        }
    }
    out.verdict = count_rule(l1.n_negative, p, kernel_ok, &mut diagnostics);
    out.diagnostics = diagnostics;
    Ok(out)
}

/// Everything `classify` looked at, for export.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub spec: ProfileSpec,
    pub reports: Vec<SpectralReport>,
    pub slope: SlopeReport,
    pub verdict: StabilityVerdict,
}

/// Sectors whose reports the classifier may need for `spec`.
pub fn sectors_for(spec: &ProfileSpec) -> Vec<Subspace> {
    let mut s = vec![Subspace::Full];
    match spec.model.kind {
        ModelKind::LineDeltaPrime if spec.variant == Variant::Odd => s.push(Subspace::OddSector),
        ModelKind::GraphDeltaPrime if spec.model.n_edges % 2 == 0 => s.push(Subspace::EdgewiseEven),
        _ => {}
    }
    s
}

/// Assembles the needed operators at mesh width `h`, computes the slope,
/// and classifies.
pub fn analyze(spec: &ProfileSpec, h: f64, x_max: Option<f64>) -> Result<Analysis> {
    let dom = spec.domain(h, x_max)?;
    let mut reports = Vec::new();
    for sub in sectors_for(spec) {
        for which in [Which::L1, Which::L2] {
            let op = assemble(which, spec, &dom, sub)?;
            reports.push(spectral_report(&op, 2)?);
        }
    }
    let slope = slope_report(&ProfileFamily::of(spec), spec.omega)?;
    let verdict = classify(spec, &reports, &slope)?;
    Ok(Analysis { spec: spec.clone(), reports, slope, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{make_profile, InteractionModel};

    fn run(model: InteractionModel, omega: f64, p: f64, v: Variant) -> StabilityVerdict {
        let spec = make_profile(model, omega, p, v).unwrap();
        analyze(&spec, 0.01, None).unwrap().verdict
    }

    #[test]
    fn canonical_examples() {
        let v = run(InteractionModel::line_delta(1.0), 1.0, 3.0, Variant::Even);
        assert_eq!((v.verdict, v.space, v.n_negative), (Verdict::Stable, Space::H1Line, 1));
        assert!(v.kernel_ok && v.asserted);

        let v = run(InteractionModel::line_delta_prime(2.0), 3.0, 3.0, Variant::Odd);
        assert_eq!((v.verdict, v.n_negative), (Verdict::Unstable, 2));

        let v = run(InteractionModel::graph_delta_prime(4, -3.0), 2.0, 3.0, Variant::Tail);
        assert_eq!(v.verdict, Verdict::Stable);
        let v = run(InteractionModel::graph_delta_prime(4, -3.0), 5.0, 3.0, Variant::Tail);
        assert_eq!((v.verdict, v.space, v.n_negative), (Verdict::Unstable, Space::H1EvenGraph, 2));

        let v = run(InteractionModel::line_delta_repulsive(2.0), 0.5, 3.0, Variant::Even);
        assert_eq!((v.verdict, v.n_negative), (Verdict::Stable, 0));

        let v = run(InteractionModel::graph_delta(3, -1.0), 2.0, 3.0, Variant::Tail);
        assert_eq!((v.verdict, v.space), (Verdict::Stable, Space::EGraph));
    }

    #[test]
    fn threshold_kernel_blocks_verdict() {
        let v = run(InteractionModel::graph_delta_prime(3, -2.0), 4.5, 3.0, Variant::Tail);
        assert_eq!(v.verdict, Verdict::Indeterminate);
        assert!(!v.kernel_ok);
    }

    #[test]
    fn special_regimes() {
        let v = run(InteractionModel::line_delta(-1.0), 1.0, 3.0, Variant::Even);
        assert_eq!((v.verdict, v.asserted), (Verdict::Unstable, false));
        let v = run(InteractionModel::graph_delta(3, -1.0), 2.0, 3.0, Variant::Bump(1));
        assert_eq!(v.verdict, Verdict::Indeterminate);
        let v = run(InteractionModel::graph_delta_prime(3, -2.0), 6.0, 3.0, Variant::Tail);
        assert_eq!(v.verdict, Verdict::Indeterminate);
        assert!(v.diagnostics.iter().any(|d| d.contains("n(L1) = 3")));
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let a = make_profile(InteractionModel::line_delta(1.0), 1.0, 3.0, Variant::Even).unwrap();
        let b = make_profile(InteractionModel::line_delta(1.0), 1.2, 3.0, Variant::Even).unwrap();
        let an = analyze(&a, 0.02, None).unwrap();
        let slope_b = slope_report(&ProfileFamily::of(&b), 1.2).unwrap();
        assert!(matches!(classify(&a, &an.reports, &slope_b), Err(Error::InconsistentInputs(_))));
        assert!(matches!(classify(&b, &an.reports, &slope_b), Err(Error::InconsistentInputs(_))));
    }

    #[test]
    fn classify_is_deterministic() {
        let a = make_profile(InteractionModel::graph_delta_prime(4, -3.0), 5.0, 3.0, Variant::Tail).unwrap();
        let an = analyze(&a, 0.02, None).unwrap();
        let again = classify(&a, &an.reports, &an.slope).unwrap();
        assert_eq!(an.verdict, again);
    }
}
