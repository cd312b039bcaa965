//! Closed-form standing-wave profiles and their residual checks.
//!
//! On every edge a profile is one of three branches, evaluated at the
//! outward distance `s` from the vertex, with `q = 2/(p-1)` and
//! `κ = (p-1)√ω/2`:
//!
//! * `Sech { sign, shift }`: `sign · A sech^q(κ s + shift)`,
//!   `A = ((p+1)ω/2)^(1/(p-1))`;
//! * `Csch { shift }`: `A csch^q(κ s + shift)` (repulsive, `ω > 0`);
//! * `Algebraic { gamma }`: `B (4 + (p-1)γ s)^(-q)` (repulsive, `ω = 0`),
//!   `B = (2(p+1)γ²)^(1/(p-1))`.
//!
//! Powers are taken through logarithms (`ln cosh`, `ln sinh` in overflow-free
//! form) so non-integer `p` and large arguments are safe.

use crate::domain::{auto_length, DiscreteDomain, Field};
use crate::error::{Error, Result};
use crate::roots::bisect;
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "line-delta", alias = "line-delta-attractive")]
    LineDeltaAttractive,
    #[serde(rename = "line-delta-repulsive")]
    LineDeltaRepulsive,
    #[serde(rename = "line-delta-prime")]
    LineDeltaPrime,
    #[serde(rename = "graph-delta")]
    GraphDelta,
    #[serde(rename = "graph-delta-prime")]
    GraphDeltaPrime,
}

impl ModelKind {
    pub fn is_line(self) -> bool {
        matches!(
            self,
            ModelKind::LineDeltaAttractive | ModelKind::LineDeltaRepulsive | ModelKind::LineDeltaPrime
        )
    }

    pub fn is_repulsive(self) -> bool {
        self == ModelKind::LineDeltaRepulsive
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::LineDeltaAttractive => "line-delta",
            ModelKind::LineDeltaRepulsive => "line-delta-repulsive",
            ModelKind::LineDeltaPrime => "line-delta-prime",
            ModelKind::GraphDelta => "graph-delta",
            ModelKind::GraphDeltaPrime => "graph-delta-prime",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "line-delta" | "line-delta-attractive" => ModelKind::LineDeltaAttractive,
            "line-delta-repulsive" => ModelKind::LineDeltaRepulsive,
            "line-delta-prime" => ModelKind::LineDeltaPrime,
            "graph-delta" => ModelKind::GraphDelta,
            "graph-delta-prime" => ModelKind::GraphDeltaPrime,
            _ => return Err(Error::InvalidParameter(format!("unknown model '{s}'"))),
        })
    }
}

/// Equation identity: model kind, its coupling strength (γ, γ, β, α or λ)
/// and the number of edges (2 for line kinds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionModel {
    pub kind: ModelKind,
    pub strength: f64,
    pub n_edges: usize,
}

impl InteractionModel {
    pub fn line_delta(gamma: f64) -> Self {
        InteractionModel { kind: ModelKind::LineDeltaAttractive, strength: gamma, n_edges: 2 }
    }

    pub fn line_delta_repulsive(gamma: f64) -> Self {
        InteractionModel { kind: ModelKind::LineDeltaRepulsive, strength: gamma, n_edges: 2 }
    }

    pub fn line_delta_prime(beta: f64) -> Self {
        InteractionModel { kind: ModelKind::LineDeltaPrime, strength: beta, n_edges: 2 }
    }

    pub fn graph_delta(n_edges: usize, alpha: f64) -> Self {
        InteractionModel { kind: ModelKind::GraphDelta, strength: alpha, n_edges }
    }

    pub fn graph_delta_prime(n_edges: usize, lambda: f64) -> Self {
        InteractionModel { kind: ModelKind::GraphDeltaPrime, strength: lambda, n_edges }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.strength;
        if !s.is_finite() {
            return Err(Error::InvalidParameter(format!("strength {s} is not finite")));
        }
        if self.kind.is_line() && self.n_edges != 2 {
            return Err(Error::InvalidParameter(format!(
                "{} lives on the line (2 half-lines), got {} edges",
                self.kind.name(),
                self.n_edges
            )));
        }
        match self.kind {
            ModelKind::LineDeltaAttractive => {}
            ModelKind::LineDeltaRepulsive if s <= 0.0 => {
                return Err(Error::InvalidParameter(format!(
                    "repulsive δ requires γ > 0, got {s}"
                )))
            }
            ModelKind::LineDeltaPrime if s == 0.0 => {
                return Err(Error::InvalidParameter("δ′ strength β must be nonzero".into()))
            }
            ModelKind::GraphDelta | ModelKind::GraphDeltaPrime => {
                if self.n_edges < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "star graph needs N ≥ 2 edges, got {}",
                        self.n_edges
                    )));
                }
                if s >= 0.0 {
                    let sym = if self.kind == ModelKind::GraphDelta { "α" } else { "λ" };
                    return Err(Error::InvalidParameter(format!(
                        "{} profiles require {sym} < 0, got {s}",
                        self.kind.name()
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Even,
    Odd,
    Asymmetric,
    /// `m` bump edges followed by `N - m` tail edges; `Bump(0)` is the tail.
    Bump(usize),
    Tail,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "even" => Variant::Even,
            "odd" => Variant::Odd,
            "asymmetric" => Variant::Asymmetric,
            "tail" => Variant::Tail,
            _ => match s.strip_prefix("bump") {
                Some(m) => Variant::Bump(
                    m.trim_matches(|c| c == '(' || c == ')' || c == ':' || c == '=')
                        .parse()
                        .map_err(|_| Error::InvalidParameter(format!("bad bump count in '{s}'")))?,
                ),
                None => return Err(Error::InvalidParameter(format!("unknown variant '{s}'"))),
            },
        })
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Even => write!(f, "even"),
            Variant::Odd => write!(f, "odd"),
            Variant::Asymmetric => write!(f, "asymmetric"),
            Variant::Bump(m) => write!(f, "bump{m}"),
            Variant::Tail => write!(f, "tail"),
        }
    }
}

/// Derived matching constants. `a` is the `tanh⁻¹` shift of the profile
/// argument; `y`, `y1`, `y2` are the same shifts expressed as distances
/// (`shift / κ`) for the δ′ variants; `a_m` is the bump/tail shift.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub a: Option<f64>,
    pub y: Option<f64>,
    pub y1: Option<f64>,
    pub y2: Option<f64>,
    pub a_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EdgeShape {
    Sech { sign: f64, shift: f64 },
    Csch { shift: f64 },
    Algebraic { gamma: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub model: InteractionModel,
    pub omega: f64,
    pub p: f64,
    pub variant: Variant,
    pub matching: Matching,
    /// Branch on each edge; for line models edge 0 is `x < 0` (reflected).
    pub edges: Vec<EdgeShape>,
}

/// `ln cosh u` without overflow.
pub(crate) fn ln_cosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - LN_2
}

/// `ln sinh u` for `u > 0` without overflow.
fn ln_sinh(u: f64) -> f64 {
    u + (-(-2.0 * u).exp()).ln_1p() - LN_2
}

fn out_of_window(msg: String) -> Error {
    Error::OutOfExistenceWindow(msg)
}

/// `t_i = tanh(shift_i)` of the asymmetric δ′ profile for `β > 0`.
fn asymmetric_tanh(beta: f64, omega: f64, p: f64) -> Result<(f64, f64)> {
    let q = 2.0 / (p - 1.0);
    let b = beta * omega.sqrt();
    let h = |t: f64| (1.0 - t * t).powf(0.5 * q);
    let g = |t: f64| h(t) * t;
    let tm = ((p - 1.0) / (p + 1.0)).sqrt();
    let partner = |t1: f64| -> Result<f64> {
        let target = g(t1);
        bisect(|t| g(t) - target, tm, 1.0, 1e-16)
    };
    let outer = |t1: f64| -> f64 {
        match partner(t1) {
            Ok(t2) => (h(t1) + h(t2)) / g(t1) - b,
            Err(_) => f64::NAN,
        }
    };
    let t1 = bisect(outer, 1e-12, tm * (1.0 - 1e-12), 1e-16)
        .map_err(|e| Error::MatchingFailed(format!("asymmetric δ′ bracket: {e}")))?;
    let mut t = [t1, partner(t1)?];

    // Damped Newton polish on the full 2x2 system.
    let resid = |t: [f64; 2]| [g(t[0]) - g(t[1]), h(t[0]) + h(t[1]) - b * g(t[0])];
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    for _ in 0..20 {
        let r = resid(t);
        if norm(r) < 1e-15 {
            break;
        }
        let dg = |t: f64| (1.0 - t * t).powf(0.5 * q - 1.0) * (1.0 - (1.0 + q) * t * t);
        let dh = |t: f64| -q * t * (1.0 - t * t).powf(0.5 * q - 1.0);
        let j = [[dg(t[0]), -dg(t[1])], [dh(t[0]) - b * dg(t[0]), dh(t[1])]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let d0 = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
        let d1 = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let mut step = 1.0;
        let mut improved = false;
        while step > 1e-4 {
            let cand = [t[0] - step * d0, t[1] - step * d1];
            if cand.iter().all(|&c| c > 0.0 && c < 1.0) && norm(resid(cand)) < norm(r) {
                t = cand;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let r = resid(t);
    let scale = 1.0 + b;
    if norm(r) > 1e-12 * scale || !(t[0] < t[1]) {
        return Err(Error::MatchingFailed(format!(
            "asymmetric δ′ residual {:e} at t = {:?}",
            norm(r),
            t
        )));
    }
    Ok((t[0], t[1]))
}

/// Builds a profile, resolving all matching constants.
pub fn make_profile(model: InteractionModel, omega: f64, p: f64, variant: Variant) -> Result<ProfileSpec> {
    model.validate()?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("power p = {p} must exceed 1")));
    }
    if !(omega >= 0.0 && omega.is_finite()) {
        return Err(out_of_window(format!("ω = {omega} must be a nonnegative number")));
    }
    let n = model.n_edges;
    let s = model.strength;
    let sw = omega.sqrt();
    let kappa = 0.5 * (p - 1.0) * sw;
    let mut m = Matching::default();
    let bad_variant = || {
        Error::InvalidParameter(format!("variant {variant} is not defined for {}", model.kind.name()))
    };
    let edges: Vec<EdgeShape> = match model.kind {
        ModelKind::LineDeltaAttractive => {
            if variant != Variant::Even {
                return Err(bad_variant());
            }
            if omega <= 0.25 * s * s {
                return Err(out_of_window(format!(
                    "line-δ needs ω > γ²/4 = {}, got ω = {omega}",
                    0.25 * s * s
                )));
            }
            let a = (s / (2.0 * sw)).atanh();
            m.a = Some(a);
            vec![EdgeShape::Sech { sign: 1.0, shift: a }; 2]
        }
        ModelKind::LineDeltaRepulsive => {
            if variant != Variant::Even {
                return Err(bad_variant());
            }
            if omega == 0.0 {
                if p >= 5.0 {
                    return Err(out_of_window(format!(
                        "repulsive δ at ω = 0 needs 1 < p < 5, got p = {p}"
                    )));
                }
                vec![EdgeShape::Algebraic { gamma: s }; 2]
            } else {
                if omega >= 0.25 * s * s {
                    return Err(out_of_window(format!(
                        "repulsive δ needs 0 < ω < γ²/4 = {}, got ω = {omega}",
                        0.25 * s * s
                    )));
                }
                let a = (2.0 * sw / s).atanh();
                m.a = Some(a);
                vec![EdgeShape::Csch { shift: a }; 2]
            }
        }
        ModelKind::LineDeltaPrime => {
            let lo = 4.0 / (s * s);
            match variant {
                Variant::Odd => {
                    if omega <= lo {
                        return Err(out_of_window(format!(
                            "odd δ′ profile needs ω > 4/β² = {lo}, got ω = {omega}"
                        )));
                    }
                    let a = (2.0 / (s * sw)).atanh();
                    m.a = Some(a);
                    m.y = Some(a / kappa);
                    vec![
                        EdgeShape::Sech { sign: -1.0, shift: a },
                        EdgeShape::Sech { sign: 1.0, shift: a },
                    ]
                }
                Variant::Asymmetric => {
                    let thr = lo * (p + 1.0) / (p - 1.0);
                    if omega <= thr {
                        return Err(out_of_window(format!(
                            "asymmetric δ′ profile needs ω > (4/β²)(p+1)/(p-1) = {thr}, got ω = {omega}"
                        )));
                    }
                    let (t1, t2) = asymmetric_tanh(s.abs(), omega, p)?;
                    let (c1, c2) = (t1.atanh().copysign(s), t2.atanh().copysign(s));
                    m.y1 = Some(c1 / kappa);
                    m.y2 = Some(c2 / kappa);
                    vec![
                        EdgeShape::Sech { sign: -1.0, shift: c2 },
                        EdgeShape::Sech { sign: 1.0, shift: c1 },
                    ]
                }
                _ => return Err(bad_variant()),
            }
        }
        ModelKind::GraphDelta => {
            let bumps = match variant {
                Variant::Tail => 0,
                Variant::Bump(k) => k,
                _ => return Err(bad_variant()),
            };
            if 2 * bumps >= n {
                return Err(out_of_window(format!(
                    "bump count m = {bumps} must satisfy 2m < N = {n}"
                )));
            }
            let d = (n - 2 * bumps) as f64;
            let lo = s * s / (d * d);
            if omega <= lo {
                return Err(out_of_window(format!(
                    "graph-δ profile with {bumps} bumps needs ω > α²/(N-2m)² = {lo}, got ω = {omega}"
                )));
            }
            let am = (s / (-d * sw)).atanh();
            m.a_m = Some(am);
            if bumps == 0 {
                m.a = Some(am);
            }
            (0..n)
                .map(|j| EdgeShape::Sech { sign: 1.0, shift: if j < bumps { -am } else { am } })
                .collect()
        }
        ModelKind::GraphDeltaPrime => {
            if variant != Variant::Tail {
                return Err(bad_variant());
            }
            let lo = (n * n) as f64 / (s * s);
            if omega <= lo {
                return Err(out_of_window(format!(
                    "graph-δ′ tail needs ω > N²/λ² = {lo}, got ω = {omega}"
                )));
            }
            let a = (-(n as f64) / (s * sw)).atanh();
            m.a = Some(a);
            vec![EdgeShape::Sech { sign: 1.0, shift: a }; n]
        }
    };
    Ok(ProfileSpec { model, omega, p, variant, matching: m, edges })
}

impl ProfileSpec {
    pub fn q(&self) -> f64 {
        2.0 / (self.p - 1.0)
    }

    pub fn kappa(&self) -> f64 {
        0.5 * (self.p - 1.0) * self.omega.sqrt()
    }

    fn ln_amplitude(&self) -> f64 {
        (0.5 * (self.p + 1.0) * self.omega).ln() / (self.p - 1.0)
    }

    /// Value (`order` 0) or outward derivative (`order` 1, 2) at distance
    /// `x ≥ 0` from the vertex on `edge`.
    pub fn eval(&self, edge: usize, x: f64, order: u8) -> f64 {
        let q = self.q();
        let k = self.kappa();
        match self.edges[edge] {
            EdgeShape::Sech { sign, shift } => {
                let u = k * x + shift;
                let f = sign * (self.ln_amplitude() - q * ln_cosh(u)).exp();
                let th = u.tanh();
                match order {
                    0 => f,
                    1 => -q * k * th * f,
                    _ => {
                        let sech2 = (-2.0 * ln_cosh(u)).exp();
                        q * k * k * (q * th * th - sech2) * f
                    }
                }
            }
            EdgeShape::Csch { shift } => {
                let u = k * x + shift;
                let f = (self.ln_amplitude() - q * ln_sinh(u)).exp();
                let coth = 1.0 / u.tanh();
                match order {
                    0 => f,
                    1 => -q * k * coth * f,
                    _ => {
                        let csch2 = (-2.0 * ln_sinh(u)).exp();
                        q * k * k * (q * coth * coth + csch2) * f
                    }
                }
            }
            EdgeShape::Algebraic { gamma } => {
                let pm1 = self.p - 1.0;
                let w = 4.0 + pm1 * gamma * x;
                let lnb = (2.0 * (self.p + 1.0) * gamma * gamma).ln() / pm1;
                let f = (lnb - q * w.ln()).exp();
                match order {
                    0 => f,
                    1 => -2.0 * gamma * f / w,
                    _ => 2.0 * gamma * gamma * (q + 1.0) * pm1 * f / (w * w),
                }
            }
        }
    }

    /// Samples the profile (real) on `dom`.
    pub fn sample(&self, dom: &DiscreteDomain) -> Result<Field> {
        self.check_domain(dom)?;
        Ok(Field::from_real_fn(dom, |j, x| self.eval(j, x, 0)))
    }

    /// Samples the outward derivative.
    pub fn sample_derivative(&self, dom: &DiscreteDomain) -> Result<Field> {
        self.check_domain(dom)?;
        Ok(Field::from_real_fn(dom, |j, x| self.eval(j, x, 1)))
    }

    pub fn check_domain(&self, dom: &DiscreteDomain) -> Result<()> {
        if dom.n_edges != self.model.n_edges {
            return Err(Error::DomainMismatch);
        }
        Ok(())
    }

    /// Largest distance from the vertex to a profile maximum (nonzero for
    /// bumps and for negative shifts).
    pub fn peak_offset(&self) -> f64 {
        let k = self.kappa();
        self.edges
            .iter()
            .map(|e| match *e {
                EdgeShape::Sech { shift, .. } if shift < 0.0 => -shift / k,
                _ => 0.0,
            })
            .fold(0.0, f64::max)
    }

    /// Default truncation length: thirty decay lengths past the farthest peak.
    pub fn auto_length(&self) -> Result<f64> {
        if self.omega <= 0.0 {
            return Err(Error::Unsupported(
                "ω = 0 profiles decay algebraically and are evaluation-only".into(),
            ));
        }
        Ok(auto_length(self.omega, self.p) + self.peak_offset())
    }

    /// Mesh of width `h` on the model's geometry, length `x_max` or automatic.
    pub fn domain(&self, h: f64, x_max: Option<f64>) -> Result<DiscreteDomain> {
        let x = match x_max {
            Some(x) => x,
            None => self.auto_length()?,
        };
        if self.model.kind.is_line() {
            DiscreteDomain::line(h, x)
        } else {
            DiscreteDomain::star(self.model.n_edges, h, x)
        }
    }

    /// Sign of the nonlinear term in `-φ'' + ωφ ∓ |φ|^(p-1)φ = 0`
    /// (`-1` attractive, `+1` repulsive).
    pub fn nonlinear_sign(&self) -> f64 {
        if self.model.kind.is_repulsive() {
            1.0
        } else {
            -1.0
        }
    }

    /// Residuals of the model's vertex conditions, evaluated analytically.
    pub fn vertex_residuals(&self) -> Vec<f64> {
        let n = self.model.n_edges;
        let v: Vec<f64> = (0..n).map(|j| self.eval(j, 0.0, 0)).collect();
        let d: Vec<f64> = (0..n).map(|j| self.eval(j, 0.0, 1)).collect();
        let s = self.model.strength;
        let mut r = Vec::new();
        match self.model.kind {
            ModelKind::LineDeltaAttractive | ModelKind::LineDeltaRepulsive => {
                // u(0-) = u(0+); u'(0+) - u'(0-) = D1 + D0 = -γ u(0).
                r.push((v[1] - v[0]).abs());
                r.push((d[1] + d[0] + s * v[1]).abs());
            }
            ModelKind::LineDeltaPrime => {
                // u'(0+) = u'(0-) means D1 = -D0; u(0+) - u(0-) = -β u'(0).
                r.push((d[1] + d[0]).abs());
                r.push((v[1] - v[0] + s * d[1]).abs());
            }
            ModelKind::GraphDelta => {
                r.extend((1..n).map(|j| (v[j] - v[0]).abs()));
                r.push((d.iter().sum::<f64>() - s * v[0]).abs());
            }
            ModelKind::GraphDeltaPrime => {
                r.extend((1..n).map(|j| (d[j] - d[0]).abs()));
                r.push((v.iter().sum::<f64>() - s * d[0]).abs());
            }
        }
        r
    }

    /// `sup |−φ'' + ωφ ∓ |φ|^(p−1)φ|` over the nodes of `dom`.
    pub fn interior_residual(&self, dom: &DiscreteDomain) -> Result<f64> {
        self.check_domain(dom)?;
        let sg = self.nonlinear_sign();
        let mut worst: f64 = 0.0;
        for j in 0..dom.n_edges {
            for k in 0..dom.nodes_per_edge() {
                let x = dom.x(k);
                let f = self.eval(j, x, 0);
                let f2 = self.eval(j, x, 2);
                let r = -f2 + self.omega * f + sg * f.abs().powf(self.p - 1.0) * f;
                worst = worst.max(r.abs());
            }
        }
        Ok(worst)
    }
}

/// Interior ODE residual plus the vertex-condition residuals.
pub fn stationary_residual(spec: &ProfileSpec, dom: &DiscreteDomain) -> Result<f64> {
    Ok(spec.interior_residual(dom)? + spec.vertex_residuals().iter().sum::<f64>())
}

pub fn eval_profile(spec: &ProfileSpec, edge: usize, x: f64, order: u8) -> f64 {
    spec.eval(edge, x, order)
}
