//! `‖Φ_ω‖²` along a profile family and its frequency derivative
//! `J(ω) = ∂_ω ‖Φ_ω‖²`.
//!
//! For every family whose edges are sech branches with `tanh(shift_j) =
//! K_j/√ω` (all tails and bumps), the substitution `t = tanh(κx + shift)`
//! gives, with `q = 2/(p-1)` and `z_j = K_j/√ω`,
//!
//! ```text
//! ‖Φ‖² = ((p+1)/2)^q · 2/(p-1) · ω^(q-1/2) · Σ_j ∫_{z_j}^1 (1-t²)^(q-1) dt
//! J    = ((p+1)/2)^q / (p-1) · ω^((7-3p)/(2(p-1))) · Σ_j J1(z_j)
//! J1(z) = (5-p)/(p-1) ∫_z^1 (1-t²)^((3-p)/(p-1)) dt + z (1-z²)^((3-p)/(p-1))
//! ```
//!
//! For `N` identical tails this is `C ω^((7-3p)/(2(p-1))) J1` with
//! `C = N/(p-1) ((p+1)/2)^q`. The repulsive csch family is handled by the
//! analogous substitution `v = coth(κx + shift)`.

use crate::error::{Error, Result};
use crate::profiles::{make_profile, EdgeShape, InteractionModel, ModelKind, ProfileSpec, Variant};
use crate::quadrature::{integrate_with_breaks, one_minus_t2_power, s2_minus_one_power};
use crate::roots::bisect;
use serde::{Deserialize, Serialize};

/// A one-parameter (in ω) family of profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileFamily {
    pub model: InteractionModel,
    pub p: f64,
    pub variant: Variant,
}

impl ProfileFamily {
    pub fn new(model: InteractionModel, p: f64, variant: Variant) -> Self {
        ProfileFamily { model, p, variant }
    }

    pub fn of(spec: &ProfileSpec) -> Self {
        ProfileFamily { model: spec.model, p: spec.p, variant: spec.variant }
    }

    pub fn at(&self, omega: f64) -> Result<ProfileSpec> {
        make_profile(self.model, omega, self.p, self.variant)
    }

    /// Open existence interval in ω.
    pub fn window(&self) -> (f64, f64) {
        let s = self.model.strength;
        let n = self.model.n_edges as f64;
        let p = self.p;
        match (self.model.kind, self.variant) {
            (ModelKind::LineDeltaAttractive, _) => (0.25 * s * s, f64::INFINITY),
            (ModelKind::LineDeltaRepulsive, _) => (0.0, 0.25 * s * s),
            (ModelKind::LineDeltaPrime, Variant::Asymmetric) => (4.0 / (s * s) * (p + 1.0) / (p - 1.0), f64::INFINITY),
            (ModelKind::LineDeltaPrime, _) => (4.0 / (s * s), f64::INFINITY),
            (ModelKind::GraphDelta, v) => {
                let m = if let Variant::Bump(m) = v { m as f64 } else { 0.0 };
                (s * s / ((n - 2.0 * m) * (n - 2.0 * m)), f64::INFINITY)
            }
            (ModelKind::GraphDeltaPrime, _) => (n * n / (s * s), f64::INFINITY),
        }
    }

    /// `K_j` with `tanh(shift_j) = K_j/√ω`, when every edge has that form.
    pub fn tail_constants(&self) -> Option<Vec<f64>> {
        let s = self.model.strength;
        let n = self.model.n_edges;
        match (self.model.kind, self.variant) {
            (ModelKind::LineDeltaAttractive, _) => Some(vec![0.5 * s; 2]),
            (ModelKind::LineDeltaPrime, Variant::Odd) => Some(vec![2.0 / s; 2]),
            (ModelKind::GraphDelta, v) => {
                let m = if let Variant::Bump(m) = v { m } else { 0 };
                let k = -s / (n - 2 * m) as f64;
                Some((0..n).map(|j| if j < m { -k } else { k }).collect())
            }
            (ModelKind::GraphDeltaPrime, _) => Some(vec![-(n as f64) / s; n]),
            _ => None,
        }
    }

    /// `(N, K)` when all edges carry the same tail constant.
    fn uniform_tail(&self) -> Option<(f64, f64)> {
        let ks = self.tail_constants()?;
        let k0 = ks[0];
        ks.iter().all(|&k| k == k0).then_some((ks.len() as f64, k0))
    }
}

fn q_of(p: f64) -> f64 {
    2.0 / (p - 1.0)
}

/// `J1(z)` for one edge.
pub fn j1_of_z(p: f64, z: f64) -> f64 {
    let e = (3.0 - p) / (p - 1.0);
    (5.0 - p) / (p - 1.0) * one_minus_t2_power(e, z) + z * (1.0 - z * z).powf(e)
}

/// Normalized slope factor `J1(ω)` of a uniform-tail family.
pub fn j1(family: &ProfileFamily, omega: f64) -> Result<f64> {
    let (_, k) = family.uniform_tail().ok_or_else(|| {
        Error::Unsupported(format!("J1 is defined for uniform tail families, not {:?}", family.variant))
    })?;
    Ok(j1_of_z(family.p, k / omega.sqrt()))
}

/// Positive constant `C` and exponent of the factorization `J = C ω^e J1`.
pub fn j_factorization(family: &ProfileFamily) -> Option<(f64, f64)> {
    let (n, _) = family.uniform_tail()?;
    let p = family.p;
    Some((n / (p - 1.0) * (0.5 * (p + 1.0)).powf(q_of(p)), (7.0 - 3.0 * p) / (2.0 * (p - 1.0))))
}

fn check_window(family: &ProfileFamily, omega: f64, margin: f64) -> Result<()> {
    let (lo, hi) = family.window();
    if !(omega > lo && omega < hi) {
        return Err(Error::OutOfExistenceWindow(format!(
            "ω = {omega} outside ({lo}, {hi}) for {} {}",
            family.model.kind.name(),
            family.variant
        )));
    }
    if omega - lo < margin {
        return Err(Error::WindowBoundaryTooClose { omega, edge: lo });
    }
    if hi - omega < margin {
        return Err(Error::WindowBoundaryTooClose { omega, edge: hi });
    }
    Ok(())
}

/// `Σ_j ∫_0^∞ f(j, x) dx` over the edges of a profile, split at its peaks.
pub fn profile_integral(spec: &ProfileSpec, f: impl Fn(usize, f64) -> f64) -> f64 {
    let decay = spec.omega.sqrt().min(spec.kappa());
    let end = spec.peak_offset() + 45.0 / decay;
    (0..spec.model.n_edges)
        .map(|j| {
            let peak = match spec.edges[j] {
                EdgeShape::Sech { shift, .. } if shift < 0.0 => vec![-shift / spec.kappa()],
                _ => vec![],
            };
            integrate_with_breaks(|x| f(j, x), 0.0, end, &peak, 0.0, 1e-13).value
        })
        .sum()
}

/// `‖Φ‖_r^r` of the continuous profile.
pub fn lp_pow_exact(spec: &ProfileSpec, r: f64) -> f64 {
    profile_integral(spec, |j, x| spec.eval(j, x, 0).abs().powf(r))
}

/// `‖Φ_ω‖²` by adaptive quadrature of the closed-form profile.
pub fn norm_sq_of_omega(family: &ProfileFamily, omega: f64) -> Result<f64> {
    let spec = family.at(omega)?;
    if omega <= 0.0 {
        return Err(Error::Unsupported("‖Φ‖² at ω = 0 is not computed".into()));
    }
    Ok(lp_pow_exact(&spec, 2.0))
}

/// `‖Φ_ω‖²` from the `t`-integral form, when available.
pub fn norm_sq_closed(family: &ProfileFamily, omega: f64) -> Option<f64> {
    let p = family.p;
    let q = q_of(p);
    let pre = (0.5 * (p + 1.0)).powf(q) * 2.0 / (p - 1.0) * omega.powf(q - 0.5);
    if family.model.kind == ModelKind::LineDeltaRepulsive {
        let u = 0.5 * family.model.strength / omega.sqrt();
        return Some(2.0 * pre * s2_minus_one_power(q - 1.0, u));
    }
    let ks = family.tail_constants()?;
    let sw = omega.sqrt();
    Some(pre * ks.iter().map(|k| one_minus_t2_power(q - 1.0, k / sw)).sum::<f64>())
}

/// Closed-form `J(ω)`, when available.
pub fn slope_closed(family: &ProfileFamily, omega: f64) -> Option<f64> {
    let p = family.p;
    let q = q_of(p);
    let c = (0.5 * (p + 1.0)).powf(q) / (p - 1.0);
    if family.model.kind == ModelKind::LineDeltaRepulsive {
        let u = 0.5 * family.model.strength / omega.sqrt();
        let bracket = (2.0 * q - 1.0) * s2_minus_one_power(q - 1.0, u) - u * (u * u - 1.0).powf(q - 1.0);
        return Some(2.0 * c * omega.powf(q - 1.5) * bracket);
    }
    let ks = family.tail_constants()?;
    let sw = omega.sqrt();
    Some(c * omega.powf(q - 1.5) * ks.iter().map(|k| j1_of_z(p, k / sw)).sum::<f64>())
}

/// `J(ω)` by differentiating under the integral sign (sech families).
pub fn slope_direct(family: &ProfileFamily, omega: f64) -> Option<f64> {
    let ks = family.tail_constants()?;
    let spec = family.at(omega).ok()?;
    let p = family.p;
    let q = q_of(p);
    let k = spec.kappa();
    let sw = omega.sqrt();
    Some(profile_integral(&spec, |j, x| {
        let z = ks[j] / sw;
        let shift = z.atanh();
        let dshift = -z / (2.0 * omega * (1.0 - z * z));
        let u = k * x + shift;
        let dlog = 1.0 / ((p - 1.0) * omega) - q * u.tanh() * (k * x / (2.0 * omega) + dshift);
        let f = spec.eval(j, x, 0);
        2.0 * f * f * dlog
    }))
}

/// Central difference of the quadrature norm with step `1e-4·ω`.
pub fn slope_fd(family: &ProfileFamily, omega: f64) -> Result<f64> {
    let d = 1e-4 * omega;
    Ok((norm_sq_of_omega(family, omega + d)? - norm_sq_of_omega(family, omega - d)?) / (2.0 * d))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlopeSign {
    /// `J > tol`.
    #[serde(rename = "1")]
    One,
    /// `J < -tol`.
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "indeterminate")]
    Indeterminate,
}

impl SlopeSign {
    pub fn as_int(self) -> Option<i64> {
        match self {
            SlopeSign::One => Some(1),
            SlopeSign::Zero => Some(0),
            SlopeSign::Indeterminate => None,
        }
    }
}

impl std::fmt::Display for SlopeSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SlopeSign::One => f.write_str("1"),
            SlopeSign::Zero => f.write_str("0"),
            SlopeSign::Indeterminate => f.write_str("indeterminate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlopeMethod {
    ClosedForm,
    QuadratureFd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    pub omega: f64,
    pub norm_sq: f64,
    /// Value used for the sign decision.
    #[serde(rename = "J")]
    pub j: f64,
    pub method: SlopeMethod,
    pub j_closed: Option<f64>,
    pub j_fd: f64,
    pub tol_slope: f64,
    /// Closed form and finite difference differ by more than `1e-4` relative.
    pub disagreement: bool,
    pub omega_star: Option<f64>,
    pub p_of_omega: SlopeSign,
}

pub fn slope_sign(j: f64, tol: f64) -> SlopeSign {
    if j > tol {
        SlopeSign::One
    } else if j < -tol {
        SlopeSign::Zero
    } else {
        SlopeSign::Indeterminate
    }
}

/// Both slope routes at `omega`; the closed form decides when it exists.
pub fn slope_j(family: &ProfileFamily, omega: f64) -> Result<SlopeReport> {
    check_window(family, omega, 10.0 * 1e-4 * omega)?;
    let norm_sq = norm_sq_of_omega(family, omega)?;
    let j_fd = slope_fd(family, omega)?;
    let j_closed = slope_closed(family, omega);
    let (j, method) = match j_closed {
        Some(c) => (c, SlopeMethod::ClosedForm),
        None => (j_fd, SlopeMethod::QuadratureFd),
    };
    let tol_slope = 1e-6 * (1.0 + norm_sq / omega);
    let disagreement = j_closed.is_some_and(|c| (c - j_fd).abs() > 1e-4 * c.abs().max(tol_slope));
    Ok(SlopeReport {
        omega,
        norm_sq,
        j,
        method,
        j_closed,
        j_fd,
        tol_slope,
        disagreement,
        omega_star: None,
        p_of_omega: slope_sign(j, tol_slope),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaStar {
    pub omega_star: f64,
    /// Finite-difference slopes at `ω*(1 ∓ 1e-3)`.
    pub j_below: f64,
    pub j_above: f64,
    /// `J1` strictly decreasing on 50 log-spaced samples of the bracket.
    pub monotone: bool,
    pub bracket: (f64, f64),
}

/// Root of `J1` for `p > 5`, bracketed on `[lo(1+1e-6), 1e6·lo]` and
/// certified by finite-difference slopes on both sides.
pub fn find_omega_star(family: &ProfileFamily) -> Result<OmegaStar> {
    if family.p <= 5.0 {
        return Err(Error::InvalidParameter(format!(
            "ω* exists only for p > 5, got p = {}",
            family.p
        )));
    }
    if family.uniform_tail().is_none() {
        return Err(Error::Unsupported(format!(
            "ω* search needs a uniform tail family, got {} {}",
            family.model.kind.name(),
            family.variant
        )));
    }
    let (lo, _) = family.window();
    let a = lo * (1.0 + 1e-6);
    let b = 1e6 * lo;
    let f = |w: f64| j1(family, w).unwrap_or(f64::NAN);
    let omega_star = bisect(f, a, b, 1e-10).map_err(|e| match e {
        Error::NoBracket(m) => Error::NoBracket(format!("J1 on [{a}, {b}]: {m}")),
        other => other,
    })?;
    let monotone = {
        let vals: Vec<f64> = (0..50)
            .map(|i| a * (b / a).powf(i as f64 / 49.0))
            .map(f)
            .collect();
        vals.windows(2).all(|w| w[1] < w[0])
    };
    let j_below = slope_fd(family, omega_star * (1.0 - 1e-3))?;
    let j_above = slope_fd(family, omega_star * (1.0 + 1e-3))?;
    if !(j_below > 0.0 && j_above < 0.0) {
        return Err(Error::NoConvergence(format!(
            "slope sign change at ω* = {omega_star} not confirmed: J = {j_below:e}, {j_above:e}"
        )));
    }
    Ok(OmegaStar { omega_star, j_below, j_above, monotone, bracket: (a, b) })
}

/// Slope report with `ω*` attached when the family has one.
pub fn slope_report(family: &ProfileFamily, omega: f64) -> Result<SlopeReport> {
    let mut r = slope_j(family, omega)?;
    if family.p > 5.0 && family.uniform_tail().is_some() {
        r.omega_star = find_omega_star(family).ok().map(|s| s.omega_star);
    }
    Ok(r)
}
