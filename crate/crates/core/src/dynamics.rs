//! Time evolution of the NLS flows and orbital-distance tracking.
//!
//! Each step is Strang splitting: half a step of the exact nonlinear phase
//! rotation, a full Crank–Nicolson step of the linear flow `i u_t = H u`,
//! another nonlinear half step. `H` is the potential-free operator of
//! [`Discretization`], so the point interaction enters through the same
//! vertex term as the linearized operators. With lumped mass `M` and
//! stiffness `A` the linear step solves
//!
//! ```text
//! (M + i dt/2 A) u⁺ = (M - i dt/2 A) u
//! ```
//!
//! which conserves `u* M u` exactly; the matrix is factored once.

use crate::banded::{Ldlt, SymBand};
use crate::domain::{h1_inner_complex, h1_norm_sq, DiscreteDomain, Field};
use crate::error::{Error, Result};
use crate::operators::{Discretization, DofLayout, Subspace};
use crate::profiles::{InteractionModel, ModelKind, ProfileSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Initial perturbation of the profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Perturbation {
    /// `(1 + ε) Φ`.
    RelativeAmplitude { eps: f64 },
    /// Edges `1..⌈N/2⌉` scaled by `1 + ε`, the others by `1 - ε`.
    EdgeAsymmetric { eps: f64 },
    /// `Φ + δ` with `δ` given per edge on the run's domain.
    Custom { delta: Vec<Vec<Complex64>> },
}

impl Perturbation {
    pub fn none() -> Self {
        Perturbation::RelativeAmplitude { eps: 0.0 }
    }

    /// Size parameter `ε` (0 for custom data).
    pub fn eps(&self) -> f64 {
        match self {
            Perturbation::RelativeAmplitude { eps } | Perturbation::EdgeAsymmetric { eps } => *eps,
            Perturbation::Custom { .. } => 0.0,
        }
    }

    pub fn apply(&self, phi: &Field) -> Result<Field> {
        match self {
            Perturbation::RelativeAmplitude { eps } => Ok(phi.scaled(Complex64::new(1.0 + eps, 0.0))),
            Perturbation::EdgeAsymmetric { eps } => {
                let up = phi.domain().n_edges.div_ceil(2);
                Ok(phi.map(|j, _, z| z * if j < up { 1.0 + eps } else { 1.0 - eps }))
            }
            Perturbation::Custom { delta } => {
                let d = Field::from_values(phi.domain(), delta.clone())?;
                phi.add_scaled(Complex64::new(1.0, 0.0), &d)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    StrangCn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub perturbation: Perturbation,
    /// Diagnostics are recorded every this many steps (and at the end).
    pub record_every: usize,
    /// Full fields are kept every this many steps when set.
    #[serde(default)]
    pub snapshot_every: Option<usize>,
    /// Stops at the first record whose orbital distance exceeds this.
    #[serde(default)]
    pub stop_distance: Option<f64>,
}

impl EvolutionConfig {
    pub fn new(dt: f64, t_final: f64, perturbation: Perturbation) -> Self {
        EvolutionConfig {
            dt,
            t_final,
            scheme: Scheme::StrangCn,
            perturbation,
            record_every: 100,
            snapshot_every: None,
            stop_distance: None,
        }
    }

    pub fn validate(&self, dom: &DiscreteDomain) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if self.dt > 0.1 * dom.h * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "dt = {} exceeds 0.1·h = {}",
                self.dt,
                0.1 * dom.h
            )));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_final = {} must be non-negative", self.t_final)));
        }
        let eps = self.perturbation.eps();
        if !(eps.abs() <= 0.1) {
            return Err(Error::InvalidParameter(format!("perturbation size ε = {eps} exceeds 0.1")));
        }
        if self.record_every == 0 || self.snapshot_every == Some(0) {
            return Err(Error::InvalidParameter("record intervals must be positive".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    /// `min_θ ‖u - e^{iθ}Φ‖_{H¹}`.
    pub orbital_distance: Vec<f64>,
    /// `‖e^{-iωt} u - Φ‖_{H¹}`, the distance to the exact standing wave.
    pub phase_locked_distance: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub max_amplitude: Vec<f64>,
    /// Set when the outer node exceeded `1e-8` of the maximum amplitude.
    pub boundary_warning: bool,
    /// Time at which the amplitude exceeded `1e6`; the run stops there.
    pub blowup_time: Option<f64>,
    pub snapshots: Vec<(f64, Field)>,
}

impl EvolutionTrace {
    pub fn mass_drift(&self) -> f64 {
        relative_drift(&self.mass)
    }

    pub fn energy_drift(&self) -> f64 {
        relative_drift(&self.energy)
    }

    pub fn max_orbital_distance(&self) -> f64 {
        self.orbital_distance.iter().copied().fold(0.0, f64::max)
    }

    /// First recorded time with orbital distance above `threshold`.
    pub fn first_exceedance(&self, threshold: f64) -> Option<f64> {
        self.orbital_distance
            .iter()
            .position(|&d| d > threshold)
            .map(|i| self.times[i])
    }
}

fn relative_drift(v: &[f64]) -> f64 {
    let Some(&v0) = v.first() else { return 0.0 };
    let scale = v0.abs().max(f64::MIN_POSITIVE);
    v.iter().map(|x| (x - v0).abs() / scale).fold(0.0, f64::max)
}

/// `min_θ ‖u - e^{iθ}Φ‖_{H¹}` against a sampled profile.
pub fn orbital_distance_to(u: &Field, phi: &Field) -> Result<f64> {
    let c = h1_inner_complex(u, phi)?;
    let rot = if c.norm() > 0.0 { c / c.norm() } else { Complex64::new(1.0, 0.0) };
    Ok(h1_norm_sq(&u.add_scaled(-rot, phi)?).sqrt())
}

pub fn orbital_distance(u: &Field, spec: &ProfileSpec) -> Result<f64> {
    let phi = spec.sample(u.domain())?;
    orbital_distance_to(u, &phi)
}

/// Value of the interaction quadratic term at the vertex.
fn vertex_energy(u: &Field, model: &InteractionModel) -> f64 {
    let s = model.strength;
    let at = |j: usize| u.edge(j)[0];
    match model.kind {
        ModelKind::LineDeltaAttractive | ModelKind::LineDeltaRepulsive => -s * at(0).norm_sqr(),
        ModelKind::GraphDelta => s * at(0).norm_sqr(),
        ModelKind::LineDeltaPrime => -(at(1) - at(0)).norm_sqr() / s,
        ModelKind::GraphDeltaPrime => (0..model.n_edges).map(at).sum::<Complex64>().norm_sqr() / s,
    }
}

fn nonlinear_sign(model: &InteractionModel) -> f64 {
    if model.kind.is_repulsive() {
        1.0
    } else {
        -1.0
    }
}

/// Mass `‖u‖²` and energy `½(‖u′‖² + vertex term) ∓ ‖u‖_{p+1}^{p+1}/(p+1)`,
/// minus sign for attractive nonlinearities.
pub fn conserved_quantities(u: &Field, model: &InteractionModel, p: f64) -> (f64, f64) {
    let kinetic = u.gradient_sq() + vertex_energy(u, model);
    let potential = u.lp_pow(p + 1.0) / (p + 1.0);
    (u.mass(), 0.5 * kinetic + nonlinear_sign(model) * potential)
}

/// Precomputed Crank–Nicolson propagator.
struct Propagator {
    layout: DofLayout,
    dom: DiscreteDomain,
    lhs: SymBand<Complex64>,
    rhs: SymBand<Complex64>,
    factor: Ldlt<Complex64>,
}

impl Propagator {
    fn new(model: &InteractionModel, dom: &DiscreteDomain, dt: f64) -> Result<Self> {
        let disc = Discretization::new(model, dom, Subspace::Full)?;
        let n = disc.layout.len();
        let kd = disc.stiffness.bandwidth();
        let s = 0.5 * dt;
        let mut lhs = SymBand::zeros(n, kd);
        let mut rhs = SymBand::zeros(n, kd);
        for i in 0..n {
            for j in i.saturating_sub(kd)..=i {
                let a = disc.stiffness.get(i, j);
                let m = if i == j { disc.mass[i] } else { 0.0 };
                lhs.set(i, j, Complex64::new(m, s * a));
                rhs.set(i, j, Complex64::new(m, -s * a));
            }
        }
        let scale = lhs.inf_norm();
        let factor = lhs
            .ldlt(1e-14 * scale)
            .map_err(|(row, piv)| Error::FactorizationBreakdown { shift: 0.0, pivot: piv.norm(), row })?;
        Ok(Propagator { layout: disc.layout, dom: *dom, lhs, rhs, factor })
    }

    fn step(&self, x: &mut Vec<Complex64>, check: bool) -> Result<()> {
        let b = self.rhs.matvec(x);
        let y = self.factor.solve(&b);
        if check {
            let r = self.lhs.matvec(&y);
            let num: f64 = r.iter().zip(&b).map(|(a, c)| (a - c).norm_sqr()).sum::<f64>().sqrt();
            let den: f64 = b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            if num / den > 1e-10 {
                return Err(Error::SolverBreakdown(num / den));
            }
        }
        *x = y;
        Ok(())
    }

    /// Multiplies every unknown by `exp(i c |u|^{p-1})`.
    fn rotate(x: &mut [Complex64], c: f64, p: f64) {
        let e = 0.5 * (p - 1.0);
        for z in x.iter_mut() {
            let a2 = z.norm_sqr();
            if a2 > 0.0 {
                let g = if e == 1.0 { a2 } else { a2.powf(e) };
                *z *= Complex64::from_polar(1.0, c * g);
            }
        }
    }

    fn field(&self, x: &[Complex64]) -> Field {
        self.layout.expand(&self.dom, x)
    }

    fn unknowns(&self, f: &Field) -> Vec<Complex64> {
        self.layout.restrict(f, |z| z)
    }
}

/// Evolves `Φ + perturbation` to `t_final`, recording diagnostics.
pub fn evolve(spec: &ProfileSpec, dom: &DiscreteDomain, cfg: &EvolutionConfig) -> Result<EvolutionTrace> {
    cfg.validate(dom)?;
    spec.check_domain(dom)?;
    let phi = spec.sample(dom)?;
    let u0 = cfg.perturbation.apply(&phi)?;
    evolve_field(spec, &phi, u0, cfg)
}

/// Evolves an arbitrary initial field, measuring distances against `phi`.
pub fn evolve_field(spec: &ProfileSpec, phi: &Field, u0: Field, cfg: &EvolutionConfig) -> Result<EvolutionTrace> {
    let dom = *phi.domain();
    cfg.validate(&dom)?;
    if u0.domain() != &dom {
        return Err(Error::DomainMismatch);
    }
    let model = spec.model;
    let prop = Propagator::new(&model, &dom, cfg.dt)?;
    // The nonlinear flow is i u_t = ∓|u|^{p-1} u.
    let c_half = -nonlinear_sign(&model) * 0.5 * cfg.dt;
    let p = spec.p;

    let mut x = prop.unknowns(&u0);
    let mut trace = EvolutionTrace::default();
    let n_steps = cfg.n_steps();
    let record = |trace: &mut EvolutionTrace, x: &[Complex64], t: f64| -> Result<bool> {
        let u = prop.field(x);
        let (m, e) = conserved_quantities(&u, &model, p);
        let amp = u.max_abs();
        trace.times.push(t);
        trace.orbital_distance.push(orbital_distance_to(&u, phi)?);
        let back = u.scaled(Complex64::from_polar(1.0, -spec.omega * t));
        trace.phase_locked_distance.push(h1_norm_sq(&back.add_scaled(Complex64::new(-1.0, 0.0), phi)?).sqrt());
        trace.mass.push(m);
        trace.energy.push(e);
        trace.max_amplitude.push(amp);
        let outer = u.edges().iter().map(|e| e.last().map_or(0.0, |z| z.norm())).fold(0.0, f64::max);
        if outer > 1e-8 * amp {
            trace.boundary_warning = true;
        }
        if !(amp <= 1e6) {
            trace.blowup_time = Some(t);
            return Ok(false);
        }
        Ok(true)
    };

    record(&mut trace, &x, 0.0)?;
    if cfg.snapshot_every.is_some() {
        trace.snapshots.push((0.0, prop.field(&x)));
    }
    // Rotations commute exactly (|u| is invariant), so the closing half
    // step of one step and the opening half of the next are fused unless
    // the state is observed in between.
    let mut pending = 0.0;
    for n in 1..=n_steps {
        let check = n == 1 || n % cfg.record_every == 0;
        Propagator::rotate(&mut x, pending + c_half, p);
        prop.step(&mut x, check)?;
        pending = c_half;
        let t = n as f64 * cfg.dt;
        let snap = cfg.snapshot_every.is_some_and(|s| n % s == 0);
        let rec = n % cfg.record_every == 0 || n == n_steps;
        if snap || rec {
            Propagator::rotate(&mut x, pending, p);
            pending = 0.0;
        }
        if rec {
            if !record(&mut trace, &x, t)? {
                break;
            }
            if cfg.stop_distance.is_some_and(|d| trace.orbital_distance.last().is_some_and(|&o| o > d)) {
                break;
            }
        }
        if snap {
            trace.snapshots.push((t, prop.field(&x)));
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{make_profile, Variant};
    use crate::quadrature::integrate_to_infinity;
    use approx::assert_relative_eq;

    fn line_spec() -> ProfileSpec {
        make_profile(InteractionModel::line_delta(1.0), 1.0, 3.0, Variant::Even).unwrap()
    }

    #[test]
    fn distance_examples() {
        let spec = line_spec();
        let dom = spec.domain(0.02, None).unwrap();
        let phi = spec.sample(&dom).unwrap();
        let rotated = phi.scaled(Complex64::from_polar(1.0, 0.7));
        assert!(orbital_distance(&rotated, &spec).unwrap() < 1e-12);
        let scaled = phi.scaled(Complex64::new(1.001, 0.0));
        let expect = 0.001 * h1_norm_sq(&phi).sqrt();
        assert!((orbital_distance(&scaled, &spec).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn distance_of_orthogonal_perturbation() {
        let spec = line_spec();
        let dom = spec.domain(0.02, None).unwrap();
        let phi = spec.sample(&dom).unwrap();
        // A real odd bump is H¹-orthogonal to the even Φ and to iΦ.
        let bump = Field::from_real_fn(&dom, |j, x| {
            let s = if j == 0 { -1.0 } else { 1.0 };
            1e-3 * s * x * (-(x - 2.0).powi(2)).exp()
        });
        let u = phi.add_scaled(Complex64::new(1.0, 0.0), &bump).unwrap();
        let d = orbital_distance(&u, &spec).unwrap();
        assert!((d - h1_norm_sq(&bump).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn zero_field_has_no_mass_or_energy() {
        let spec = line_spec();
        let dom = spec.domain(0.05, None).unwrap();
        assert_eq!(conserved_quantities(&Field::zeros(&dom), &spec.model, 3.0), (0.0, 0.0));
    }

    #[test]
    fn prime_energy_is_even_under_global_sign_flip() {
        let spec = make_profile(InteractionModel::line_delta_prime(2.0), 3.0, 3.0, Variant::Asymmetric).unwrap();
        let dom = spec.domain(0.01, None).unwrap();
        let phi = spec.sample(&dom).unwrap();
        let flipped = phi.scaled(Complex64::new(-1.0, 0.0));
        let a = conserved_quantities(&phi, &spec.model, 3.0);
        let b = conserved_quantities(&flipped, &spec.model, 3.0);
        assert_eq!(a, b);
    }

    #[test]
    fn graph_prime_energy_matches_quadrature() {
        let (lambda, n, omega, p) = (-3.0, 3usize, 4.0, 3.0);
        let spec = make_profile(InteractionModel::graph_delta_prime(n, lambda), omega, p, Variant::Tail).unwrap();
        let dom = spec.domain(4e-4, None).unwrap();
        let (_, e) = conserved_quantities(&spec.sample(&dom).unwrap(), &spec.model, p);

        // Independent oracle: the explicit tail φ(x) = sqrt(2ω) sech(√ω x + a),
        // tanh a = N/(|λ|√ω), integrated by adaptive quadrature.
        let a = (n as f64 / (lambda.abs() * omega.sqrt())).atanh();
        let s = omega.sqrt();
        let f = |x: f64| (2.0 * omega).sqrt() / (s * x + a).cosh();
        let df = |x: f64| -(2.0 * omega).sqrt() * s * (s * x + a).tanh() / (s * x + a).cosh();
        let grad = integrate_to_infinity(|x| df(x).powi(2), 0.0, 1e-15, 1e-14).value;
        let quart = integrate_to_infinity(|x| f(x).powi(4), 0.0, 1e-15, 1e-14).value;
        let nf = n as f64;
        let vertex = (nf * f(0.0)).powi(2) / lambda;
        let expect = 0.5 * (nf * grad + vertex) - nf * quart / (p + 1.0);
        assert_relative_eq!(e, expect, max_relative = 1e-6);
    }

    #[test]
    fn gauge_covariance() {
        let spec = make_profile(InteractionModel::graph_delta(3, -1.0), 2.0, 3.0, Variant::Tail).unwrap();
        let dom = spec.domain(0.05, Some(12.0)).unwrap();
        let phi = spec.sample(&dom).unwrap();
        let cfg = EvolutionConfig { record_every: 50, snapshot_every: Some(200), ..EvolutionConfig::new(5e-3, 1.0, Perturbation::EdgeAsymmetric { eps: 0.05 }) };
        let u0 = cfg.perturbation.apply(&phi).unwrap();
        let g = Complex64::from_polar(1.0, 1.3);
        let a = evolve_field(&spec, &phi, u0.clone(), &cfg).unwrap();
        let b = evolve_field(&spec, &phi, u0.scaled(g), &cfg).unwrap();
        let (ua, ub) = (&a.snapshots.last().unwrap().1, &b.snapshots.last().unwrap().1);
        let diff = ub.add_scaled(-g, ua).unwrap();
        assert!(diff.max_abs() < 1e-12 * ua.max_abs());
        assert_eq!(a.orbital_distance.len(), a.times.len());
    }

    #[test]
    fn short_run_conserves_mass() {
        let spec = make_profile(InteractionModel::line_delta_prime(2.0), 3.0, 3.0, Variant::Odd).unwrap();
        let dom = spec.domain(0.02, None).unwrap();
        let cfg = EvolutionConfig::new(2e-3, 2.0, Perturbation::RelativeAmplitude { eps: 1e-2 });
        let tr = evolve(&spec, &dom, &cfg).unwrap();
        assert!(tr.mass_drift() < 1e-12, "{}", tr.mass_drift());
        assert!(tr.energy_drift() < 1e-4, "{}", tr.energy_drift());
    }

    #[test]
    fn config_guards() {
        let spec = line_spec();
        let dom = spec.domain(0.01, None).unwrap();
        let bad = EvolutionConfig::new(2e-3, 1.0, Perturbation::none());
        assert!(matches!(evolve(&spec, &dom, &bad), Err(Error::InvalidParameter(_))));
        let bad = EvolutionConfig::new(1e-3, 1.0, Perturbation::RelativeAmplitude { eps: 0.2 });
        assert!(bad.validate(&dom).is_err());
    }
}
