//! Discrete linearized operators `L1`, `L2` and their spectral data.
//!
//! The scheme is mass-lumped P1 finite elements: the quadratic form
//!
//! ```text
//! Q(u) = Σ_edges Σ_k (u_{k+1} - u_k)² / h  +  vertex term  +  Σ w_k V(x_k) u_k²
//! ```
//!
//! with trapezoid weights `w_k`, together with the lumped mass `M = diag(w_k)`.
//! The vertex term realizes each point interaction through its quadratic
//! form, so the vertex conditions come out as natural boundary conditions:
//!
//! | model       | vertex unknowns           | vertex term                        |
//! |-------------|---------------------------|------------------------------------|
//! | line δ      | one shared node           | `-γ u(0)²`                         |
//! | graph δ     | one shared node           | `α u(0)²`                          |
//! | line δ′     | `u(0-)`, `u(0+)`          | `-(1/β) (u(0+) - u(0-))²`          |
//! | graph δ′    | `u_1(0), …, u_N(0)`       | `(1/λ) (Σ u_j(0))²`                |
//!
//! Unknowns are interleaved across edges (node-major), so the matrix is
//! banded with half-bandwidth equal to the number of independent edge
//! groups. Sector restrictions identify edges up to sign before assembly.

use crate::banded::SymBand;
use crate::domain::{DiscreteDomain, Field};
use crate::error::{Error, Result};
use crate::profiles::{InteractionModel, ModelKind, ProfileSpec};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Which {
    L1,
    L2,
}

impl std::str::FromStr for Which {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "L1" | "l1" => Ok(Which::L1),
            "L2" | "l2" => Ok(Which::L2),
            _ => Err(Error::InvalidParameter(format!("unknown operator '{s}' (L1 or L2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    Full,
    /// `u(-x) = u(x)` on the line.
    EvenSector,
    /// `u(-x) = -u(x)` on the line.
    OddSector,
    /// Edges `1..N/2` equal and edges `N/2+1..N` equal (even `N`).
    EdgewiseEven,
}

impl std::fmt::Display for Subspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Subspace::Full => "full",
            Subspace::EvenSector => "even_sector",
            Subspace::OddSector => "odd_sector",
            Subspace::EdgewiseEven => "edgewise_even",
        };
        f.write_str(s)
    }
}

/// Map between edge nodes and matrix unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct DofLayout {
    pub n_edges: usize,
    pub nodes: usize,
    /// Independent edge group of each edge and the sign relating them.
    pub group: Vec<usize>,
    pub sign: Vec<f64>,
    pub n_groups: usize,
    /// Whether all edges share one vertex unknown.
    pub shared_vertex: bool,
    /// Shared vertex kept as an unknown (false when the sector forces 0).
    pub vertex_kept: bool,
}

impl DofLayout {
    fn new(model: &InteractionModel, dom: &DiscreteDomain, subspace: Subspace) -> Result<Self> {
        let n = model.n_edges;
        let incompatible = || Error::IncompatibleSubspace {
            subspace: subspace.to_string(),
            model: format!("{} (N = {n})", model.kind.name()),
        };
        let (group, sign): (Vec<usize>, Vec<f64>) = match subspace {
            Subspace::Full => ((0..n).collect(), vec![1.0; n]),
            Subspace::EvenSector | Subspace::OddSector => {
                if !model.kind.is_line() {
                    return Err(incompatible());
                }
                let s0 = if subspace == Subspace::EvenSector { 1.0 } else { -1.0 };
                (vec![0, 0], vec![s0, 1.0])
            }
            Subspace::EdgewiseEven => {
                if model.kind != ModelKind::GraphDeltaPrime || n % 2 != 0 {
                    return Err(incompatible());
                }
                ((0..n).map(|j| usize::from(j >= n / 2)).collect(), vec![1.0; n])
            }
        };
        let n_groups = group.iter().max().map_or(0, |g| g + 1);
        let shared_vertex = matches!(
            model.kind,
            ModelKind::LineDeltaAttractive | ModelKind::LineDeltaRepulsive | ModelKind::GraphDelta
        );
        let vertex_kept = shared_vertex && sign.iter().all(|&s| s == sign[0]);
        Ok(DofLayout {
            n_edges: n,
            nodes: dom.nodes_per_edge(),
            group,
            sign,
            n_groups,
            shared_vertex,
            vertex_kept,
        })
    }

    fn k0(&self) -> usize {
        usize::from(self.shared_vertex)
    }

    pub fn len(&self) -> usize {
        usize::from(self.vertex_kept) + (self.nodes - self.k0()) * self.n_groups
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.n_groups
    }

    /// Unknown and coefficient representing node `k` of `edge`, or `None`
    /// when the node is pinned to zero.
    pub fn dof(&self, edge: usize, k: usize) -> Option<(usize, f64)> {
        if k >= self.nodes {
            return None;
        }
        let s = self.sign[edge];
        if self.shared_vertex && k == 0 {
            return self.vertex_kept.then_some((0, s));
        }
        let off = usize::from(self.vertex_kept);
        Some((off + (k - self.k0()) * self.n_groups + self.group[edge], s))
    }

    /// Projects a field onto the unknowns, averaging over identified nodes.
    pub fn restrict<T>(&self, f: &Field, pick: impl Fn(Complex64) -> T) -> Vec<T>
    where
        T: Copy + Default + std::ops::AddAssign + std::ops::Mul<f64, Output = T>,
    {
        let mut out = vec![T::default(); self.len()];
        let mut count = vec![0.0; self.len()];
        for j in 0..self.n_edges {
            for (k, &z) in f.edge(j).iter().enumerate() {
                if let Some((i, c)) = self.dof(j, k) {
                    out[i] += pick(z) * c;
                    count[i] += 1.0;
                }
            }
        }
        for (o, c) in out.iter_mut().zip(&count) {
            if *c > 0.0 {
                *o = *o * (1.0 / c);
            }
        }
        out
    }

    /// Expands unknowns to a field on `dom`.
    pub fn expand(&self, dom: &DiscreteDomain, x: &[Complex64]) -> Field {
        Field::from_fn(dom, |j, xv| {
            let k = (xv / dom.h).round() as usize;
            self.dof(j, k).map_or(Complex64::new(0.0, 0.0), |(i, c)| x[i] * c)
        })
    }
}

/// Coefficient and per-edge signs of the vertex quadratic term.
fn vertex_term(model: &InteractionModel) -> (f64, Vec<f64>) {
    let n = model.n_edges;
    let s = model.strength;
    match model.kind {
        ModelKind::LineDeltaAttractive | ModelKind::LineDeltaRepulsive => (-s, vec![1.0; n]),
        ModelKind::GraphDelta => (s, vec![1.0; n]),
        ModelKind::LineDeltaPrime => (-1.0 / s, vec![-1.0, 1.0]),
        ModelKind::GraphDeltaPrime => (1.0 / s, vec![1.0; n]),
    }
}

/// Potential-free stiffness (kinetic part plus vertex term) and lumped mass.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub layout: DofLayout,
    pub dom: DiscreteDomain,
    pub stiffness: SymBand<f64>,
    pub mass: Vec<f64>,
}

impl Discretization {
    pub fn new(model: &InteractionModel, dom: &DiscreteDomain, subspace: Subspace) -> Result<Self> {
        model.validate()?;
        if dom.n_edges != model.n_edges {
            return Err(Error::DomainMismatch);
        }
        let layout = DofLayout::new(model, dom, subspace)?;
        let n = layout.len();
        let mut a = SymBand::zeros(n, layout.bandwidth());
        let mut mass = vec![0.0; n];
        let inv_h = 1.0 / dom.h;
        for j in 0..layout.n_edges {
            for k in 0..layout.nodes {
                let here = layout.dof(j, k);
                if let Some((i, c)) = here {
                    mass[i] += c * c * dom.weight(k);
                }
                let next = layout.dof(j, k + 1);
                add_outer(&mut a, &[(here, -1.0), (next, 1.0)], inv_h);
            }
        }
        let (coef, vsign) = vertex_term(model);
        let terms: Vec<_> = if layout.shared_vertex {
            vec![(layout.dof(0, 0), 1.0)]
        } else {
            (0..layout.n_edges).map(|j| (layout.dof(j, 0), vsign[j])).collect()
        };
        add_outer(&mut a, &terms, coef);
        Ok(Discretization { layout, dom: *dom, stiffness: a, mass })
    }
}

/// Adds `coef · (Σ c_i u_i)²` to the quadratic form, merging repeated
/// unknowns first.
fn add_outer(a: &mut SymBand<f64>, terms: &[(Option<(usize, f64)>, f64)], coef: f64) {
    let mut v: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
    for &(d, s) in terms {
        if let Some((i, c)) = d {
            match v.iter_mut().find(|e| e.0 == i) {
                Some(e) => e.1 += c * s,
                None => v.push((i, c * s)),
            }
        }
    }
    for (x, &(i, ci)) in v.iter().enumerate() {
        for &(j, cj) in &v[..=x] {
            let val = coef * ci * cj;
            if i == j {
                a.add(i, i, val);
            } else {
                a.add(i, j, val);
            }
        }
    }
}

/// Assembled `L1` or `L2` with its lumped mass.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    pub which: Which,
    pub model: InteractionModel,
    pub spec: ProfileSpec,
    pub dom: DiscreteDomain,
    pub subspace: Subspace,
    pub layout: DofLayout,
    /// Stiffness plus potential (`A`); eigenproblem is `A v = λ M v`.
    pub matrix: SymBand<f64>,
    pub mass: Vec<f64>,
}

/// Kernel detection threshold for mesh width `h` at frequency `omega`.
pub fn tol_zero(h: f64, omega: f64) -> f64 {
    (50.0 * h * h * (1.0 + omega)).max(1e-8)
}

pub fn assemble(which: Which, spec: &ProfileSpec, dom: &DiscreteDomain, subspace: Subspace) -> Result<LinearizedOperator> {
    if spec.omega <= 0.0 {
        return Err(Error::Unsupported(
            "spectral analysis needs ω > 0 (the ω = 0 profile is evaluation-only)".into(),
        ));
    }
    spec.check_domain(dom)?;
    dom.check_length(spec.omega)?;
    let disc = Discretization::new(&spec.model, dom, subspace)?;
    let layout = disc.layout.clone();
    // Grouped edges must carry the same potential for the sector to be invariant.
    for j in 0..layout.n_edges {
        for i in 0..j {
            if layout.group[i] == layout.group[j] {
                let same = [0.0, 0.5, 1.0, 3.0].iter().all(|&x| {
                    let (a, b) = (spec.eval(i, x / spec.kappa(), 0).abs(), spec.eval(j, x / spec.kappa(), 0).abs());
                    (a - b).abs() <= 1e-12 * a.max(b).max(1e-300)
                });
                if !same {
                    return Err(Error::IncompatibleSubspace {
                        subspace: subspace.to_string(),
                        model: format!("{} {} profile", spec.model.kind.name(), spec.variant),
                    });
                }
            }
        }
    }
    let coef = match which {
        Which::L1 => spec.p,
        Which::L2 => 1.0,
    };
    let sg = spec.nonlinear_sign();
    let mut a = disc.stiffness;
    // A shared vertex unknown collects the potential from every edge.
    let mut diag = vec![0.0; layout.len()];
    for j in 0..layout.n_edges {
        for k in 0..layout.nodes {
            if let Some((i, c)) = layout.dof(j, k) {
                let phi = spec.eval(j, dom.x(k), 0).abs();
                let v = spec.omega + sg * coef * phi.powf(spec.p - 1.0);
                diag[i] += c * c * dom.weight(k) * v;
            }
        }
    }
    for (i, d) in diag.into_iter().enumerate() {
        a.add(i, i, d);
    }
    Ok(LinearizedOperator {
        which,
        model: spec.model,
        spec: spec.clone(),
        dom: *dom,
        subspace,
        layout,
        matrix: a,
        mass: disc.mass,
    })
}

impl LinearizedOperator {
    pub fn tol_zero(&self) -> f64 {
        tol_zero(self.dom.h, self.spec.omega)
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    /// `B = M^{-1/2} A M^{-1/2}`, congruent to `A` and similar to `M⁻¹A`.
    pub fn scaled(&self) -> SymBand<f64> {
        let r: Vec<f64> = self.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        self.matrix.map_entries(|i, j, v| v * r[i] * r[j])
    }

    /// `⟨A u, u⟩` for a real field given on all edges.
    pub fn quadratic_form(&self, u: &Field) -> Result<f64> {
        if u.domain() != &self.dom {
            return Err(Error::DomainMismatch);
        }
        let x = self.layout.restrict(u, |z| z.re);
        let ax = self.matrix.matvec(&x);
        Ok(x.iter().zip(&ax).map(|(a, b)| a * b).sum())
    }

    /// Field from unknowns scaled back by `M^{-1/2}`.
    fn field_from_scaled(&self, w: &[f64]) -> Field {
        let v: Vec<Complex64> = w
            .iter()
            .zip(&self.mass)
            .map(|(x, m)| Complex64::new(x / m.sqrt(), 0.0))
            .collect();
        self.layout.expand(&self.dom, &v)
    }
}

/// Number of negative eigenvalues of `A - shift·M`, retrying with slightly
/// perturbed shifts if a pivot vanishes.
fn count_below(a: &SymBand<f64>, mass: &[f64], shift: f64) -> Result<usize> {
    let scale = a.inf_norm().max(1.0);
    let mut s = shift;
    let mut last = (0, 0.0);
    for attempt in 0..4 {
        let m = a.map_entries(|i, j, v| if i == j { v - s * mass[i] } else { v });
        match m.ldlt(1e-14 * scale * f64::EPSILON) {
            Ok(f) => return Ok(f.negative_count()),
            Err((row, piv)) => {
                last = (row, piv);
                s = shift + (attempt + 1) as f64 * 1e-10 * (1.0 + shift.abs());
            }
        }
    }
    Err(Error::FactorizationBreakdown { shift, pivot: last.1, row: last.0 })
}

/// Eigenvalues below `-tol_zero`.
pub fn inertia_negative(op: &LinearizedOperator) -> Result<usize> {
    count_below(&op.matrix, &op.mass, -op.tol_zero())
}

/// Eigenvalues within `tol_zero` of zero.
pub fn kernel_dim(op: &LinearizedOperator) -> Result<usize> {
    let t = op.tol_zero();
    Ok(count_below(&op.matrix, &op.mass, t)? - count_below(&op.matrix, &op.mass, -t)?)
}

/// The `k` smallest eigenpairs (`k ≤ 8`), eigenfields normalized in the
/// lumped `L²` norm with their largest entry positive.
pub fn low_eigenpairs(op: &LinearizedOperator, k: usize) -> Result<Vec<(f64, Field)>> {
    if k > 8 {
        return Err(Error::InvalidParameter(format!("at most 8 eigenpairs, asked for {k}")));
    }
    let k = k.min(op.dim());
    let b = op.scaled();
    let unit = vec![1.0; op.dim()];
    let bound = b.inf_norm();
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k);
    for idx in 0..k {
        // Sturm bisection for the idx-th eigenvalue.
        let (mut lo, mut hi) = (-bound - 1.0, bound + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 4.0 * f64::EPSILON * bound.max(1.0) || mid <= lo || mid >= hi {
                break;
            }
            if count_below(&b, &unit, mid)? > idx {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let lam0 = 0.5 * (lo + hi);
        let w = inverse_iteration(&b, lam0, &pairs, idx as u64)?;
        pairs.push(w);
    }
    Ok(pairs
        .into_iter()
        .map(|(lam, w)| {
            let f = op.field_from_scaled(&w);
            (lam, f)
        })
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

fn inverse_iteration(b: &SymBand<f64>, lam0: f64, found: &[(f64, Vec<f64>)], seed: u64) -> Result<(f64, Vec<f64>)> {
    let n = b.dim();
    let scale = b.inf_norm().max(1.0);
    let cluster = 1e-6 * scale.sqrt().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + seed);
    let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let near: Vec<&Vec<f64>> = found.iter().filter(|(l, _)| (l - lam0).abs() <= cluster).map(|(_, v)| v).collect();
    let orth = |w: &mut Vec<f64>| {
        for v in &near {
            let c = dot(w, v);
            w.iter_mut().zip(v.iter()).for_each(|(x, y)| *x -= c * y);
        }
    };
    let mut shift = lam0 + 1e-9 * (1.0 + lam0.abs());
    let fac = loop {
        match b.shifted(-shift).ldlt(f64::EPSILON * 1e-6 * scale) {
            Ok(f) => break f,
            Err(_) => shift += 1e-8 * (1.0 + lam0.abs()),
        }
    };
    orth(&mut w);
    normalize(&mut w);
    let mut lam = lam0;
    let mut res = f64::INFINITY;
    for _ in 0..60 {
        let mut x = fac.solve(&w);
        orth(&mut x);
        orth(&mut x);
        normalize(&mut x);
        let bx = b.matvec(&x);
        lam = dot(&x, &bx);
        res = bx.iter().zip(&x).map(|(p, q)| (p - lam * q).powi(2)).sum::<f64>().sqrt();
        w = x;
        if res <= 1e-10 {
            break;
        }
    }
    if res > 1e-8 {
        return Err(Error::NoConvergence(format!("eigenvalue near {lam0}: residual {res:e}")));
    }
    let imax = w
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map_or(0, |(i, _)| i);
    if w[imax] < 0.0 {
        w.iter_mut().for_each(|x| *x = -*x);
    }
    Ok((lam, w))
}

#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub which: Which,
    pub subspace: Subspace,
    pub n_negative: usize,
    pub kernel_dim: usize,
    pub lowest_eigs: Vec<(f64, Field)>,
    pub tol_zero: f64,
    pub ess_spectrum_floor: f64,
    pub h: f64,
    pub x_max: f64,
    /// The operator's profile, to tie reports to one standing wave.
    pub spec: ProfileSpec,
}

impl SpectralReport {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.lowest_eigs.iter().map(|(l, _)| *l).collect()
    }
}

/// Counts plus the `k` lowest eigenpairs.
pub fn spectral_report(op: &LinearizedOperator, k: usize) -> Result<SpectralReport> {
    Ok(SpectralReport {
        which: op.which,
        subspace: op.subspace,
        n_negative: inertia_negative(op)?,
        kernel_dim: kernel_dim(op)?,
        lowest_eigs: low_eigenpairs(op, k)?,
        tol_zero: op.tol_zero(),
        ess_spectrum_floor: op.spec.omega,
        h: op.dom.h,
        x_max: op.dom.x_max,
        spec: op.spec.clone(),
    })
}

/// Sign changes of a real field per edge and in total.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroCount {
    pub per_edge: Vec<usize>,
    /// On the line: sign changes along `(-X, X)`, the origin included.
    /// On a star: the sum over edges.
    pub total: usize,
}

fn sign_changes<'a>(values: impl Iterator<Item = &'a f64>, floor: f64) -> usize {
    let mut last = 0.0f64;
    let mut n = 0;
    for &v in values {
        if v.abs() <= floor {
            continue;
        }
        if last != 0.0 && v.signum() != last {
            n += 1;
        }
        last = v.signum();
    }
    n
}

/// Counts sign changes of the real part, ignoring entries with modulus at
/// most `1e-12 · max|v|` (a change across such a node counts once).
pub fn count_zeros(v: &Field) -> ZeroCount {
    let floor = 1e-12 * v.max_abs();
    let re: Vec<Vec<f64>> = v.edges().iter().map(|e| e.iter().map(|z| z.re).collect()).collect();
    let per_edge: Vec<usize> = re.iter().map(|e| sign_changes(e.iter(), floor)).collect();
    let total = if v.domain().kind == crate::domain::DomainKind::Line {
        sign_changes(re[0].iter().rev().chain(re[1].iter()), floor)
    } else {
        per_edge.iter().sum()
    };
    ZeroCount { per_edge, total }
}
