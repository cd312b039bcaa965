//! Uniformly meshed star geometry and discrete function spaces on it.
//!
//! Every domain is a star of half-lines `[0, X]` glued at a vertex. The real
//! line is the 2-edge star: edge 0 carries the negative half-axis reflected
//! (`value(edge 0, s) = u(-s)`), edge 1 the positive half-axis. Each edge
//! stores the nodes `x_k = k h`, `k = 0..=n_interior`, the vertex included;
//! the outer node `x = X` carries a homogeneous Dirichlet condition and is
//! not stored.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Line,
    Star,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDomain {
    pub kind: DomainKind,
    /// Number of half-lines; 2 for the line.
    pub n_edges: usize,
    /// Truncation length of each edge.
    pub x_max: f64,
    pub h: f64,
    /// Nodes strictly between the vertex and the outer boundary.
    pub n_interior: usize,
}

/// Default truncation length for a wave with frequency `omega` and power `p`:
/// thirty decay lengths of both the linear (`√ω`) and profile (`κ`) rates.
pub fn auto_length(omega: f64, p: f64) -> f64 {
    let s = omega.sqrt();
    let kappa = 0.5 * (p - 1.0) * s;
    (30.0 / s).max(30.0 / kappa)
}

impl DiscreteDomain {
    fn build(kind: DomainKind, n_edges: usize, h: f64, x_max: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("mesh width h = {h} must be positive")));
        }
        if !(x_max > h && x_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "truncation length X = {x_max} must exceed h = {h}"
            )));
        }
        if n_edges == 0 {
            return Err(Error::InvalidParameter("a star needs at least one edge".into()));
        }
        // Keep h exact and round X up to a whole number of cells.
        let cells = (x_max / h * (1.0 - 1e-13)).ceil() as usize;
        let cells = cells.max(2);
        Ok(DiscreteDomain {
            kind,
            n_edges,
            x_max: h * cells as f64,
            h,
            n_interior: cells - 1,
        })
    }

    pub fn line(h: f64, x_max: f64) -> Result<Self> {
        Self::build(DomainKind::Line, 2, h, x_max)
    }

    pub fn star(n_edges: usize, h: f64, x_max: f64) -> Result<Self> {
        Self::build(DomainKind::Star, n_edges, h, x_max)
    }

    /// Stored nodes per edge (vertex included, Dirichlet node excluded).
    pub fn nodes_per_edge(&self) -> usize {
        self.n_interior + 1
    }

    pub fn x(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    /// Trapezoid weight of node `k` on one edge.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// Rejects a domain too short for frequency `omega`.
    pub fn check_length(&self, omega: f64) -> Result<()> {
        let required = 20.0 / omega.sqrt();
        if self.x_max < required * (1.0 - 1e-12) {
            return Err(Error::DomainTooShort {
                x_max: self.x_max,
                required,
            });
        }
        Ok(())
    }
}

/// Complex field on a [`DiscreteDomain`], one array per edge ordered from
/// the vertex outward.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    domain: DiscreteDomain,
    values: Vec<Vec<Complex64>>,
}

impl Field {
    pub fn zeros(domain: &DiscreteDomain) -> Self {
        Field {
            domain: *domain,
            values: vec![vec![Complex64::new(0.0, 0.0); domain.nodes_per_edge()]; domain.n_edges],
        }
    }

    /// Samples `f(edge, x)` at every stored node.
    pub fn from_fn(domain: &DiscreteDomain, mut f: impl FnMut(usize, f64) -> Complex64) -> Self {
        let values = (0..domain.n_edges)
            .map(|j| (0..domain.nodes_per_edge()).map(|k| f(j, domain.x(k))).collect())
            .collect();
        Field {
            domain: *domain,
            values,
        }
    }

    pub fn from_real_fn(domain: &DiscreteDomain, mut f: impl FnMut(usize, f64) -> f64) -> Self {
        Self::from_fn(domain, |j, x| Complex64::new(f(j, x), 0.0))
    }

    /// Wraps explicit per-edge arrays after validating their shape and
    /// finiteness.
    pub fn from_values(domain: &DiscreteDomain, values: Vec<Vec<Complex64>>) -> Result<Self> {
        if values.len() != domain.n_edges
            || values.iter().any(|e| e.len() != domain.nodes_per_edge())
        {
            return Err(Error::DomainMismatch);
        }
        if values.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("field contains NaN or Inf".into()));
        }
        Ok(Field {
            domain: *domain,
            values,
        })
    }

    pub fn domain(&self) -> &DiscreteDomain {
        &self.domain
    }

    pub fn edges(&self) -> &[Vec<Complex64>] {
        &self.values
    }

    pub fn edge(&self, j: usize) -> &[Complex64] {
        &self.values[j]
    }

    pub fn edge_mut(&mut self, j: usize) -> &mut [Complex64] {
        &mut self.values[j]
    }

    pub fn into_values(self) -> Vec<Vec<Complex64>> {
        self.values
    }

    pub fn map(&self, mut f: impl FnMut(usize, usize, Complex64) -> Complex64) -> Field {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, e)| e.iter().enumerate().map(|(k, &z)| f(j, k, z)).collect())
            .collect();
        Field {
            domain: self.domain,
            values,
        }
    }

    pub fn scaled(&self, c: Complex64) -> Field {
        self.map(|_, _, z| c * z)
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: Complex64, other: &Field) -> Result<Field> {
        same_domain(self, other)?;
        Ok(self.map(|j, k, z| z + c * other.values[j][k]))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `Σ w |u|^q`, the trapezoid value of `‖u‖_q^q`.
    pub fn lp_pow(&self, q: f64) -> f64 {
        let d = &self.domain;
        self.values
            .iter()
            .flat_map(|e| e.iter().enumerate())
            .map(|(k, z)| d.weight(k) * z.norm().powf(q))
            .sum()
    }

    pub fn mass(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|e| e.iter().enumerate())
            .map(|(k, z)| self.domain.weight(k) * z.norm_sqr())
            .sum()
    }

    /// Forward differences on one edge, the Dirichlet node closing the last.
    fn diffs(&self, j: usize) -> impl Iterator<Item = Complex64> + '_ {
        let e = &self.values[j];
        let h = self.domain.h;
        (0..e.len()).map(move |k| {
            let next = e.get(k + 1).copied().unwrap_or_default();
            (next - e[k]) / h
        })
    }

    /// `‖u′‖²` from forward differences.
    pub fn gradient_sq(&self) -> f64 {
        let h = self.domain.h;
        (0..self.domain.n_edges)
            .flat_map(|j| self.diffs(j))
            .map(|d| h * d.norm_sqr())
            .sum()
    }
}

fn same_domain(a: &Field, b: &Field) -> Result<()> {
    if a.domain != b.domain {
        return Err(Error::DomainMismatch);
    }
    Ok(())
}

/// `Re ∫ a·conj(b)` by the trapezoid rule over all edges.
pub fn l2_inner(a: &Field, b: &Field) -> Result<f64> {
    same_domain(a, b)?;
    let d = &a.domain;
    let mut s = 0.0;
    for (ea, eb) in a.values.iter().zip(&b.values) {
        for (k, (x, y)) in ea.iter().zip(eb).enumerate() {
            s += d.weight(k) * (x * y.conj()).re;
        }
    }
    Ok(s)
}

/// Complex `∫ a·conj(b) + a′·conj(b′)` with forward-difference derivatives.
pub fn h1_inner_complex(a: &Field, b: &Field) -> Result<Complex64> {
    same_domain(a, b)?;
    let d = &a.domain;
    let mut s = Complex64::new(0.0, 0.0);
    for j in 0..d.n_edges {
        for (k, (x, y)) in a.values[j].iter().zip(&b.values[j]).enumerate() {
            s += d.weight(k) * x * y.conj();
        }
        for (x, y) in a.diffs(j).zip(b.diffs(j)) {
            s += d.h * x * y.conj();
        }
    }
    Ok(s)
}

pub fn h1_inner(a: &Field, b: &Field) -> Result<f64> {
    h1_inner_complex(a, b).map(|z| z.re)
}

pub fn h1_norm_sq(a: &Field) -> f64 {
    a.mass() + a.gradient_sq()
}
