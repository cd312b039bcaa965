//! Symmetric banded matrices and their unpivoted `L D Lᵀ` factorization.
//!
//! The factorization is used in two ways: over `f64` it yields the inertia
//! of a shifted matrix (Sylvester's law), which drives eigenvalue counting
//! and bisection; over `Complex64` it solves the complex-symmetric
//! Crank–Nicolson systems.

use num_complex::Complex64;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Field element usable in the banded kernels.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + PartialEq
    + std::fmt::Debug
{
    fn zero() -> Self;
    fn from_real(x: f64) -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// Symmetric (not Hermitian) matrix with half-bandwidth `kd`, lower band
/// stored row-wise: entry `(i, i - d)` lives at `data[i * (kd + 1) + d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand<T> {
    n: usize,
    kd: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymBand<T> {
    pub fn zeros(n: usize, kd: usize) -> Self {
        SymBand {
            n,
            kd,
            data: vec![T::zero(); n * (kd + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.kd
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> Option<usize> {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        let d = r - c;
        (d <= self.kd).then_some(r * (self.kd + 1) + d)
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.idx(i, j).map_or(T::zero(), |k| self.data[k])
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)` (once on the diagonal).
    ///
    /// Panics if `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self
            .idx(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band {}", self.kd));
        self.data[k] += v;
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self
            .idx(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band {}", self.kd));
        self.data[k] = v;
    }

    pub fn diag(&self, i: usize) -> T {
        self.data[i * (self.kd + 1)]
    }

    /// Applies `f` to every stored entry, passing `(row, col, value)`.
    pub fn map_entries(&self, mut f: impl FnMut(usize, usize, T) -> T) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for d in 0..=self.kd.min(i) {
                let k = i * (self.kd + 1) + d;
                out.data[k] = f(i, i - d, self.data[k]);
            }
        }
        out
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        let w = self.kd + 1;
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for d in 1..=self.kd.min(i) {
                let a = row[d];
                let j = i - d;
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
        }
        y
    }

    /// Returns `A + shift·I`.
    pub fn shifted(&self, shift: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * (self.kd + 1)] += shift;
        }
        out
    }

    /// Largest absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        let mut rows = vec![0.0; self.n];
        for i in 0..self.n {
            for d in 0..=self.kd.min(i) {
                let a = self.data[i * (self.kd + 1) + d].modulus();
                rows[i] += a;
                if d > 0 {
                    rows[i - d] += a;
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Unpivoted `L D Lᵀ` factorization. A pivot with modulus below
    /// `pivot_tol` aborts and reports its row.
    pub fn ldlt(&self, pivot_tol: f64) -> std::result::Result<Ldlt<T>, (usize, T)> {
        let n = self.n;
        let kd = self.kd;
        let w = kd + 1;
        // Same layout as self: diag holds D, off-diagonals hold L.
        let mut f = self.data.clone();
        for j in 0..n {
            let lo = j.saturating_sub(kd);
            let mut s = f[j * w];
            for k in lo..j {
                let l = f[j * w + (j - k)];
                s = s - l * l * f[k * w];
            }
            if s.modulus() < pivot_tol || !s.modulus().is_finite() {
                return Err((j, s));
            }
            f[j * w] = s;
            for i in (j + 1)..n.min(j + kd + 1) {
                let lo_i = i.saturating_sub(kd).max(lo);
                let mut t = f[i * w + (i - j)];
                for k in lo_i..j {
                    t = t - f[i * w + (i - k)] * f[j * w + (j - k)] * f[k * w];
                }
                f[i * w + (i - j)] = t / s;
            }
        }
        Ok(Ldlt { n, kd, f })
    }
}

/// Factors of `A = L D Lᵀ` in band storage.
#[derive(Debug, Clone)]
pub struct Ldlt<T> {
    n: usize,
    kd: usize,
    f: Vec<T>,
}

impl<T: Scalar> Ldlt<T> {
    pub fn pivots(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.n).map(move |i| self.f[i * (self.kd + 1)])
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [T]) {
        let (n, kd, w) = (self.n, self.kd, self.kd + 1);
        assert_eq!(x.len(), n);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(kd)..i {
                s = s - self.f[i * w + (i - k)] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] = x[i] / self.f[i * w];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n.min(i + kd + 1) {
                s = s - self.f[k * w + (k - i)] * x[k];
            }
            x[i] = s;
        }
    }
}

impl Ldlt<f64> {
    /// Number of negative pivots, i.e. the negative inertia of `A`.
    pub fn negative_count(&self) -> usize {
        self.pivots().filter(|d| *d < 0.0).count()
    }
}
