//! The sentinel-padded threshold grid `(-∞, 0, ε̃, …, (n-1)ε̃, λ, +∞)`.

use serde::Serialize;

use crate::real::Real;

/// `n = ⌈(c+1)λ/ε⌉`. A ratio within `1e-9` (relative) of an integer is taken
/// as that integer so that e.g. `λ = 1, ε = 0.1, c = 1` gives `n = 20`
/// rather than 21 from the rounding of `2/0.1`.
pub fn grid_size<T: Real>(lambda: T, eps: T, c: u32) -> usize {
    let ratio = (T::lit(f64::from(c)) + T::one()) * lambda / eps;
    ceil_tolerant(ratio.as_f64()).max(1.0) as usize
}

/// `⌈x⌉`, except that values within `1e-9` relative of an integer round to it.
pub(crate) fn ceil_tolerant(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Threshold grid with `n + 3` points and `m = n + 2` intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct Grid<T> {
    n: usize,
    eps_tilde: T,
    points: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn new(lambda: T, eps: T, c: u32) -> Self {
        let n = grid_size(lambda, eps, c);
        let eps_tilde = lambda / T::lit(n as f64);
        let mut points = Vec::with_capacity(n + 3);
        points.push(T::neg_infinity());
        points.extend((0..n).map(|i| T::lit(i as f64) * eps_tilde));
        points.push(lambda);
        points.push(T::infinity());
        Self {
            n,
            eps_tilde,
            points,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps_tilde(&self) -> T {
        self.eps_tilde
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// Point `x_i`, `0 <= i <= n + 2`.
    pub fn point(&self, i: usize) -> T {
        self.points[i]
    }

    /// Number of intervals `[x_i, x_{i+1}]`.
    pub fn intervals(&self) -> usize {
        self.points.len() - 1
    }

    /// Index of `λ`.
    pub fn top(&self) -> usize {
        self.n + 1
    }

    /// Index of a finite grid value, if it is one.
    pub fn index_of(&self, x: T) -> Option<usize> {
        self.points[1..self.points.len() - 1]
            .iter()
            .position(|&p| p == x)
            .map(|i| i + 1)
    }
}
