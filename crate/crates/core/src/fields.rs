//! Discrete maps into the target and sections along them.
//!
//! Everything lives on a uniform periodic grid `x_j = j·L/n`. Derivatives are
//! exact derivatives of the trigonometric interpolant; integrals use the
//! rectangle rule, which is exact for trigonometric polynomials of degree
//! below `n`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{dot, TargetManifold};

/// Largest covariant order handed out by [`iterated_covariant`].
pub const MAX_COVARIANT_ORDER: usize = 12;

/// Constraint tolerance for a [`MapState`].
pub const CONSTRAINT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two >= 16")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("length {length} must be positive")));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|j| self.x(j))
    }

    /// Angular wavenumber of FFT bin `j`; the Nyquist bin maps to `+n/2`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let k = if j <= self.n / 2 { j as f64 } else { j as f64 - self.n as f64 };
        2.0 * PI * k / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.n / 2
    }
}

/// `n` samples of `dim`-component vectors, stored point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    dim: usize,
    data: Vec<f64>,
}

impl VectorField {
    pub fn zeros(n: usize, dim: usize) -> Self {
        Self { dim, data: vec![0.0; n * dim] }
    }

    pub fn from_vec(dim: usize, data: Vec<f64>) -> Self {
        assert!(dim > 0 && data.len() % dim == 0, "data length must be a multiple of dim");
        Self { dim, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data })
    }

    pub fn from_fn(n: usize, dim: usize, mut f: impl FnMut(usize, &mut [f64])) -> Self {
        let mut out = Self::zeros(n, dim);
        for (j, row) in out.iter_mut().enumerate() {
            f(j, row);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn iter_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        self.data.chunks_exact_mut(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// `self += s·other`
    pub fn axpy(&mut self, s: f64, other: &VectorField) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> VectorField {
        VectorField { dim: self.dim, data: self.data.iter().map(|x| s * x).collect() }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        VectorField { dim: self.dim, data }
    }

    /// Largest pointwise Euclidean norm.
    pub fn max_norm(&self) -> f64 {
        self.iter().map(|r| dot(r, r).sqrt()).fold(0.0, f64::max)
    }

    pub fn pointwise_norms(&self) -> Vec<f64> {
        self.iter().map(|r| dot(r, r).sqrt()).collect()
    }

    /// Multiplies row `j` by `weights[j]`.
    pub fn scale_rows(&self, weights: &[f64]) -> VectorField {
        let mut out = self.clone();
        for (row, w) in out.iter_mut().zip(weights) {
            row.iter_mut().for_each(|x| *x *= w);
        }
        out
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        (p.plan_fft_forward(n), p.plan_fft_inverse(n))
    })
}

/// Discrete Fourier coefficients of a [`VectorField`], one column per
/// component (unnormalized forward transform).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: usize,
    dim: usize,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(n: usize, dim: usize) -> Self {
        Self { n, dim, data: vec![Complex64::new(0.0, 0.0); n * dim] }
    }

    pub fn of(field: &VectorField) -> Self {
        let n = field.len();
        let dim = field.dim();
        let (fwd, _) = plans(n);
        let mut data = vec![Complex64::new(0.0, 0.0); n * dim];
        for (j, row) in field.iter().enumerate() {
            for (c, &x) in row.iter().enumerate() {
                data[c * n + j] = Complex64::new(x, 0.0);
            }
        }
        for col in data.chunks_exact_mut(n) {
            fwd.process(col);
        }
        Self { n, dim, data }
    }

    /// Inverse transform, keeping the real part.
    pub fn to_field(&self) -> VectorField {
        let (_, inv) = plans(self.n);
        let mut buf = self.data.clone();
        for col in buf.chunks_exact_mut(self.n) {
            inv.process(col);
        }
        let scale = 1.0 / self.n as f64;
        VectorField::from_fn(self.n, self.dim, |j, row| {
            for (c, r) in row.iter_mut().enumerate() {
                *r = buf[c * self.n + j].re * scale;
            }
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.n..(c + 1) * self.n]
    }

    pub fn column_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.n..(c + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Multiplies every column by the mode-wise factor `m[j]`.
    pub fn apply_multiplier(&mut self, m: &[Complex64]) {
        for col in self.data.chunks_exact_mut(self.n) {
            for (z, f) in col.iter_mut().zip(m) {
                *z *= f;
            }
        }
    }

    pub fn multiplied(&self, m: &[Complex64]) -> Spectrum {
        let mut out = self.clone();
        out.apply_multiplier(m);
        out
    }

    /// Zeroes all modes with `|k| > n/3` (2/3-rule dealiasing).
    pub fn truncate_two_thirds(&mut self) {
        let mask = two_thirds_mask(self.n);
        for col in self.data.chunks_exact_mut(self.n) {
            for (z, keep) in col.iter_mut().zip(&mask) {
                if !keep {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Sum of squared moduli, normalized so that it equals the grid-space
    /// sum of squares (Parseval).
    pub fn energy(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum::<f64>() / self.n as f64
    }
}

pub fn two_thirds_mask(n: usize) -> Vec<bool> {
    (0..n)
        .map(|j| {
            let k = if j <= n / 2 { j } else { n - j };
            3 * k <= n
        })
        .collect()
}

/// Fourier symbol of `∂ₓ^order` on the grid. Odd orders vanish on the
/// Nyquist bin so that real data stays real.
pub fn derivative_symbol(grid: &Grid, order: usize) -> Vec<Complex64> {
    let i = Complex64::new(0.0, 1.0);
    (0..grid.n())
        .map(|j| {
            if order % 2 == 1 && grid.is_nyquist(j) {
                Complex64::new(0.0, 0.0)
            } else {
                (i * grid.wavenumber(j)).powu(order as u32)
            }
        })
        .collect()
}

/// `∂ₓ^order` of a sampled field.
pub fn spectral_derivative(values: &VectorField, order: usize, grid: &Grid) -> VectorField {
    Spectrum::of(values).multiplied(&derivative_symbol(grid, order)).to_field()
}

/// Several derivative orders of one field from a single forward transform.
pub fn spectral_derivatives(values: &VectorField, orders: &[usize], grid: &Grid) -> Vec<VectorField> {
    let spec = Spectrum::of(values);
    orders
        .iter()
        .map(|&k| spec.multiplied(&derivative_symbol(grid, k)).to_field())
        .collect()
}

/// Exact integral `∫₀^{x_j} f` of the trigonometric interpolant of `f`.
pub fn cumulative_integral(values: &[f64], grid: &Grid) -> Vec<f64> {
    let n = grid.n();
    let field = VectorField::from_vec(1, values.to_vec());
    let mut spec = Spectrum::of(&field);
    let mean = spec.column(0)[0].re / n as f64;
    let col = spec.column_mut(0);
    col[0] = Complex64::new(0.0, 0.0);
    for (j, z) in col.iter_mut().enumerate().skip(1) {
        if grid.is_nyquist(j) {
            // cos(πx/dx) integrates to a sine that vanishes on the grid
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z /= Complex64::new(0.0, grid.wavenumber(j));
        }
    }
    let periodic = spec.to_field();
    let p0 = periodic.as_slice()[0];
    periodic
        .as_slice()
        .iter()
        .enumerate()
        .map(|(j, p)| mean * grid.x(j) + p - p0)
        .collect()
}

/// A discretized map `u(t, ·)` into the target, stored extrinsically.
#[derive(Debug, Clone, PartialEq)]
pub struct MapState {
    grid: Grid,
    time: f64,
    points: VectorField,
    target: TargetManifold,
}

impl MapState {
    /// Builds a state, rejecting points off `w(N)` by more than
    /// [`CONSTRAINT_TOLERANCE`].
    pub fn new(grid: Grid, time: f64, points: VectorField, target: TargetManifold) -> Result<Self> {
        let state = Self::from_raw(grid, time, points, target)?;
        let violation = state.constraint_violation();
        if !(violation <= CONSTRAINT_TOLERANCE) {
            return Err(Error::OffManifold { violation, limit: CONSTRAINT_TOLERANCE });
        }
        Ok(state)
    }

    /// Builds a state without the constraint check (tube-valued states).
    pub fn from_raw(grid: Grid, time: f64, points: VectorField, target: TargetManifold) -> Result<Self> {
        if points.dim() != target.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: target.ambient_dim(), found: points.dim() });
        }
        if points.len() != grid.n() {
            return Err(Error::DimensionMismatch { expected: grid.n(), found: points.len() });
        }
        Ok(Self { grid, time, points, target })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn points(&self) -> &VectorField {
        &self.points
    }

    pub fn into_points(self) -> VectorField {
        self.points
    }

    pub fn target(&self) -> TargetManifold {
        self.target
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Largest pointwise distance from `w(N)`.
    pub fn constraint_violation(&self) -> f64 {
        self.points.iter().map(|q| self.target.distance(q)).fold(0.0, f64::max)
    }

    /// Pointwise nearest-point projection.
    pub fn projected(&self) -> Result<MapState> {
        let mut out = self.points.clone();
        for (q, o) in self.points.iter().zip(out.iter_mut()) {
            self.target.project_into(q, o)?;
        }
        Ok(Self { points: out, ..self.clone() })
    }

    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot {
            time: self.time,
            length: self.grid.length(),
            n: self.grid.n(),
            target: self.target,
            points: self.points.to_rows(),
        }
    }

    pub fn from_snapshot(s: &Snapshot) -> Result<Self> {
        let grid = Grid::new(s.n, s.length)?;
        Self::new(grid, s.time, VectorField::from_rows(&s.points)?, s.target)
    }
}

/// JSON form of a [`MapState`]: `{time, L, n, target, points}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub n: usize,
    pub target: TargetManifold,
    pub points: Vec<Vec<f64>>,
}

/// A section of `u⁻¹TN`, stored as ambient vectors along some [`MapState`].
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSection {
    vectors: VectorField,
}

impl TangentSection {
    pub fn new(vectors: VectorField) -> Self {
        Self { vectors }
    }

    pub fn zeros_along(u: &MapState) -> Self {
        Self::new(VectorField::zeros(u.n(), u.target().ambient_dim()))
    }

    pub fn vectors(&self) -> &VectorField {
        &self.vectors
    }

    pub fn into_vectors(self) -> VectorField {
        self.vectors
    }

    /// Largest `|P_T V − V|` along `base`.
    pub fn tangency_residual(&self, base: &MapState) -> f64 {
        let t = base.target();
        let mut tmp = vec![0.0; t.ambient_dim()];
        base.points()
            .iter()
            .zip(self.vectors.iter())
            .map(|(q, v)| {
                t.tangent_project_into(q, v, &mut tmp);
                tmp.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Pointwise tangent projection along `base`.
    pub fn projected(&self, base: &MapState) -> TangentSection {
        TangentSection::new(tangent_project_field(base, &self.vectors))
    }
}

pub fn tangent_project_field(u: &MapState, x: &VectorField) -> VectorField {
    let t = u.target();
    let mut out = VectorField::zeros(u.n(), t.ambient_dim());
    for ((q, v), o) in u.points().iter().zip(x.iter()).zip(out.iter_mut()) {
        t.tangent_project_into(q, v, o);
    }
    out
}

/// `uₓ`, the spectral derivative of the embedded curve.
pub fn velocity(u: &MapState) -> TangentSection {
    TangentSection::new(spectral_derivative(u.points(), 1, u.grid()))
}

/// `∇ₓV`: tangential part of the ambient derivative.
pub fn covariant_derivative(u: &MapState, v: &TangentSection) -> TangentSection {
    let dv = spectral_derivative(v.vectors(), 1, u.grid());
    TangentSection::new(tangent_project_field(u, &dv))
}

/// `[uₓ, ∇ₓuₓ, …, ∇ₓ^m uₓ]`.
pub fn iterated_covariant(u: &MapState, m: usize) -> Vec<TangentSection> {
    assert!(m <= MAX_COVARIANT_ORDER, "covariant order {m} exceeds {MAX_COVARIANT_ORDER}");
    let mut out = Vec::with_capacity(m + 1);
    out.push(velocity(u));
    for j in 1..=m {
        let next = covariant_derivative(u, &out[j - 1]);
        out.push(next);
    }
    out
}

/// `∫ g(V, W) dx` by the rectangle rule.
pub fn l2_inner(grid: &Grid, v: &VectorField, w: &VectorField) -> f64 {
    dot(v.as_slice(), w.as_slice()) * grid.dx()
}

pub fn l2_norm_sq(grid: &Grid, v: &VectorField) -> f64 {
    l2_inner(grid, v, v)
}

/// Pointwise `g(V, W)`.
pub fn pointwise_inner(v: &VectorField, w: &VectorField) -> Vec<f64> {
    v.iter().zip(w.iter()).map(|(a, b)| dot(a, b)).collect()
}

/// `‖uₓ‖²_{H^m} = Σ_{j≤m} ‖∇ₓ^j uₓ‖²_{L²}`.
pub fn sobolev_norm_sq(u: &MapState, m: usize) -> f64 {
    sobolev_terms(u, m).iter().sum()
}

/// The individual terms `‖∇ₓ^j uₓ‖²_{L²}` for `j = 0..=m`.
pub fn sobolev_terms(u: &MapState, m: usize) -> Vec<f64> {
    iterated_covariant(u, m)
        .iter()
        .map(|s| l2_norm_sq(u.grid(), s.vectors()))
        .collect()
}
