//! Analytic initial curves.
//!
//! Every family is built in the ambient space and then projected pointwise
//! onto the target, so states come out on `w(N)` to round-off.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::fields::{Grid, MapState, VectorField};
use crate::geometry::{dot, norm, TargetKind, TargetManifold};

/// The shipped initial-data families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum InitialData {
    /// `u ≡ point` (defaults to the last coordinate axis, or
    /// `(1,0,1,0)/√2` on the torus).
    Constant { point: Option<Vec<f64>> },
    /// Unit-plane great circle winding `k` times.
    GreatCircle { k: u32 },
    /// Great circle (or `(k,k)` torus winding) plus an out-of-plane ripple
    /// `amp·sin(mode·θ)` before projection.
    PerturbedCircle { k: u32, amp: f64, mode: u32 },
    /// Periodic von Mises bump of the given width and height, centred at
    /// `center ∈ [0, L)`.
    Bump { center: f64, width: f64, height: f64 },
    /// Torus geodesic winding `(k1, k2)` times around the two circles.
    TorusWinding { k1: i32, k2: i32 },
    /// Great circle of the 6-sphere in the coordinate plane `(i, j)`.
    S6Circle { plane: [usize; 2] },
    /// Product of two random rotation flows applied to a random point
    /// (spheres), or random trigonometric angle perturbations (torus).
    /// Band-limited: all frequencies at most `2·max_frequency`.
    RandomAnalytic { seed: u64, max_frequency: u32 },
}

impl InitialData {
    pub fn name(&self) -> &'static str {
        match self {
            InitialData::Constant { .. } => "constant",
            InitialData::GreatCircle { .. } => "great-circle",
            InitialData::PerturbedCircle { .. } => "perturbed-circle",
            InitialData::Bump { .. } => "bump",
            InitialData::TorusWinding { .. } => "torus-winding",
            InitialData::S6Circle { .. } => "s6-circle",
            InitialData::RandomAnalytic { .. } => "random-analytic",
        }
    }
}

fn wrong_target(family: &str, target: TargetManifold) -> Error {
    Error::BadParameters(format!("family `{family}` is not available on target `{}`", target.name()))
}

fn from_ambient(grid: &Grid, target: TargetManifold, f: impl Fn(f64) -> Vec<f64>) -> Result<MapState> {
    let d = target.ambient_dim();
    let mut pts = VectorField::zeros(grid.n(), d);
    for (j, row) in pts.iter_mut().enumerate() {
        let q = f(grid.x(j));
        target.project_into(&q, row).map_err(|e| Error::BadParameters(format!("projection failed: {e}")))?;
    }
    MapState::new(*grid, 0.0, pts, target)
}

fn torus_point(theta1: f64, theta2: f64) -> Vec<f64> {
    let r = FRAC_1_SQRT_2;
    vec![r * theta1.cos(), r * theta1.sin(), r * theta2.cos(), r * theta2.sin()]
}

/// Builds the initial state for `data` on `grid`.
pub fn make_initial_data(data: &InitialData, grid: &Grid, target: TargetManifold) -> Result<MapState> {
    let d = target.ambient_dim();
    let is_torus = target.kind() == TargetKind::CliffordTorus2;
    let phase = |x: f64| 2.0 * PI * x / grid.length();
    match data {
        InitialData::Constant { point } => {
            let p = match point {
                Some(p) => {
                    if p.len() != d {
                        return Err(Error::BadParameters(format!(
                            "constant point has {} components, target needs {d}",
                            p.len()
                        )));
                    }
                    if target.distance(p) > 1e-8 {
                        return Err(Error::BadParameters("constant point is not on the target".into()));
                    }
                    p.clone()
                }
                None if is_torus => torus_point(0.0, 0.0),
                None => {
                    let mut p = vec![0.0; d];
                    p[d - 1] = 1.0;
                    p
                }
            };
            from_ambient(grid, target, |_| p.clone())
        }
        InitialData::GreatCircle { k } => {
            if is_torus {
                return Err(wrong_target("great-circle", target));
            }
            let k = *k as f64;
            from_ambient(grid, target, |x| {
                let mut q = vec![0.0; d];
                q[0] = (k * phase(x)).cos();
                q[1] = (k * phase(x)).sin();
                q
            })
        }
        InitialData::PerturbedCircle { k, amp, mode } => {
            let radius = target.tube_radius();
            if !(amp.abs() < radius) {
                return Err(Error::BadParameters(format!(
                    "amp = {amp} must be smaller than the tube radius {radius:.4}"
                )));
            }
            let (k, m) = (*k as f64, *mode as f64);
            if is_torus {
                from_ambient(grid, target, |x| {
                    let mut q = torus_point(k * phase(x), k * phase(x));
                    q[2] += amp * (m * phase(x)).sin();
                    q
                })
            } else {
                from_ambient(grid, target, |x| {
                    let mut q = vec![0.0; d];
                    q[0] = (k * phase(x)).cos();
                    q[1] = (k * phase(x)).sin();
                    q[2] = amp * (m * phase(x)).sin();
                    q
                })
            }
        }
        InitialData::Bump { center, width, height } => {
            if !(*width > 0.0) {
                return Err(Error::BadParameters(format!("bump width must be positive, got {width}")));
            }
            let profile = |x: f64| {
                let s = phase(x - center);
                height * ((s.cos() - 1.0) / (width * width)).exp()
            };
            if is_torus {
                from_ambient(grid, target, |x| {
                    let (p, s) = (profile(x), phase(x - center));
                    torus_point(p * s.cos(), p * s.sin())
                })
            } else {
                from_ambient(grid, target, |x| {
                    let (p, s) = (profile(x), phase(x - center));
                    let mut q = vec![0.0; d];
                    q[0] = p.sin() * s.cos();
                    q[1] = p.sin() * s.sin();
                    q[d - 1] = p.cos();
                    q
                })
            }
        }
        InitialData::TorusWinding { k1, k2 } => {
            if !is_torus {
                return Err(wrong_target("torus-winding", target));
            }
            let (k1, k2) = (*k1 as f64, *k2 as f64);
            from_ambient(grid, target, |x| torus_point(k1 * phase(x), k2 * phase(x)))
        }
        InitialData::S6Circle { plane: [i, j] } => {
            if target.kind() != TargetKind::Sphere6 {
                return Err(wrong_target("s6-circle", target));
            }
            let (i, j) = (*i, *j);
            if i == j || i >= 7 || j >= 7 {
                return Err(Error::BadParameters(format!(
                    "s6-circle plane ({i}, {j}) must name two distinct axes in 0..7"
                )));
            }
            from_ambient(grid, target, |x| {
                let mut q = vec![0.0; 7];
                q[i] = phase(x).cos();
                q[j] = phase(x).sin();
                q
            })
        }
        InitialData::RandomAnalytic { seed, max_frequency } => {
            if *max_frequency == 0 {
                return Err(Error::BadParameters("max_frequency must be at least 1".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            if is_torus {
                let coeffs: Vec<[f64; 4]> = (0..*max_frequency)
                    .map(|_| std::array::from_fn(|_| rng.gen_range(-0.3..0.3)))
                    .collect();
                let w1 = rng.gen_range(-2i32..=2) as f64;
                let w2 = rng.gen_range(-2i32..=2) as f64;
                from_ambient(grid, target, |x| {
                    let s = phase(x);
                    let (mut t1, mut t2) = (w1 * s, w2 * s);
                    for (f, c) in coeffs.iter().enumerate() {
                        let a = (f + 1) as f64 * s;
                        t1 += c[0] * a.cos() + c[1] * a.sin();
                        t2 += c[2] * a.cos() + c[3] * a.sin();
                    }
                    torus_point(t1, t2)
                })
            } else {
                let first = RotationFlow::random(d, *max_frequency, &mut rng);
                let second = RotationFlow::random(d, *max_frequency, &mut rng);
                let start = random_unit(d, &mut rng);
                from_ambient(grid, target, |x| first.apply(phase(x), &second.apply(phase(x), &start)))
            }
        }
    }
}

fn random_unit(d: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 0.1 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// `s ↦ Q·diag(R(k₁s), R(k₂s), …)·Qᵀ` with `Q` orthogonal and integer
/// frequencies `kᵢ`: a one-parameter rotation group periodic in `s` with
/// period 2π.
#[derive(Debug, Clone)]
struct RotationFlow {
    basis: Vec<Vec<f64>>,
    frequencies: Vec<f64>,
}

impl RotationFlow {
    fn random(d: usize, max_frequency: u32, rng: &mut ChaCha8Rng) -> Self {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
        while basis.len() < d {
            let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for b in &basis {
                let p = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
            let n = norm(&v);
            if n > 1e-3 {
                basis.push(v.iter().map(|x| x / n).collect());
            }
        }
        let frequencies = (0..d / 2).map(|_| rng.gen_range(1..=max_frequency) as f64).collect();
        Self { basis, frequencies }
    }

    fn apply(&self, s: f64, v: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = self.basis.iter().map(|b| dot(b, v)).collect();
        let mut rotated = c.clone();
        for (p, k) in self.frequencies.iter().enumerate() {
            let (sn, cs) = (k * s).sin_cos();
            rotated[2 * p] = cs * c[2 * p] - sn * c[2 * p + 1];
            rotated[2 * p + 1] = sn * c[2 * p] + cs * c[2 * p + 1];
        }
        let mut out = vec![0.0; v.len()];
        for (b, r) in self.basis.iter().zip(&rotated) {
            out.iter_mut().zip(b).for_each(|(o, x)| *o += r * x);
        }
        out
    }
}
