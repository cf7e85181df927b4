//! Embedded target manifolds.
//!
//! Each target ships with an explicit isometric embedding `w(N) ⊂ ℝ^d` and
//! closed-form pointwise primitives: nearest-point projection, orthogonal
//! tangent projection, the second fundamental form `A(q)(X, Y)` and an
//! almost complex structure `J_q`.
//!
//! Sign convention for `A`: along a curve `v = w∘u`,
//! `dw(∇ₓuₓ) = v_xx + A(v)(vₓ, vₓ)`, which for the unit sphere gives
//! `A(q)(X, Y) = (X·Y) q`.
//!
//! Orientation of `J`: on `S²` it is `q × X`; on `S⁶` it is the octonionic
//! cross product `q ×₇ X` built from the Fano-plane table [`FANO_TRIPLES`];
//! on the Clifford torus it rotates the first circle factor into the second,
//! `J e_θ = e_φ`. The opposite orientation gives the flow composed with
//! time reversal and `x ↦ −x`, and is not exposed.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::fields::{self, MapState, TangentSection, VectorField};

/// Oriented Fano-plane lines `(i, j, k)` with `e_i e_j = e_k` (zero-based
/// indices into the imaginary octonions `e₁ … e₇`).
pub const FANO_TRIPLES: [(usize, usize, usize); 7] = [
    (0, 1, 2),
    (0, 3, 4),
    (0, 6, 5),
    (1, 3, 5),
    (1, 4, 6),
    (2, 3, 6),
    (2, 5, 4),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TargetKind {
    Sphere2,
    CliffordTorus2,
    Sphere6,
}

/// An embedded compact almost Hermitian target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TargetManifold {
    kind: TargetKind,
}

/// Radius of each circle factor of the Clifford torus.
const TORUS_RADIUS: f64 = FRAC_1_SQRT_2;

impl TargetManifold {
    pub const fn new(kind: TargetKind) -> Self {
        Self { kind }
    }

    pub const fn sphere2() -> Self {
        Self::new(TargetKind::Sphere2)
    }

    pub const fn clifford_torus() -> Self {
        Self::new(TargetKind::CliffordTorus2)
    }

    pub const fn sphere6() -> Self {
        Self::new(TargetKind::Sphere6)
    }

    /// Looks a target up by its configuration name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "s2" => Ok(Self::sphere2()),
            "t2-clifford" => Ok(Self::clifford_torus()),
            "s6" => Ok(Self::sphere6()),
            other => Err(Error::UnknownTarget(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            TargetKind::Sphere2 => "s2",
            TargetKind::CliffordTorus2 => "t2-clifford",
            TargetKind::Sphere6 => "s6",
        }
    }

    pub fn kind(&self) -> TargetKind {
        self.kind
    }

    pub fn ambient_dim(&self) -> usize {
        match self.kind {
            TargetKind::Sphere2 => 3,
            TargetKind::CliffordTorus2 => 4,
            TargetKind::Sphere6 => 7,
        }
    }

    /// Constant Gaussian curvature, defined for the two surface targets.
    pub fn gauss_curvature(&self) -> Option<f64> {
        match self.kind {
            TargetKind::Sphere2 => Some(1.0),
            TargetKind::CliffordTorus2 => Some(0.0),
            TargetKind::Sphere6 => None,
        }
    }

    /// Half the focal distance of the embedding.
    pub fn tube_radius(&self) -> f64 {
        match self.kind {
            TargetKind::Sphere2 | TargetKind::Sphere6 => 0.5,
            TargetKind::CliffordTorus2 => 0.5 * TORUS_RADIUS,
        }
    }

    pub fn is_kahler(&self) -> bool {
        !matches!(self.kind, TargetKind::Sphere6)
    }

    /// Euclidean distance from `q` to `w(N)`.
    pub fn distance(&self, q: &[f64]) -> f64 {
        match self.kind {
            TargetKind::Sphere2 | TargetKind::Sphere6 => (norm(q) - 1.0).abs(),
            TargetKind::CliffordTorus2 => {
                let r1 = q[0].hypot(q[1]) - TORUS_RADIUS;
                let r2 = q[2].hypot(q[3]) - TORUS_RADIUS;
                r1.hypot(r2)
            }
        }
    }

    /// Nearest-point projection `π(Q)` written into `out`.
    pub fn project_into(&self, q: &[f64], out: &mut [f64]) -> Result<()> {
        let distance = self.distance(q);
        let radius = self.tube_radius();
        if !(distance < radius) {
            return Err(Error::TubeExceeded { distance, radius });
        }
        match self.kind {
            TargetKind::Sphere2 | TargetKind::Sphere6 => {
                let s = 1.0 / norm(q);
                for (o, x) in out.iter_mut().zip(q) {
                    *o = x * s;
                }
            }
            TargetKind::CliffordTorus2 => {
                let s1 = TORUS_RADIUS / q[0].hypot(q[1]);
                let s2 = TORUS_RADIUS / q[2].hypot(q[3]);
                out[0] = q[0] * s1;
                out[1] = q[1] * s1;
                out[2] = q[2] * s2;
                out[3] = q[3] * s2;
            }
        }
        Ok(())
    }

    /// Nearest point of `w(N)` for any `Q` off the focal set, without the
    /// tube check. `None` on the focal set, where it is not unique.
    pub fn nearest_point(&self, q: &[f64]) -> Option<Vec<f64>> {
        match self.kind {
            TargetKind::Sphere2 | TargetKind::Sphere6 => {
                let r = norm(q);
                (r > 0.0).then(|| q.iter().map(|x| x / r).collect())
            }
            TargetKind::CliffordTorus2 => {
                let r1 = q[0].hypot(q[1]);
                let r2 = q[2].hypot(q[3]);
                (r1 > 0.0 && r2 > 0.0).then(|| {
                    let (s1, s2) = (TORUS_RADIUS / r1, TORUS_RADIUS / r2);
                    vec![q[0] * s1, q[1] * s1, q[2] * s2, q[3] * s2]
                })
            }
        }
    }

    pub fn project(&self, q: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; q.len()];
        self.project_into(q, &mut out)?;
        Ok(out)
    }

    /// Orthogonal projection of an ambient vector onto `T_q w(N)`.
    pub fn tangent_project_into(&self, q: &[f64], x: &[f64], out: &mut [f64]) {
        match self.kind {
            TargetKind::Sphere2 | TargetKind::Sphere6 => {
                let s = dot(q, x) / dot(q, q);
                for ((o, xi), qi) in out.iter_mut().zip(x).zip(q) {
                    *o = xi - s * qi;
                }
            }
            TargetKind::CliffordTorus2 => {
                let s1 = (q[0] * x[0] + q[1] * x[1]) / (q[0] * q[0] + q[1] * q[1]);
                let s2 = (q[2] * x[2] + q[3] * x[3]) / (q[2] * q[2] + q[3] * q[3]);
                out[0] = x[0] - s1 * q[0];
                out[1] = x[1] - s1 * q[1];
                out[2] = x[2] - s2 * q[2];
                out[3] = x[3] - s2 * q[3];
            }
        }
    }

    pub fn tangent_project(&self, q: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.tangent_project_into(q, x, &mut out);
        out
    }

    /// Second fundamental form `A(q)(X, Y)`, normal to `T_q w(N)`.
    ///
    /// The arguments are tangent-projected first, so the form is evaluated on
    /// the tangential parts of ambient vectors.
    pub fn second_fundamental_form_into(&self, q: &[f64], x: &[f64], y: &[f64], out: &mut [f64]) {
        match self.kind {
            TargetKind::Sphere2 | TargetKind::Sphere6 => {
                let qq = dot(q, q);
                let xy = dot(x, y) - dot(x, q) * dot(y, q) / qq;
                for (o, qi) in out.iter_mut().zip(q) {
                    *o = xy * qi;
                }
            }
            TargetKind::CliffordTorus2 => {
                let r2 = TORUS_RADIUS * TORUS_RADIUS;
                let mut pair = |i: usize| {
                    let (q0, q1) = (q[i], q[i + 1]);
                    let qq = q0 * q0 + q1 * q1;
                    let xq = x[i] * q0 + x[i + 1] * q1;
                    let yq = y[i] * q0 + y[i + 1] * q1;
                    let xy = x[i] * y[i] + x[i + 1] * y[i + 1] - xq * yq / qq;
                    out[i] = xy / r2 * q0;
                    out[i + 1] = xy / r2 * q1;
                };
                pair(0);
                pair(2);
            }
        }
    }

    pub fn second_fundamental_form(&self, q: &[f64], x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; q.len()];
        self.second_fundamental_form_into(q, x, y, &mut out);
        out
    }

    /// Almost complex structure `J_q X` on the tangential part of `X`.
    pub fn complex_structure_into(&self, q: &[f64], x: &[f64], out: &mut [f64]) {
        match self.kind {
            // q × q = 0, so the normal part of X drops out on its own.
            TargetKind::Sphere2 => cross3(q, x, out),
            TargetKind::Sphere6 => cross7(q, x, out),
            TargetKind::CliffordTorus2 => {
                let r1 = q[0].hypot(q[1]);
                let r2 = q[2].hypot(q[3]);
                let e_theta = [-q[1] / r1, q[0] / r1];
                let e_phi = [-q[3] / r2, q[2] / r2];
                let xt = x[0] * e_theta[0] + x[1] * e_theta[1];
                let xp = x[2] * e_phi[0] + x[3] * e_phi[1];
                out[0] = -xp * e_theta[0];
                out[1] = -xp * e_theta[1];
                out[2] = xt * e_phi[0];
                out[3] = xt * e_phi[1];
            }
        }
    }

    pub fn complex_structure(&self, q: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; q.len()];
        self.complex_structure_into(q, x, &mut out);
        out
    }
}

impl fmt::Display for TargetManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for TargetManifold {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for TargetManifold {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        TargetManifold::from_name(&name).map_err(serde::de::Error::custom)
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn cross3(x: &[f64], y: &[f64], out: &mut [f64]) {
    out[0] = x[1] * y[2] - x[2] * y[1];
    out[1] = x[2] * y[0] - x[0] * y[2];
    out[2] = x[0] * y[1] - x[1] * y[0];
}

/// Seven-dimensional cross product from the imaginary octonion product.
pub fn cross7(x: &[f64], y: &[f64], out: &mut [f64]) {
    out[..7].fill(0.0);
    for &(i, j, k) in &FANO_TRIPLES {
        out[k] += x[i] * y[j] - x[j] * y[i];
        out[i] += x[j] * y[k] - x[k] * y[j];
        out[j] += x[k] * y[i] - x[i] * y[k];
    }
}

/// `(∇ₓJ)V = ∇ₓ(JV) − J∇ₓV` along `u`, with both covariant derivatives
/// taken spectrally.
pub fn nabla_j(u: &MapState, v: &TangentSection) -> TangentSection {
    let target = u.target();
    let d = target.ambient_dim();
    let mut jv = VectorField::zeros(u.n(), d);
    for ((q, x), o) in u.points().iter().zip(v.vectors().iter()).zip(jv.iter_mut()) {
        target.complex_structure_into(q, x, o);
    }
    let nabla_jv = fields::covariant_derivative(u, &TangentSection::new(jv));
    let nabla_v = fields::covariant_derivative(u, v);
    let mut out = nabla_jv.into_vectors();
    let mut tmp = vec![0.0; d];
    for ((q, x), o) in u.points().iter().zip(nabla_v.vectors().iter()).zip(out.iter_mut()) {
        target.complex_structure_into(q, x, &mut tmp);
        for (oi, ti) in o.iter_mut().zip(&tmp) {
            *oi -= ti;
        }
    }
    TangentSection::new(out)
}

/// Smallest `C` with `|(∇ₓJ)V| ≤ C·g(uₓ,uₓ)^{1/2}·|V|` at every grid point.
///
/// Points where `|uₓ||V|` is negligible against its maximum are excluded
/// from the ratio; if `(∇ₓJ)V` is not negligible there the tensor bound is
/// violated and `DivisionDegenerate` is returned.
pub fn nabla_j_norm_bound_check(u: &MapState, v: &TangentSection) -> Result<f64> {
    let nj = nabla_j(u, v);
    let ux = fields::velocity(u);
    let weights: Vec<f64> = ux
        .vectors()
        .iter()
        .zip(v.vectors().iter())
        .map(|(a, b)| norm(a) * norm(b))
        .collect();
    let values: Vec<f64> = nj.vectors().iter().map(norm).collect();
    let w_max = weights.iter().cloned().fold(0.0, f64::max);
    let v_max = values.iter().cloned().fold(0.0, f64::max);
    let mut c: f64 = 0.0;
    for (index, (&w, &val)) in weights.iter().zip(&values).enumerate() {
        if w <= 1e-10 * w_max || w == 0.0 {
            if val > 1e-8 * v_max.max(1.0) {
                return Err(Error::DivisionDegenerate { index, value: val });
            }
            continue;
        }
        c = c.max(val / w);
    }
    Ok(c)
}
