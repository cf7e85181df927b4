//! Right-hand sides of the flow.
//!
//! Two independent assemblies of the same vector field are provided:
//!
//! * the intrinsic form `a∇ₓ²uₓ + J∇ₓuₓ + b g(uₓ,uₓ)uₓ`, built from
//!   covariant derivatives (tangential parts of ambient derivatives);
//! * the extrinsic nonlinearity `F(v)` for `v = w∘u`, written term by term
//!   with the second fundamental form, ambient derivatives of the assembled
//!   products taken spectrally.
//!
//! The building blocks of `F` are the identities
//!
//! ```text
//! dw(∇ₓuₓ)  = v_xx + A(v)(vₓ,vₓ)
//! dw(∇ₓ²uₓ) = v_xxx + [A(v)(vₓ,vₓ)]ₓ + A(v)(v_xx + A(v)(vₓ,vₓ), vₓ)
//! dw(∇ₓ³uₓ) = v_xxxx + [A(v)(vₓ,vₓ)]ₓₓ + [A(v)(v_xx + A(v)(vₓ,vₓ), vₓ)]ₓ
//!             + A(v)(dw(∇ₓ²uₓ), vₓ)
//! ```
//!
//! and the regularized field is `−ε dw(∇ₓ³uₓ) + a dw(∇ₓ²uₓ) + J dw(∇ₓuₓ) + b|vₓ|²vₓ`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fields::{
    self, derivative_symbol, pointwise_inner, tangent_project_field, MapState, Spectrum, TangentSection,
    VectorField,
};
use crate::geometry::{cross3, TargetKind, TargetManifold};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowCoefficients {
    /// Third-order coefficient.
    pub a: f64,
    /// Cubic coefficient.
    pub b: f64,
    /// Parabolic regularization strength.
    pub epsilon: f64,
}

impl FlowCoefficients {
    pub fn new(a: f64, b: f64, epsilon: f64) -> Self {
        Self { a, b, epsilon }
    }

    /// Checks the admissible parameter range: `ε ∈ [0, 1)`, and `a ≠ 0`
    /// unless the flow is regularized (`a = 0` is the Schrödinger-map mode,
    /// exposed only with `ε > 0`).
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.epsilon.is_finite()) {
            return Err(Error::Validation("coefficients must be finite".into()));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::Validation(format!("epsilon = {} must lie in [0, 1)", self.epsilon)));
        }
        if self.a == 0.0 && self.epsilon == 0.0 {
            return Err(Error::Validation(
                "a = 0 with epsilon = 0: the unregularized dispersive flow requires a ≠ 0; \
                 the Schrödinger-map mode a = 0 needs epsilon > 0"
                    .into(),
            ));
        }
        Ok(())
    }

    pub fn is_schrodinger_mode(&self) -> bool {
        self.a == 0.0
    }
}

/// Which vector field the solver integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// The general flow with coefficients `(a, b, ε)`.
    Dispersive,
    /// `u_t = u × u_xx` on the sphere.
    Darios,
    /// `u_t = u × u_xx + a[u_xxx + (3/2){uₓ × (u × uₓ)}ₓ]` on the sphere.
    FukumotoMiyazaki,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Dispersive => "dispersive",
            Model::Darios => "darios",
            Model::FukumotoMiyazaki => "fukumoto-miyazaki",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dispersive" => Ok(Model::Dispersive),
            "darios" => Ok(Model::Darios),
            "fukumoto-miyazaki" => Ok(Model::FukumotoMiyazaki),
            other => Err(Error::Validation(format!(
                "unknown model `{other}` (expected dispersive, darios, fukumoto-miyazaki)"
            ))),
        }
    }
}

fn map_pointwise(
    v: &MapState,
    x: &VectorField,
    y: &VectorField,
    f: impl Fn(&TargetManifold, &[f64], &[f64], &[f64], &mut [f64]),
) -> VectorField {
    let t = v.target();
    let mut out = VectorField::zeros(v.n(), t.ambient_dim());
    for (((q, a), b), o) in v.points().iter().zip(x.iter()).zip(y.iter()).zip(out.iter_mut()) {
        f(&t, q, a, b, o);
    }
    out
}

/// Pointwise `A(v)(X, Y)`.
pub fn second_fundamental_form_field(v: &MapState, x: &VectorField, y: &VectorField) -> VectorField {
    map_pointwise(v, x, y, |t, q, a, b, o| t.second_fundamental_form_into(q, a, b, o))
}

/// Pointwise `J_v X`.
pub fn complex_structure_field(v: &MapState, x: &VectorField) -> VectorField {
    map_pointwise(v, x, x, |t, q, a, _, o| t.complex_structure_into(q, a, o))
}

fn add(a: &VectorField, b: &VectorField) -> VectorField {
    let mut out = a.clone();
    out.axpy(1.0, b);
    out
}

/// The individual sub-terms of `F(v)`, exposed for term-level checks.
#[derive(Debug, Clone)]
pub struct ExtrinsicTerms {
    pub vx: VectorField,
    pub vxx: VectorField,
    pub vxxx: VectorField,
    /// `A(v)(vₓ, vₓ)`
    pub a_vx_vx: VectorField,
    /// `[A(v)(vₓ, vₓ)]ₓ`
    pub a_vx_vx_x: VectorField,
    /// `dw(∇ₓuₓ) = v_xx + A(v)(vₓ,vₓ)`
    pub nabla_ux: VectorField,
    /// `A(v)(v_xx + A(v)(vₓ,vₓ), vₓ)`
    pub a_nabla_ux_vx: VectorField,
    /// `dw(∇ₓ²uₓ)`
    pub nabla2_ux: VectorField,
    /// `dw(∇ₓ³uₓ)`, assembled only when requested.
    pub nabla3_ux: Option<VectorField>,
}

/// Evaluates the extrinsic building blocks on an on-manifold curve.
pub fn extrinsic_terms(v: &MapState, with_third: bool) -> ExtrinsicTerms {
    let grid = v.grid();
    let spec = Spectrum::of(v.points());
    let deriv = |s: &Spectrum, k: usize| s.multiplied(&derivative_symbol(grid, k)).to_field();
    let vx = deriv(&spec, 1);
    let vxx = deriv(&spec, 2);
    let vxxx = deriv(&spec, 3);
    let a_vx_vx = second_fundamental_form_field(v, &vx, &vx);
    let a_spec = Spectrum::of(&a_vx_vx);
    let a_vx_vx_x = deriv(&a_spec, 1);
    let nabla_ux = add(&vxx, &a_vx_vx);
    let a_nabla_ux_vx = second_fundamental_form_field(v, &nabla_ux, &vx);
    let mut nabla2_ux = add(&vxxx, &a_vx_vx_x);
    nabla2_ux.axpy(1.0, &a_nabla_ux_vx);
    let nabla3_ux = with_third.then(|| {
        let mut out = deriv(&spec, 4);
        out.axpy(1.0, &deriv(&a_spec, 2));
        out.axpy(1.0, &fields::spectral_derivative(&a_nabla_ux_vx, 1, grid));
        out.axpy(1.0, &second_fundamental_form_field(v, &nabla2_ux, &vx));
        out
    });
    ExtrinsicTerms { vx, vxx, vxxx, a_vx_vx, a_vx_vx_x, nabla_ux, a_nabla_ux_vx, nabla2_ux, nabla3_ux }
}

/// `F(v)`: the extrinsic nonlinearity, including the `ε`-prefixed block iff
/// `ε > 0`. The full regularized field is `−ε v_xxxx + F(v)`.
pub fn nonlinearity(v: &MapState, c: &FlowCoefficients) -> VectorField {
    let terms = extrinsic_terms(v, false);
    let mut f = terms.nabla2_ux.scaled(c.a);
    let tangent = tangent_project_field(v, &terms.nabla_ux);
    f.axpy(1.0, &complex_structure_field(v, &tangent));
    let speed2 = pointwise_inner(&terms.vx, &terms.vx);
    f.axpy(c.b, &terms.vx.scale_rows(&speed2));
    if c.epsilon > 0.0 {
        let grid = v.grid();
        let mut block = fields::spectral_derivative(&terms.a_vx_vx, 2, grid);
        block.axpy(1.0, &fields::spectral_derivative(&terms.a_nabla_ux_vx, 1, grid));
        block.axpy(1.0, &second_fundamental_form_field(v, &terms.nabla2_ux, &terms.vx));
        f.axpy(-c.epsilon, &block);
    }
    f
}

/// `−ε v_xxxx + F(v)` on an on-manifold curve.
pub fn rhs_extrinsic(v: &MapState, c: &FlowCoefficients) -> VectorField {
    let mut f = nonlinearity(v, c);
    if c.epsilon > 0.0 {
        f.axpy(-c.epsilon, &fields::spectral_derivative(v.points(), 4, v.grid()));
    }
    f
}

/// `−ε Q_xxxx + F(π∘Q)` for a tube-valued curve `Q`.
pub fn rhs_regularized_tube(q: &MapState, c: &FlowCoefficients) -> Result<VectorField> {
    let projected = q.projected()?;
    let mut f = nonlinearity(&projected, c);
    if c.epsilon > 0.0 {
        f.axpy(-c.epsilon, &fields::spectral_derivative(q.points(), 4, q.grid()));
    }
    Ok(f)
}

/// `a∇ₓ²uₓ + J∇ₓuₓ + b g(uₓ,uₓ)uₓ` from covariant derivatives. `ε` is
/// ignored.
pub fn rhs_intrinsic(u: &MapState, c: &FlowCoefficients) -> TangentSection {
    let d = fields::iterated_covariant(u, 2);
    intrinsic_from(u, &d, c)
}

/// `−ε∇ₓ³uₓ + a∇ₓ²uₓ + J∇ₓuₓ + b g(uₓ,uₓ)uₓ`.
pub fn rhs_intrinsic_regularized(u: &MapState, c: &FlowCoefficients) -> TangentSection {
    let d = fields::iterated_covariant(u, 3);
    let mut out = intrinsic_from(u, &d, c).into_vectors();
    out.axpy(-c.epsilon, d[3].vectors());
    TangentSection::new(out)
}

fn intrinsic_from(u: &MapState, d: &[TangentSection], c: &FlowCoefficients) -> TangentSection {
    let ux = d[0].vectors();
    let mut out = d[2].vectors().scaled(c.a);
    out.axpy(1.0, &complex_structure_field(u, d[1].vectors()));
    let g = pointwise_inner(ux, ux);
    out.axpy(c.b, &ux.scale_rows(&g));
    TangentSection::new(out)
}

fn require_sphere2(v: &MapState) -> Result<()> {
    if v.target().kind() != TargetKind::Sphere2 {
        return Err(Error::WrongTarget { expected: "s2", found: v.target().name().into() });
    }
    Ok(())
}

fn cross_field(x: &VectorField, y: &VectorField) -> VectorField {
    let mut out = VectorField::zeros(x.len(), 3);
    for ((a, b), o) in x.iter().zip(y.iter()).zip(out.iter_mut()) {
        cross3(a, b, o);
    }
    out
}

/// Vortex-filament equation `u_t = u × u_xx`.
pub fn darios_rhs(v: &MapState) -> Result<VectorField> {
    require_sphere2(v)?;
    let vxx = fields::spectral_derivative(v.points(), 2, v.grid());
    Ok(cross_field(v.points(), &vxx))
}

/// `u × u_xx + a[u_xxx + (3/2){uₓ × (u × uₓ)}ₓ]`.
pub fn fm_rhs(v: &MapState, a: f64) -> Result<VectorField> {
    require_sphere2(v)?;
    let grid = v.grid();
    let d = fields::spectral_derivatives(v.points(), &[1, 2, 3], grid);
    let (vx, vxx, vxxx) = (&d[0], &d[1], &d[2]);
    let inner = cross_field(vx, &cross_field(v.points(), vx));
    let inner_x = fields::spectral_derivative(&inner, 1, grid);
    let mut out = cross_field(v.points(), vxx);
    out.axpy(a, vxxx);
    out.axpy(1.5 * a, &inner_x);
    Ok(out)
}

/// Evaluates the selected model on an on-manifold curve.
pub fn model_rhs(model: Model, v: &MapState, c: &FlowCoefficients) -> Result<VectorField> {
    match model {
        Model::Dispersive => Ok(rhs_extrinsic(v, c)),
        Model::Darios => darios_rhs(v),
        Model::FukumotoMiyazaki => fm_rhs(v, c.a),
    }
}
