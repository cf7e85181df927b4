//! Gauge-weighted energies, conserved quantities and self-checks.
//!
//! The gauge factor is `K(x) = −(1/3a)∫₀ˣ g(uₓ,uₓ)`, anchored at the left
//! endpoint of the period. On a periodic grid `K` is not periodic: it splits
//! as `K = κx + P(x)` with `κ = −mean(g)/(3a)` and `P` periodic. `P` is
//! obtained by exact integration of the trigonometric interpolant, so
//! `Kₓ = −g(uₓ,uₓ)/(3a)` holds to round-off on the grid.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::fields::{
    self, cumulative_integral, l2_inner, l2_norm_sq, pointwise_inner, spectral_derivative,
    tangent_project_field, MapState, Spectrum, TangentSection, VectorField,
};
use crate::geometry::{nabla_j, TargetKind};
use crate::pde::FlowCoefficients;

/// `K = κx + P` together with `Kₓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFactor {
    /// `K(x_j)`, with `K(0) = 0`.
    pub values: Vec<f64>,
    /// `κ`, the mean slope.
    pub slope: f64,
    /// `P(x_j) = K(x_j) − κx_j`.
    pub periodic: Vec<f64>,
    /// `Kₓ(x_j) = −g(uₓ,uₓ)(x_j)/(3a)`.
    pub derivative: Vec<f64>,
}

pub fn gauge(u: &MapState, a: f64) -> GaugeFactor {
    assert!(a != 0.0, "the gauge factor requires a ≠ 0");
    let grid = u.grid();
    let ux = fields::velocity(u);
    let g = pointwise_inner(ux.vectors(), ux.vectors());
    let derivative: Vec<f64> = g.iter().map(|s| -s / (3.0 * a)).collect();
    let slope = derivative.iter().sum::<f64>() / grid.n() as f64;
    let values = cumulative_integral(&derivative, grid);
    let periodic = values.iter().enumerate().map(|(j, k)| k - slope * grid.x(j)).collect();
    GaugeFactor { values, slope, periodic, derivative }
}

/// `K(x_j)` on the grid.
pub fn gauge_factor(u: &MapState, a: f64) -> Vec<f64> {
    gauge(u, a).values
}

/// `max_x max(e^{K}, e^{−K})`.
pub fn gauge_bound(u: &MapState, a: f64) -> f64 {
    gauge_factor(u, a).iter().map(|k| k.abs()).fold(0.0, f64::max).exp()
}

/// `1 + exp(‖uₓ‖²_{L²}/(3|a|))` for a given `‖uₓ‖²_{L²}`.
pub fn gauge_constant(l2_energy: f64, a: f64) -> f64 {
    1.0 + (l2_energy / (3.0 * a.abs())).exp()
}

/// `V^{(m)} = e^K ∇ₓ^m uₓ`.
pub fn gauged_section(u: &MapState, m: usize, a: f64) -> TangentSection {
    let k = gauge_factor(u, a);
    let weights: Vec<f64> = k.iter().map(|x| x.exp()).collect();
    let d = fields::iterated_covariant(u, m);
    TangentSection::new(d[m].vectors().scale_rows(&weights))
}

fn gauge_energy_sq_from(u: &MapState, m: usize, a: f64, terms: &[f64], top: &TangentSection) -> f64 {
    let k = gauge_factor(u, a);
    let weights: Vec<f64> = k.iter().map(|x| (2.0 * x).exp()).collect();
    let g = pointwise_inner(top.vectors(), top.vectors());
    let weighted: f64 = g.iter().zip(&weights).map(|(a, b)| a * b).sum::<f64>() * u.grid().dx();
    terms[..m].iter().sum::<f64>() + weighted
}

/// `N_m = (‖uₓ‖²_{H^{m−1}} + ‖V^{(m)}‖²_{L²})^{1/2}`.
pub fn gauge_energy(u: &MapState, m: usize, a: f64) -> f64 {
    assert!(m >= 1, "N_m needs m ≥ 1");
    let d = fields::iterated_covariant(u, m);
    let terms: Vec<f64> = d.iter().map(|s| l2_norm_sq(u.grid(), s.vectors())).collect();
    gauge_energy_sq_from(u, m, a, &terms, &d[m]).sqrt()
}

/// Checks `C⁻¹‖uₓ‖_{H^m} ≤ N_m ≤ C‖uₓ‖_{H^m}`; returns the ratio
/// `N_m/‖uₓ‖_{H^m}` and whether the sandwich holds.
pub fn norm_equivalence(u: &MapState, m: usize, a: f64, constant: f64) -> (f64, bool) {
    let h = fields::sobolev_norm_sq(u, m).sqrt();
    let n = gauge_energy(u, m, a);
    if h == 0.0 {
        return (1.0, n == 0.0);
    }
    let ratio = n / h;
    (ratio, ratio <= constant * (1.0 + 1e-12) && ratio * constant >= 1.0 - 1e-12)
}

/// `E(u) = ‖∇²uₓ‖² + (K²/8)∫g³ − K∫g(uₓ,∇uₓ)² − (3K/2)∫g(uₓ,uₓ)g(∇uₓ,∇uₓ)`
/// for a surface target of constant Gauss curvature `K`.
pub fn conserved_energy(u: &MapState, curvature: f64) -> Result<f64> {
    if u.target().gauss_curvature().is_none() {
        return Err(Error::WrongTarget { expected: "a constant-curvature surface", found: u.target().name().into() });
    }
    let grid = u.grid();
    let d = fields::iterated_covariant(u, 2);
    let (ux, nux, n2ux) = (d[0].vectors(), d[1].vectors(), d[2].vectors());
    let g = pointwise_inner(ux, ux);
    let gn = pointwise_inner(ux, nux);
    let nn = pointwise_inner(nux, nux);
    let dx = grid.dx();
    let cube: f64 = g.iter().map(|s| s * s * s).sum::<f64>() * dx;
    let mixed: f64 = gn.iter().map(|s| s * s).sum::<f64>() * dx;
    let cross: f64 = g.iter().zip(&nn).map(|(a, b)| a * b).sum::<f64>() * dx;
    Ok(l2_norm_sq(grid, n2ux) + curvature * curvature / 8.0 * cube - curvature * mixed - 1.5 * curvature * cross)
}

/// Mismatch of `(1/2)d/dt‖uₓ‖² = −ε‖∇ₓ²uₓ‖²` between two consecutive
/// states, relative to `2ε‖∇ₓ²uₓ‖² + floor` with `floor = 1e−12‖uₓ‖²_{H²}`
/// (both sides averaged over the two endpoints). At `ε = 0` this is the
/// normalized rate `|Δ‖uₓ‖²/dt| / ‖uₓ‖²`.
pub fn dissipation_residual(before: &MapState, after: &MapState, c: &FlowCoefficients, dt: f64) -> f64 {
    let tb = fields::sobolev_terms(before, 2);
    let ta = fields::sobolev_terms(after, 2);
    let rate = (ta[0] - tb[0]) / dt;
    if c.epsilon == 0.0 {
        let scale = 0.5 * (ta[0] + tb[0]);
        return if scale == 0.0 { rate.abs() } else { rate.abs() / scale };
    }
    let sink = c.epsilon * (ta[2] + tb[2]);
    let floor = 1e-12 * 0.5 * (ta.iter().sum::<f64>() + tb.iter().sum::<f64>());
    let denom = sink + floor;
    if denom == 0.0 {
        return rate.abs();
    }
    (rate + sink).abs() / denom
}

fn project(u: &MapState, v: &VectorField) -> VectorField {
    tangent_project_field(u, v)
}

/// `Z ↦ P_T(κZ + Zₓ)`: the covariant derivative of `e^{κx}Z`, divided by
/// `e^{κx}`.
fn twisted_derivative(u: &MapState, z: &VectorField, slope: f64) -> VectorField {
    let mut dz = spectral_derivative(z, 1, u.grid());
    dz.axpy(slope, z);
    project(u, &dz)
}

fn scalar_derivative(values: &[f64], order: usize, u: &MapState) -> Vec<f64> {
    let f = VectorField::from_vec(1, values.to_vec());
    spectral_derivative(&f, order, u.grid()).as_slice().to_vec()
}

/// The four residuals of the gauge commutation identities
///
/// ```text
/// e^K∇^{m+1}uₓ = ∇V − KₓV
/// e^K∇^{m+2}uₓ = ∇²V − 2Kₓ∇V − (K_xx − Kₓ²)V
/// e^K∇^{m+3}uₓ = ∇³V − 3Kₓ∇²V − 3(K_xx − Kₓ²)∇V − (K_xxx − 3KₓK_xx + Kₓ³)V
/// e^K∇^{m+4}uₓ = ∇⁴V − 4Kₓ∇³V − 6(K_xx − Kₓ²)∇²V
///                − 4(K_xxx − 3KₓK_xx + Kₓ³)∇V
///                − (K_xxxx − 4KₓK_xxx − 3K_xx² + 6Kₓ²K_xx − Kₓ⁴)V
/// ```
///
/// with `V = V^{(m)}`. The left sides multiply iterated covariant
/// derivatives by `e^K`; the right sides covariantly differentiate the
/// gauged section itself. Both sides carry the common factor `e^{κx}`,
/// which is divided out before comparison, and the base section `∇ₓ^m uₓ`
/// is 2/3-band-limited (then re-projected) so that products with `e^P`
/// do not alias. Each residual is the max-norm difference relative to the
/// largest term of its identity.
pub fn appendix_residuals(u: &MapState, m: usize, a: f64) -> [f64; 4] {
    assert!(m >= 1, "the gauge identities need m ≥ 1");
    let gauge = gauge(u, a);
    let d = fields::iterated_covariant(u, m);
    let mut spec = Spectrum::of(d[m].vectors());
    spec.truncate_two_thirds();
    let base = TangentSection::new(project(u, &spec.to_field()));
    if base.vectors().max_norm() == 0.0 {
        return [0.0; 4];
    }

    let ep: Vec<f64> = gauge.periodic.iter().map(|p| p.exp()).collect();
    let mut lhs = Vec::with_capacity(4);
    let mut s = base.clone();
    for _ in 0..4 {
        s = fields::covariant_derivative(u, &s);
        lhs.push(s.vectors().scale_rows(&ep));
    }
    let mut z = vec![base.vectors().scale_rows(&ep)];
    for j in 0..4 {
        let next = twisted_derivative(u, &z[j], gauge.slope);
        z.push(next);
    }
    let k1 = gauge.derivative.clone();
    let k2 = scalar_derivative(&k1, 1, u);
    let k3 = scalar_derivative(&k1, 2, u);
    let k4 = scalar_derivative(&k1, 3, u);
    let n = u.n();
    let c2: Vec<f64> = (0..n).map(|j| k2[j] - k1[j].powi(2)).collect();
    let c3: Vec<f64> = (0..n).map(|j| k3[j] - 3.0 * k1[j] * k2[j] + k1[j].powi(3)).collect();
    let c4: Vec<f64> = (0..n)
        .map(|j| {
            k4[j] - 4.0 * k1[j] * k3[j] - 3.0 * k2[j].powi(2) + 6.0 * k1[j].powi(2) * k2[j] - k1[j].powi(4)
        })
        .collect();
    let scaled = |w: &VectorField, f: &[f64], s: f64| -> VectorField {
        let weights: Vec<f64> = f.iter().map(|x| x * s).collect();
        w.scale_rows(&weights)
    };
    let ones = vec![1.0; n];
    let identities: [Vec<VectorField>; 4] = [
        vec![z[1].clone(), scaled(&z[0], &k1, -1.0)],
        vec![z[2].clone(), scaled(&z[1], &k1, -2.0), scaled(&z[0], &c2, -1.0)],
        vec![z[3].clone(), scaled(&z[2], &k1, -3.0), scaled(&z[1], &c2, -3.0), scaled(&z[0], &c3, -1.0)],
        vec![
            scaled(&z[4], &ones, 1.0),
            scaled(&z[3], &k1, -4.0),
            scaled(&z[2], &c2, -6.0),
            scaled(&z[1], &c3, -4.0),
            scaled(&z[0], &c4, -1.0),
        ],
    ];
    let mut out = [0.0; 4];
    for (k, terms) in identities.iter().enumerate() {
        let mut diff = lhs[k].clone();
        let mut scale = lhs[k].max_norm();
        for t in terms {
            diff.axpy(-1.0, t);
            scale = scale.max(t.max_norm());
        }
        out[k] = if scale == 0.0 { 0.0 } else { diff.max_norm() / scale };
    }
    out
}

/// Largest of the four [`appendix_residuals`].
pub fn appendix_commutator_check(u: &MapState, m: usize, a: f64) -> f64 {
    appendix_residuals(u, m, a).into_iter().fold(0.0, f64::max)
}

/// `|∫g((∇ₓJ)V, V)| / ‖V‖²`.
pub fn nabla_j_energy_pairing_check(u: &MapState, v: &TangentSection) -> f64 {
    let norm = l2_norm_sq(u.grid(), v.vectors());
    if norm == 0.0 {
        return 0.0;
    }
    let nj = nabla_j(u, v);
    l2_inner(u.grid(), nj.vectors(), v.vectors()).abs() / norm
}

/// `|∫g((∇ₓJ)V, W) + ∫g(V, (∇ₓJ)W)| / (‖V‖‖W‖)`.
pub fn nabla_j_symmetrized_pairing(u: &MapState, v: &TangentSection, w: &TangentSection) -> f64 {
    let grid = u.grid();
    let denom = (l2_norm_sq(grid, v.vectors()) * l2_norm_sq(grid, w.vectors())).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    let s = l2_inner(grid, nabla_j(u, v).vectors(), w.vectors()) + l2_inner(grid, v.vectors(), nabla_j(u, w).vectors());
    s.abs() / denom
}

/// What a [`DiagnosticsRecord`] should contain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsSettings {
    pub order: usize,
    pub coefficients: FlowCoefficients,
    /// Record `E(u)` (surface targets only).
    pub track_energy: bool,
}

/// One row of diagnostics at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `‖uₓ‖²_{L²}`.
    pub l2_energy: f64,
    /// `‖uₓ‖²_{H^j}` for `j = 0..=m`.
    pub sobolev: Vec<f64>,
    /// `N_m²`; absent when `a = 0`.
    pub gauge_energy_sq: Option<f64>,
    pub conserved_e: Option<f64>,
    pub constraint_violation: f64,
    /// Against the previous record's state, when there is one.
    pub dissipation_residual: Option<f64>,
    /// `max|e^{±K}|`; absent when `a = 0`.
    pub gauge_bound: Option<f64>,
}

impl DiagnosticsRecord {
    /// Computes every quantity from the state itself. `previous` is the
    /// state one step earlier, with the step length.
    pub fn compute(u: &MapState, settings: &DiagnosticsSettings, previous: Option<(&MapState, f64)>) -> Self {
        let m = settings.order;
        let a = settings.coefficients.a;
        let d = fields::iterated_covariant(u, m);
        let terms: Vec<f64> = d.iter().map(|s| l2_norm_sq(u.grid(), s.vectors())).collect();
        let sobolev = terms
            .iter()
            .scan(0.0, |acc, t| {
                *acc += t;
                Some(*acc)
            })
            .collect();
        let gauged = a != 0.0 && m >= 1;
        let conserved_e = match (settings.track_energy, u.target().gauss_curvature()) {
            (true, Some(k)) => conserved_energy(u, k).ok(),
            _ => None,
        };
        Self {
            t: u.time(),
            l2_energy: terms[0],
            sobolev,
            gauge_energy_sq: gauged.then(|| gauge_energy_sq_from(u, m, a, &terms, &d[m])),
            conserved_e,
            constraint_violation: u.constraint_violation(),
            dissipation_residual: previous
                .map(|(before, dt)| dissipation_residual(before, u, &settings.coefficients, dt)),
            gauge_bound: (a != 0.0).then(|| gauge_bound(u, a)),
        }
    }

    /// `N_m`.
    pub fn gauge_energy(&self) -> Option<f64> {
        self.gauge_energy_sq.map(f64::sqrt)
    }
}

/// `t,l2,h1,...,hm,N_m,E,constraint,dissipation_residual,gauge_bound`.
pub fn csv_header(m: usize) -> String {
    let mut cols = vec!["t".to_string(), "l2".to_string()];
    cols.extend((1..=m).map(|j| format!("h{j}")));
    cols.extend(["N_m", "E", "constraint", "dissipation_residual", "gauge_bound"].map(String::from));
    cols.join(",")
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// One CSV row matching [`csv_header`]. Values use the shortest
/// round-trip representation.
pub fn csv_row(r: &DiagnosticsRecord) -> String {
    let mut cols = vec![format!("{:e}", r.t)];
    cols.extend(r.sobolev.iter().map(|v| format!("{v:e}")));
    cols.push(opt(r.gauge_energy()));
    cols.push(opt(r.conserved_e));
    cols.push(format!("{:e}", r.constraint_violation));
    cols.push(opt(r.dissipation_residual));
    cols.push(opt(r.gauge_bound));
    cols.join(",")
}

pub fn write_csv<W: Write>(mut w: W, m: usize, records: &[DiagnosticsRecord]) -> Result<()> {
    writeln!(w, "{}", csv_header(m))?;
    for r in records {
        writeln!(w, "{}", csv_row(r))?;
    }
    Ok(())
}

/// Per-run summary, serialized with a fixed key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub termination: String,
    pub t_final: f64,
    pub max_constraint: f64,
    pub max_drift_l2: f64,
    pub max_drift_e: Option<f64>,
    #[serde(rename = "doubling_time_N4")]
    pub doubling_time_n4: Option<f64>,
}

fn max_relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    let Some(&first) = values.first() else { return 0.0 };
    let scale = if first == 0.0 { 1.0 } else { first.abs() };
    values.iter().map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
}

impl RunSummary {
    pub fn from_records(termination: &str, t_final: f64, records: &[DiagnosticsRecord], doubling_time_n4: Option<f64>) -> Self {
        let energies: Vec<f64> = records.iter().filter_map(|r| r.conserved_e).collect();
        Self {
            termination: termination.to_string(),
            t_final,
            max_constraint: records.iter().map(|r| r.constraint_violation).fold(0.0, f64::max),
            max_drift_l2: max_relative_drift(records.iter().map(|r| r.l2_energy)),
            max_drift_e: (!energies.is_empty()).then(|| max_relative_drift(energies.into_iter())),
            doubling_time_n4,
        }
    }
}

/// Sphere6 and Kähler-only quantities are guarded by this.
pub fn supports_conserved_energy(kind: TargetKind) -> bool {
    matches!(kind, TargetKind::Sphere2 | TargetKind::CliffordTorus2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::geometry::TargetManifold;
    use crate::initial::{make_initial_data, InitialData};
    use std::f64::consts::PI;

    fn state(data: InitialData, n: usize, t: TargetManifold) -> MapState {
        make_initial_data(&data, &Grid::new(n, 2.0 * PI).unwrap(), t).unwrap()
    }

    #[test]
    fn gauge_of_constant_map_vanishes() {
        let u = state(InitialData::Constant { point: None }, 32, TargetManifold::sphere2());
        assert!(gauge_factor(&u, 1.0).iter().all(|k| *k == 0.0));
        assert_eq!(gauge_energy(&u, 4, 1.0), 0.0);
        assert_eq!(appendix_commutator_check(&u, 4, 1.0), 0.0);
    }

    #[test]
    fn great_circle_gauge_is_linear() {
        let u = state(InitialData::GreatCircle { k: 2 }, 64, TargetManifold::sphere2());
        let a = 0.7;
        let c0sq = 4.0;
        let k = gauge_factor(&u, a);
        for (j, kj) in k.iter().enumerate() {
            let x = u.grid().x(j);
            assert!((kj + c0sq * x / (3.0 * a)).abs() < 1e-10);
        }
        // N_4² = ‖uₓ‖²_{H³} + ∫e^{2K}|∇⁴uₓ|² and ∇uₓ = 0 ⇒ N_4² = c₀²L
        let n4 = gauge_energy(&u, 4, a);
        assert!((n4 * n4 - c0sq * 2.0 * PI).abs() < 1e-8);
        // m = 0 slot: ∫e^{2K}c₀² over the period in closed form
        let d = fields::iterated_covariant(&u, 0);
        let weights: Vec<f64> = k.iter().map(|x| (2.0 * x).exp()).collect();
        let quad: f64 = pointwise_inner(d[0].vectors(), d[0].vectors())
            .iter()
            .zip(&weights)
            .map(|(g, w)| g * w)
            .sum::<f64>()
            * u.grid().dx();
        let slope = -2.0 * c0sq / (3.0 * a);
        let exact = c0sq * ((slope * 2.0 * PI).exp() - 1.0) / slope;
        // rectangle rule on a non-periodic exponential: first-order accurate
        assert!((quad - exact).abs() < 0.2 * exact);
    }

    #[test]
    fn gauge_bound_and_sandwich_on_random_curves() {
        for seed in 0..5 {
            for t in [TargetManifold::sphere2(), TargetManifold::sphere6()] {
                let u = state(InitialData::RandomAnalytic { seed, max_frequency: 2 }, 128, t);
                let a = 1.5;
                let l2 = fields::sobolev_terms(&u, 0)[0];
                let c = gauge_constant(l2, a);
                assert!(gauge_bound(&u, a) <= c);
                let (_, ok) = norm_equivalence(&u, 4, a, c);
                assert!(ok);
                let v = gauged_section(&u, 2, a);
                let plain = fields::iterated_covariant(&u, 2);
                let k = gauge_factor(&u, a);
                for ((x, y), kj) in v.vectors().iter().zip(plain[2].vectors().iter()).zip(&k) {
                    let lhs = crate::geometry::norm(x);
                    let rhs = kj.exp() * crate::geometry::norm(y);
                    assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
                }
            }
        }
    }

    #[test]
    fn conserved_energy_closed_forms() {
        let u = state(InitialData::GreatCircle { k: 1 }, 64, TargetManifold::sphere2());
        let e = conserved_energy(&u, 1.0).unwrap();
        assert!((e - 2.0 * PI / 8.0).abs() < 1e-10);
        let w = state(InitialData::TorusWinding { k1: 1, k2: 2 }, 64, TargetManifold::clifford_torus());
        assert!(conserved_energy(&w, 0.0).unwrap().abs() < 1e-10);
        let r = state(InitialData::RandomAnalytic { seed: 3, max_frequency: 2 }, 64, TargetManifold::clifford_torus());
        let expect = fields::sobolev_terms(&r, 2)[2];
        assert!((conserved_energy(&r, 0.0).unwrap() - expect).abs() < 1e-12 * expect);
        let s6 = state(InitialData::S6Circle { plane: [0, 1] }, 32, TargetManifold::sphere6());
        assert!(matches!(conserved_energy(&s6, 1.0), Err(Error::WrongTarget { .. })));
    }

    #[test]
    fn appendix_identities_hold_on_geodesic_and_random_curves() {
        let g = state(InitialData::S6Circle { plane: [1, 4] }, 64, TargetManifold::sphere6());
        assert!(appendix_commutator_check(&g, 4, 1.0) < 1e-10);
        let u = state(InitialData::RandomAnalytic { seed: 11, max_frequency: 1 }, 256, TargetManifold::sphere6());
        let r = appendix_residuals(&u, 4, 1.0);
        assert!(r.iter().all(|x| *x < 1e-8), "{r:?}");
    }

    #[test]
    fn kahler_pairing_vanishes_and_s6_pairing_is_antisymmetric() {
        let u = state(InitialData::RandomAnalytic { seed: 5, max_frequency: 2 }, 128, TargetManifold::sphere2());
        let v = fields::iterated_covariant(&u, 1).pop().unwrap();
        assert!(nabla_j_energy_pairing_check(&u, &v) < 1e-10);
        let s = state(InitialData::RandomAnalytic { seed: 5, max_frequency: 2 }, 128, TargetManifold::sphere6());
        let d = fields::iterated_covariant(&s, 2);
        assert!(nabla_j_energy_pairing_check(&s, &d[2]) < 1e-8);
        assert!(nabla_j_symmetrized_pairing(&s, &d[1], &d[2]) < 1e-8);
        assert!(nabla_j(&s, &d[1]).vectors().max_norm() > 1e-2);
    }

    #[test]
    fn csv_layout() {
        assert_eq!(csv_header(2), "t,l2,h1,h2,N_m,E,constraint,dissipation_residual,gauge_bound");
        let r = DiagnosticsRecord {
            t: 0.5,
            l2_energy: 1.0,
            sobolev: vec![1.0, 2.0, 3.0],
            gauge_energy_sq: Some(4.0),
            conserved_e: None,
            constraint_violation: 0.0,
            dissipation_residual: None,
            gauge_bound: Some(1.5),
        };
        assert_eq!(csv_row(&r), "5e-1,1e0,2e0,3e0,2e0,,0e0,,1.5e0");
    }

    #[test]
    fn summary_key_order_is_stable() {
        let s = RunSummary::from_records("completed", 1.0, &[], None);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"termination":"completed","t_final":1.0,"max_constraint":0.0,"max_drift_l2":0.0,"max_drift_e":null,"doubling_time_N4":null}"#
        );
    }
}
