//! Time integration.
//!
//! The state is advanced in Fourier space with classical RK4 in the
//! interaction picture (integrating factor): the constant-coefficient linear
//! part `−ε∂ₓ⁴ + a∂ₓ³` is solved exactly and only
//! `N(Q) = F(π∘Q) − aQ_xxx` is treated explicitly. Every stage evaluates the
//! nonlinearity on the projected curve, so a stage that leaves the tube
//! terminates the run. After a step the points are projected back onto the
//! target according to [`Projection`].

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::diagnostics::{self, DiagnosticsRecord, DiagnosticsSettings, RunSummary};
use crate::error::{Error, Result};
use crate::fields::{derivative_symbol, l2_norm_sq, Grid, MapState, Spectrum, VectorField};
use crate::geometry::TargetKind;
use crate::pde::{self, FlowCoefficients, Model};

/// Default `C_cfl`.
pub const DEFAULT_CFL: f64 = 0.5;
/// Default ratio of `‖uₓ‖_{H¹}` to its initial value that counts as blowup.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e3;
/// Number of snapshots aimed for when no stride is configured.
const AUTO_SNAPSHOTS: usize = 100;
/// Steps between evaluations of the `N₄` doubling detector.
const DOUBLING_CHECK_STRIDE: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

/// When to project the state back onto the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    EveryStep,
    EveryKSteps(usize),
    None,
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Projection::EveryStep => f.write_str("every_step"),
            Projection::EveryKSteps(k) => write!(f, "every_k_steps({k})"),
            Projection::None => f.write_str("none"),
        }
    }
}

impl FromStr for Projection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "every_step" => return Ok(Projection::EveryStep),
            "none" => return Ok(Projection::None),
            _ => {}
        }
        let k = s
            .strip_prefix("every_k_steps(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|k| k.trim().parse::<usize>().ok())
            .filter(|k| *k >= 1)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "projection `{s}` must be every_step, every_k_steps(k) with k ≥ 1, or none"
                ))
            })?;
        Ok(Projection::EveryKSteps(k))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub model: Model,
    pub coefficients: FlowCoefficients,
    pub dt: TimeStep,
    pub cfl: f64,
    /// Final time. May be earlier than the initial time for a backward
    /// run (only without regularization).
    pub t_end: f64,
    pub projection: Projection,
    /// Order `m` of the Sobolev and gauge diagnostics.
    pub diag_order: usize,
    /// Steps between snapshots; `None` aims for about 100 snapshots.
    pub snapshot_stride: Option<usize>,
    pub epsilon_schedule: Option<Vec<f64>>,
    pub blowup_factor: f64,
    pub track_energy: bool,
    /// 2/3-rule truncation of the explicit remainder.
    pub dealias: bool,
}

impl SolverConfig {
    pub fn new(model: Model, coefficients: FlowCoefficients, t_end: f64) -> Self {
        Self {
            model,
            coefficients,
            dt: TimeStep::Auto,
            cfl: DEFAULT_CFL,
            t_end,
            projection: Projection::EveryStep,
            diag_order: 4,
            snapshot_stride: None,
            epsilon_schedule: None,
            blowup_factor: DEFAULT_BLOWUP_FACTOR,
            track_energy: false,
            dealias: true,
        }
    }

    /// Checks the model/coefficient combination and solver settings.
    pub fn validate(&self, target: TargetKind) -> Result<()> {
        let c = &self.coefficients;
        match self.model {
            Model::Dispersive => c.validate()?,
            Model::Darios | Model::FukumotoMiyazaki => {
                if target != TargetKind::Sphere2 {
                    return Err(Error::Validation(format!("model `{}` is defined on s2 only", self.model)));
                }
                if c.epsilon != 0.0 || self.epsilon_schedule.is_some() {
                    return Err(Error::Validation(format!("model `{}` has no regularization; set epsilon = 0", self.model)));
                }
            }
        }
        if !self.t_end.is_finite() {
            return Err(Error::Validation("t_end must be finite".into()));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::Validation(format!("dt = {dt} must be positive")));
            }
        }
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(Error::Validation(format!("cfl = {} must be positive", self.cfl)));
        }
        if !(self.blowup_factor > 1.0) {
            return Err(Error::Validation("blowup ceiling factor must exceed 1".into()));
        }
        if let Projection::EveryKSteps(0) = self.projection {
            return Err(Error::Validation("every_k_steps needs k ≥ 1".into()));
        }
        if self.snapshot_stride == Some(0) {
            return Err(Error::Validation("snapshot_stride must be at least 1".into()));
        }
        let kahler = matches!(target, TargetKind::Sphere2 | TargetKind::CliffordTorus2);
        let min_order = if kahler { 2 } else { 4 };
        if self.diag_order < min_order || self.diag_order > crate::fields::MAX_COVARIANT_ORDER {
            return Err(Error::Validation(format!(
                "diag_order = {} out of range: the gauge energy needs m ≥ {min_order} on this target",
                self.diag_order
            )));
        }
        if self.track_energy && !diagnostics::supports_conserved_energy(target) {
            return Err(Error::Validation(
                "E(u) is defined only for constant-curvature surface targets (s2, t2-clifford)".into(),
            ));
        }
        if let Some(schedule) = &self.epsilon_schedule {
            if schedule.is_empty() {
                return Err(Error::Validation("epsilon_schedule is empty".into()));
            }
            for w in schedule.windows(2) {
                if !(w[1] < w[0]) {
                    return Err(Error::Validation("epsilon_schedule must be strictly decreasing".into()));
                }
            }
            for &e in schedule {
                FlowCoefficients { epsilon: e, ..*c }.validate()?;
            }
        }
        Ok(())
    }

    /// The step length actually used on `grid` (before the last step is
    /// shortened to land on `t_end`).
    pub fn step_size(&self, grid: &Grid) -> f64 {
        match self.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto => auto_dt(grid, &self.coefficients, self.cfl),
        }
    }
}

/// `C·min(dx³/(|a| + ε/dx), 2dx²/π²)`.
///
/// The first bound is the dispersive/parabolic CFL scale; the second keeps
/// the explicit second-order Schrödinger part `J∇ₓuₓ` stable when `a` and
/// `ε` both vanish.
pub fn auto_dt(grid: &Grid, c: &FlowCoefficients, cfl: f64) -> f64 {
    let dx = grid.dx();
    let dispersive = dx.powi(3) / (c.a.abs() + c.epsilon / dx);
    let schrodinger = 2.0 * dx * dx / (std::f64::consts::PI * std::f64::consts::PI);
    cfl * dispersive.min(schrodinger)
}

/// `e^{−εt∂ₓ⁴}φ`.
pub fn heat_semigroup(phi: &VectorField, grid: &Grid, epsilon: f64, t: f64) -> VectorField {
    let m: Vec<Complex64> =
        (0..grid.n()).map(|j| Complex64::new((-epsilon * t * grid.wavenumber(j).powi(4)).exp(), 0.0)).collect();
    Spectrum::of(phi).multiplied(&m).to_field()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "t", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    TubeExceeded(f64),
    BlowupDetected(f64),
    UserAbort(f64),
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::TubeExceeded(_) => "tube_exceeded",
            Termination::BlowupDetected(_) => "blowup_detected",
            Termination::UserAbort(_) => "user_abort",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<MapState>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub termination: Termination,
    pub steps: usize,
    /// Nominal step length.
    pub dt: f64,
    /// First sampled time at which `N₄` exceeded twice its initial value.
    pub doubling_time_n4: Option<f64>,
}

impl Trajectory {
    pub fn final_state(&self) -> &MapState {
        self.snapshots.last().expect("a trajectory always holds the initial snapshot")
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary::from_records(
            self.termination.name(),
            self.final_state().time(),
            &self.diagnostics,
            self.doubling_time_n4,
        )
    }
}

/// The integrating-factor RK4 stepper for one model on one grid.
#[derive(Debug, Clone)]
pub struct Stepper {
    model: Model,
    coefficients: FlowCoefficients,
    grid: Grid,
    target: crate::geometry::TargetManifold,
    /// Symbol of `−ε∂ₓ⁴ + a∂ₓ³`.
    linear: Vec<Complex64>,
    /// Symbol of `a∂ₓ³`, removed from the explicit part.
    dispersive: Vec<Complex64>,
    dealias: bool,
}

fn combine(out: &mut Spectrum, s: f64, x: &Spectrum) {
    for (o, v) in out.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *o += v * s;
    }
}

impl Stepper {
    pub fn new(model: Model, coefficients: FlowCoefficients, state: &MapState, dealias: bool) -> Self {
        let grid = *state.grid();
        let a = match model {
            Model::Darios => 0.0,
            _ => coefficients.a,
        };
        let eps = match model {
            Model::Dispersive => coefficients.epsilon,
            _ => 0.0,
        };
        let d3 = derivative_symbol(&grid, 3);
        let d4 = derivative_symbol(&grid, 4);
        let dispersive: Vec<Complex64> = d3.iter().map(|z| z * a).collect();
        let linear = dispersive.iter().zip(&d4).map(|(z, w)| z - w * eps).collect();
        Self { model, coefficients, grid, target: state.target(), linear, dispersive, dealias }
    }

    /// `N̂(Q̂)`: transform of the model evaluated on `π∘Q` minus the
    /// dispersive linear part.
    fn remainder(&self, q_hat: &Spectrum) -> Result<Spectrum> {
        let q = MapState::from_raw(self.grid, 0.0, q_hat.to_field(), self.target)?;
        let v = q.projected()?;
        let f = match self.model {
            Model::Dispersive => pde::nonlinearity(&v, &self.coefficients),
            Model::Darios => pde::darios_rhs(&v)?,
            Model::FukumotoMiyazaki => pde::fm_rhs(&v, self.coefficients.a)?,
        };
        let mut out = Spectrum::of(&f);
        combine(&mut out, -1.0, &q_hat.multiplied(&self.dispersive));
        if self.dealias {
            out.truncate_two_thirds();
        }
        Ok(out)
    }

    /// One Lawson-RK4 step of length `h` (negative `h` integrates
    /// backwards). The result is not projected.
    pub fn step_spectrum(&self, v_hat: &Spectrum, h: f64) -> Result<Spectrum> {
        let half: Vec<Complex64> = self.linear.iter().map(|l| (l * (0.5 * h)).exp()).collect();
        let full: Vec<Complex64> = half.iter().map(|e| e * e).collect();
        let k1 = self.remainder(v_hat)?;
        let mut s = v_hat.clone();
        combine(&mut s, 0.5 * h, &k1);
        s.apply_multiplier(&half);
        let k2 = self.remainder(&s)?;
        let ev = v_hat.multiplied(&half);
        let mut s = ev.clone();
        combine(&mut s, 0.5 * h, &k2);
        let k3 = self.remainder(&s)?;
        let mut s = ev.multiplied(&half);
        combine(&mut s, h, &k3.multiplied(&half));
        let k4 = self.remainder(&s)?;
        let mut out = v_hat.multiplied(&full);
        combine(&mut out, h / 6.0, &k1.multiplied(&full));
        let mut mid = k2;
        combine(&mut mid, 1.0, &k3);
        combine(&mut out, h / 3.0, &mid.multiplied(&half));
        combine(&mut out, h / 6.0, &k4);
        Ok(out)
    }

    /// Advances `state` by `h`, projecting afterwards when `project` is set.
    pub fn step(&self, state: &MapState, h: f64, project: bool) -> Result<MapState> {
        let next = self.step_spectrum(&Spectrum::of(state.points()), h)?;
        let raw = MapState::from_raw(self.grid, state.time() + h, next.to_field(), self.target)?;
        if project {
            raw.projected()
        } else {
            Ok(raw)
        }
    }
}

/// `‖uₓ‖²_{L²} + ‖u_xx‖²_{L²}` of the ambient curve, from its spectrum.
fn h1_proxy_sq(v_hat: &Spectrum, grid: &Grid) -> f64 {
    let n = grid.n();
    let weights: Vec<f64> = (0..n)
        .map(|j| {
            let k2 = grid.wavenumber(j).powi(2);
            k2 + k2 * k2
        })
        .collect();
    let mut total = 0.0;
    for c in 0..v_hat.dim() {
        total += v_hat.column(c).iter().zip(&weights).map(|(z, w)| z.norm_sqr() * w).sum::<f64>();
    }
    total * grid.length() / (n * n) as f64
}

/// `run` for a state that already satisfies the config's preconditions.
pub fn run(initial: &MapState, cfg: &SolverConfig) -> Result<Trajectory> {
    run_with_abort(initial, cfg, &AtomicBool::new(false))
}

/// Like [`run`], checking `abort` between steps.
pub fn run_with_abort(initial: &MapState, cfg: &SolverConfig, abort: &AtomicBool) -> Result<Trajectory> {
    cfg.validate(initial.target().kind())?;
    let grid = *initial.grid();
    let t0 = initial.time();
    let span = cfg.t_end - t0;
    if span < 0.0 && cfg.coefficients.epsilon > 0.0 && cfg.model == Model::Dispersive {
        return Err(Error::Validation("backward integration is ill-posed with epsilon > 0".into()));
    }
    let dt = cfg.step_size(&grid);
    let direction = if span < 0.0 { -1.0 } else { 1.0 };
    let total_steps = (span.abs() / dt - 1e-9).ceil().max(0.0) as usize;
    let stride = cfg.snapshot_stride.unwrap_or_else(|| (total_steps / AUTO_SNAPSHOTS).max(1));
    let stepper = Stepper::new(cfg.model, cfg.coefficients, initial, cfg.dealias);

    let diag_a = match cfg.model {
        Model::Darios => 0.0,
        _ => cfg.coefficients.a,
    };
    let settings = DiagnosticsSettings {
        order: cfg.diag_order,
        coefficients: FlowCoefficients { a: diag_a, ..cfg.coefficients },
        track_energy: cfg.track_energy,
    };
    let gauge_on = diag_a != 0.0;
    let n4_initial = gauge_on.then(|| diagnostics::gauge_energy(initial, 4, diag_a));
    let mut doubling_time_n4 = None;

    let initial_proxy = h1_proxy_sq(&Spectrum::of(initial.points()), &grid).sqrt();
    let ceiling = cfg.blowup_factor * initial_proxy.max(1.0);

    let mut snapshots = vec![initial.clone()];
    let mut records = vec![DiagnosticsRecord::compute(initial, &settings, None)];
    let mut state = initial.clone();
    let mut termination = Termination::Completed;
    let mut steps = 0;

    while steps < total_steps {
        if abort.load(Ordering::Relaxed) {
            termination = Termination::UserAbort(state.time());
            break;
        }
        let remaining = cfg.t_end - state.time();
        let h = direction * dt.min(remaining.abs());
        let project = match cfg.projection {
            Projection::EveryStep => true,
            Projection::EveryKSteps(k) => (steps + 1) % k == 0 || steps + 1 == total_steps,
            Projection::None => false,
        };
        let next = match stepper.step(&state, h, project) {
            Ok(s) => s,
            Err(Error::TubeExceeded { .. }) => {
                termination = Termination::TubeExceeded(state.time());
                break;
            }
            Err(e) => return Err(e),
        };
        steps += 1;
        let last = steps == total_steps;
        let next = if last { next.with_time(cfg.t_end) } else { next };

        let proxy = h1_proxy_sq(&Spectrum::of(next.points()), &grid).sqrt();
        if !(proxy <= ceiling) {
            termination = Termination::BlowupDetected(next.time());
            break;
        }
        let mut record_now = steps % stride == 0 || last;
        if let (Some(n0), None) = (n4_initial, doubling_time_n4) {
            if steps % DOUBLING_CHECK_STRIDE == 0 || last {
                let n4 = diagnostics::gauge_energy(&next, 4, diag_a);
                if n0 > 0.0 && n4 > 2.0 * n0 {
                    doubling_time_n4 = Some(next.time());
                    record_now = true;
                }
            }
        }
        if record_now {
            records.push(DiagnosticsRecord::compute(&next, &settings, Some((&state, h))));
            snapshots.push(next.clone());
        }
        state = next;
    }
    if snapshots.last().map(|s| s.time()) != Some(state.time()) {
        records.push(DiagnosticsRecord::compute(&state, &settings, None));
        snapshots.push(state);
    }
    Ok(Trajectory { snapshots, diagnostics: records, termination, steps, dt, doubling_time_n4 })
}

/// Terminal states of an `ε`-schedule and the gaps between neighbours.
#[derive(Debug, Clone)]
pub struct Continuation {
    pub epsilons: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    /// `‖u^{εᵢ} − u^{εᵢ₊₁}‖_{L²}` at the final time.
    pub gaps: Vec<f64>,
}

/// Runs the configured `ε`-schedule as independent trajectories.
pub fn continuation(initial: &MapState, cfg: &SolverConfig) -> Result<Continuation> {
    continuation_with_abort(initial, cfg, &AtomicBool::new(false))
}

/// Like [`continuation`], with every member run checking `abort`.
pub fn continuation_with_abort(initial: &MapState, cfg: &SolverConfig, abort: &AtomicBool) -> Result<Continuation> {
    let schedule = cfg
        .epsilon_schedule
        .clone()
        .ok_or_else(|| Error::Validation("continuation needs an epsilon_schedule".into()))?;
    cfg.validate(initial.target().kind())?;
    let trajectories = schedule
        .par_iter()
        .map(|&eps| {
            let mut c = cfg.clone();
            c.coefficients.epsilon = eps;
            c.epsilon_schedule = None;
            run_with_abort(initial, &c, abort)
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = *initial.grid();
    let gaps = trajectories
        .windows(2)
        .map(|w| l2_norm_sq(&grid, &w[0].final_state().points().sub(w[1].final_state().points())).sqrt())
        .collect();
    Ok(Continuation { epsilons: schedule, trajectories, gaps })
}

/// Output of [`duhamel_reference`].
#[derive(Debug, Clone)]
pub struct DuhamelReference {
    /// Final-time value of the last Picard iterate (tube-valued).
    pub state: MapState,
    /// `X_T` distances between successive iterates.
    pub distances: Vec<f64>,
}

/// Default number of time intervals for the Duhamel quadrature.
pub const DEFAULT_DUHAMEL_NODES: usize = 64;

fn x_t_norm(w: &VectorField, grid: &Grid) -> f64 {
    let spec = Spectrum::of(w);
    let n = grid.n();
    let mut sum = 0.0;
    for c in 0..spec.dim() {
        for (j, z) in spec.column(c).iter().enumerate() {
            let k2 = grid.wavenumber(j).powi(2);
            sum += z.norm_sqr() * (k2 + k2 * k2 + k2 * k2 * k2);
        }
    }
    w.max_norm() + (sum * grid.length() / (n * n) as f64).sqrt()
}

/// Picard iteration of `Lv(t) = e^{−εt∂⁴}v₀ + ∫₀ᵗ e^{−ε(t−s)∂⁴}F(π∘v(s))ds`
/// on a uniform mesh of `nodes` intervals with trapezoid quadrature,
/// starting from the pure semigroup orbit. Distances are measured in
/// `sup_t ‖·‖_{L∞} + sup_t ‖(·)ₓ‖_{H²}`.
pub fn duhamel_reference(initial: &MapState, cfg: &SolverConfig, picard_iters: usize, nodes: usize) -> Result<DuhamelReference> {
    let c = cfg.coefficients;
    if cfg.model != Model::Dispersive || !(c.epsilon > 0.0) {
        return Err(Error::Validation("the Duhamel reference needs the dispersive model with epsilon > 0".into()));
    }
    if nodes == 0 {
        return Err(Error::Validation("the Duhamel reference needs at least one time interval".into()));
    }
    let grid = *initial.grid();
    let target = initial.target();
    let t_span = cfg.t_end - initial.time();
    if !(t_span > 0.0) {
        return Err(Error::Validation("t_end must exceed the initial time".into()));
    }
    let h = t_span / nodes as f64;
    let v0 = initial.points();
    let free: Vec<VectorField> = (0..=nodes).map(|i| heat_semigroup(v0, &grid, c.epsilon, i as f64 * h)).collect();
    let mut iterate = free.clone();
    let mut distances = Vec::with_capacity(picard_iters);
    for sweep in 1..=picard_iters {
        let forcing = iterate
            .iter()
            .map(|v| {
                let q = MapState::from_raw(grid, 0.0, v.clone(), target)?;
                Ok(pde::nonlinearity(&q.projected()?, &c))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut next = Vec::with_capacity(nodes + 1);
        next.push(v0.clone());
        let mut integral = VectorField::zeros(grid.n(), target.ambient_dim());
        for i in 0..nodes {
            let mut carried = integral.clone();
            carried.axpy(0.5 * h, &forcing[i]);
            integral = heat_semigroup(&carried, &grid, c.epsilon, h);
            integral.axpy(0.5 * h, &forcing[i + 1]);
            let mut v = free[i + 1].clone();
            v.axpy(1.0, &integral);
            next.push(v);
        }
        let distance = next
            .iter()
            .zip(&iterate)
            .map(|(a, b)| {
                let d = a.sub(b);
                let dx = crate::fields::spectral_derivative(&d, 1, &grid);
                (d.max_norm(), x_t_norm(&dx, &grid) - dx.max_norm())
            })
            .fold((0.0f64, 0.0f64), |acc, (a, b)| (acc.0.max(a), acc.1.max(b)));
        let distance = distance.0 + distance.1;
        if let Some(&previous) = distances.last() {
            let floor = 1e-12 * x_t_norm(v0, &grid);
            if distance >= previous && previous > floor {
                return Err(Error::NoContraction { sweep, previous, current: distance });
            }
        }
        distances.push(distance);
        iterate = next;
    }
    let state = MapState::from_raw(grid, cfg.t_end, iterate.pop().expect("nodes ≥ 1"), target)?;
    Ok(DuhamelReference { state, distances })
}
