//! Running configured experiments and writing their artifacts.
//!
//! A run directory holds `snapshots.jsonl` (one [`Snapshot`] per line),
//! `diagnostics.csv` and `summary.json`. An ε-schedule writes one such
//! directory per ε (`eps-0`, `eps-1`, …) plus `continuation.json`.

use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::AtomicBool;

use crate::config::{Check, ExperimentConfig};
use crate::diagnostics::{self, DiagnosticsRecord, DiagnosticsSettings, RunSummary};
use crate::error::{Error, Result};
use crate::fields::{self, l2_norm_sq, MapState, Snapshot, CONSTRAINT_TOLERANCE};
use crate::geometry::nabla_j;
use crate::initial::make_initial_data;
use crate::pde::{self, FlowCoefficients, Model};
use crate::solver::{self, Termination, Trajectory};

/// Process exit codes.
pub mod exit {
    pub const COMPLETED: i32 = 0;
    pub const CONFIG_OR_IO: i32 = 1;
    pub const TUBE_EXCEEDED: i32 = 3;
    pub const BLOWUP: i32 = 4;
    pub const USER_ABORT: i32 = 5;
    pub const CHECK_FAILED: i32 = 6;
}

/// One PASS/FAIL line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "check {} [{tag}] {}", self.check, self.detail)
    }
}

fn verdict(check: Check, pass: bool, detail: String) -> Verdict {
    Verdict { check: check.name().to_string(), pass, detail }
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct Outcome {
    pub termination: Termination,
    pub summary: RunSummary,
    pub verdicts: Vec<Verdict>,
    /// Terminal L² gaps along the ε schedule, if one ran.
    pub gaps: Option<Vec<f64>>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.termination, &self.verdicts)
    }
}

/// Terminations map to their own codes; a completed run with a failed
/// check exits with [`exit::CHECK_FAILED`].
pub fn exit_code(termination: Termination, verdicts: &[Verdict]) -> i32 {
    match termination {
        Termination::TubeExceeded(_) => exit::TUBE_EXCEEDED,
        Termination::BlowupDetected(_) => exit::BLOWUP,
        Termination::UserAbort(_) => exit::USER_ABORT,
        Termination::Completed if verdicts.iter().any(|v| !v.pass) => exit::CHECK_FAILED,
        Termination::Completed => exit::COMPLETED,
    }
}

/// Runs `f` on a single-threaded pool so every reduction is sequential.
pub fn sequential<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().map(|pool| pool.install(f)).unwrap_or_else(|_| {
        unreachable!("building a one-thread pool cannot fail")
    })
}

/// The diagnostics settings a run of `cfg` records with.
pub fn diagnostics_settings(cfg: &ExperimentConfig) -> DiagnosticsSettings {
    let s = &cfg.solver;
    let a = if s.model == Model::Darios { 0.0 } else { s.coefficients.a };
    DiagnosticsSettings {
        order: s.diag_order,
        coefficients: FlowCoefficients { a, ..s.coefficients },
        track_energy: s.track_energy,
    }
}

pub fn initial_state(cfg: &ExperimentConfig) -> Result<MapState> {
    make_initial_data(&cfg.initial, &cfg.grid, cfg.target)
}

/// Writes the three per-run artifacts into `dir`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, order: usize) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut snaps = BufWriter::new(File::create(dir.join("snapshots.jsonl"))?);
    for s in &traj.snapshots {
        serde_json::to_writer(&mut snaps, &s.to_snapshot())?;
        snaps.write_all(b"\n")?;
    }
    snaps.flush()?;
    diagnostics::write_csv(BufWriter::new(File::create(dir.join("diagnostics.csv"))?), order, &traj.diagnostics)?;
    write_json(&dir.join("summary.json"), &traj.summary())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Reads a `snapshots.jsonl` file back into states.
pub fn read_snapshots(path: &Path) -> Result<Vec<MapState>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let snap: Snapshot = serde_json::from_str(&line)?;
        out.push(MapState::from_snapshot(&snap)?);
    }
    Ok(out)
}

#[derive(Serialize)]
struct ContinuationReport<'a> {
    epsilons: &'a [f64],
    gaps: &'a [f64],
    terminations: Vec<&'static str>,
}

/// Runs `cfg`, writes artifacts under `cfg.output_dir`, evaluates checks.
pub fn run_experiment(cfg: &ExperimentConfig, abort: &AtomicBool) -> Result<Outcome> {
    let u0 = initial_state(cfg)?;
    let order = cfg.solver.diag_order;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;

    if cfg.solver.epsilon_schedule.is_some() {
        let cont = solver::continuation_with_abort(&u0, &cfg.solver, abort)?;
        for (i, traj) in cont.trajectories.iter().enumerate() {
            write_trajectory(&dir.join(format!("eps-{i}")), traj, order)?;
        }
        write_json(
            &dir.join("continuation.json"),
            &ContinuationReport {
                epsilons: &cont.epsilons,
                gaps: &cont.gaps,
                terminations: cont.trajectories.iter().map(|t| t.termination.name()).collect(),
            },
        )?;
        let termination = cont
            .trajectories
            .iter()
            .map(|t| t.termination)
            .find(|t| *t != Termination::Completed)
            .unwrap_or(Termination::Completed);
        let last = cont.trajectories.last().expect("schedule is non-empty");
        let mut verdicts = Vec::new();
        for check in &cfg.checks {
            match check {
                Check::Continuation => verdicts.push(continuation_verdict(&u0, &cont.gaps)),
                c => {
                    // Every other check is evaluated on each member run.
                    for (eps, traj) in cont.epsilons.iter().zip(&cont.trajectories) {
                        let mut v = evaluate(*c, cfg, &u0, Some(traj), *eps)?;
                        v.detail = format!("ε = {eps:e}: {}", v.detail);
                        verdicts.push(v);
                    }
                }
            }
        }
        return Ok(Outcome { termination, summary: last.summary(), verdicts, gaps: Some(cont.gaps) });
    }

    let traj = solver::run_with_abort(&u0, &cfg.solver, abort)?;
    write_trajectory(dir, &traj, order)?;
    let verdicts = cfg
        .checks
        .iter()
        .map(|c| evaluate(*c, cfg, &u0, Some(&traj), cfg.solver.coefficients.epsilon))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outcome { termination: traj.termination, summary: traj.summary(), verdicts, gaps: None })
}

/// Evaluates the trajectory-free checks on the initial data only.
pub fn check_initial(cfg: &ExperimentConfig) -> Result<Vec<Verdict>> {
    let u0 = initial_state(cfg)?;
    let a = diagnostics_settings(cfg).coefficients.a;
    let mut checks = vec![Check::Constraint, Check::Equivalence];
    if a != 0.0 {
        checks.extend([Check::Appendix, Check::Pairing, Check::GaugeBounds]);
    }
    if cfg.target.kind() == crate::geometry::TargetKind::Sphere2 {
        checks.push(Check::FmEquivalence);
    }
    checks.into_iter().map(|c| evaluate(c, cfg, &u0, None, cfg.solver.coefficients.epsilon)).collect()
}

fn continuation_verdict(u0: &MapState, gaps: &[f64]) -> Verdict {
    let speed = l2_norm_sq(u0.grid(), fields::velocity(u0).vectors()).sqrt();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let last = gaps.last().copied().unwrap_or(0.0);
    let bound = 1e-3 * speed;
    let listed: Vec<String> = gaps.iter().map(|g| format!("{g:.3e}")).collect();
    verdict(
        Check::Continuation,
        decreasing && last <= bound,
        format!(
            "terminal L² gaps [{}] {}; final gap {last:.3e} (≤ {bound:.3e})",
            listed.join(", "),
            if decreasing { "strictly decreasing" } else { "not decreasing" }
        ),
    )
}

fn evaluate(check: Check, cfg: &ExperimentConfig, u0: &MapState, traj: Option<&Trajectory>, epsilon: f64) -> Result<Verdict> {
    let settings = diagnostics_settings(cfg);
    let a = settings.coefficients.a;
    let m = cfg.solver.diag_order;
    let states: Vec<&MapState> = match traj {
        Some(t) => vec![&t.snapshots[0], t.final_state()],
        None => vec![u0],
    };
    Ok(match check {
        Check::Constraint => {
            let worst = match traj {
                Some(t) => t.snapshots.iter().map(|s| s.constraint_violation()).fold(0.0, f64::max),
                None => u0.constraint_violation(),
            };
            verdict(check, worst <= CONSTRAINT_TOLERANCE, format!("max distance from the target {worst:.2e} (≤ 1e-8)"))
        }
        Check::Equivalence => {
            let c = FlowCoefficients { epsilon, ..cfg.solver.coefficients };
            let gap = pde::rhs_intrinsic_regularized(u0, &c).into_vectors().sub(&pde::rhs_extrinsic(u0, &c)).max_norm();
            verdict(check, gap <= 1e-9, format!("intrinsic vs extrinsic rhs, max-norm gap {gap:.2e} (≤ 1e-9)"))
        }
        Check::FmEquivalence => {
            let a = cfg.solver.coefficients.a;
            let fm = pde::fm_rhs(u0, a)?;
            let general = pde::rhs_intrinsic(u0, &FlowCoefficients::new(a, a / 2.0, 0.0));
            let gap = fm.sub(general.vectors()).max_norm();
            verdict(check, gap <= 1e-10, format!("vortex-filament form vs b = a/2 flow, max-norm gap {gap:.2e} (≤ 1e-10)"))
        }
        Check::Appendix => {
            if a == 0.0 {
                return Ok(verdict(check, false, "gauge undefined for a = 0".into()));
            }
            let worst = states.iter().map(|s| diagnostics::appendix_commutator_check(s, m, a)).fold(0.0, f64::max);
            verdict(check, worst <= 1e-8, format!("gauge commutation residual at m = {m}: {worst:.2e} (≤ 1e-8)"))
        }
        Check::Pairing => {
            let mut pairing: f64 = 0.0;
            let mut size: f64 = 0.0;
            for s in &states {
                let d = fields::iterated_covariant(s, m);
                pairing = pairing
                    .max(diagnostics::nabla_j_energy_pairing_check(s, &d[m]))
                    .max(diagnostics::nabla_j_symmetrized_pairing(s, &d[1], &d[m - 1]));
                size = size.max(l2_norm_sq(s.grid(), nabla_j(s, &d[m]).vectors()).sqrt());
            }
            verdict(
                check,
                pairing <= 1e-8,
                format!("∇ₓJ anti-symmetry pairing {pairing:.2e} (≤ 1e-8); ‖(∇ₓJ)∇ₓ^{m}uₓ‖ = {size:.3e}"),
            )
        }
        Check::GaugeBounds => {
            if a == 0.0 {
                return Ok(verdict(check, false, "gauge undefined for a = 0".into()));
            }
            let bound = diagnostics::gauge_constant(fields::sobolev_terms(u0, 0)[0], a);
            let all: Vec<&MapState> = match traj {
                Some(t) => t.snapshots.iter().collect(),
                None => vec![u0],
            };
            let observed = all.iter().map(|s| diagnostics::gauge_bound(s, a)).fold(0.0, f64::max);
            let sandwich = all.iter().all(|s| diagnostics::norm_equivalence(s, m, a, bound).1);
            verdict(
                check,
                observed <= bound && sandwich,
                format!(
                    "max|e^±K| {observed:.4} (≤ {bound:.4}); N_m/H^m sandwich {}",
                    if sandwich { "holds" } else { "violated" }
                ),
            )
        }
        Check::Conservation => {
            let t = traj.ok_or_else(|| Error::Validation("conservation needs a trajectory".into()))?;
            let s = t.summary();
            let e = s.max_drift_e;
            let pass = s.max_drift_l2 <= 1e-5 && e.is_none_or(|e| e <= 1e-5);
            let e_text = e.map_or("E not tracked".to_string(), |e| format!("E drift {e:.2e}"));
            verdict(check, pass, format!("relative drift ‖uₓ‖² {:.2e}, {e_text} (≤ 1e-5)", s.max_drift_l2))
        }
        Check::Dissipation => {
            let t = traj.ok_or_else(|| Error::Validation("dissipation needs a trajectory".into()))?;
            let residual = t.diagnostics.iter().filter_map(|r| r.dissipation_residual).fold(0.0, f64::max);
            let increase = t
                .diagnostics
                .windows(2)
                .map(|w| (w[1].l2_energy - w[0].l2_energy) / w[0].l2_energy.max(f64::MIN_POSITIVE))
                .fold(f64::NEG_INFINITY, f64::max)
                .max(0.0);
            verdict(
                check,
                residual <= 0.05 && increase <= 1e-10,
                format!("energy-identity residual {residual:.2e} (≤ 0.05); largest relative increase of ‖uₓ‖² {increase:.2e} (≤ 1e-10)"),
            )
        }
        Check::Continuation => return Err(Error::Validation("continuation is evaluated on the whole schedule".into())),
    })
}

/// One member of a parameter sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub label: String,
    pub termination: String,
    pub exit_code: i32,
    pub summary: RunSummary,
    pub verdicts: Vec<Verdict>,
}

/// Runs independent experiments in parallel and writes the merged
/// summaries to `merged`.
pub fn run_sweep(runs: &[(String, ExperimentConfig)], merged: &Path, abort: &AtomicBool) -> Result<Vec<SweepEntry>> {
    let entries = runs
        .par_iter()
        .map(|(label, cfg)| {
            let out = run_experiment(cfg, abort)?;
            Ok(SweepEntry {
                label: label.clone(),
                termination: out.termination.name().to_string(),
                exit_code: out.exit_code(),
                summary: out.summary,
                verdicts: out.verdicts,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(parent) = merged.parent() {
        fs::create_dir_all(parent)?;
    }
    write_json(merged, &entries)?;
    Ok(entries)
}

/// Recomputes the diagnostics of every stored snapshot of a run.
pub fn recompute_diagnostics(cfg: &ExperimentConfig, states: &[MapState]) -> Vec<DiagnosticsRecord> {
    let settings = diagnostics_settings(cfg);
    states.iter().map(|s| DiagnosticsRecord::compute(s, &settings, None)).collect()
}
