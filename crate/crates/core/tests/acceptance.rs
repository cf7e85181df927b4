//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N [PASS|FAIL] ...` line before asserting.

use std::f64::consts::PI;
use std::io::Write;

use dispersive_flow::diagnostics::{
    appendix_commutator_check, gauge_constant, nabla_j_energy_pairing_check, nabla_j_symmetrized_pairing,
    norm_equivalence,
};
use dispersive_flow::fields::{self, iterated_covariant, l2_norm_sq, sobolev_terms};
use dispersive_flow::geometry::{nabla_j, nabla_j_norm_bound_check};
use dispersive_flow::pde::{fm_rhs, rhs_extrinsic, rhs_intrinsic};
use dispersive_flow::solver::{continuation, duhamel_reference, run, Projection, DEFAULT_DUHAMEL_NODES};
use dispersive_flow::{
    make_initial_data, FlowCoefficients, Grid, InitialData, MapState, Model, SolverConfig, TangentSection,
    TargetManifold, Termination, VectorField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    // Written past the test harness capture so the line shows in every run.
    let _ = writeln!(std::io::stderr().lock(), "criterion {id} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn grid(n: usize) -> Grid {
    Grid::new(n, 2.0 * PI).unwrap()
}

fn initial(data: InitialData, n: usize, target: TargetManifold) -> MapState {
    make_initial_data(&data, &grid(n), target).unwrap()
}

fn random_curve(seed: u64, n: usize, target: TargetManifold) -> MapState {
    initial(InitialData::RandomAnalytic { seed, max_frequency: 1 }, n, target)
}

/// A normalized trigonometric polynomial: analytic but not band-limited.
fn normalized_trig_curve(seed: u64, n: usize, target: TargetManifold) -> MapState {
    let d = target.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let coeffs: Vec<Vec<[f64; 2]>> =
        (0..3).map(|_| (0..d).map(|_| [rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6)]).collect()).collect();
    let g = grid(n);
    let pts = VectorField::from_fn(n, d, |j, row| {
        let x = g.x(j);
        for (c, r) in row.iter_mut().enumerate() {
            *r = base[c];
            for (k, ck) in coeffs.iter().enumerate() {
                let s = (k + 1) as f64 * x;
                *r += ck[c][0] * s.cos() + ck[c][1] * s.sin();
            }
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        row.iter_mut().for_each(|v| *v /= norm);
    });
    MapState::new(g, 0.0, pts, target).unwrap()
}

fn intrinsic_extrinsic_gap(u: &MapState, c: &FlowCoefficients) -> f64 {
    rhs_intrinsic(u, c).into_vectors().sub(&rhs_extrinsic(u, c)).max_norm()
}

#[test]
fn criterion_01_intrinsic_extrinsic_equivalence() {
    let c = FlowCoefficients::new(1.0, 0.5, 0.0);
    let mut worst: f64 = 0.0;
    let mut worst_fine: f64 = 0.0;
    for target in [TargetManifold::sphere2(), TargetManifold::sphere6()] {
        for seed in 0..20 {
            worst = worst.max(intrinsic_extrinsic_gap(&random_curve(seed, 256, target), &c));
            worst_fine = worst_fine.max(intrinsic_extrinsic_gap(&random_curve(seed, 512, target), &c));
        }
    }
    // Refinement on curves that are not band-limited: the gap decays
    // spectrally until it meets the round-off floor, which grows like n³
    // (third derivatives of data rounded to machine precision).
    let mut decay = Vec::new();
    let mut decays = true;
    for target in [TargetManifold::sphere2(), TargetManifold::sphere6()] {
        let gaps: Vec<f64> =
            [32, 64, 128, 256, 512].iter().map(|&n| intrinsic_extrinsic_gap(&normalized_trig_curve(9, n, target), &c)).collect();
        decays &= gaps[0] > 1e3 * gaps[2] && gaps[1] > 1e3 * gaps[3];
        decay.push(format!("{}: {}", target.name(), gaps.iter().map(|g| format!("{g:.1e}")).collect::<Vec<_>>().join(" → ")));
    }
    verdict(
        1,
        "intrinsic/extrinsic equivalence",
        worst <= 1e-9 && decays,
        format!(
            "max gap over 40 random curves at n = 256: {worst:.2e} (≤ 1e-9), at n = 512: {worst_fine:.2e} (round-off floor); refinement n=32..512 {}",
            decay.join("; ")
        ),
    );
}

fn conservation_run(b: f64) -> dispersive_flow::Trajectory {
    let u0 = initial(InitialData::PerturbedCircle { k: 1, amp: 0.05, mode: 3 }, 256, TargetManifold::sphere2());
    let mut cfg = SolverConfig::new(Model::Dispersive, FlowCoefficients::new(1.0, b, 0.0), 1.0);
    cfg.track_energy = true;
    cfg.diag_order = 2;
    run(&u0, &cfg).unwrap()
}

#[test]
fn criterion_02_conservation_on_the_sphere() {
    let conserving = conservation_run(0.5);
    let s = conserving.summary();
    let control = conservation_run(1.0).summary();
    let drift_e = s.max_drift_e.unwrap();
    let control_e = control.max_drift_e.unwrap();
    let pass = conserving.termination == Termination::Completed
        && s.max_drift_l2 <= 1e-5
        && drift_e <= 1e-5
        && control_e >= 1e-3;
    verdict(
        2,
        "conservation of ‖uₓ‖² and E at b = a/2",
        pass,
        format!(
            "drift ‖uₓ‖² {:.2e}, E {:.2e} (≤ 1e-5) over {} steps; control b = 1: E drift {:.2e} (≥ 1e-3)",
            s.max_drift_l2, drift_e, conserving.steps, control_e
        ),
    );
}

#[test]
fn criterion_03_dissipation_identity() {
    let u0 = initial(InitialData::PerturbedCircle { k: 1, amp: 0.05, mode: 3 }, 256, TargetManifold::sphere2());
    let mut cfg = SolverConfig::new(Model::Dispersive, FlowCoefficients::new(1.0, 0.5, 1e-2), 0.005);
    cfg.snapshot_stride = Some(1);
    let traj = run(&u0, &cfg).unwrap();
    let residual = traj.diagnostics.iter().filter_map(|r| r.dissipation_residual).fold(0.0, f64::max);
    let l2: Vec<f64> = traj.diagnostics.iter().map(|r| r.l2_energy).collect();
    let worst_increase = l2.windows(2).map(|w| (w[1] - w[0]) / w[0]).fold(f64::NEG_INFINITY, f64::max);
    let pass = traj.termination == Termination::Completed && residual <= 0.05 && worst_increase <= 1e-10;
    verdict(
        3,
        "dissipation identity at ε = 1e-2",
        pass,
        format!(
            "max per-step residual {residual:.2e} (≤ 0.05) over {} steps; largest relative per-step change of ‖uₓ‖² {worst_increase:.2e} (≤ 1e-10)",
            traj.steps
        ),
    );
}

#[test]
fn criterion_04_traveling_wave() {
    let n = 256;
    let u0 = initial(InitialData::GreatCircle { k: 1 }, n, TargetManifold::sphere2());
    let c = FlowCoefficients::new(1.0, 0.7, 0.0);
    let cfg = SolverConfig::new(Model::Dispersive, c, 1.0);
    let traj = run(&u0, &cfg).unwrap();
    let g = grid(n);
    // c₀ = 1 on the unit-speed circle
    let exact = VectorField::from_fn(n, 3, |j, r| {
        let s = g.x(j) + c.b;
        r.copy_from_slice(&[s.cos(), s.sin(), 0.0]);
    });
    let err = traj.final_state().points().sub(&exact).max_norm();
    verdict(
        4,
        "great-circle traveling wave",
        traj.termination == Termination::Completed && err <= 1e-6,
        format!("terminal max-norm error {err:.2e} (≤ 1e-6) after {} steps", traj.steps),
    );
}

#[test]
fn criterion_05_epsilon_continuation() {
    let u0 = initial(InitialData::PerturbedCircle { k: 1, amp: 0.05, mode: 3 }, 128, TargetManifold::sphere2());
    let mut cfg = SolverConfig::new(Model::Dispersive, FlowCoefficients::new(1.0, 0.5, 1e-2), 0.2);
    cfg.epsilon_schedule = Some(vec![1e-2, 1e-3, 1e-4]);
    let result = continuation(&u0, &cfg).unwrap();
    let speed = l2_norm_sq(u0.grid(), fields::velocity(&u0).vectors()).sqrt();
    let gaps = &result.gaps;
    let completed = result.trajectories.iter().all(|t| t.termination == Termination::Completed);
    let pass = completed && gaps[1] < gaps[0] && gaps[1] <= 1e-3 * speed;
    verdict(
        5,
        "ε-continuation Cauchy behaviour",
        pass,
        format!(
            "gaps ε=1e-2→1e-3 {:.2e}, 1e-3→1e-4 {:.2e}; bound 1e-3·‖uₓ(0)‖ = {:.2e}",
            gaps[0],
            gaps[1],
            1e-3 * speed
        ),
    );
}

#[test]
fn criterion_06_appendix_identities() {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        for max_frequency in [1, 2] {
            let u = initial(InitialData::RandomAnalytic { seed, max_frequency }, 512, TargetManifold::sphere6());
            worst = worst.max(appendix_commutator_check(&u, 4, 1.0));
        }
    }
    verdict(
        6,
        "gauge commutation identities on S6, m = 4",
        worst <= 1e-8,
        format!("max relative residual over 20 random curves at n = 512: {worst:.2e} (≤ 1e-8)"),
    );
}

#[test]
fn criterion_07_non_kahler_structure() {
    let s6 = TargetManifold::sphere6();
    // documented generic curve: random-analytic, seed 2024, max frequency 2
    let u = initial(InitialData::RandomAnalytic { seed: 2024, max_frequency: 2 }, 256, s6);
    let d = iterated_covariant(&u, 4);
    let v = &d[4];
    let size = l2_norm_sq(u.grid(), nabla_j(&u, v).vectors()).sqrt();
    let pairing = nabla_j_energy_pairing_check(&u, v);
    let symmetrized = nabla_j_symmetrized_pairing(&u, &d[1], &d[3]);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut constants = Vec::new();
    for seed in 0..50 {
        let w = random_curve(1000 + seed, 256, s6);
        let dw = iterated_covariant(&w, 2);
        // a random tangent combination of ∇ⱼuₓ
        let mut combo = VectorField::zeros(w.n(), 7);
        for s in &dw {
            combo.axpy(rng.gen_range(-1.0..1.0), s.vectors());
        }
        constants.push(nabla_j_norm_bound_check(&w, &TangentSection::new(combo)).unwrap());
    }
    let c_max = constants.iter().cloned().fold(0.0, f64::max);
    let c_min = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    let pass = size >= 1e-2 && pairing <= 1e-8 && symmetrized <= 1e-8 && c_max <= 1.0 + 1e-6;
    verdict(
        7,
        "non-Kähler ∇J on S6",
        pass,
        format!(
            "‖(∇ₓJ)∇⁴uₓ‖ = {size:.2e} (≥ 1e-2), pairing {pairing:.1e}, symmetrized {symmetrized:.1e} (≤ 1e-8); |∇ₓJ| ≤ C|uₓ| with C ∈ [{c_min:.3}, {c_max:.6}] over 50 curves (≤ 1)"
        ),
    );
}

#[test]
fn criterion_08_fukumoto_miyazaki_equivalence() {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let u = random_curve(seed, 256, TargetManifold::sphere2());
        for a in [1.0, -0.4] {
            let c = FlowCoefficients::new(a, a / 2.0, 0.0);
            worst = worst.max(rhs_intrinsic(&u, &c).into_vectors().sub(&fm_rhs(&u, a).unwrap()).max_norm());
        }
    }
    // The same comparison one resolution down, below the n³ round-off floor
    // of third spectral derivatives (≈ 1.1e−16·(n/2)³ on a 2π period).
    let mut coarse: f64 = 0.0;
    for seed in 0..20 {
        let u = random_curve(seed, 128, TargetManifold::sphere2());
        let c = FlowCoefficients::new(1.0, 0.5, 0.0);
        coarse = coarse.max(rhs_intrinsic(&u, &c).into_vectors().sub(&fm_rhs(&u, 1.0).unwrap()).max_norm());
    }
    verdict(
        8,
        "Fukumoto–Miyazaki equivalence at b = a/2",
        worst <= 1e-10,
        format!("max-norm gap over 20 curves × 2 values of a at n = 256: {worst:.2e} (≤ 1e-10); at n = 128: {coarse:.2e}"),
    );
}

#[test]
fn criterion_09_gauge_bounds() {
    let runs: Vec<(&str, MapState, FlowCoefficients, usize)> = vec![
        (
            "s2 perturbed circle",
            initial(InitialData::PerturbedCircle { k: 1, amp: 0.05, mode: 3 }, 128, TargetManifold::sphere2()),
            FlowCoefficients::new(1.0, 0.5, 0.0),
            2,
        ),
        (
            "s6 random",
            random_curve(5, 128, TargetManifold::sphere6()),
            FlowCoefficients::new(2.0, 0.3, 1e-2),
            4,
        ),
        (
            "torus random",
            initial(InitialData::RandomAnalytic { seed: 3, max_frequency: 2 }, 128, TargetManifold::clifford_torus()),
            FlowCoefficients::new(-1.5, 0.0, 0.0),
            4,
        ),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (name, u0, c, m) in runs {
        let mut cfg = SolverConfig::new(Model::Dispersive, c, 0.05);
        cfg.diag_order = m;
        let traj = run(&u0, &cfg).unwrap();
        let bound = gauge_constant(sobolev_terms(&u0, 0)[0], c.a);
        let observed = traj.diagnostics.iter().filter_map(|r| r.gauge_bound).fold(0.0, f64::max);
        let sandwich = traj.snapshots.iter().all(|s| norm_equivalence(s, m, c.a, bound).1);
        pass &= traj.termination == Termination::Completed && observed <= bound && sandwich;
        details.push(format!("{name}: max|e^±K| {observed:.3} ≤ {bound:.3}, sandwich {}", if sandwich { "ok" } else { "violated" }));
    }
    verdict(9, "gauge bounds and norm equivalence", pass, details.join("; "));
}

#[test]
fn criterion_10_duhamel_reference() {
    let u0 = initial(InitialData::PerturbedCircle { k: 1, amp: 0.05, mode: 3 }, 128, TargetManifold::sphere2());
    let mut cfg = SolverConfig::new(Model::Dispersive, FlowCoefficients::new(1.0, 0.5, 1e-2), 1e-3);
    cfg.projection = Projection::EveryStep;
    let traj = run(&u0, &cfg).unwrap();
    let reference = duhamel_reference(&u0, &cfg, 6, DEFAULT_DUHAMEL_NODES).unwrap();
    let projected = reference.state.projected().unwrap();
    let gap = projected.points().sub(traj.final_state().points()).max_norm();
    let monotone = reference.distances.windows(2).all(|w| w[1] < w[0]);
    verdict(
        10,
        "Duhamel reference vs integrator",
        gap <= 1e-6 && monotone,
        format!(
            "max-norm gap {gap:.2e} (≤ 1e-6); Picard distances {}",
            reference.distances.iter().map(|d| format!("{d:.1e}")).collect::<Vec<_>>().join(" → ")
        ),
    );
}
