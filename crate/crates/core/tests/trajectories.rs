//! Trajectory integration against closed-form paths and the complex
//! wavefunction reference, plus the force near a node.

use emergent_core::trajectories::{
    integrate_trajectory, no_crossing_report, run_ensemble, EnsembleConfig, Sampler, SampleTimes,
    TrajectoryOptions,
};
use emergent_core::{make_gaussian_mode, EmergentField, PhysicalParams, SlitSpec, WaveFunction, WaveMode};

fn mode(center: f64, sigma: f64, v: f64, phase: f64) -> WaveMode {
    make_gaussian_mode(
        SlitSpec::new(center, sigma).with_velocity(v).with_phase_offset(phase),
        PhysicalParams::default(),
    )
    .unwrap()
}

fn asymmetric_pair() -> Vec<WaveMode> {
    vec![mode(-2.0, 0.5, 0.2, 0.0), mode(2.0, 0.6, -0.1, 0.9)]
}

#[test]
fn single_gaussian_path_is_a_scaled_drift() {
    let m = mode(0.5, 0.7, 0.3, 0.2);
    let field = EmergentField::from_modes(vec![m]).unwrap();
    let tol = 1e-10;
    for x0 in [-1.0, 0.2, 0.5, 2.3] {
        let tr = integrate_trajectory(&field, x0, 0.0, 4.0, &TrajectoryOptions::with_tol(tol)).unwrap();
        let end = tr.end();
        let expect = 0.5 + 0.3 * 4.0 + (x0 - 0.5) * m.width_at(4.0) / 0.7;
        assert!((end.x - expect).abs() < 100.0 * tol * expect.abs().max(1.0), "{} vs {expect}", end.x);
    }
}

#[test]
fn emergent_and_reference_paths_agree() {
    let modes = asymmetric_pair();
    let field = EmergentField::from_modes(modes.clone()).unwrap();
    let oracle = WaveFunction::superpose(modes).unwrap();
    let tol = 1e-10;
    let opts = TrajectoryOptions::with_tol(tol);
    for x0 in [-2.3, -1.8, 1.7, 2.4] {
        let a = integrate_trajectory(&field, x0, 0.0, 3.0, &opts).unwrap();
        let b = integrate_trajectory(&oracle, x0, 0.0, 3.0, &opts).unwrap();
        let (xa, xb) = (a.end().x, b.end().x);
        assert!((xa - xb).abs() < 100.0 * tol * xa.abs().max(1.0), "{xa} vs {xb}");
    }
}

#[test]
fn halving_the_tolerance_moves_endpoints_within_budget() {
    let field = EmergentField::from_modes(asymmetric_pair()).unwrap();
    for tol in [1e-6, 1e-8, 1e-10] {
        for x0 in [-2.2, 1.9] {
            let a = integrate_trajectory(&field, x0, 0.0, 3.0, &TrajectoryOptions::with_tol(tol)).unwrap();
            let b = integrate_trajectory(&field, x0, 0.0, 3.0, &TrajectoryOptions::with_tol(tol / 2.0)).unwrap();
            let x = a.end().x;
            assert!((x - b.end().x).abs() <= 10.0 * tol * x.abs().max(1.0), "tol={tol}");
        }
    }
}

#[test]
fn uniform_sampling_records_acceleration() {
    let field = EmergentField::from_modes(asymmetric_pair()).unwrap();
    let opts = TrajectoryOptions {
        times: SampleTimes::Uniform(10),
        with_acceleration: true,
        ..TrajectoryOptions::default()
    };
    let tr = integrate_trajectory(&field, -2.1, 0.0, 1.0, &opts).unwrap();
    assert_eq!(tr.samples.len(), 11);
    assert_eq!(tr.end().t, 1.0);
    assert!(tr.samples.iter().all(|s| s.a.is_some_and(f64::is_finite)));
}

#[test]
fn symmetric_ensemble_never_crosses_the_axis() {
    let field = EmergentField::from_modes(vec![mode(-2.0, 0.5, 0.0, 0.0), mode(2.0, 0.5, 0.0, 0.0)]).unwrap();
    let config = EnsembleConfig {
        sampler: Sampler::Born,
        n_traj: 64,
        seed: 11,
        t0: 0.0,
        t1: 3.0,
        options: TrajectoryOptions::with_tol(1e-10),
    };
    let ensemble = run_ensemble(&field, &config).unwrap();
    let report = no_crossing_report(&ensemble, ensemble.axis, 1e-9);
    assert!(report.applicable);
    assert_eq!(report.crossings_total, 0);
}

#[test]
fn ensembles_do_not_depend_on_thread_count() {
    let field = EmergentField::from_modes(asymmetric_pair()).unwrap();
    let config = EnsembleConfig {
        sampler: Sampler::Born,
        n_traj: 40,
        seed: 5,
        t0: 0.0,
        t1: 2.0,
        options: TrajectoryOptions {
            tol: 1e-8,
            times: SampleTimes::Uniform(8),
            ..TrajectoryOptions::default()
        },
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_ensemble(&field, &config).unwrap())
    };
    assert_eq!(run(1), run(4));
}

/// `P_tot` along the transect towards a spacetime node at fixed time.
fn transect(field: &EmergentField, node: (f64, f64), side: f64) -> Vec<(f64, f64, f64)> {
    (0..400)
        .map(|k| {
            let d = 0.2 * 10f64.powf(-k as f64 / 80.0);
            let x = node.0 + side * d;
            let a = field.emergent_acceleration(x, node.1).unwrap();
            (d, field.total_density(x, node.1), a)
        })
        .collect()
}

#[test]
fn acceleration_grows_monotonically_towards_a_node() {
    let modes = asymmetric_pair();
    let oracle = WaveFunction::superpose(modes.clone()).unwrap();
    let field = EmergentField::from_modes(modes).unwrap();
    // start from the most destructive interference on a coarse (x, t) scan
    let contrast = |x: f64, t: f64| {
        let incoherent: f64 = oracle.modes().iter().map(|m| m.amplitude(x, t).powi(2)).sum();
        oracle.density(x, t) / incoherent
    };
    let (x_guess, t_guess) = (0..200 * 100)
        .map(|k| (-3.0 + 6.0 * (k % 200) as f64 / 200.0, 0.5 + 2.5 * (k / 200) as f64 / 100.0))
        .min_by(|a, b| contrast(a.0, a.1).total_cmp(&contrast(b.0, b.1)))
        .unwrap();
    let node = oracle.locate_node(x_guess, t_guess, 60).unwrap();
    assert!(oracle.psi(node.0, node.1).norm() < 1e-12);
    let p_max = (0..2000)
        .map(|k| field.total_density(-4.0 + 8.0 * k as f64 / 2000.0, node.1))
        .fold(0.0, f64::max);
    for side in [-1.0, 1.0] {
        let path = transect(&field, node, side);
        // the last decade of decay, ending at P = 1e-8 · max P
        let lo = 1e-8 * p_max;
        let window: Vec<_> = path.iter().filter(|(_, p, _)| *p <= 10.0 * lo && *p >= lo).collect();
        assert!(window.len() > 10);
        for w in window.windows(2) {
            assert!(w[1].2.abs() > w[0].2.abs(), "not monotone: {:?} -> {:?}", w[0], w[1]);
        }
        // and the force matches the reference there
        for (d, _, a) in &window {
            let q = oracle.quantum_force(node.0 + side * d, node.1).unwrap();
            assert!((a - q).abs() <= 1e-4 * q.abs(), "d={d}: {a} vs {q}");
        }
    }
}
