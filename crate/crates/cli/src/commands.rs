//! The four verbs. Each returns its summary and the tables to write; the
//! caller owns the output directory.

use emergent_core::grid::{continuity_convergence, Grid};
use emergent_core::nparticle::{
    compare_configurations, configuration_continuity_convergence, configuration_window, nonlocality_metric,
    nparticle_velocities, run_configuration_ensemble, sample_configuration, ConfigurationPoint,
    ConfigurationTrajectory, NParticleWaveFunction,
};
use emergent_core::trajectories::{
    compare_screen, fringe_maxima, median_spacing, no_crossing_report, run_ensemble, substream,
    two_source_fringe_spacing, EnsembleConfig, SampleTimes, TrajectoryOptions,
};
use emergent_core::{EmergentField, WaveFunction, WaveMode};
use rand::Rng;
use rayon::prelude::*;

use crate::error::CliError;
use crate::output::{Cell, Table};
use crate::scenario::{Scenario, StateKind};
use crate::summary::{Crossings, RunSummary};

/// Densities below this are excluded from the velocity comparison.
pub const VELOCITY_DENSITY_FLOOR: f64 = 1e-12;
/// Grid points below this fraction of the peak density are excluded from the
/// force comparison.
pub const FORCE_RELATIVE_DENSITY_FLOOR: f64 = 1e-6;
/// Minimum smoothed height, relative to the tallest, of a counted fringe.
pub const FRINGE_MIN_FRACTION: f64 = 0.1;
/// Stream index reserved for the identity-check configurations, far above
/// any trajectory index.
const IDENTITY_STREAM: u64 = 1 << 62;

pub struct Outcome {
    pub summary: RunSummary,
    pub tables: Vec<Table>,
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn fields_for(scenario: &Scenario) -> Result<(Vec<WaveMode>, EmergentField, WaveFunction), CliError> {
    let modes = scenario.modes()?;
    let field = EmergentField::from_modes(modes.clone())?;
    let oracle = WaveFunction::superpose(modes.clone())?;
    Ok((modes, field, oracle))
}

#[derive(Debug, Clone, Copy)]
struct NodeValues {
    x: f64,
    t: f64,
    p_tot: f64,
    j_tot: f64,
    v_tot: Option<f64>,
    a_tot: Option<f64>,
    p_bohm: f64,
    v_bohm: Option<f64>,
    a_bohm: Option<f64>,
}

fn evaluate_grid(field: &EmergentField, oracle: &WaveFunction, grid: &Grid) -> Vec<NodeValues> {
    grid.map(|x, t| {
        let s = field.sample(x, t, true);
        NodeValues {
            x,
            t,
            p_tot: s.p_tot,
            j_tot: s.j_tot,
            v_tot: s.v_tot,
            a_tot: s.a_tot,
            p_bohm: oracle.density(x, t),
            v_bohm: oracle.bohm_velocity(x, t).ok(),
            a_bohm: oracle.quantum_force(x, t).ok(),
        }
    })
}

/// Largest relative velocity and force discrepancies over the masked nodes.
fn discrepancies(nodes: &[NodeValues]) -> (f64, f64) {
    let p_max = nodes.iter().map(|n| n.p_tot).fold(0.0, f64::max);
    let mut dv = 0.0f64;
    let mut da = 0.0f64;
    for n in nodes {
        if n.p_tot > VELOCITY_DENSITY_FLOOR {
            if let (Some(v), Some(vb)) = (n.v_tot, n.v_bohm) {
                dv = dv.max(relative(v, vb));
            } else {
                dv = f64::INFINITY;
            }
        }
        if n.p_tot > FORCE_RELATIVE_DENSITY_FLOOR * p_max {
            if let (Some(a), Some(ab)) = (n.a_tot, n.a_bohm) {
                da = da.max(relative(a, ab));
            } else {
                da = f64::INFINITY;
            }
        }
    }
    (dv, da)
}

fn crossings_placeholder(modes: &[WaveMode]) -> Option<Crossings> {
    (modes.len() < 2).then_some(Crossings::NA)
}

/// Grid dump of the emergent fields next to the reference, with the
/// continuity check.
pub fn fields(scenario: &Scenario) -> Result<Outcome, CliError> {
    let (modes, field, oracle) = fields_for(scenario)?;
    let grid = scenario.grid()?;
    let nodes = evaluate_grid(&field, &oracle, &grid);
    let (dv, da) = discrepancies(&nodes);
    let report = continuity_convergence(&field, &grid, scenario.grid.levels)?;
    let th = &scenario.thresholds;

    let mut summary = RunSummary::new("fields", scenario.hash());
    summary.max_velocity_discrepancy = Some(dv);
    summary.force_discrepancy = Some(da);
    summary.continuity_residual_norms = Some(report.norms.clone());
    summary.crossings_total = crossings_placeholder(&modes);
    summary.detail("continuity_ratios", &report.ratios);
    summary.detail("grid", [grid.x_min, grid.x_max, grid.t_min, grid.t_max]);
    summary.detail("grid_size", [grid.nx, grid.nt]);
    summary.require(dv < th.velocity, || format!("max_velocity_discrepancy {dv:e} ≥ {:e}", th.velocity));
    summary.require(da < th.force, || format!("force_discrepancy {da:e} ≥ {:e}", th.force));
    summary.require(report.converges_within(th.continuity_ratio_min, th.continuity_ratio_max), || {
        format!(
            "continuity ratios {:?} outside [{}, {}]",
            report.ratios, th.continuity_ratio_min, th.continuity_ratio_max
        )
    });

    let mut table = Table::new(
        "fields",
        &["x", "t", "p_tot", "jx", "vx", "ax", "p_bohm", "vx_bohm", "delta_v"],
    );
    for n in &nodes {
        let delta = match (n.v_tot, n.v_bohm) {
            (Some(v), Some(vb)) => Some((v - vb).abs()),
            _ => None,
        };
        table.push(vec![
            n.x.into(),
            n.t.into(),
            n.p_tot.into(),
            n.j_tot.into(),
            n.v_tot.into(),
            n.a_tot.into(),
            n.p_bohm.into(),
            n.v_bohm.into(),
            delta.into(),
        ]);
    }
    Ok(Outcome {
        summary,
        tables: vec![table],
    })
}

/// Point-by-point discrepancy maps for velocity and acceleration.
pub fn compare(scenario: &Scenario) -> Result<Outcome, CliError> {
    let (modes, field, oracle) = fields_for(scenario)?;
    let grid = scenario.grid()?;
    let nodes = evaluate_grid(&field, &oracle, &grid);
    let (dv, da) = discrepancies(&nodes);
    let th = &scenario.thresholds;

    let mut summary = RunSummary::new("compare", scenario.hash());
    summary.max_velocity_discrepancy = Some(dv);
    summary.force_discrepancy = Some(da);
    summary.crossings_total = crossings_placeholder(&modes);
    summary.require(dv < th.velocity, || format!("max_velocity_discrepancy {dv:e} ≥ {:e}", th.velocity));
    summary.require(da < th.force, || format!("force_discrepancy {da:e} ≥ {:e}", th.force));

    let mut table = Table::new(
        "compare",
        &["x", "t", "vx", "vx_bohm", "delta_v", "rel_delta_v", "ax", "ax_bohm", "delta_a", "rel_delta_a"],
    );
    let pair = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => (Some((a - b).abs()), Some(relative(a, b))),
        _ => (None, None),
    };
    for n in &nodes {
        let (dv, rv) = pair(n.v_tot, n.v_bohm);
        let (da, ra) = pair(n.a_tot, n.a_bohm);
        table.push(vec![
            n.x.into(),
            n.t.into(),
            n.v_tot.into(),
            n.v_bohm.into(),
            dv.into(),
            rv.into(),
            n.a_tot.into(),
            n.a_bohm.into(),
            da.into(),
            ra.into(),
        ]);
    }
    Ok(Outcome {
        summary,
        tables: vec![table],
    })
}

fn sample_times(t0: f64, t1: f64, samples: usize, extra: f64) -> Vec<f64> {
    let n = samples - 1;
    let mut times: Vec<f64> = (0..=n)
        .map(|k| if k == n { t1 } else { t0 + (t1 - t0) * k as f64 / n as f64 })
        .collect();
    if !times.iter().any(|&t| (t - extra).abs() <= 1e-12 * t.abs().max(1.0)) {
        times.push(extra);
        times.sort_by(f64::total_cmp);
    }
    times
}

/// Born-sampled trajectory ensemble with the no-crossing, screen and fringe
/// diagnostics.
pub fn ensemble(scenario: &Scenario) -> Result<Outcome, CliError> {
    let (modes, field, _) = fields_for(scenario)?;
    let e = &scenario.ensemble;
    let (t0, t1, t_screen) = (e.t0, scenario.t1(), scenario.t_screen());
    let length_scale = modes.iter().map(|m| m.width_at(t0)).fold(f64::INFINITY, f64::min);
    let config = EnsembleConfig {
        sampler: e.sampler.into(),
        n_traj: e.n_traj,
        seed: e.seed,
        t0,
        t1,
        options: TrajectoryOptions {
            tol: e.tol,
            length_scale: Some(length_scale),
            times: SampleTimes::Times(sample_times(t0, t1, e.samples, t_screen)),
            with_acceleration: e.with_acceleration,
            ..TrajectoryOptions::default()
        },
    };
    let run = run_ensemble(&field, &config)?;
    let guard_band = 10.0 * e.tol * length_scale;
    let crossings = no_crossing_report(&run, run.axis, guard_band);
    let screen = compare_screen(&field, &run, t_screen, scenario.screen.bins)?;
    let th = &scenario.thresholds;

    let mut summary = RunSummary::new("ensemble", scenario.hash());
    summary.screen_l1 = Some(screen.l1);
    summary.crossings_total = Some(if crossings.applicable {
        Crossings::Count(crossings.crossings_total)
    } else {
        Crossings::NA
    });
    if let Some(note) = &crossings.note {
        summary.detail("crossings_note", note);
    }
    summary.detail("guard_band", guard_band);
    summary.detail("max_axis_violation", crossings.max_violation);
    summary.detail("sampler", run.sampler.name());
    summary.detail("screen_outside_fraction", screen.histogram.outside_fraction());
    summary.detail("screen_bin_width", screen.histogram.bin_width());
    if let [m1, m2] = modes.as_slice() {
        let maxima = fringe_maxima(&screen.histogram.centers(), &screen.histogram.density(), FRINGE_MIN_FRACTION);
        let measured = median_spacing(&maxima);
        summary.detail("fringe_maxima", &maxima);
        summary.detail("fringe_spacing", measured);
        if let Ok(analytic) = two_source_fringe_spacing(m1, m2, t_screen) {
            summary.detail("fringe_spacing_analytic", analytic);
        }
    }
    if crossings.applicable {
        summary.require(crossings.crossings_total == 0, || {
            format!("{} axis crossings", crossings.crossings_total)
        });
    }
    summary.require(screen.l1 < th.screen_l1, || format!("screen_L1 {} ≥ {}", screen.l1, th.screen_l1));

    let mut columns = vec!["traj_id", "t", "x", "vx"];
    if e.with_acceleration {
        columns.push("ax");
    }
    let mut trajectories = Table::new("trajectories", &columns);
    for (id, tr) in run.trajectories.iter().enumerate() {
        for s in &tr.samples {
            let mut row = vec![id.into(), s.t.into(), s.x.into(), s.v.into()];
            if e.with_acceleration {
                row.push(s.a.into());
            }
            trajectories.push(row);
        }
    }
    let mut histogram = Table::new("histogram", &["bin_center", "density", "reference_density"]);
    let width = screen.histogram.bin_width();
    for ((c, d), p) in screen
        .histogram
        .centers()
        .into_iter()
        .zip(screen.histogram.density())
        .zip(&screen.reference.probabilities)
    {
        histogram.push(vec![c.into(), d.into(), (p / width).into()]);
    }
    Ok(Outcome {
        summary,
        tables: vec![trajectories, histogram],
    })
}

/// Builds the two-particle state named by the scenario.
pub fn two_particle_state(scenario: &Scenario) -> Result<NParticleWaveFunction, CliError> {
    let spec = scenario
        .nparticle
        .as_ref()
        .ok_or_else(|| CliError::Usage("the nparticle verb needs an [nparticle] section".into()))?;
    let modes = scenario.modes()?;
    let (a, b) = (modes[spec.modes[0]], modes[spec.modes[1]]);
    Ok(match spec.state {
        StateKind::Product => NParticleWaveFunction::product(vec![a, b])?,
        StateKind::Symmetric => NParticleWaveFunction::symmetric(a, b)?,
        StateKind::Antisymmetric => NParticleWaveFunction::antisymmetric(a, b)?,
    })
}

/// Largest relative difference between guidance from the conditional
/// wavefunction and `(ħ/m) Im(∂_iΨ/Ψ)` of the full state, over random
/// configurations at random times.
pub fn conditional_identity(
    psi: &NParticleWaveFunction,
    count: usize,
    seed: u64,
    t0: f64,
    t1: f64,
) -> Result<f64, CliError> {
    let worst = (0..count)
        .into_par_iter()
        .map(|k| -> Result<f64, CliError> {
            let mut rng = substream(seed, IDENTITY_STREAM + k as u64);
            let t = rng.random_range(t0..=t1);
            let config = sample_configuration(psi, t, &mut rng)?;
            let v = nparticle_velocities(psi, &config)?;
            let full = psi.psi(&config)?;
            let mut worst = 0.0f64;
            for (i, &vi) in v.iter().enumerate() {
                let slice = psi.conditional_wavefunction(i, &config)?;
                let conditional = slice.guidance_velocity(config.positions[i])?;
                let direct = psi.hbar() / psi.masses()[i] * (psi.gradient(&config, i)? / full).im;
                worst = worst.max(relative(conditional, direct)).max(relative(vi, direct));
            }
            Ok(worst)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// Configuration-space ensemble with identity, nonlocality and equivariance
/// diagnostics.
pub fn nparticle(scenario: &Scenario) -> Result<Outcome, CliError> {
    let psi = two_particle_state(scenario)?;
    let spec = scenario.nparticle.as_ref().expect("checked by two_particle_state");
    let e = &scenario.ensemble;
    let (t0, t1) = (e.t0, spec.t1.unwrap_or_else(|| scenario.t1()));
    let modes = scenario.modes()?;
    let first = modes[spec.modes[0]];
    let opts = TrajectoryOptions {
        tol: e.tol,
        times: SampleTimes::Uniform(spec.samples - 1),
        ..TrajectoryOptions::default()
    };
    let trajectories: Vec<ConfigurationTrajectory> =
        run_configuration_ensemble(&psi, spec.n_traj, e.seed, t0, t1, &opts)?;
    let (hist, reference, l1) = compare_configurations(&psi, &trajectories, (spec.bins, spec.bins))?;

    let identity = conditional_identity(&psi, spec.identity_checks, e.seed, t0, t1)?;
    // probe at the final configurations: free states are often real at t0,
    // where every velocity vanishes
    let probes: Vec<ConfigurationPoint> = trajectories
        .iter()
        .take(200)
        .map(|tr| {
            let s = tr.end();
            ConfigurationPoint {
                positions: s.positions.clone(),
                t: s.t,
            }
        })
        .collect();
    let displacement = spec.displacement.unwrap_or(first.slit().width_sigma);
    let nonlocality = nonlocality_metric(&psi, &probes, displacement)?;
    let window = configuration_window(&psi, t0, 4.0);
    let continuity = configuration_continuity_convergence(
        &psi,
        window[0],
        window[1],
        24,
        0.5 * (t0 + t1),
        first.params().mass() * first.slit().width_sigma.powi(2) / first.params().hbar() * 0.1,
        scenario.grid.levels,
    )?;
    let th = &scenario.thresholds;

    let mut summary = RunSummary::new("nparticle", scenario.hash());
    summary.continuity_residual_norms = Some(continuity.norms.clone());
    summary.detail("continuity_ratios", &continuity.ratios);
    summary.detail("configuration_L1", l1);
    summary.detail("conditional_identity_discrepancy", identity);
    summary.detail("nonlocality_metric", nonlocality);
    summary.detail("nonlocality_displacement", displacement);
    summary.detail("state", spec.state);
    summary.require(identity < th.conditional_identity, || {
        format!("conditional identity discrepancy {identity:e} ≥ {:e}", th.conditional_identity)
    });
    summary.require(l1 < th.configuration_l1, || format!("configuration_L1 {l1} ≥ {}", th.configuration_l1));
    if psi.is_factorized() {
        summary.require(nonlocality <= 1e-12, || format!("factorized state is nonlocal: {nonlocality:e}"));
    } else {
        summary.require(nonlocality > th.nonlocality_min, || {
            format!("nonlocality metric {nonlocality:e} ≤ {:e}", th.nonlocality_min)
        });
    }
    summary.require(continuity.converges_within(th.continuity_ratio_min, th.continuity_ratio_max), || {
        format!("configuration continuity ratios {:?} out of range", continuity.ratios)
    });

    let mut table = Table::new("configurations", &["traj_id", "t", "x1", "x2", "v1", "v2"]);
    for (id, tr) in trajectories.iter().enumerate() {
        for s in &tr.samples {
            table.push(vec![
                id.into(),
                s.t.into(),
                s.positions[0].into(),
                s.positions[1].into(),
                s.velocities[0].into(),
                s.velocities[1].into(),
            ]);
        }
    }
    let mut histogram = Table::new(
        "configuration_histogram",
        &["x1_center", "x2_center", "density", "reference_density"],
    );
    let (b1, b2) = hist.bins;
    let w1 = (hist.x1_range.1 - hist.x1_range.0) / b1 as f64;
    let w2 = (hist.x2_range.1 - hist.x2_range.0) / b2 as f64;
    let fractions = hist.fractions();
    for (k, (fraction, reference)) in fractions.iter().zip(&reference.0).enumerate() {
        let (i, j) = (k / b2, k % b2);
        histogram.push(vec![
            Cell::from(hist.x1_range.0 + (i as f64 + 0.5) * w1),
            Cell::from(hist.x2_range.0 + (j as f64 + 0.5) * w2),
            Cell::from(fraction / (w1 * w2)),
            Cell::from(reference / (w1 * w2)),
        ]);
    }
    Ok(Outcome {
        summary,
        tables: vec![table, histogram],
    })
}
