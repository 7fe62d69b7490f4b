//! Trajectories `ẋ = v(x, t)` through a velocity field, ensembles of them,
//! and the diagnostics computed on ensembles: axis crossings, screen
//! histograms against `|Ψ|²`, and fringe spacing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::emergence::EmergentField;
use crate::error::{invalid, Error, Result};
use crate::ode::{integrate, OdeOptions, Output};
use crate::oracle::WaveFunction;
use crate::wavemode::WaveMode;

/// A one-dimensional velocity field generated by a set of slit modes.
pub trait VelocityField: Sync {
    fn velocity(&self, x: f64, t: f64) -> Result<f64>;
    fn acceleration(&self, x: f64, t: f64) -> Result<f64>;
    fn density(&self, x: f64, t: f64) -> f64;
    fn modes(&self) -> &[WaveMode];
}

impl VelocityField for EmergentField {
    fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        self.emergent_velocity(x, t)
    }

    fn acceleration(&self, x: f64, t: f64) -> Result<f64> {
        self.emergent_acceleration(x, t)
    }

    fn density(&self, x: f64, t: f64) -> f64 {
        self.total_density(x, t)
    }

    fn modes(&self) -> &[WaveMode] {
        EmergentField::modes(self)
    }
}

impl VelocityField for WaveFunction {
    fn velocity(&self, x: f64, t: f64) -> Result<f64> {
        self.bohm_velocity(x, t)
    }

    fn acceleration(&self, x: f64, t: f64) -> Result<f64> {
        self.quantum_force(x, t)
    }

    fn density(&self, x: f64, t: f64) -> f64 {
        WaveFunction::density(self, x, t)
    }

    fn modes(&self) -> &[WaveMode] {
        WaveFunction::modes(self)
    }
}

/// Which side of a symmetry axis a trajectory starts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    OnAxis,
}

impl Side {
    pub fn of(x: f64, axis: f64) -> Self {
        if x < axis {
            Side::Left
        } else if x > axis {
            Side::Right
        } else {
            Side::OnAxis
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub a: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    pub start_side: Option<Side>,
}

impl Trajectory {
    pub fn start(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn end(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectories hold at least one sample")
    }

    /// Position at a recorded sample time.
    pub fn position_at(&self, t: f64) -> Option<f64> {
        let tol = 1e-12 * t.abs().max(1.0);
        self.samples
            .iter()
            .find(|s| (s.t - t).abs() <= tol)
            .map(|s| s.x)
    }

    pub fn with_axis(mut self, axis: f64) -> Self {
        self.start_side = Some(Side::of(self.start().x, axis));
        self
    }
}

/// When trajectory samples are recorded.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleTimes {
    /// Every accepted integrator step.
    Steps,
    /// `n + 1` equally spaced times from `t0` to `t1` inclusive.
    Uniform(usize),
    /// Explicit times inside `[t0, t1]`, nondecreasing.
    Times(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOptions {
    /// Relative tolerance; the absolute tolerance is `tol · length_scale`.
    pub tol: f64,
    /// Length unit for the absolute tolerance; the narrowest mode width at
    /// `t0` when `None`.
    pub length_scale: Option<f64>,
    pub times: SampleTimes,
    pub with_acceleration: bool,
    pub max_steps: usize,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            length_scale: None,
            times: SampleTimes::Steps,
            with_acceleration: false,
            max_steps: 1_000_000,
        }
    }
}

impl TrajectoryOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    fn absolute_tolerance<F: VelocityField + ?Sized>(&self, field: &F, t0: f64) -> f64 {
        let scale = self.length_scale.unwrap_or_else(|| narrowest_width(field.modes(), t0));
        self.tol * scale
    }
}

fn narrowest_width(modes: &[WaveMode], t: f64) -> f64 {
    modes
        .iter()
        .map(|m| m.width_at(t))
        .fold(f64::INFINITY, f64::min)
}

/// Integrates `ẋ = v(x, t)` from `(x0, t0)` to `t1`.
pub fn integrate_trajectory<F: VelocityField + ?Sized>(
    field: &F,
    x0: f64,
    t0: f64,
    t1: f64,
    opts: &TrajectoryOptions,
) -> Result<Trajectory> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(invalid("tol", "must be positive and finite"));
    }
    if !x0.is_finite() {
        return Err(invalid("x0", "must be finite"));
    }
    if !(t1 > t0) {
        return Err(invalid("t1", "must be greater than t0"));
    }
    // fails with a node error when the start sits on a node
    field.velocity(x0, t0)?;

    let output = match &opts.times {
        SampleTimes::Steps => Output::Steps,
        SampleTimes::Uniform(n) => {
            let n = (*n).max(1);
            Output::Times(
                (0..=n)
                    .map(|k| if k == n { t1 } else { t0 + (t1 - t0) * k as f64 / n as f64 })
                    .collect(),
            )
        }
        SampleTimes::Times(times) => Output::Times(times.clone()),
    };
    let ode_opts = OdeOptions {
        rtol: opts.tol,
        atol: opts.absolute_tolerance(field, t0),
        max_steps: opts.max_steps,
        ..OdeOptions::default()
    };
    let sol = integrate(
        |t, y, dy| {
            dy[0] = field.velocity(y[0], t)?;
            Ok(())
        },
        t0,
        &[x0],
        t1,
        &ode_opts,
        &output,
    )?;
    let samples = sol
        .t
        .iter()
        .zip(&sol.y)
        .map(|(&t, y)| {
            let x = y[0];
            Ok(TrajectorySample {
                t,
                x,
                v: field.velocity(x, t)?,
                a: if opts.with_acceleration {
                    Some(field.acceleration(x, t)?)
                } else {
                    None
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        samples,
        start_side: None,
    })
}

/// Initial-position distribution of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sampler {
    /// Rejection sampling of `|Ψ(x, t0)|²` on the window spanning every
    /// mode's center `± 10σ(t0)`.
    Born,
    /// Pick slit `k` with weight `a_k²`, then draw from its own `R_k²`.
    PerSlitGaussian,
}

impl Sampler {
    pub fn name(self) -> &'static str {
        match self {
            Sampler::Born => "born",
            Sampler::PerSlitGaussian => "per_slit_gaussian",
        }
    }
}

/// Half-width of the Born sampling window in units of the mode widths.
pub const BORN_WINDOW_SIGMAS: f64 = 10.0;

const MAX_REJECTIONS: usize = 10_000_000;

/// Window covering every mode's center `± k·σ(t)`.
pub fn mode_window(modes: &[WaveMode], t: f64, k: f64) -> (f64, f64) {
    modes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), m| {
        (
            lo.min(m.center_at(t) - k * m.width_at(t)),
            hi.max(m.center_at(t) + k * m.width_at(t)),
        )
    })
}

/// Draws one initial position.
pub fn sample_initial<F: VelocityField + ?Sized, R: Rng + ?Sized>(
    field: &F,
    sampler: Sampler,
    t0: f64,
    rng: &mut R,
) -> Result<f64> {
    let modes = field.modes();
    if modes.is_empty() {
        return Err(invalid("modes", "at least one mode is required"));
    }
    match sampler {
        Sampler::Born => {
            let (lo, hi) = mode_window(modes, t0, BORN_WINDOW_SIGMAS);
            // |Σψ_k|² ≤ (Σ|ψ_k|)² ≤ (Σ peak_k)²
            let bound = modes.iter().map(|m| m.peak_amplitude(t0)).sum::<f64>().powi(2);
            for _ in 0..MAX_REJECTIONS {
                let x = rng.random_range(lo..hi);
                let u = rng.random::<f64>() * bound;
                if u < field.density(x, t0) {
                    return Ok(x);
                }
            }
            Err(invalid("sampler", "Born rejection sampling did not accept a point"))
        }
        Sampler::PerSlitGaussian => {
            let weights: Vec<f64> = modes.iter().map(|m| m.slit().amplitude.powi(2)).collect();
            let total: f64 = weights.iter().sum();
            let mut pick = rng.random::<f64>() * total;
            let mut k = modes.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if pick < *w {
                    k = i;
                    break;
                }
                pick -= w;
            }
            let m = &modes[k];
            let normal = Normal::new(m.center_at(t0), m.width_at(t0))
                .map_err(|e| invalid("sampler", e.to_string()))?;
            Ok(normal.sample(rng))
        }
    }
}

/// Generator for draw `index` of an ensemble seeded with `seed`: one ChaCha
/// stream per index, so draws are independent of scheduling.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub sampler: Sampler,
    pub n_traj: usize,
    pub seed: u64,
    pub t0: f64,
    pub t1: f64,
    pub options: TrajectoryOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub trajectories: Vec<Trajectory>,
    pub sampler: Sampler,
    pub seed: u64,
    pub tol: f64,
    /// Mirror axis of the mode set, if it has one.
    pub axis: Option<f64>,
    pub slit_count: usize,
}

/// Samples and integrates `n_traj` trajectories in parallel; results are in
/// index order and bit-identical for a fixed seed.
pub fn run_ensemble<F: VelocityField + ?Sized>(field: &F, config: &EnsembleConfig) -> Result<Ensemble> {
    if config.n_traj == 0 {
        return Err(invalid("n_traj", "must be at least 1"));
    }
    let axis = symmetry_axis(field.modes());
    let trajectories = (0..config.n_traj)
        .into_par_iter()
        .map(|index| {
            let mut rng = substream(config.seed, index as u64);
            let mut run = || {
                let x0 = sample_initial(field, config.sampler, config.t0, &mut rng)?;
                let traj = integrate_trajectory(field, x0, config.t0, config.t1, &config.options)?;
                Ok(match axis {
                    Some(a) => traj.with_axis(a),
                    None => traj,
                })
            };
            run().map_err(|e: Error| Error::Trajectory {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble {
        trajectories,
        sampler: config.sampler,
        seed: config.seed,
        tol: config.options.tol,
        axis,
        slit_count: field.modes().len(),
    })
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * scale
}

/// The mirror axis of a mode set with at least two modes: every mode must have
/// a partner (possibly itself) that is its reflection, with equal width and
/// amplitude, opposite velocity and equal phase offset.
pub fn symmetry_axis(modes: &[WaveMode]) -> Option<f64> {
    if modes.len() < 2 {
        return None;
    }
    let axis = modes.iter().map(|m| m.slit().center).sum::<f64>() / modes.len() as f64;
    let scale = modes
        .iter()
        .map(|m| m.slit().center.abs().max(m.slit().width_sigma))
        .fold(1.0, f64::max);
    let mut used = vec![false; modes.len()];
    for (i, a) in modes.iter().enumerate() {
        if used[i] {
            continue;
        }
        let sa = a.slit();
        let partner = (0..modes.len()).find(|&j| {
            let sb = modes[j].slit();
            !used[j]
                && close(sb.center, 2.0 * axis - sa.center, scale)
                && close(sb.width_sigma, sa.width_sigma, sa.width_sigma)
                && close(sb.forward_phase_velocity, -sa.forward_phase_velocity, 1.0)
                && close(sb.amplitude, sa.amplitude, sa.amplitude)
                && close(
                    (sb.relative_phase_offset - sa.relative_phase_offset).rem_euclid(std::f64::consts::TAU),
                    0.0,
                    1.0,
                )
        })?;
        used[i] = true;
        used[partner] = true;
    }
    Some(axis)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoCrossingReport {
    /// False when the property does not apply (fewer than two slits or no
    /// mirror symmetry); `note` says why.
    pub applicable: bool,
    pub note: Option<String>,
    pub axis: Option<f64>,
    pub guard_band: f64,
    pub crossings_per_trajectory: Vec<usize>,
    pub crossings_total: usize,
    /// Farthest excursion past the axis away from the starting side.
    pub max_violation: f64,
}

/// Counts sign changes of `x(t) − axis` outside a guard band of
/// `±guard_band` around the axis.
pub fn no_crossing_report(ensemble: &Ensemble, axis: Option<f64>, guard_band: f64) -> NoCrossingReport {
    let not_applicable = |note: &str| NoCrossingReport {
        applicable: false,
        note: Some(note.to_string()),
        axis,
        guard_band,
        crossings_per_trajectory: Vec::new(),
        crossings_total: 0,
        max_violation: 0.0,
    };
    if ensemble.slit_count < 2 {
        return not_applicable("single slit: axis crossing is permitted");
    }
    let Some(axis) = axis else {
        return not_applicable("no mirror symmetry axis");
    };
    let mut max_violation = 0.0f64;
    let crossings_per_trajectory: Vec<usize> = ensemble
        .trajectories
        .iter()
        .map(|traj| {
            let mut side: Option<bool> = None;
            let mut crossings = 0;
            let start = traj.start().x - axis;
            for s in &traj.samples {
                let d = s.x - axis;
                if start != 0.0 && d * start.signum() < 0.0 {
                    max_violation = max_violation.max(d.abs());
                }
                if d.abs() <= guard_band {
                    continue;
                }
                let right = d > 0.0;
                if let Some(prev) = side {
                    if prev != right {
                        crossings += 1;
                    }
                }
                side = Some(right);
            }
            crossings
        })
        .collect();
    NoCrossingReport {
        applicable: true,
        note: None,
        axis: Some(axis),
        guard_band,
        crossings_total: crossings_per_trajectory.iter().sum(),
        crossings_per_trajectory,
        max_violation,
    }
}

/// Positions of every trajectory at `t_screen`, which must be a recorded
/// sample time of each.
pub fn screen_positions(ensemble: &Ensemble, t_screen: f64) -> Result<Vec<f64>> {
    ensemble
        .trajectories
        .iter()
        .map(|traj| {
            traj.position_at(t_screen)
                .ok_or_else(|| invalid("t_screen", format!("no trajectory sample at t={t_screen}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub below: usize,
    pub above: usize,
}

impl ScreenHistogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.below + self.above
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Fraction of all samples per bin.
    pub fn fractions(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// Normalized density: fraction per unit length.
    pub fn density(&self) -> Vec<f64> {
        let w = self.bin_width();
        self.fractions().into_iter().map(|f| f / w).collect()
    }

    pub fn outside_fraction(&self) -> f64 {
        (self.below + self.above) as f64 / self.total().max(1) as f64
    }
}

fn edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins)
        .map(|k| if k == bins { hi } else { lo + (hi - lo) * k as f64 / bins as f64 })
        .collect()
}

/// Histogram of `positions` over `[lo, hi)` with equal bins; samples outside
/// are counted separately.
pub fn screen_histogram(positions: &[f64], lo: f64, hi: f64, bins: usize) -> Result<ScreenHistogram> {
    if bins == 0 {
        return Err(invalid("bins", "must be at least 1"));
    }
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(invalid("range", "need finite lo < hi"));
    }
    let mut counts = vec![0usize; bins];
    let (mut below, mut above) = (0, 0);
    let width = (hi - lo) / bins as f64;
    for &x in positions {
        if x < lo {
            below += 1;
        } else if x >= hi {
            above += 1;
        } else {
            let k = (((x - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
    }
    Ok(ScreenHistogram {
        edges: edges(lo, hi, bins),
        counts,
        below,
        above,
    })
}

/// Probability of each bin under a density, normalized by its integral over
/// `[norm_lo, norm_hi]` (which should cover essentially all of the mass).
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceProfile {
    pub probabilities: Vec<f64>,
    pub outside: f64,
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + k as f64 * h);
    }
    sum * h / 3.0
}

pub fn reference_profile<F: Fn(f64) -> f64>(
    density: F,
    edges: &[f64],
    norm_lo: f64,
    norm_hi: f64,
) -> ReferenceProfile {
    const PER_BIN: usize = 32;
    let masses: Vec<f64> = edges
        .windows(2)
        .map(|w| simpson(&density, w[0], w[1], PER_BIN))
        .collect();
    let total = simpson(&density, norm_lo, norm_hi, PER_BIN * 200);
    let probabilities: Vec<f64> = masses.iter().map(|m| m / total).collect();
    let inside: f64 = probabilities.iter().sum();
    ReferenceProfile {
        probabilities,
        outside: (1.0 - inside).max(0.0),
    }
}

/// `Σ_b |h_b − p_b|` over the bins plus the mismatch in mass outside them.
pub fn l1_distance(hist: &ScreenHistogram, reference: &ReferenceProfile) -> f64 {
    hist.fractions()
        .iter()
        .zip(&reference.probabilities)
        .map(|(h, p)| (h - p).abs())
        .sum::<f64>()
        + (hist.outside_fraction() - reference.outside).abs()
}

/// Histogram of an ensemble at `t_screen` together with `|Ψ|²` binned on the
/// same edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenComparison {
    pub histogram: ScreenHistogram,
    pub reference: ReferenceProfile,
    pub l1: f64,
}

/// Half-width of the screen window in mode widths at the screen time.
pub const SCREEN_WINDOW_SIGMAS: f64 = 6.0;

pub fn compare_screen<F: VelocityField + ?Sized>(
    field: &F,
    ensemble: &Ensemble,
    t_screen: f64,
    bins: usize,
) -> Result<ScreenComparison> {
    let positions = screen_positions(ensemble, t_screen)?;
    let (lo, hi) = mode_window(field.modes(), t_screen, SCREEN_WINDOW_SIGMAS);
    let histogram = screen_histogram(&positions, lo, hi, bins)?;
    let (norm_lo, norm_hi) = mode_window(field.modes(), t_screen, 2.0 * SCREEN_WINDOW_SIGMAS);
    let reference = reference_profile(|x| field.density(x, t_screen), &histogram.edges, norm_lo, norm_hi);
    let l1 = l1_distance(&histogram, &reference);
    Ok(ScreenComparison {
        histogram,
        reference,
        l1,
    })
}

/// Fringe maxima of a binned profile: local maxima of the `[1, 2, 1]`
/// smoothed values above `min_fraction` of the largest, refined by a
/// parabola through the neighbouring bins.
pub fn fringe_maxima(centers: &[f64], values: &[f64], min_fraction: f64) -> Vec<f64> {
    let n = values.len();
    if n < 3 || centers.len() != n {
        return Vec::new();
    }
    let smooth: Vec<f64> = (0..n)
        .map(|k| {
            let l = values[k.saturating_sub(1)];
            let r = values[(k + 1).min(n - 1)];
            0.25 * (l + 2.0 * values[k] + r)
        })
        .collect();
    let peak = smooth.iter().cloned().fold(0.0, f64::max);
    let width = centers[1] - centers[0];
    (1..n - 1)
        .filter(|&k| smooth[k] > smooth[k - 1] && smooth[k] >= smooth[k + 1] && smooth[k] >= min_fraction * peak)
        .map(|k| {
            let (l, c, r) = (smooth[k - 1], smooth[k], smooth[k + 1]);
            let denom = l - 2.0 * c + r;
            let shift = if denom < 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
            centers[k] + shift.clamp(-0.5, 0.5) * width
        })
        .collect()
}

/// Median spacing between consecutive maxima.
pub fn median_spacing(maxima: &[f64]) -> Option<f64> {
    let mut gaps: Vec<f64> = maxima.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(f64::total_cmp);
    let m = gaps.len();
    Some(if m % 2 == 1 {
        gaps[m / 2]
    } else {
        0.5 * (gaps[m / 2 - 1] + gaps[m / 2])
    })
}

/// Interference fringe spacing of two equal-width Gaussian sources at time
/// `t`. The phase difference is then linear in `x` with wavenumber
/// `m(v₁−v₂)/ħ + τ((c₂−c₁) + (v₂−v₁)t)/(2σ_t²)`, `τ = ħt/(2mσ²)`, so the
/// fringes are exactly uniform; for `τ ≫ 1` and equal velocities the spacing
/// tends to the far-field `2πħt/(m d)`.
pub fn two_source_fringe_spacing(mode1: &WaveMode, mode2: &WaveMode, t: f64) -> Result<f64> {
    let (a, b) = (mode1.slit(), mode2.slit());
    if (a.width_sigma - b.width_sigma).abs() > 1e-12 * a.width_sigma {
        return Err(invalid("modes", "two-source spacing needs equal widths"));
    }
    let p = mode1.params();
    let (hbar, m) = (p.hbar(), p.mass());
    let tau = mode1.tau(t);
    let sigma_t = mode1.width_at(t);
    let k = m * (a.forward_phase_velocity - b.forward_phase_velocity) / hbar
        + tau * ((b.center - a.center) + (b.forward_phase_velocity - a.forward_phase_velocity) * t)
            / (2.0 * sigma_t * sigma_t);
    if k == 0.0 {
        return Err(invalid("modes", "sources are coherent everywhere; no fringes"));
    }
    Ok(std::f64::consts::TAU / k.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavemode::{make_gaussian_mode, PhysicalParams, SlitSpec};

    fn mode(center: f64, sigma: f64, v: f64) -> WaveMode {
        make_gaussian_mode(SlitSpec::new(center, sigma).with_velocity(v), PhysicalParams::default())
            .unwrap()
    }

    #[test]
    fn center_follows_ehrenfest_path() {
        let m = mode(0.5, 0.8, 0.3);
        let field = EmergentField::from_modes(vec![m]).unwrap();
        let traj = integrate_trajectory(&field, 0.5, 0.0, 3.0, &TrajectoryOptions::with_tol(1e-10)).unwrap();
        for s in &traj.samples {
            assert!((s.x - (0.5 + 0.3 * s.t)).abs() < 1e-9, "{s:?}");
        }
    }

    #[test]
    fn off_center_start_scales_with_width() {
        let m = mode(0.5, 0.8, 0.3);
        let field = EmergentField::from_modes(vec![m]).unwrap();
        let opts = TrajectoryOptions {
            tol: 1e-10,
            times: SampleTimes::Uniform(30),
            ..TrajectoryOptions::default()
        };
        let traj = integrate_trajectory(&field, 0.5 + 0.8, 0.0, 3.0, &opts).unwrap();
        assert_eq!(traj.samples.len(), 31);
        for s in &traj.samples {
            let expected = 0.5 + 0.3 * s.t + 0.8 * m.width_at(s.t) / 0.8;
            assert!((s.x - expected).abs() < 1e-8, "{s:?}");
        }
    }

    #[test]
    fn invalid_requests() {
        let field = EmergentField::from_modes(vec![mode(0.0, 1.0, 0.0)]).unwrap();
        let opts = TrajectoryOptions::default();
        assert!(integrate_trajectory(&field, 0.0, 1.0, 1.0, &opts).is_err());
        assert!(integrate_trajectory(&field, f64::NAN, 0.0, 1.0, &opts).is_err());
        assert!(integrate_trajectory(&field, 0.0, 0.0, 1.0, &TrajectoryOptions::with_tol(0.0)).is_err());
        // deep in the tail the density underflows to zero
        assert!(matches!(
            integrate_trajectory(&field, 1e3, 0.0, 1.0, &opts),
            Err(Error::Node { .. })
        ));
    }

    #[test]
    fn ensemble_rejects_zero_and_is_deterministic() {
        let field = EmergentField::from_modes(vec![mode(-1.5, 0.5, 0.0), mode(1.5, 0.5, 0.0)]).unwrap();
        let mut cfg = EnsembleConfig {
            sampler: Sampler::Born,
            n_traj: 0,
            seed: 7,
            t0: 0.0,
            t1: 1.0,
            options: TrajectoryOptions {
                tol: 1e-8,
                times: SampleTimes::Uniform(4),
                ..TrajectoryOptions::default()
            },
        };
        assert!(run_ensemble(&field, &cfg).is_err());
        cfg.n_traj = 16;
        let a = run_ensemble(&field, &cfg).unwrap();
        let b = run_ensemble(&field, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.axis, Some(0.0));
        assert!(a.trajectories.iter().all(|t| t.start_side.is_some()));
        cfg.seed = 8;
        let c = run_ensemble(&field, &cfg).unwrap();
        assert_ne!(a.trajectories[0].start().x, c.trajectories[0].start().x);
    }

    #[test]
    fn per_slit_sampler_picks_both_slits() {
        let field = EmergentField::from_modes(vec![mode(-5.0, 0.3, 0.0), mode(5.0, 0.3, 0.0)]).unwrap();
        let mut rng = substream(1, 0);
        let xs: Vec<f64> = (0..400)
            .map(|_| sample_initial(&field, Sampler::PerSlitGaussian, 0.0, &mut rng).unwrap())
            .collect();
        let left = xs.iter().filter(|&&x| x < 0.0).count();
        assert!((150..250).contains(&left), "{left}");
        assert!(xs.iter().all(|x| (x.abs() - 5.0).abs() < 2.0));
    }

    #[test]
    fn symmetry_detection() {
        assert_eq!(symmetry_axis(&[mode(0.0, 1.0, 0.0)]), None);
        assert_eq!(symmetry_axis(&[mode(1.0, 0.5, 0.2), mode(3.0, 0.5, -0.2)]), Some(2.0));
        assert_eq!(symmetry_axis(&[mode(1.0, 0.5, 0.2), mode(3.0, 0.5, 0.2)]), None);
        assert_eq!(symmetry_axis(&[mode(1.0, 0.5, 0.0), mode(3.0, 0.6, 0.0)]), None);
        assert_eq!(
            symmetry_axis(&[mode(-2.0, 0.5, 0.0), mode(0.0, 0.4, 0.0), mode(2.0, 0.5, 0.0)]),
            Some(0.0)
        );
    }

    fn ensemble_of(paths: Vec<Vec<f64>>, slit_count: usize) -> Ensemble {
        Ensemble {
            trajectories: paths
                .into_iter()
                .map(|xs| Trajectory {
                    samples: xs
                        .into_iter()
                        .enumerate()
                        .map(|(k, x)| TrajectorySample {
                            t: k as f64,
                            x,
                            v: 0.0,
                            a: None,
                        })
                        .collect(),
                    start_side: None,
                })
                .collect(),
            sampler: Sampler::Born,
            seed: 0,
            tol: 1e-10,
            axis: Some(0.0),
            slit_count,
        }
    }

    #[test]
    fn crossing_counts_respect_guard_band() {
        let e = ensemble_of(vec![vec![1.0, 0.5, -0.5, 0.5], vec![1.0, 1e-12, -1e-12, 1.0]], 2);
        let r = no_crossing_report(&e, Some(0.0), 1e-9);
        assert!(r.applicable);
        assert_eq!(r.crossings_per_trajectory, vec![2, 0]);
        assert_eq!(r.crossings_total, 2);
        assert_eq!(r.max_violation, 0.5);
        let single = no_crossing_report(&ensemble_of(vec![vec![1.0, -1.0]], 1), Some(0.0), 0.0);
        assert!(!single.applicable);
        assert!(single.note.unwrap().contains("single slit"));
    }

    #[test]
    fn histogram_basics() {
        let h = screen_histogram(&[0.05], 0.0, 1.0, 10).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_eq!(h.counts[0], 1);
        assert!((h.density().iter().sum::<f64>() * h.bin_width() - 1.0).abs() < 1e-12);
        let h = screen_histogram(&[-1.0, 0.2, 0.99, 1.0, 5.0], 0.0, 1.0, 4).unwrap();
        assert_eq!((h.below, h.above), (1, 2));
        assert_eq!(h.counts, vec![1, 0, 0, 1]);
        assert!(screen_histogram(&[0.0], 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn reference_profile_of_uniform() {
        let e = edges(0.0, 1.0, 4);
        let r = reference_profile(|_| 0.5, &e, 0.0, 2.0);
        for p in &r.probabilities {
            assert!((p - 0.125).abs() < 1e-12);
        }
        assert!((r.outside - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fringe_maxima_of_cosine_profile() {
        let centers: Vec<f64> = (0..100).map(|k| 0.1 * k as f64 + 0.05).collect();
        let values: Vec<f64> = centers.iter().map(|x| 1.0 + (std::f64::consts::TAU * x / 2.0).cos()).collect();
        let maxima = fringe_maxima(&centers, &values, 0.5);
        let spacing = median_spacing(&maxima).unwrap();
        assert!((spacing - 2.0).abs() < 0.05, "{maxima:?}");
    }

    #[test]
    fn fringe_spacing_far_field_limit() {
        let (m1, m2) = (mode(-2.0, 0.3, 0.0), mode(2.0, 0.3, 0.0));
        let t = 200.0;
        let spacing = two_source_fringe_spacing(&m1, &m2, t).unwrap();
        let far = std::f64::consts::TAU * t / 4.0;
        assert!((spacing / far - 1.0).abs() < 1e-3);
        assert!(two_source_fringe_spacing(&m1, &mode(2.0, 0.4, 0.0), 1.0).is_err());
    }
}
