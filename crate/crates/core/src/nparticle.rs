//! Several particles in one dimension each, guided by a configuration-space
//! wavefunction built from sums of products of slit modes,
//!
//! ```text
//! Ψ(x₁, …, x_N, t) = Σ_k c_k Π_i ψ_{k,i}(x_i, t),
//! ```
//!
//! with per-particle velocities `v_i = (ħ/m_i) Im(∂_iΨ/Ψ)`. A single product
//! term is kept factorized: the velocity of particle `i` is then computed from
//! its own factor alone, so it cannot depend on the other coordinates at all.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::dd::DdComplex;
use crate::emergence::DEFAULT_NODE_THRESHOLD;
use crate::error::{invalid, Error, Result};
use crate::grid::{rms, ContinuityReport};
use crate::ode::{integrate, OdeOptions, Output};
use crate::trajectories::{mode_window, substream, SampleTimes, TrajectoryOptions, BORN_WINDOW_SIGMAS};
use crate::wavemode::WaveMode;

/// One term `c Π_i ψ_i(x_i)`, one mode per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub coefficient: Complex64,
    pub factors: Vec<WaveMode>,
}

#[derive(Debug, Clone)]
pub struct NParticleWaveFunction {
    terms: Vec<ProductTerm>,
    masses: Vec<f64>,
    hbar: f64,
    node_threshold: f64,
}

/// A point in configuration space at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationPoint {
    pub positions: Vec<f64>,
    pub t: f64,
}

impl ConfigurationPoint {
    pub fn new(positions: Vec<f64>, t: f64) -> Result<Self> {
        if positions.is_empty() || positions.iter().any(|x| !x.is_finite()) || !t.is_finite() {
            return Err(invalid("config", "positions and time must be finite and nonempty"));
        }
        Ok(Self { positions, t })
    }
}

fn mode_value(mode: &WaveMode, x: f64, t: f64, hbar: f64) -> (DdComplex, DdComplex) {
    let s = mode.sample(x, t);
    let (sin, cos) = (s.s / hbar).sin_cos();
    let psi = DdComplex::polar(s.r, cos, sin);
    (psi, psi.mul_f64(s.dlnr_dx, s.ds_dx / hbar))
}

fn to_complex(z: DdComplex) -> Complex64 {
    Complex64::new(z.re.to_f64(), z.im.to_f64())
}

/// `⟨a|b⟩ = ∫ ψ_a* ψ_b dx` at `t = 0` (conserved by free evolution).
fn overlap(a: &WaveMode, b: &WaveMode) -> Complex64 {
    const N: usize = 8000;
    let (lo, hi) = mode_window(&[*a, *b], 0.0, 14.0);
    let h = (hi - lo) / N as f64;
    let hbar = a.params().hbar();
    let f = |x: f64| {
        let (pa, _) = mode_value(a, x, 0.0, hbar);
        let (pb, _) = mode_value(b, x, 0.0, hbar);
        Complex64::new(pa.conj_mul_re(pb).to_f64(), pa.conj_mul_im(pb).to_f64())
    };
    // Gaussian integrands: the trapezoid rule is spectrally accurate
    let mut sum = 0.5 * (f(lo) + f(hi));
    for k in 1..N {
        sum += f(lo + k as f64 * h);
    }
    sum * h
}

fn mode_norm_sqr(m: &WaveMode) -> f64 {
    m.slit().amplitude.powi(2)
}

impl NParticleWaveFunction {
    pub fn new(terms: Vec<ProductTerm>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| invalid("terms", "at least one term is required"))?;
        let n = first.factors.len();
        if n == 0 {
            return Err(invalid("terms", "each term needs one factor per particle"));
        }
        if terms.iter().any(|t| t.factors.len() != n) {
            return Err(invalid("terms", "all terms must have the same number of factors"));
        }
        if terms.iter().any(|t| !(t.coefficient.re.is_finite() && t.coefficient.im.is_finite())) {
            return Err(invalid("coefficient", "must be finite"));
        }
        let hbar = first.factors[0].params().hbar();
        let masses: Vec<f64> = first.factors.iter().map(|m| m.params().mass()).collect();
        for term in &terms {
            for (i, f) in term.factors.iter().enumerate() {
                if f.params().hbar() != hbar || f.params().mass() != masses[i] {
                    return Err(Error::MismatchedParams);
                }
            }
        }
        Ok(Self {
            terms,
            masses,
            hbar,
            node_threshold: DEFAULT_NODE_THRESHOLD,
        })
    }

    /// `ψ₁(x₁) ψ₂(x₂) ⋯`.
    pub fn product(factors: Vec<WaveMode>) -> Result<Self> {
        Self::new(vec![ProductTerm {
            coefficient: Complex64::new(1.0, 0.0),
            factors,
        }])
    }

    /// `(ψ_a(x₁)ψ_b(x₂) + ψ_b(x₁)ψ_a(x₂)) / norm`.
    pub fn symmetric(a: WaveMode, b: WaveMode) -> Result<Self> {
        Self::exchange(a, b, 1.0)
    }

    /// `(ψ_a(x₁)ψ_b(x₂) − ψ_b(x₁)ψ_a(x₂)) / norm`.
    pub fn antisymmetric(a: WaveMode, b: WaveMode) -> Result<Self> {
        Self::exchange(a, b, -1.0)
    }

    fn exchange(a: WaveMode, b: WaveMode, sign: f64) -> Result<Self> {
        let norm_sqr = 2.0 * mode_norm_sqr(&a) * mode_norm_sqr(&b) + sign * 2.0 * overlap(&a, &b).norm_sqr();
        if !(norm_sqr > 1e-24) {
            return Err(invalid("modes", "exchange combination vanishes identically"));
        }
        let c = 1.0 / norm_sqr.sqrt();
        Self::new(vec![
            ProductTerm {
                coefficient: Complex64::new(c, 0.0),
                factors: vec![a, b],
            },
            ProductTerm {
                coefficient: Complex64::new(sign * c, 0.0),
                factors: vec![b, a],
            },
        ])
    }

    pub fn with_node_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(invalid("node_threshold", "must be finite and nonnegative"));
        }
        self.node_threshold = threshold;
        Ok(self)
    }

    pub fn n_particles(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    pub fn is_factorized(&self) -> bool {
        self.terms.len() == 1
    }

    fn check_config(&self, config: &ConfigurationPoint) -> Result<()> {
        if config.positions.len() != self.n_particles() {
            return Err(invalid(
                "config",
                format!("expected {} positions, got {}", self.n_particles(), config.positions.len()),
            ));
        }
        Ok(())
    }

    fn psi_dd(&self, config: &ConfigurationPoint) -> DdComplex {
        self.terms.iter().fold(DdComplex::ZERO, |acc, term| {
            let mut value = DdComplex::from_f64(term.coefficient.re, term.coefficient.im);
            for (f, &x) in term.factors.iter().zip(&config.positions) {
                value = value.mul(mode_value(f, x, config.t, self.hbar).0);
            }
            acc.add(value)
        })
    }

    /// `Ψ` at a configuration.
    pub fn psi(&self, config: &ConfigurationPoint) -> Result<Complex64> {
        self.check_config(config)?;
        Ok(to_complex(self.psi_dd(config)))
    }

    /// `|Ψ|²` at a configuration.
    pub fn density(&self, config: &ConfigurationPoint) -> Result<f64> {
        self.check_config(config)?;
        Ok(self.psi_dd(config).norm_sqr().to_f64())
    }

    /// `∂_iΨ` at a configuration.
    pub fn gradient(&self, config: &ConfigurationPoint, i: usize) -> Result<Complex64> {
        self.check_config(config)?;
        let c = self.slice(i, config, false)?;
        Ok(to_complex(c.value_dd(config.positions[i]).1))
    }

    /// The slice `x ↦ Ψ(X₁, …, x, …, X_N)` through particle `i`.
    pub fn conditional_wavefunction(&self, i: usize, config: &ConfigurationPoint) -> Result<ConditionalWaveFunction> {
        // frozen factors of a single product only scale the slice and cancel
        // in Im(ψ̃'/ψ̃), so they are dropped
        self.slice(i, config, self.is_factorized())
    }

    fn slice(&self, i: usize, config: &ConfigurationPoint, drop_frozen: bool) -> Result<ConditionalWaveFunction> {
        self.check_config(config)?;
        if i >= self.n_particles() {
            return Err(invalid("i", "particle index out of range"));
        }
        let t = config.t;
        let (weights, modes) = if drop_frozen {
            (vec![DdComplex::from_f64(1.0, 0.0)], vec![self.terms[0].factors[i]])
        } else {
            self.terms
                .iter()
                .map(|term| {
                    let mut w = DdComplex::from_f64(term.coefficient.re, term.coefficient.im);
                    for (j, (f, &x)) in term.factors.iter().zip(&config.positions).enumerate() {
                        if j != i {
                            w = w.mul(mode_value(f, x, t, self.hbar).0);
                        }
                    }
                    (w, term.factors[i])
                })
                .unzip()
        };
        Ok(ConditionalWaveFunction {
            weights,
            modes,
            t,
            hbar: self.hbar,
            mass: self.masses[i],
            node_threshold: self.node_threshold,
            factorized: drop_frozen,
        })
    }
}

/// A single-particle slice of an N-particle wavefunction with every other
/// coordinate frozen. For a factorized state it is the particle's own factor
/// (the frozen constant is dropped).
#[derive(Debug, Clone)]
pub struct ConditionalWaveFunction {
    weights: Vec<DdComplex>,
    modes: Vec<WaveMode>,
    t: f64,
    hbar: f64,
    mass: f64,
    node_threshold: f64,
    factorized: bool,
}

impl ConditionalWaveFunction {
    fn value_dd(&self, x: f64) -> (DdComplex, DdComplex) {
        self.weights
            .iter()
            .zip(&self.modes)
            .fold((DdComplex::ZERO, DdComplex::ZERO), |(psi, dx), (w, m)| {
                let (p, d) = mode_value(m, x, self.t, self.hbar);
                (psi.add(w.mul(p)), dx.add(w.mul(d)))
            })
    }

    /// Whether the frozen factors were dropped (factorized parent state).
    pub fn is_factor(&self) -> bool {
        self.factorized
    }

    pub fn psi(&self, x: f64) -> Complex64 {
        to_complex(self.value_dd(x).0)
    }

    pub fn derivative(&self, x: f64) -> Complex64 {
        to_complex(self.value_dd(x).1)
    }

    /// `(ħ/m) Im(ψ̃'/ψ̃)` at `x`.
    pub fn guidance_velocity(&self, x: f64) -> Result<f64> {
        let (psi, dx) = self.value_dd(x);
        let rho = psi.norm_sqr();
        if !(rho.to_f64() > self.node_threshold) {
            return Err(Error::Node {
                x,
                t: self.t,
                density: rho.to_f64(),
                threshold: self.node_threshold,
            });
        }
        Ok(self.hbar / self.mass * psi.conj_mul_im(dx).div(rho))
    }

    /// `(ħ/m) Im(ψ̃* ψ̃')` at `x`.
    pub fn current(&self, x: f64) -> f64 {
        let (psi, dx) = self.value_dd(x);
        self.hbar / self.mass * psi.conj_mul_im(dx).to_f64()
    }
}

/// `v_i = (ħ/m_i) Im(∂_iΨ/Ψ)` for every particle.
pub fn nparticle_velocities(psi: &NParticleWaveFunction, config: &ConfigurationPoint) -> Result<Vec<f64>> {
    if !psi.is_factorized() {
        let rho = psi.density(config)?;
        if !(rho > psi.node_threshold) {
            return Err(Error::Node {
                x: config.positions[0],
                t: config.t,
                density: rho,
                threshold: psi.node_threshold,
            });
        }
    }
    (0..psi.n_particles())
        .map(|i| {
            psi.conditional_wavefunction(i, config)?
                .guidance_velocity(config.positions[i])
        })
        .collect()
}

/// `J_i = (ħ/m_i) Im(Ψ* ∂_iΨ)` for every particle.
pub fn nparticle_total_current(psi: &NParticleWaveFunction, config: &ConfigurationPoint) -> Result<Vec<f64>> {
    psi.check_config(config)?;
    let full = psi.psi_dd(config);
    (0..psi.n_particles())
        .map(|i| {
            let slice = psi.slice(i, config, false)?;
            let (_, dx) = slice.value_dd(config.positions[i]);
            Ok(psi.hbar / psi.masses[i] * full.conj_mul_im(dx).to_f64())
        })
        .collect()
}

/// Largest change of particle 1's velocity when particle 2 is displaced by
/// `displacement`, over the given configurations. Zero for factorized states.
pub fn nonlocality_metric(
    psi: &NParticleWaveFunction,
    configs: &[ConfigurationPoint],
    displacement: f64,
) -> Result<f64> {
    if psi.n_particles() < 2 {
        return Err(invalid("psi", "nonlocality needs at least two particles"));
    }
    let mut worst = 0.0f64;
    for c in configs {
        let v = nparticle_velocities(psi, c)?[0];
        let mut moved = c.clone();
        moved.positions[1] += displacement;
        let w = nparticle_velocities(psi, &moved)?[0];
        worst = worst.max((w - v).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSample {
    pub t: f64,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationTrajectory {
    pub samples: Vec<ConfigurationSample>,
}

impl ConfigurationTrajectory {
    pub fn end(&self) -> &ConfigurationSample {
        self.samples.last().expect("trajectories hold at least one sample")
    }
}

fn narrowest_width(psi: &NParticleWaveFunction, t: f64) -> f64 {
    psi.terms
        .iter()
        .flat_map(|term| term.factors.iter())
        .map(|m| m.width_at(t))
        .fold(f64::INFINITY, f64::min)
}

/// Integrates `dX_i/dt = v_i(X, t)` from `config0` to `t1`.
pub fn integrate_configuration(
    psi: &NParticleWaveFunction,
    config0: &ConfigurationPoint,
    t1: f64,
    opts: &TrajectoryOptions,
) -> Result<ConfigurationTrajectory> {
    psi.check_config(config0)?;
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(invalid("tol", "must be positive and finite"));
    }
    let t0 = config0.t;
    if !(t1 > t0) {
        return Err(invalid("t1", "must be greater than the start time"));
    }
    nparticle_velocities(psi, config0)?;
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
    let scale = opts.length_scale.unwrap_or_else(|| narrowest_width(psi, t0));
    let ode_opts = OdeOptions {
        rtol: opts.tol,
        atol: opts.tol * scale,
        max_steps: opts.max_steps,
        ..OdeOptions::default()
    };
    let sol = integrate(
        |t, y, dy| {
            let v = nparticle_velocities(
                psi,
                &ConfigurationPoint {
                    positions: y.to_vec(),
                    t,
                },
            )?;
            dy.copy_from_slice(&v);
            Ok(())
        },
        t0,
        &config0.positions,
        t1,
        &ode_opts,
        &output,
    )?;
    let samples = sol
        .t
        .into_iter()
        .zip(sol.y)
        .map(|(t, positions)| {
            let velocities = nparticle_velocities(
                psi,
                &ConfigurationPoint {
                    positions: positions.clone(),
                    t,
                },
            )?;
            Ok(ConfigurationSample {
                t,
                positions,
                velocities,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConfigurationTrajectory { samples })
}

/// Per-particle window covering every factor of that particle `± k·σ(t)`.
pub fn configuration_window(psi: &NParticleWaveFunction, t: f64, k: f64) -> Vec<(f64, f64)> {
    (0..psi.n_particles())
        .map(|i| {
            let modes: Vec<WaveMode> = psi.terms.iter().map(|term| term.factors[i]).collect();
            mode_window(&modes, t, k)
        })
        .collect()
}

const MAX_REJECTIONS: usize = 10_000_000;

/// Rejection sample of `|Ψ(·, t)|²` on the box of `± 10σ(t)` windows.
pub fn sample_configuration<R: Rng + ?Sized>(psi: &NParticleWaveFunction, t: f64, rng: &mut R) -> Result<ConfigurationPoint> {
    let window = configuration_window(psi, t, BORN_WINDOW_SIGMAS);
    // |Σ c_k Π ψ_{k,i}|² ≤ (Σ |c_k| Π peak_{k,i})²
    let bound = psi
        .terms
        .iter()
        .map(|term| term.coefficient.norm() * term.factors.iter().map(|m| m.peak_amplitude(t)).product::<f64>())
        .sum::<f64>()
        .powi(2);
    for _ in 0..MAX_REJECTIONS {
        let positions: Vec<f64> = window.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect();
        let u = rng.random::<f64>() * bound;
        let config = ConfigurationPoint { positions, t };
        if u < psi.density(&config)? {
            return Ok(config);
        }
    }
    Err(invalid("sampler", "configuration rejection sampling did not accept a point"))
}

/// Born-sampled configuration trajectories, in index order, deterministic
/// per seed.
pub fn run_configuration_ensemble(
    psi: &NParticleWaveFunction,
    n_traj: usize,
    seed: u64,
    t0: f64,
    t1: f64,
    opts: &TrajectoryOptions,
) -> Result<Vec<ConfigurationTrajectory>> {
    if n_traj == 0 {
        return Err(invalid("n_traj", "must be at least 1"));
    }
    (0..n_traj)
        .into_par_iter()
        .map(|index| {
            let mut rng = substream(seed, index as u64);
            sample_configuration(psi, t0, &mut rng)
                .and_then(|c0| integrate_configuration(psi, &c0, t1, opts))
                .map_err(|e| Error::Trajectory {
                    index,
                    source: Box::new(e),
                })
        })
        .collect()
}

/// Two-particle histogram on a rectangle, row-major with `x₁` outer.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2d {
    pub x1_range: (f64, f64),
    pub x2_range: (f64, f64),
    pub bins: (usize, usize),
    pub counts: Vec<usize>,
    pub outside: usize,
}

impl Histogram2d {
    pub fn total(&self) -> usize {
        self.counts.iter().sum::<usize>() + self.outside
    }

    pub fn fractions(&self) -> Vec<f64> {
        let n = self.total().max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    pub fn outside_fraction(&self) -> f64 {
        self.outside as f64 / self.total().max(1) as f64
    }
}

pub fn histogram_2d(
    points: &[(f64, f64)],
    x1_range: (f64, f64),
    x2_range: (f64, f64),
    bins: (usize, usize),
) -> Result<Histogram2d> {
    if bins.0 == 0 || bins.1 == 0 {
        return Err(invalid("bins", "must be at least 1 per axis"));
    }
    if !(x1_range.0 < x1_range.1 && x2_range.0 < x2_range.1) {
        return Err(invalid("range", "need lo < hi on both axes"));
    }
    let mut counts = vec![0usize; bins.0 * bins.1];
    let mut outside = 0;
    let w1 = (x1_range.1 - x1_range.0) / bins.0 as f64;
    let w2 = (x2_range.1 - x2_range.0) / bins.1 as f64;
    for &(a, b) in points {
        if a < x1_range.0 || a >= x1_range.1 || b < x2_range.0 || b >= x2_range.1 {
            outside += 1;
            continue;
        }
        let i = (((a - x1_range.0) / w1) as usize).min(bins.0 - 1);
        let j = (((b - x2_range.0) / w2) as usize).min(bins.1 - 1);
        counts[i * bins.1 + j] += 1;
    }
    Ok(Histogram2d {
        x1_range,
        x2_range,
        bins,
        counts,
        outside,
    })
}

fn simpson_weights(n: usize) -> Vec<f64> {
    (0..=n)
        .map(|k| if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 })
        .collect()
}

fn density_integral(psi: &NParticleWaveFunction, t: f64, r1: (f64, f64), r2: (f64, f64), n: usize) -> f64 {
    let n = n + n % 2;
    let w = simpson_weights(n);
    let (h1, h2) = ((r1.1 - r1.0) / n as f64, (r2.1 - r2.0) / n as f64);
    let mut sum = 0.0;
    for (i, wi) in w.iter().enumerate() {
        for (j, wj) in w.iter().enumerate() {
            let config = ConfigurationPoint {
                positions: vec![r1.0 + i as f64 * h1, r2.0 + j as f64 * h2],
                t,
            };
            sum += wi * wj * psi.density(&config).unwrap_or(0.0);
        }
    }
    sum * h1 * h2 / 9.0
}

/// Cell probabilities of `|Ψ(t)|²` on the histogram's cells (same order),
/// normalized over the `± 12σ(t)` box, plus the mass outside the cells.
pub fn configuration_reference(psi: &NParticleWaveFunction, t: f64, hist: &Histogram2d) -> (Vec<f64>, f64) {
    let norm_box = configuration_window(psi, t, 12.0);
    let total = density_integral(psi, t, norm_box[0], norm_box[1], 600);
    let (b1, b2) = hist.bins;
    let w1 = (hist.x1_range.1 - hist.x1_range.0) / b1 as f64;
    let w2 = (hist.x2_range.1 - hist.x2_range.0) / b2 as f64;
    let probs: Vec<f64> = (0..b1 * b2)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / b2, k % b2);
            let r1 = (hist.x1_range.0 + i as f64 * w1, hist.x1_range.0 + (i + 1) as f64 * w1);
            let r2 = (hist.x2_range.0 + j as f64 * w2, hist.x2_range.0 + (j + 1) as f64 * w2);
            density_integral(psi, t, r1, r2, 16) / total
        })
        .collect();
    let inside: f64 = probs.iter().sum();
    (probs, (1.0 - inside).max(0.0))
}

/// L1 distance between a histogram and reference cell probabilities,
/// counting the mismatch of the mass outside the cells.
pub fn l1_distance_2d(hist: &Histogram2d, reference: &(Vec<f64>, f64)) -> f64 {
    hist.fractions()
        .iter()
        .zip(&reference.0)
        .map(|(h, p)| (h - p).abs())
        .sum::<f64>()
        + (hist.outside_fraction() - reference.1).abs()
}

/// Half-width, in mode widths at the final time, of the configuration
/// histogram window.
pub const CONFIGURATION_WINDOW_SIGMAS: f64 = 5.0;

/// Histogram of the final configurations of a two-particle ensemble against
/// `|Ψ(t1)|²`. Returns the histogram, the reference, and their L1 distance.
pub fn compare_configurations(
    psi: &NParticleWaveFunction,
    trajectories: &[ConfigurationTrajectory],
    bins: (usize, usize),
) -> Result<(Histogram2d, (Vec<f64>, f64), f64)> {
    if psi.n_particles() != 2 {
        return Err(invalid("psi", "configuration histograms need exactly two particles"));
    }
    let t1 = trajectories
        .first()
        .ok_or_else(|| invalid("trajectories", "empty ensemble"))?
        .end()
        .t;
    let points: Vec<(f64, f64)> = trajectories
        .iter()
        .map(|tr| (tr.end().positions[0], tr.end().positions[1]))
        .collect();
    let window = configuration_window(psi, t1, CONFIGURATION_WINDOW_SIGMAS);
    let hist = histogram_2d(&points, window[0], window[1], bins)?;
    let reference = configuration_reference(psi, t1, &hist);
    let l1 = l1_distance_2d(&hist, &reference);
    Ok((hist, reference, l1))
}

/// Continuity residual `∂_t|Ψ|² + Σ_i ∂_i J_i` of a two-particle state on an
/// `n × n` grid over the box at time `t`, with central differences of spatial
/// step `h` and time step `h_t`.
pub fn configuration_continuity_residual(
    psi: &NParticleWaveFunction,
    x1_range: (f64, f64),
    x2_range: (f64, f64),
    n: usize,
    t: f64,
    h: f64,
    h_t: f64,
) -> Result<Vec<f64>> {
    if psi.n_particles() != 2 {
        return Err(invalid("psi", "the grid residual is implemented for two particles"));
    }
    if n < 2 || !(h > 0.0 && h_t > 0.0) {
        return Err(invalid("grid", "need n ≥ 2 and positive steps"));
    }
    let node = |k: usize, r: (f64, f64)| r.0 + (r.1 - r.0) * k as f64 / (n - 1) as f64;
    (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (x1, x2) = (node(k / n, x1_range), node(k % n, x2_range));
            let at = |a: f64, b: f64, tt: f64| ConfigurationPoint {
                positions: vec![a, b],
                t: tt,
            };
            let dp_dt = (psi.density(&at(x1, x2, t + h_t))? - psi.density(&at(x1, x2, t - h_t))?) / (2.0 * h_t);
            let dj1 = (nparticle_total_current(psi, &at(x1 + h, x2, t))?[0]
                - nparticle_total_current(psi, &at(x1 - h, x2, t))?[0])
                / (2.0 * h);
            let dj2 = (nparticle_total_current(psi, &at(x1, x2 + h, t))?[1]
                - nparticle_total_current(psi, &at(x1, x2 - h, t))?[1])
                / (2.0 * h);
            Ok(dp_dt + dj1 + dj2)
        })
        .collect()
}

/// Residual norms with the stencil steps starting at the grid spacing and
/// halved `levels − 1` times; ratios near 4 indicate second order.
pub fn configuration_continuity_convergence(
    psi: &NParticleWaveFunction,
    x1_range: (f64, f64),
    x2_range: (f64, f64),
    n: usize,
    t: f64,
    dt: f64,
    levels: usize,
) -> Result<ContinuityReport> {
    if levels < 2 {
        return Err(invalid("levels", "need at least two refinement levels"));
    }
    let mut h = ((x1_range.1 - x1_range.0) / (n - 1) as f64).min((x2_range.1 - x2_range.0) / (n - 1) as f64);
    let mut h_t = dt;
    let mut steps = Vec::new();
    let mut norms = Vec::new();
    for _ in 0..levels {
        norms.push(rms(&configuration_continuity_residual(psi, x1_range, x2_range, n, t, h, h_t)?));
        steps.push((h, h_t));
        h *= 0.5;
        h_t *= 0.5;
    }
    let ratios = norms.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(ContinuityReport {
        steps,
        norms,
        ratios,
    })
}
