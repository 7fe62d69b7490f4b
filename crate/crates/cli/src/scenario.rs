//! Scenario files: parsing, defaults, validation and the content hash that
//! tags every artifact.

use std::path::{Path, PathBuf};

use emergent_core::grid::Grid;
use emergent_core::trajectories::Sampler;
use emergent_core::{make_gaussian_mode, PhysicalParams, SlitSpec, WaveMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Default grid half-width in mode widths when the x-range is not given.
pub const DEFAULT_AUTO_K: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub physics: Physics,
    pub slits: Vec<Slit>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub screen: ScreenSpec,
    /// Never part of the hash: moving the output directory does not change
    /// what is computed.
    #[serde(default, skip_serializing)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nparticle: Option<NParticleSpec>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Slit {
    pub center: f64,
    pub sigma: f64,
    #[serde(default)]
    pub velocity: f64,
    #[serde(default)]
    pub phase_offset: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Both or neither of `x_min`/`x_max`; when absent the range covers every
    /// slit `± auto_k·σ(t)` over the time range.
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    #[serde(default = "default_nx")]
    pub nx: usize,
    #[serde(default)]
    pub t_min: f64,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_nt")]
    pub nt: usize,
    #[serde(default = "default_auto_k")]
    pub auto_k: f64,
    /// Refinement levels of the continuity check.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: None,
            x_max: None,
            nx: default_nx(),
            t_min: 0.0,
            t_max: default_t_max(),
            nt: default_nt(),
            auto_k: default_auto_k(),
            levels: default_levels(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerName {
    Born,
    PerSlitGaussian,
}

impl From<SamplerName> for Sampler {
    fn from(s: SamplerName) -> Self {
        match s {
            SamplerName::Born => Sampler::Born,
            SamplerName::PerSlitGaussian => Sampler::PerSlitGaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    #[serde(default = "default_sampler")]
    pub sampler: SamplerName,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub t0: f64,
    /// End time; the grid's `t_max` when absent.
    pub t1: Option<f64>,
    /// Recorded samples per trajectory, equally spaced, endpoints included.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub with_acceleration: bool,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self {
            sampler: default_sampler(),
            n_traj: default_n_traj(),
            seed: default_seed(),
            tol: default_tol(),
            t0: 0.0,
            t1: None,
            samples: default_samples(),
            with_acceleration: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreenSpec {
    /// Screen time; the ensemble end time when absent.
    pub t_screen: Option<f64>,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

impl Default for ScreenSpec {
    fn default() -> Self {
        Self {
            t_screen: None,
            bins: default_bins(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Product,
    Symmetric,
    Antisymmetric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NParticleSpec {
    pub state: StateKind,
    /// Indices into `slits` for the two one-particle modes.
    #[serde(default = "default_pair")]
    pub modes: [usize; 2],
    #[serde(default = "default_nparticle_traj")]
    pub n_traj: usize,
    /// End time; the ensemble end time when absent.
    pub t1: Option<f64>,
    #[serde(default = "default_nparticle_bins")]
    pub bins: usize,
    #[serde(default = "default_identity_checks")]
    pub identity_checks: usize,
    /// Displacement of particle 2 in the nonlocality probe; the first mode's
    /// width when absent.
    pub displacement: Option<f64>,
    #[serde(default = "default_samples_np")]
    pub samples: usize,
}

/// Pass/fail limits applied to the summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default = "d_velocity")]
    pub velocity: f64,
    #[serde(default = "d_force")]
    pub force: f64,
    #[serde(default = "d_ratio_lo")]
    pub continuity_ratio_min: f64,
    #[serde(default = "d_ratio_hi")]
    pub continuity_ratio_max: f64,
    #[serde(default = "d_screen")]
    pub screen_l1: f64,
    #[serde(default = "d_config")]
    pub configuration_l1: f64,
    #[serde(default = "d_identity")]
    pub conditional_identity: f64,
    #[serde(default = "d_nonlocality")]
    pub nonlocality_min: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            velocity: d_velocity(),
            force: d_force(),
            continuity_ratio_min: d_ratio_lo(),
            continuity_ratio_max: d_ratio_hi(),
            screen_l1: d_screen(),
            configuration_l1: d_config(),
            conditional_identity: d_identity(),
            nonlocality_min: d_nonlocality(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_nx() -> usize {
    200
}
fn default_nt() -> usize {
    100
}
fn default_t_max() -> f64 {
    3.0
}
fn default_auto_k() -> f64 {
    DEFAULT_AUTO_K
}
fn default_levels() -> usize {
    3
}
fn default_sampler() -> SamplerName {
    SamplerName::Born
}
fn default_n_traj() -> usize {
    1000
}
fn default_seed() -> u64 {
    42
}
fn default_tol() -> f64 {
    1e-10
}
fn default_samples() -> usize {
    61
}
fn default_samples_np() -> usize {
    31
}
fn default_bins() -> usize {
    50
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_pair() -> [usize; 2] {
    [0, 1]
}
fn default_nparticle_traj() -> usize {
    1000
}
fn default_nparticle_bins() -> usize {
    10
}
fn default_identity_checks() -> usize {
    1000
}
fn d_velocity() -> f64 {
    1e-10
}
fn d_force() -> f64 {
    1e-4
}
fn d_ratio_lo() -> f64 {
    3.6
}
fn d_ratio_hi() -> f64 {
    4.4
}
fn d_screen() -> f64 {
    0.05
}
fn d_config() -> f64 {
    0.08
}
fn d_identity() -> f64 {
    1e-12
}
fn d_nonlocality() -> f64 {
    1e-6
}

fn field_error(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field_error(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(field_error(field, format!("must be finite, got {v}")))
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| CliError::Parse {
            message: e.message().to_string(),
            location: e.span().map(|span| line_col(text, span.start)),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("physics.hbar", self.physics.hbar)?;
        positive("physics.mass", self.physics.mass)?;
        if self.slits.is_empty() {
            return Err(field_error("slits", "at least one [[slits]] entry is required"));
        }
        for (i, s) in self.slits.iter().enumerate() {
            let name = |f: &str| format!("slits[{i}].{f}");
            finite(&name("center"), s.center)?;
            positive(&name("sigma"), s.sigma)?;
            finite(&name("velocity"), s.velocity)?;
            finite(&name("phase_offset"), s.phase_offset)?;
            positive(&name("amplitude"), s.amplitude)?;
        }
        let g = &self.grid;
        if g.nx < 2 {
            return Err(field_error("grid.nx", "must be at least 2"));
        }
        if g.nt < 2 {
            return Err(field_error("grid.nt", "must be at least 2"));
        }
        finite("grid.t_min", g.t_min)?;
        finite("grid.t_max", g.t_max)?;
        if g.t_min >= g.t_max {
            return Err(field_error("grid.t_max", "need t_min < t_max"));
        }
        match (g.x_min, g.x_max) {
            (Some(lo), Some(hi)) => {
                finite("grid.x_min", lo)?;
                finite("grid.x_max", hi)?;
                if lo >= hi {
                    return Err(field_error("grid.x_max", "need x_min < x_max"));
                }
            }
            (None, None) => {}
            _ => return Err(field_error("grid.x_min", "give both x_min and x_max, or neither")),
        }
        positive("grid.auto_k", g.auto_k)?;
        if g.levels < 2 {
            return Err(field_error("grid.levels", "must be at least 2"));
        }
        let e = &self.ensemble;
        if e.n_traj == 0 {
            return Err(field_error("ensemble.n_traj", "must be at least 1"));
        }
        positive("ensemble.tol", e.tol)?;
        finite("ensemble.t0", e.t0)?;
        if self.t1() <= e.t0 || !self.t1().is_finite() {
            return Err(field_error("ensemble.t1", "must be finite and greater than t0"));
        }
        if e.samples < 2 {
            return Err(field_error("ensemble.samples", "must be at least 2"));
        }
        let ts = self.t_screen();
        if !(ts > e.t0 && ts <= self.t1()) {
            return Err(field_error("screen.t_screen", "must lie in (t0, t1]"));
        }
        if self.screen.bins == 0 {
            return Err(field_error("screen.bins", "must be at least 1"));
        }
        if let Some(np) = &self.nparticle {
            for (k, &i) in np.modes.iter().enumerate() {
                if i >= self.slits.len() {
                    return Err(field_error(
                        &format!("nparticle.modes[{k}]"),
                        format!("slit index {i} out of range ({} slits)", self.slits.len()),
                    ));
                }
            }
            if np.n_traj == 0 {
                return Err(field_error("nparticle.n_traj", "must be at least 1"));
            }
            if np.bins == 0 {
                return Err(field_error("nparticle.bins", "must be at least 1"));
            }
            if np.samples < 2 {
                return Err(field_error("nparticle.samples", "must be at least 2"));
            }
            if let Some(t1) = np.t1 {
                if !(t1 > e.t0 && t1.is_finite()) {
                    return Err(field_error("nparticle.t1", "must be finite and greater than ensemble.t0"));
                }
            }
            if let Some(d) = np.displacement {
                finite("nparticle.displacement", d)?;
                if d == 0.0 {
                    return Err(field_error("nparticle.displacement", "must be nonzero"));
                }
            }
        }
        let th = &self.thresholds;
        for (name, v) in [
            ("thresholds.velocity", th.velocity),
            ("thresholds.force", th.force),
            ("thresholds.screen_l1", th.screen_l1),
            ("thresholds.configuration_l1", th.configuration_l1),
            ("thresholds.conditional_identity", th.conditional_identity),
        ] {
            positive(name, v)?;
        }
        if !(th.continuity_ratio_min < th.continuity_ratio_max) {
            return Err(field_error("thresholds.continuity_ratio_max", "must exceed continuity_ratio_min"));
        }
        Ok(())
    }

    pub fn params(&self) -> PhysicalParams {
        PhysicalParams::new(self.physics.hbar, self.physics.mass).expect("validated")
    }

    pub fn modes(&self) -> Result<Vec<WaveMode>, CliError> {
        let p = self.params();
        self.slits
            .iter()
            .map(|s| {
                make_gaussian_mode(
                    SlitSpec::new(s.center, s.sigma)
                        .with_velocity(s.velocity)
                        .with_phase_offset(s.phase_offset)
                        .with_amplitude(s.amplitude),
                    p,
                )
                .map_err(CliError::from)
            })
            .collect()
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = &self.grid;
        match (g.x_min, g.x_max) {
            (Some(lo), Some(hi)) => Ok(Grid::new(lo, hi, g.nx, g.t_min, g.t_max, g.nt)?),
            _ => Ok(Grid::auto(&self.modes()?, g.auto_k, g.nx, g.t_min, g.t_max, g.nt)?),
        }
    }

    pub fn t1(&self) -> f64 {
        self.ensemble.t1.unwrap_or(self.grid.t_max)
    }

    pub fn t_screen(&self) -> f64 {
        self.screen.t_screen.unwrap_or_else(|| self.t1())
    }

    /// SHA-256 of the canonical JSON form of everything that determines the
    /// computed results (the output directory is excluded).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenarios serialize");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}
