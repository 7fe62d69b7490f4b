//! Velocity channels of an n-slit system.
//!
//! Every slit contributes three channels: a convective one moving with the
//! phase velocity `v = ∇S/m`, and a pair of diffusive ones moving with
//! `u = −(ħ/m)∇R/R` and its negation. Each channel carries an amplitude and a
//! unit direction `ŵ` in the phase plane; the mutual phase cosines are
//! `cos φ_ij = ŵ_i · ŵ_j`.
//!
//! Phase-angle assignment for slit `k`:
//!
//! | kind           | velocity          | amplitude | angle        |
//! |----------------|-------------------|-----------|--------------|
//! | Convective     | `∇S_k/m`          | `R_k`     | `S_k/ħ`      |
//! | DiffusiveRight | `−(ħ/m)∇R_k/R_k`  | `R_k/2`   | `S_k/ħ + π/2`|
//! | DiffusiveLeft  | `+(ħ/m)∇R_k/R_k`  | `R_k/2`   | `S_k/ħ − π/2`|
//!
//! The diffusive directions are exact quarter-turn rotations of the convective
//! direction, so the two diffusive phasors of a slit cancel in the resultant
//! and the total density of one slit is `R_k²`.

use crate::dd::Dd;
use crate::error::{invalid, Result};
use crate::wavemode::{shared_params, ModeSample, PhysicalParams, WaveMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Convective,
    DiffusiveRight,
    DiffusiveLeft,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 3] = [
        ChannelKind::Convective,
        ChannelKind::DiffusiveRight,
        ChannelKind::DiffusiveLeft,
    ];

    /// Offset of the channel angle from `S/ħ`.
    pub fn phase_shift(self) -> f64 {
        use std::f64::consts::FRAC_PI_2;
        match self {
            ChannelKind::Convective => 0.0,
            ChannelKind::DiffusiveRight => FRAC_PI_2,
            ChannelKind::DiffusiveLeft => -FRAC_PI_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Convective => "convective",
            ChannelKind::DiffusiveRight => "diffusive_right",
            ChannelKind::DiffusiveLeft => "diffusive_left",
        }
    }
}

/// Identifies a channel: which slit it belongs to and which of the three it is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Channel {
    pub kind: ChannelKind,
    pub slit_index: usize,
}

/// A channel evaluated at one spacetime point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelValue {
    pub channel: Channel,
    /// `w_i`.
    pub velocity: f64,
    /// `R(w_i) ≥ 0`.
    pub amplitude: f64,
    /// Unit direction `ŵ_i = (cos θ_i, sin θ_i)`.
    pub direction: [f64; 2],
    /// `θ_i`, radians.
    pub phase_angle: f64,
}

impl ChannelValue {
    /// `R(w_i) ŵ_i`.
    pub fn phasor(&self) -> [f64; 2] {
        [
            self.amplitude * self.direction[0],
            self.amplitude * self.direction[1],
        ]
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Exact `R(w_i) ŵ_i`.
fn phasor_dd(v: &ChannelValue) -> [Dd; 2] {
    [
        Dd::prod(v.amplitude, v.direction[0]),
        Dd::prod(v.amplitude, v.direction[1]),
    ]
}

/// The `3n` channels of an n-slit system.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    modes: Vec<WaveMode>,
    channels: Vec<Channel>,
    params: PhysicalParams,
}

pub fn build_channels(modes: Vec<WaveMode>) -> Result<ChannelSet> {
    ChannelSet::build(modes)
}

impl ChannelSet {
    pub fn build(modes: Vec<WaveMode>) -> Result<Self> {
        let params = shared_params(&modes)?;
        let channels = (0..modes.len())
            .flat_map(|slit_index| {
                ChannelKind::ALL
                    .into_iter()
                    .map(move |kind| Channel { kind, slit_index })
            })
            .collect();
        Ok(Self {
            modes,
            channels,
            params,
        })
    }

    /// Same channels in a different order; `order[k]` is the index of the
    /// channel placed at position `k`.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.channels.len()];
        if order.len() != self.channels.len() {
            return Err(invalid("order", "must be a permutation of the channel indices"));
        }
        for &k in order {
            if k >= seen.len() || std::mem::replace(&mut seen[k], true) {
                return Err(invalid("order", "must be a permutation of the channel indices"));
            }
        }
        Ok(Self {
            modes: self.modes.clone(),
            channels: order.iter().map(|&k| self.channels[k]).collect(),
            params: self.params,
        })
    }

    pub fn modes(&self) -> &[WaveMode] {
        &self.modes
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn slit_count(&self) -> usize {
        self.modes.len()
    }

    /// Evaluates all modes and channels at `(x, t)`.
    pub fn snapshot(&self, x: f64, t: f64) -> ChannelSnapshot {
        let samples: Vec<ModeSample> = self.modes.iter().map(|m| m.sample(x, t)).collect();
        let hbar = self.params.hbar();
        let m = self.params.mass();
        let values: Vec<ChannelValue> = self
            .channels
            .iter()
            .map(|&channel| {
                let s = &samples[channel.slit_index];
                let theta = s.s / hbar;
                let (sin, cos) = theta.sin_cos();
                let diffusive = -(hbar / m) * s.dlnr_dx;
                let (velocity, amplitude, direction) = match channel.kind {
                    ChannelKind::Convective => (s.ds_dx / m, s.r, [cos, sin]),
                    ChannelKind::DiffusiveRight => (diffusive, 0.5 * s.r, [-sin, cos]),
                    ChannelKind::DiffusiveLeft => (-diffusive, 0.5 * s.r, [sin, -cos]),
                };
                ChannelValue {
                    channel,
                    velocity,
                    amplitude,
                    direction,
                    phase_angle: theta + channel.kind.phase_shift(),
                }
            })
            .collect();
        let resultant_dd = values.iter().fold([Dd::ZERO; 2], |acc, v| {
            let p = phasor_dd(v);
            [acc[0] + p[0], acc[1] + p[1]]
        });
        ChannelSnapshot {
            samples,
            values,
            resultant: [resultant_dd[0].to_f64(), resultant_dd[1].to_f64()],
            resultant_dd,
        }
    }

    pub fn phase_cosine(&self, i: usize, j: usize, x: f64, t: f64) -> f64 {
        self.snapshot(x, t).phase_cosine(i, j)
    }

    pub fn conditional_probability(&self, i: usize, x: f64, t: f64) -> f64 {
        self.snapshot(x, t).conditional_probability(i)
    }

    pub fn channel_current(&self, i: usize, x: f64, t: f64) -> f64 {
        self.snapshot(x, t).channel_current(i)
    }
}

/// All channels evaluated at one point, with the resultant phasor
/// `Σ_j ŵ_j R(w_j)` precomputed.
///
/// Projections and their sums are accumulated in double-double precision: the
/// diffusive phasors of a slit cancel in the resultant, and near zeros of the
/// total current the channel currents cancel against each other, so plain
/// `f64` sums would leave rounding residue of order `ε·max|w_i|` there.
#[derive(Debug, Clone)]
pub struct ChannelSnapshot {
    pub samples: Vec<ModeSample>,
    pub values: Vec<ChannelValue>,
    /// Resultant phasor rounded to `f64`.
    pub resultant: [f64; 2],
    resultant_dd: [Dd; 2],
}

impl ChannelSnapshot {
    pub fn phase_cosine(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        dot(self.values[i].direction, self.values[j].direction).clamp(-1.0, 1.0)
    }

    /// `P(w_i) = R(w_i) ŵ_i · Σ_j ŵ_j R(w_j)`, a signed relational density.
    pub fn conditional_probability(&self, i: usize) -> f64 {
        self.conditional_probability_dd(i).to_f64()
    }

    fn conditional_probability_dd(&self, i: usize) -> Dd {
        let p = phasor_dd(&self.values[i]);
        p[0] * self.resultant_dd[0] + p[1] * self.resultant_dd[1]
    }

    fn channel_current_dd(&self, i: usize) -> Dd {
        self.conditional_probability_dd(i) * self.values[i].velocity
    }

    pub(crate) fn total_density_dd(&self) -> Dd {
        (0..self.values.len())
            .map(|i| self.conditional_probability_dd(i))
            .sum()
    }

    pub(crate) fn total_current_dd(&self) -> Dd {
        (0..self.values.len()).map(|i| self.channel_current_dd(i)).sum()
    }

    /// `P(w_i)` summed pairwise as `R(w_i) Σ_j cos φ_ij R(w_j)`.
    pub fn conditional_probability_pairwise(&self, i: usize) -> f64 {
        let a = self.values[i].amplitude;
        (0..self.values.len())
            .map(|j| a * self.phase_cosine(i, j) * self.values[j].amplitude)
            .sum()
    }

    /// `J(w_i) = w_i P(w_i)`.
    pub fn channel_current(&self, i: usize) -> f64 {
        self.channel_current_dd(i).to_f64()
    }

    /// `Σ_i P(w_i)`.
    pub fn total_density(&self) -> f64 {
        self.total_density_dd().to_f64()
    }

    /// `(Σ_i ŵ_i R(w_i))²`.
    pub fn squared_resultant(&self) -> f64 {
        let [a, b] = self.resultant_dd;
        (a * a + b * b).to_f64()
    }

    /// `Σ_i w_i P(w_i)`.
    pub fn total_current(&self) -> f64 {
        self.total_current_dd().to_f64()
    }

    /// `Σ_i w_i P(w_i) / Σ_i P(w_i)`, divided before rounding.
    pub(crate) fn velocity_ratio(&self) -> f64 {
        self.total_current_dd().div(self.total_density_dd())
    }
}
