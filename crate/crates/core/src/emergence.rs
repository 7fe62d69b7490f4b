//! Emergent density, current, velocity and acceleration built from the channel
//! projections.
//!
//! `P_tot = Σ P(w_i)`, `J_tot = Σ w_i P(w_i)` and `v_tot = J_tot / P_tot`.
//! The acceleration is the quotient-rule expansion of `d v_tot / dt` over the
//! channels, with `d/dt` the material derivative `∂_t + v_tot ∂_x`.

use crate::channels::{ChannelKind, ChannelSet, ChannelSnapshot};
use crate::dd::Dd;
use crate::error::{invalid, Error, Result};
use crate::wavemode::{shared_params, WaveMode};

/// Default density floor below which velocities are undefined.
pub const DEFAULT_NODE_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct EmergentField {
    channels: ChannelSet,
    node_threshold: f64,
}

/// Field quantities at one spacetime point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub p_tot: f64,
    pub j_tot: f64,
    /// Absent at or below the node threshold.
    pub v_tot: Option<f64>,
    pub a_tot: Option<f64>,
    /// Only for two-slit systems.
    pub entangling_current: Option<f64>,
}

impl EmergentField {
    pub fn new(channels: ChannelSet) -> Self {
        Self {
            channels,
            node_threshold: DEFAULT_NODE_THRESHOLD,
        }
    }

    pub fn from_modes(modes: Vec<WaveMode>) -> Result<Self> {
        Ok(Self::new(ChannelSet::build(modes)?))
    }

    pub fn with_node_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold.is_finite() && threshold > 0.0) {
            return Err(invalid("node_threshold", "must be finite and > 0"));
        }
        self.node_threshold = threshold;
        Ok(self)
    }

    pub fn channels(&self) -> &ChannelSet {
        &self.channels
    }

    pub fn modes(&self) -> &[WaveMode] {
        self.channels.modes()
    }

    pub fn node_threshold(&self) -> f64 {
        self.node_threshold
    }

    /// Smallest packet width among the modes at time `t`.
    pub fn min_width(&self, t: f64) -> f64 {
        self.modes()
            .iter()
            .map(|m| m.width_at(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn total_density(&self, x: f64, t: f64) -> f64 {
        self.channels.snapshot(x, t).total_density()
    }

    pub fn total_current(&self, x: f64, t: f64) -> f64 {
        self.channels.snapshot(x, t).total_current()
    }

    fn checked_density(&self, snap: &ChannelSnapshot, x: f64, t: f64) -> Result<f64> {
        let p = snap.total_density();
        if p > self.node_threshold {
            Ok(p)
        } else {
            Err(Error::Node {
                x,
                t,
                density: p,
                threshold: self.node_threshold,
            })
        }
    }

    pub fn emergent_velocity(&self, x: f64, t: f64) -> Result<f64> {
        let snap = self.channels.snapshot(x, t);
        self.checked_density(&snap, x, t)?;
        Ok(snap.velocity_ratio())
    }

    /// Material acceleration `∂_t v_tot + v_tot ∂_x v_tot` from analytic channel
    /// derivatives.
    pub fn emergent_acceleration(&self, x: f64, t: f64) -> Result<f64> {
        let snap = self.channels.snapshot(x, t);
        let p_tot = self.checked_density(&snap, x, t)?;
        let j_tot = snap.total_current();
        let v = j_tot / p_tot;
        let hbar = self.channels.params().hbar();
        let m = self.channels.params().mass();

        // D(R(w_i) ŵ_i) and D w_i for each channel
        let n = snap.values.len();
        let mut d_phasor = Vec::with_capacity(n);
        let mut d_velocity = Vec::with_capacity(n);
        for value in &snap.values {
            let s = &snap.samples[value.channel.slit_index];
            let d_lnr = s.dlnr_dt + v * s.dlnr_dx;
            let d_theta = (s.ds_dt + v * s.ds_dx) / hbar;
            let [cx, cy] = value.direction;
            let a = value.amplitude;
            d_phasor.push([a * (d_lnr * cx - d_theta * cy), a * (d_lnr * cy + d_theta * cx)]);
            let d_diffusive = -(hbar / m) * (s.d2lnr_dxdt + v * s.d2lnr_dx2);
            d_velocity.push(match value.channel.kind {
                ChannelKind::Convective => (s.d2s_dxdt + v * s.d2s_dx2) / m,
                ChannelKind::DiffusiveRight => d_diffusive,
                ChannelKind::DiffusiveLeft => -d_diffusive,
            });
        }
        let d_resultant = d_phasor
            .iter()
            .fold([0.0, 0.0], |acc, d| [acc[0] + d[0], acc[1] + d[1]]);

        let mut flux_rate = 0.0; // Σ [P_i Dw_i + w_i DP_i]
        let mut density_rate = 0.0; // Σ DP_i
        for (i, value) in snap.values.iter().enumerate() {
            let ph = value.phasor();
            let dp = d_phasor[i][0] * snap.resultant[0]
                + d_phasor[i][1] * snap.resultant[1]
                + ph[0] * d_resultant[0]
                + ph[1] * d_resultant[1];
            let p_i = snap.conditional_probability(i);
            flux_rate += p_i * d_velocity[i] + value.velocity * dp;
            density_rate += dp;
        }
        let a = (flux_rate * p_tot - j_tot * density_rate) / (p_tot * p_tot);
        if a.is_finite() {
            Ok(a)
        } else {
            Err(Error::NonFinite { x, t })
        }
    }

    /// Finite-difference fallback for the material acceleration: 5-point
    /// central stencils in `x` and `t` of `v_tot`, spatial step `σ(t)/512`,
    /// temporal step `mσ(t)²/(512ħ)`, Richardson-combined with the doubled step.
    pub fn emergent_acceleration_fd(&self, x: f64, t: f64) -> Result<f64> {
        let sigma = self.min_width(t);
        let p = self.channels.params();
        let hx = sigma / 512.0;
        let ht = p.mass() * sigma * sigma / (512.0 * p.hbar());
        let v0 = self.emergent_velocity(x, t)?;
        let estimate = |hx: f64, ht: f64| -> Result<f64> {
            let vx = |dx: f64| self.emergent_velocity(x + dx, t);
            let vt = |dt: f64| self.emergent_velocity(x, t + dt);
            let ddx = (-vx(2.0 * hx)? + 8.0 * vx(hx)? - 8.0 * vx(-hx)? + vx(-2.0 * hx)?)
                / (12.0 * hx);
            let ddt = (-vt(2.0 * ht)? + 8.0 * vt(ht)? - 8.0 * vt(-ht)? + vt(-2.0 * ht)?)
                / (12.0 * ht);
            Ok(ddt + v0 * ddx)
        };
        let straddle = |e: Error| match e {
            Error::Node { .. } => Error::NonFinite { x, t },
            other => other,
        };
        let fine = estimate(hx, ht).map_err(straddle)?;
        let coarse = estimate(2.0 * hx, 2.0 * ht).map_err(straddle)?;
        let a = fine + (fine - coarse) / 15.0;
        if a.is_finite() {
            Ok(a)
        } else {
            Err(Error::NonFinite { x, t })
        }
    }

    pub fn sample(&self, x: f64, t: f64, with_acceleration: bool) -> FieldSample {
        let snap = self.channels.snapshot(x, t);
        let p_tot = snap.total_density();
        let j_tot = snap.total_current();
        let v_tot = (p_tot > self.node_threshold).then(|| snap.velocity_ratio());
        let a_tot = match (with_acceleration, v_tot) {
            (true, Some(_)) => self.emergent_acceleration(x, t).ok(),
            _ => None,
        };
        let entangling_current = match self.modes() {
            [m1, m2] => Some(entangling_current(m1, m2, x, t)),
            _ => None,
        };
        FieldSample {
            p_tot,
            j_tot,
            v_tot,
            a_tot,
            entangling_current,
        }
    }
}

/// Ingredients of the two-slit closed form at one point.
struct PairTerms {
    r1: f64,
    r2: f64,
    ln_r1r2: f64,
    v1: f64,
    v2: f64,
    u1: f64,
    u2: f64,
    phi: f64,
    /// `(sin, cos)` of `S_i/ħ`.
    phase1: (f64, f64),
    phase2: (f64, f64),
}

fn pair_terms(mode1: &WaveMode, mode2: &WaveMode, x: f64, t: f64) -> PairTerms {
    let p = mode1.params();
    let (hbar, m) = (p.hbar(), p.mass());
    let s1 = mode1.sample(x, t);
    let s2 = mode2.sample(x, t);
    PairTerms {
        r1: s1.r,
        r2: s2.r,
        ln_r1r2: s1.ln_r + s2.ln_r,
        v1: s1.ds_dx / m,
        v2: s2.ds_dx / m,
        u1: -(hbar / m) * s1.dlnr_dx,
        u2: -(hbar / m) * s2.dlnr_dx,
        phi: (s1.s - s2.s) / hbar,
        phase1: (s1.s / hbar).sin_cos(),
        phase2: (s2.s / hbar).sin_cos(),
    }
}

impl PairTerms {
    /// `(v₁+v₂) cos φ + (u₂−u₁) sin φ`, the bracket multiplying `R₁R₂`.
    fn cross_bracket(&self) -> f64 {
        let (sin, cos) = self.phi.sin_cos();
        (self.v1 + self.v2) * cos + (self.u2 - self.u1) * sin
    }
}

/// Two-slit velocity in closed form,
///
/// ```text
/// v_tot = [R₁²v₁ + R₂²v₂ + R₁R₂(v₁+v₂) cos φ + R₁R₂(u₂−u₁) sin φ]
///         / [R₁² + R₂² + 2R₁R₂ cos φ]
/// ```
///
/// with `φ = (S₁−S₂)/ħ`, `v_i = ∇S_i/m`, `u_i = −(ħ/m)∇R_i/R_i`.
///
/// The terms are evaluated from the mode phasors `ψ_k = R_k e^{iS_k/ħ}`:
/// `R_k² = |ψ_k|²`, `R₁R₂ cos φ = Re ψ₁ψ₂*`, `R₁R₂ sin φ = Im ψ₁ψ₂*`, with every
/// product and sum carried in double-double precision. The denominator then is
/// the squared modulus of a perturbed `ψ₁+ψ₂` and stays accurate in deep
/// fringe minima, and the numerator survives the cancellation at zeros of the
/// current.
pub fn double_slit_velocity_closed_form(
    mode1: &WaveMode,
    mode2: &WaveMode,
    x: f64,
    t: f64,
    node_threshold: f64,
) -> Result<f64> {
    shared_params(&[*mode1, *mode2])?;
    let q = pair_terms(mode1, mode2, x, t);
    let ((s1, c1), (s2, c2)) = (q.phase1, q.phase2);
    let (re1, im1) = (Dd::prod(q.r1, c1), Dd::prod(q.r1, s1));
    let (re2, im2) = (Dd::prod(q.r2, c2), Dd::prod(q.r2, s2));
    let r1_sq = re1 * re1 + im1 * im1;
    let r2_sq = re2 * re2 + im2 * im2;
    let cross_cos = re1 * re2 + im1 * im2;
    let cross_sin = im1 * re2 - re1 * im2;
    let denom = r1_sq + r2_sq + cross_cos * 2.0;
    if denom.to_f64() <= node_threshold {
        return Err(Error::Node {
            x,
            t,
            density: denom.to_f64(),
            threshold: node_threshold,
        });
    }
    let numer = r1_sq * q.v1
        + r2_sq * q.v2
        + cross_cos * Dd::sum(q.v1, q.v2)
        + cross_sin * Dd::sum(q.u2, -q.u1);
    Ok(numer.div(denom))
}

/// The `R₁R₂` cross terms of the two-slit current, the part of `J_tot` that
/// mixes channels of different slits.
pub fn entangling_current(mode1: &WaveMode, mode2: &WaveMode, x: f64, t: f64) -> f64 {
    let q = pair_terms(mode1, mode2, x, t);
    q.ln_r1r2.exp() * q.cross_bracket()
}

/// The entangling current as `(sign, ln |value|)`, resolvable where the linear
/// product `R₁R₂` underflows. A zero bracket returns `(0.0, -inf)`.
pub fn entangling_current_log(mode1: &WaveMode, mode2: &WaveMode, x: f64, t: f64) -> (f64, f64) {
    let q = pair_terms(mode1, mode2, x, t);
    let bracket = q.cross_bracket();
    if bracket == 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    (bracket.signum(), q.ln_r1r2 + bracket.abs().ln())
}
