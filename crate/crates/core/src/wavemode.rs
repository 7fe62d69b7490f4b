//! Per-slit wave modes.
//!
//! Each slit launches a freely dispersing Gaussian packet in the transverse
//! coordinate. A mode is kept in amplitude/phase form, `R(x,t)` and `S(x,t)`,
//! with every derivative the channel algebra and the oracle need in closed
//! form. Amplitudes are evaluated in log space so far tails never underflow
//! before they are exponentiated; there is no cutoff anywhere in the domain.
//!
//! The packet for a slit at `c` with initial width `σ`, drift `v` and phase
//! offset `φ0` is
//!
//! ```text
//! τ    = ħ t / (2 m σ²)
//! σ_t² = σ² (1 + τ²)
//! y    = x − c − v t
//! ln R = ln a − ¼ ln(2π σ_t²) − y² / (4 σ_t²)
//! S    = m v (x − c) − m v² t / 2 + ħ τ y² / (4 σ_t²) − (ħ/2) atan τ + ħ φ0
//! ```
//!
//! which is the exact free Schrödinger evolution of a boosted Gaussian.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Action scale and mass shared by a set of modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    hbar: f64,
    mass: f64,
    diffusion_coefficient: f64,
}

impl PhysicalParams {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(invalid("hbar", format!("must be finite and > 0, got {hbar}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(invalid("mass", format!("must be finite and > 0, got {mass}")));
        }
        Ok(Self {
            hbar,
            mass,
            diffusion_coefficient: hbar / (2.0 * mass),
        })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `D = ħ / 2m`.
    pub fn diffusion_coefficient(&self) -> f64 {
        self.diffusion_coefficient
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::new(1.0, 1.0).expect("unit parameters are valid")
    }
}

/// Geometry and launch conditions of one slit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlitSpec {
    pub center: f64,
    /// Initial Gaussian standard deviation of `R²`.
    pub width_sigma: f64,
    /// Mean transverse velocity imparted at the slit.
    pub forward_phase_velocity: f64,
    /// Dimensionless phase added to `S/ħ`.
    pub relative_phase_offset: f64,
    /// Relative weight of the slit; modes are normalized individually and then scaled by this.
    pub amplitude: f64,
}

impl SlitSpec {
    pub fn new(center: f64, width_sigma: f64) -> Self {
        Self {
            center,
            width_sigma,
            forward_phase_velocity: 0.0,
            relative_phase_offset: 0.0,
            amplitude: 1.0,
        }
    }

    pub fn with_velocity(mut self, velocity: f64) -> Self {
        self.forward_phase_velocity = velocity;
        self
    }

    pub fn with_phase_offset(mut self, offset: f64) -> Self {
        self.relative_phase_offset = offset;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(invalid("center", "must be finite"));
        }
        if !(self.width_sigma.is_finite() && self.width_sigma > 0.0) {
            return Err(invalid(
                "sigma",
                format!("must be finite and > 0, got {}", self.width_sigma),
            ));
        }
        if !self.forward_phase_velocity.is_finite() {
            return Err(invalid("velocity", "must be finite"));
        }
        if !self.relative_phase_offset.is_finite() {
            return Err(invalid("phase_offset", "must be finite"));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(invalid(
                "amplitude",
                format!("must be finite and > 0, got {}", self.amplitude),
            ));
        }
        Ok(())
    }
}

/// Everything known about a mode at one spacetime point.
///
/// `x`-derivatives are transverse gradients. Third derivatives of `ln R` and
/// `S` vanish for Gaussians but are carried so consumers do not bake that in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSample {
    pub ln_r: f64,
    pub r: f64,
    pub dr_dx: f64,
    pub d2r_dx2: f64,
    pub dr_dt: f64,
    pub dlnr_dx: f64,
    pub d2lnr_dx2: f64,
    pub d3lnr_dx3: f64,
    pub dlnr_dt: f64,
    pub d2lnr_dxdt: f64,
    pub s: f64,
    pub ds_dx: f64,
    pub d2s_dx2: f64,
    pub d3s_dx3: f64,
    pub ds_dt: f64,
    pub d2s_dxdt: f64,
}

/// A dispersive Gaussian mode launched from one slit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveMode {
    slit: SlitSpec,
    params: PhysicalParams,
    /// `dτ/dt = ħ / (2 m σ²)`.
    spreading_rate: f64,
}

pub fn make_gaussian_mode(slit: SlitSpec, params: PhysicalParams) -> Result<WaveMode> {
    WaveMode::gaussian(slit, params)
}

impl WaveMode {
    pub fn gaussian(slit: SlitSpec, params: PhysicalParams) -> Result<Self> {
        slit.validate()?;
        // re-validate in case params were built by hand-copying fields
        PhysicalParams::new(params.hbar, params.mass)?;
        let spreading_rate = params.hbar / (2.0 * params.mass * slit.width_sigma.powi(2));
        Ok(Self {
            slit,
            params,
            spreading_rate,
        })
    }

    pub fn slit(&self) -> &SlitSpec {
        &self.slit
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    /// Dimensionless spreading time `τ = ħt/(2mσ²)`.
    pub fn tau(&self, t: f64) -> f64 {
        self.spreading_rate * t
    }

    /// `σ(t) = σ sqrt(1 + τ²)`.
    pub fn width_at(&self, t: f64) -> f64 {
        self.slit.width_sigma * self.tau(t).hypot(1.0)
    }

    /// Center of the packet, moving with the forward velocity.
    pub fn center_at(&self, t: f64) -> f64 {
        self.slit.center + self.slit.forward_phase_velocity * t
    }

    /// Largest value `R` takes at time `t` (at the packet center).
    pub fn peak_amplitude(&self, t: f64) -> f64 {
        let w2 = self.width_at(t).powi(2);
        self.slit.amplitude * (2.0 * PI * w2).powf(-0.25)
    }

    pub fn ln_amplitude(&self, x: f64, t: f64) -> f64 {
        let w2 = self.width_at(t).powi(2);
        let y = x - self.center_at(t);
        self.slit.amplitude.ln() - 0.25 * (2.0 * PI * w2).ln() - y * y / (4.0 * w2)
    }

    pub fn amplitude(&self, x: f64, t: f64) -> f64 {
        self.ln_amplitude(x, t).exp()
    }

    /// Phase action `S(x,t)`.
    pub fn action(&self, x: f64, t: f64) -> f64 {
        self.sample(x, t).s
    }

    pub fn sample(&self, x: f64, t: f64) -> ModeSample {
        let SlitSpec {
            center: c,
            width_sigma: sigma,
            forward_phase_velocity: v,
            relative_phase_offset: phi0,
            amplitude,
        } = self.slit;
        let hbar = self.params.hbar;
        let m = self.params.mass;
        let kappa = self.spreading_rate;
        let sigma2 = sigma * sigma;

        let tau = kappa * t;
        let one_p = 1.0 + tau * tau;
        let w2 = sigma2 * one_p;
        let dw2_dt = 2.0 * sigma2 * tau * kappa;
        let y = x - c - v * t;

        let ln_r = amplitude.ln() - 0.25 * (2.0 * PI * w2).ln() - y * y / (4.0 * w2);
        let dlnr_dx = -y / (2.0 * w2);
        let d2lnr_dx2 = -1.0 / (2.0 * w2);
        let dlnr_dt =
            -dw2_dt / (4.0 * w2) + y * v / (2.0 * w2) + y * y * dw2_dt / (4.0 * w2 * w2);
        let d2lnr_dxdt = v / (2.0 * w2) + y * dw2_dt / (2.0 * w2 * w2);

        // g = τ / (4 σ_t²) multiplies ħ y² in the action
        let g = tau / (4.0 * w2);
        let dg_dt = kappa * (1.0 - tau * tau) / (4.0 * sigma2 * one_p * one_p);
        let s = m * v * (x - c) - 0.5 * m * v * v * t + hbar * y * y * g - 0.5 * hbar * tau.atan()
            + hbar * phi0;
        let ds_dx = m * v + 2.0 * hbar * y * g;
        let d2s_dx2 = 2.0 * hbar * g;
        let ds_dt = -0.5 * m * v * v - 2.0 * hbar * y * v * g + hbar * y * y * dg_dt
            - 0.5 * hbar * kappa / one_p;
        let d2s_dxdt = hbar * (2.0 * y * dg_dt - 2.0 * v * g);

        let r = ln_r.exp();
        ModeSample {
            ln_r,
            r,
            dr_dx: r * dlnr_dx,
            d2r_dx2: r * (dlnr_dx * dlnr_dx + d2lnr_dx2),
            dr_dt: r * dlnr_dt,
            dlnr_dx,
            d2lnr_dx2,
            d3lnr_dx3: 0.0,
            dlnr_dt,
            d2lnr_dxdt,
            s,
            ds_dx,
            d2s_dx2,
            d3s_dx3: 0.0,
            ds_dt,
            d2s_dxdt,
        }
    }
}

/// Checks that every mode shares the same `ħ` and `m` and returns them.
pub(crate) fn shared_params(modes: &[WaveMode]) -> Result<PhysicalParams> {
    let first = modes
        .first()
        .ok_or_else(|| invalid("modes", "at least one mode is required"))?;
    let params = first.params;
    if modes.iter().any(|m| m.params != params) {
        return Err(crate::Error::MismatchedParams);
    }
    Ok(params)
}
