//! Reference de Broglie–Bohm quantities computed from the complex
//! superposition `Ψ = Σ_j R_j exp(i S_j/ħ)`.
//!
//! Nothing here goes through the channel construction; it is the ground truth
//! the emergent fields are checked against. The quantum force uses the
//! standard quantum potential `Q = −(ħ²/2m) ∇²|Ψ| / |Ψ|`.
//!
//! Density, current and guidance velocity sum `Ψ` and `∇Ψ` in double-double
//! precision: the guidance velocity is a small difference of large terms near
//! its own zeros and near fringe minima, and the reference must not be the
//! weaker side of a comparison.

use num_complex::Complex64;

use crate::dd::DdComplex;
use crate::error::{Error, Result};
use crate::wavemode::{shared_params, PhysicalParams, WaveMode};

/// `Ψ` and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiJet {
    pub psi: Complex64,
    pub dx: Complex64,
    pub dxx: Complex64,
    pub dxxx: Complex64,
    pub dt: Complex64,
}

#[derive(Debug, Clone)]
pub struct WaveFunction {
    modes: Vec<WaveMode>,
    params: PhysicalParams,
    node_threshold: f64,
}

pub fn superpose(modes: Vec<WaveMode>) -> Result<WaveFunction> {
    WaveFunction::superpose(modes)
}

/// Jet of a single mode `ψ = exp(f)`, `f = ln R + iS/ħ`.
pub fn mode_jet(mode: &WaveMode, x: f64, t: f64) -> PsiJet {
    let hbar = mode.params().hbar();
    let s = mode.sample(x, t);
    let psi = Complex64::from_polar(s.r, s.s / hbar);
    let f1 = Complex64::new(s.dlnr_dx, s.ds_dx / hbar);
    let f2 = Complex64::new(s.d2lnr_dx2, s.d2s_dx2 / hbar);
    let f3 = Complex64::new(s.d3lnr_dx3, s.d3s_dx3 / hbar);
    let ft = Complex64::new(s.dlnr_dt, s.ds_dt / hbar);
    PsiJet {
        psi,
        dx: psi * f1,
        dxx: psi * (f2 + f1 * f1),
        dxxx: psi * (f3 + 3.0 * f1 * f2 + f1 * f1 * f1),
        dt: psi * ft,
    }
}

impl WaveFunction {
    pub fn superpose(modes: Vec<WaveMode>) -> Result<Self> {
        let params = shared_params(&modes)?;
        Ok(Self {
            modes,
            params,
            node_threshold: crate::emergence::DEFAULT_NODE_THRESHOLD,
        })
    }

    pub fn with_node_threshold(mut self, threshold: f64) -> Self {
        self.node_threshold = threshold;
        self
    }

    pub fn modes(&self) -> &[WaveMode] {
        &self.modes
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn jet(&self, x: f64, t: f64) -> PsiJet {
        let zero = Complex64::new(0.0, 0.0);
        self.modes.iter().fold(
            PsiJet {
                psi: zero,
                dx: zero,
                dxx: zero,
                dxxx: zero,
                dt: zero,
            },
            |acc, m| {
                let j = mode_jet(m, x, t);
                PsiJet {
                    psi: acc.psi + j.psi,
                    dx: acc.dx + j.dx,
                    dxx: acc.dxx + j.dxx,
                    dxxx: acc.dxxx + j.dxxx,
                    dt: acc.dt + j.dt,
                }
            },
        )
    }

    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        self.modes
            .iter()
            .map(|m| {
                let s = m.sample(x, t);
                Complex64::from_polar(s.r, s.s / self.params.hbar())
            })
            .sum()
    }

    /// `Ψ` and `∇Ψ` summed in double-double precision.
    fn accurate_psi(&self, x: f64, t: f64) -> (DdComplex, DdComplex) {
        let hbar = self.params.hbar();
        self.modes
            .iter()
            .fold((DdComplex::ZERO, DdComplex::ZERO), |(psi, dx), m| {
                let s = m.sample(x, t);
                let (sin, cos) = (s.s / hbar).sin_cos();
                let mode = DdComplex::polar(s.r, cos, sin);
                let grad = mode.mul_f64(s.dlnr_dx, s.ds_dx / hbar);
                (psi.add(mode), dx.add(grad))
            })
    }

    /// `|Ψ|²`.
    pub fn density(&self, x: f64, t: f64) -> f64 {
        self.accurate_psi(x, t).0.norm_sqr().to_f64()
    }

    /// `(ħ/m) Im(Ψ* ∇Ψ)`.
    pub fn qm_current(&self, x: f64, t: f64) -> f64 {
        let (psi, dx) = self.accurate_psi(x, t);
        self.params.hbar() / self.params.mass() * psi.conj_mul_im(dx).to_f64()
    }

    /// Newton iteration for a spacetime node `Ψ(x, t) = 0` from a starting
    /// guess, solving the real and imaginary parts jointly in `(x, t)`.
    pub fn locate_node(&self, x0: f64, t0: f64, max_iter: usize) -> Result<(f64, f64)> {
        let (mut x, mut t) = (x0, t0);
        for _ in 0..max_iter {
            let j = self.jet(x, t);
            // [Re Ψx  Re Ψt] [dx]   [Re Ψ]
            // [Im Ψx  Im Ψt] [dt] = [Im Ψ]
            let det = j.dx.re * j.dt.im - j.dt.re * j.dx.im;
            if !(det.is_finite() && det != 0.0) {
                return Err(Error::NonFinite { x, t });
            }
            let step_x = (j.psi.re * j.dt.im - j.dt.re * j.psi.im) / det;
            let step_t = (j.dx.re * j.psi.im - j.psi.re * j.dx.im) / det;
            x -= step_x;
            t -= step_t;
            if !(x.is_finite() && t.is_finite()) {
                return Err(Error::NonFinite { x, t });
            }
            if step_x.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0)
                && step_t.abs() <= 4.0 * f64::EPSILON * t.abs().max(1.0)
            {
                return Ok((x, t));
            }
        }
        // converged to rounding but the last step did not shrink below it
        let scale = self.jet(x, t).dx.norm() * self.modes.iter().map(|m| m.width_at(t)).fold(0.0, f64::max);
        if self.psi(x, t).norm() <= 1e-12 * scale {
            Ok((x, t))
        } else {
            Err(crate::error::invalid("locate_node", "Newton iteration did not converge"))
        }
    }

    fn check(&self, density: f64, x: f64, t: f64) -> Result<()> {
        if density > self.node_threshold {
            Ok(())
        } else {
            Err(Error::Node {
                x,
                t,
                density,
                threshold: self.node_threshold,
            })
        }
    }

    /// `(ħ/m) Im(∇Ψ/Ψ)`.
    pub fn bohm_velocity(&self, x: f64, t: f64) -> Result<f64> {
        let (psi, dx) = self.accurate_psi(x, t);
        let rho = psi.norm_sqr();
        self.check(rho.to_f64(), x, t)?;
        Ok(self.params.hbar() / self.params.mass() * psi.conj_mul_im(dx).div(rho))
    }

    /// `Q = −(ħ²/2m) ∇²|Ψ| / |Ψ|`.
    pub fn quantum_potential(&self, x: f64, t: f64) -> Result<f64> {
        let j = self.jet(x, t);
        let rho = j.psi.norm_sqr();
        self.check(rho, x, t)?;
        let rho1 = 2.0 * (j.psi.conj() * j.dx).re;
        let rho2 = 2.0 * ((j.psi.conj() * j.dxx).re + j.dx.norm_sqr());
        let (hbar, m) = (self.params.hbar(), self.params.mass());
        Ok(-(hbar * hbar) / (2.0 * m) * (rho2 / (2.0 * rho) - rho1 * rho1 / (4.0 * rho * rho)))
    }

    /// Quantum force per unit mass, `−(1/m) ∇Q`, from analytic derivatives of
    /// `ρ = |Ψ|²`.
    pub fn quantum_force(&self, x: f64, t: f64) -> Result<f64> {
        let j = self.jet(x, t);
        let rho = j.psi.norm_sqr();
        self.check(rho, x, t)?;
        let rho1 = 2.0 * (j.psi.conj() * j.dx).re;
        let rho2 = 2.0 * ((j.psi.conj() * j.dxx).re + j.dx.norm_sqr());
        let rho3 = 2.0 * ((j.psi.conj() * j.dxxx).re + 3.0 * (j.dx.conj() * j.dxx).re);
        let (hbar, m) = (self.params.hbar(), self.params.mass());
        let g1 = rho1 / rho;
        let force = hbar * hbar / (4.0 * m * m)
            * (rho3 / rho - 2.0 * g1 * rho2 / rho + g1 * g1 * g1);
        if force.is_finite() {
            Ok(force)
        } else {
            Err(Error::NonFinite { x, t })
        }
    }

    /// `|iħ ∂_tΨ + (ħ²/2m) ∇²Ψ|` for the free Schrödinger equation.
    pub fn schrodinger_residual(&self, x: f64, t: f64) -> f64 {
        let j = self.jet(x, t);
        let (hbar, m) = (self.params.hbar(), self.params.mass());
        (Complex64::i() * hbar * j.dt + hbar * hbar / (2.0 * m) * j.dxx).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavemode::{make_gaussian_mode, SlitSpec};

    fn mode(center: f64, sigma: f64, v: f64, phase: f64) -> WaveMode {
        make_gaussian_mode(
            SlitSpec::new(center, sigma)
                .with_velocity(v)
                .with_phase_offset(phase),
            PhysicalParams::default(),
        )
        .unwrap()
    }

    #[test]
    fn single_mode_density_and_velocity() {
        let m = mode(0.2, 0.7, 0.5, 0.1);
        let psi = superpose(vec![m]).unwrap();
        for &(x, t) in &[(0.0, 0.0), (1.0, 0.4), (-1.0, 2.0)] {
            let s = m.sample(x, t);
            assert!((psi.density(x, t) - s.r * s.r).abs() < 1e-15 * s.r * s.r);
            let v = psi.bohm_velocity(x, t).unwrap();
            assert!((v - s.ds_dx).abs() < 1e-14 * s.ds_dx.abs().max(1.0));
        }
    }

    #[test]
    fn two_equal_modes_in_phase() {
        let m = mode(0.0, 1.0, 0.0, 0.0);
        let psi = superpose(vec![m, m]).unwrap();
        let r = m.amplitude(0.3, 0.5);
        assert!((psi.density(0.3, 0.5) - 4.0 * r * r).abs() < 1e-15);
    }

    #[test]
    fn real_wavefunction_carries_no_current() {
        // at t = 0 with no drift or offsets every S_j vanishes
        let psi = superpose(vec![mode(-1.0, 0.5, 0.0, 0.0), mode(1.0, 0.8, 0.0, 0.0)]).unwrap();
        for &x in &[-2.0, 0.0, 0.4, 1.7] {
            assert_eq!(psi.qm_current(x, 0.0), 0.0);
        }
    }

    #[test]
    fn plane_phase_mode_current() {
        // at launch a boosted packet has S = m v (x − c) exactly
        let m = mode(0.0, 1.0, 1.7, 0.0);
        let psi = superpose(vec![m]).unwrap();
        for &x in &[-1.0, 0.0, 2.0] {
            let rho = psi.density(x, 0.0);
            assert!((psi.qm_current(x, 0.0) - rho * 1.7).abs() < 1e-15);
            assert!((psi.bohm_velocity(x, 0.0).unwrap() - 1.7).abs() < 1e-14);
        }
    }

    #[test]
    fn satisfies_free_schrodinger_equation() {
        let psi = superpose(vec![
            mode(-1.0, 0.5, 0.3, 0.0),
            mode(1.0, 0.8, -0.2, 1.0),
            mode(2.0, 0.6, 0.0, 2.0),
        ])
        .unwrap();
        for i in 0..40 {
            let x = -4.0 + 0.2 * i as f64;
            for &t in &[0.0, 0.3, 1.1, 4.0] {
                let j = psi.jet(x, t);
                let res = psi.schrodinger_residual(x, t);
                assert!(res < 1e-8 * (j.dt.norm() + 1e-300), "x={x} t={t} res={res:e}");
            }
        }
    }

    #[test]
    fn force_vanishes_at_symmetry_center() {
        let psi = superpose(vec![mode(0.0, 1.0, 0.0, 0.0)]).unwrap();
        for &t in &[0.0, 0.5, 2.0] {
            assert!(psi.quantum_force(0.0, t).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn single_gaussian_force_matches_spreading_acceleration() {
        // Bohmian paths x = c + (x0 − c) σ(t)/σ give ẍ = (x0 − c) σ̈(t)/σ
        let sigma = 0.8;
        let m = mode(0.0, sigma, 0.0, 0.0);
        let psi = superpose(vec![m]).unwrap();
        let kappa = 1.0 / (2.0 * sigma * sigma);
        for &t in &[0.0, 0.7, 2.0] {
            let tau = kappa * t;
            let sig_t = m.width_at(t);
            let sig_ddot = sigma * kappa * kappa / (1.0 + tau * tau).powf(1.5);
            for &x in &[-1.0, 0.5, 2.0] {
                let x0 = x * sigma / sig_t;
                let expected = x0 * sig_ddot / sigma;
                let f = psi.quantum_force(x, t).unwrap();
                assert!((f - expected).abs() < 1e-12 * expected.abs().max(1e-3));
            }
        }
    }

    #[test]
    fn quantum_force_matches_fd_of_potential() {
        let psi = superpose(vec![mode(-1.0, 0.6, 0.2, 0.0), mode(1.0, 0.7, -0.1, 0.5)]).unwrap();
        for &(x, t) in &[(0.2, 0.4), (-1.1, 1.3), (1.4, 0.8)] {
            let h = 1e-4;
            let q = |xx: f64| psi.quantum_potential(xx, t).unwrap();
            let fd = -(-q(x + 2.0 * h) + 8.0 * q(x + h) - 8.0 * q(x - h) + q(x - 2.0 * h))
                / (12.0 * h);
            let f = psi.quantum_force(x, t).unwrap();
            assert!((f - fd).abs() < 1e-6 * f.abs().max(1.0), "{f} vs {fd}");
        }
    }

    #[test]
    fn node_detected() {
        let psi = superpose(vec![mode(-1.0, 0.5, 0.0, 0.0), mode(1.0, 0.5, 0.0, std::f64::consts::PI)])
            .unwrap()
            .with_node_threshold(1e-20);
        assert!(matches!(psi.bohm_velocity(0.0, 1.0), Err(Error::Node { .. })));
        assert!(psi.quantum_force(0.0, 1.0).is_err());
    }
}
