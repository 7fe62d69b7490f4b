//! Reference Gaussian packets in complex-width form, written independently of
//! the crate's amplitude/phase evaluators.

#![allow(dead_code)]

use emergent_core::{make_gaussian_mode, PhysicalParams, SlitSpec, WaveMode};
use num_complex::Complex64;
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub struct Packet {
    pub center: f64,
    pub sigma: f64,
    pub velocity: f64,
    pub phase: f64,
    pub amplitude: f64,
    pub hbar: f64,
    pub mass: f64,
}

impl Packet {
    pub fn new(center: f64, sigma: f64, velocity: f64, phase: f64) -> Self {
        Self {
            center,
            sigma,
            velocity,
            phase,
            amplitude: 1.0,
            hbar: 1.0,
            mass: 1.0,
        }
    }

    pub fn mode(&self) -> WaveMode {
        make_gaussian_mode(
            SlitSpec::new(self.center, self.sigma)
                .with_velocity(self.velocity)
                .with_phase_offset(self.phase)
                .with_amplitude(self.amplitude),
            PhysicalParams::new(self.hbar, self.mass).unwrap(),
        )
        .unwrap()
    }

    /// `1 + iħt/(2mσ²)`.
    fn spread(&self, t: f64) -> Complex64 {
        Complex64::new(1.0, self.hbar * t / (2.0 * self.mass * self.sigma * self.sigma))
    }

    /// `ψ = a (2πσ²)^{-1/4} (1+iτ)^{-1/2} exp(−y²/(4σ²(1+iτ)) + ik(x−c) − iħk²t/2m + iφ)`.
    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        let k = self.mass * self.velocity / self.hbar;
        let y = x - self.center - self.velocity * t;
        let w = self.spread(t);
        let exponent = -y * y / (4.0 * self.sigma * self.sigma * w)
            + Complex64::i() * (k * (x - self.center) - self.hbar * k * k * t / (2.0 * self.mass) + self.phase);
        self.amplitude * (2.0 * std::f64::consts::PI * self.sigma * self.sigma).powf(-0.25) / w.sqrt() * exponent.exp()
    }

    pub fn dpsi(&self, x: f64, t: f64) -> Complex64 {
        let k = self.mass * self.velocity / self.hbar;
        let y = x - self.center - self.velocity * t;
        self.psi(x, t) * (-y / (2.0 * self.sigma * self.sigma * self.spread(t)) + Complex64::i() * k)
    }

    pub fn width(&self, t: f64) -> f64 {
        self.sigma * self.spread(t).norm()
    }
}

pub fn random_packets<R: Rng>(rng: &mut R, n: usize) -> Vec<Packet> {
    (0..n)
        .map(|_| Packet::new(
            rng.random_range(-4.0..4.0),
            rng.random_range(0.3..1.2),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.0..std::f64::consts::TAU),
        ))
        .collect()
}

pub fn psi_sum(packets: &[Packet], x: f64, t: f64) -> (Complex64, Complex64) {
    packets.iter().fold((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), |(p, d), k| {
        (p + k.psi(x, t), d + k.dpsi(x, t))
    })
}

/// `(ħ/m) Im(Ψ'/Ψ)` in plain complex arithmetic.
pub fn guidance(packets: &[Packet], x: f64, t: f64) -> f64 {
    let (p, d) = psi_sum(packets, x, t);
    packets[0].hbar / packets[0].mass * (d / p).im
}
