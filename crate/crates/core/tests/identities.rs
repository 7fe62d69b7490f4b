//! Field identities checked against plain complex-Gaussian arithmetic.

mod common;

use common::{guidance, psi_sum, random_packets, Packet};
use emergent_core::{ChannelKind, ChannelSet, EmergentField, WaveFunction};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn modes_match_complex_width_gaussians() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for packet in random_packets(&mut rng, 20) {
        let mode = packet.mode();
        for _ in 0..50 {
            let t = rng.random_range(-3.0..3.0);
            let x = packet.center + packet.velocity * t + rng.random_range(-4.0..4.0) * packet.width(t);
            let s = mode.sample(x, t);
            let expect = packet.psi(x, t);
            let got = num_complex::Complex64::from_polar(s.r, s.s / packet.hbar);
            assert!((got - expect).norm() <= 1e-12 * expect.norm(), "{packet:?} x={x} t={t}");
            // ψ'/ψ = ∂ln R + i∂S/ħ
            let ratio = packet.dpsi(x, t) / expect;
            assert!((ratio.re - s.dlnr_dx).abs() <= 1e-12 * ratio.norm().max(1.0));
            assert!((ratio.im - s.ds_dx / packet.hbar).abs() <= 1e-12 * ratio.norm().max(1.0));
        }
    }
}

#[test]
fn width_law_and_norm() {
    let p = Packet::new(0.0, 1.0, 0.0, 0.0);
    let mode = p.mode();
    assert!((mode.width_at(2.0) - 2f64.sqrt()).abs() < 1e-15);
    for t in [0.0, 0.5, 2.0, 7.0] {
        let s = mode.width_at(t);
        let n = 20_000;
        let (lo, hi) = (mode.center_at(t) - 12.0 * s, mode.center_at(t) + 12.0 * s);
        let h = (hi - lo) / n as f64;
        let integral: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                w * mode.amplitude(lo + k as f64 * h, t).powi(2)
            })
            .sum::<f64>()
            * h;
        assert!((integral - 1.0).abs() < 1e-10, "t={t}: {integral}");
    }
    // tails are present far out
    assert!(mode.amplitude(50.0, 0.0) > 0.0);
    assert!(mode.ln_amplitude(1e4, 0.0).is_finite());
}

#[test]
fn analytic_derivatives_converge_at_second_order() {
    let p = Packet::new(0.4, 0.8, 0.3, 1.0);
    let mode = p.mode();
    let (x, t) = (1.1, 0.7);
    let s = mode.sample(x, t);
    let fd_err = |h: f64| {
        let dr = (mode.amplitude(x + h, t) - mode.amplitude(x - h, t)) / (2.0 * h);
        let ds = (mode.action(x + h, t) - mode.action(x - h, t)) / (2.0 * h);
        let drt = (mode.amplitude(x, t + h) - mode.amplitude(x, t - h)) / (2.0 * h);
        let dst = (mode.action(x, t + h) - mode.action(x, t - h)) / (2.0 * h);
        let d2r = (mode.amplitude(x + h, t) - 2.0 * s.r + mode.amplitude(x - h, t)) / (h * h);
        [
            (dr - s.dr_dx).abs(),
            (ds - s.ds_dx).abs(),
            (drt - s.dr_dt).abs(),
            (dst - s.ds_dt).abs(),
            (d2r - s.d2r_dx2).abs(),
        ]
    };
    let (e1, e2) = (fd_err(1e-2), fd_err(5e-3));
    for (a, b) in e1.iter().zip(&e2) {
        // S is quadratic in x, so some stencils are exact up to rounding
        if *a < 1e-11 {
            assert!(*b < 1e-10);
        } else {
            assert!(a / b > 3.5, "order below 2: {a} vs {b}");
        }
    }
}

#[test]
fn emergent_velocity_matches_plain_guidance() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [1, 2, 3, 5] {
        let packets = random_packets(&mut rng, n);
        let field = EmergentField::from_modes(packets.iter().map(Packet::mode).collect()).unwrap();
        for _ in 0..2000 {
            let t = rng.random_range(0.0..3.0);
            let x = rng.random_range(-8.0..8.0);
            let (psi, _) = psi_sum(&packets, x, t);
            // plain complex arithmetic loses digits in deep minima; stay clear
            if psi.norm_sqr() < 1e-6 {
                continue;
            }
            let v = field.emergent_velocity(x, t).unwrap();
            let expect = guidance(&packets, x, t);
            assert!((v - expect).abs() <= 1e-9 * expect.abs().max(1.0), "n={n} x={x} t={t}: {v} vs {expect}");
            let p = field.total_density(x, t);
            assert!((p - psi.norm_sqr()).abs() <= 1e-12 * psi.norm_sqr());
        }
    }
}

#[test]
fn single_slit_velocity_is_phase_gradient() {
    let p = Packet::new(-0.5, 0.6, 0.8, 0.3);
    let field = EmergentField::from_modes(vec![p.mode()]).unwrap();
    for x in [-3.0, -0.5, 0.0, 2.0, 6.0] {
        let v = field.emergent_velocity(x, 1.3).unwrap();
        let grad_s = p.mode().sample(x, 1.3).ds_dx / p.mass;
        assert!((v - grad_s).abs() <= 1e-14 * grad_s.abs().max(1.0));
    }
}

#[test]
fn identical_overlapping_slits_quadruple_density() {
    let p = Packet::new(0.0, 1.0, 0.0, 0.0);
    let field = EmergentField::from_modes(vec![p.mode(), p.mode()]).unwrap();
    for x in [-1.0, 0.0, 0.7] {
        let r = p.mode().amplitude(x, 0.5);
        assert!((field.total_density(x, 0.5) - 4.0 * r * r).abs() <= 1e-14 * r * r);
    }
}

fn packet_strategy() -> impl Strategy<Value = Packet> {
    (-4.0..4.0f64, 0.3..1.2f64, -1.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(|(c, s, v, p)| Packet::new(c, s, v, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_density_is_nonnegative_and_matches_psi(
        packets in prop::collection::vec(packet_strategy(), 1..5),
        x in -8.0..8.0f64,
        t in 0.0..3.0f64,
    ) {
        let field = EmergentField::from_modes(packets.iter().map(Packet::mode).collect()).unwrap();
        let p = field.total_density(x, t);
        prop_assert!(p >= 0.0);
        let oracle = WaveFunction::superpose(packets.iter().map(Packet::mode).collect()).unwrap();
        prop_assert!((p - oracle.density(x, t)).abs() <= 1e-12 * oracle.density(x, t).max(1e-300));
    }

    #[test]
    fn channel_order_is_unobservable(
        packets in prop::collection::vec(packet_strategy(), 2..5),
        x in -6.0..6.0f64,
        t in 0.0..3.0f64,
        seed in any::<u64>(),
    ) {
        let set = ChannelSet::build(packets.iter().map(Packet::mode).collect()).unwrap();
        let mut order: Vec<usize> = (0..set.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let shuffled = set.reordered(&order).unwrap();
        let (a, b) = (set.snapshot(x, t), shuffled.snapshot(x, t));
        let scale = a.total_density().max(1e-300);
        prop_assert!((a.total_density() - b.total_density()).abs() <= 1e-14 * scale);
        prop_assert!((a.total_current() - b.total_current()).abs() <= 1e-13 * a.total_current().abs().max(scale));
    }

    #[test]
    fn diffusive_pairs_are_antisymmetric(p in packet_strategy(), x in -6.0..6.0f64, t in 0.0..3.0f64) {
        let set = ChannelSet::build(vec![p.mode()]).unwrap();
        let snap = set.snapshot(x, t);
        let v = |kind: ChannelKind| {
            let i = set.channels().iter().position(|c| c.kind == kind).unwrap();
            snap.values[i].velocity
        };
        prop_assert_eq!(v(ChannelKind::DiffusiveRight), -v(ChannelKind::DiffusiveLeft));
    }
}
