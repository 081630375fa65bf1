use std::f64::consts::PI;

use approx::assert_relative_eq;
use capnoise::frontend::{divider_ratio, gate_noise_spectrum};
use capnoise::noise::{integrate_power, log_grid};
use capnoise::servo::{loop_gain, LagLeadCompensator, ServoPlant};
use capnoise::{
    AnalyticTail, DensityUnit, Excitation, Frequency, FrontEndConfig, JfetNoise, Network, NoiseSource, Spectrum,
};
use proptest::prelude::*;

type Step = Box<dyn Fn(&mut Network)>;

fn grid() -> Vec<f64> {
    log_grid(10.0, 20e3, 16).unwrap()
}

fn spectrum(a: f64, b: f64) -> Spectrum {
    Spectrum::from_fn(&grid(), DensityUnit::VoltsPerRootHz, |f| a + b / f).unwrap()
}

proptest! {
    #[test]
    fn combine_is_commutative_and_associative(a in 0.0..1e-6f64, b in 0.0..1e-6f64, c in 0.0..1e-6f64, d in 0.0..1e-3f64) {
        let (x, y, z) = (spectrum(a, d), spectrum(b, 0.0), spectrum(c, d / 2.0));
        let xy = x.combine_uncorrelated(&y).unwrap();
        let yx = y.combine_uncorrelated(&x).unwrap();
        prop_assert_eq!(xy.values(), yx.values());
        let left = xy.combine_uncorrelated(&z).unwrap();
        let right = x.combine_uncorrelated(&y.combine_uncorrelated(&z).unwrap()).unwrap();
        for (l, r) in left.values().iter().zip(right.values()) {
            prop_assert!((l - r).abs() <= 1e-12 * l.max(1e-300));
        }
    }

    #[test]
    fn divider_falls_as_input_capacitance_grows(c_m in 1e-12..100e-12f64, c1 in 0.0..50e-12f64, extra in 1e-15..50e-12f64) {
        let lo = divider_ratio(c_m, c1).unwrap();
        let hi = divider_ratio(c_m, c1 + extra).unwrap();
        prop_assert!(hi.ratio < lo.ratio && lo.ratio <= 1.0 && hi.ratio > 0.0);
        prop_assert!(hi.db < lo.db);
    }

    #[test]
    fn integrated_resistor_noise_is_kt_over_c(log_r in 8.0..11.0f64, c in 5e-12..50e-12f64) {
        let r = 10f64.powf(log_r);
        let mut cfg = FrontEndConfig::resistor_biased(c, r).unwrap();
        cfg.jfet_noise = JfetNoise::zero();
        let s = gate_noise_spectrum(&cfg, &log_grid(1e-4, 1e8, 64).unwrap()).unwrap();
        let v2 = integrate_power(&s, Some(AnalyticTail::FirstOrderLowPass)).unwrap();
        prop_assert!((v2 / (1.380649e-23 * 300.0 / c) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn loop_gain_depends_only_on_gain_product(k in 0.1..1e3f64, s in 1e-3..1e3f64, f in 0.1..1e3f64) {
        let plant = ServoPlant::new(1e-9, 12e-12, 1.0).unwrap();
        let scaled = ServoPlant::new(1e-9 / s, 12e-12, 1.0).unwrap();
        let c1 = LagLeadCompensator::new(k, 20.0, 1.0).unwrap();
        let c2 = LagLeadCompensator::new(k * s, 20.0, 1.0).unwrap();
        let f = Frequency::new(f).unwrap();
        let (a, b) = (loop_gain(&plant, &c1, f), loop_gain(&scaled, &c2, f));
        prop_assert!((a - b).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn noise_ignores_element_order(r1 in 1e3..1e9f64, r2 in 1e3..1e9f64, c in 1e-12..1e-9f64, f in 1.0..1e5f64) {
        let build = |reverse: bool| {
            let mut net = Network::new();
            let (a, b) = (net.node("a"), net.node("b"));
            let mut steps: Vec<Step> = vec![
                Box::new(move |n| { n.add_resistor("r1", a, 0, r1).unwrap(); }),
                Box::new(move |n| { n.add_resistor("r2", a, b, r2).unwrap(); }),
                Box::new(move |n| { n.add_capacitor("c", b, 0, c).unwrap(); }),
            ];
            if reverse {
                steps.reverse();
            }
            for s in &steps {
                s(&mut net);
            }
            net.attach_noise("r2", NoiseSource::thermal_current(r2, 300.0).unwrap()).unwrap();
            net.attach_noise("r1", NoiseSource::thermal_current(r1, 300.0).unwrap()).unwrap();
            net.set_output(b, 0).unwrap();
            net
        };
        let f = Frequency::new(f).unwrap();
        let (x, y) = (build(false).noise_solve(f).unwrap(), build(true).noise_solve(f).unwrap());
        prop_assert!((x / y - 1.0).abs() < 1e-9);
    }

    #[test]
    fn passive_networks_are_reciprocal(r1 in 1e3..1e9f64, r2 in 1e3..1e9f64, c1 in 1e-12..1e-9f64, c2 in 1e-12..1e-9f64, f in 1.0..1e5f64) {
        let build = |out: &str| {
            let mut net = Network::new();
            let (a, b) = (net.node("a"), net.node("b"));
            net.add_resistor("r1", a, 0, r1).unwrap();
            net.add_capacitor("c1", a, 0, c1).unwrap();
            net.add_resistor("r2", a, b, r2).unwrap();
            net.add_capacitor("c2", b, 0, c2).unwrap();
            let o = net.node(out);
            net.set_output(o, 0).unwrap();
            (net, a, b)
        };
        let f = Frequency::new(f).unwrap();
        let (nb, a, _) = build("b");
        let (na, _, b) = build("a");
        let z_ba = nb.ac_solve(f, Excitation::Current { into: a, out_of: 0 }).unwrap();
        let z_ab = na.ac_solve(f, Excitation::Current { into: b, out_of: 0 }).unwrap();
        prop_assert!((z_ab - z_ba).norm() <= 1e-9 * z_ab.norm());
    }

    #[test]
    fn photocurrent_noise_falls_as_one_over_f(i in 1e-15..1e-9f64, f in 1.0..1e4f64) {
        let mut cfg = FrontEndConfig::photocurrent_biased(12e-12, i).unwrap();
        cfg.jfet_noise = JfetNoise::zero();
        let s = gate_noise_spectrum(&cfg, &[f, 10.0 * f]).unwrap();
        assert_relative_eq!(s.values()[0] / s.values()[1], 10.0, max_relative = 1e-12);
        let expected = (2.0 * 1.602176634e-19 * i).sqrt() / (2.0 * PI * f * 12e-12);
        prop_assert!((s.values()[0] / expected - 1.0).abs() < 1e-12);
    }
}
