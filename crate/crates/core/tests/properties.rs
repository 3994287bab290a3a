use std::f64::consts::{LN_2, PI};

use approx::{assert_abs_diff_eq, assert_relative_eq};
use proptest::prelude::*;
use sweepcal::calib::AScan;
use sweepcal::config::Config;
use sweepcal::demod::hilbert::unwrap_in_place;
use sweepcal::demod::ipdft::{Ipdft, IpdftParams};
use sweepcal::demod::window::{window_gen, WindowKind};
use sweepcal::io::fmt_f64;
use sweepcal::lcs::{find_crossings, LevelLadder};
use sweepcal::metrics::{fwhm, mse_values, rolloff_curve};
use sweepcal::sweep_model::SweepProfile;
use sweepcal::synth::AdcModel;

fn sweep() -> impl Strategy<Value = SweepProfile> {
    (0.2f64..2.0, -1.0f64..2.0, -1.0f64..1.0, 1e4f64..1e6)
        .prop_filter_map("non-monotone", |(c1, c2, c3, span)| {
            SweepProfile::from_shape(4.8e6, span, 1.0 / 150e3, [c1, c2, c3]).ok()
        })
}

fn gaussian(n: usize, dz: f64, z0: f64, width: f64, amp: f64) -> AScan {
    let depth: Vec<f64> = (0..n).map(|j| j as f64 * dz).collect();
    let magnitude = depth.iter().map(|z| amp * (-4.0 * LN_2 * ((z - z0) / width).powi(2)).exp()).collect();
    AScan { depth, magnitude }
}

proptest! {
    #[test]
    fn sweep_inversion_round_trips(p in sweep(), tau in 0.0f64..=1.0) {
        let t = tau * p.t_scan;
        let back = p.invert(p.eval(t).unwrap()).unwrap();
        prop_assert!((back - t).abs() <= 1e-9 * p.t_scan, "{back} vs {t}");
    }

    #[test]
    fn crossings_hit_every_level_in_order(p in sweep(), levels in 8usize..400) {
        let ladder = LevelLadder::fit_in(&p, p.span() / levels as f64).unwrap();
        let clock = find_crossings(&p, &ladder);
        prop_assert_eq!(clock.skipped, 0);
        prop_assert!(clock.events.windows(2).all(|w| w[1] > w[0]));
        for (&t, &i) in clock.events.iter().zip(&clock.level_index) {
            prop_assert!((p.eval_unchecked(t) - ladder.levels[i]).abs() <= 1e-9 * p.span());
        }
    }

    #[test]
    fn ladder_fits_inside_sweep(p in sweep(), frac in 1e-3f64..0.3) {
        let ladder = LevelLadder::fit_in(&p, frac * p.span()).unwrap();
        let lo = ladder.levels[0] - p.k0;
        let hi = p.k_end() - ladder.levels[ladder.len() - 1];
        prop_assert!(lo >= -1e-9 * p.span() && hi >= -1e-9 * p.span());
        prop_assert!((lo - hi).abs() <= 1e-6 * p.span());
        prop_assert!(lo + hi < frac * p.span() * (1.0 + 1e-9));
    }

    #[test]
    fn fwhm_matches_gaussian_width(width_bins in 8.0f64..40.0, centre in 200.0f64..800.0, amp in 1e-3f64..1e3) {
        let dz = 1e-6;
        let a = gaussian(1024, dz, centre * dz, width_bins * dz, amp);
        let w = fwhm(&a, None).unwrap();
        prop_assert!((w / (width_bins * dz) - 1.0).abs() < 0.02, "{w}");
    }

    #[test]
    fn fwhm_is_scale_invariant(width_bins in 3.0f64..40.0, centre in 100.0f64..900.0, c in 1e-6f64..1e6) {
        let a = gaussian(1024, 1e-6, centre * 1e-6, width_bins * 1e-6, 1.0);
        let mut b = a.clone();
        b.magnitude.iter_mut().for_each(|m| *m *= c);
        assert_relative_eq!(fwhm(&a, None).unwrap(), fwhm(&b, None).unwrap(), max_relative = 1e-9);
        let hint = Some(centre * 1e-6 + 2e-6);
        assert_relative_eq!(fwhm(&a, hint).unwrap(), fwhm(&b, hint).unwrap(), max_relative = 1e-9);
    }

    #[test]
    fn mse_is_symmetric_and_quadratic(
        pairs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..200),
        c in -10.0f64..10.0,
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let ab = mse_values(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, mse_values(&b, &a).unwrap());
        prop_assert_eq!(mse_values(&a, &a).unwrap(), 0.0);
        let ca: Vec<f64> = a.iter().map(|x| c * x).collect();
        let cb: Vec<f64> = b.iter().map(|x| c * x).collect();
        assert_abs_diff_eq!(mse_values(&ca, &cb).unwrap(), c * c * ab, epsilon = 1e-12 * (1.0 + c * c * ab));
    }

    #[test]
    fn rolloff_is_normalized_to_first_depth(z_c in 1e-4f64..5e-3, scale in 1e-6f64..1e6) {
        let depths: Vec<f64> = (1..=60).map(|i| i as f64 * 1e-4).collect();
        let curve = rolloff_curve(&depths, |z| Ok(scale * (-z / z_c).exp())).unwrap();
        prop_assert_eq!(curve.db[0], 0.0);
        prop_assert!(curve.db.windows(2).all(|w| w[1] < w[0]));
        // dB is linear in z for an exponential decay, so interpolation is exact.
        let expected = depths[0] + z_c * LN_2;
        match curve.six_db_depth {
            Some(z) => assert_relative_eq!(z, expected, max_relative = 1e-9),
            None => prop_assert!(expected >= depths[depths.len() - 1]),
        }
    }

    #[test]
    fn quantization_error_within_half_lsb(bits in 2u32..=16, x in -0.999f64..0.999) {
        let adc = AdcModel::new(bits, 2.0, 1e6).unwrap();
        let (q, clipped) = adc.quantize_value(x);
        prop_assert!(!clipped);
        prop_assert!((q - x).abs() <= 0.5 * adc.lsb() * (1.0 + 1e-12));
        prop_assert_eq!(adc.quantize_value(q), (q, false));
    }

    #[test]
    fn unwrap_recovers_smooth_phase(steps in prop::collection::vec(-3.0f64..3.0, 1..300), start in -10.0f64..10.0) {
        let phase: Vec<f64> = steps.iter().scan(start, |acc, d| { *acc += d; Some(*acc) }).collect();
        let mut wrapped: Vec<f64> = phase.iter().map(|p| p.sin().atan2(p.cos())).collect();
        unwrap_in_place(&mut wrapped);
        for (u, p) in wrapped.iter().zip(&phase) {
            prop_assert!(((u - wrapped[0]) - (p - phase[0])).abs() < 1e-9);
        }
    }

    #[test]
    fn windows_are_periodic_symmetric(p in 8usize..256, order in 1u32..=3) {
        for kind in [WindowKind::Hann, WindowKind::Hamming, WindowKind::Rvci(order)] {
            let w = window_gen(kind, p).unwrap();
            for n in 1..p {
                prop_assert!((w[n] - w[p - n]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ipdft_frequency_is_amplitude_invariant(bin in 4.0f64..28.0, phase in -PI..PI, amp in 1e-3f64..1e3) {
        let p = 64;
        let omega = 2.0 * PI * bin / p as f64;
        let tone = |a: f64| -> Vec<f64> { (0..p).map(|n| a * (omega * n as f64 + phase).cos()).collect() };
        for params in [IpdftParams::rvci(p, 1), IpdftParams::by2(p)] {
            let mut e = Ipdft::new(params).unwrap();
            let (w1, d1) = e.block(&tone(1.0), 0).unwrap();
            let (wa, da) = e.block(&tone(amp), 0).unwrap();
            prop_assert!((w1 - wa).abs() < 1e-12 && (d1 - da).abs() < 1e-9);
            prop_assert!((w1 - omega).abs() < 1e-3 * 2.0 * PI / p as f64, "{w1} vs {omega}");
        }
    }

    #[test]
    fn floats_survive_formatting(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn config_survives_toml(seed in 0..=i64::MAX as u64, rate in 5e4f64..5e5, m_c in prop::sample::select(vec![4usize, 8, 12, 16])) {
        let mut cfg = Config::default();
        cfg.seed = seed;
        cfg.sweep.rate = rate;
        cfg.ladder.m_c = m_c;
        prop_assert_eq!(Config::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn seeds_beyond_toml_range_are_rejected(seed in (i64::MAX as u64 + 1)..=u64::MAX) {
        let cfg = Config { seed, ..Config::default() };
        prop_assert!(cfg.validate().is_err());
    }
}
