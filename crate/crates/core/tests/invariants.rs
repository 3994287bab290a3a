use std::f64::consts::PI;

use proptest::prelude::*;
use sweepcal::calib::{realtime_calibrate, reconstruct_ascan};
use sweepcal::demod::ekf::ekf_run;
use sweepcal::demod::{coarse_sweep_fit, count_ops, ekf_params_for, Estimator, IpdftParams, OpsMethod, SweepFit};
use sweepcal::lcs::{find_crossings, LevelLadder};
use sweepcal::signal::{Grid, SampledSignal};
use sweepcal::sweep_model::{ReflectivityProfile, Reflector, SourceSpectrum, SweepProfile};
use sweepcal::synth::{synth_interferogram, InterferogramModel, NoiseModel};

const LEN: usize = 4096;

/// MZI-like chirp (17 to 40 samples per fringe) and a faster one near 8.
const CHIRPS: [(f64, f64, f64); 2] = [(600.0, 1800.0, -1200.0), (2867.0, 1200.0, -400.0)];

fn chirp(c: (f64, f64, f64)) -> (SweepFit, SampledSignal) {
    let truth = SweepFit { amplitude: 1.0, theta0: 0.3, a1: c.0, a2: c.1, a3: c.2, len: LEN };
    let v = (0..LEN).map(|n| truth.phase(n as f64).cos()).collect();
    (truth, SampledSignal::uniform_from(0.0, 1.0, v).unwrap())
}

/// RMS difference over the central 80%, whole cycles removed.
fn central_rms(a: &[f64], b: &[f64]) -> f64 {
    let r = LEN / 10..LEN * 9 / 10;
    let n = r.len() as f64;
    let mean = r.clone().map(|i| a[i] - b[i]).sum::<f64>() / n;
    let cycles = 2.0 * PI * (mean / (2.0 * PI)).round();
    (r.map(|i| (a[i] - b[i] - cycles).powi(2)).sum::<f64>() / n).sqrt()
}

fn tracking_estimators() -> Vec<Estimator> {
    vec![
        Estimator::Hilbert,
        Estimator::Ekf,
        Estimator::Ukf,
        Estimator::Ipdft(IpdftParams::rvci(64, 1)),
        Estimator::Ipdft(IpdftParams::by2(64)),
    ]
}

#[test]
fn estimators_agree_on_noiseless_chirps() {
    for c in CHIRPS {
        let (_, sig) = chirp(c);
        let ests = tracking_estimators();
        let phases: Vec<Vec<f64>> = ests.iter().map(|e| e.estimate(&sig, 0.0).unwrap().phase).collect();
        for i in 0..ests.len() {
            for j in i + 1..ests.len() {
                let r = central_rms(&phases[i], &phases[j]);
                assert!(r < 5e-3, "{c:?}: {} vs {}: {r:.2e} rad", ests[i].name(), ests[j].name());
            }
        }
    }
}

#[test]
fn envelope_estimator_error_is_bounded_by_its_filter_ripple() {
    // The 4-tap average only cancels the squared carrier at 8 samples per
    // fringe; elsewhere the equalized signal ripples by 10-80% and the level
    // crossings move with it.
    for c in CHIRPS {
        let (truth, sig) = chirp(c);
        let env = Estimator::Envelope { m_c: 8 }.estimate(&sig, 0.0).unwrap().phase;
        let exact: Vec<f64> = (0..LEN).map(|n| truth.phase(n as f64)).collect();
        let r = central_rms(&env, &exact);
        assert!(r < 0.35, "{c:?}: {r}");
    }
}

#[test]
fn estimator_phases_never_decrease() {
    for c in CHIRPS {
        let (_, sig) = chirp(c);
        let mut ests = tracking_estimators();
        ests.push(Estimator::Envelope { m_c: 8 });
        for e in ests {
            let ph = e.estimate(&sig, 0.0).unwrap().phase;
            assert_eq!(ph.len(), LEN);
            assert!(ph.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{}", e.name());
        }
    }
}

#[test]
fn ekf_covariance_stays_positive_semidefinite() {
    for c in CHIRPS {
        let (_, mut sig) = chirp(c);
        NoiseModel::new(0.05, 17).unwrap().add(&mut sig.values, 0);
        let p = ekf_params_for(&coarse_sweep_fit(&sig).unwrap(), 0.05);
        let mut worst: f64 = 0.0;
        ekf_run(&sig.values, &p, |_, cov| {
            assert_eq!(cov, &cov.transpose());
            let min = cov.symmetric_eigenvalues().min();
            worst = worst.min(min / cov.trace());
        })
        .unwrap();
        assert!(worst >= -1e-9, "{worst}");
    }
}

fn ipdft_cheaper(p: u64, len: u64) -> bool {
    let ip = count_ops(OpsMethod::Ipdft { block: p }, len).unwrap();
    let hi = count_ops(OpsMethod::HilbertFir { taps: 17 }, len).unwrap();
    ip.total < hi.total
}

fn setup(shape: [f64; 3]) -> (SweepProfile, SourceSpectrum, LevelLadder) {
    let spec = SourceSpectrum::from_coherence_length(1310e-9, 11.1e-6).unwrap();
    let p = SweepProfile::from_shape(spec.k_center - 2.0 * spec.dk, 4.0 * spec.dk, 1.0 / 150e3, shape).unwrap();
    let ladder = LevelLadder::fit_in(&p, 2.0 * PI / (8.0 * 2e-3)).unwrap();
    (p, spec, ladder)
}

fn shape() -> impl Strategy<Value = [f64; 3]> {
    (0.2f64..2.0, -1.0f64..2.0, -1.0f64..1.0)
        .prop_map(|(a, b, c)| [a, b, c])
        .prop_filter("non-monotone", |s| SweepProfile::from_shape(1.0, 1.0, 1.0, *s).is_ok())
}

fn reflectors(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Reflector>> {
    prop::collection::vec((50e-6f64..2e-3, 0.0f64..=1.0), n).prop_map(|v| {
        let mut out: Vec<Reflector> = Vec::new();
        for (z, r) in v {
            if out.iter().all(|o| o.z != z) {
                out.push(Reflector { z, r });
            }
        }
        out
    })
}

proptest! {
    #[test]
    fn sweeps_are_monotone(s in shape(), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let (p, _, _) = setup(s);
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        prop_assume!(hi > lo);
        prop_assert!(p.eval(lo * p.t_scan).unwrap() < p.eval(hi * p.t_scan).unwrap());
    }

    #[test]
    fn events_plus_skips_equal_levels(s in shape(), before in 0usize..50, extra in 0usize..50) {
        let (p, _, fitted) = setup(s);
        let spacing = fitted.spacing();
        let m = fitted.len() + before + extra;
        let ladder = LevelLadder::from_spacing(fitted.levels[0] - before as f64 * spacing, spacing, m).unwrap();
        let clock = find_crossings(&p, &ladder);
        prop_assert_eq!(clock.len() + clock.skipped, m);
        prop_assert_eq!(clock.skipped, before + extra);
    }

    #[test]
    fn realtime_scan_ignores_sweep_distortion(s in shape(), z in 100e-6f64..3e-3) {
        let refl = ReflectivityProfile::mirror(1.0, 1e-2, z).unwrap();
        let (p0, spec, ladder) = setup([1.0, 0.0, 0.0]);
        let (p1, _, _) = setup(s);
        let a = realtime_calibrate(&p0, &refl, &spec, &ladder, &find_crossings(&p0, &ladder), &NoiseModel::none()).unwrap();
        let b = realtime_calibrate(&p1, &refl, &spec, &ladder, &find_crossings(&p1, &ladder), &NoiseModel::none()).unwrap();
        prop_assert_eq!(&a, &b);
        let peak = |s| reconstruct_ascan(s, 8192, None).unwrap().peak_from(50e-6).unwrap().0;
        prop_assert_eq!(peak(&a), peak(&b));
    }

    #[test]
    fn interferogram_superposes(a in reflectors(0..4), b in reflectors(0..4), k in 4.3e6f64..5.3e6, r_ref in 0.1f64..=1.0) {
        prop_assume!(a.iter().all(|x| b.iter().all(|y| x.z != y.z)));
        let spec = SourceSpectrum::from_coherence_length(1310e-9, 11.1e-6).unwrap();
        let model = |rs: Vec<Reflector>| InterferogramModel::new(ReflectivityProfile::new(r_ref, 0.0, rs).unwrap(), Some(spec), false);
        let both: Vec<Reflector> = a.iter().chain(&b).copied().collect();
        let reference = 0.25 * r_ref * spec.shape(k);
        let lhs = model(both).eval(k, 0.0);
        let rhs = model(a).eval(k, 0.0) + model(b).eval(k, 0.0) - reference;
        prop_assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn ipdft_costs_less_than_hilbert(m in 3u32..=6, len in 1u64..1_000_000) {
        prop_assert!(ipdft_cheaper(1 << m, len));
    }
}

#[test]
fn synthesis_is_deterministic_per_seed() {
    let (p, spec, _) = setup([0.5, 1.5, -1.0]);
    let refl = ReflectivityProfile::mirror(1.0, 1e-2, 998e-6).unwrap();
    let grid = Grid::scan(&p, LEN);
    let run = |seed| synth_interferogram(&p, &refl, &spec, &grid, &NoiseModel::new(1e-3, seed).unwrap(), false).unwrap();
    let (a, b, c) = (run(5), run(5), run(6));
    assert!(a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_ne!(a.values, c.values);
}
