use metabeam::link::{
    cascade_ris_link, direct_link, fading_sample, fading_stream, link_budget, noise_power,
    pathloss_inh_los, pathloss_inh_nlos, pathloss_umi, shannon_throughput, FadingSpec, HopFading,
    HopModels, NoiseSpec, PathlossModel, Position, RadioNode, RisNode,
};
use proptest::prelude::*;

proptest! {
    #[test]
    fn pathloss_grows_with_distance(d in 1.0f64..500.0, extra in 1e-3f64..100.0, f in 1.0f64..100.0, n in 1.0f64..5.0) {
        prop_assert!(pathloss_umi(f * 1e9, d + extra, n).unwrap() > pathloss_umi(f * 1e9, d, n).unwrap());
        prop_assert!(pathloss_inh_los(f, d + extra).unwrap() > pathloss_inh_los(f, d).unwrap());
        prop_assert!(pathloss_inh_nlos(f, d + extra).unwrap() >= pathloss_inh_nlos(f, d).unwrap());
        prop_assert!(pathloss_inh_nlos(f, d).unwrap() >= pathloss_inh_los(f, d).unwrap());
    }

    #[test]
    fn pathloss_grows_with_frequency(d in 1.0f64..500.0, f in 1.0f64..100.0, df in 1e-3f64..50.0) {
        prop_assert!(pathloss_umi((f + df) * 1e9, d, 2.1).unwrap() > pathloss_umi(f * 1e9, d, 2.1).unwrap());
        prop_assert!(pathloss_inh_los(f + df, d).unwrap() > pathloss_inh_los(f, d).unwrap());
        prop_assert!(pathloss_inh_nlos(f + df, d).unwrap() > pathloss_inh_nlos(f, d).unwrap());
    }

    #[test]
    fn nlos_is_continuous(d in 1.0f64..500.0, f in 1.0f64..100.0) {
        let h = 1e-9;
        let jump = (pathloss_inh_nlos(f, d + h).unwrap() - pathloss_inh_nlos(f, d).unwrap()).abs();
        prop_assert!(jump < 1e-6);
    }

    #[test]
    fn budget_is_linear_in_each_term(pt in -30.0f64..50.0, gt in -10.0f64..40.0, gr in -10.0f64..40.0, pl in 0.0f64..200.0, dx in -20.0f64..20.0) {
        let base = link_budget(pt, gt, gr, pl, 0.0);
        prop_assert!((link_budget(pt + dx, gt, gr, pl, 0.0) - base - dx).abs() < 1e-9);
        prop_assert!((link_budget(pt, gt + dx, gr, pl, 0.0) - base - dx).abs() < 1e-9);
        prop_assert!((link_budget(pt, gt, gr, pl + dx, 0.0) - base + dx).abs() < 1e-9);
        prop_assert!((link_budget(pt, gt, gr, pl, dx) - base + dx).abs() < 1e-9);
    }

    #[test]
    fn throughput_grows_with_snr_and_bandwidth(b in 1e3f64..1e10, snr in -30.0f64..60.0, ds in 1e-3f64..10.0) {
        let c = shannon_throughput(b, snr).unwrap();
        prop_assert!(c > 0.0);
        prop_assert!(shannon_throughput(b, snr + ds).unwrap() > c);
        prop_assert!(shannon_throughput(b * 2.0, snr).unwrap() > c);
    }

    #[test]
    fn cascade_matches_manual_two_hop_sum(
        pt in 0.0f64..40.0, gt in 0.0f64..30.0, gain in -10.0f64..35.0, eff in 0.05f64..1.0,
        d1 in 1.0f64..50.0, d2 in 1.0f64..50.0, g_in in 1e-3f64..5.0, g_out in 1e-3f64..5.0,
    ) {
        let f = 28e9;
        let b = 1e8;
        let tx = RadioNode { position: Position::new(0.0, 0.0, 0.0), tx_power_dbm: pt, tx_gain_dbi: gt, rx_gain_dbi: 0.0, frequency_hz: f, bandwidth_hz: b };
        let ris = RisNode { position: Position::new(d1, 0.0, 0.0), rx_gain_dbi: 3.0, efficiency: eff };
        let ue = RadioNode::receiver(Position::new(d1, d2, 0.0), 1.5, f, b);
        let models = HopModels { incoming: PathlossModel::InhLos, outgoing: PathlossModel::CloseIn { exponent: 2.1 } };
        let noise = NoiseSpec::default();
        let r = cascade_ris_link(&tx, &ris, &ue, gain, &models, HopFading { incoming: g_in, outgoing: g_out }, &noise).unwrap();

        let pl1 = pathloss_inh_los(28.0, d1).unwrap();
        let pl2 = pathloss_umi(f, d2, 2.1).unwrap();
        let manual = link_budget(pt, gt, 3.0, pl1, 0.0) + 10.0 * eff.log10()
            + link_budget(gain, 0.0, 1.5, pl2, 0.0)
            + 10.0 * (g_in * g_out).log10();
        prop_assert!((r.received_power_dbm - manual).abs() < 1e-9);
        prop_assert!((r.pathloss_db - pl1 - pl2).abs() < 1e-9);
        let n = noise_power(b, -174.0, 0.0).unwrap();
        prop_assert!((r.snr_db - (manual - n)).abs() < 1e-9);
        prop_assert!((r.throughput_bps - shannon_throughput(b, manual - n).unwrap()).abs() <= 1e-9 * r.throughput_bps);
    }
}

#[test]
fn direct_link_is_single_hop_budget() {
    let tx = RadioNode {
        position: Position::new(0.0, 0.0, 10.0),
        tx_power_dbm: 30.0,
        tx_gain_dbi: 10.0,
        rx_gain_dbi: 0.0,
        frequency_hz: 3.55e9,
        bandwidth_hz: 1e8,
    };
    let rx = RadioNode::receiver(Position::new(30.0, 40.0, 10.0), 0.0, 3.55e9, 1e8);
    let model = PathlossModel::CloseIn { exponent: 2.9 };
    let r = direct_link(&tx, &rx, &model, 1.0, &NoiseSpec::default()).unwrap();
    let pl = pathloss_umi(3.55e9, 50.0, 2.9).unwrap();
    assert!((r.received_power_dbm - (40.0 - pl)).abs() < 1e-12);
}

#[test]
fn close_range_is_rejected() {
    assert!(pathloss_umi(28e9, 0.5, 2.0).is_err());
    assert!(pathloss_inh_los(28.0, 0.99).is_err());
    assert!(pathloss_umi(28e9, 1.0, 2.0).is_ok());
}

fn sample_mean(spec: &FadingSpec, n: usize) -> f64 {
    let mut rng = fading_stream(spec.seed, 7);
    (0..n).map(|_| fading_sample(spec, &mut rng)).sum::<f64>() / n as f64
}

#[test]
fn fading_gains_have_unit_mean() {
    let n = 1_000_000;
    for spec in [
        FadingSpec::nlos(11),
        FadingSpec::los(0.0, 12),
        FadingSpec::los(5.0, 13),
        FadingSpec::los(13.0, 14),
    ] {
        let m = sample_mean(&spec, n);
        assert!((m - 1.0).abs() < 0.01, "{spec:?}: mean {m}");
    }
    assert_eq!(sample_mean(&FadingSpec::los(f64::INFINITY, 1), 10), 1.0);
}

#[test]
fn fading_streams_are_reproducible_and_distinct() {
    let spec = FadingSpec::nlos(42);
    let draw = |idx| {
        let mut r = spec.stream(idx);
        (0..16)
            .map(|_| fading_sample(&spec, &mut r))
            .collect::<Vec<_>>()
    };
    assert_eq!(draw(3), draw(3));
    assert_ne!(draw(3), draw(4));
}
