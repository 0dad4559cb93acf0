use metabeam::coding::{
    phase_only_profile, sdm_band_assignment, sdm_partition_profile, single_beam_profile, superpose,
    synthesize, BeamTarget, IncidentWave, SdmAxis, SynthesisOptions,
};
use metabeam::surface::{build_grid, circular_distance, UnitCellGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid(m: usize, n: usize) -> UnitCellGrid {
    build_grid(m, n, 1.0 / 3.0, 28e9).unwrap()
}

fn target() -> impl Strategy<Value = BeamTarget> {
    (0.0f64..1.4, 0.0f64..std::f64::consts::TAU).prop_map(|(t, p)| BeamTarget::new(t, p).unwrap())
}

fn distinct_targets(max: usize) -> impl Strategy<Value = Vec<BeamTarget>> {
    prop::collection::vec(target(), 1..=max).prop_filter("distinct directions", |ts| {
        ts.iter()
            .enumerate()
            .all(|(i, a)| ts[..i].iter().all(|b| a.angular_distance(b) > 1e-3))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phasor_sum_is_linear_in_the_beams(ts in distinct_targets(5), m in 1usize..12, n in 1usize..12) {
        let g = grid(m, n);
        let total = synthesize(&g, &ts, &SynthesisOptions::default()).unwrap();
        let mut manual = ndarray::Array2::<Complex64>::zeros(g.shape());
        for t in &ts {
            let p = single_beam_profile(&g, t, &IncidentWave::normal());
            manual.zip_mut_with(p.phase(), |acc, &ph| *acc += Complex64::from_polar(1.0, ph));
        }
        for (a, b) in total.sum().iter().zip(manual.iter()) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn phasor_sum_never_exceeds_beam_count(ts in distinct_targets(8)) {
        let g = grid(10, 10);
        let mb = synthesize(&g, &ts, &SynthesisOptions::default()).unwrap();
        let k = ts.len() as f64;
        prop_assert!(mb.sum().iter().all(|s| s.norm() <= k + 1e-12));
        let c = mb.complex_profile().unwrap();
        prop_assert!(c.amplitude().iter().all(|a| (0.0..=1.0).contains(a)));
    }

    #[test]
    fn single_target_reduces_exactly(t in target(), m in 1usize..16, n in 1usize..16) {
        let g = grid(m, n);
        let single = single_beam_profile(&g, &t, &IncidentWave::normal());
        prop_assert_eq!(phase_only_profile(&g, &[t]).unwrap(), single.clone());
        let c = superpose(&g, &[t]).unwrap();
        prop_assert_eq!(c.phase(), single.phase());
    }

    #[test]
    fn target_order_does_not_matter(ts in distinct_targets(6), shift in 0usize..6) {
        let g = grid(12, 12);
        let mut rotated = ts.clone();
        rotated.rotate_left(shift % ts.len());
        rotated.reverse();
        let a = synthesize(&g, &ts, &SynthesisOptions::default()).unwrap();
        let b = synthesize(&g, &rotated, &SynthesisOptions::default()).unwrap();
        let (pa, pb) = (a.phase_only(), b.phase_only());
        for ((x, y), s) in pa.phase().iter().zip(pb.phase()).zip(a.sum()) {
            if s.norm() > 1e-6 {
                prop_assert!(circular_distance(*x, *y) < 1e-12);
            }
        }
    }

    #[test]
    fn sdm_bands_cover_every_row_once(len in 1usize..40, bands in 1usize..40) {
        prop_assume!(bands <= len);
        let a = sdm_band_assignment(len, bands).unwrap();
        prop_assert_eq!(a.len(), len);
        prop_assert!(a.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
        prop_assert_eq!(*a.last().unwrap(), bands - 1);
        let sizes: Vec<usize> = (0..bands).map(|b| a.iter().filter(|&&x| x == b).count()).collect();
        prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1] && w[0] - w[1] <= 1));
    }

    #[test]
    fn sdm_cells_follow_their_band(ts in distinct_targets(6), column in any::<bool>()) {
        let g = grid(12, 18);
        let axis = if column { SdmAxis::Column } else { SdmAxis::Row };
        let p = sdm_partition_profile(&g, &ts, axis, &IncidentWave::normal()).unwrap();
        let len = if column { 18 } else { 12 };
        let bands = sdm_band_assignment(len, ts.len()).unwrap();
        let singles: Vec<_> = ts.iter().map(|t| single_beam_profile(&g, t, &IncidentWave::normal())).collect();
        for ((i, j), ph) in p.phase().indexed_iter() {
            let b = bands[if column { j } else { i }];
            prop_assert_eq!(*ph, singles[b].phase()[[i, j]]);
        }
    }
}
