use proptest::prelude::*;

use gcf_core::filter::{expand_full_polynomial, polyphase_impulse, OPTIMAL_Q};
use gcf_core::fixedpoint::{fractional_bits, Normalization, ToleranceSpec};
use gcf_core::spectral::{folding_bands, FrequencyGrid};
use gcf_core::{GcfDesign, GcfSpec};

fn f_n(design: &GcfDesign, chi: f64, y: f64) -> u32 {
    let spec = &design.spec;
    let bands = folding_bands(spec.decimation(), spec.f_c()).unwrap();
    let grid = FrequencyGrid::new(&bands, 129, 512).unwrap();
    let tol = ToleranceSpec::with_y(chi, y).unwrap();
    fractional_bits(design, &tol, &bands, &grid, Normalization::UnitGain).unwrap().f_n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_split_gives_the_same_filter(p in 1u32..=6, ratio in 1.05f64..8.0, omega in 0.0f64..std::f64::consts::PI) {
        let d = 1usize << p;
        let reference = GcfDesign::new(GcfSpec::from_rho(d, -1, OPTIMAL_Q, ratio * d as f64).unwrap()).unwrap();
        let h = reference.response(omega, false);
        let scale = reference.response(0.0, false).norm();
        for pp in reference.spec.splits() {
            let design = GcfDesign::new(reference.spec.with_split(pp).unwrap()).unwrap();
            let g = design.response(omega, false);
            prop_assert!((g - h).norm() <= 1e-12 * scale, "pp {pp}: {g} vs {h}");
        }
    }

    #[test]
    fn polyphase_branches_reassemble(p in 1u32..=6, pp in 0i32..=5, ratio in 1.05f64..8.0) {
        let d = 1usize << p;
        prop_assume!(pp < p as i32);
        let spec = GcfSpec::from_rho(d, pp, OPTIMAL_Q, ratio * d as f64).unwrap();
        let bank = polyphase_impulse(&spec);
        prop_assert_eq!(bank.reassembled(), bank.h_p.clone());
        prop_assert_eq!(bank.h_p.len(), 3 * spec.d1() - 2);
    }

    #[test]
    fn impulse_response_is_symmetric(p in 1u32..=6, ratio in 1.05f64..8.0) {
        let spec = GcfSpec::from_rho(1 << p, -1, OPTIMAL_Q, ratio * (1u32 << p) as f64).unwrap();
        let h = expand_full_polynomial(&spec);
        prop_assert_eq!(h.len(), 3 * ((1 << p) - 1) + 1);
        let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in h.iter().zip(h.iter().rev()) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn tighter_tolerance_never_needs_fewer_bits(chi in 1e-6f64..1e-2, shrink in 1.0f64..10.0, y in 0.5f64..4.0, grow in 1.0f64..3.0) {
        let design = GcfDesign::new(GcfSpec::from_rho(16, -1, OPTIMAL_Q, 64.0).unwrap()).unwrap();
        let base = f_n(&design, chi, y);
        prop_assert!(f_n(&design, chi / shrink, y) >= base);
        prop_assert!(f_n(&design, chi, y * grow) >= base);
    }
}
