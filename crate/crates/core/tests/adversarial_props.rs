mod common;

use byzmac::adversarial::{
    check_orthogonally_symmetrizable, check_symmetrizable, search_orthogonal_witness, symmetrization_violation,
    OrthoVerdict,
};
use byzmac::{AvcView, DensityOperator};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn planted_families_are_found(seed in any::<u64>(), nx in 2usize..=4, dim in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (avc, tau) = planted_avc(nx, dim, &mut rng);
        prop_assert!(symmetrization_violation(&avc, &tau) <= 1e-12);
        let verdict = check_symmetrizable(&avc);
        prop_assert!(verdict.is_symmetrizable(), "{:?}", verdict);
        prop_assert!(verdict.slack() <= 1e-10);
    }

    #[test]
    fn certified_orthogonal_defeats_search(seed in any::<u64>(), nx in 2usize..=3, nt in 1usize..=3) {
        // every output of input x lives on basis vector x, so every pair is orthogonal
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = (0..nx).flat_map(|x| (0..nt).map(move |_| DensityOperator::basis(nx, x))).collect();
        let avc = AvcView::new(nx, nt, table).unwrap();
        let verdict = check_orthogonally_symmetrizable(&avc, 50, &mut rng);
        let certified = matches!(verdict, OrthoVerdict::CertifiedNot { .. });
        prop_assert!(certified);
        prop_assert!(search_orthogonal_witness(&avc, 300, &mut rng).is_err());
    }

    #[test]
    fn full_rank_outputs_have_witness(seed in any::<u64>(), nx in 2usize..=3, nt in 1usize..=3, dim in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = (0..nx * nt).map(|_| random_state_rank(dim, dim, &mut rng)).collect();
        let avc = AvcView::new(nx, nt, table).unwrap();
        let verdict = check_orthogonally_symmetrizable(&avc, 10, &mut rng);
        let witness = matches!(verdict, OrthoVerdict::Witness { .. });
        prop_assert!(witness, "{:?}", verdict);
    }
}

#[test]
fn lp_optimum_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let nx = rng.random_range(2..=3);
        let table = (0..nx * 2).map(|_| random_state(2, &mut rng)).collect();
        let avc = AvcView::new(nx, 2, table).unwrap();
        let a = check_symmetrizable(&avc);
        let b = check_symmetrizable(&avc);
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
