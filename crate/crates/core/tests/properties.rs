mod common;

use c0ip_mg::patch::LocalSolverKind;
use c0ip_mg::smoother::SmootherKind;
use common::*;
use proptest::prelude::*;

fn small_case() -> impl Strategy<Value = (usize, usize, usize)> {
    prop_oneof![
        (Just(2usize), 2usize..=5, 0usize..=2),
        (Just(3usize), 2usize..=3, 0usize..=1),
    ]
}

fn local_kind() -> impl Strategy<Value = LocalSolverKind> {
    prop_oneof![Just(LocalSolverKind::Exact), Just(LocalSolverKind::Fdm)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn operator_is_symmetric((dim, k, level) in small_case(), seed in any::<u64>()) {
        let s = setup(dim, k, level);
        prop_assert!(symmetry_defect(&s, seed) < 1e-13);
    }

    #[test]
    fn operator_is_coercive_with_default_penalty((dim, k, level) in small_case(), seed in any::<u64>()) {
        let s = setup(dim, k, level);
        prop_assert!(rayleigh(&s, seed) > 0.0);
    }

    #[test]
    fn transfers_are_adjoint((dim, k, _) in small_case(), fine in 1usize..=2, seed in any::<u64>()) {
        let fine = if dim == 3 { 1 } else { fine };
        prop_assert!(adjointness_gap(dim, k, fine, seed) <= 1e-13);
    }

    #[test]
    fn additive_smoother_fixes_exact_solution(
        (dim, k, level) in small_case(),
        local in local_kind(),
        seed in any::<u64>(),
    ) {
        let s = setup(dim, k, level);
        prop_assert!(fixed_point_error(&s, SmootherKind::Additive, local, seed) < 1e-12);
    }

    #[test]
    fn multiplicative_step_ignores_order_within_colors(
        (dim, k, level) in small_case(),
        local in local_kind(),
        seed in any::<u64>(),
    ) {
        let s = setup(dim, k, level);
        prop_assert!(permutation_gap(&s, local, seed) < 1e-12);
    }
}

#[test]
fn coloring_partitions_patches() {
    for (dim, levels) in [(2, 0..=4), (3, 0..=2)] {
        for level in levels {
            for k in [2, 3] {
                coloring_is_partition(dim, k, level).unwrap();
            }
        }
    }
}

#[test]
fn materialized_operator_is_positive_definite() {
    for (dim, kmax, lmax) in [(2, 5, 2), (3, 3, 1)] {
        for k in 2..=kmax {
            for level in 0..=lmax {
                assert!(
                    cholesky_succeeds(&setup(dim, k, level)),
                    "dim={dim} k={k} level={level}"
                );
            }
        }
    }
}
