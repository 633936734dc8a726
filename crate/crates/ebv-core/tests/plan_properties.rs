//! Plan invariants: unit count, equal lengths, disjoint cover, and the
//! balance the equal pairing buys over the naive split.

use std::collections::HashSet;

use ebv_core::{assign, bivectorize, equalize, plan_stats, EbvPlan};

#[test]
fn every_unit_has_length_n_for_all_n_up_to_512() {
    for n in 2..=512usize {
        let units = equalize(&bivectorize(n).unwrap(), n).unwrap();
        assert_eq!(units.len(), n - 1, "n={n}");
        assert!(
            units.iter().all(|u| u.total_length() == n),
            "n={n}: unequal unit"
        );
    }
}

#[test]
fn units_cover_both_strict_triangles_exactly_once() {
    for n in 2..=64usize {
        let units = equalize(&bivectorize(n).unwrap(), n).unwrap();
        let mut seen = HashSet::new();
        for unit in &units {
            for member in unit.members() {
                for pos in member.positions() {
                    assert!(seen.insert(pos), "n={n}: {pos:?} covered twice");
                }
            }
        }
        assert_eq!(seen.len(), n * (n - 1), "n={n}: cover incomplete");
        for (row, col) in seen {
            assert_ne!(row, col, "n={n}: diagonal position claimed");
            assert!(row < n && col < n);
        }
    }
}

#[test]
fn equalizing_flattens_the_length_skew() {
    for n in [4usize, 9, 32, 101] {
        let descriptors = bivectorize(n).unwrap();
        let max = descriptors.iter().map(|d| d.len()).max().unwrap();
        let min = descriptors.iter().map(|d| d.len()).min().unwrap();
        assert_eq!(max / min, n - 1, "n={n}: naive split skew");

        let units = equalize(&descriptors, n).unwrap();
        let max = units.iter().map(|u| u.total_length()).max().unwrap();
        let min = units.iter().map(|u| u.total_length()).min().unwrap();
        assert_eq!(max, min, "n={n}: paired units not equal");
    }
}

#[test]
fn assignment_balance_holds_for_every_worker_count() {
    for n in [5usize, 17, 33, 64, 100] {
        let units = equalize(&bivectorize(n).unwrap(), n).unwrap();
        for workers in 1..n {
            let plan = assign(units.clone(), workers).unwrap();
            let stats = plan_stats(&plan);
            assert!(
                stats.length_gap() <= n,
                "n={n} workers={workers}: gap {}",
                stats.length_gap()
            );
            let min_units = stats.per_worker_units().iter().min().unwrap();
            let max_units = stats.per_worker_units().iter().max().unwrap();
            assert!(max_units - min_units <= 1, "n={n} workers={workers}");
            assert_eq!(
                *max_units,
                (n - 1).div_ceil(workers),
                "n={n} workers={workers}"
            );
        }
    }
}

#[test]
fn plan_build_is_deterministic() {
    let a = EbvPlan::build(33, 4).unwrap();
    let b = EbvPlan::build(33, 4).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.dump(), b.dump());
}
