use causal_text_core::tabular::{backdoor, stratum_counts, tau_simple, DataRow, StratumTable, Triple, Var};
use proptest::prelude::*;

fn triples() -> impl Strategy<Value = Vec<Triple>> {
    prop::collection::vec(
        (any::<bool>(), any::<bool>(), any::<bool>()).prop_map(|(a, c, y)| Triple { a, c, y }),
        1..200,
    )
}

/// Rows guaranteed to cover all four (A, C) strata.
fn positive_triples() -> impl Strategy<Value = Vec<Triple>> {
    triples().prop_map(|mut rows| {
        for a in [false, true] {
            for c in [false, true] {
                rows.push(Triple { a, c, y: a ^ c });
            }
        }
        rows
    })
}

fn difference_of_means(rows: &[Triple]) -> f64 {
    let mean = |arm: bool| {
        let (hits, n) = rows
            .iter()
            .filter(|r| r.a == arm)
            .fold((0u64, 0u64), |(h, n), r| (h + u64::from(r.y), n + 1));
        hits as f64 / n as f64
    };
    mean(true) - mean(false)
}

proptest! {
    #[test]
    fn row_order_does_not_matter(rows in positive_triples(), seed in any::<u64>()) {
        let mut shuffled = rows.clone();
        // deterministic Fisher-Yates driven by a tiny LCG
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = tau_simple(rows.iter()).unwrap();
        let b = tau_simple(shuffled.iter()).unwrap();
        prop_assert_eq!(a.tau().to_bits(), b.tau().to_bits());
    }

    #[test]
    fn duplicating_the_dataset_does_not_matter(rows in positive_triples(), k in 2usize..6) {
        let repeated: Vec<Triple> = (0..k).flat_map(|_| rows.iter().copied()).collect();
        let a = tau_simple(rows.iter()).unwrap();
        let b = tau_simple(repeated.iter()).unwrap();
        prop_assert_eq!(a.tau().to_bits(), b.tau().to_bits());
        prop_assert_eq!(b.n_used(), k as u64 * a.n_used());
    }

    #[test]
    fn cell_probabilities_sum_to_one(rows in triples()) {
        let table = stratum_counts(rows.iter(), &[Var::A, Var::C, Var::Y]).unwrap();
        let total: f64 = (0..8)
            .map(|k| {
                let cell = [(Var::A, k & 1 == 1), (Var::C, k & 2 == 2), (Var::Y, k & 4 == 4)];
                table.prob(&cell).unwrap()
            })
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let kept = table.marginalize(&[Var::Y, Var::C]).unwrap();
        prop_assert_eq!(kept.total(), table.total());
        prop_assert_eq!(kept.counts().iter().sum::<u64>(), table.total());
    }

    #[test]
    fn without_confounding_adjustment_changes_nothing(
        arms in (1u64..20, 1u64..20),
        strata in (1u64..20, 1u64..20),
        hit_fractions in prop::array::uniform4(0.0f64..=1.0),
    ) {
        // n(a, c) = m_a * k_c makes A independent of C exactly
        let m = [arms.0, arms.1];
        let k = [strata.0, strata.1];
        let mut rows = Vec::new();
        for a in 0..2 {
            for c in 0..2 {
                let n = m[a] * k[c];
                let hits = (hit_fractions[a | c << 1] * n as f64).round() as u64;
                for i in 0..n {
                    rows.push(Triple { a: a == 1, c: c == 1, y: i < hits });
                }
            }
        }
        let adjusted = tau_simple(rows.iter()).unwrap();
        prop_assert!((adjusted.tau() - difference_of_means(&rows)).abs() < 1e-12);
    }

    #[test]
    fn tau_is_exactly_the_difference_of_arm_means(rows in positive_triples()) {
        let e = tau_simple(rows.iter()).unwrap();
        prop_assert_eq!(e.tau().to_bits(), (e.mean_y1() - e.mean_y0()).to_bits());
        prop_assert!((-1.0..=1.0).contains(&e.tau()));
    }

    #[test]
    fn table_counts_match_brute_force(rows in triples(), mask in 0usize..8) {
        let table = stratum_counts(rows.iter(), &[Var::Y, Var::A, Var::C]).unwrap();
        let assignment = [(Var::A, mask & 1 == 1), (Var::C, mask & 2 == 2)];
        let brute = rows.iter().filter(|r| r.a == (mask & 1 == 1) && r.c == (mask & 2 == 2)).count();
        prop_assert_eq!(table.count(&assignment).unwrap(), brute as u64);
    }
}

#[test]
fn counts_from_rows_and_from_cells_agree() {
    let rows = [
        DataRow::new(Some(true), false, true),
        DataRow::new(Some(true), true, true),
        DataRow::new(Some(false), false, false),
        DataRow::new(Some(false), true, false),
    ];
    let table = stratum_counts(rows.iter(), &[Var::A, Var::C, Var::Y]).unwrap();
    let mut cells = vec![0u64; 8];
    for r in &rows {
        cells[StratumTable::cell_index(&[r.a.unwrap(), r.c, r.y])] += 1;
    }
    let rebuilt = StratumTable::from_counts(&[Var::A, Var::C, Var::Y], cells).unwrap();
    assert_eq!(table, rebuilt);
    assert_eq!(backdoor(&rebuilt, Var::A).unwrap().tau(), 1.0);
}
