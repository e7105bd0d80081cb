mod common;

use proptest::prelude::*;

use common::{brute_support, brute_vertices, dot};
use flexsum::polytope::{
    containment_slack, contains_point, is_bounded, is_feasible, lp_solve, poly_contains_poly, support, vertices, HRep,
    LpStatus, OptSense, Row,
};

/// Box `[-1, 2]^d` cut by random halfspaces that keep the origin inside.
fn cut_box_strategy() -> impl Strategy<Value = HRep> {
    (2usize..=4).prop_flat_map(|d| {
        prop::collection::vec((prop::collection::vec(-1.0f64..1.0, d), 0.1f64..2.0), 0..4).prop_map(move |cuts| {
            let mut h = HRep::cube(&vec![-1.0; d], &vec![2.0; d]);
            for (normal, bound) in cuts {
                h.push(Row::le(normal, bound)).unwrap();
            }
            h
        })
    })
}

fn direction(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lp_optimum_matches_best_vertex((h, c) in cut_box_strategy().prop_flat_map(|h| { let d = h.dim(); (Just(h), direction(d)) })) {
        let oracle = brute_vertices(&h);
        prop_assert!(!oracle.is_empty());
        let lp = lp_solve(&h, &c, OptSense::Max).unwrap();
        prop_assert_eq!(lp.status, LpStatus::Optimal);
        let best = brute_support(&oracle, &c);
        prop_assert!((lp.value - best).abs() <= 1e-8 * (1.0 + best.abs()));
        prop_assert!(contains_point(&h, &lp.point, 1e-8));
        let min = lp_solve(&h, &c, OptSense::Min).unwrap().value;
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        prop_assert!((min + brute_support(&oracle, &neg)).abs() <= 1e-8 * (1.0 + min.abs()));
    }

    #[test]
    fn vertex_enumeration_matches_oracle(h in cut_box_strategy()) {
        let mut lib = vertices(&h).unwrap();
        let mut oracle = brute_vertices(&h);
        let key = |v: &Vec<f64>| v.iter().map(|x| (x * 1e6).round() as i64).collect::<Vec<_>>();
        lib.sort_by_key(key);
        oracle.sort_by_key(key);
        prop_assert_eq!(lib.len(), oracle.len());
        for (p, q) in lib.iter().zip(&oracle) {
            prop_assert!(p.iter().zip(q).all(|(a, b)| (a - b).abs() < 1e-7));
        }
    }

    #[test]
    fn support_is_positively_homogeneous(
        (h, c) in cut_box_strategy().prop_flat_map(|h| { let d = h.dim(); (Just(h), direction(d)) }),
        lambda in 0.01f64..50.0,
    ) {
        let scaled: Vec<f64> = c.iter().map(|v| lambda * v).collect();
        let s1 = support(&h, &c).unwrap();
        let s2 = support(&h, &scaled).unwrap();
        prop_assert!((s2 - lambda * s1).abs() <= 1e-8 * (1.0 + s2.abs()));
    }

    #[test]
    fn support_is_subadditive(
        (h, c1, c2) in cut_box_strategy().prop_flat_map(|h| { let d = h.dim(); (Just(h), direction(d), direction(d)) }),
    ) {
        let sum: Vec<f64> = c1.iter().zip(&c2).map(|(a, b)| a + b).collect();
        let lhs = support(&h, &sum).unwrap();
        let rhs = support(&h, &c1).unwrap() + support(&h, &c2).unwrap();
        prop_assert!(lhs <= rhs + 1e-8);
    }

    #[test]
    fn shrunken_copy_is_contained(h in cut_box_strategy(), shrink in 0.1f64..0.95) {
        // the origin is interior, so scaling toward it stays inside
        let rows = h.rows().iter().map(|r| Row::new(r.normal.clone(), r.sense, shrink * r.bound)).collect();
        let inner = HRep::from_rows(h.dim(), rows).unwrap();
        prop_assert!(poly_contains_poly(&inner, &h).unwrap());
        prop_assert!(containment_slack(&inner, &h).unwrap() >= 0.0);
        for v in brute_vertices(&inner) {
            prop_assert!(contains_point(&h, &v, 1e-9));
        }
    }
}

#[test]
fn translated_box_is_not_contained() {
    let outer = HRep::cube(&[0.0, 0.0], &[1.0, 1.0]);
    let inner = HRep::cube(&[0.5, 0.5], &[1.5, 1.5]);
    assert!(!poly_contains_poly(&inner, &outer).unwrap());
    assert!((containment_slack(&inner, &outer).unwrap() + 0.5).abs() < 1e-9);
}

#[test]
fn empty_and_unbounded_sets_are_reported() {
    let mut empty = HRep::cube(&[0.0], &[1.0]);
    empty.push(Row::ge(vec![1.0], 2.0)).unwrap();
    assert!(!is_feasible(&empty).unwrap());
    assert_eq!(lp_solve(&empty, &[1.0], OptSense::Max).unwrap().status, LpStatus::Infeasible);

    let ray = HRep::from_rows(2, vec![Row::ge(vec![1.0, 0.0], 0.0), Row::ge(vec![0.0, 1.0], 0.0)]).unwrap();
    assert!(!is_bounded(&ray).unwrap());
    assert_eq!(lp_solve(&ray, &[1.0, 1.0], OptSense::Max).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn equality_rows_pin_the_optimum() {
    let mut h = HRep::cube(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]);
    h.push(Row::eq(vec![1.0, 1.0, 1.0], 1.5)).unwrap();
    let sol = lp_solve(&h, &[3.0, 2.0, 1.0], OptSense::Max).unwrap();
    assert!((sol.value - 4.0).abs() < 1e-9);
    assert!((dot(&sol.point, &[1.0, 1.0, 1.0]) - 1.5).abs() < 1e-9);
}
