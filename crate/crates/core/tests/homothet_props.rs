mod common;

use proptest::prelude::*;

use common::{abstract_device_strategy, brute_support, brute_vertices, device_strategy, satisfies};
use flexsum::baseline_homothet::{aggregate_homothets, feasible_at_scale, fit_all, fit_homothet, Prototype};
use flexsum::model::TransformedDevice;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fitted_homothet_lies_inside_flexibility_set((_, dev, _) in (1usize..=4).prop_flat_map(device_strategy)) {
        let h = fit_homothet(&dev).unwrap();
        let f = dev.flexibility_halfspaces();
        for v in brute_vertices(&h.hrep()) {
            prop_assert!(satisfies(&f, &v, 1e-7), "vertex {:?} leaves F", v);
        }
    }

    #[test]
    fn fitted_scale_is_maximal((dev, _) in (1usize..=5).prop_flat_map(abstract_device_strategy)) {
        let h = fit_homothet(&dev).unwrap();
        prop_assert!(feasible_at_scale(&dev, h.scale * (1.0 - 1e-6)).unwrap());
        prop_assert!(!feasible_at_scale(&dev, h.scale * (1.0 + 1e-4) + 1e-6).unwrap());
    }

    #[test]
    fn homothet_support_matches_vertices(
        ((_, dev, _), c) in (1usize..=4).prop_flat_map(|t| (device_strategy(t), prop::collection::vec(-1.0f64..1.0, t))),
    ) {
        let h = fit_homothet(&dev).unwrap();
        let want = brute_support(&brute_vertices(&h.hrep()), &c);
        prop_assert!((h.support(&c) - want).abs() <= 1e-8 * (1.0 + want.abs()));
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        prop_assert!((h.minimum(&c) + brute_support(&brute_vertices(&h.hrep()), &neg)).abs() <= 1e-8 * (1.0 + want.abs()));
    }

    #[test]
    fn aggregate_support_is_sum_of_supports(
        (members, c) in (1usize..=5).prop_flat_map(|t| (prop::collection::vec(device_strategy(t), 1..6), prop::collection::vec(-1.0f64..1.0, t))),
    ) {
        let devices: Vec<TransformedDevice> = members.into_iter().map(|m| m.1).collect();
        let fits = fit_all(&devices).unwrap();
        let agg = aggregate_homothets(&fits).unwrap();
        let want: f64 = fits.iter().map(|h| h.support(&c)).sum();
        prop_assert!((agg.support(&c) - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }
}

#[test]
fn prototype_is_unit_box_with_prefix_rows() {
    let p = Prototype::new(3);
    let verts = brute_vertices(&p.hrep());
    assert!((brute_support(&verts, &[1.0, 1.0, 1.0]) - 3.0).abs() < 1e-12);
    assert_eq!(verts.len(), 8);
    assert!((brute_support(&verts, &[1.0, -1.0, 0.0]) - 1.0).abs() < 1e-12);
    assert!(brute_support(&verts, &[-1.0, -1.0, -1.0]).abs() < 1e-12);
}

#[test]
fn worked_instance_scale() {
    let dev = TransformedDevice::from_bounds(0.7, 0.0, 1.0, vec![0.3; 2], vec![1.3; 2]);
    let h = fit_homothet(&dev).unwrap();
    assert!((h.scale - 10.0 / 17.0).abs() < 1e-9, "s = {}", h.scale);
    assert!(feasible_at_scale(&dev, 10.0 / 17.0 - 1e-4).unwrap());
    assert!(!feasible_at_scale(&dev, 10.0 / 17.0 + 1e-4).unwrap());
}
