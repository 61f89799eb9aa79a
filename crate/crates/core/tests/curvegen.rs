use geopix_core::curvegen::{generate_instance, jordan_check, CurveConfig};
use geopix_core::geom::point_to_polyline_distance;
use geopix_core::metrics::squareness_mask;
use geopix_core::raster::rasterize_square_pair;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn instances_are_well_formed(seed in any::<u64>()) {
        let inst = generate_instance(seed, &CurveConfig::default()).unwrap();
        prop_assert!(jordan_check(&inst.curve).unwrap());
        for p in inst.curve.points() {
            prop_assert!(p.x.abs() <= 1.0 + 1e-12 && p.y.abs() <= 1.0 + 1e-12);
        }
        for sq in &inst.squares {
            let v = sq.vertices();
            for (i, &p) in v.iter().enumerate() {
                prop_assert!(point_to_polyline_distance(p, &inst.curve).unwrap() < 1e-6);
                prop_assert!((p.dist(v[(i + 1) % 4]) - sq.side).abs() < 1e-12);
            }
            prop_assert!((v[0].dist(v[2]) - v[1].dist(v[3])).abs() < 1e-12);
        }
    }
}

#[test]
fn circle_fraction() {
    let cfg = CurveConfig::default();
    let circles = (0..5000u64).filter(|&s| generate_instance(s, &cfg).unwrap().circle).count();
    let f = circles as f64 / 5000.0;
    assert!((f - 0.1).abs() <= 0.02, "{f}");
}

#[test]
fn rasterized_ground_truth_is_square() {
    let cfg = CurveConfig::default();
    let mut qs = Vec::new();
    for seed in 0..100 {
        let inst = generate_instance(seed, &cfg).unwrap();
        for k in 0..inst.squares.len() {
            qs.push(squareness_mask(&rasterize_square_pair(&inst, k, 128).unwrap().1).unwrap());
        }
    }
    let mean = qs.iter().sum::<f64>() / qs.len() as f64;
    assert!(mean >= 0.9, "mean {mean}");
}
