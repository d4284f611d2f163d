use proptest::prelude::*;

use slomorph::grid::{BinaryMask, Grid};
use slomorph::raster::{
    count_components, distance_transform, postprocess, remove_small_components, resize_nearest, skeletonize,
    threshold, PostProcessParams,
};

fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
    (4usize..40, 4usize..40, 0.2f64..0.8).prop_flat_map(|(w, h, p)| {
        prop::collection::vec(prop::bool::weighted(p), w * h).prop_map(move |v| Grid::from_vec(w, h, v).unwrap())
    })
}

proptest! {
    #[test]
    fn skeleton_is_inside_the_mask(m in mask_strategy()) {
        let s = skeletonize(&m);
        prop_assert!(s.mask.is_subset_of(&m));
    }

    #[test]
    fn skeleton_keeps_components(m in mask_strategy()) {
        prop_assert_eq!(count_components(&skeletonize(&m).mask), count_components(&m));
    }

    #[test]
    fn skeleton_is_a_fixed_point(m in mask_strategy()) {
        let s = skeletonize(&m);
        prop_assert_eq!(skeletonize(&s.mask), s);
    }

    #[test]
    fn threshold_is_monotone(v in prop::collection::vec(0.0f64..1.0, 64), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let g = Grid::from_vec(8, 8, v).unwrap();
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(threshold(&g, hi).is_subset_of(&threshold(&g, lo)));
    }

    #[test]
    fn small_component_removal_only_removes(m in mask_strategy(), a in 0usize..30) {
        let r = remove_small_components(&m, a);
        prop_assert!(r.is_subset_of(&m));
        prop_assert!(remove_small_components(&m, a + 5).is_subset_of(&r));
    }

    #[test]
    fn postprocess_without_gaps_is_removal(m in mask_strategy(), a in 0usize..30) {
        let p = PostProcessParams { min_area_px: a, max_gap_px: 0, max_angle_deg: 30.0 };
        prop_assert_eq!(postprocess(&m, &p), remove_small_components(&m, a));
    }

    #[test]
    fn postprocess_only_adds_bridges(m in mask_strategy()) {
        let p = PostProcessParams { min_area_px: 0, max_gap_px: 6, max_angle_deg: 45.0 };
        let out = postprocess(&m, &p);
        prop_assert!(m.is_subset_of(&out));
        prop_assert!(count_components(&out) <= count_components(&m));
    }

    #[test]
    fn edt_is_zero_exactly_on_background(m in mask_strategy()) {
        let d: Grid<f64> = distance_transform(&m);
        for (x, y) in (0..m.height()).flat_map(|y| (0..m.width()).map(move |x| (x, y))) {
            if m.at(x, y) {
                prop_assert!(d.at(x, y) >= 1.0);
            } else {
                prop_assert_eq!(d.at(x, y), 0.0);
            }
        }
    }

    #[test]
    fn nearest_resize_round_trips_integer_scales(m in mask_strategy(), k in 2usize..4) {
        let (w, h) = m.dims();
        let (up, _) = resize_nearest(&m, (w * k, h * k));
        prop_assert_eq!(up.count(), m.count() * k * k);
        let (back, _) = resize_nearest(&up, (w, h));
        prop_assert_eq!(back, m);
    }
}

#[test]
fn resize_to_own_size_is_identity_at_768() {
    let m = Grid::from_fn(768, 768, |x, y| (x * 31 + y * 17) % 7 == 0);
    let (r, warn) = resize_nearest(&m, (768, 768));
    assert!(warn.is_none());
    assert_eq!(r, m);
}

