mod common;

use lacboost::data::Label;
use lacboost::weak::{
    best_stump, best_stump_over, DecisionStump, GrayImage, HaarFeature, HaarFeatureSet, HaarKind, IntegralImage,
    WeakClassifier, WeakLearnerPool,
};
use lacboost::Dataset;
use proptest::prelude::*;

fn small_problem() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Label>, Vec<f64>)> {
    (2usize..12, 1usize..4).prop_flat_map(|(m, d)| {
        (
            prop::collection::vec(prop::collection::vec(prop_oneof![-3.0f64..3.0, Just(0.5)], d), m),
            prop::collection::vec(any::<bool>(), m)
                .prop_filter("both classes", |v| v.iter().any(|&b| b) && v.iter().any(|&b| !b)),
            prop::collection::vec(-1.0f64..1.0, m),
        )
            .prop_map(|(rows, pos, u)| {
                let labels = pos.into_iter().map(|p| if p { Label::Positive } else { Label::Negative }).collect();
                (rows, labels, u)
            })
    })
}

/// Every threshold at a data value or beyond the extremes, both polarities.
fn brute_force_edge(data: &Dataset, u: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for f in 0..data.n_features() {
        let mut cands: Vec<f64> = (0..data.m()).map(|i| data.value(i, f)).collect();
        cands.push(f64::INFINITY);
        for &t in &cands {
            for pol in [1i8, -1] {
                let h = DecisionStump::new(f, t, pol);
                let e: f64 = (0..data.m())
                    .map(|i| u[i] * f64::from(data.label(i).sign()) * f64::from(h.classify(data.row(i))))
                    .sum();
                best = best.max(e);
            }
        }
    }
    best
}

fn stump_edge(data: &Dataset, u: &[f64], h: &DecisionStump<f64>) -> f64 {
    (0..data.m())
        .map(|i| u[i] * f64::from(data.label(i).sign()) * f64::from(h.classify(data.row(i))))
        .sum()
}

fn random_image(seed: u64, w: usize, h: usize) -> GrayImage<f64> {
    use rand::Rng;
    let mut r = common::rng(seed);
    GrayImage::new(w, h, (0..w * h).map(|_| r.random_range(0.0..255.0)).collect()).unwrap()
}

fn direct_sum(img: &GrayImage<f64>, x: usize, y: usize, w: usize, h: usize) -> f64 {
    let mut s = 0.0;
    for j in y..y + h {
        for i in x..x + w {
            s += img.pixels[j * img.width + i];
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn best_stump_matches_brute_force((rows, labels, u) in small_problem()) {
        prop_assume!(u.iter().any(|&v| v != 0.0));
        let data = Dataset::from_rows(rows, labels).unwrap();
        // the dataset reorders rows positives-first; permute u alongside
        let u: Vec<f64> = data.permutation().iter().map(|&i| u[i]).collect();
        let all: Vec<usize> = (0..data.n_features()).collect();
        let got = best_stump_over(&data, &u, &all).unwrap();
        let want = brute_force_edge(&data, &u);
        prop_assert!((got.edge - want).abs() < 1e-12, "{} vs {want}", got.edge);
        prop_assert!((stump_edge(&data, &u, &got.stump) - got.edge).abs() < 1e-12);
    }

    #[test]
    fn increasing_feature_maps_keep_the_edge(
        (rows, labels, u) in small_problem(),
        scale in 0.01f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        prop_assume!(u.iter().any(|&v| v != 0.0));
        let moved: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| scale * v + shift).collect()).collect();
        let a = Dataset::from_rows(rows, labels.clone()).unwrap();
        let b = Dataset::from_rows(moved, labels).unwrap();
        let u: Vec<f64> = a.permutation().iter().map(|&i| u[i]).collect();
        let all: Vec<usize> = (0..a.n_features()).collect();
        let ea = best_stump_over(&a, &u, &all).unwrap().edge;
        let eb = best_stump_over(&b, &u, &all).unwrap().edge;
        prop_assert!((ea - eb).abs() < 1e-12);
    }

    #[test]
    fn integral_image_matches_direct_sums(seed in any::<u64>(), w in 1usize..20, h in 1usize..20, picks in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 10)) {
        let img = random_image(seed, w, h);
        let ii = img.integral();
        for (a, b, c, d) in picks {
            let x = (a * w as f64) as usize % w;
            let y = (b * h as f64) as usize % h;
            let rw = 1 + (c * (w - x) as f64) as usize % (w - x);
            let rh = 1 + (d * (h - y) as f64) as usize % (h - y);
            let want = direct_sum(&img, x, y, rw, rh);
            prop_assert!((ii.rect_sum(x, y, rw, rh) - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
        prop_assert!(ii.checked_rect_sum(0, 0, w + 1, h).is_err());
    }

    #[test]
    fn haar_responses_respond_linearly(seed in any::<u64>(), gain in 0.1f64..4.0, offset in -50.0f64..50.0) {
        let (w, h) = (9, 9);
        let img = random_image(seed, w, h);
        let moved = GrayImage::new(w, h, img.pixels.iter().map(|v| gain * v + offset).collect()).unwrap();
        let (a, b) = (img.integral(), moved.integral());
        let features = HaarFeature::enumerate(w, h);
        for f in features.iter().step_by(7) {
            let ra = f.response(&a).unwrap();
            let rb = f.response(&b).unwrap();
            // outer cells of a three-cell pattern have twice the centre's area
            let area = (f.width * f.height) as f64;
            let bias = match f.kind {
                HaarKind::ThreeHorizontal | HaarKind::ThreeVertical => -offset * area / 3.0,
                _ => 0.0,
            };
            prop_assert!((rb - (gain * ra + bias)).abs() <= 1e-7 * (1.0 + rb.abs()), "{f:?}: {rb} vs {}", gain * ra + bias);
        }
    }

    #[test]
    fn window_offsets_match_cropping(seed in any::<u64>(), ox in 0usize..6, oy in 0usize..6) {
        let (ww, wh) = (8, 8);
        let big = random_image(seed, 14, 14);
        let crop: Vec<f64> = (0..wh).flat_map(|j| (0..ww).map(move |i| (i, j))).map(|(i, j)| big.pixels[(oy + j) * 14 + ox + i]).collect();
        let small = IntegralImage::new(&crop, ww, wh).unwrap();
        let set = HaarFeatureSet::full(ww, wh);
        let at = set.responses_at(&big.integral(), ox, oy).unwrap();
        let direct = set.responses(&small).unwrap();
        for (a, b) in at.iter().zip(&direct) {
            prop_assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn full_window_feature_count() {
    assert_eq!(HaarFeature::enumerate(24, 24).len(), 162_336);
    assert!(HaarFeature::enumerate(24, 24).iter().all(|f| f.fits(24, 24)));
}

#[test]
fn sampled_pool_only_scans_its_subset() {
    let mut r = common::rng(4);
    let data = common::gaussian_dataset(&mut r, 20, 30, 40, 0.5);
    let u = vec![1.0; data.m()];
    let mut pool = WeakLearnerPool::tabular(40, 0.1, 9).unwrap();
    let mut replay = pool.clone();
    for _ in 0..5 {
        let chosen = best_stump(&mut pool, &data, &u).unwrap();
        let subset = replay.sample_features();
        assert_eq!(subset.len(), 4);
        assert!(subset.contains(&chosen.stump.feature_index));
        assert_eq!(chosen, best_stump_over(&data, &u, &subset).unwrap());
    }
}
