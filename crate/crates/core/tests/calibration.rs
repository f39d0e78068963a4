use lumaswitch::skinfilter::{
    calibrate_ranges, f1_score, ChannelRange, ColorSpaceId, SkinRangeFilter, SpacePixel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best F1 over every (lo, hi) pair of the red channel on a step-5 grid,
/// with the other channels held at `base`.
fn coarse_red_oracle(samples: &[(SpacePixel, bool)], base: &SkinRangeFilter) -> f64 {
    let grid: Vec<f64> = (0..=51).map(|k| f64::from(k * 5)).collect();
    let mut best = 0.0f64;
    for &lo in &grid {
        for &hi in grid.iter().filter(|&&hi| hi >= lo) {
            let mut f = *base;
            f.rgb.r = ChannelRange::new(lo, hi);
            best = best.max(f1_score(samples, &f));
        }
    }
    best
}

#[test]
fn calibration_reaches_the_coarse_grid_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples: Vec<(SpacePixel, bool)> = (0..200)
        .map(|_| {
            let rgb: [u8; 3] = rng.gen();
            (SpacePixel::Rgb(rgb), (120..=200).contains(&rgb[0]))
        })
        .collect();

    let mut initial = SkinRangeFilter::default();
    initial.rgb.g = ChannelRange::new(0.0, 255.0);
    initial.rgb.b = ChannelRange::new(0.0, 255.0);
    let calibrated = calibrate_ranges(&samples, ColorSpaceId::Rgb, &initial).unwrap();

    let before = f1_score(&samples, &initial);
    let after = f1_score(&samples, &calibrated);
    let oracle = coarse_red_oracle(&samples, &initial);
    assert!(after >= before, "{after} < {before}");
    assert!(
        after >= oracle,
        "calibrated {after} below coarse optimum {oracle}"
    );
    assert_eq!(oracle, 1.0);
}

#[test]
fn calibration_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples: Vec<(SpacePixel, bool)> = (0..150)
        .map(|_| {
            let px = SpacePixel::from_rgb(ColorSpaceId::Ycbcr, rng.gen());
            (px, rng.gen_bool(0.3))
        })
        .collect();
    let init = SkinRangeFilter::default();
    let a = calibrate_ranges(&samples, ColorSpaceId::Ycbcr, &init).unwrap();
    let b = calibrate_ranges(&samples, ColorSpaceId::Ycbcr, &init).unwrap();
    assert_eq!(a, b);
    assert!(f1_score(&samples, &a) >= f1_score(&samples, &init));
}
