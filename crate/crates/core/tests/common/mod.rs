//! Test-only oracles and fixtures.
//!
//! The oracles here deliberately avoid the library's own algorithms:
//! components come from union-find over pixel pairs, filters from direct
//! neighbor counts, network outputs from plain loops.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use lumaswitch::colorspace::{feature_vector, FeatureVector};
use lumaswitch::imaging::{BinaryMask, ImageBuffer, Rgb};
use lumaswitch::mlp::{MlpModel, TrainingSet};
use lumaswitch::skinfilter::{ColorSpaceId, SkinRangeFilter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SKIN: Rgb = [180, 120, 100];
pub const PATCH_ORIGIN: (usize, usize) = (20, 24);
pub const SALT: [(usize, usize); 5] = [(2, 2), (60, 3), (5, 58), (61, 61), (50, 10)];

/// 64x64 black canvas with a 16x16 patch of the worked skin color.
pub fn patch_image() -> ImageBuffer {
    let mut img = ImageBuffer::filled(64, 64, [0, 0, 0]).unwrap();
    img.fill_rect(PATCH_ORIGIN.0, PATCH_ORIGIN.1, 16, 16, SKIN);
    img
}

/// The patch fixture plus five isolated skin-colored pixels far from it.
pub fn salted_patch_image() -> ImageBuffer {
    let mut img = patch_image();
    for (x, y) in SALT {
        img.set(x, y, SKIN);
    }
    img
}

pub fn patch_mask() -> BinaryMask {
    let mut m = BinaryMask::filled(64, 64, false).unwrap();
    for y in PATCH_ORIGIN.1..PATCH_ORIGIN.1 + 16 {
        for x in PATCH_ORIGIN.0..PATCH_ORIGIN.0 + 16 {
            m.set(x, y, true);
        }
    }
    m
}

/// Passes the HSV box; fails YCbCr (Cb ~ 93.7) and fails RGB once R must be
/// at least 200.
pub const HSV_ONLY: Rgb = [192, 137, 87];
/// Passes RGB (also with R >= 200); hue 0.125 fails HSV, Cb ~ 47 fails YCbCr.
pub const RGB_ONLY: Rgb = [222, 174, 29];
/// Passes only YCbCr under the default ranges (R < 95).
pub const YCBCR_ONLY: Rgb = [75, 50, 33];

/// With the default ranges every HSV-skin pixel is also RGB-skin, so the
/// HSV-dominant fixture runs with the red floor raised to 200.
pub fn raised_red_filter() -> SkinRangeFilter {
    SkinRangeFilter::from_config_str("rgb.r.lo = 200").unwrap()
}

/// 20x20 patch of `big` (400 px) and a far 10x10 patch of `small` (100 px).
pub fn two_patch_image(big: Rgb, small: Rgb) -> ImageBuffer {
    let mut img = ImageBuffer::filled(64, 64, [0, 0, 0]).unwrap();
    img.fill_rect(2, 2, 20, 20, big);
    img.fill_rect(45, 45, 10, 10, small);
    img
}

pub fn rect_mask(w: usize, h: usize, x0: usize, y0: usize, rw: usize, rh: usize) -> BinaryMask {
    let mut m = BinaryMask::filled(w, h, false).unwrap();
    for y in y0..y0 + rh {
        for x in x0..x0 + rw {
            m.set(x, y, true);
        }
    }
    m
}

pub fn random_mask(rng: &mut ChaCha8Rng, max_side: usize) -> BinaryMask {
    let w = rng.gen_range(1..=max_side);
    let h = rng.gen_range(1..=max_side);
    let density = rng.gen_range(0.05..0.7);
    let bits = (0..w * h).map(|_| rng.gen_bool(density)).collect();
    BinaryMask::new(w, h, bits).unwrap()
}

/// Random scene: a background plus a handful of rectangles drawn from a
/// palette that includes colors passing one, two or all three filters.
pub fn random_scene(rng: &mut ChaCha8Rng) -> ImageBuffer {
    const PALETTE: [Rgb; 8] = [
        SKIN,
        HSV_ONLY,
        RGB_ONLY,
        YCBCR_ONLY,
        [97, 48, 32],
        [30, 90, 200],
        [0, 0, 0],
        [240, 240, 240],
    ];
    let (w, h) = (rng.gen_range(8..=48), rng.gen_range(8..=48));
    let mut img = ImageBuffer::filled(w, h, PALETTE[rng.gen_range(5..8)]).unwrap();
    for _ in 0..rng.gen_range(1..7) {
        let color = PALETTE[rng.gen_range(0..PALETTE.len())];
        let (x, y) = (rng.gen_range(0..w), rng.gen_range(0..h));
        img.fill_rect(x, y, rng.gen_range(1..w), rng.gen_range(1..h), color);
    }
    for _ in 0..rng.gen_range(0..20) {
        let (x, y) = (rng.gen_range(0..w), rng.gen_range(0..h));
        img.set(x, y, rng.gen());
    }
    img
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Partition of the true pixels into 8-connected sets, via union-find over
/// every adjacent pair of true pixels.
pub fn component_oracle(mask: &BinaryMask) -> Vec<BTreeSet<usize>> {
    let (w, h) = mask.dimensions();
    let mut parent: Vec<usize> = (0..w * h).collect();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) {
                continue;
            }
            for (nx, ny) in [
                (x + 1, y),
                (x, y + 1),
                (x + 1, y + 1),
                (x.wrapping_sub(1), y + 1),
            ] {
                if nx < w && ny < h && mask.get(nx, ny) {
                    let (a, b) = (find(&mut parent, y * w + x), find(&mut parent, ny * w + nx));
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for i in 0..w * h {
        if mask.bits()[i] {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().insert(i);
        }
    }
    // Roots are each set's minimum index, so BTreeMap order is first-encounter order.
    groups.into_values().collect()
}

/// Largest set of the oracle partition; ties go to the set whose first
/// pixel comes first in row-major order.
pub fn largest_oracle(mask: &BinaryMask) -> BTreeSet<usize> {
    let mut best = BTreeSet::new();
    for set in component_oracle(mask) {
        if set.len() > best.len() {
            best = set;
        }
    }
    best
}

pub fn mask_to_set(mask: &BinaryMask) -> BTreeSet<usize> {
    mask.bits()
        .iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i)
        .collect()
}

/// Count of true cells in the 3x3 block centered on `(x, y)`; out-of-frame
/// cells are false.
pub fn block_count(mask: &BinaryMask, x: usize, y: usize) -> usize {
    let mut n = 0;
    for yy in y.saturating_sub(1)..=(y + 1).min(mask.height() - 1) {
        for xx in x.saturating_sub(1)..=(x + 1).min(mask.width() - 1) {
            n += usize::from(mask.get(xx, yy));
        }
    }
    n
}

/// 9-cell majority per pixel.
pub fn majority_oracle(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dimensions();
    let bits = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| block_count(mask, x, y) >= 5)
        .collect();
    BinaryMask::new(w, h, bits).unwrap()
}

/// Flip a pixel when at least 6 of its 8 neighbors disagree with it.
pub fn denoise_oracle(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dimensions();
    let mut out = mask.clone();
    for y in 0..h {
        for x in 0..w {
            let here = mask.get(x, y);
            let same_in_block = if here {
                block_count(mask, x, y)
            } else {
                9 - block_count(mask, x, y)
            };
            let disagree = 9 - same_in_block;
            if disagree >= 6 {
                out.set(x, y, !here);
            }
        }
    }
    out
}

/// Straight-loop forward pass: normalize, tanh hidden layer, linear output,
/// softmax without max subtraction.
pub fn forward_oracle(model: &MlpModel, x: &FeatureVector) -> [f64; 3] {
    let raw = x.to_array();
    let norm = model.normalization();
    let mut xn = [0.0; 9];
    for i in 0..9 {
        xn[i] = (raw[i] - norm.shift[i]) / norm.scale[i];
    }
    let mut q = model.b2();
    for j in 0..model.hidden_count() {
        let mut a = model.b1()[j];
        for i in 0..9 {
            a += model.w1()[j][i] * xn[i];
        }
        let hj = a.tanh();
        for k in 0..3 {
            q[k] += model.w2()[j][k] * hj;
        }
    }
    let e = [q[0].exp(), q[1].exp(), q[2].exp()];
    let s = e[0] + e[1] + e[2];
    [e[0] / s, e[1] / s, e[2] / s]
}

/// Mean cross-entropy computed through the oracle forward pass.
pub fn loss_oracle(model: &MlpModel, data: &TrainingSet) -> f64 {
    let total: f64 = data
        .examples()
        .iter()
        .map(|(x, t)| -forward_oracle(model, x)[t.index()].ln())
        .sum();
    total / data.len() as f64
}

/// Central finite differences of the oracle loss for every parameter.
pub fn finite_difference_gradient(model: &MlpModel, data: &TrainingSet, eps: f64) -> Vec<f64> {
    let base = model.params();
    let mut probe = model.clone();
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] = base[i] + eps;
            probe.set_params(&p);
            let up = loss_oracle(&probe, data);
            p[i] = base[i] - eps;
            probe.set_params(&p);
            let down = loss_oracle(&probe, data);
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Base color of each class in the separable fixture: a warm bright image,
/// a dim brownish one, and a cool blue one.
pub const CLASS_COLORS: [(ColorSpaceId, Rgb); 3] = [
    (ColorSpaceId::Rgb, [205, 150, 120]),
    (ColorSpaceId::Hsv, [70, 45, 35]),
    (ColorSpaceId::Ycbcr, [110, 150, 215]),
];

/// 16x16 image of the class color with seeded per-pixel jitter of +-12.
pub fn class_image(class: usize, index: usize) -> ImageBuffer {
    let base = CLASS_COLORS[class].1;
    let mut rng = ChaCha8Rng::seed_from_u64((class as u64) << 32 | index as u64);
    let pixels = (0..256)
        .map(|_| base.map(|c| (i32::from(c) + rng.gen_range(-12..=12)).clamp(0, 255) as u8))
        .collect();
    ImageBuffer::new(16, 16, pixels).unwrap()
}

/// 30 labeled examples, 10 per class, in well-separated feature clusters.
pub fn separable_examples() -> Vec<(ImageBuffer, ColorSpaceId)> {
    (0..3)
        .flat_map(|c| (0..10).map(move |i| (class_image(c, i), CLASS_COLORS[c].0)))
        .collect()
}

pub fn separable_training_set() -> TrainingSet {
    TrainingSet::new(
        separable_examples()
            .iter()
            .map(|(img, c)| (feature_vector(img), *c))
            .collect(),
    )
    .unwrap()
}

pub fn random_features(rng: &mut ChaCha8Rng) -> FeatureVector {
    FeatureVector::from_array(std::array::from_fn(|i| {
        if i < 3 {
            rng.gen_range(0.0..1.0)
        } else {
            rng.gen_range(0.0..255.0)
        }
    }))
}
