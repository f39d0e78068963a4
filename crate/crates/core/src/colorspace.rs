//! RGB to HSV / YCbCr conversion and the per-image feature vector.
//!
//! HSV uses the hexcone model on channels scaled to `[0, 1]`, with hue
//! expressed as a fraction of a full turn. YCbCr is full-range BT.601 with
//! chroma centered on 128. Both results stay as `f64`; nothing is rounded.

use serde::{Deserialize, Serialize};

use crate::imaging::{ImageBuffer, Rgb};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hsv {
    /// Hue as a fraction of a turn, in `[0, 1)`.
    pub h: f64,
    pub s: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ycbcr {
    pub y: f64,
    pub cb: f64,
    pub cr: f64,
}

/// Hexcone conversion. Achromatic pixels get hue 0, black gets saturation 0.
pub fn rgb_to_hsv(rgb: Rgb) -> Hsv {
    let [r, g, b] = rgb.map(i32::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;

    let h = if delta == 0 {
        0.0
    } else {
        let d = f64::from(delta);
        let sector = if max == r {
            f64::from(g - b) / d
        } else if max == g {
            f64::from(b - r) / d + 2.0
        } else {
            f64::from(r - g) / d + 4.0
        };
        let h = sector.rem_euclid(6.0) / 6.0;
        if h >= 1.0 {
            0.0
        } else {
            h
        }
    };
    let s = if max == 0 {
        0.0
    } else {
        f64::from(delta) / f64::from(max)
    };
    Hsv {
        h,
        s,
        v: f64::from(max) / 255.0,
    }
}

/// Inverse hexcone; returns channels on the `[0, 255]` scale, unrounded.
pub fn hsv_to_rgb(hsv: Hsv) -> [f64; 3] {
    let Hsv { h, s, v } = hsv;
    let sector = (h.rem_euclid(1.0)) * 6.0;
    let chroma = v * s;
    let x = chroma * (1.0 - ((sector % 2.0) - 1.0).abs());
    let (r, g, b) = match sector as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = v - chroma;
    [(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0]
}

/// Full-range ITU-R BT.601, each component clamped to `[0, 255]`.
pub fn rgb_to_ycbcr(rgb: Rgb) -> Ycbcr {
    let [r, g, b] = rgb.map(f64::from);
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    Ycbcr {
        y: y.clamp(0.0, 255.0),
        cb: cb.clamp(0.0, 255.0),
        cr: cr.clamp(0.0, 255.0),
    }
}

/// The nine per-image channel means that drive the color-space selector.
///
/// Field order is fixed (H, S, V, Y, Cb, Cr, R, G, B) and is also the
/// serialization order and the network's input order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mean_h: f64,
    pub mean_s: f64,
    pub mean_v: f64,
    pub mean_y: f64,
    pub mean_cb: f64,
    pub mean_cr: f64,
    pub mean_r: f64,
    pub mean_g: f64,
    pub mean_b: f64,
}

impl FeatureVector {
    pub const LEN: usize = 9;
    pub const NAMES: [&'static str; 9] = [
        "mean_h", "mean_s", "mean_v", "mean_y", "mean_cb", "mean_cr", "mean_r", "mean_g", "mean_b",
    ];

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.mean_h,
            self.mean_s,
            self.mean_v,
            self.mean_y,
            self.mean_cb,
            self.mean_cr,
            self.mean_r,
            self.mean_g,
            self.mean_b,
        ]
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        Self {
            mean_h: a[0],
            mean_s: a[1],
            mean_v: a[2],
            mean_y: a[3],
            mean_cb: a[4],
            mean_cr: a[5],
            mean_r: a[6],
            mean_g: a[7],
            mean_b: a[8],
        }
    }
}

/// Neumaier-compensated running sum; order is fixed so results reproduce
/// bit-for-bit.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.compensation
    }
}

/// Arithmetic mean of every channel over all pixels of `image`.
pub fn feature_vector(image: &ImageBuffer) -> FeatureVector {
    let mut rgb_sums = [0u64; 3];
    let mut derived = [CompensatedSum::default(); 6];
    for &px in image.pixels() {
        for (sum, &c) in rgb_sums.iter_mut().zip(&px) {
            *sum += u64::from(c);
        }
        let hsv = rgb_to_hsv(px);
        let ycc = rgb_to_ycbcr(px);
        for (acc, x) in derived
            .iter_mut()
            .zip([hsv.h, hsv.s, hsv.v, ycc.y, ycc.cb, ycc.cr])
        {
            acc.add(x);
        }
    }
    // ImageBuffer is never empty.
    let n = image.pixels().len() as f64;
    let d = derived.map(|s| s.total() / n);
    let [r, g, b] = rgb_sums.map(|s| s as f64 / n);
    FeatureVector::from_array([d[0], d[1], d[2], d[3], d[4], d[5], r, g, b])
}
