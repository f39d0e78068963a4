//! Per-color-space range test that marks pixels as skin.
//!
//! Each color space has a box of inclusive channel ranges. A pixel is skin
//! when every constrained channel of its representation in that space falls
//! inside the box. The YCbCr box constrains only chroma; luma is free.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorspace::{rgb_to_hsv, rgb_to_ycbcr, Hsv, Ycbcr};
use crate::imaging::{BinaryMask, ImageBuffer, Rgb};

/// One of the three color spaces the switcher chooses between.
///
/// The discriminant is the class index used by the network and by every
/// tie-break: RGB < HSV < YCbCr.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ColorSpaceId {
    #[serde(rename = "RGB")]
    Rgb = 0,
    #[serde(rename = "HSV")]
    Hsv = 1,
    #[serde(rename = "YCbCr")]
    Ycbcr = 2,
}

impl ColorSpaceId {
    pub const ALL: [ColorSpaceId; 3] = [ColorSpaceId::Rgb, ColorSpaceId::Hsv, ColorSpaceId::Ycbcr];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorSpaceId::Rgb => "RGB",
            ColorSpaceId::Hsv => "HSV",
            ColorSpaceId::Ycbcr => "YCbCr",
        }
    }
}

impl fmt::Display for ColorSpaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown color space {0:?} (expected RGB, HSV or YCbCr)")]
pub struct UnknownColorSpace(pub String);

impl FromStr for ColorSpaceId {
    type Err = UnknownColorSpace;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rgb" => Ok(ColorSpaceId::Rgb),
            "hsv" => Ok(ColorSpaceId::Hsv),
            "ycbcr" => Ok(ColorSpaceId::Ycbcr),
            _ => Err(UnknownColorSpace(s.to_string())),
        }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRange {
    lo: f64,
    hi: f64,
}

impl ChannelRange {
    /// Builds the range, swapping the bounds if they arrive out of order.
    pub fn new(lo: f64, hi: f64) -> Self {
        if lo > hi {
            log::warn!("channel range given as [{lo}, {hi}]; using [{hi}, {lo}]");
            Self { lo: hi, hi: lo }
        } else {
            Self { lo, hi }
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RgbRanges {
    pub r: ChannelRange,
    pub g: ChannelRange,
    pub b: ChannelRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsvRanges {
    pub h: ChannelRange,
    pub s: ChannelRange,
    pub v: ChannelRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YcbcrRanges {
    pub cb: ChannelRange,
    pub cr: ChannelRange,
}

/// How to read the published value bound "0.38 – 0.112", whose lower end
/// exceeds its upper end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ValueRangeReading {
    /// `[0.38, 1.0]`: the upper bound is taken as a clipped 1.12.
    #[default]
    Clipped,
    /// `[0.112, 0.38]`: the two printed numbers with their order swapped.
    Swapped,
}

impl ValueRangeReading {
    pub fn range(self) -> ChannelRange {
        match self {
            ValueRangeReading::Clipped => ChannelRange::new(0.38, 1.0),
            ValueRangeReading::Swapped => ChannelRange::new(0.112, 0.38),
        }
    }
}

impl FromStr for ValueRangeReading {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clipped" => Ok(Self::Clipped),
            "swapped" => Ok(Self::Swapped),
            _ => Err(format!(
                "unknown value-range reading {s:?} (expected clipped or swapped)"
            )),
        }
    }
}

/// Skin ranges for all three color spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkinRangeFilter {
    pub rgb: RgbRanges,
    pub hsv: HsvRanges,
    pub ycbcr: YcbcrRanges,
}

impl Default for SkinRangeFilter {
    fn default() -> Self {
        Self::with_value_reading(ValueRangeReading::default())
    }
}

impl SkinRangeFilter {
    /// The published ranges, with the HSV value bound read as requested.
    pub fn with_value_reading(reading: ValueRangeReading) -> Self {
        Self {
            rgb: RgbRanges {
                r: ChannelRange::new(95.0, 255.0),
                g: ChannelRange::new(40.0, 255.0),
                b: ChannelRange::new(20.0, 255.0),
            },
            hsv: HsvRanges {
                h: ChannelRange::new(0.04, 0.0882),
                s: ChannelRange::new(0.11, 0.68),
                v: reading.range(),
            },
            ycbcr: YcbcrRanges {
                cb: ChannelRange::new(100.0, 125.0),
                cr: ChannelRange::new(135.0, 170.0),
            },
        }
    }

    /// Ranges of the constrained channels of `space`, in channel order.
    pub fn channel_ranges(&self, space: ColorSpaceId) -> Vec<ChannelRange> {
        match space {
            ColorSpaceId::Rgb => vec![self.rgb.r, self.rgb.g, self.rgb.b],
            ColorSpaceId::Hsv => vec![self.hsv.h, self.hsv.s, self.hsv.v],
            ColorSpaceId::Ycbcr => vec![self.ycbcr.cb, self.ycbcr.cr],
        }
    }

    /// # Panics
    ///
    /// Panics if `ranges` does not hold one range per constrained channel.
    pub fn set_channel_ranges(&mut self, space: ColorSpaceId, ranges: &[ChannelRange]) {
        match (space, ranges) {
            (ColorSpaceId::Rgb, &[r, g, b]) => self.rgb = RgbRanges { r, g, b },
            (ColorSpaceId::Hsv, &[h, s, v]) => self.hsv = HsvRanges { h, s, v },
            (ColorSpaceId::Ycbcr, &[cb, cr]) => self.ycbcr = YcbcrRanges { cb, cr },
            _ => panic!(
                "{space} takes {} ranges, got {}",
                channel_count(space),
                ranges.len()
            ),
        }
    }

    /// Parses a `space.channel.lo = value` config on top of the defaults.
    /// Blank lines and `#` comments are ignored; unknown keys are errors.
    pub fn from_config_str(text: &str) -> Result<Self, ConfigError> {
        Self::from_entries(&parse_key_values(text)?)
    }

    /// Applies filter entries on top of the defaults.
    ///
    /// `hsv.v.reading` is applied first, then explicit bounds. Each range is
    /// normalized only once all of its overrides are in.
    pub fn from_entries(entries: &[ConfigEntry]) -> Result<Self, ConfigError> {
        let mut reading = ValueRangeReading::default();
        for e in entries.iter().filter(|e| e.key == "hsv.v.reading") {
            reading = e.value.parse().map_err(|reason| ConfigError::BadValue {
                line: e.line,
                key: e.key.clone(),
                reason,
            })?;
        }
        let base = Self::with_value_reading(reading);
        let mut bounds: Vec<[f64; 2]> = ColorSpaceId::ALL
            .iter()
            .flat_map(|&s| base.channel_ranges(s))
            .map(|r| [r.lo, r.hi])
            .collect();

        for e in entries.iter().filter(|e| e.key != "hsv.v.reading") {
            let (slot, end) = filter_key_slot(&e.key).ok_or_else(|| ConfigError::UnknownKey {
                line: e.line,
                key: e.key.clone(),
            })?;
            let value: f64 = e.value.parse().map_err(|_| ConfigError::BadValue {
                line: e.line,
                key: e.key.clone(),
                reason: format!("{:?} is not a number", e.value),
            })?;
            if !value.is_finite() {
                return Err(ConfigError::BadValue {
                    line: e.line,
                    key: e.key.clone(),
                    reason: "bound must be finite".into(),
                });
            }
            bounds[slot][end] = value;
        }

        let mut filter = base;
        let mut it = bounds.into_iter().map(|[lo, hi]| ChannelRange::new(lo, hi));
        for space in ColorSpaceId::ALL {
            let ranges: Vec<_> = it.by_ref().take(channel_count(space)).collect();
            filter.set_channel_ranges(space, &ranges);
        }
        Ok(filter)
    }
}

const CHANNEL_NAMES: [(ColorSpaceId, &str, &[&str]); 3] = [
    (ColorSpaceId::Rgb, "rgb", &["r", "g", "b"]),
    (ColorSpaceId::Hsv, "hsv", &["h", "s", "v"]),
    (ColorSpaceId::Ycbcr, "ycbcr", &["cb", "cr"]),
];

fn channel_count(space: ColorSpaceId) -> usize {
    CHANNEL_NAMES[space.index()].2.len()
}

/// Maps `rgb.g.hi` to (flat channel slot, 0 for lo / 1 for hi).
fn filter_key_slot(key: &str) -> Option<(usize, usize)> {
    let mut parts = key.split('.');
    let (space, channel, end) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() {
        return None;
    }
    let end = match end {
        "lo" => 0,
        "hi" => 1,
        _ => return None,
    };
    let mut slot = 0;
    for (_, name, channels) in CHANNEL_NAMES {
        if name == space {
            return channels
                .iter()
                .position(|&c| c == channel)
                .map(|i| (slot + i, end));
        }
        slot += channels.len();
    }
    None
}

/// True for keys understood by [`SkinRangeFilter::from_entries`].
pub fn is_filter_key(key: &str) -> bool {
    key == "hsv.v.reading" || filter_key_slot(key).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigEntry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
}

/// Splits a plain-text `key = value` file into entries (1-based line numbers).
pub fn parse_key_values(text: &str) -> Result<Vec<ConfigEntry>, ConfigError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            });
        }
        entries.push(ConfigEntry {
            line: i + 1,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(entries)
}

/// A pixel expressed in one of the three color spaces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpacePixel {
    Rgb(Rgb),
    Hsv(Hsv),
    Ycbcr(Ycbcr),
}

impl SpacePixel {
    pub fn from_rgb(space: ColorSpaceId, rgb: Rgb) -> Self {
        match space {
            ColorSpaceId::Rgb => SpacePixel::Rgb(rgb),
            ColorSpaceId::Hsv => SpacePixel::Hsv(rgb_to_hsv(rgb)),
            ColorSpaceId::Ycbcr => SpacePixel::Ycbcr(rgb_to_ycbcr(rgb)),
        }
    }

    pub fn space(&self) -> ColorSpaceId {
        match self {
            SpacePixel::Rgb(_) => ColorSpaceId::Rgb,
            SpacePixel::Hsv(_) => ColorSpaceId::Hsv,
            SpacePixel::Ycbcr(_) => ColorSpaceId::Ycbcr,
        }
    }

    /// Values of the channels the filter constrains, in channel order.
    pub fn constrained_channels(&self) -> Vec<f64> {
        match *self {
            SpacePixel::Rgb(p) => p.iter().map(|&c| f64::from(c)).collect(),
            SpacePixel::Hsv(p) => vec![p.h, p.s, p.v],
            SpacePixel::Ycbcr(p) => vec![p.cb, p.cr],
        }
    }
}

/// Whether every constrained channel lies inside its (inclusive) range.
pub fn classify_pixel(pixel: &SpacePixel, filter: &SkinRangeFilter) -> bool {
    match *pixel {
        SpacePixel::Rgb([r, g, b]) => {
            let f = &filter.rgb;
            f.r.contains(r.into()) && f.g.contains(g.into()) && f.b.contains(b.into())
        }
        SpacePixel::Hsv(p) => {
            let f = &filter.hsv;
            f.h.contains(p.h) && f.s.contains(p.s) && f.v.contains(p.v)
        }
        SpacePixel::Ycbcr(p) => filter.ycbcr.cb.contains(p.cb) && filter.ycbcr.cr.contains(p.cr),
    }
}

/// Classifies every pixel of `image` in `space`.
pub fn apply_filter(
    image: &ImageBuffer,
    space: ColorSpaceId,
    filter: &SkinRangeFilter,
) -> BinaryMask {
    let bits = image
        .pixels()
        .iter()
        .map(|&px| classify_pixel(&SpacePixel::from_rgb(space, px), filter))
        .collect();
    BinaryMask::new(image.width(), image.height(), bits).expect("dimensions come from an image")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalibrationError {
    #[error("calibration needs at least one skin and one non-skin sample")]
    SingleClass,
    #[error("sample {index} is a {found} pixel but calibration targets {expected}")]
    SpaceMismatch {
        index: usize,
        expected: ColorSpaceId,
        found: ColorSpaceId,
    },
}

/// F1 of `filter` as a skin detector over labeled samples; 0 when there are
/// no true positives.
pub fn f1_score(samples: &[(SpacePixel, bool)], filter: &SkinRangeFilter) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (px, label) in samples {
        match (classify_pixel(px, filter), *label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    f1_from_counts(tp, fp, fn_)
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}

/// Candidate positions for a bound of a channel in `space`.
fn bound_grid(space: ColorSpaceId) -> Vec<f64> {
    match space {
        // Hue, saturation and value live on [0, 1] with step 0.005.
        ColorSpaceId::Hsv => (0..=200).map(|k| f64::from(k) / 200.0).collect(),
        ColorSpaceId::Rgb | ColorSpaceId::Ycbcr => (0..=255).map(f64::from).collect(),
    }
}

/// Tunes the ranges of `space` to maximize F1 over `samples`.
///
/// Coordinate search: channels and bounds are visited in a fixed order (each
/// channel's lower bound, then its upper bound). For each bound every grid
/// position that keeps `lo <= hi` is tried, and the bound moves to the
/// position with the highest F1 if that beats the current F1; among equally
/// good positions the one nearest the current bound wins. Passes repeat until
/// a full pass moves nothing. Ranges of the other two spaces are untouched.
pub fn calibrate_ranges(
    samples: &[(SpacePixel, bool)],
    space: ColorSpaceId,
    initial: &SkinRangeFilter,
) -> Result<SkinRangeFilter, CalibrationError> {
    for (index, (px, _)) in samples.iter().enumerate() {
        if px.space() != space {
            return Err(CalibrationError::SpaceMismatch {
                index,
                expected: space,
                found: px.space(),
            });
        }
    }
    let positives = samples.iter().filter(|(_, l)| *l).count();
    if positives == 0 || positives == samples.len() {
        return Err(CalibrationError::SingleClass);
    }

    let values: Vec<Vec<f64>> = samples
        .iter()
        .map(|(p, _)| p.constrained_channels())
        .collect();
    let labels: Vec<bool> = samples.iter().map(|(_, l)| *l).collect();
    let mut ranges = initial.channel_ranges(space);
    let grid = bound_grid(space);

    let score = |ranges: &[ChannelRange]| {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (vals, &label) in values.iter().zip(&labels) {
            let pass = vals.iter().zip(ranges).all(|(&v, r)| r.contains(v));
            match (pass, label) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        f1_from_counts(tp, fp, fn_)
    };

    let mut best = score(&ranges);
    loop {
        let mut moved = false;
        for channel in 0..ranges.len() {
            // Samples that pass every other channel are the only ones this
            // channel's bounds can affect.
            let others: Vec<bool> = values
                .iter()
                .map(|vals| {
                    vals.iter()
                        .zip(&ranges)
                        .enumerate()
                        .all(|(c, (&v, r))| c == channel || r.contains(v))
                })
                .collect();
            for end in 0..2 {
                let current = ranges[channel];
                let incumbent = if end == 0 { current.lo } else { current.hi };
                let mut choice: Option<(f64, f64, f64)> = None; // (f1, distance, value)
                for &candidate in &grid {
                    let (lo, hi) = if end == 0 {
                        (candidate, current.hi)
                    } else {
                        (current.lo, candidate)
                    };
                    if lo > hi {
                        continue;
                    }
                    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
                    for ((vals, &label), &ok) in values.iter().zip(&labels).zip(&others) {
                        let v = vals[channel];
                        let pass = ok && lo <= v && v <= hi;
                        match (pass, label) {
                            (true, true) => tp += 1,
                            (true, false) => fp += 1,
                            (false, true) => fn_ += 1,
                            (false, false) => {}
                        }
                    }
                    let f1 = f1_from_counts(tp, fp, fn_);
                    let distance = (candidate - incumbent).abs();
                    let better = match choice {
                        None => true,
                        Some((bf, bd, _)) => f1 > bf || (f1 == bf && distance < bd),
                    };
                    if better {
                        choice = Some((f1, distance, candidate));
                    }
                }
                if let Some((f1, _, value)) = choice {
                    if f1 > best {
                        ranges[channel] = if end == 0 {
                            ChannelRange::new(value, current.hi)
                        } else {
                            ChannelRange::new(current.lo, value)
                        };
                        best = f1;
                        moved = true;
                    }
                }
            }
        }
        if !moved {
            break;
        }
    }
    debug_assert_eq!(best, score(&ranges));

    let mut out = *initial;
    out.set_channel_ranges(space, &ranges);
    Ok(out)
}
