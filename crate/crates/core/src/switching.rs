//! The per-space segmentation routine and the three strategies that decide
//! which color space (or which combination) produces the final mask.
//!
//! Every strategy ends in a mask holding a single 8-connected blob (or
//! nothing), plus that blob mapped back onto the input colors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::blobs::{denoise, largest_component};
use crate::colorspace::feature_vector;
use crate::imaging::{overlay, BinaryMask, ImageBuffer};
use crate::mlp::{predict_space, MlpModel};
use crate::skinfilter::{apply_filter, ColorSpaceId, SkinRangeFilter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Let the trained network pick the color space.
    Ann,
    /// Pick the color space whose largest blob is biggest.
    MaxConnected,
    /// Combine the largest blobs of all three color spaces.
    SigmaConnect,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Ann => "ann",
            Strategy::MaxConnected => "maxconnected",
            Strategy::SigmaConnect => "sigmaconnect",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = SwitchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ann" => Ok(Strategy::Ann),
            "maxconnected" => Ok(Strategy::MaxConnected),
            "sigmaconnect" => Ok(Strategy::SigmaConnect),
            _ => Err(SwitchError::UnknownStrategy(s.to_string())),
        }
    }
}

/// What a strategy settled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Space(ColorSpaceId),
    /// All three spaces contributed (SigmaConnect).
    Combined,
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Space(s) => s.fmt(f),
            Choice::Combined => f.write_str("Combined"),
        }
    }
}

impl Serialize for Choice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// How many of the three per-space blobs must cover a pixel for
/// SigmaConnect to keep it. 1 is a union, 3 an intersection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VoteThreshold(u8);

impl VoteThreshold {
    pub const UNION: VoteThreshold = VoteThreshold(1);

    pub fn new(votes: u8) -> Result<Self, SwitchError> {
        if (1..=3).contains(&votes) {
            Ok(Self(votes))
        } else {
            Err(SwitchError::VoteThreshold(votes.into()))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl Default for VoteThreshold {
    fn default() -> Self {
        Self::UNION
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SwitchError {
    #[error("unknown strategy {0:?} (expected ann, maxconnected or sigmaconnect)")]
    UnknownStrategy(String),
    #[error("vote threshold must be 1, 2 or 3, got {0}")]
    VoteThreshold(i64),
    #[error("the ann strategy needs a model")]
    MissingModel,
}

/// Everything the per-space routine produces for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianOutput {
    pub space: ColorSpaceId,
    /// Straight out of the range filter.
    pub raw: BinaryMask,
    pub denoised: BinaryMask,
    /// Largest blob of `denoised`.
    pub mask: BinaryMask,
    pub blob_size: usize,
    pub overlay: ImageBuffer,
}

/// Range filter, then denoise, then keep the largest blob, then map it back
/// onto the image.
pub fn bayesian_routine(
    image: &ImageBuffer,
    space: ColorSpaceId,
    filter: &SkinRangeFilter,
) -> BayesianOutput {
    let raw = apply_filter(image, space, filter);
    let denoised = denoise(&raw);
    let (mask, blob_size) = largest_component(&denoised);
    let overlay = overlay(image, &mask).expect("mask derived from image");
    BayesianOutput {
        space,
        raw,
        denoised,
        mask,
        blob_size,
        overlay,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentationResult {
    pub strategy: Strategy,
    pub chosen: Choice,
    /// Range-filter output of the chosen space (RGB for SigmaConnect).
    #[serde(skip)]
    pub raw_mask: BinaryMask,
    #[serde(skip)]
    pub mask: BinaryMask,
    pub blob_size: usize,
    #[serde(skip)]
    pub overlay: ImageBuffer,
    /// Largest-blob size per space, for the spaces the strategy ran.
    pub per_space_sizes: BTreeMap<ColorSpaceId, usize>,
}

fn single_space_result(
    strategy: Strategy,
    out: BayesianOutput,
    sizes: BTreeMap<ColorSpaceId, usize>,
) -> SegmentationResult {
    SegmentationResult {
        strategy,
        chosen: Choice::Space(out.space),
        raw_mask: out.raw,
        mask: out.mask,
        blob_size: out.blob_size,
        overlay: out.overlay,
        per_space_sizes: sizes,
    }
}

/// Predicts the best space from the image's feature vector and segments in
/// that space only.
pub fn algorithm1_ann_switch(
    image: &ImageBuffer,
    model: &MlpModel,
    filter: &SkinRangeFilter,
) -> SegmentationResult {
    let space = predict_space(model, &feature_vector(image));
    let out = bayesian_routine(image, space, filter);
    let sizes = BTreeMap::from([(space, out.blob_size)]);
    single_space_result(Strategy::Ann, out, sizes)
}

fn all_spaces(image: &ImageBuffer, filter: &SkinRangeFilter) -> Vec<BayesianOutput> {
    ColorSpaceId::ALL
        .iter()
        .map(|&s| bayesian_routine(image, s, filter))
        .collect()
}

/// Segments in all three spaces and keeps the space whose largest blob is
/// biggest, ties going to RGB, then HSV.
pub fn algorithm2_max_connected(
    image: &ImageBuffer,
    filter: &SkinRangeFilter,
) -> SegmentationResult {
    let outputs = all_spaces(image, filter);
    let sizes = outputs.iter().map(|o| (o.space, o.blob_size)).collect();
    let mut best = 0;
    for (i, o) in outputs.iter().enumerate() {
        if o.blob_size > outputs[best].blob_size {
            best = i;
        }
    }
    let out = outputs.into_iter().nth(best).expect("three outputs");
    single_space_result(Strategy::MaxConnected, out, sizes)
}

/// Per-pixel vote over the three largest-blob masks: a pixel is kept when
/// at least `votes` of them cover it.
pub fn combine_masks(masks: &[&BinaryMask], votes: VoteThreshold) -> BinaryMask {
    let first = masks.first().expect("at least one mask");
    let (w, h) = first.dimensions();
    let bits = (0..w * h)
        .map(|i| masks.iter().filter(|m| m.bits()[i]).count() >= usize::from(votes.get()))
        .collect();
    BinaryMask::new(w, h, bits).expect("same dimensions")
}

/// Adds up the three per-space largest blobs, binarizes with `votes`, and
/// keeps the largest blob of the result.
pub fn algorithm3_sigma_connect(
    image: &ImageBuffer,
    filter: &SkinRangeFilter,
    votes: VoteThreshold,
) -> SegmentationResult {
    let outputs = all_spaces(image, filter);
    let masks: Vec<&BinaryMask> = outputs.iter().map(|o| &o.mask).collect();
    let combined = combine_masks(&masks, votes);
    let (mask, blob_size) = largest_component(&combined);
    let overlay = overlay(image, &mask).expect("mask derived from image");
    let per_space_sizes = outputs.iter().map(|o| (o.space, o.blob_size)).collect();
    let raw_mask = outputs.into_iter().next().expect("three outputs").raw;
    SegmentationResult {
        strategy: Strategy::SigmaConnect,
        chosen: Choice::Combined,
        raw_mask,
        mask,
        blob_size,
        overlay,
        per_space_sizes,
    }
}

/// Runs `strategy`. The model is only consulted (and required) for
/// [`Strategy::Ann`]; `votes` only for [`Strategy::SigmaConnect`].
pub fn segment(
    image: &ImageBuffer,
    strategy: Strategy,
    filter: &SkinRangeFilter,
    model: Option<&MlpModel>,
    votes: VoteThreshold,
) -> Result<SegmentationResult, SwitchError> {
    Ok(match strategy {
        Strategy::Ann => {
            algorithm1_ann_switch(image, model.ok_or(SwitchError::MissingModel)?, filter)
        }
        Strategy::MaxConnected => algorithm2_max_connected(image, filter),
        Strategy::SigmaConnect => algorithm3_sigma_connect(image, filter, votes),
    })
}
