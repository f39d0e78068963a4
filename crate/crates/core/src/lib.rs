//! Skin-pixel segmentation that copes with changing light by switching
//! between the RGB, HSV and YCbCr color spaces.
//!
//! Each color space has a box of skin ranges ([`skinfilter`]). The
//! per-space routine ([`switching::bayesian_routine`]) thresholds an image,
//! cleans the resulting mask ([`blobs::denoise`]) and keeps its largest
//! 8-connected blob. Three strategies decide which space to trust:
//!
//! * [`switching::algorithm1_ann_switch`] asks a small neural network
//!   ([`mlp`]) trained on per-image channel means
//!   ([`colorspace::feature_vector`]);
//! * [`switching::algorithm2_max_connected`] keeps the space with the biggest
//!   blob;
//! * [`switching::algorithm3_sigma_connect`] votes across all three.
//!
//! ```
//! use lumaswitch::imaging::ImageBuffer;
//! use lumaswitch::skinfilter::SkinRangeFilter;
//! use lumaswitch::switching::{algorithm2_max_connected, Choice};
//!
//! let mut img = ImageBuffer::filled(32, 32, [0, 0, 0]).unwrap();
//! img.fill_rect(8, 8, 10, 6, [180, 120, 100]);
//!
//! let result = algorithm2_max_connected(&img, &SkinRangeFilter::default());
//! assert_eq!(result.blob_size, 60);
//! assert_eq!(result.chosen.to_string(), "RGB");
//! # let _ = Choice::Combined;
//! ```
//!
//! The guide under `book/` walks through each stage; its code listings are
//! compiled and run as doc-tests of this crate.

pub mod blobs;
pub mod colorspace;
pub mod imaging;
pub mod mlp;
pub mod skinfilter;
pub mod switching;

pub use colorspace::FeatureVector;
pub use imaging::{BinaryMask, ImageBuffer};
pub use mlp::MlpModel;
pub use skinfilter::{ColorSpaceId, SkinRangeFilter};
pub use switching::{SegmentationResult, Strategy};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/images.md")]
    mod images {}
    #[doc = include_str!("../../../book/src/color-spaces.md")]
    mod color_spaces {}
    #[doc = include_str!("../../../book/src/skin-filter.md")]
    mod skin_filter {}
    #[doc = include_str!("../../../book/src/blobs.md")]
    mod blobs {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/switching.md")]
    mod switching {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
