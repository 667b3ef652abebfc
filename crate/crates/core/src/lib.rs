//! Imaging codecs for multi-cluster, multi-channel time series and a compact
//! convolutional classifier for the resulting images.
//!
//! A segment holds one or more clusters of up to three synchronized
//! channels. Segments are min-max normalized ([`series`]), folded into
//! square images ([`fold`]), optionally transformed ([`transform`]), resized,
//! and classified ([`cnn`]). [`codec`] ties the steps together behind a
//! single [`CodecSpec`](codec::CodecSpec).

pub mod cnn;
pub mod codec;
pub mod fold;
pub mod raster;
pub mod series;
pub mod transform;

pub use codec::{encode_normalized, encode_segment, CodecError, CodecSpec, CodingMethod, Encoded};
pub use fold::{plan_fold, FoldMode, FoldPlan};
pub use raster::{resize_image, ImageRaster};
pub use series::{normalize_min_max, NormalizedSegment, SeriesSegment, StepSpec};
