//! Transform-domain codings.
//!
//! Transform-then-RGB (`FFT_RGB`, `WT_RGB`) replaces every channel by a 1-D
//! transform before folding. RGB-then-transform (`RGB_FFT`, `RGB_WT`,
//! `RGB_Radon`) folds first and transforms the resulting image.

mod dft;
mod dwt;
mod image2d;
mod radon;

pub use dft::{dft, dft_magnitude_centered, fft2_magnitude_centered, fft_shift, SpectrumSeries};
pub use dwt::{
    analyze_once, db3_highpass, db3_lowpass, dwt_decompose, dwt_reconstruct, synthesize_once,
    WaveletCoeffs,
};
pub use image2d::{dwt2_image, dwt2_subbands, fft2_magnitude_image, radon_image, Subbands};
pub use radon::{radon_sinogram, rho_bins_for, Sinogram};

use thiserror::Error;

use crate::codec::{fold_segment, CodecError, CodecSpec, CodingMethod, Encoded};
use crate::fold::FoldMode;
use crate::raster::{resize_image, RasterError};
use crate::series::{resample_values, NormalizedSegment};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("transform needs at least {min} samples, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("wavelet level {level} does not divide a signal of length {len}")]
    WaveletLevel { level: usize, len: usize },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("bad parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Wavelet coefficients `[a_J, d_J, ..., d_1]` of a channel, first resampled
/// down to the nearest multiple of `2^level` when needed.
pub fn wavelet_representation(channel: &[f64], level: usize) -> Result<Vec<f64>, CodecError> {
    let block = 1usize
        .checked_shl(level as u32)
        .filter(|&b| b > 0 && b <= channel.len())
        .ok_or(TransformError::WaveletLevel {
            level,
            len: channel.len(),
        })?;
    let target = channel.len() - channel.len() % block;
    let coeffs = if target == channel.len() {
        dwt_decompose(channel, level)?
    } else {
        dwt_decompose(&resample_values(channel, target)?, level)?
    };
    Ok(coeffs.concatenated())
}

/// Transform each channel, re-normalize, then RGB-fold and resize.
pub fn encode_tf_rgb(segment: &NormalizedSegment, spec: &CodecSpec) -> Result<Encoded, CodecError> {
    let transformed = match spec.method {
        CodingMethod::FftRgb => segment.map_channels(|ch| {
            Ok::<_, CodecError>(dft_magnitude_centered(ch)?.into_magnitudes())
        })?,
        CodingMethod::WtRgb => {
            segment.map_channels(|ch| wavelet_representation(ch, spec.wavelet_level))?
        }
        other => {
            return Err(CodecError::Spec(format!(
                "{other} is not a transform-then-RGB method"
            )))
        }
    };
    let folded = fold_segment(&transformed, FoldMode::Rgb)?;
    Ok(Encoded {
        image: resize_image(&folded.image, spec.target_size)?,
        plan: folded.plan,
    })
}

/// RGB-fold, apply the 2-D transform, then resize.
pub fn encode_rgb_tf(segment: &NormalizedSegment, spec: &CodecSpec) -> Result<Encoded, CodecError> {
    let base = fold_segment(segment, FoldMode::Rgb)?;
    let image = match spec.method {
        CodingMethod::RgbFft => fft2_magnitude_image(&base.image)?,
        CodingMethod::RgbWt => {
            let w = base.image.width();
            // The one-level 2-D wavelet needs an even side.
            if w % 2 == 1 {
                dwt2_image(&resize_image(&base.image, w + 1)?)?
            } else {
                dwt2_image(&base.image)?
            }
        }
        CodingMethod::RgbRadon => radon_image(&base.image, spec.radon_angles)?,
        other => {
            return Err(CodecError::Spec(format!(
                "{other} is not an RGB-then-transform method"
            )))
        }
    };
    Ok(Encoded {
        image: resize_image(&image, spec.target_size)?,
        plan: base.plan,
    })
}
