//! Square fold geometry and the RGB / Gray line-strip codecs.
//!
//! A segment becomes a strip image first: one row per cluster (RGB) or one
//! row per channel (Gray), `l_eff` pixels wide. The strip is then cut into
//! `w`-wide blocks which are stacked top to bottom ("band fold"). Each block
//! keeps all strip rows together, so the result is square exactly when
//! `w mod strip_rows == 0` and `strip_rows * l_eff == w * w`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{ImageRaster, RasterError};
use crate::series::NormalizedSegment;

#[derive(Debug, Error)]
pub enum FoldError {
    #[error("need at least {rows} samples for {rows} strip rows, got {len}")]
    TooShort { rows: usize, len: usize },
    #[error("no fold width >= {rows} is a multiple of {rows} for length {len}")]
    NoWidth { rows: usize, len: usize },
    #[error("strip_rows must be at least 1")]
    ZeroRows,
    #[error("geometry mismatch: {0}")]
    Geometry(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FoldMode {
    #[serde(rename = "RGB")]
    Rgb,
    Gray,
}

/// Solved square-fold geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    /// Side `w` of the square image.
    pub width: usize,
    /// Samples per channel after resampling, `w^2 / strip_rows`.
    pub effective_len: usize,
    /// Cluster count for RGB, channel count for Gray.
    pub strip_rows: usize,
    pub mode: FoldMode,
}

impl FoldPlan {
    pub fn pixel_count(&self) -> usize {
        self.width * self.width
    }

    /// Number of `w`-wide blocks the strip is cut into.
    pub fn bands(&self) -> usize {
        self.effective_len / self.width
    }
}

/// Largest `w <= floor(sqrt(rows * len))` with `w` a positive multiple of `rows`.
pub fn plan_fold(strip_rows: usize, raw_len: usize, mode: FoldMode) -> Result<FoldPlan, FoldError> {
    if strip_rows == 0 {
        return Err(FoldError::ZeroRows);
    }
    if raw_len < strip_rows {
        return Err(FoldError::TooShort {
            rows: strip_rows,
            len: raw_len,
        });
    }
    let root = ((strip_rows * raw_len) as u64).isqrt() as usize;
    // Largest multiple of strip_rows not above root; same result as stepping down by one.
    let width = root - root % strip_rows;
    if width < strip_rows {
        return Err(FoldError::NoWidth {
            rows: strip_rows,
            len: raw_len,
        });
    }
    Ok(FoldPlan {
        width,
        effective_len: width * width / strip_rows,
        strip_rows,
        mode,
    })
}

fn check_segment(segment: &NormalizedSegment, plan: &FoldPlan, rows: usize) -> Result<(), FoldError> {
    if rows != plan.strip_rows {
        return Err(FoldError::Geometry(format!(
            "segment has {rows} strip rows, plan expects {}",
            plan.strip_rows
        )));
    }
    if segment.len() != plan.effective_len {
        return Err(FoldError::Geometry(format!(
            "channel length {} != effective length {}",
            segment.len(),
            plan.effective_len
        )));
    }
    Ok(())
}

/// One strip row per cluster; channels 0, 1, 2 go to R, G, B and missing
/// channels stay zero.
pub fn encode_rgb_strip(segment: &NormalizedSegment, plan: &FoldPlan) -> Result<ImageRaster, FoldError> {
    if plan.mode != FoldMode::Rgb {
        return Err(FoldError::Geometry("RGB strip needs an RGB plan".into()));
    }
    check_segment(segment, plan, segment.cluster_count())?;
    let len = plan.effective_len;
    let mut strip = ImageRaster::zeros(len, plan.strip_rows, 3)?;
    for (row, chans) in segment.clusters().iter().enumerate() {
        for (c, values) in chans.iter().enumerate() {
            for (x, &v) in values.iter().enumerate() {
                strip.set(x, row, c, v);
            }
        }
    }
    Ok(strip)
}

/// One strip row per channel, clusters flattened in order.
pub fn encode_gray_strip(segment: &NormalizedSegment, plan: &FoldPlan) -> Result<ImageRaster, FoldError> {
    if plan.mode != FoldMode::Gray {
        return Err(FoldError::Geometry("Gray strip needs a Gray plan".into()));
    }
    check_segment(segment, plan, segment.channel_count())?;
    let data: Vec<f64> = segment.channels().flatten().copied().collect();
    Ok(ImageRaster::new(plan.effective_len, plan.strip_rows, 1, data)?)
}

fn check_strip(strip: &ImageRaster, plan: &FoldPlan) -> Result<(), FoldError> {
    if strip.width() != plan.effective_len
        || strip.height() != plan.strip_rows
        || plan.effective_len * plan.strip_rows != plan.pixel_count()
        || !plan.width.is_multiple_of(plan.strip_rows)
    {
        return Err(FoldError::Geometry(format!(
            "strip {}x{} does not fit plan {:?}",
            strip.width(),
            strip.height(),
            plan
        )));
    }
    Ok(())
}

/// Cuts the strip into `w`-wide blocks and stacks them vertically.
pub fn fold_strip(strip: &ImageRaster, plan: &FoldPlan) -> Result<ImageRaster, FoldError> {
    check_strip(strip, plan)?;
    let w = plan.width;
    let rows = plan.strip_rows;
    let ch = strip.channels();
    let mut data = Vec::with_capacity(w * w * ch);
    for band in 0..plan.bands() {
        for r in 0..rows {
            let start = (r * plan.effective_len + band * w) * ch;
            data.extend_from_slice(&strip.data()[start..start + w * ch]);
        }
    }
    Ok(ImageRaster::new(w, w, ch, data)?)
}

/// Inverse of [`fold_strip`].
pub fn unfold_image(square: &ImageRaster, plan: &FoldPlan) -> Result<ImageRaster, FoldError> {
    let w = plan.width;
    if square.width() != w || square.height() != w {
        return Err(FoldError::Geometry(format!(
            "image {}x{} is not {w}x{w}",
            square.width(),
            square.height()
        )));
    }
    let rows = plan.strip_rows;
    let ch = square.channels();
    let mut data = vec![0.0; plan.effective_len * rows * ch];
    for band in 0..plan.bands() {
        for r in 0..rows {
            let src = ((band * rows + r) * w) * ch;
            let dst = (r * plan.effective_len + band * w) * ch;
            data[dst..dst + w * ch].copy_from_slice(&square.data()[src..src + w * ch]);
        }
    }
    let strip = ImageRaster::new(plan.effective_len, rows, ch, data)?;
    check_strip(&strip, plan)?;
    Ok(strip)
}
