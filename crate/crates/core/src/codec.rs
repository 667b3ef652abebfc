//! Coding method selection and the end-to-end segment encoder.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fold::{
    encode_gray_strip, encode_rgb_strip, fold_strip, plan_fold, FoldError, FoldMode, FoldPlan,
};
use crate::raster::{resize_image, ImageRaster, RasterError};
use crate::series::{normalize_min_max, step_difference, NormalizedSegment, SeriesError, SeriesSegment, StepSpec};
use crate::transform::{encode_rgb_tf, encode_tf_rgb, TransformError};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("invalid codec spec: {0}")]
    Spec(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CodingMethod {
    Gray,
    #[serde(rename = "RGB")]
    Rgb,
    GrayStep,
    #[serde(rename = "RGBStep")]
    RgbStep,
    #[serde(rename = "FFT_RGB")]
    FftRgb,
    #[serde(rename = "WT_RGB")]
    WtRgb,
    #[serde(rename = "RGB_FFT")]
    RgbFft,
    #[serde(rename = "RGB_WT")]
    RgbWt,
    #[serde(rename = "RGB_Radon")]
    RgbRadon,
}

impl CodingMethod {
    pub const ALL: [CodingMethod; 9] = [
        Self::Gray,
        Self::Rgb,
        Self::GrayStep,
        Self::RgbStep,
        Self::FftRgb,
        Self::WtRgb,
        Self::RgbFft,
        Self::RgbWt,
        Self::RgbRadon,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gray => "Gray",
            Self::Rgb => "RGB",
            Self::GrayStep => "GrayStep",
            Self::RgbStep => "RGBStep",
            Self::FftRgb => "FFT_RGB",
            Self::WtRgb => "WT_RGB",
            Self::RgbFft => "RGB_FFT",
            Self::RgbWt => "RGB_WT",
            Self::RgbRadon => "RGB_Radon",
        }
    }

    /// Output channel count.
    pub fn channels(self) -> usize {
        match self {
            Self::Gray | Self::GrayStep => 1,
            _ => 3,
        }
    }

    pub fn is_step(self) -> bool {
        matches!(self, Self::GrayStep | Self::RgbStep)
    }
}

impl fmt::Display for CodingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodingMethod {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CodecError::Spec(format!("unknown coding method {s:?}")))
    }
}

fn default_wavelet_level() -> usize {
    3
}

fn default_radon_angles() -> usize {
    180
}

/// Everything needed to turn one segment into one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecSpec {
    pub method: CodingMethod,
    /// Differential step, required by the step codings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepSpec>,
    #[serde(default = "default_wavelet_level")]
    pub wavelet_level: usize,
    #[serde(default = "default_radon_angles")]
    pub radon_angles: usize,
    pub target_size: usize,
}

impl CodecSpec {
    pub fn new(method: CodingMethod, target_size: usize) -> Self {
        Self {
            method,
            step: method.is_step().then(|| StepSpec::new(1).expect("1 is a valid step")),
            wavelet_level: default_wavelet_level(),
            radon_angles: default_radon_angles(),
            target_size,
        }
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if self.target_size < 8 {
            return Err(CodecError::Spec(format!(
                "target_size must be at least 8, got {}",
                self.target_size
            )));
        }
        if self.method.is_step() && self.step.is_none() {
            return Err(CodecError::Spec(format!("{} needs a step", self.method)));
        }
        if self.method == CodingMethod::WtRgb && self.wavelet_level == 0 {
            return Err(CodecError::Spec("wavelet_level must be at least 1".into()));
        }
        if self.method == CodingMethod::RgbRadon && self.radon_angles < 2 {
            return Err(CodecError::Spec("radon_angles must be at least 2".into()));
        }
        Ok(())
    }
}

/// An encoded image together with the fold geometry that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub image: ImageRaster,
    pub plan: FoldPlan,
}

/// Resample to the plan's effective length, build the strip and fold it.
pub fn fold_segment(segment: &NormalizedSegment, mode: FoldMode) -> Result<Encoded, CodecError> {
    let rows = match mode {
        FoldMode::Rgb => segment.cluster_count(),
        FoldMode::Gray => segment.channel_count(),
    };
    let plan = plan_fold(rows, segment.len(), mode)?;
    let resampled = segment.resampled(plan.effective_len)?;
    let strip = match mode {
        FoldMode::Rgb => encode_rgb_strip(&resampled, &plan)?,
        FoldMode::Gray => encode_gray_strip(&resampled, &plan)?,
    };
    Ok(Encoded {
        image: fold_strip(&strip, &plan)?,
        plan,
    })
}

/// Encodes an already-normalized segment with any coding method.
pub fn encode_normalized(segment: &NormalizedSegment, spec: &CodecSpec) -> Result<Encoded, CodecError> {
    spec.validate()?;
    match spec.method {
        CodingMethod::Gray | CodingMethod::Rgb | CodingMethod::GrayStep | CodingMethod::RgbStep => {
            let mode = if spec.method.channels() == 1 {
                FoldMode::Gray
            } else {
                FoldMode::Rgb
            };
            let stepped;
            let source = match spec.step.filter(|_| spec.method.is_step()) {
                Some(step) => {
                    stepped = step_difference(segment, step)?;
                    &stepped
                }
                None => segment,
            };
            let folded = fold_segment(source, mode)?;
            Ok(Encoded {
                image: resize_image(&folded.image, spec.target_size)?,
                plan: folded.plan,
            })
        }
        CodingMethod::FftRgb | CodingMethod::WtRgb => encode_tf_rgb(segment, spec),
        CodingMethod::RgbFft | CodingMethod::RgbWt | CodingMethod::RgbRadon => {
            encode_rgb_tf(segment, spec)
        }
    }
}

/// Normalizes a raw segment and encodes it.
pub fn encode_segment(segment: &SeriesSegment, spec: &CodecSpec) -> Result<Encoded, CodecError> {
    encode_normalized(&normalize_min_max(segment), spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_segment(len: usize, clusters: usize) -> SeriesSegment {
        let data = (0..clusters)
            .map(|c| {
                (0..3)
                    .map(|k| {
                        (0..len)
                            .map(|t| ((t * (k + 1) + c) as f64 * 0.1).sin())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        SeriesSegment::from_nested(data, "x", "seg").unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in CodingMethod::ALL {
            assert_eq!(m.name().parse::<CodingMethod>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!("nope".parse::<CodingMethod>().is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = CodecSpec::new(CodingMethod::RgbStep, 32);
        assert_eq!(spec.step.map(StepSpec::get), Some(1));
        spec.step = None;
        assert!(spec.validate().is_err());
        assert!(CodecSpec::new(CodingMethod::Rgb, 4).validate().is_err());
        let parsed: CodecSpec = serde_json::from_str(r#"{"method":"RGB_Radon","target_size":32}"#).unwrap();
        assert_eq!(parsed.radon_angles, 180);
        assert_eq!(parsed.wavelet_level, 3);
    }

    #[test]
    fn every_method_hits_target_size() {
        let seg = ramp_segment(300, 2);
        for m in CodingMethod::ALL {
            let spec = CodecSpec {
                radon_angles: 24,
                ..CodecSpec::new(m, 16)
            };
            let out = encode_segment(&seg, &spec).unwrap();
            assert_eq!(out.image.width(), 16, "{m}");
            assert_eq!(out.image.height(), 16, "{m}");
            assert_eq!(out.image.channels(), m.channels(), "{m}");
            assert!(out.image.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn rgb_plan_matches_geometry() {
        let seg = ramp_segment(2100, 2);
        let out = encode_segment(&seg, &CodecSpec::new(CodingMethod::Rgb, 64)).unwrap();
        assert_eq!((out.plan.width, out.plan.effective_len), (64, 2048));
        let gray = encode_segment(&seg, &CodecSpec::new(CodingMethod::Gray, 64)).unwrap();
        assert_eq!(gray.plan.strip_rows, 6);
    }

    #[test]
    fn lossless_before_resize() {
        // c=1, q=2, len 16: w=4 and l_eff=16, so no resampling happens.
        let x: Vec<f64> = (0..16).map(|i| i as f64 / 15.0).collect();
        let y: Vec<f64> = (0..16).map(|i| ((i * 7) % 16) as f64 / 15.0).collect();
        let seg = NormalizedSegment::new(vec![vec![x.clone(), y.clone()]], "a", "s").unwrap();
        let folded = fold_segment(&seg, FoldMode::Rgb).unwrap();
        let strip = crate::fold::unfold_image(&folded.image, &folded.plan).unwrap();
        assert_eq!(strip.plane(0), x);
        assert_eq!(strip.plane(1), y);
        assert!(strip.plane(2).iter().all(|&v| v == 0.0));
    }
}
