//! Multi-cluster time series: validated containers, min-max normalization,
//! windowing, step differencing and cubic-spline resampling.
//!
//! A [`SeriesSegment`] is the unit every codec consumes. It holds one or more
//! [`Cluster`]s, each grouping one to three correlated channels of equal
//! length (for example the three axes of an accelerometer).

mod spline;

pub use spline::{resample_cubic, resample_values, NaturalCubicSpline};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("non-finite value at cluster {cluster}, channel {channel}, sample {sample}")]
    NonFinite {
        cluster: usize,
        channel: usize,
        sample: usize,
    },
    #[error("channel needs at least {min} samples, got {got}")]
    TooShort { min: usize, got: usize },
    #[error("cluster must hold 1 to 3 channels, got {0}")]
    ClusterDim(usize),
    #[error("segment must hold at least one cluster")]
    NoClusters,
    #[error("channel length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("normalized value {value} outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error("window of {window} samples does not fit a stream of {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("overlap {overlap} must be smaller than window {window}")]
    BadOverlap { overlap: usize, window: usize },
    #[error("step must be at least 1")]
    ZeroStep,
    #[error("step {step} must be smaller than channel length {len}")]
    StepTooLarge { step: usize, len: usize },
    #[error("resample target must be at least 2, got {0}")]
    BadTarget(usize),
}

/// One sensor channel. At least two samples, all finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ChannelSeries {
    values: Vec<f64>,
}

impl ChannelSeries {
    pub fn new(values: Vec<f64>) -> Result<Self, SeriesError> {
        if values.len() < 2 {
            return Err(SeriesError::TooShort {
                min: 2,
                got: values.len(),
            });
        }
        if let Some(sample) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeriesError::NonFinite {
                cluster: 0,
                channel: 0,
                sample,
            });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl TryFrom<Vec<f64>> for ChannelSeries {
    type Error = SeriesError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl From<ChannelSeries> for Vec<f64> {
    fn from(c: ChannelSeries) -> Self {
        c.values
    }
}

/// A group of 1 to 3 channels of one physical modality.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    channels: Vec<ChannelSeries>,
}

impl Cluster {
    pub fn new(channels: Vec<ChannelSeries>) -> Result<Self, SeriesError> {
        if channels.is_empty() || channels.len() > 3 {
            return Err(SeriesError::ClusterDim(channels.len()));
        }
        let len = channels[0].len();
        for ch in &channels[1..] {
            if ch.len() != len {
                return Err(SeriesError::LengthMismatch {
                    expected: len,
                    got: ch.len(),
                });
            }
        }
        Ok(Self { channels })
    }

    pub fn channels(&self) -> &[ChannelSeries] {
        &self.channels
    }

    /// Number of channels `q` in this cluster.
    pub fn dim(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A labelled window of raw multi-cluster sensor data.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSegment {
    clusters: Vec<Cluster>,
    pub label: String,
    pub source_id: String,
}

impl SeriesSegment {
    pub fn new(
        clusters: Vec<Cluster>,
        label: impl Into<String>,
        source_id: impl Into<String>,
    ) -> Result<Self, SeriesError> {
        let first = clusters.first().ok_or(SeriesError::NoClusters)?;
        let len = first.len();
        for c in &clusters[1..] {
            if c.len() != len {
                return Err(SeriesError::LengthMismatch {
                    expected: len,
                    got: c.len(),
                });
            }
        }
        Ok(Self {
            clusters,
            label: label.into(),
            source_id: source_id.into(),
        })
    }

    /// Builds a segment from nested `clusters[channels[samples]]` vectors,
    /// reporting the exact cluster/channel/sample of any bad value.
    pub fn from_nested(
        data: Vec<Vec<Vec<f64>>>,
        label: impl Into<String>,
        source_id: impl Into<String>,
    ) -> Result<Self, SeriesError> {
        let mut clusters = Vec::with_capacity(data.len());
        for (ci, chans) in data.into_iter().enumerate() {
            let mut channels = Vec::with_capacity(chans.len());
            for (hi, values) in chans.into_iter().enumerate() {
                let ch = ChannelSeries::new(values).map_err(|e| match e {
                    SeriesError::NonFinite { sample, .. } => SeriesError::NonFinite {
                        cluster: ci,
                        channel: hi,
                        sample,
                    },
                    other => other,
                })?;
                channels.push(ch);
            }
            clusters.push(Cluster::new(channels)?);
        }
        Self::new(clusters, label, source_id)
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.clusters[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cluster count `c`.
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Total channel count `r`, summed over clusters.
    pub fn channel_count(&self) -> usize {
        self.clusters.iter().map(Cluster::dim).sum()
    }
}

/// A segment whose every value lies in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSegment {
    clusters: Vec<Vec<Vec<f64>>>,
    pub label: String,
    pub source_id: String,
}

impl NormalizedSegment {
    /// Wraps already-normalized data, validating shape and range.
    pub fn new(
        clusters: Vec<Vec<Vec<f64>>>,
        label: impl Into<String>,
        source_id: impl Into<String>,
    ) -> Result<Self, SeriesError> {
        if clusters.is_empty() {
            return Err(SeriesError::NoClusters);
        }
        let len = clusters[0].first().map(Vec::len).unwrap_or(0);
        for chans in &clusters {
            if chans.is_empty() || chans.len() > 3 {
                return Err(SeriesError::ClusterDim(chans.len()));
            }
            for ch in chans {
                if ch.len() != len {
                    return Err(SeriesError::LengthMismatch {
                        expected: len,
                        got: ch.len(),
                    });
                }
                if let Some(&value) = ch.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                    return Err(SeriesError::OutOfRange { value });
                }
            }
        }
        Ok(Self {
            clusters,
            label: label.into(),
            source_id: source_id.into(),
        })
    }

    pub fn clusters(&self) -> &[Vec<Vec<f64>>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters[0][0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn channel_count(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    /// Channels in cluster order, then x/y/z order within each cluster.
    pub fn channels(&self) -> impl Iterator<Item = &[f64]> {
        self.clusters.iter().flatten().map(Vec::as_slice)
    }

    /// Applies `f` to every channel, re-normalizing each result into `[0, 1]`.
    pub fn map_channels<E, F>(&self, mut f: F) -> Result<Self, E>
    where
        E: From<SeriesError>,
        F: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    {
        let mut out = Vec::with_capacity(self.clusters.len());
        for chans in &self.clusters {
            let mut mapped = Vec::with_capacity(chans.len());
            for ch in chans {
                mapped.push(normalize_values(&f(ch)?));
            }
            out.push(mapped);
        }
        Ok(Self::new(out, self.label.clone(), self.source_id.clone())?)
    }

    /// Resamples every channel to `target_len` with a natural cubic spline.
    ///
    /// Spline overshoot can leave `[0, 1]` slightly, so results are clamped.
    pub fn resampled(&self, target_len: usize) -> Result<Self, SeriesError> {
        if target_len == self.len() {
            return Ok(self.clone());
        }
        let clusters = self
            .clusters
            .iter()
            .map(|chans| {
                chans
                    .iter()
                    .map(|ch| {
                        resample_values(ch, target_len)
                            .map(|v| v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect())
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            clusters,
            label: self.label.clone(),
            source_id: self.source_id.clone(),
        })
    }

    /// Reinterprets the normalized values as a raw segment.
    pub fn to_series(&self) -> Result<SeriesSegment, SeriesError> {
        SeriesSegment::from_nested(
            self.clusters.clone(),
            self.label.clone(),
            self.source_id.clone(),
        )
    }
}

/// Differential step `s` used by step coding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct StepSpec(usize);

impl StepSpec {
    pub fn new(step: usize) -> Result<Self, SeriesError> {
        if step == 0 {
            return Err(SeriesError::ZeroStep);
        }
        Ok(Self(step))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for StepSpec {
    type Error = SeriesError;

    fn try_from(s: usize) -> Result<Self, Self::Error> {
        Self::new(s)
    }
}

impl From<StepSpec> for usize {
    fn from(s: StepSpec) -> Self {
        s.0
    }
}

/// Min-max scales one channel into `[0, 1]`. A constant channel maps to zeros.
pub fn normalize_values(values: &[f64]) -> Vec<f64> {
    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = max - min;
    if range.is_nan() || range <= 0.0 {
        return vec![0.0; values.len()];
    }
    values
        .iter()
        .map(|&v| ((v - min) / range).clamp(0.0, 1.0))
        .collect()
}

/// Per-channel, per-segment min-max normalization.
pub fn normalize_min_max(segment: &SeriesSegment) -> NormalizedSegment {
    let clusters = segment
        .clusters
        .iter()
        .map(|c| {
            c.channels
                .iter()
                .map(|ch| normalize_values(ch.values()))
                .collect()
        })
        .collect();
    NormalizedSegment {
        clusters,
        label: segment.label.clone(),
        source_id: segment.source_id.clone(),
    }
}

/// Cuts a long recording into fixed windows with stride `window_len - overlap`.
///
/// A trailing partial window is dropped. Window `i` gets the source id
/// `<source_id>_w<i>`.
pub fn window_segments(
    stream: &SeriesSegment,
    window_len: usize,
    overlap: usize,
) -> Result<Vec<SeriesSegment>, SeriesError> {
    if overlap >= window_len {
        return Err(SeriesError::BadOverlap {
            overlap,
            window: window_len,
        });
    }
    if window_len < 2 {
        return Err(SeriesError::TooShort {
            min: 2,
            got: window_len,
        });
    }
    let len = stream.len();
    if window_len > len {
        return Err(SeriesError::WindowTooLong {
            window: window_len,
            len,
        });
    }
    let stride = window_len - overlap;
    (0..)
        .map(|i| i * stride)
        .take_while(|start| start + window_len <= len)
        .enumerate()
        .map(|(i, start)| {
            let clusters = stream
                .clusters
                .iter()
                .map(|c| Cluster {
                    channels: c
                        .channels
                        .iter()
                        .map(|ch| ChannelSeries {
                            values: ch.values[start..start + window_len].to_vec(),
                        })
                        .collect(),
                })
                .collect();
            Ok(SeriesSegment {
                clusters,
                label: stream.label.clone(),
                source_id: format!("{}_w{}", stream.source_id, i),
            })
        })
        .collect()
}

/// Lag-`s` differences `x[t+s] - x[t]` of every channel, re-normalized to `[0, 1]`.
pub fn step_difference(
    segment: &NormalizedSegment,
    spec: StepSpec,
) -> Result<NormalizedSegment, SeriesError> {
    let s = spec.get();
    let len = segment.len();
    if s >= len {
        return Err(SeriesError::StepTooLarge { step: s, len });
    }
    segment.map_channels(|ch| Ok(ch.iter().zip(&ch[s..]).map(|(a, b)| b - a).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn single(values: Vec<f64>) -> SeriesSegment {
        SeriesSegment::from_nested(vec![vec![values]], "a", "s").unwrap()
    }

    fn norm_single(values: Vec<f64>) -> NormalizedSegment {
        NormalizedSegment::new(vec![vec![values]], "a", "s").unwrap()
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_min_max(&single(vec![0.0, 5.0, 10.0]));
        assert_eq!(n.clusters()[0][0], vec![0.0, 0.5, 1.0]);
        let n = normalize_min_max(&single(vec![7.0, 7.0, 7.0]));
        assert_eq!(n.clusters()[0][0], vec![0.0, 0.0, 0.0]);
        let n = normalize_min_max(&single(vec![-2.0, 0.0, 2.0, 6.0]));
        assert_eq!(n.clusters()[0][0], vec![0.0, 0.25, 0.5, 1.0]);
    }

    #[test]
    fn non_finite_names_channel() {
        let err = SeriesSegment::from_nested(
            vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0], vec![2.0, f64::NAN]]],
            "a",
            "s",
        )
        .unwrap_err();
        assert_eq!(
            err,
            SeriesError::NonFinite {
                cluster: 1,
                channel: 1,
                sample: 1
            }
        );
    }

    #[test]
    fn cluster_dim_limits() {
        assert!(SeriesSegment::from_nested(vec![vec![]], "a", "s").is_err());
        let four = vec![vec![vec![0.0, 1.0]; 4]];
        assert_eq!(
            SeriesSegment::from_nested(four, "a", "s").unwrap_err(),
            SeriesError::ClusterDim(4)
        );
        let ragged = vec![vec![vec![0.0, 1.0]], vec![vec![0.0, 1.0, 2.0]]];
        assert!(matches!(
            SeriesSegment::from_nested(ragged, "a", "s"),
            Err(SeriesError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn window_offsets() {
        let stream = single((0..100).map(f64::from).collect());
        let w = window_segments(&stream, 40, 0).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[1].clusters()[0].channels()[0].values()[0], 40.0);
        assert_eq!(w[1].source_id, "s_w1");

        let w = window_segments(&stream, 40, 20).unwrap();
        let starts: Vec<f64> = w
            .iter()
            .map(|s| s.clusters()[0].channels()[0].values()[0])
            .collect();
        assert_eq!(starts, vec![0.0, 20.0, 40.0, 60.0]);

        let short = single((0..30).map(f64::from).collect());
        assert!(matches!(
            window_segments(&short, 40, 0),
            Err(SeriesError::WindowTooLong { .. })
        ));
        assert!(matches!(
            window_segments(&stream, 40, 40),
            Err(SeriesError::BadOverlap { .. })
        ));
    }

    #[test]
    fn step_examples() {
        let out = step_difference(&norm_single(vec![0.0, 1.0 / 3.0, 1.0]), StepSpec::new(1).unwrap())
            .unwrap();
        assert_eq!(out.clusters()[0][0], vec![0.0, 1.0]);

        let out = step_difference(&norm_single(vec![0.0; 5]), StepSpec::new(2).unwrap()).unwrap();
        assert_eq!(out.clusters()[0][0], vec![0.0; 3]);

        let out = step_difference(
            &norm_single(vec![0.0, 0.5, 0.25, 1.0]),
            StepSpec::new(2).unwrap(),
        )
        .unwrap();
        assert_eq!(out.clusters()[0][0], vec![0.0, 1.0]);

        assert!(matches!(
            step_difference(&norm_single(vec![0.0, 1.0, 0.5]), StepSpec::new(3).unwrap()),
            Err(SeriesError::StepTooLarge { step: 3, len: 3 })
        ));
        assert_eq!(StepSpec::new(0), Err(SeriesError::ZeroStep));
    }

    #[test]
    fn normalized_rejects_out_of_range() {
        assert!(NormalizedSegment::new(vec![vec![vec![0.0, 1.5]]], "a", "s").is_err());
    }

    fn channel_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1e3f64..1e3, 3..64)
    }

    proptest! {
        #[test]
        fn normalize_idempotent(v in channel_strategy()) {
            let once = normalize_min_max(&single(v));
            let twice = normalize_min_max(&once.to_series().unwrap());
            for (a, b) in once.clusters()[0][0].iter().zip(&twice.clusters()[0][0]) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }

        #[test]
        fn normalize_affine_invariant(v in channel_strategy(), a in 0.01f64..100.0, b in -100.0f64..100.0) {
            let base = normalize_min_max(&single(v.clone()));
            let moved = normalize_min_max(&single(v.iter().map(|x| a * x + b).collect()));
            for (x, y) in base.clusters()[0][0].iter().zip(&moved.clusters()[0][0]) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-9);
            }
        }

        #[test]
        fn normalized_range(v in channel_strategy()) {
            let n = normalize_min_max(&single(v));
            prop_assert!(n.clusters()[0][0].iter().all(|x| (0.0..=1.0).contains(x)));
        }

        #[test]
        fn step_length(v in prop::collection::vec(0.0f64..1.0, 3..64), s in 1usize..3) {
            let len = v.len();
            let out = step_difference(&norm_single(v), StepSpec::new(s).unwrap()).unwrap();
            prop_assert_eq!(out.len(), len - s);
        }

        #[test]
        fn windows_tile_prefix(len in 10usize..200, win in 2usize..10) {
            let data: Vec<f64> = (0..len).map(|i| i as f64 * 0.5).collect();
            let w = window_segments(&single(data.clone()), win, 0).unwrap();
            let joined: Vec<f64> = w
                .iter()
                .flat_map(|s| s.clusters()[0].channels()[0].values().to_vec())
                .collect();
            prop_assert_eq!(joined.len(), (len / win) * win);
            prop_assert_eq!(&joined[..], &data[..joined.len()]);
        }
    }
}
