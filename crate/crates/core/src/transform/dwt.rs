//! Orthonormal db3 wavelet analysis and synthesis with periodic boundaries.

use std::sync::OnceLock;

use super::TransformError;

/// db3 scaling (low-pass) filter, from its closed form.
pub fn db3_lowpass() -> &'static [f64; 6] {
    static FILTER: OnceLock<[f64; 6]> = OnceLock::new();
    FILTER.get_or_init(|| {
        let r10 = 10f64.sqrt();
        let s = (5.0 + 2.0 * r10).sqrt();
        let k = 16.0 * std::f64::consts::SQRT_2;
        [
            (1.0 + r10 + s) / k,
            (5.0 + r10 + 3.0 * s) / k,
            (10.0 - 2.0 * r10 + 2.0 * s) / k,
            (10.0 - 2.0 * r10 - 2.0 * s) / k,
            (5.0 + r10 - 3.0 * s) / k,
            (1.0 + r10 - s) / k,
        ]
    })
}

/// Quadrature mirror high-pass filter `g[k] = (-1)^k h[5 - k]`.
pub fn db3_highpass() -> &'static [f64; 6] {
    static FILTER: OnceLock<[f64; 6]> = OnceLock::new();
    FILTER.get_or_init(|| {
        let h = db3_lowpass();
        std::array::from_fn(|k| if k % 2 == 0 { h[5 - k] } else { -h[5 - k] })
    })
}

/// Multilevel decomposition: approximation `a_J` plus details `d_J, ..., d_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletCoeffs {
    pub level: usize,
    pub approx: Vec<f64>,
    /// Coarsest band first.
    pub details: Vec<Vec<f64>>,
}

impl WaveletCoeffs {
    pub fn len(&self) -> usize {
        self.approx.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `[a_J, d_J, ..., d_1]` as one vector.
    pub fn concatenated(&self) -> Vec<f64> {
        let mut out = self.approx.clone();
        for d in &self.details {
            out.extend_from_slice(d);
        }
        out
    }
}

/// One periodized analysis step. `signal.len()` must be even.
pub fn analyze_once(signal: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    let (h, g) = (db3_lowpass(), db3_highpass());
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for m in 0..6 {
            let x = signal[(2 * k + m) % n];
            a += h[m] * x;
            d += g[m] * x;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

/// Transpose of [`analyze_once`].
pub fn synthesize_once(approx: &[f64], detail: &[f64]) -> Vec<f64> {
    let half = approx.len();
    let n = 2 * half;
    let (h, g) = (db3_lowpass(), db3_highpass());
    let mut out = vec![0.0; n];
    for k in 0..half {
        for m in 0..6 {
            out[(2 * k + m) % n] += h[m] * approx[k] + g[m] * detail[k];
        }
    }
    out
}

pub fn dwt_decompose(signal: &[f64], level: usize) -> Result<WaveletCoeffs, TransformError> {
    let block = 1usize.checked_shl(level as u32).unwrap_or(0);
    if level == 0 || block == 0 || signal.len() < block || !signal.len().is_multiple_of(block) {
        return Err(TransformError::WaveletLevel {
            level,
            len: signal.len(),
        });
    }
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(level);
    for _ in 0..level {
        let (a, d) = analyze_once(&approx);
        details.push(d);
        approx = a;
    }
    details.reverse();
    Ok(WaveletCoeffs {
        level,
        approx,
        details,
    })
}

pub fn dwt_reconstruct(coeffs: &WaveletCoeffs) -> Vec<f64> {
    coeffs
        .details
        .iter()
        .fold(coeffs.approx.clone(), |a, d| synthesize_once(&a, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    /// Circular correlation with the filter followed by keeping even outputs.
    fn convolve_downsample(x: &[f64], filter: &[f64]) -> Vec<f64> {
        let n = x.len() as isize;
        let full: Vec<f64> = (0..n)
            .map(|i| {
                filter
                    .iter()
                    .enumerate()
                    .map(|(m, f)| f * x[(i + m as isize).rem_euclid(n) as usize])
                    .sum()
            })
            .collect();
        full.into_iter().step_by(2).collect()
    }

    #[test]
    fn filter_matches_published_values() {
        let published = [
            0.332_670_552_950_082_6,
            0.806_891_509_311_092_5,
            0.459_877_502_118_491_5,
            -0.135_011_020_010_254_6,
            -0.085_441_273_882_026_7,
            0.035_226_291_885_709_5,
        ];
        for (a, b) in db3_lowpass().iter().zip(published) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn filter_orthonormality_and_moments() {
        let h = db3_lowpass();
        let g = db3_highpass();
        let dot = |shift: usize, a: &[f64], b: &[f64]| -> f64 {
            (0..6 - shift).map(|k| a[k] * b[k + shift]).sum()
        };
        assert!((dot(0, h, h) - 1.0).abs() < 1e-14);
        assert!(dot(2, h, h).abs() < 1e-14);
        assert!(dot(4, h, h).abs() < 1e-14);
        // three vanishing moments
        for p in 0..3 {
            let m: f64 = g.iter().enumerate().map(|(k, v)| v * (k as f64).powi(p)).sum();
            assert!(m.abs() < 1e-12, "moment {p} = {m}");
        }
    }

    #[test]
    fn constant_signal_has_no_detail() {
        let c = dwt_decompose(&[0.7; 32], 3).unwrap();
        assert!(c.details.iter().flatten().all(|d| d.abs() < 1e-10));
        let energy: f64 = c.approx.iter().map(|a| a * a).sum();
        assert!((energy - 32.0 * 0.49).abs() < 1e-9);
    }

    #[test]
    fn matches_filter_bank_oracle() {
        let x = random(64, 3);
        let c = dwt_decompose(&x, 3).unwrap();
        let mut a = x;
        let mut expected_details = Vec::new();
        for _ in 0..3 {
            expected_details.push(convolve_downsample(&a, db3_highpass()));
            a = convolve_downsample(&a, db3_lowpass());
        }
        expected_details.reverse();
        for (x, y) in c.approx.iter().zip(&a) {
            assert!((x - y).abs() < 1e-9);
        }
        for (d, e) in c.details.iter().zip(&expected_details) {
            assert_eq!(d.len(), e.len());
            for (x, y) in d.iter().zip(e) {
                assert!((x - y).abs() < 1e-9);
            }
        }
        assert_eq!(c.details.iter().map(Vec::len).collect::<Vec<_>>(), vec![8, 16, 32]);
    }

    #[test]
    fn approx_only_reconstruction_energy() {
        let x = random(64, 9);
        let mut c = dwt_decompose(&x, 2).unwrap();
        for d in &mut c.details {
            d.iter_mut().for_each(|v| *v = 0.0);
        }
        let smooth = dwt_reconstruct(&c);
        let e1: f64 = smooth.iter().map(|v| v * v).sum();
        let e2: f64 = c.approx.iter().map(|v| v * v).sum();
        assert!((e1 - e2).abs() < 1e-9);

        let zero = WaveletCoeffs {
            level: 1,
            approx: vec![0.0; 4],
            details: vec![vec![0.0; 4]],
        };
        assert_eq!(dwt_reconstruct(&zero), vec![0.0; 8]);
    }

    #[test]
    fn bad_levels() {
        assert!(dwt_decompose(&[0.0; 12], 3).is_err());
        assert!(dwt_decompose(&[0.0; 4], 3).is_err());
        assert!(dwt_decompose(&[0.0; 8], 0).is_err());
        assert!(dwt_decompose(&[0.0; 8], 200).is_err());
    }

    proptest! {
        #[test]
        fn perfect_reconstruction_and_energy(exp in 3u32..10, level in 1usize..4, seed in any::<u64>()) {
            let x = random(1 << exp, seed);
            let c = dwt_decompose(&x, level).unwrap();
            prop_assert_eq!(c.len(), x.len());
            let e_in: f64 = x.iter().map(|v| v * v).sum();
            let e_out: f64 = c.concatenated().iter().map(|v| v * v).sum();
            prop_assert!((e_in - e_out).abs() < 1e-9);
            let back = dwt_reconstruct(&c);
            for (a, b) in back.iter().zip(&x) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
