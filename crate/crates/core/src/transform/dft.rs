use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::TransformError;

/// Magnitude spectrum with the zero-frequency bin moved to index `T / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSeries {
    magnitudes: Vec<f64>,
}

impl SpectrumSeries {
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn into_magnitudes(self) -> Vec<f64> {
        self.magnitudes
    }

    /// Index holding frequency zero.
    pub fn center(&self) -> usize {
        self.magnitudes.len() / 2
    }
}

/// Forward DFT `F(u) = sum_t x(t) e^{-2 pi i u t / T}`.
pub fn dft(signal: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    if !buf.is_empty() {
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    }
    buf
}

/// Rotates so that index 0 moves to index `len / 2`.
pub fn fft_shift<T: Clone>(values: &mut [T]) {
    let half = values.len() / 2;
    values.rotate_right(half);
}

pub fn dft_magnitude_centered(signal: &[f64]) -> Result<SpectrumSeries, TransformError> {
    if signal.len() < 2 {
        return Err(TransformError::TooShort {
            min: 2,
            got: signal.len(),
        });
    }
    let mut magnitudes: Vec<f64> = dft(signal).iter().map(|c| c.norm()).collect();
    fft_shift(&mut magnitudes);
    Ok(SpectrumSeries { magnitudes })
}

/// Raw centered 2-D magnitude spectrum of a square `n x n` row-major plane.
pub fn fft2_magnitude_centered(plane: &[f64], n: usize) -> Vec<f64> {
    let mut buf: Vec<Complex<f64>> = plane.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let fft = FftPlanner::new().plan_fft_forward(n);
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for x in 0..n {
        for y in 0..n {
            col[y] = buf[y * n + x];
        }
        fft.process(&mut col);
        for y in 0..n {
            buf[y * n + x] = col[y];
        }
    }
    let mags: Vec<f64> = buf.iter().map(|c| c.norm()).collect();
    let half = n / 2;
    let mut out = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            out[((y + half) % n) * n + (x + half) % n] = mags[y * n + x];
        }
    }
    out
}
