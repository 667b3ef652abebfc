//! Whole-image transforms used by the RGB-then-transform codings.

use super::dft::fft2_magnitude_centered;
use super::dwt::analyze_once;
use super::radon::radon_sinogram;
use super::TransformError;
use crate::raster::ImageRaster;
use crate::series::normalize_values;

fn require_square(img: &ImageRaster) -> Result<usize, TransformError> {
    if !img.is_square() {
        return Err(TransformError::Shape(format!(
            "expected a square image, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    Ok(img.width())
}

/// Per channel: centered 2-D magnitude spectrum, `ln(1 + m)`, then min-max.
pub fn fft2_magnitude_image(img: &ImageRaster) -> Result<ImageRaster, TransformError> {
    let n = require_square(img)?;
    let planes: Vec<Vec<f64>> = img
        .planes()
        .iter()
        .map(|p| {
            let logm: Vec<f64> = fft2_magnitude_centered(p, n)
                .into_iter()
                .map(f64::ln_1p)
                .collect();
            normalize_values(&logm)
        })
        .collect();
    Ok(ImageRaster::from_planes(n, n, &planes)?)
}

/// Single-level separable db3 subbands of an `n x n` plane, each `n/2 x n/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subbands {
    pub half: usize,
    pub ll: Vec<f64>,
    /// Horizontal high-pass, vertical low-pass (top right tile).
    pub lh: Vec<f64>,
    /// Horizontal low-pass, vertical high-pass (bottom left tile).
    pub hl: Vec<f64>,
    pub hh: Vec<f64>,
}

pub fn dwt2_subbands(plane: &[f64], n: usize) -> Result<Subbands, TransformError> {
    if n < 2 || !n.is_multiple_of(2) || plane.len() != n * n {
        return Err(TransformError::Shape(format!(
            "2-D wavelet needs an even square side, got {n} ({} values)",
            plane.len()
        )));
    }
    let half = n / 2;
    // rows: low half | high half
    let mut rows = vec![0.0; n * n];
    for (y, row) in plane.chunks_exact(n).enumerate() {
        let (a, d) = analyze_once(row);
        rows[y * n..y * n + half].copy_from_slice(&a);
        rows[y * n + half..(y + 1) * n].copy_from_slice(&d);
    }
    let mut out = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for x in 0..n {
        for y in 0..n {
            col[y] = rows[y * n + x];
        }
        let (a, d) = analyze_once(&col);
        for k in 0..half {
            out[k * n + x] = a[k];
            out[(k + half) * n + x] = d[k];
        }
    }
    let tile = |x0: usize, y0: usize| -> Vec<f64> {
        (0..half)
            .flat_map(|y| out[(y0 + y) * n + x0..(y0 + y) * n + x0 + half].to_vec())
            .collect()
    };
    Ok(Subbands {
        half,
        ll: tile(0, 0),
        lh: tile(half, 0),
        hl: tile(0, half),
        hh: tile(half, half),
    })
}

/// Per channel: one db3 level in both directions, tiled `[LL | LH ; HL | HH]`,
/// each subband min-max normalized on its own.
pub fn dwt2_image(img: &ImageRaster) -> Result<ImageRaster, TransformError> {
    let n = require_square(img)?;
    let planes = img
        .planes()
        .iter()
        .map(|p| {
            let s = dwt2_subbands(p, n)?;
            let h = s.half;
            let mut plane = vec![0.0; n * n];
            for (band, (x0, y0)) in [(&s.ll, (0, 0)), (&s.lh, (h, 0)), (&s.hl, (0, h)), (&s.hh, (h, h))] {
                let norm = normalize_values(band);
                for y in 0..h {
                    plane[(y0 + y) * n + x0..(y0 + y) * n + x0 + h]
                        .copy_from_slice(&norm[y * h..(y + 1) * h]);
                }
            }
            Ok(plane)
        })
        .collect::<Result<Vec<_>, TransformError>>()?;
    Ok(ImageRaster::from_planes(n, n, &planes)?)
}

/// Per-channel sinogram (`rho` rows x `theta` columns), min-max normalized.
pub fn radon_image(img: &ImageRaster, theta_bins: usize) -> Result<ImageRaster, TransformError> {
    let n = require_square(img)?;
    let mut dims = (0, 0);
    let planes = img
        .planes()
        .iter()
        .map(|p| {
            let s = radon_sinogram(p, n, theta_bins)?;
            dims = (s.theta_bins, s.rho_bins);
            Ok(normalize_values(&s.data))
        })
        .collect::<Result<Vec<_>, TransformError>>()?;
    Ok(ImageRaster::from_planes(dims.0, dims.1, &planes)?)
}
