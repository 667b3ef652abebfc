//! Discrete Radon transform of a square image.
//!
//! The line delta is replaced by a unit-width linear (tent) kernel in `rho`:
//! each pixel center is projected onto the detector at angle `theta` and its
//! value is split between the two nearest unit-pitch bins. Every pixel's
//! mass lands in the sinogram exactly once per angle, and at `theta = 0` the
//! projections fall on bin centers, giving plain column sums.

use std::f64::consts::PI;

use super::TransformError;

/// Rows are `rho` bins, columns are `theta` bins, `theta` in `[0, pi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub rho_bins: usize,
    pub theta_bins: usize,
    /// Row-major `rho_bins x theta_bins`.
    pub data: Vec<f64>,
}

impl Sinogram {
    pub fn get(&self, rho: usize, theta: usize) -> f64 {
        self.data[rho * self.theta_bins + theta]
    }

    /// Projection at one angle.
    pub fn column(&self, theta: usize) -> Vec<f64> {
        (0..self.rho_bins).map(|r| self.get(r, theta)).collect()
    }

    pub fn angle(&self, theta: usize) -> f64 {
        theta as f64 * PI / self.theta_bins as f64
    }

    /// Signed offset of bin `rho` from the image center, in pixels.
    pub fn offset(&self, rho: usize) -> f64 {
        rho as f64 - (self.rho_bins as f64 - 1.0) / 2.0
    }
}

/// Detector length covering the image diagonal, with the parity of `n` so the
/// center bin lines up with the image center.
pub fn rho_bins_for(n: usize) -> usize {
    let diag = (n as f64 * std::f64::consts::SQRT_2).ceil() as usize;
    if (diag + n).is_multiple_of(2) {
        diag
    } else {
        diag + 1
    }
}

pub fn radon_sinogram(plane: &[f64], n: usize, theta_bins: usize) -> Result<Sinogram, TransformError> {
    if theta_bins < 2 {
        return Err(TransformError::Parameter(format!(
            "theta_bins must be at least 2, got {theta_bins}"
        )));
    }
    if n == 0 || plane.len() != n * n {
        return Err(TransformError::Shape(format!(
            "plane of {} values is not {n}x{n}",
            plane.len()
        )));
    }
    let rho_bins = rho_bins_for(n);
    let center = (n as f64 - 1.0) / 2.0;
    let rho_center = (rho_bins as f64 - 1.0) / 2.0;
    let mut data = vec![0.0; rho_bins * theta_bins];
    for t in 0..theta_bins {
        let (sin, cos) = (t as f64 * PI / theta_bins as f64).sin_cos();
        for y in 0..n {
            let dy = y as f64 - center;
            for x in 0..n {
                let v = plane[y * n + x];
                if v == 0.0 {
                    continue;
                }
                let pos = (x as f64 - center) * cos + dy * sin + rho_center;
                let lo = pos.floor();
                let frac = pos - lo;
                let lo = lo as usize;
                data[lo * theta_bins + t] += v * (1.0 - frac);
                if frac > 0.0 {
                    data[(lo + 1) * theta_bins + t] += v * frac;
                }
            }
        }
    }
    Ok(Sinogram {
        rho_bins,
        theta_bins,
        data,
    })
}
