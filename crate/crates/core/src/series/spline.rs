use super::{ChannelSeries, SeriesError};

/// Natural cubic spline through knots at `x = 0, 1, ..., n-1`.
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    y: Vec<f64>,
    // second derivatives at the knots
    m: Vec<f64>,
}

impl NaturalCubicSpline {
    /// Fits the spline. Needs at least 4 knots.
    pub fn fit(y: &[f64]) -> Result<Self, SeriesError> {
        let n = y.len();
        if n < 4 {
            return Err(SeriesError::TooShort { min: 4, got: n });
        }
        // Unit knot spacing: m[i-1] + 4 m[i] + m[i+1] = 6 (y[i+1] - 2 y[i] + y[i-1]),
        // with m[0] = m[n-1] = 0. Solved with the Thomas algorithm.
        let inner = n - 2;
        let mut c_prime = vec![0.0; inner];
        let mut d_prime = vec![0.0; inner];
        for i in 0..inner {
            let rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]);
            if i == 0 {
                c_prime[0] = 1.0 / 4.0;
                d_prime[0] = rhs / 4.0;
            } else {
                let denom = 4.0 - c_prime[i - 1];
                c_prime[i] = 1.0 / denom;
                d_prime[i] = (rhs - d_prime[i - 1]) / denom;
            }
        }
        let mut m = vec![0.0; n];
        for i in (0..inner).rev() {
            let next = if i + 1 < inner { m[i + 2] } else { 0.0 };
            m[i + 1] = d_prime[i] - c_prime[i] * next;
        }
        Ok(Self { y: y.to_vec(), m })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = self.y.len() - 1;
        let x = x.clamp(0.0, last as f64);
        let i = (x.floor() as usize).min(last - 1);
        let t = x - i as f64;
        let u = 1.0 - t;
        let (y0, y1, m0, m1) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        u * y0 + t * y1 + ((u * u * u - u) * m0 + (t * t * t - t) * m1) / 6.0
    }
}

/// Resamples a raw slice to `target_len` points spanning the same extent.
/// Endpoints are reproduced exactly.
pub fn resample_values(values: &[f64], target_len: usize) -> Result<Vec<f64>, SeriesError> {
    if target_len < 2 {
        return Err(SeriesError::BadTarget(target_len));
    }
    let spline = NaturalCubicSpline::fit(values)?;
    let span = (values.len() - 1) as f64;
    let denom = (target_len - 1) as f64;
    let mut out: Vec<f64> = (0..target_len)
        .map(|k| spline.eval(k as f64 * span / denom))
        .collect();
    out[0] = values[0];
    out[target_len - 1] = values[values.len() - 1];
    Ok(out)
}

/// Natural cubic spline resampling of a channel to `target_len` samples.
pub fn resample_cubic(
    channel: &ChannelSeries,
    target_len: usize,
) -> Result<ChannelSeries, SeriesError> {
    resample_values(channel.values(), target_len).map(|values| ChannelSeries { values })
}
