use super::CnnError;
use crate::raster::ImageRaster;

/// Dense `(batch, channels, height, width)` tensor, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor4 {
    pub fn new(n: usize, c: usize, h: usize, w: usize, data: Vec<f64>) -> Result<Self, CnnError> {
        if data.len() != n * c * h * w {
            return Err(CnnError::Shape(format!(
                "tensor {n}x{c}x{h}x{w} needs {} values, got {}",
                n * c * h * w,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(CnnError::Shape("tensor holds non-finite values".into()));
        }
        Ok(Self { n, c, h, w, data })
    }

    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self {
            n,
            c,
            h,
            w,
            data: vec![0.0; n * c * h * w],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.n, self.c, self.h, self.w)
    }

    /// Values per sample.
    pub fn sample_len(&self) -> usize {
        self.c * self.h * self.w
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let s = self.sample_len();
        &self.data[i * s..(i + 1) * s]
    }

    /// Stacks interleaved rasters into channel-planar layout.
    pub fn from_images(images: &[&ImageRaster]) -> Result<Self, CnnError> {
        let first = images
            .first()
            .ok_or_else(|| CnnError::Shape("empty image batch".into()))?;
        let (w, h, c) = (first.width(), first.height(), first.channels());
        let mut data = Vec::with_capacity(images.len() * c * h * w);
        for img in images {
            if (img.width(), img.height(), img.channels()) != (w, h, c) {
                return Err(CnnError::Shape(format!(
                    "mixed image sizes in batch: {}x{}x{} vs {w}x{h}x{c}",
                    img.width(),
                    img.height(),
                    img.channels()
                )));
            }
            for ch in 0..c {
                data.extend(img.data().iter().skip(ch).step_by(c));
            }
        }
        Ok(Self {
            n: images.len(),
            c,
            h,
            w,
            data,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn images_become_planar() {
        let img = ImageRaster::new(2, 1, 3, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
        let t = Tensor4::from_images(&[&img, &img]).unwrap();
        assert_eq!(t.dims(), (2, 3, 1, 2));
        assert_eq!(t.sample(1), &[0.1, 0.4, 0.2, 0.5, 0.3, 0.6]);
    }

    #[test]
    fn shape_checked() {
        assert!(Tensor4::new(1, 1, 2, 2, vec![0.0; 3]).is_err());
        assert!(Tensor4::new(1, 1, 1, 1, vec![f64::NAN]).is_err());
    }
}
