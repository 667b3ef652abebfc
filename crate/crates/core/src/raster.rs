//! Real-valued image rasters in `[0, 1]`, bilinear resizing and 8-bit PNG export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("raster {width}x{height}x{channels} needs {expected} values, got {got}")]
    Shape {
        width: usize,
        height: usize,
        channels: usize,
        expected: usize,
        got: usize,
    },
    #[error("raster must have 1 or 3 channels, got {0}")]
    Channels(usize),
    #[error("raster value {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("resize target must be at least 1")]
    ZeroTarget,
    #[error("png encoding failed: {0}")]
    Png(#[from] png::EncodingError),
    #[error("png decoding failed: {0}")]
    PngDecode(#[from] png::DecodingError),
    #[error("unsupported png layout {0:?}")]
    PngLayout(png::ColorType),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Row-major, channel-interleaved image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRaster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageRaster {
    pub fn new(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self, RasterError> {
        if channels != 1 && channels != 3 {
            return Err(RasterError::Channels(channels));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(RasterError::Shape {
                width,
                height,
                channels,
                expected,
                got: data.len(),
            });
        }
        if let Some(&v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(RasterError::OutOfRange(v));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Result<Self, RasterError> {
        Self::new(width, height, channels, vec![0.0; width * height * channels])
    }

    /// Interleaves per-channel planes (each `width * height`, row-major).
    pub fn from_planes(
        width: usize,
        height: usize,
        planes: &[Vec<f64>],
    ) -> Result<Self, RasterError> {
        let channels = planes.len();
        let mut data = vec![0.0; width * height * channels];
        for (c, plane) in planes.iter().enumerate() {
            if plane.len() != width * height {
                return Err(RasterError::Shape {
                    width,
                    height,
                    channels: 1,
                    expected: width * height,
                    got: plane.len(),
                });
            }
            for (i, &v) in plane.iter().enumerate() {
                data[i * channels + c] = v;
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_square(&self) -> bool {
        self.width == self.height
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub(crate) fn set(&mut self, x: usize, y: usize, c: usize, v: f64) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// One channel as a row-major plane.
    pub fn plane(&self, c: usize) -> Vec<f64> {
        self.data
            .iter()
            .skip(c)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    pub fn planes(&self) -> Vec<Vec<f64>> {
        (0..self.channels).map(|c| self.plane(c)).collect()
    }
}

/// Bilinear resample to `target x target`, sampling at pixel centers.
pub fn resize_image(img: &ImageRaster, target: usize) -> Result<ImageRaster, RasterError> {
    if target == 0 {
        return Err(RasterError::ZeroTarget);
    }
    if img.width == target && img.height == target {
        return Ok(img.clone());
    }
    let xs = source_coords(img.width, target);
    let ys = source_coords(img.height, target);
    let ch = img.channels;
    let mut data = Vec::with_capacity(target * target * ch);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            for c in 0..ch {
                let top = img.get(x0, y0, c) * (1.0 - fx) + img.get(x1, y0, c) * fx;
                let bottom = img.get(x0, y1, c) * (1.0 - fx) + img.get(x1, y1, c) * fx;
                data.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0));
            }
        }
    }
    ImageRaster::new(target, target, ch, data)
}

fn source_coords(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

/// 8-bit samples, `round(v * 255)` with halves rounded up.
pub fn quantize(img: &ImageRaster) -> Vec<u8> {
    img.data
        .iter()
        .map(|&v| (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Encodes as an 8-bit grayscale or truecolor, non-interlaced PNG.
pub fn quantize_to_png_bytes(img: &ImageRaster) -> Result<Vec<u8>, RasterError> {
    let mut out = Vec::new();
    write_png_to(img, &mut out)?;
    Ok(out)
}

fn write_png_to<W: Write>(img: &ImageRaster, w: W) -> Result<(), RasterError> {
    let mut enc = png::Encoder::new(w, img.width as u32, img.height as u32);
    enc.set_color(if img.channels == 3 {
        png::ColorType::Rgb
    } else {
        png::ColorType::Grayscale
    });
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header()?;
    writer.write_image_data(&quantize(img))?;
    writer.finish()?;
    Ok(())
}

pub fn write_png(img: &ImageRaster, path: &Path) -> Result<(), RasterError> {
    let io_err = |source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut buf = BufWriter::new(file);
    write_png_to(img, &mut buf)?;
    buf.flush().map_err(io_err)
}

/// Decodes an 8-bit grayscale or RGB PNG back into a raster (`v = byte / 255`).
pub fn decode_png(bytes: &[u8]) -> Result<ImageRaster, RasterError> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info()?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf)?;
    let channels = match (info.color_type, info.bit_depth) {
        (png::ColorType::Grayscale, png::BitDepth::Eight) => 1,
        (png::ColorType::Rgb, png::BitDepth::Eight) => 3,
        (other, _) => return Err(RasterError::PngLayout(other)),
    };
    let data = buf[..info.buffer_size()]
        .iter()
        .map(|&b| f64::from(b) / 255.0)
        .collect();
    ImageRaster::new(info.width as usize, info.height as usize, channels, data)
}

pub fn read_png(path: &Path) -> Result<ImageRaster, RasterError> {
    let bytes = std::fs::read(path).map_err(|source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_png(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resize_same_size_is_identity() {
        let img = ImageRaster::new(3, 3, 1, (0..9).map(|i| i as f64 / 8.0).collect()).unwrap();
        assert_eq!(resize_image(&img, 3).unwrap(), img);
    }

    #[test]
    fn resize_constant() {
        let img = ImageRaster::new(5, 3, 3, vec![0.3; 45]).unwrap();
        let out = resize_image(&img, 8).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn resize_checkerboard_by_hand() {
        // Source coords for 2 -> 4 at pixel centers: 0 (clamped), .25, .75, 1 (clamped).
        // Bilinear of [1 0; 0 1] is (1-u)(1-v) + uv.
        let img = ImageRaster::new(2, 2, 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let out = resize_image(&img, 4).unwrap();
        #[rustfmt::skip]
        let expected = [
            1.0,  0.75,   0.25,   0.0,
            0.75, 0.625,  0.375,  0.25,
            0.25, 0.375,  0.625,  0.75,
            0.0,  0.25,   0.75,   1.0,
        ];
        for (a, b) in out.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn quantization_rule() {
        let img = ImageRaster::new(3, 1, 1, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(quantize(&img), vec![0, 128, 255]);
    }

    #[test]
    fn png_round_trip() {
        let data: Vec<f64> = (0..4 * 3 * 3).map(|i| (i as f64 * 0.37).fract()).collect();
        for ch in [1, 3] {
            let img = ImageRaster::new(4, 9 / ch, ch, data[..4 * (9 / ch) * ch].to_vec()).unwrap();
            let bytes = quantize_to_png_bytes(&img).unwrap();
            let back = decode_png(&bytes).unwrap();
            assert_eq!(back.channels(), ch);
            assert_eq!(quantize(&back), quantize(&img));
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            ImageRaster::new(2, 2, 2, vec![0.0; 8]),
            Err(RasterError::Channels(2))
        ));
        assert!(matches!(
            ImageRaster::new(2, 2, 1, vec![0.0; 3]),
            Err(RasterError::Shape { .. })
        ));
        assert!(matches!(
            ImageRaster::new(1, 1, 1, vec![1.5]),
            Err(RasterError::OutOfRange(_))
        ));
    }
}
