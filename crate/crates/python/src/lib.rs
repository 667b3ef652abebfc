//! Python bindings: fold codecs, signal transforms and the CNN classifier.

use std::path::PathBuf;

use dfhc_core::cnn::{
    build_model, evaluate, predict, split_7_1_2, train, CnnModel, LabeledImages, Tensor4,
    TrainConfig,
};
use dfhc_core::raster::write_png;
use dfhc_core::series::resample_values;
use dfhc_core::transform::{
    dft_magnitude_centered as dft_centered, dwt_decompose as decompose,
    dwt_reconstruct as reconstruct, radon_sinogram, WaveletCoeffs,
};
use dfhc_core::{encode_segment, plan_fold as solve_fold, CodecSpec, CodingMethod, FoldMode};
use dfhc_core::{ImageRaster, SeriesSegment, StepSpec};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fold_mode(mode: &str) -> PyResult<FoldMode> {
    match mode.to_ascii_lowercase().as_str() {
        "rgb" => Ok(FoldMode::Rgb),
        "gray" => Ok(FoldMode::Gray),
        _ => Err(PyValueError::new_err(format!("mode must be 'RGB' or 'Gray', got {mode:?}"))),
    }
}

/// An image with values in `[0, 1]`, stored row-major with interleaved channels.
#[pyclass(name = "Image", module = "dfhc", frozen)]
#[derive(Clone)]
struct PyImage {
    raster: ImageRaster,
    fold_width: Option<usize>,
    effective_len: Option<usize>,
}

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            raster: ImageRaster::new(width, height, channels, data).map_err(value_err)?,
            fold_width: None,
            effective_len: None,
        })
    }

    #[getter]
    fn width(&self) -> usize {
        self.raster.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.raster.height()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.raster.channels()
    }

    /// Side of the folded square before resizing, if this image came from `encode`.
    #[getter]
    fn fold_width(&self) -> Option<usize> {
        self.fold_width
    }

    #[getter]
    fn effective_len(&self) -> Option<usize> {
        self.effective_len
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.raster.data().to_vec()
    }

    fn pixel(&self, x: usize, y: usize, c: usize) -> PyResult<f64> {
        if x >= self.raster.width() || y >= self.raster.height() || c >= self.raster.channels() {
            return Err(PyValueError::new_err("pixel index out of range"));
        }
        Ok(self.raster.get(x, y, c))
    }

    fn save_png(&self, path: PathBuf) -> PyResult<()> {
        write_png(&self.raster, &path).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Image(width={}, height={}, channels={})",
            self.raster.width(),
            self.raster.height(),
            self.raster.channels()
        )
    }
}

/// Names of the supported coding methods.
#[pyfunction]
fn methods() -> Vec<&'static str> {
    CodingMethod::ALL.iter().map(|m| m.name()).collect()
}

/// Square-fold geometry for `strip_rows` rows of `raw_len` samples.
#[pyfunction]
#[pyo3(signature = (strip_rows, raw_len, mode = "RGB"))]
fn plan_fold<'py>(py: Python<'py>, strip_rows: usize, raw_len: usize, mode: &str) -> PyResult<Bound<'py, PyDict>> {
    let plan = solve_fold(strip_rows, raw_len, fold_mode(mode)?).map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("width", plan.width)?;
    d.set_item("effective_len", plan.effective_len)?;
    d.set_item("strip_rows", plan.strip_rows)?;
    Ok(d)
}

/// Encodes `clusters[cluster][channel][sample]` into a square image.
#[pyfunction]
#[pyo3(signature = (clusters, method, size = 64, step = None, wavelet_level = 3, radon_angles = 180))]
fn encode(
    clusters: Vec<Vec<Vec<f64>>>,
    method: &str,
    size: usize,
    step: Option<usize>,
    wavelet_level: usize,
    radon_angles: usize,
) -> PyResult<PyImage> {
    let method: CodingMethod = method.parse().map_err(value_err)?;
    let mut spec = CodecSpec::new(method, size);
    if let Some(s) = step {
        spec.step = Some(StepSpec::new(s).map_err(value_err)?);
    }
    spec.wavelet_level = wavelet_level;
    spec.radon_angles = radon_angles;
    let segment = SeriesSegment::from_nested(clusters, "", "").map_err(value_err)?;
    let enc = encode_segment(&segment, &spec).map_err(value_err)?;
    Ok(PyImage {
        raster: enc.image,
        fold_width: Some(enc.plan.width),
        effective_len: Some(enc.plan.effective_len),
    })
}

/// Centered DFT magnitude spectrum.
#[pyfunction]
fn dft_magnitude_centered(signal: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(dft_centered(&signal).map_err(value_err)?.into_magnitudes())
}

/// Periodized db3 decomposition. Returns `(approx, details)` with the
/// coarsest detail band first.
#[pyfunction]
fn dwt_decompose(signal: Vec<f64>, level: usize) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let c = decompose(&signal, level).map_err(value_err)?;
    Ok((c.approx, c.details))
}

#[pyfunction]
fn dwt_reconstruct(approx: Vec<f64>, details: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let mut len = approx.len();
    for d in &details {
        if d.len() != len {
            return Err(PyValueError::new_err(format!(
                "detail band of length {} does not match {len}",
                d.len()
            )));
        }
        len *= 2;
    }
    Ok(reconstruct(&WaveletCoeffs {
        level: details.len(),
        approx,
        details,
    }))
}

/// Radon sinogram of a row-major `n`×`n` plane, as rows of ρ with one
/// column per angle.
#[pyfunction]
#[pyo3(signature = (plane, n, theta_bins = 180))]
fn radon(plane: Vec<f64>, n: usize, theta_bins: usize) -> PyResult<Vec<Vec<f64>>> {
    let s = radon_sinogram(&plane, n, theta_bins).map_err(value_err)?;
    Ok(s.data.chunks(s.theta_bins).map(<[f64]>::to_vec).collect())
}

/// Natural cubic spline resampling to `target_len` samples.
#[pyfunction]
fn resample(values: Vec<f64>, target_len: usize) -> PyResult<Vec<f64>> {
    resample_values(&values, target_len).map_err(value_err)
}

fn stack(images: &[PyRef<'_, PyImage>]) -> PyResult<Tensor4> {
    let refs: Vec<&ImageRaster> = images.iter().map(|i| &i.raster).collect();
    Tensor4::from_images(&refs).map_err(value_err)
}

/// The compact convolutional classifier.
#[pyclass(name = "Classifier", module = "dfhc")]
struct PyClassifier {
    model: CnnModel,
}

#[pymethods]
impl PyClassifier {
    #[new]
    #[pyo3(signature = (input_size, in_channels, num_classes, seed = 0))]
    fn new(input_size: usize, in_channels: usize, num_classes: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            model: build_model(input_size, in_channels, num_classes, seed).map_err(value_err)?,
        })
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.model.parameter_count()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.model.num_classes()
    }

    /// Splits the data 70/10/20 per class, trains, and returns a dict with
    /// the per-epoch history and the held-out test accuracy.
    #[pyo3(signature = (images, labels, epochs = 20, batch_size = 32, lr = 0.01, momentum = 0.9, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn fit<'py>(
        &mut self,
        py: Python<'py>,
        images: Vec<PyRef<'py, PyImage>>,
        labels: Vec<usize>,
        epochs: usize,
        batch_size: usize,
        lr: f64,
        momentum: f64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        if images.len() != labels.len() {
            return Err(PyValueError::new_err(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        let pairs: Vec<(ImageRaster, usize)> =
            images.iter().map(|i| i.raster.clone()).zip(labels).collect();
        let config = TrainConfig {
            epochs,
            batch_size,
            lr,
            momentum,
            seed,
        };
        let model = &mut self.model;
        let (report, test_accuracy, sizes) = py
            .allow_threads(|| {
                let split = split_7_1_2(pairs, seed)?;
                let sizes = split.sizes();
                let test = LabeledImages::from_pairs(&split.test)?;
                let report = train(model, &split, &config)?;
                let accuracy = if test.is_empty() {
                    None
                } else {
                    Some(evaluate(model, &test)?.accuracy)
                };
                Ok::<_, dfhc_core::cnn::CnnError>((report, accuracy, sizes))
            })
            .map_err(value_err)?;
        let d = PyDict::new(py);
        let losses: Vec<f64> = report.epochs.iter().map(|e| e.train_loss).collect();
        let val: Vec<Option<f64>> = report.epochs.iter().map(|e| e.val_accuracy).collect();
        d.set_item("train_loss", losses)?;
        d.set_item("val_accuracy", val)?;
        d.set_item("best_epoch", report.best_epoch)?;
        d.set_item("best_val_accuracy", report.best_val_accuracy)?;
        d.set_item("test_accuracy", test_accuracy)?;
        d.set_item("split", sizes)?;
        Ok(d)
    }

    fn predict(&self, images: Vec<PyRef<'_, PyImage>>) -> PyResult<Vec<usize>> {
        predict(&self.model, &stack(&images)?).map_err(value_err)
    }

    fn predict_proba(&self, images: Vec<PyRef<'_, PyImage>>) -> PyResult<Vec<Vec<f64>>> {
        self.model.forward(&stack(&images)?).map_err(value_err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.model.to_json().map_err(value_err)
    }

    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(Self {
            model: CnnModel::from_json(json).map_err(value_err)?,
        })
    }
}

#[pymodule]
fn dfhc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImage>()?;
    m.add_class::<PyClassifier>()?;
    m.add_function(wrap_pyfunction!(methods, m)?)?;
    m.add_function(wrap_pyfunction!(plan_fold, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(dft_magnitude_centered, m)?)?;
    m.add_function(wrap_pyfunction!(dwt_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(dwt_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(radon, m)?)?;
    m.add_function(wrap_pyfunction!(resample, m)?)?;
    Ok(())
}
