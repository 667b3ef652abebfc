use std::f64::consts::PI;

use dfhc_core::cnn::{build_model, evaluate, predict, split_7_1_2, train, CnnModel, LabeledImages, Tensor4, TrainConfig};
use dfhc_core::codec::{CodecSpec, CodingMethod};
use dfhc_core::raster::{decode_png, quantize_to_png_bytes};
use dfhc_core::{encode_segment, ImageRaster, SeriesSegment};

fn sine_segment(freq: f64, phase: f64, len: usize, clusters: usize) -> SeriesSegment {
    let data = (0..clusters)
        .map(|c| {
            (0..3)
                .map(|k| {
                    let shift = 2.0 * PI * (c * 3 + k) as f64 / (3 * clusters) as f64;
                    (0..len)
                        .map(|t| (2.0 * PI * freq * t as f64 / len as f64 + shift + phase).sin())
                        .collect()
                })
                .collect()
        })
        .collect();
    SeriesSegment::from_nested(data, format!("f{freq}"), format!("s{freq}_{phase}")).unwrap()
}

#[test]
fn every_method_yields_a_square_unit_image() {
    let seg = sine_segment(4.0, 0.3, 700, 2);
    for method in CodingMethod::ALL {
        for size in [32, 64] {
            let enc = encode_segment(&seg, &CodecSpec::new(method, size)).unwrap();
            let img = &enc.image;
            assert_eq!((img.width(), img.height()), (size, size), "{method}");
            assert_eq!(img.channels(), method.channels(), "{method}");
            assert!(img.data().iter().all(|v| (0.0..=1.0).contains(v)), "{method}");
            let again = encode_segment(&seg, &CodecSpec::new(method, size)).unwrap();
            assert_eq!(enc, again, "{method} is not deterministic");
        }
    }
}

#[test]
fn encoded_images_survive_png_quantization() {
    let seg = sine_segment(2.0, 0.0, 512, 2);
    for method in [CodingMethod::Rgb, CodingMethod::Gray, CodingMethod::RgbFft] {
        let img = encode_segment(&seg, &CodecSpec::new(method, 32)).unwrap().image;
        let decoded = decode_png(&quantize_to_png_bytes(&img).unwrap()).unwrap();
        assert_eq!(decoded.channels(), img.channels());
        let worst = img
            .data()
            .iter()
            .zip(decoded.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 0.5 / 255.0 + 1e-12, "{method}: {worst}");
    }
}

fn encoded_dataset(method: CodingMethod, per_class: usize) -> Vec<(ImageRaster, usize)> {
    let mut out = Vec::new();
    for (label, freq) in [2.0, 8.0].into_iter().enumerate() {
        for i in 0..per_class {
            let seg = sine_segment(freq, i as f64 * 0.37, 512, 2);
            out.push((encode_segment(&seg, &CodecSpec::new(method, 32)).unwrap().image, label));
        }
    }
    out
}

#[test]
fn standard_model_separates_two_frequencies() {
    let data = encoded_dataset(CodingMethod::FftRgb, 30);
    let split = split_7_1_2(data, 11).unwrap();
    let test = LabeledImages::from_pairs(&split.test).unwrap();
    let mut model = build_model(32, 3, 2, 11).unwrap();
    let config = TrainConfig {
        epochs: 6,
        batch_size: 8,
        ..TrainConfig::default()
    };
    train(&mut model, &split, &config).unwrap();
    let metrics = evaluate(&model, &test).unwrap();
    assert_eq!(metrics.accuracy, 1.0, "{:?}", metrics.confusion);
}

#[test]
fn checkpoint_file_reproduces_predictions() {
    let data = encoded_dataset(CodingMethod::Gray, 6);
    let images: Vec<&ImageRaster> = data.iter().map(|(img, _)| img).collect();
    let batch = Tensor4::from_images(&images).unwrap();
    let model = build_model(32, 1, 2, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = CnnModel::load(&path).unwrap();
    assert_eq!(model.forward(&batch).unwrap(), loaded.forward(&batch).unwrap());
    assert_eq!(predict(&model, &batch).unwrap(), predict(&loaded, &batch).unwrap());
}
