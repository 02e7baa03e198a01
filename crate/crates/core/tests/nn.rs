mod common;

use hefir::nn::{
    avg_pool, classify, conv2d, count_model_ops, count_ops, forward, forward_batch,
    fully_connected, integerize, quantize_weight, square_layer, IntTensor, Layer, LayerSpec,
    NetworkSpec, OpCounts, QuantizedModel, Shape,
};
use hefir::Error;
use num_bigint::BigInt;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn ints(t: &IntTensor) -> Vec<i64> {
    t.to_i64().unwrap()
}

/// Sliding-window convolution over an explicitly zero-padded copy of the input.
#[allow(clippy::too_many_arguments)]
fn naive_conv(
    x: &[i64],
    (h, w, c): (usize, usize, usize),
    weights: &[i64],
    filters: usize,
    (kh, kw): (usize, usize),
    (sh, sw): (usize, usize),
    pad: bool,
    groups: usize,
) -> (Vec<i64>, (usize, usize, usize)) {
    let (ph, pw) = if pad {
        ((kh - 1) / 2, (kw - 1) / 2)
    } else {
        (0, 0)
    };
    let (hp, wp) = (h + 2 * ph, w + 2 * pw);
    let mut padded = vec![0i64; hp * wp * c];
    for y in 0..h {
        for xx in 0..w {
            for ch in 0..c {
                padded[((y + ph) * wp + xx + pw) * c + ch] = x[(y * w + xx) * c + ch];
            }
        }
    }
    let oh = (hp - kh) / sh + 1;
    let ow = (wp - kw) / sw + 1;
    let cin = c / groups;
    let per_group = filters / groups;
    let mut out = vec![0i64; oh * ow * filters];
    for oy in 0..oh {
        for ox in 0..ow {
            for f in 0..filters {
                let g = f / per_group;
                let mut acc = 0;
                for ky in 0..kh {
                    for kx in 0..kw {
                        for ci in 0..cin {
                            let v = padded[((oy * sh + ky) * wp + ox * sw + kx) * c + g * cin + ci];
                            acc += v * weights[((f * kh + ky) * kw + kx) * cin + ci];
                        }
                    }
                }
                out[(oy * ow + ox) * filters + f] = acc;
            }
        }
    }
    (out, (oh, ow, filters))
}

fn conv_layer(
    filters: usize,
    k: usize,
    s: usize,
    padding: bool,
    groups: usize,
    weights: Vec<i64>,
) -> Layer {
    Layer {
        spec: LayerSpec::Conv {
            filters,
            kernel: [k, k],
            stride: [s, s],
            padding,
            groups,
            weight_scale: 15,
        },
        weights,
        bias: None,
    }
}

#[test]
fn quantizer_examples() {
    assert_eq!(quantize_weight(1.0, 4), 15);
    assert_eq!(integerize(quantize_weight(1.0, 4), 4, 15), 15);
    assert_eq!(quantize_weight(0.0, 4), 0);
    assert_eq!(quantize_weight(0.0, 8), 0);
    // round(0.5 · 15) = round(7.5) = 8, i.e. 8/15; at Δ_w = 15 that is 8
    assert_eq!(quantize_weight(0.5, 4), 8);
    assert_eq!(integerize(8, 4, 15), 8);
    assert_eq!(quantize_weight(-1.7, 4), -15);
}

#[test]
fn identity_kernel_scales_the_input() {
    let x = IntTensor::from_i64(Shape::new(3, 3, 1), &[1, -2, 3, 4, 5, -6, 7, 8, 9], 4).unwrap();
    let y = conv2d(&x, &conv_layer(1, 1, 1, false, 1, vec![15])).unwrap();
    assert_eq!(ints(&y), vec![15, -30, 45, 60, 75, -90, 105, 120, 135]);
    assert_eq!(y.scale(), &60u32.into());
}

#[test]
fn architecture_shapes() {
    let mnist = NetworkSpec::mnist().shapes().unwrap();
    assert_eq!(mnist[1], Shape::new(12, 12, 5));
    assert_eq!(mnist[3], Shape::new(4, 4, 50));
    assert_eq!(mnist[5], Shape::new(1, 1, 10));
    assert_eq!(NetworkSpec::mnist().input_scale, 4);

    let cifar = NetworkSpec::cifar10();
    let s = cifar.shapes().unwrap();
    assert_eq!(cifar.layers.len(), 11);
    assert_eq!(s[1], Shape::new(32, 32, 32));
    assert_eq!(s[3], Shape::new(16, 16, 32));
    assert_eq!(s[4], Shape::new(16, 16, 64));
    assert_eq!(s[6], Shape::new(8, 8, 64));
    assert_eq!(s[7], Shape::new(8, 8, 128));
    assert_eq!(s[9], Shape::new(4, 4, 128));
    assert_eq!(s[10], Shape::new(1, 1, 256));
    assert_eq!(s[11], Shape::new(1, 1, 10));
    let scales: Vec<u64> = cifar
        .layers
        .iter()
        .filter_map(|l| match *l {
            LayerSpec::Conv { weight_scale, .. }
            | LayerSpec::FullyConnected { weight_scale, .. } => Some(weight_scale),
            _ => None,
        })
        .collect();
    assert_eq!(cifar.input_scale, 255);
    assert_eq!(scales, vec![10000, 4095, 10000, 1023, 63]);
}

#[test]
fn square_and_pool_examples() {
    let x = IntTensor::from_i64(Shape::new(1, 2, 1), &[2, -3], 5).unwrap();
    let y = square_layer(&x);
    assert_eq!(ints(&y), vec![4, 9]);
    assert_eq!(y.scale(), &25u32.into());

    let x = IntTensor::from_i64(Shape::new(2, 2, 1), &[1, 2, 3, 4], 3).unwrap();
    let y = avg_pool(&x, 2, 2).unwrap();
    assert_eq!(ints(&y), vec![10]);
    assert_eq!(y.scale(), &12u32.into());
}

#[test]
fn fully_connected_matches_dot_products() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let shape = Shape::new(2, 3, 2);
    let x: Vec<i64> = (0..12).map(|_| rng.gen_range(-50..50)).collect();
    let w: Vec<i64> = (0..36).map(|_| rng.gen_range(-15..=15)).collect();
    let layer = Layer {
        spec: LayerSpec::FullyConnected {
            outputs: 3,
            weight_scale: 15,
        },
        weights: w.clone(),
        bias: None,
    };
    let y = fully_connected(&IntTensor::from_i64(shape, &x, 1).unwrap(), &layer).unwrap();
    let want: Vec<i64> = (0..3)
        .map(|o| (0..12).map(|i| w[o * 12 + i] * x[i]).sum())
        .collect();
    assert_eq!(ints(&y), want);
    assert_eq!(y.shape(), Shape::new(1, 1, 3));
}

#[test]
fn conv_matches_sliding_window_on_6x6() {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for _ in 0..200 {
        let x: Vec<i64> = (0..36).map(|_| rng.gen_range(-100..100)).collect();
        let w: Vec<i64> = (0..9).map(|_| rng.gen_range(-15..=15)).collect();
        let y = conv2d(
            &IntTensor::from_i64(Shape::new(6, 6, 1), &x, 1).unwrap(),
            &conv_layer(1, 3, 1, false, 1, w.clone()),
        )
        .unwrap();
        let (want, dims) = naive_conv(&x, (6, 6, 1), &w, 1, (3, 3), (1, 1), false, 1);
        assert_eq!(dims, (4, 4, 1));
        assert_eq!(ints(&y), want);
    }
}

#[test]
fn shape_errors() {
    let x = IntTensor::from_i64(Shape::new(2, 2, 1), &[0; 4], 1).unwrap();
    assert!(matches!(
        conv2d(&x, &conv_layer(1, 3, 1, false, 1, vec![0; 9])),
        Err(Error::Shape(_))
    ));
    assert!(conv2d(&x, &conv_layer(1, 1, 1, false, 1, vec![0; 2])).is_err());
    let model =
        QuantizedModel::random(&NetworkSpec::toy(), 4, &mut ChaCha20Rng::seed_from_u64(3)).unwrap();
    assert!(matches!(forward(&model, &x), Err(Error::Shape(_))));
}

#[test]
fn zero_image_gives_zero_logits_and_class_0() {
    let model = common::mnist_model();
    let x = IntTensor::from_pixels(Shape::new(28, 28, 1), &[0; 784], 4).unwrap();
    let y = forward(&model, &x).unwrap();
    assert!(y.data().iter().all(|v| *v == BigInt::from(0)));
    assert_eq!(classify(y.data()), 0);
}

#[test]
fn classify_breaks_ties_low() {
    let v = |xs: &[i64]| xs.iter().map(|&x| BigInt::from(x)).collect::<Vec<_>>();
    assert_eq!(classify(&v(&[1, 5, 5, -2])), 1);
    assert_eq!(classify(&v(&[-3, -3])), 0);
    assert_eq!(classify(&v(&[-9, -1, -4])), 1);
}

#[test]
fn fixture_logits_match_the_recorded_golden_file() {
    let model = common::mnist_model();
    let golden = common::golden_logits();
    let images = common::mnist_images(0, golden.len());
    let logits = forward_batch(&model, &images).unwrap();
    assert_eq!(logits[0], golden[0]);
    assert_eq!(logits, golden);
}

#[test]
fn fixture_accuracy_is_reasonable() {
    let model = common::mnist_model();
    let labels = common::mnist_labels();
    let images = common::mnist_images(0, 500);
    let hits = forward_batch(&model, &images)
        .unwrap()
        .iter()
        .zip(&labels)
        .filter(|(l, &y)| classify(l) == y as usize)
        .count();
    assert!(hits >= 400, "{hits}/500");
}

#[test]
fn model_json_roundtrip_and_validation() {
    let model = common::mnist_model();
    assert_eq!(model.bit_width, 4);
    assert_eq!(QuantizedModel::from_json(&model.to_json()).unwrap(), model);
    let mut broken = model.clone();
    broken.layers[0].weights.pop();
    assert!(matches!(
        QuantizedModel::from_json(&broken.to_json()),
        Err(Error::Model(_))
    ));
    let mut off_grid = model.clone();
    off_grid.layers[0].weights[0] = 16;
    assert!(QuantizedModel::from_json(&off_grid.to_json()).is_err());
    assert!(QuantizedModel::from_json("{\"format\": \"other\"}").is_err());
}

#[test]
fn mnist_counts() {
    let audit = count_ops(&NetworkSpec::mnist()).unwrap();
    let per_layer: Vec<(u64, u64)> = audit
        .layers
        .iter()
        .map(|l| (l.counts.mult_plain, l.counts.square))
        .collect();
    assert_eq!(
        per_layer,
        vec![(18_000, 0), (0, 720), (20_000, 0), (0, 800), (8_000, 0)]
    );
    assert_eq!(
        audit.total,
        OpCounts {
            mult_plain: 46_000,
            square: 1_520
        }
    );
    assert_eq!(audit.layers[0].inputs, 784);
}

#[test]
fn single_fully_connected_800_to_10() {
    let spec = NetworkSpec {
        name: "fc".into(),
        input: Shape::new(4, 4, 50),
        input_scale: 1,
        layers: vec![LayerSpec::FullyConnected {
            outputs: 10,
            weight_scale: 15,
        }],
    };
    assert_eq!(
        count_ops(&spec).unwrap().total,
        OpCounts {
            mult_plain: 8_000,
            square: 0
        }
    );
}

#[test]
fn cifar_counts_follow_the_tap_formula() {
    let audit = count_ops(&NetworkSpec::cifar10()).unwrap();
    let squares: Vec<u64> = audit
        .layers
        .iter()
        .map(|l| l.counts.square)
        .filter(|&s| s > 0)
        .collect();
    assert_eq!(squares, vec![32_768, 16_384, 8_192]);
    assert_eq!(audit.total.square, 57_344);
    // same-padded 3x3 on an h x w map touches (3h-2)(3w-2) input pixels per
    // (filter, input channel) pair
    let taps = |hw: u64, cin: u64, f: u64| (3 * hw - 2) * (3 * hw - 2) * cin * f;
    let expected = [
        taps(32, 3, 32),
        0,
        0,
        taps(16, 32, 64),
        0,
        0,
        taps(8, 64, 128),
        0,
        0,
        2048 * 256,
        256 * 10,
    ];
    let got: Vec<u64> = audit.layers.iter().map(|l| l.counts.mult_plain).collect();
    assert_eq!(got, expected);
}

#[test]
fn fixture_model_skips_zero_weights() {
    let model = common::mnist_model();
    let counts = count_model_ops(&model).unwrap().total;
    let nonzero = |i: usize| model.layers[i].weights.iter().filter(|&&w| w != 0).count() as u64;
    // layer 1: every weight is used at all 144 positions; layer 3: 16
    // positions; layer 5 is dense
    assert_eq!(
        counts.mult_plain,
        nonzero(0) * 144 + nonzero(2) * 16 + nonzero(4)
    );
    assert_eq!(counts.square, 1_520);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conv_matches_naive_oracle(
        seed in any::<u64>(),
        h in 3usize..8,
        w in 3usize..8,
        groups in 1usize..3,
        k in prop::sample::select(vec![1usize, 2, 3]),
        s in 1usize..3,
        pad in any::<bool>(),
    ) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let c = 2 * groups;
        let filters = 2 * groups;
        let x: Vec<i64> = (0..h * w * c).map(|_| rng.gen_range(-60..60)).collect();
        let wts: Vec<i64> = (0..filters * k * k * (c / groups)).map(|_| rng.gen_range(-15..=15)).collect();
        let layer = conv_layer(filters, k, s, pad, groups, wts.clone());
        let y = conv2d(&IntTensor::from_i64(Shape::new(h, w, c), &x, 1).unwrap(), &layer).unwrap();
        let (want, (oh, ow, of)) = naive_conv(&x, (h, w, c), &wts, filters, (k, k), (s, s), pad, groups);
        prop_assert_eq!(y.shape(), Shape::new(oh, ow, of));
        prop_assert_eq!(ints(&y), want);
    }

    #[test]
    fn forward_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let model = QuantizedModel::random(&NetworkSpec::toy(), 4, &mut rng).unwrap();
        let px: Vec<u8> = (0..64).map(|_| rng.gen()).collect();
        let x = IntTensor::from_pixels(model.input, &px, 4).unwrap();
        prop_assert_eq!(forward(&model, &x).unwrap(), forward(&model, &x).unwrap());
    }
}
