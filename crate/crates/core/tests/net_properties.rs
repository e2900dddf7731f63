use charuco_forge::net::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_layer(spec: LayerSpec, rng: &mut ChaCha8Rng) -> Layer<f32> {
    let mut l = Layer::zeros(spec);
    l.weight.iter_mut().for_each(|w| *w = rng.random_range(-0.5..0.5));
    l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    l
}

/// Direct nested-loop convolution with zero padding, weights `[ky][kx][cin][cout]`.
fn naive_conv(x: &Tensor3<f32>, l: &Layer<f32>, k: usize) -> Tensor3<f32> {
    let (cin, cout) = (l.spec.in_channels, l.spec.out_channels);
    let r = (k / 2) as isize;
    let mut out = Tensor3::zeros(x.h, x.w, cout);
    for y in 0..x.h {
        for xx in 0..x.w {
            for co in 0..cout {
                let mut acc = l.bias[co] as f64;
                for ky in 0..k {
                    for kx in 0..k {
                        let sy = y as isize + ky as isize - r;
                        let sx = xx as isize + kx as isize - r;
                        if sy < 0 || sx < 0 || sy >= x.h as isize || sx >= x.w as isize {
                            continue;
                        }
                        for ci in 0..cin {
                            let w = l.weight[((ky * k + kx) * cin + ci) * cout + co];
                            acc += w as f64 * x.at(sy as usize, sx as usize, ci) as f64;
                        }
                    }
                }
                let i = out.idx(y, xx, co);
                out.data[i] = acc as f32;
            }
        }
    }
    out
}

#[test]
fn forward_matches_direct_convolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let conv_a = random_layer(LayerSpec::new(LayerKind::Conv3x3, 2, 6, "a"), &mut rng);
    let relu = random_layer(LayerSpec::new(LayerKind::Relu, 6, 6, "r"), &mut rng);
    let conv_b = random_layer(LayerSpec::new(LayerKind::Conv3x3, 6, 4, "b"), &mut rng);
    let conv_c = random_layer(LayerSpec::new(LayerKind::Conv1x1, 4, 3, "c"), &mut rng);
    let x = Tensor3::from_vec(9, 11, 2, (0..9 * 11 * 2).map(|_| rng.random_range(0.0..1.0)).collect());

    let fast = conv_c.apply(&conv_b.apply(&relu.apply(&conv_a.apply(&x).unwrap()).unwrap()).unwrap()).unwrap();
    let mut oracle = naive_conv(&x, &conv_a, 3);
    oracle.data.iter_mut().for_each(|v| *v = v.max(0.0));
    let oracle = naive_conv(&naive_conv(&oracle, &conv_b, 3), &conv_c, 1);

    let max_diff = fast.data.iter().zip(&oracle.data).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
    assert_eq!(fast.shape(), oracle.shape());
    assert!(max_diff < 1e-5, "max abs diff {max_diff}");
}

#[test]
fn positive_homogeneity_without_biases() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut net = build_charuconet(0.125).unwrap();
    net.init_he_uniform(&mut rng);
    for layer in net.layers_mut() {
        layer.weight.iter_mut().for_each(|w| *w = w.abs());
    }
    let x = Tensor3::from_vec(16, 24, 1, (0..16 * 24).map(|_| rng.random_range(0.0..1.0)).collect());
    let x2 = Tensor3::from_vec(16, 24, 1, x.data.iter().map(|v| 2.0 * v).collect());
    for (a, b) in net.forward(&x).unwrap().iter().zip(net.forward(&x2).unwrap()) {
        for (&u, &v) in a.data.iter().zip(&b.data) {
            assert!((2.0 * u - v).abs() <= 1e-4 * (1.0 + v.abs()), "{u} {v}");
        }
    }
}

#[test]
fn whole_cell_translation_shifts_logits_by_one_cell() {
    // Zero padding makes border cells see the shift differently, so only
    // cells more than seven cells from every border are compared.
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut net = build_charuconet(0.125).unwrap();
    net.init_he_uniform(&mut rng);
    let (h, w) = (160, 160);
    let base: Vec<f32> = (0..(h * (w + 8))).map(|_| rng.random_range(0.0..1.0)).collect();
    let crop = |dx: usize| {
        Tensor3::from_vec(h, w, 1, (0..h).flat_map(|y| (0..w).map(move |x| (y, x))).map(|(y, x)| base[y * (w + 8) + x + dx]).collect())
    };
    // `moved` shows the same scene 8 px to the right of `still`.
    let still = net.forward(&crop(8)).unwrap();
    let moved = net.forward(&crop(0)).unwrap();
    let cells = w / 8;
    let margin = 7;
    for (a, b) in still.iter().zip(&moved) {
        for cy in margin..cells - margin {
            for cx in margin..cells - margin - 1 {
                for (u, v) in a.cell(cy, cx).iter().zip(b.cell(cy, cx + 1)) {
                    assert!((u - v).abs() < 1e-4, "cell ({cy},{cx}): {u} vs {v}");
                }
            }
        }
    }
}

#[test]
fn softmax_of_head_cells_sums_to_one() {
    let mut net = build_charuconet(0.125).unwrap();
    net.init_he_uniform(&mut ChaCha8Rng::seed_from_u64(24));
    let x = Tensor3::from_vec(16, 16, 1, (0..256).map(|i| ((i * 37) % 101) as f32 / 101.0).collect());
    for out in net.forward(&x).unwrap() {
        for y in 0..out.h {
            for x in 0..out.w {
                let s: f32 = softmax(out.cell(y, x)).iter().sum();
                assert!((s - 1.0).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn output_grid_is_input_over_eight() {
    let net = build_charuconet(0.125).unwrap();
    for (h, w) in [(8, 8), (24, 40), (64, 16)] {
        let out = net.forward(&Tensor3::zeros(h, w, 1)).unwrap();
        assert_eq!((out[0].h, out[0].w), (h / 8, w / 8));
    }
}
