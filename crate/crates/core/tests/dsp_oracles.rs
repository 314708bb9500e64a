mod support;

use ser_core::dsp::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ser_core::audio::synth_chirp;
use ser_core::dsp::{dct2, fft, inverse_mel_scale, mel_filterbank, mel_scale};
use ser_core::features::{augment_invert, augment_reverse};
use ser_core::nn::{conv2d_forward, Padding, Tensor};
use ser_core::{AudioClip, FeatureExtractor, PipelineConfig};
use support::{naive_conv, naive_dct, naive_dft, random_signal};

fn max_rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

#[test]
fn fft_matches_naive_dft_on_every_power_of_two_up_to_256() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for p in 1..=8 {
        let n = 1 << p;
        for _ in 0..5 {
            let x: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let err = max_rel(&fft(&x).unwrap(), &naive_dft(&x));
            assert!(err < 1e-9, "n={n} err={err}");
        }
    }
}

#[test]
fn dct_matches_cosine_sums() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [1, 2, 5, 16, 26, 40] {
        let v = random_signal(&mut rng, n);
        let got = dct2(&v, n).unwrap();
        for (g, e) in got.iter().zip(naive_dct(&v, n)) {
            assert!((g - e).abs() < 1e-9, "n={n}: {g} vs {e}");
        }
    }
}

#[test]
fn conv_matches_nested_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..40 {
        let (h, w) = (rng.gen_range(3..9), rng.gen_range(3..9));
        let (cin, cout) = (rng.gen_range(1..4), rng.gen_range(1..5));
        let padding = if case % 2 == 0 { Padding::Same } else { Padding::Valid };
        let x = random_signal(&mut rng, h * w * cin);
        let k = random_signal(&mut rng, 9 * cin * cout);
        let b = random_signal(&mut rng, cout);
        let got = conv2d_forward(
            &Tensor::new(vec![h, w, cin], x.clone()).unwrap(),
            &Tensor::new(vec![3, 3, cin, cout], k.clone()).unwrap(),
            &Tensor::new(vec![cout], b.clone()).unwrap(),
            padding,
        )
        .unwrap();
        let (ho, wo, want) = naive_conv(&x, h, w, cin, &k, &b, padding);
        assert_eq!(got.shape(), &[ho, wo, cout]);
        for (g, e) in got.data().iter().zip(&want) {
            assert!((g - e).abs() <= 1e-12 * e.abs().max(1.0));
        }
    }
}

#[test]
fn mel_scale_reference_points_and_round_trip() {
    assert_eq!(mel_scale(0.0).unwrap(), 0.0);
    assert!((mel_scale(700.0).unwrap() - 2595.0 * 2f64.log10()).abs() < 1e-3);
    for i in 0..100 {
        let f = 8000.0 * i as f64 / 99.0;
        let back = inverse_mel_scale(mel_scale(f).unwrap()).unwrap();
        assert!((back - f).abs() <= 1e-6 * f.max(1.0));
    }
}

#[test]
fn filterbank_centres_increase() {
    let fb = mel_filterbank(26, 1025, 16_000, 0.0, 8000.0).unwrap();
    assert!(fb.centers_hz().windows(2).all(|p| p[0] < p[1]));
}

#[test]
fn time_reversal_changes_a_chirp_window() {
    let clip = synth_chirp(200.0, 3000.0, 1.0, 16_000, 0.5).unwrap();
    let ex = FeatureExtractor::new(PipelineConfig::new(13, clip.len()).unwrap()).unwrap();
    let a = ex.extract(&clip).unwrap();
    let b = ex.extract(&augment_reverse(&clip)).unwrap();
    assert_ne!(a.as_slice(), b.as_slice());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn polarity_flip_leaves_window_bit_identical(seed in any::<u64>(), len in 2000usize..8000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let clip = AudioClip::new(random_signal(&mut rng, len), 16_000).unwrap();
        let ex = FeatureExtractor::new(PipelineConfig::new(13, 8000).unwrap()).unwrap();
        let a = ex.extract(&clip).unwrap();
        let b = ex.extract(&augment_invert(&clip)).unwrap();
        prop_assert_eq!(a.as_slice(), b.as_slice());
    }
}
