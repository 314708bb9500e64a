//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::PathBuf;

use ser_core::dsp::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ser_core::dataset::{Corpus, EmotionLabel, SampleRecord};
use ser_core::nn::Padding;

/// O(N^2) DFT straight from the definition.
pub fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// Orthonormal DCT-II by direct cosine sums.
pub fn naive_dct(v: &[f64], n_out: usize) -> Vec<f64> {
    let n = v.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * v.iter()
                .enumerate()
                .map(|(i, x)| x * (PI / n * (i as f64 + 0.5) * k as f64).cos())
                .sum::<f64>()
        })
        .collect()
}

/// 3x3 cross-correlation over an HWC input with weights `[ky][kx][cin][cout]`.
pub fn naive_conv(
    input: &[f64],
    h: usize,
    w: usize,
    cin: usize,
    weights: &[f64],
    bias: &[f64],
    padding: Padding,
) -> (usize, usize, Vec<f64>) {
    let cout = bias.len();
    let (pad, ho, wo) = match padding {
        Padding::Same => (1isize, h, w),
        Padding::Valid => (0isize, h - 2, w - 2),
    };
    let mut out = vec![0.0; ho * wo * cout];
    for oy in 0..ho {
        for ox in 0..wo {
            for co in 0..cout {
                let mut acc = bias[co];
                for ky in 0..3 {
                    for kx in 0..3 {
                        let iy = oy as isize + ky as isize - pad;
                        let ix = ox as isize + kx as isize - pad;
                        if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                            continue;
                        }
                        for ci in 0..cin {
                            let x = input[(iy as usize * w + ix as usize) * cin + ci];
                            acc += x * weights[((ky * 3 + kx) * cin + ci) * cout + co];
                        }
                    }
                }
                out[(oy * wo + ox) * cout + co] = acc;
            }
        }
    }
    (ho, wo, out)
}

pub fn rbf(a: &[f64; 2], b: &[f64; 2], gamma: f64) -> f64 {
    (-gamma * ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))).exp()
}

pub fn linear(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Every 4-distinct-point, 2-class problem on the integer grid `[0,2]^2`.
/// Label patterns are deduplicated by fixing the first label to +1.
pub fn four_point_problems() -> Vec<([[f64; 2]; 4], [f64; 4])> {
    let grid: Vec<[f64; 2]> = (0..3).flat_map(|x| (0..3).map(move |y| [x as f64, y as f64])).collect();
    let mut out = Vec::new();
    for a in 0..9 {
        for b in a + 1..9 {
            for c in b + 1..9 {
                for d in c + 1..9 {
                    let pts = [grid[a], grid[b], grid[c], grid[d]];
                    for mask in 0..8u32 {
                        let mut y = [1.0; 4];
                        for (bit, v) in y[1..].iter_mut().enumerate() {
                            if mask >> bit & 1 == 1 {
                                *v = -1.0;
                            }
                        }
                        if y.iter().all(|&v| v > 0.0) {
                            continue;
                        }
                        out.push((pts, y));
                    }
                }
            }
        }
    }
    out
}

/// Maximum of the soft-margin dual for a 4-point problem by grid search.
///
/// alpha_1..alpha_3 range over a grid on `[0, c]` and alpha_4 follows from
/// the equality constraint; the best grid point is then refined by a
/// shrinking pattern search.
pub fn four_point_oracle(k: &[[f64; 4]; 4], y: &[f64; 4], c: f64) -> f64 {
    let dual = |a: [f64; 3]| -> Option<f64> {
        let a4 = -y[3] * (a[0] * y[0] + a[1] * y[1] + a[2] * y[2]);
        if !(-1e-12..=c + 1e-12).contains(&a4) {
            return None;
        }
        let al = [a[0], a[1], a[2], a4.clamp(0.0, c)];
        let mut quad = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                quad += al[i] * al[j] * y[i] * y[j] * k[i][j];
            }
        }
        Some(al.iter().sum::<f64>() - 0.5 * quad)
    };
    let coarse = 20;
    let mut step = c / coarse as f64;
    let mut best = ([0.0; 3], dual([0.0; 3]).expect("zero is feasible"));
    for i in 0..=coarse {
        for j in 0..=coarse {
            for l in 0..=coarse {
                let a = [i as f64 * step, j as f64 * step, l as f64 * step];
                if let Some(v) = dual(a) {
                    if v > best.1 {
                        best = (a, v);
                    }
                }
            }
        }
    }
    for _ in 0..10 {
        step /= 4.0;
        for _ in 0..64 {
            let centre = best.0;
            for di in -4..=4 {
                for dj in -4..=4 {
                    for dl in -4..=4 {
                        let a = [
                            (centre[0] + di as f64 * step).clamp(0.0, c),
                            (centre[1] + dj as f64 * step).clamp(0.0, c),
                            (centre[2] + dl as f64 * step).clamp(0.0, c),
                        ];
                        if let Some(v) = dual(a) {
                            if v > best.1 {
                                best = (a, v);
                            }
                        }
                    }
                }
            }
            if best.0 == centre {
                break;
            }
        }
    }
    best.1
}

/// Eight standardized 13x26 windows, one per class: class `c` is a cosine
/// pattern with `c + 1` cycles along time.
pub fn overfit_fixture() -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut xs = Vec::new();
    for c in 0..8 {
        let mut w: Vec<f64> = (0..13 * 26)
            .map(|k| {
                let (i, j) = (k / 26, k % 26);
                (2.0 * PI * (c as f64 + 1.0) * j as f64 / 26.0 + i as f64 * 0.3).cos()
            })
            .collect();
        let m = w.iter().sum::<f64>() / w.len() as f64;
        let s = (w.iter().map(|v| (v - m).powi(2)).sum::<f64>() / w.len() as f64).sqrt();
        w.iter_mut().for_each(|v| *v = (*v - m) / s);
        xs.push(w);
    }
    (xs, (0..8).collect())
}

/// `per_class` records per emotion with RAVDESS-style ids.
pub fn synthetic_records(per_class: usize) -> Vec<SampleRecord> {
    let mut out = Vec::new();
    for label in EmotionLabel::ALL {
        for i in 0..per_class {
            out.push(SampleRecord {
                id: format!("{}-{i:03}", label.name()),
                path: PathBuf::from(format!("{}-{i:03}.wav", label.name())),
                label,
                corpus: Corpus::Ravdess,
                actor: format!("{:02}", i % 24 + 1),
                augmented_from: None,
            });
        }
    }
    out
}

/// Feature vectors whose first `n` coordinates each carry a weak class
/// signal under uniform noise, so separability grows with `n`. Coordinate
/// values do not depend on `n`.
pub fn additive_signal_features(records: &[SampleRecord], n: usize, seed: u64) -> Vec<Vec<f64>> {
    records
        .iter()
        .enumerate()
        .map(|(r, rec)| {
            let c = rec.label.code() as u64;
            let mut noise = ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            (0..n)
                .map(|j| {
                    let mut h = ChaCha8Rng::seed_from_u64(seed.wrapping_add(c * 1_000_003 + j as u64));
                    let mean: f64 = if h.gen::<bool>() { 0.3 } else { -0.3 };
                    mean + noise.gen_range(-1.0..1.0)
                })
                .collect()
        })
        .collect()
}

pub fn random_signal(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
