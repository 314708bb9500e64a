use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Orthonormal DCT-II basis for input length `n`, truncated to `n_out` rows.
#[derive(Debug, Clone)]
pub struct DctPlan {
    n: usize,
    n_out: usize,
    /// `table[k * n + i] = s(k) * cos(pi * k * (2i + 1) / (2n))`
    table: Vec<f64>,
}

impl DctPlan {
    pub fn new(n: usize, n_out: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("DCT of an empty sequence".into()));
        }
        if n_out > n {
            return Err(Error::Domain(format!(
                "requested {n_out} DCT coefficients from a length-{n} input"
            )));
        }
        let mut table = Vec::with_capacity(n * n_out);
        for k in 0..n_out {
            let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            for i in 0..n {
                table.push(s * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos());
            }
        }
        Ok(Self { n, n_out, table })
    }

    pub fn input_len(&self) -> usize {
        self.n
    }

    pub fn output_len(&self) -> usize {
        self.n_out
    }

    /// Writes the first `n_out` coefficients of `v` into `out`.
    ///
    /// For k > 0 the basis sums to zero, so subtracting `v[0]` first leaves
    /// the result unchanged analytically while making every AC coefficient of
    /// a constant input exactly zero.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        let n = self.n;
        let base = v[0];
        for (k, o) in out.iter_mut().enumerate().take(self.n_out) {
            let row = &self.table[k * n..(k + 1) * n];
            *o = if k == 0 {
                row.iter().zip(v).map(|(c, x)| c * x).sum()
            } else {
                row.iter().zip(v).map(|(c, x)| c * (x - base)).sum()
            };
        }
    }
}

/// Orthonormal DCT-II of `v`, keeping the first `n_out` coefficients.
pub fn dct2(v: &[f64], n_out: usize) -> Result<Vec<f64>> {
    let plan = DctPlan::new(v.len(), n_out)?;
    let mut out = vec![0.0; n_out];
    plan.apply_into(v, &mut out);
    Ok(out)
}

/// Inverse of the full-length orthonormal DCT-II (a scaled DCT-III).
pub fn idct2(c: &[f64]) -> Result<Vec<f64>> {
    let n = c.len();
    if n == 0 {
        return Err(Error::Domain("inverse DCT of an empty sequence".into()));
    }
    Ok((0..n)
        .map(|i| {
            c.iter()
                .enumerate()
                .map(|(k, &ck)| {
                    let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                    s * ck * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos()
                })
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn naive(v: &[f64]) -> Vec<f64> {
        let n = v.len() as f64;
        (0..v.len())
            .map(|k| {
                let s = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
                let mut acc = 0.0;
                for (i, &x) in v.iter().enumerate() {
                    acc += x * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)).cos();
                }
                s * acc
            })
            .collect()
    }

    #[test]
    fn constant_vector_is_dc_only() {
        assert_eq!(dct2(&[1.0; 4], 4).unwrap(), vec![2.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let v: Vec<f64> = (0..16).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let fast = dct2(&v, 16).unwrap();
            for (a, b) in fast.iter().zip(naive(&v)) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn inverse_recovers_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let v: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let back = idct2(&dct2(&v, 32).unwrap()).unwrap();
            for (a, b) in back.iter().zip(&v) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn truncation_and_errors() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0];
        let full = dct2(&v, 5).unwrap();
        assert_eq!(dct2(&v, 2).unwrap(), full[..2].to_vec());
        assert!(matches!(dct2(&[], 0), Err(Error::Domain(_))));
        assert!(matches!(dct2(&v, 6), Err(Error::Domain(_))));
    }
}
