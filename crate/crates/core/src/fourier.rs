//! Truncated Fourier series on `[0, 2 pi)` and spectra of uniformly sampled periodic data.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// `f(theta) = a0 + sum_k a[k-1] cos(k theta) + b[k-1] sin(k theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    pub a0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl FourierSeries {
    pub fn zero(harmonics: usize) -> Self {
        Self {
            a0: 0.0,
            a: vec![0.0; harmonics],
            b: vec![0.0; harmonics],
        }
    }

    pub fn harmonics(&self) -> usize {
        self.a.len()
    }

    /// Least-squares fit with `harmonics` terms; reduced to `(n - 1) / 2`
    /// when there are too few samples.
    pub fn fit(theta: &[f64], values: &[f64], harmonics: usize) -> Result<Self> {
        let n = theta.len();
        if n != values.len() {
            return Err(Error::arg("values", "length differs from theta"));
        }
        if n < 3 {
            return Err(Error::arg("theta", "need at least 3 samples"));
        }
        let k = harmonics.min((n - 1) / 2);
        let cols = 2 * k + 1;
        let m = DMatrix::from_fn(n, cols, |r, c| {
            let th = theta[r];
            match c {
                0 => 1.0,
                c if c % 2 == 1 => (((c + 1) / 2) as f64 * th).cos(),
                c => ((c / 2) as f64 * th).sin(),
            }
        });
        let rhs = DVector::from_column_slice(values);
        let coef = m
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::arg("theta", e.to_string()))?;
        Ok(Self {
            a0: coef[0],
            a: (0..k).map(|i| coef[2 * i + 1]).collect(),
            b: (0..k).map(|i| coef[2 * i + 2]).collect(),
        })
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let th = theta.rem_euclid(TAU);
        let (s1, c1) = th.sin_cos();
        // Chebyshev-style recurrence for cos(k th), sin(k th)
        let (mut ck, mut sk) = (1.0_f64, 0.0_f64);
        let mut acc = self.a0;
        for (a, b) in self.a.iter().zip(&self.b) {
            let c = ck * c1 - sk * s1;
            let s = sk * c1 + ck * s1;
            ck = c;
            sk = s;
            acc += a * ck + b * sk;
        }
        acc
    }

    /// Magnitude of harmonic `k` (1-based).
    pub fn amplitude(&self, k: usize) -> f64 {
        if k == 0 {
            return self.a0.abs();
        }
        self.a
            .get(k - 1)
            .map(|a| a.hypot(self.b[k - 1]))
            .unwrap_or(0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            a0: self.a0 * c,
            a: self.a.iter().map(|v| v * c).collect(),
            b: self.b.iter().map(|v| v * c).collect(),
        }
    }

    /// RMS residual of the fit against samples.
    pub fn rms_residual(&self, theta: &[f64], values: &[f64]) -> f64 {
        let ss: f64 = theta
            .iter()
            .zip(values)
            .map(|(t, v)| (self.eval(*t) - v).powi(2))
            .sum();
        (ss / theta.len().max(1) as f64).sqrt()
    }
}

/// Complex spectrum `c_k = (1/N) sum_n x_n exp(-i k 2 pi n / N)` for `k = 0..=N/2`.
pub fn spectrum(samples: &[f64]) -> Vec<Complex<f64>> {
    let n = samples.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.truncate(n / 2 + 1);
    buf.iter_mut().for_each(|c| *c /= n as f64);
    buf
}

/// Power in each one-sided harmonic (DC excluded), index 0 = fundamental.
pub fn harmonic_powers(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let spec = spectrum(samples);
    spec.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| {
            let p = c.norm_sqr();
            // the Nyquist bin has no mirror image
            if n % 2 == 0 && k == n / 2 {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}
