//! Discrete Fourier helpers on the equispaced lattice.
//!
//! Coefficients are normalized so that `c_k = (1/n) sum_j v_j e^{-i k x_j}`,
//! i.e. the trapezoid approximation of the Fourier integral. Index `k` of the
//! returned vector holds frequency `k` for `k < n/2` and `k - n` above.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Normalized forward DFT.
pub fn dft(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

pub fn dft_real(values: &[f64]) -> Vec<Complex64> {
    let buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft(&buf)
}

/// Inverse of [`dft`]: `v_j = sum_k c_k e^{i k x_j}`.
pub fn idft(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    FftPlanner::new().plan_fft_inverse(buf.len()).process(&mut buf);
    buf
}

/// Signed frequency stored at index `k` of an `n`-point spectrum.
pub fn frequency(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Degree-`n/2` trigonometric interpolant of real samples on an even lattice.
///
/// The Nyquist mode is split symmetrically, so it contributes
/// `c_{n/2} cos(n t / 2)` and has zero derivative at the nodes.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    coeffs: Vec<Complex64>,
}

impl TrigInterpolant {
    pub fn new(values: &[f64]) -> Self {
        debug_assert!(values.len().is_multiple_of(2));
        Self { coeffs: dft_real(values) }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.n();
        let half = n / 2;
        let mut acc = self.coeffs[0].re;
        for k in 1..half {
            acc += 2.0 * (self.coeffs[k] * Complex64::from_polar(1.0, k as f64 * t)).re;
        }
        acc + self.coeffs[half].re * (half as f64 * t).cos()
    }

    /// Spectral derivative of the interpolant at the nodes.
    pub fn derivative_on_nodes(&self) -> Vec<f64> {
        let n = self.n();
        let spectrum: Vec<Complex64> =
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    if 2 * k == n {
                        Complex64::new(0.0, 0.0)
                    } else {
                        c * Complex64::new(0.0, frequency(k, n) as f64)
                    }
                })
                .collect();
        idft(&spectrum).into_iter().map(|v| v.re).collect()
    }
}

/// Node angle `2*pi*j/n`.
pub fn node(j: usize, n: usize) -> f64 {
    TAU * j as f64 / n as f64
}
