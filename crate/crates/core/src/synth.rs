//! Synthetic measurement generators with complex ground truth.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sampling::{CircleGrid, ComplexSamples, ModulusField};

/// The non-origin zero of the first example, `0.00869 / 0.1867`.
pub const EXAMPLE1_ZERO: f64 = 0.00869 / 0.1867;
/// Origin multiplicity of the first example.
pub const EXAMPLE1_ORIGIN_ORDER: usize = 5;
/// Zero count of the second example.
pub const EXAMPLE2_ZEROS: usize = 10;
/// Largest zero modulus drawn for the second example.
pub const EXAMPLE2_MAX_MODULUS: f64 = 0.9;

/// Measurements on a set of circles together with the complex values they came from.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub field: ModulusField,
    /// Complex samples on every circle of `field`, same order.
    pub truth: Vec<ComplexSamples>,
    /// Zeros of the generating function, origin zeros included.
    pub zeros: Vec<Complex64>,
}

/// `(0.1867 z^6 - 0.00869 z^5) / ((1 - 0.7842 z)(1 - 0.2669 z))`.
pub fn example1(z: Complex64) -> Complex64 {
    (0.1867 * z.powu(6) - 0.00869 * z.powu(5)) / ((1.0 - 0.7842 * z) * (1.0 - 0.2669 * z))
}

/// `prod (z - a) / (1 - conj(a) z)`.
pub fn blaschke_unnormalized(zeros: &[Complex64], z: Complex64) -> Complex64 {
    zeros.iter().map(|&a| (z - a) / (1.0 - a.conj() * z)).product()
}

/// Samples `f` on the unit circle and on every radius in `radii`.
pub fn sample_function(
    f: impl Fn(Complex64) -> Complex64,
    n: usize,
    radii: &[f64],
    zeros: Vec<Complex64>,
) -> Result<Synthetic> {
    let mut rs: Vec<f64> = radii.iter().copied().filter(|&r| r != 1.0).collect();
    rs.push(1.0);
    let truth: Vec<ComplexSamples> =
        rs.iter().map(|&r| Ok(ComplexSamples::from_fn(CircleGrid::new(n, r)?, &f))).collect::<Result<_>>()?;
    let field = ModulusField::new(truth.iter().map(ComplexSamples::modulus).collect())?;
    let mut truth = truth;
    truth.sort_by(|a, b| a.rho().total_cmp(&b.rho()));
    Ok(Synthetic { field, truth, zeros })
}

pub fn gen_example1(n: usize, radii: &[f64]) -> Result<Synthetic> {
    if n < 16 {
        return Err(Error::InvalidGrid(format!("example 1 needs n >= 16, got {n}")));
    }
    let mut zeros = vec![Complex64::new(0.0, 0.0); EXAMPLE1_ORIGIN_ORDER];
    zeros.push(Complex64::new(EXAMPLE1_ZERO, 0.0));
    sample_function(example1, n, radii, zeros)
}

/// Product of `(z - a)/(1 - conj(a) z)` over the given zeros.
pub fn gen_example2(zeros: &[Complex64], n: usize, radii: &[f64]) -> Result<Synthetic> {
    if let Some(a) = zeros.iter().find(|a| !(a.norm() < 1.0)) {
        return Err(Error::InvalidArgument(format!("zero {a} is not inside the unit disc")));
    }
    let zs = zeros.to_vec();
    sample_function(|z| blaschke_unnormalized(&zs, z), n, radii, zs.clone())
}

/// Ten zeros with modulus uniform in `[0, 0.9]` and angle uniform in `[0, 2 pi)`.
pub fn draw_example2_zeros(seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..EXAMPLE2_ZEROS)
        .map(|_| {
            let r = rng.random_range(0.0..=EXAMPLE2_MAX_MODULUS);
            let t = rng.random_range(0.0..TAU);
            Complex64::from_polar(r, t)
        })
        .collect()
}

/// Random zero set with `|a| <= max_modulus` (area-uniform) and pairwise
/// distance at least `separation`.
pub fn draw_separated_zeros(rng: &mut impl Rng, count: usize, max_modulus: f64, separation: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(count);
    while out.len() < count {
        let r = max_modulus * rng.random::<f64>().sqrt();
        let a = Complex64::from_polar(r, TAU * rng.random::<f64>());
        if out.iter().all(|b| (a - b).norm() >= separation) {
            out.push(a);
        }
    }
    out
}

/// `count` radii equispaced in `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_values() {
        assert_eq!(example1(Complex64::new(0.0, 0.0)).norm(), 0.0);
        assert!(example1(Complex64::new(EXAMPLE1_ZERO, 0.0)).norm() < 1e-15);
        let s = gen_example1(64, &[0.7]).unwrap();
        let expected = (0.1867f64 - 0.00869) / ((1.0 - 0.7842) * (1.0 - 0.2669));
        assert!((s.field.boundary().values()[0] - expected).abs() < 1e-12);
        assert!((expected - 1.125).abs() < 1e-3);
        assert!(s.field.boundary().values().iter().all(|&v| v > 0.0));
        assert_eq!(s.field.interior_radii(), vec![0.7]);
        assert!(gen_example1(8, &[]).is_err());
    }

    #[test]
    fn example2_boundary_is_unimodular() {
        let z10 = gen_example2(&[Complex64::new(0.0, 0.0); 10], 32, &[0.5]).unwrap();
        assert!(z10.field.circle(0.5).unwrap().values().iter().all(|v| (v - 0.5f64.powi(10)).abs() < 1e-15));
        let s = gen_example2(&draw_example2_zeros(7), 64, &[]).unwrap();
        assert!(s.field.boundary().values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(gen_example2(&[Complex64::new(1.0, 0.0)], 16, &[]).is_err());
    }

    #[test]
    fn seeded_draw_is_reproducible() {
        let a = draw_example2_zeros(42);
        assert_eq!(a, draw_example2_zeros(42));
        assert_ne!(a, draw_example2_zeros(43));
        assert!(a.iter().all(|z| z.norm() <= EXAMPLE2_MAX_MODULUS));
        let f1 = gen_example2(&a, 1024, &[0.8]).unwrap();
        let f2 = gen_example2(&a, 1024, &[0.8]).unwrap();
        assert_eq!(f1.field, f2.field);
    }
}
