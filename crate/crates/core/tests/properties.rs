use std::f64::consts::TAU;

use hardy_retrieval::factorization::{factor_modulus, outer_boundary};
use hardy_retrieval::hilbert::hilbert_mqm_on_nodes;
use hardy_retrieval::paraconj::{laurent_coeffs, mqpc_retrieve, pr_boundary, PencilConfig};
use hardy_retrieval::report::match_zeros;
use hardy_retrieval::sampling::{load_complex_samples, load_modulus_field, store_modulus_field, write_complex_csv};
use hardy_retrieval::synth::{blaschke_unnormalized, gen_example2};
use hardy_retrieval::{BlaschkeProduct, CircleGrid, ComplexSamples, ModulusField, RealSamples};
use num_complex::Complex64;
use proptest::prelude::*;

const N: usize = 64;

fn trig(coeffs: &[(f64, f64)]) -> RealSamples {
    RealSamples::from_fn(CircleGrid::new(N, 1.0).unwrap(), |x| {
        coeffs.iter().enumerate().map(|(k, &(a, b))| a * (k as f64 * x).cos() + b * (k as f64 * x).sin()).sum()
    })
}

fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..N / 2)
}

fn disc_point(max: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max, 0.0..TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn zero_set() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(disc_point(0.95), 1..8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hilbert_is_linear(a in coeffs(), b in coeffs(), s in -3.0..3.0f64) {
        let (fa, fb) = (trig(&a), trig(&b));
        let sum = RealSamples::new(
            fa.grid().clone(),
            fa.values().iter().zip(fb.values()).map(|(x, y)| x + s * y).collect(),
        ).unwrap();
        let (qa, qb, qs) = (
            hilbert_mqm_on_nodes(&fa).unwrap(),
            hilbert_mqm_on_nodes(&fb).unwrap(),
            hilbert_mqm_on_nodes(&sum).unwrap(),
        );
        for j in 0..N {
            prop_assert!((qs.values()[j] - qa.values()[j] - s * qb.values()[j]).abs() < 1e-11);
        }
    }

    #[test]
    fn double_transform_negates_zero_mean(c in coeffs()) {
        let mut c = c;
        c[0] = (0.0, 0.0);
        let f = trig(&c);
        let qq = hilbert_mqm_on_nodes(&hilbert_mqm_on_nodes(&f).unwrap()).unwrap();
        for (a, b) in qq.values().iter().zip(f.values()) {
            prop_assert!((a + b).abs() < 1e-11);
        }
    }

    #[test]
    fn blaschke_unimodular_and_contractive(zs in zero_set(), z in disc_point(0.999), t in 0.0..TAU) {
        let b = BlaschkeProduct::from_zeros(&zs).unwrap();
        prop_assert!((b.eval(Complex64::from_polar(1.0, t)).norm() - 1.0).abs() < 1e-12);
        prop_assert!(b.eval(z).norm() < 1.0 + 1e-15);
        prop_assert!((b.modulus(z) - b.eval(z).norm()).abs() < 1e-12);
        prop_assert!(zs.iter().all(|&a| factor_modulus(a, a) == 0.0));
    }

    #[test]
    fn blaschke_ignores_zero_order(zs in zero_set(), z in disc_point(0.99)) {
        let mut rev = zs.clone();
        rev.reverse();
        let (a, b) = (BlaschkeProduct::from_zeros(&zs).unwrap(), BlaschkeProduct::from_zeros(&rev).unwrap());
        prop_assert!((a.eval(z) - b.eval(z)).norm() < 1e-12);
    }

    #[test]
    fn outer_preserves_boundary_modulus(c in coeffs()) {
        let f = trig(&c).map(|v| v.exp());
        let o = outer_boundary(&f).unwrap();
        for (g, v) in o.boundary_trace().values().iter().zip(f.values()) {
            prop_assert!((g.norm() - v).abs() <= 4.0 * f64::EPSILON * v);
        }
    }

    #[test]
    fn laurent_hermitian(zs in prop::collection::vec(disc_point(0.9), 1..6), r in 0.5..0.95f64) {
        let b = RealSamples::from_fn(CircleGrid::new(256, r).unwrap(), |t| {
            blaschke_unnormalized(&zs, Complex64::from_polar(r, t)).norm()
        });
        if b.values().iter().all(|&v| v > 1e-12) {
            let lc = laurent_coeffs(&pr_boundary(&b).unwrap(), 60).unwrap();
            for k in 0..=60 {
                prop_assert!((lc.get(-k) - lc.get(k).conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn field_round_trip_is_bit_exact(values in prop::collection::vec(1e-300..1e300f64, 16), rho in 0.01..0.99f64) {
        let g = |r| CircleGrid::new(16, r).unwrap();
        let field = ModulusField::new(vec![
            RealSamples::new(g(rho), values.clone()).unwrap(),
            RealSamples::new(g(1.0), values.iter().rev().copied().collect()).unwrap(),
        ]).unwrap();
        let mut buf = Vec::new();
        store_modulus_field(&field, &mut buf).unwrap();
        prop_assert_eq!(load_modulus_field(buf.as_slice()).unwrap(), field);

        let cs = vec![ComplexSamples::new(g(rho), values.iter().map(|&v| Complex64::new(v, -1.0 / v)).collect()).unwrap()];
        let mut buf = Vec::new();
        write_complex_csv(&cs, &mut buf).unwrap();
        prop_assert_eq!(load_complex_samples(buf.as_slice()).unwrap(), cs);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rotation_rotates_zeros(shift in 0usize..256, seed in 0u64..1000) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let zs = hardy_retrieval::synth::draw_separated_zeros(&mut rng, 4, 0.7, 0.1);
        let s = gen_example2(&zs, 256, &[0.8]).unwrap();
        let rotated = s.field.rotate(shift);
        let res = mqpc_retrieve(&rotated, &PencilConfig::default()).unwrap();
        let phase = Complex64::from_polar(1.0, TAU * shift as f64 / 256.0);
        let expected: Vec<Complex64> = zs.iter().map(|a| a * phase).collect();
        prop_assert!(match_zeros(&res.inner.all_zeros(), &expected).max_distance() < 1e-6);
    }
}
