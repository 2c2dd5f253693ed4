//! Zero recovery from one interior circle via the para-conjugate product (MQPC).
//!
//! `P_r(e^{it}) = |B(r e^{it})|^2` is the boundary trace of a rational
//! function whose poles inside the unit circle are `r a_k`. Its Laurent
//! coefficients come from the FFT of the samples, the principal part feeds a
//! Hankel matrix pencil, and the pencil eigenvalues are the poles. Origin
//! zeros cancel out of `P_r` entirely and are counted from the circle mean of
//! `ln P_r` instead.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::{
    factor_modulus, interior_error, outer_boundary_with, outer_modulus_interior, reconstruct, BlaschkeProduct,
    ReconstructionResult, StopReason,
};
use crate::fourier::dft_real;
use crate::minvalue::inner_modulus_field;
use crate::par::Execution;
use crate::sampling::{ModulusField, RealSamples};

/// Poles closer than this are merged into one pole of higher order.
pub const MERGE_DISTANCE: f64 = 1e-4;
/// Poles below this fraction of `r` are treated as numerical zeros.
pub const POLE_SNAP: f64 = 1e-6;
/// Largest tolerated condition number of the shifted pencil block.
pub const MAX_CONDITION: f64 = 1e12;

/// `|B(r e^{it})|^2`.
pub fn pr_boundary(inner_modulus_r: &RealSamples) -> Result<RealSamples> {
    if let Some(j) = inner_modulus_r.values().iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative or undefined modulus at node {j}")));
    }
    Ok(inner_modulus_r.map(|v| v * v))
}

/// Window `c_{-N}..c_N` of the Laurent coefficients of `P_r` on the unit circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentCoefficients {
    order: usize,
    coeffs: Vec<Complex64>,
    r: f64,
    /// Circle mean of `ln P_r`.
    log_mean: f64,
}

impl LaurentCoefficients {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn log_mean(&self) -> f64 {
        self.log_mean
    }

    /// `c_k` for `|k| <= order`.
    pub fn get(&self, k: i64) -> Complex64 {
        self.coeffs[(k + self.order as i64) as usize]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// Trapezoid coefficients `c_k = (1/n) sum_j P_r(x_j) e^{-i k x_j}`; the
/// construction radius is taken from the samples' grid.
pub fn laurent_coeffs(pr: &RealSamples, order: usize) -> Result<LaurentCoefficients> {
    let n = pr.len();
    if 2 * order + 1 > n {
        return Err(Error::OrderTooLarge { order, n });
    }
    if pr.values().iter().any(|v| !(*v > 0.0)) {
        return Err(Error::VanishesOnCircle(pr.rho()));
    }
    let spectrum = dft_real(pr.values());
    let coeffs = (-(order as i64)..=order as i64).map(|k| spectrum[k.rem_euclid(n as i64) as usize]).collect();
    let log_mean = pr.values().iter().map(|v| v.ln()).sum::<f64>() / n as f64;
    Ok(LaurentCoefficients { order, coeffs, r: pr.rho(), log_mean })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleSet {
    /// Poles with `|p| < r`, repeated according to multiplicity.
    pub inner_poles: Vec<Complex64>,
    pub origin_count: usize,
    pub discarded_outer: usize,
}

/// Eigenvalues of the shift pencil of the Hankel matrix built from `s`.
///
/// The pencil has about `len/3` columns (at least `k_max + 1`), which
/// separates close poles far better than a `k_max`-wide matrix; the numerical
/// rank, capped at `k_max`, gives the pole count.
fn pencil_poles(s: &[Complex64], k_max: usize, sigma_tol: f64) -> Result<Vec<Complex64>> {
    let l = k_max.max(s.len() / 3).min(s.len().saturating_sub(1) / 2);
    if l < k_max || s.len() < l + 2 {
        return Err(Error::InvalidArgument(format!("pole count bound {k_max} too large for {} coefficients", s.len())));
    }
    let rows = s.len() - l;
    let h = DMatrix::from_fn(rows, l + 1, |i, j| s[i + j]);
    let svd = h.svd(false, true);
    let sigma = &svd.singular_values;
    let s0 = sigma.max();
    if !(s0 > 0.0) {
        return Ok(vec![]);
    }
    let k = rank_by_gap(sigma.as_slice(), sigma_tol).min(k_max);
    if k == 0 {
        return Ok(vec![]);
    }
    let vt = svd.v_t.as_ref().expect("right singular vectors requested");
    // columns spanning the row space of H
    let v = DMatrix::from_fn(l + 1, k, |i, j| vt[(j, i)]);
    let v1 = v.rows(0, l).into_owned();
    let v2 = v.rows(1, l).into_owned();
    let sv = v1.clone().svd(true, true);
    let (smax, smin) = (sv.singular_values.max(), sv.singular_values.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let pinv = sv.pseudo_inverse(0.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let m = pinv * v2;
    let schur = Schur::try_new(m, f64::EPSILON, 0).ok_or(Error::IllConditioned(f64::INFINITY))?;
    let (_, t) = schur.unpack();
    Ok((0..k).map(|i| t[(i, i)]).collect())
}

/// Numerical rank: among the singular values above `tol * s0`, the cut is
/// placed at the largest ratio between consecutive values.
fn rank_by_gap(sigma: &[f64], tol: f64) -> usize {
    let s0 = sigma[0];
    let above = sigma.iter().filter(|&&v| v > tol * s0).count();
    (0..above)
        .map(|i| {
            let next = sigma.get(i + 1).copied().unwrap_or(0.0);
            (i + 1, if next > 0.0 { sigma[i] / next } else { f64::INFINITY })
        })
        .fold((0, 0.0), |best, (k, g)| if g > best.1 { (k, g) } else { best })
        .0
}

/// Clusters poles within [`MERGE_DISTANCE`]; each cluster becomes its mean,
/// repeated once per member.
fn merge_clusters(mut poles: Vec<Complex64>) -> Vec<Complex64> {
    poles.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut assigned = vec![false; poles.len()];
    let mut out = Vec::with_capacity(poles.len());
    for i in 0..poles.len() {
        if assigned[i] {
            continue;
        }
        let mut members = vec![i];
        assigned[i] = true;
        let mut grew = true;
        while grew {
            grew = false;
            for j in 0..poles.len() {
                if !assigned[j] && members.iter().any(|&m| (poles[m] - poles[j]).norm() < MERGE_DISTANCE) {
                    assigned[j] = true;
                    members.push(j);
                    grew = true;
                }
            }
        }
        let mean = members.iter().map(|&m| poles[m]).sum::<Complex64>() / members.len() as f64;
        out.extend(std::iter::repeat_n(mean, members.len()));
    }
    out
}

/// Poles of `P_r` inside `|z| < r` from the negative-index coefficients.
pub fn extract_inner_poles(lc: &LaurentCoefficients, k_max: usize) -> Result<PoleSet> {
    extract_inner_poles_with(lc, k_max, PencilConfig::default().sigma_tol)
}

pub fn extract_inner_poles_with(lc: &LaurentCoefficients, k_max: usize, sigma_tol: f64) -> Result<PoleSet> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("pole count bound must be at least 1".into()));
    }
    let r = lc.r;
    let s: Vec<Complex64> = (1..=lc.order as i64).map(|q| lc.get(-q)).collect();
    let poles = merge_clusters(pencil_poles(&s, k_max, sigma_tol)?);
    let mut inner_poles = Vec::new();
    let mut discarded_outer = 0;
    for p in poles {
        if p.norm() < POLE_SNAP * r {
            continue;
        } else if p.norm() < r {
            inner_poles.push(p);
        } else {
            discarded_outer += 1;
        }
    }
    let origin_count = origin_count(lc, &inner_poles);
    Ok(PoleSet { inner_poles, origin_count, discarded_outer })
}

/// Jensen count of origin zeros: the circle mean of `ln |B|` at radius `r` is
/// `m ln r + sum ln max(r, |a|)`.
fn origin_count(lc: &LaurentCoefficients, inner_poles: &[Complex64]) -> usize {
    let r = lc.r;
    if !(r < 1.0) {
        return 0;
    }
    let known: f64 = inner_poles.iter().map(|p| r.max(p.norm() / r).ln()).sum();
    let m = ((0.5 * lc.log_mean - known) / r.ln()).round();
    if m > 0.0 {
        m as usize
    } else {
        0
    }
}

/// Poles of `P_r` outside the unit circle, `1/(r conj(a))`, from the
/// positive-index coefficients.
pub fn extract_outer_poles(lc: &LaurentCoefficients, k_max: usize, sigma_tol: f64) -> Result<Vec<Complex64>> {
    let s: Vec<Complex64> = (1..=lc.order as i64).map(|q| lc.get(q)).collect();
    let mu = merge_clusters(pencil_poles(&s, k_max, sigma_tol)?);
    Ok(mu.into_iter().filter(|m| m.norm() >= POLE_SNAP * lc.r).map(|m| 1.0 / m).collect())
}

/// `a = p / r` for every inner pole; origin poles become the multiplicity.
pub fn zeros_from_poles(poles: &PoleSet, r: f64) -> Result<BlaschkeProduct> {
    let zeros = poles
        .inner_poles
        .iter()
        .map(|&p| {
            let a = p / r;
            if a.norm() >= 1.0 {
                Err(Error::InconsistentPole(a.norm()))
            } else {
                Ok(a)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    BlaschkeProduct::new(poles.origin_count, zeros)
}

/// Damped Gauss-Newton refinement of the zeros against `ln P_r` on the
/// circle; zeros that end up within [`POLE_SNAP`] of the origin join `m`.
pub fn polish_zeros(pr: &RealSamples, b: &BlaschkeProduct, iters: usize) -> BlaschkeProduct {
    let k = b.zeros().len();
    if k == 0 {
        return b.clone();
    }
    let grid = pr.grid();
    let n = pr.len();
    let y: Vec<f64> = pr.values().iter().map(|v| v.ln()).collect();
    let model =
        |zs: &[Complex64], j: usize| 2.0 * zs.iter().map(|&a| factor_modulus(a, grid.point(j)).ln()).sum::<f64>();
    let residual = |zs: &[Complex64], c: f64| DVector::from_fn(n, |j, _| y[j] - model(zs, j) - c);
    let jacobian = |zs: &[Complex64]| {
        DMatrix::from_fn(n, 2 * k + 1, |j, col| {
            if col == 2 * k {
                return 1.0;
            }
            let z = grid.point(j);
            let a = zs[col / 2];
            let d = z - a;
            let q = 1.0 - a.conj() * z;
            let (d2, q2) = (d.norm_sqr(), q.norm_sqr());
            let g = if col.is_multiple_of(2) {
                -d.re / d2 + (q.re * z.re + q.im * z.im) / q2
            } else {
                -d.im / d2 + (q.re * z.im - q.im * z.re) / q2
            };
            2.0 * g
        })
    };

    let mut zs = b.zeros().to_vec();
    let mut c = (0..n).map(|j| y[j] - model(&zs, j)).sum::<f64>() / n as f64;
    let mut res = residual(&zs, c);
    let mut cost = res.norm_squared();
    let mut lambda = 1e-6;
    for _ in 0..iters {
        let jac = jacobian(&zs);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &res;
        let mut accepted = false;
        while lambda < 1e10 {
            let mut lhs = jtj.clone();
            for i in 0..lhs.nrows() {
                lhs[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = lhs.cholesky().map(|ch| ch.solve(&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<Complex64> = (0..k).map(|i| zs[i] - Complex64::new(step[2 * i], step[2 * i + 1])).collect();
            if trial.iter().any(|a| !(a.norm() < 1.0)) {
                lambda *= 10.0;
                continue;
            }
            let tc = c - step[2 * k];
            let tres = residual(&trial, tc);
            let tcost = tres.norm_squared();
            if tcost < cost {
                accepted = step.norm() > 1e-15 && (cost - tcost) > 1e-15 * cost;
                zs = trial;
                c = tc;
                res = tres;
                cost = tcost;
                lambda = (lambda / 10.0).max(1e-15);
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let origin = zs.iter().filter(|a| a.norm() < POLE_SNAP).count();
    zs.retain(|a| a.norm() >= POLE_SNAP);
    BlaschkeProduct::new(b.m() + origin, zs).expect("zeros kept inside the disc")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilConfig {
    pub r: f64,
    /// Laurent truncation order; `None` selects `min(n/2 - 1, 200)`.
    pub order: Option<usize>,
    pub k_max: usize,
    pub sigma_tol: f64,
    pub polish_iters: usize,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for PencilConfig {
    fn default() -> Self {
        Self { r: 0.8, order: None, k_max: 20, sigma_tol: 1e-11, polish_iters: 20, execution: Execution::default() }
    }
}

impl PencilConfig {
    pub fn order_for(&self, n: usize) -> usize {
        self.order.unwrap_or_else(|| (n / 2).saturating_sub(1).min(200))
    }

    /// `k_max` reduced so the Hankel matrix has at least as many rows as columns.
    pub fn k_max_for(&self, order: usize) -> usize {
        self.k_max.min(order.saturating_sub(1) / 2).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::InvalidArgument(format!("circle radius {} outside (0, 1)", self.r)));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("pole count bound must be at least 1".into()));
        }
        if !(self.sigma_tol > 0.0 && self.sigma_tol < 1.0) {
            return Err(Error::InvalidArgument(format!("rank tolerance {} outside (0, 1)", self.sigma_tol)));
        }
        Ok(())
    }
}

/// Full MQPC pipeline.
pub fn mqpc_retrieve(measurements: &ModulusField, cfg: &PencilConfig) -> Result<ReconstructionResult> {
    cfg.validate()?;
    let exec = cfg.execution;
    let circle = measurements.circle(cfg.r).ok_or(Error::MissingCircle(cfg.r))?;
    let outer = outer_boundary_with(measurements.boundary(), exec)?;
    let inner = inner_modulus_field(measurements, &outer, &[circle.rho()], exec)?;
    let pr = pr_boundary(&inner.circles()[0])?;
    let order = cfg.order_for(pr.len());
    let lc = laurent_coeffs(&pr, order)?;
    let poles = extract_inner_poles_with(&lc, cfg.k_max_for(order), cfg.sigma_tol)?;
    let b = zeros_from_poles(&poles, lc.r())?;
    let b = polish_zeros(&pr, &b, cfg.polish_iters);

    let outer_mod = outer_modulus_interior(&outer, measurements, exec)?;
    let err0 = interior_error(measurements, &outer_mod, &BlaschkeProduct::identity())?;
    let err = interior_error(measurements, &outer_mod, &b)?;
    let radii: Vec<f64> = measurements.circles().iter().map(RealSamples::rho).collect();
    let reconstructed = reconstruct(&outer, &b, &radii, exec)?;
    Ok(ReconstructionResult {
        outer,
        stage_errors: vec![(0, err0), (b.degree(), err)],
        inner: b,
        constant: Complex64::new(1.0, 0.0),
        reconstructed,
        stop: StopReason::Complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::CircleGrid;
    use crate::synth::{blaschke_unnormalized, gen_example2};
    use std::f64::consts::TAU;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pr_of(zeros: &[Complex64], n: usize, r: f64) -> RealSamples {
        let grid = CircleGrid::new(n, r).unwrap();
        let values = (0..n)
            .map(|j| blaschke_unnormalized(zeros, Complex64::from_polar(r, TAU * j as f64 / n as f64)).norm_sqr())
            .collect();
        RealSamples::new(grid, values).unwrap()
    }

    #[test]
    fn pr_examples() {
        let g = CircleGrid::new(8, 0.8).unwrap();
        let r = RealSamples::new(g.clone(), vec![0.8; 8]).unwrap();
        assert!(pr_boundary(&r).unwrap().values().iter().all(|v| (v - 0.64).abs() < 1e-15));
        let one = RealSamples::new(g, vec![1.0; 8]).unwrap();
        assert_eq!(pr_boundary(&one).unwrap(), one);
        let single = pr_of(&[c(0.5, 0.0)], 16, 0.8);
        assert!((single.values()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn coefficients_of_constants() {
        let one = RealSamples::new(CircleGrid::new(64, 0.8).unwrap(), vec![1.0; 64]).unwrap();
        let lc = laurent_coeffs(&one, 10).unwrap();
        assert!((lc.get(0) - 1.0).norm() < 1e-14);
        assert!((1..=10).all(|k| lc.get(k).norm() < 1e-14 && lc.get(-k).norm() < 1e-14));
        let z = pr_of(&[c(0.0, 0.0)], 64, 0.8);
        let lz = laurent_coeffs(&z, 10).unwrap();
        assert!((lz.get(0) - 0.64).norm() < 1e-14);
        assert!(matches!(laurent_coeffs(&z, 32), Err(Error::OrderTooLarge { .. })));
        let poles = extract_inner_poles(&lc, 4).unwrap();
        assert!(poles.inner_poles.is_empty() && poles.origin_count == 0);
    }

    #[test]
    fn coefficients_match_dense_quadrature() {
        let (a, r) = (0.5, 0.8);
        let lc = laurent_coeffs(&pr_of(&[c(a, 0.0)], 256, r), 20).unwrap();
        let p = |z: Complex64| (r * z - a) / (1.0 - a * r * z) * (1.0 - a * z / r) / (z / r - a);
        let m = 8192;
        for k in -20i64..=20 {
            let dense: Complex64 = (0..m)
                .map(|j| {
                    let t = TAU * j as f64 / m as f64;
                    p(Complex64::from_polar(1.0, t)) * Complex64::from_polar(1.0, -(k as f64) * t)
                })
                .sum::<Complex64>()
                / m as f64;
            assert!((lc.get(k) - dense).norm() < 1e-10, "k = {k}");
            assert!((lc.get(-k) - lc.get(k).conj()).norm() < 1e-14);
        }
    }

    #[test]
    fn single_pole_and_origin() {
        let lc = laurent_coeffs(&pr_of(&[c(0.5, 0.0)], 256, 0.8), 120).unwrap();
        let poles = extract_inner_poles(&lc, 20).unwrap();
        assert_eq!(poles.inner_poles.len(), 1);
        assert!((poles.inner_poles[0] - 0.4).norm() < 1e-8);
        assert_eq!(poles.origin_count, 0);
        let lc = laurent_coeffs(&pr_of(&[c(0.0, 0.0), c(0.5, 0.0)], 256, 0.8), 120).unwrap();
        let poles = extract_inner_poles(&lc, 20).unwrap();
        assert_eq!(poles.origin_count, 1);
        assert!((poles.inner_poles[0] - 0.4).norm() < 1e-8);
    }

    #[test]
    fn pole_to_zero_mapping() {
        let set = |p: Vec<Complex64>, m| PoleSet { inner_poles: p, origin_count: m, discarded_outer: 0 };
        let b = zeros_from_poles(&set(vec![c(0.4, 0.0)], 0), 0.8).unwrap();
        assert!((b.zeros()[0] - 0.5).norm() < 1e-15);
        let b = zeros_from_poles(&set(vec![], 3), 0.8).unwrap();
        assert_eq!((b.m(), b.zeros().len()), (3, 0));
        let b = zeros_from_poles(&set(vec![c(0.4, 0.0), c(0.0, 0.2)], 0), 0.8).unwrap();
        assert!((b.zeros()[1] - c(0.0, 0.25)).norm() < 1e-15);
        assert!(matches!(zeros_from_poles(&set(vec![c(0.85, 0.0)], 0), 0.8), Err(Error::InconsistentPole(_))));
    }

    #[test]
    fn outer_poles_mirror_inner() {
        let zeros = [c(0.3, 0.4), c(-0.5, 0.1)];
        let lc = laurent_coeffs(&pr_of(&zeros, 512, 0.8), 200).unwrap();
        let outer = extract_outer_poles(&lc, 10, 1e-11).unwrap();
        assert_eq!(outer.len(), 2);
        for a in zeros {
            let expected = 1.0 / (0.8 * a.conj());
            assert!(outer.iter().any(|p| (p - expected).norm() < 1e-6 * expected.norm()));
        }
    }

    #[test]
    fn rank_cut_at_largest_gap() {
        assert_eq!(rank_by_gap(&[1.0, 0.5, 1e-3, 1e-13, 1e-14], 1e-11), 3);
        assert_eq!(rank_by_gap(&[1.0, 1e-10, 5e-11, 1e-12], 1e-11), 1);
        assert_eq!(rank_by_gap(&[1.0, 0.9], 1e-11), 2);
    }

    #[test]
    fn clusters_merge() {
        let merged = merge_clusters(vec![c(0.1, 0.0), c(0.5, 0.0), c(0.10005, 0.0), c(0.1, 0.00002)]);
        assert_eq!(merged.iter().filter(|p| (*p - 0.1).norm() < 1e-4).count(), 3);
    }

    #[test]
    fn missing_circle_reported() {
        let s = gen_example2(&[c(0.3, 0.0)], 64, &[0.5]).unwrap();
        let err = mqpc_retrieve(&s.field, &PencilConfig::default()).unwrap_err();
        assert_eq!(err.to_string(), "interior circle at r = 0.8 missing");
    }
}
