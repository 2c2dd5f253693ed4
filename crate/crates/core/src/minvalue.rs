//! Zero search by minimum modulus with deflation (MQMV).
//!
//! The inner modulus `|B| = |f| / |O|` is sampled on a polar grid of circles.
//! The global grid minimum seeds a local fit of the model
//!
//! ```text
//! ln v(z) = 1/2 ln(|z - a|^2 + s^2) - ln|1 - conj(a) z| + bg(z)
//! ```
//!
//! on a stencil of three circles, where `bg` is a smooth background
//! (constant, `ln|z|`, and a quadratic in `z - z_c`). The linear background
//! is projected out and `(a, s)` is found by Levenberg-Marquardt. A fit with
//! `s` near zero is a genuine simple zero at `a`; the estimated minimum value
//! `|s| e^{bg(a)} / (1 - |a|^2)` is compared with the threshold.
//!
//! A minimum on the innermost circle that no zero model explains is tested
//! for an origin zero through the growth of the circle means of `ln v`
//! between the two innermost circles.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::{
    factor_modulus, interior_error, outer_boundary_with, outer_modulus_interior, reconstruct, BlaschkeProduct,
    OuterFactor, ReconstructionResult, StopReason, MODULUS_FLOOR,
};
use crate::par::{map_indexed, Execution};
use crate::sampling::{ModulusField, RealSamples, RADIUS_TOL};
use crate::synth::linspace;

/// Largest accepted `s / dr` of a local fit.
const MAX_SMOOTHING: f64 = 0.25;
/// Minimum growth of the circle mean of `ln v` per unit `ln r` that signals
/// a zero inside the innermost circle.
const ORIGIN_SLOPE: f64 = 0.5;
/// Local minima tried before giving up on a clean fit.
const MAX_CANDIDATES: usize = 8;
/// Lower bounds on `s / dr` for the successive fitting stages.
const SMOOTHING_FLOORS: [f64; 7] = [0.5, 0.1, 0.02, 4e-3, 8e-4, 1.6e-4, 0.0];
/// Fitted zeros closer than this fraction of the innermost radius snap to 0.
const ORIGIN_SNAP: f64 = 1e-3;

/// `|B|` on interior circles, ascending in radius.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerModulusField {
    circles: Vec<RealSamples>,
}

impl InnerModulusField {
    pub fn new(mut circles: Vec<RealSamples>) -> Result<Self> {
        let n = circles.first().map(RealSamples::len).ok_or(Error::NoInteriorCircle)?;
        circles.sort_by(|a, b| a.rho().total_cmp(&b.rho()));
        for c in &circles {
            if c.len() != n {
                return Err(Error::LengthMismatch { expected: n, got: c.len() });
            }
            if !(c.rho() < 1.0) {
                return Err(Error::InvalidArgument(format!("inner field circle r = {} not interior", c.rho())));
            }
        }
        if circles.windows(2).any(|w| w[1].rho() - w[0].rho() <= RADIUS_TOL) {
            return Err(Error::InvalidArgument("duplicate radius in inner field".into()));
        }
        Ok(Self { circles })
    }

    pub fn n(&self) -> usize {
        self.circles[0].len()
    }

    pub fn circles(&self) -> &[RealSamples] {
        &self.circles
    }

    pub fn radii(&self) -> Vec<f64> {
        self.circles.iter().map(RealSamples::rho).collect()
    }

    fn value(&self, i: usize, j: usize) -> f64 {
        self.circles[i].values()[j]
    }

    fn argmin(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::INFINITY);
        for (i, c) in self.circles.iter().enumerate() {
            for (j, &v) in c.values().iter().enumerate() {
                if v < best.2 {
                    best = (i, j, v);
                }
            }
        }
        best
    }

    /// Grid points not exceeded by any of their eight neighbours, ascending by value.
    fn local_minima(&self) -> Vec<(usize, usize, f64)> {
        let (nc, n) = (self.circles.len(), self.n());
        let mut out = Vec::new();
        for i in 0..nc {
            for j in 0..n {
                let v = self.value(i, j);
                let is_min = (i.saturating_sub(1)..(i + 2).min(nc)).all(|ii| {
                    [n - 1, 0, 1].iter().all(|&dj| {
                        let jj = (j + dj) % n;
                        (ii == i && jj == j) || self.value(ii, jj) >= v
                    })
                });
                if is_min {
                    out.push((i, j, v));
                }
            }
        }
        out.sort_by(|a, b| a.2.total_cmp(&b.2));
        out
    }

    fn mean_log(&self, i: usize) -> f64 {
        let c = &self.circles[i];
        c.values().iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / c.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinSearchConfig {
    pub epsilon: f64,
    pub max_zeros: usize,
    pub refine_iters: usize,
    /// Radii searched for minima; every one must be a measured circle.
    pub search_radii: Vec<f64>,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for MinSearchConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            max_zeros: 20,
            refine_iters: 100,
            search_radii: default_search_radii(),
            execution: Execution::default(),
        }
    }
}

/// 32 radii equispaced in `[0.05, 0.95]`.
pub fn default_search_radii() -> Vec<f64> {
    linspace(0.05, 0.95, 32)
}

impl MinSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidArgument(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        if self.max_zeros == 0 {
            return Err(Error::InvalidArgument("max_zeros must be at least 1".into()));
        }
        if self.search_radii.len() < 3 {
            return Err(Error::InvalidArgument("zero search needs at least 3 circles".into()));
        }
        if let Some(r) = self.search_radii.iter().find(|&&r| !(r > 0.0 && r < 1.0)) {
            return Err(Error::InvalidArgument(format!("search radius {r} outside (0, 1)")));
        }
        Ok(())
    }
}

/// `|f| / |O|` on each requested circle.
pub fn inner_modulus_field(
    measurements: &ModulusField,
    outer: &OuterFactor,
    radii: &[f64],
    exec: Execution,
) -> Result<InnerModulusField> {
    let circles = map_indexed(exec, radii.len(), |i| -> Result<RealSamples> {
        let r = radii[i];
        let measured = measurements.circle(r).ok_or(Error::MissingCircle(r))?;
        let o = outer.on_circle(measured.rho())?;
        let values = measured
            .values()
            .iter()
            .zip(o.values())
            .enumerate()
            .map(|(node, (&m, ov))| {
                let om = ov.norm();
                if om < MODULUS_FLOOR {
                    Err(Error::OuterUnderflow { rho: r, node })
                } else {
                    Ok(m / om)
                }
            })
            .collect::<Result<_>>()?;
        RealSamples::new(measured.grid().clone(), values)
    });
    InnerModulusField::new(circles.into_iter().collect::<Result<_>>()?)
}

/// Divides out `|(z - a)/(1 - conj(a) z)|`, floored at the modulus floor.
pub fn deflate(field: &InnerModulusField, alpha: Complex64) -> InnerModulusField {
    let circles = field
        .circles
        .iter()
        .map(|c| {
            let grid = c.grid();
            let values = c
                .values()
                .iter()
                .enumerate()
                .map(|(j, v)| v / factor_modulus(alpha, grid.point(j)).max(MODULUS_FLOOR))
                .collect();
            RealSamples::new(grid.clone(), values).expect("same grid")
        })
        .collect();
    InnerModulusField { circles }
}

fn deflate_all(field: &InnerModulusField, b: &BlaschkeProduct) -> InnerModulusField {
    let circles = field
        .circles
        .iter()
        .map(|c| {
            let grid = c.grid();
            let values =
                c.values().iter().enumerate().map(|(j, v)| v / b.modulus(grid.point(j)).max(MODULUS_FLOOR)).collect();
            RealSamples::new(grid.clone(), values).expect("same grid")
        })
        .collect();
    InnerModulusField { circles }
}

/// Result of a local model fit.
#[derive(Debug, Clone, Copy)]
struct LocalFit {
    alpha: Complex64,
    smoothing: f64,
    min_value: f64,
    inside_stencil: bool,
    dr: f64,
}

const BASIS: usize = 6;

fn basis_row(z: Complex64, zc: Complex64, dr: f64) -> [f64; BASIS] {
    let w = (z - zc) / dr;
    let w2 = w * w;
    [1.0, z.norm().ln(), w.re, w.im, w2.re, w2.im]
}

/// Model term and its gradient in `(a_re, a_im, s)`.
fn zero_term(z: Complex64, a: Complex64, s: f64) -> (f64, [f64; 3]) {
    let d = z - a;
    let den = d.norm_sqr() + s * s;
    let q = 1.0 - a.conj() * z;
    let q2 = q.norm_sqr();
    let value = 0.5 * den.ln() - 0.5 * q2.ln();
    let grad =
        [-d.re / den + (q.re * z.re + q.im * z.im) / q2, -d.im / den + (q.re * z.im - q.im * z.re) / q2, s / den];
    (value, grad)
}

fn fit_at(field: &InnerModulusField, i0: usize, j0: usize, iters: usize) -> Option<LocalFit> {
    let radii = field.radii();
    let nc = radii.len();
    if nc < 3 {
        return None;
    }
    let n = field.n();
    let dt = TAU / n as f64;
    let lo = i0.saturating_sub(1).min(nc - 3);
    let dr = (radii[lo + 2] - radii[lo]) / 2.0;
    let half_width = ((dr / (radii[i0] * dt)).ceil() as usize).clamp(2, (n / 8).max(2));

    let zc = Complex64::from_polar(radii[i0], j0 as f64 * dt);
    let mut pts = Vec::with_capacity(3 * (2 * half_width + 1));
    let mut ys = Vec::with_capacity(pts.capacity());
    for i in lo..lo + 3 {
        for dj in 0..=2 * half_width {
            let j = (j0 + n + dj - half_width) % n;
            pts.push(field.circles[i].grid().point(j));
            ys.push(field.value(i, j).max(f64::MIN_POSITIVE).ln());
        }
    }
    let p = pts.len();
    let a_mat = DMatrix::from_fn(p, BASIS, |r, c| basis_row(pts[r], zc, dr)[c]);
    let svd = a_mat.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..BASIS).filter(|&k| svd.singular_values[k] > 1e-10 * smax).collect();
    let u = svd.u.as_ref()?;
    let q = DMatrix::from_fn(p, keep.len(), |r, c| u[(r, keep[c])]);
    let project = |v: &DVector<f64>| -> DVector<f64> { v - &q * (q.transpose() * v) };
    let y = DVector::from_vec(ys);

    let eval = |th: &Vector3<f64>| -> (DVector<f64>, DMatrix<f64>) {
        let a = Complex64::new(th[0], th[1]);
        let mut phi = DVector::zeros(p);
        let mut jac = DMatrix::zeros(p, 3);
        for (r, &z) in pts.iter().enumerate() {
            let (v, g) = zero_term(z, a, th[2]);
            phi[r] = v;
            for c in 0..3 {
                jac[(r, c)] = -g[c];
            }
        }
        let res = project(&(&y - phi));
        let mut pj = DMatrix::zeros(p, 3);
        for c in 0..3 {
            pj.set_column(c, &project(&jac.column(c).into_owned()));
        }
        (res, pj)
    };

    // Continuation on a lower bound for s: with s near zero the model is
    // singular at every sample, which traps a in its starting cell.
    let mut theta = Vector3::new(zc.re, zc.im, 0.5 * dr);
    for floor in SMOOTHING_FLOORS.iter().map(|f| f * dr) {
        theta[2] = theta[2].max(floor);
        theta = levenberg_marquardt(&eval, theta, floor, iters);
    }

    let alpha = Complex64::new(theta[0], theta[1]);
    let s = theta[2].abs();
    let mut target = DVector::zeros(p);
    for (r, &z) in pts.iter().enumerate() {
        target[r] = y[r] - zero_term(z, alpha, s).0;
    }
    let coef = svd.solve(&target, 1e-10 * smax).ok()?;
    let ba = basis_row(alpha, zc, dr);
    let bg: f64 = (0..BASIS).map(|k| if coef[k] == 0.0 { 0.0 } else { coef[k] * ba[k] }).sum();
    let min_value = s * bg.exp() / (1.0 - alpha.norm_sqr());

    let (r_lo, r_hi) = (radii[lo], radii[lo + 2]);
    let ra = alpha.norm();
    let radial_ok = (lo == 0 || ra >= r_lo - dr) && ra <= r_hi + dr && ra < 1.0;
    let angular_ok = ra < r_lo || {
        let d = (alpha.arg() - j0 as f64 * dt).rem_euclid(TAU);
        d.min(TAU - d) <= (half_width + 1) as f64 * dt
    };
    Some(LocalFit { alpha, smoothing: s, min_value, inside_stencil: radial_ok && angular_ok, dr })
}

/// Minimizes `|res|^2` over `theta` with `theta[2] >= floor` and `|a| < 1`.
fn levenberg_marquardt<E>(eval: &E, mut theta: Vector3<f64>, floor: f64, iters: usize) -> Vector3<f64>
where
    E: Fn(&Vector3<f64>) -> (DVector<f64>, DMatrix<f64>),
{
    let (mut res, mut jac) = eval(&theta);
    let mut cost = res.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..iters {
        let jtj: Matrix3<f64> = (jac.transpose() * &jac).fixed_view::<3, 3>(0, 0).into_owned();
        let g: Vector3<f64> = (jac.transpose() * &res).fixed_rows::<3>(0).into_owned();
        let mut improved = false;
        while lambda < 1e12 {
            let mut lhs = jtj;
            for k in 0..3 {
                lhs[(k, k)] += lambda * jtj[(k, k)].max(1e-12);
            }
            let Some(step) = lhs.lu().solve(&(-g)) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = theta + step;
            trial[2] = trial[2].abs().max(floor);
            if Complex64::new(trial[0], trial[1]).norm() >= 1.0 {
                lambda *= 10.0;
                continue;
            }
            let (r2, j2) = eval(&trial);
            let c2 = r2.norm_squared();
            if c2 < cost {
                let moved = (trial - theta).norm() > 1e-15 * (1.0 + theta.norm());
                let rel = (cost - c2) / cost.max(f64::MIN_POSITIVE);
                theta = trial;
                res = r2;
                jac = j2;
                cost = c2;
                lambda = (lambda / 3.0).max(1e-15);
                improved = moved && rel > 1e-15;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    theta
}

fn fit_accepted(fit: &LocalFit, epsilon: f64) -> bool {
    fit.inside_stencil
        && fit.smoothing <= MAX_SMOOTHING * fit.dr
        && fit.min_value.is_finite()
        && fit.min_value <= epsilon
}

/// Jensen growth `d(mean ln v)/d(ln r)` between the two innermost circles.
fn inner_growth(field: &InnerModulusField) -> f64 {
    let r = field.radii();
    (field.mean_log(1) - field.mean_log(0)) / (r[1] / r[0]).ln()
}

/// Locates the next zero: `Some(0)` for an origin zero, `None` when no
/// sub-threshold minimum is found.
pub fn find_min_zero(field: &InnerModulusField, cfg: &MinSearchConfig) -> Option<Complex64> {
    if field.circles.len() < 3 {
        return None;
    }
    let snap = ORIGIN_SNAP * field.circles[0].rho();
    let snapped = |a: Complex64| if a.norm() < snap { Complex64::new(0.0, 0.0) } else { a };
    let minima = field.local_minima();
    for &(i, j, _) in minima.iter().take(MAX_CANDIDATES) {
        if let Some(fit) = fit_at(field, i, j, cfg.refine_iters) {
            if fit_accepted(&fit, cfg.epsilon) {
                return Some(snapped(fit.alpha));
            }
        }
    }
    let (i0, j0, v0) = field.argmin();
    if i0 == 0 && inner_growth(field) >= ORIGIN_SLOPE {
        return Some(Complex64::new(0.0, 0.0));
    }
    // Unresolved dip (typically clustered zeros): report a provisional zero
    // for the polishing sweeps to refine once its neighbours are deflated.
    if v0 <= cfg.epsilon {
        let cell = field.circles[i0].grid().point(j0);
        let alpha = fit_at(field, i0, j0, cfg.refine_iters)
            .filter(|f| f.inside_stencil && f.alpha.norm() < 1.0)
            .map_or(cell, |f| f.alpha);
        return Some(snapped(alpha));
    }
    None
}

/// Nearest stencil centre to `alpha`.
fn nearest_cell(field: &InnerModulusField, alpha: Complex64) -> (usize, usize) {
    let radii = field.radii();
    let i = (0..radii.len())
        .min_by(|&a, &b| (radii[a] - alpha.norm()).abs().total_cmp(&(radii[b] - alpha.norm()).abs()))
        .unwrap_or(0);
    let n = field.n();
    let j = (alpha.arg().rem_euclid(TAU) / (TAU / n as f64)).round() as usize % n;
    (i, j)
}

/// Refits every non-origin zero against the field deflated by all others.
fn polish(original: &InnerModulusField, b: &BlaschkeProduct, cfg: &MinSearchConfig) -> BlaschkeProduct {
    let mut zeros = b.zeros().to_vec();
    for k in 0..zeros.len() {
        let others: Vec<Complex64> = zeros.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &a)| a).collect();
        let rest = BlaschkeProduct::new(b.m(), others).expect("valid zeros");
        let field = deflate_all(original, &rest);
        let (i, j) = nearest_cell(&field, zeros[k]);
        if let Some(fit) = fit_at(&field, i, j, cfg.refine_iters) {
            if fit_accepted(&fit, cfg.epsilon) && fit.alpha.norm() > 0.0 {
                zeros[k] = fit.alpha;
            }
        }
    }
    BlaschkeProduct::new(b.m(), zeros).expect("polished zeros stay inside the disc")
}

/// Full MQMV pipeline.
pub fn mqmv_retrieve(measurements: &ModulusField, cfg: &MinSearchConfig) -> Result<ReconstructionResult> {
    cfg.validate()?;
    if measurements.interior_radii().is_empty() {
        return Err(Error::NoInteriorCircle);
    }
    let exec = cfg.execution;
    let outer = outer_boundary_with(measurements.boundary(), exec)?;
    let original = inner_modulus_field(measurements, &outer, &cfg.search_radii, exec)?;
    let outer_mod = outer_modulus_interior(&outer, measurements, exec)?;

    let mut b = BlaschkeProduct::identity();
    let mut err = interior_error(measurements, &outer_mod, &b)?;
    let mut stage_errors = vec![(0, err)];
    let mut field = original.clone();
    let stop = loop {
        if b.degree() >= cfg.max_zeros {
            break StopReason::MaxZeros;
        }
        let Some(alpha) = find_min_zero(&field, cfg) else {
            break StopReason::BelowThreshold;
        };
        let candidate = if alpha.norm() == 0.0 {
            BlaschkeProduct::new(b.m() + 1, b.zeros().to_vec())?
        } else {
            let mut zs = b.zeros().to_vec();
            zs.push(alpha);
            BlaschkeProduct::new(b.m(), zs)?
        };
        let candidate = polish(&original, &candidate, cfg);
        let next = interior_error(measurements, &outer_mod, &candidate)?;
        if !(next < err) {
            break StopReason::ErrorIncrease;
        }
        b = candidate;
        err = next;
        stage_errors.push((b.degree(), err));
        field = deflate_all(&original, &b);
    };

    let radii: Vec<f64> = measurements.circles().iter().map(RealSamples::rho).collect();
    let reconstructed = reconstruct(&outer, &b, &radii, exec)?;
    Ok(ReconstructionResult { outer, inner: b, constant: Complex64::new(1.0, 0.0), stage_errors, reconstructed, stop })
}
