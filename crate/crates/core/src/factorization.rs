//! Outer factor, Blaschke product, reconstruction and error metrics.
//!
//! The outer factor is carried by the coefficients of its logarithm: with
//! `F = log|f|` on the boundary nodes, `log O = F + i QF` on the boundary and
//! the analytic extension of the trigonometric interpolant inside the disc.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{dft_real, idft};
use crate::hilbert::hilbert_mqm_on_nodes_with;
use crate::par::{map_indexed, Execution};
use crate::sampling::{CircleGrid, ComplexSamples, ModulusField, RealSamples};

/// Floor below which a modulus is treated as zero.
pub const MODULUS_FLOOR: f64 = 1e-13;

/// Rim margin for the literal trapezoid Schwarz sum.
pub const RIM_MARGIN: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct OuterFactor {
    log_modulus: RealSamples,
    boundary_trace: ComplexSamples,
    // Taylor coefficients of log O, degrees 0..=n/2
    log_taylor: Vec<Complex64>,
}

impl OuterFactor {
    pub fn log_modulus(&self) -> &RealSamples {
        &self.log_modulus
    }

    pub fn boundary_trace(&self) -> &ComplexSamples {
        &self.boundary_trace
    }

    pub fn n(&self) -> usize {
        self.log_modulus.len()
    }

    /// `O` on the circle of radius `rho` at the shared nodes.
    pub fn on_circle(&self, rho: f64) -> Result<ComplexSamples> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidArgument(format!("radius {rho} outside (0, 1]")));
        }
        let grid = self.log_modulus.grid().with_radius(rho)?;
        if grid.is_boundary() {
            return Ok(self.boundary_trace.clone());
        }
        let n = self.n();
        let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
        let mut pow = 1.0;
        for (k, a) in self.log_taylor.iter().enumerate() {
            spectrum[k] = a * pow;
            pow *= rho;
        }
        let values = idft(&spectrum).into_iter().map(Complex64::exp).collect();
        ComplexSamples::new(grid, values)
    }
}

/// Boundary trace `exp(F + i QF)` of the outer factor.
pub fn outer_boundary(modulus_boundary: &RealSamples) -> Result<OuterFactor> {
    outer_boundary_with(modulus_boundary, Execution::default())
}

pub fn outer_boundary_with(modulus_boundary: &RealSamples, exec: Execution) -> Result<OuterFactor> {
    if !modulus_boundary.grid().is_boundary() {
        return Err(Error::InvalidArgument(format!(
            "outer factor needs the boundary circle, got r = {}",
            modulus_boundary.rho()
        )));
    }
    if let Some(node) = modulus_boundary.values().iter().position(|&v| !(v > MODULUS_FLOOR)) {
        return Err(Error::BoundaryZero { node });
    }
    let log_modulus = modulus_boundary.map(f64::ln);
    let conj = hilbert_mqm_on_nodes_with(&log_modulus, exec)?;
    let values =
        modulus_boundary.values().iter().zip(conj.values()).map(|(&v, &q)| Complex64::from_polar(v, q)).collect();
    let boundary_trace = ComplexSamples::new(modulus_boundary.grid().clone(), values)?;

    let n = log_modulus.len();
    let half = n / 2;
    let spectrum = dft_real(log_modulus.values());
    let log_taylor = (0..=half).map(|k| if k == 0 || k == half { spectrum[k] } else { 2.0 * spectrum[k] }).collect();
    Ok(OuterFactor { log_modulus, boundary_trace, log_taylor })
}

/// `O(z)` for `|z| <= 1`, with the unimodular constant fixed to 1.
pub fn outer_interior(outer: &OuterFactor, z: Complex64) -> Result<Complex64> {
    if !(z.norm() <= 1.0) {
        return Err(Error::NearBoundary(z.norm()));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for a in outer.log_taylor.iter().rev() {
        acc = acc * z + a;
    }
    Ok(acc.exp())
}

/// Literal trapezoid discretization of the Schwarz integral.
///
/// Kept as an independent reference; it loses accuracy as `|z|` approaches 1
/// and refuses `|z| > 1 - RIM_MARGIN`.
pub fn outer_interior_trapezoid(outer: &OuterFactor, z: Complex64) -> Result<Complex64> {
    if !(z.norm() <= 1.0 - RIM_MARGIN) {
        return Err(Error::NearBoundary(z.norm()));
    }
    let grid = outer.log_modulus.grid();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, &f) in outer.log_modulus.values().iter().enumerate() {
        let e = grid.point(j);
        acc += (e + z) / (e - z) * f;
    }
    Ok((acc / grid.n() as f64).exp())
}

/// Finite Blaschke product `z^m prod (-conj(a)/|a|)(z - a)/(1 - conj(a) z)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BlaschkeProduct {
    m: usize,
    zeros: Vec<Complex64>,
}

impl BlaschkeProduct {
    pub fn new(m: usize, zeros: Vec<Complex64>) -> Result<Self> {
        for a in &zeros {
            let r = a.norm();
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidArgument(format!("Blaschke zero {a} must satisfy 0 < |a| < 1")));
            }
        }
        Ok(Self { m, zeros })
    }

    /// Zeros at the origin are moved into the multiplicity.
    pub fn from_zeros(zeros: &[Complex64]) -> Result<Self> {
        let m = zeros.iter().filter(|a| a.norm() == 0.0).count();
        Self::new(m, zeros.iter().copied().filter(|a| a.norm() != 0.0).collect())
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    /// Zero count including the origin multiplicity.
    pub fn degree(&self) -> usize {
        self.m + self.zeros.len()
    }

    /// All zeros with the origin repeated `m` times.
    pub fn all_zeros(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.m];
        out.extend_from_slice(&self.zeros);
        out
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = z.powu(self.m as u32);
        for &a in &self.zeros {
            acc *= blaschke_factor(a, z);
        }
        acc
    }

    /// `|B(z)|` without the unimodular normalizations.
    pub fn modulus(&self, z: Complex64) -> f64 {
        let mut acc = z.norm().powi(self.m as i32);
        for &a in &self.zeros {
            acc *= factor_modulus(a, z);
        }
        acc
    }
}

/// Normalized factor `(-conj(a)/|a|)(z - a)/(1 - conj(a) z)`.
pub fn blaschke_factor(a: Complex64, z: Complex64) -> Complex64 {
    -a.conj() / a.norm() * (z - a) / (1.0 - a.conj() * z)
}

/// `|z - a| / |1 - conj(a) z|`; equals `|z|` for `a = 0`.
pub fn factor_modulus(a: Complex64, z: Complex64) -> f64 {
    (z - a).norm() / (1.0 - a.conj() * z).norm()
}

pub fn blaschke_eval(b: &BlaschkeProduct, z: Complex64) -> Complex64 {
    b.eval(z)
}

/// `g = O B` on each requested circle.
pub fn reconstruct(
    outer: &OuterFactor,
    b: &BlaschkeProduct,
    radii: &[f64],
    exec: Execution,
) -> Result<Vec<ComplexSamples>> {
    let circles = map_indexed(exec, radii.len(), |i| -> Result<ComplexSamples> {
        let o = outer.on_circle(radii[i])?;
        let grid = o.grid().clone();
        let values = o.values().iter().enumerate().map(|(j, &v)| v * b.eval(grid.point(j))).collect();
        ComplexSamples::new(grid, values)
    });
    circles.into_iter().collect()
}

fn check_grids(a: &CircleGrid, b: &CircleGrid) -> Result<()> {
    if a.n() != b.n() {
        return Err(Error::LengthMismatch { expected: a.n(), got: b.n() });
    }
    if a != b {
        return Err(Error::InvalidArgument(format!("grids differ (r = {} vs r = {})", a.rho(), b.rho())));
    }
    Ok(())
}

/// Unimodular `C` minimizing `||f_ref - C g||`.
pub fn align_constant(g: &ComplexSamples, f_ref: &ComplexSamples) -> Result<Complex64> {
    check_grids(f_ref.grid(), g.grid())?;
    let inner: Complex64 = f_ref.values().iter().zip(g.values()).map(|(f, g)| f * g.conj()).sum();
    let scale = norm2(f_ref.values()) * norm2(g.values());
    if !(inner.norm() > 1e-14 * scale) {
        return Err(Error::AlignmentUndefined);
    }
    Ok(inner / inner.norm())
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// `||f_ref - g|| / ||f_ref||` on real samples.
pub fn relative_error_real(f_ref: &RealSamples, g: &RealSamples) -> Result<f64> {
    check_grids(f_ref.grid(), g.grid())?;
    relative_misfit([f_ref], [g])
}

/// `||f_ref - C g|| / ||f_ref||` with `C` from [`align_constant`].
pub fn relative_error_complex(f_ref: &ComplexSamples, g: &ComplexSamples) -> Result<f64> {
    let c = align_constant(g, f_ref)?;
    let den = norm2(f_ref.values());
    let num: f64 = f_ref.values().iter().zip(g.values()).map(|(f, g)| (f - c * g).norm_sqr()).sum();
    Ok(num.sqrt() / den)
}

/// Aligned relative error over several circles concatenated, with one
/// unimodular constant for all of them. Returns `(C, error)`.
pub fn relative_error_circles(reference: &[ComplexSamples], model: &[ComplexSamples]) -> Result<(Complex64, f64)> {
    if reference.len() != model.len() {
        return Err(Error::LengthMismatch { expected: reference.len(), got: model.len() });
    }
    let mut inner = Complex64::new(0.0, 0.0);
    let (mut nf, mut ng) = (0.0, 0.0);
    for (f, g) in reference.iter().zip(model) {
        check_grids(f.grid(), g.grid())?;
        inner += f.values().iter().zip(g.values()).map(|(a, b)| a * b.conj()).sum::<Complex64>();
        nf += f.values().iter().map(Complex64::norm_sqr).sum::<f64>();
        ng += g.values().iter().map(Complex64::norm_sqr).sum::<f64>();
    }
    if !(nf > 0.0) {
        return Err(Error::ZeroReference);
    }
    if !(inner.norm() > 1e-14 * (nf * ng).sqrt()) {
        return Err(Error::AlignmentUndefined);
    }
    let c = inner / inner.norm();
    let num: f64 = reference
        .iter()
        .zip(model)
        .flat_map(|(f, g)| f.values().iter().zip(g.values()).map(move |(a, b)| (a - c * b).norm_sqr()))
        .sum();
    Ok((c, (num / nf).sqrt()))
}

/// Relative l2 misfit over several circles concatenated.
pub fn relative_misfit<'a, 'b>(
    reference: impl IntoIterator<Item = &'a RealSamples>,
    model: impl IntoIterator<Item = &'b RealSamples>,
) -> Result<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for (r, m) in reference.into_iter().zip(model) {
        if r.len() != m.len() {
            return Err(Error::LengthMismatch { expected: r.len(), got: m.len() });
        }
        for (a, b) in r.values().iter().zip(m.values()) {
            num += (a - b) * (a - b);
            den += a * a;
        }
    }
    if !(den > 0.0) {
        return Err(Error::ZeroReference);
    }
    Ok((num / den).sqrt())
}

/// `|O|` on every interior circle of `measurements`, ascending in radius.
pub fn outer_modulus_interior(
    outer: &OuterFactor,
    measurements: &ModulusField,
    exec: Execution,
) -> Result<Vec<RealSamples>> {
    let radii = measurements.interior_radii();
    let circles = map_indexed(exec, radii.len(), |i| outer.on_circle(radii[i]).map(|c| c.modulus()));
    circles.into_iter().collect()
}

/// Interior misfit between measured `|f|` and `|O| |B|`.
pub fn interior_error(measurements: &ModulusField, outer_modulus: &[RealSamples], b: &BlaschkeProduct) -> Result<f64> {
    let measured: Vec<&RealSamples> = measurements.circles().iter().filter(|c| !c.grid().is_boundary()).collect();
    if measured.is_empty() {
        return Err(Error::NoInteriorCircle);
    }
    let model: Vec<RealSamples> = outer_modulus
        .iter()
        .map(|o| {
            let grid = o.grid();
            let values = o.values().iter().enumerate().map(|(j, &v)| v * b.modulus(grid.point(j))).collect();
            RealSamples::new(grid.clone(), values)
        })
        .collect::<Result<_>>()?;
    relative_misfit(measured, &model)
}

/// Why a zero search loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// No sub-threshold minimum remained.
    BelowThreshold,
    MaxZeros,
    /// The interior error stopped decreasing; the last zero was discarded.
    ErrorIncrease,
    /// Single-shot pipeline with no loop.
    Complete,
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub outer: OuterFactor,
    pub inner: BlaschkeProduct,
    pub constant: Complex64,
    pub stage_errors: Vec<(usize, f64)>,
    /// `g = O B` on every measured circle, ascending in radius.
    pub reconstructed: Vec<ComplexSamples>,
    pub stop: StopReason,
}

impl ReconstructionResult {
    pub fn final_error(&self) -> f64 {
        self.stage_errors.last().map_or(f64::NAN, |e| e.1)
    }
}
