//! Mechanical quadrature for the circular Hilbert transform.
//!
//! On the nodes the transform is a circular convolution with the table
//! `cot(pi d / n)` plus a spectral-derivative correction; off the nodes the
//! singular term is subtracted using the trigonometric interpolant.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::fourier::TrigInterpolant;
use crate::par::{map_indexed, Execution};
use crate::sampling::RealSamples;

/// Distance to a node below which the off-grid branch refuses to evaluate.
pub fn node_tolerance(n: usize) -> f64 {
    TAU / (1e6 * n as f64)
}

fn check_input(f: &RealSamples) -> Result<()> {
    let n = f.len();
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!("Hilbert quadrature needs an even node count >= 4, got {n}")));
    }
    if let Some(j) = f.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(j));
    }
    Ok(())
}

/// On-node quadrature `(Qf)(x_k)`.
pub fn hilbert_mqm_on_nodes(f: &RealSamples) -> Result<RealSamples> {
    hilbert_mqm_on_nodes_with(f, Execution::default())
}

pub fn hilbert_mqm_on_nodes_with(f: &RealSamples, exec: Execution) -> Result<RealSamples> {
    check_input(f)?;
    let n = f.len();
    let v = f.values();
    let deriv = TrigInterpolant::new(v).derivative_on_nodes();
    let cot: Vec<f64> = (0..n).map(|d| if d == 0 { 0.0 } else { 1.0 / (PI * d as f64 / n as f64).tan() }).collect();
    let inv_n = 1.0 / n as f64;
    let out = map_indexed(exec, n, |k| {
        let mut acc = 0.0;
        for d in 1..n {
            acc += cot[d] * v[(k + n - d) % n];
        }
        acc * inv_n - 2.0 * inv_n * deriv[k]
    });
    RealSamples::new(f.grid().clone(), out)
}

/// Off-grid quadrature at angle `t`; fails with [`Error::NearNode`] when `t`
/// is within [`node_tolerance`] of a node.
pub fn hilbert_mqm_offgrid(f: &RealSamples, t: f64) -> Result<f64> {
    check_input(f)?;
    offgrid_with(f.values(), &TrigInterpolant::new(f.values()), t)
}

fn offgrid_with(v: &[f64], interp: &TrigInterpolant, t: f64) -> Result<f64> {
    let n = v.len();
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("angle {t} is not finite")));
    }
    let h = TAU / n as f64;
    let u = t.rem_euclid(TAU);
    let nearest = (u / h).round() as usize % n;
    let dist = (u - nearest as f64 * h).abs().min(TAU - (u - nearest as f64 * h).abs());
    if dist <= node_tolerance(n) {
        return Err(Error::NearNode { t, node: nearest });
    }
    let mut acc = 0.0;
    for (j, &fj) in v.iter().enumerate() {
        acc += fj / ((u - j as f64 * h) / 2.0).tan();
    }
    Ok(acc / n as f64 - interp.eval(u) / (n as f64 * u / 2.0).tan())
}

/// Transform on the nodes plus an evaluator for arbitrary angles.
#[derive(Debug, Clone)]
pub struct HilbertResult {
    samples: RealSamples,
    input: Vec<f64>,
    interp: TrigInterpolant,
}

impl HilbertResult {
    pub fn compute(f: &RealSamples, exec: Execution) -> Result<Self> {
        let samples = hilbert_mqm_on_nodes_with(f, exec)?;
        Ok(Self { samples, input: f.values().to_vec(), interp: TrigInterpolant::new(f.values()) })
    }

    pub fn samples(&self) -> &RealSamples {
        &self.samples
    }

    /// Value at any angle; angles within the node tolerance use the node value.
    pub fn eval(&self, t: f64) -> f64 {
        match offgrid_with(&self.input, &self.interp, t) {
            Ok(v) => v,
            Err(Error::NearNode { node, .. }) => self.samples.values()[node],
            Err(_) => f64::NAN,
        }
    }
}

/// Dense principal-value reference: midpoint rule with singularity subtraction.
///
/// The `m` quadrature points sit half a step away from `t`, so the subtracted
/// integrand is never evaluated at its removable singularity.
pub fn hilbert_pv_oracle<F: Fn(f64) -> f64>(f: F, t: f64, m: usize) -> f64 {
    let h = TAU / m as f64;
    let ft = f(t);
    let mut acc = 0.0;
    for i in 0..m {
        let x = t + (i as f64 + 0.5) * h;
        acc += (f(x) - ft) / ((t - x) / 2.0).tan();
    }
    acc / m as f64
}
