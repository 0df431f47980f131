//! Interpolation inequalities on the flat torus.
//!
//! For `1/p + 1/q = 1/r`, `r ≥ 1`, on an `n`-manifold
//!
//! ```text
//! (∫|∇T|^{2r})^{1/r} ≤ (2r − 2 + n) (∫|∇²T|^p)^{1/p} (∫|T|^q)^{1/q}
//! ```
//!
//! Integrals are grid means (the torus has unit area) and derivatives are
//! spectral. `|∇²T|` is the Frobenius norm of the Hessian.

use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::spectral::{mean, SpectralGrid};
use super::FlowError;

/// Relative slack for `holds`.
pub const QUADRATURE_TOL: f64 = 1e-8;

const DIMENSION: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn lp_norm(values: impl Iterator<Item = f64>, p: f64, len: usize) -> f64 {
    let s: f64 = values.map(|x| x.abs().powf(p)).sum();
    (s / len as f64).powf(1.0 / p)
}

pub fn interpolation_check(
    grid: &SpectralGrid,
    t: &[f64],
    r: Rational64,
    p: Rational64,
    q: Rational64,
) -> Result<InterpolationCheck, FlowError> {
    if t.len() != grid.len() {
        return Err(FlowError::FieldSize {
            got: t.len(),
            expected: grid.len(),
        });
    }
    if r < Rational64::one() {
        return Err(FlowError::Domain(format!("r = {r} < 1")));
    }
    if p <= Rational64::zero() || q <= Rational64::zero() {
        return Err(FlowError::Domain(format!(
            "p = {p}, q = {q} must be positive"
        )));
    }
    if p.recip() + q.recip() != r.recip() {
        return Err(FlowError::Domain(format!("1/{p} + 1/{q} != 1/{r}")));
    }
    let f = |x: Rational64| x.to_f64().unwrap_or(f64::NAN);
    let (rf, pf, qf) = (f(r), f(p), f(q));
    let len = t.len();

    let (gx, gy) = grid.gradient(t);
    let grad_sq: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a * a + b * b).collect();
    let lhs = (grad_sq.iter().map(|g| g.powf(rf)).sum::<f64>() / len as f64).powf(1.0 / rf);

    let (xx, xy, yy) = grid.hessian(t);
    let hess = (0..len).map(|i| (xx[i] * xx[i] + 2.0 * xy[i] * xy[i] + yy[i] * yy[i]).sqrt());
    let rhs =
        (2.0 * rf - 2.0 + DIMENSION) * lp_norm(hess, pf, len) * lp_norm(t.iter().copied(), qf, len);

    Ok(InterpolationCheck {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + QUADRATURE_TOL),
    })
}

/// `∫|∇ⁱT|² / ((∫|∇ᵏT|²)^{i/k} (∫T²)^{1−i/k})` for `0 < i < k`.
///
/// On the torus Parseval and Hölder bound this by one. Returns zero when
/// the field has no non-constant part.
pub fn interpolation_ratio(
    grid: &SpectralGrid,
    t: &[f64],
    i: u32,
    k: u32,
) -> Result<f64, FlowError> {
    if !(0 < i && i < k) {
        return Err(FlowError::Domain(format!(
            "need 0 < i < k, got i = {i}, k = {k}"
        )));
    }
    let mean_t = mean(t);
    let centered: Vec<f64> = t.iter().map(|x| x - mean_t).collect();
    let num = grid.derivative_energy(&centered, i);
    if num == 0.0 {
        return Ok(0.0);
    }
    let theta = i as f64 / k as f64;
    let top = grid.derivative_energy(&centered, k);
    let base = grid.derivative_energy(t, 0);
    Ok(num / (top.powf(theta) * base.powf(1.0 - theta)))
}
