//! Yamabe lower bound and the a-priori Sobolev-constant bound.
//!
//! The Calabi energy `E` of the initial metric controls both the Yamabe
//! constant, `Y² ≥ 96π²c₁² − 2E`, and the scalar-curvature deviation,
//! `‖R − R̄‖²_{L²} = E − R̄²V`. When `Y² > ‖R − R̄‖²` the Sobolev constant is
//! bounded by a coefficient over `Y − ‖R − R̄‖`. The Calabi energy does not
//! increase along the flow, so a bound computed at the initial energy holds
//! for every later time.
//!
//! The validity test is decided on the exact squared quantities. Floating
//! point enters only for the two square roots in the final constant.

use serde::{Deserialize, Serialize};

use crate::energy::{calabi_lower_bound_a, mean_scalar_data, EnergyError, EnergyQuantity};
use crate::lattice::{CohomologyClass, SurfaceModel};
use crate::rational::{qi, serde_f64_17, to_f64};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SobolevError {
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("energy {energy} is below the unconstrained minimum R̄²V = {minimum}")]
    InconsistentEnergy { energy: String, minimum: String },
    #[error("energy {energy} is below the Calabi lower bound A = {lower_bound}")]
    BelowLowerBound { energy: String, lower_bound: String },
}

/// `96π²c₁² − 2E`. May be negative.
pub fn yamabe_sq_lower_bound(model: SurfaceModel, energy: &EnergyQuantity) -> EnergyQuantity {
    let top = EnergyQuantity::from_pi2(qi(96 * model.c1_squared()));
    &top - &energy.scale(&qi(2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevBoundReport {
    /// Exact `Y²` lower bound.
    pub yamabe_sq_lower_exact: EnergyQuantity,
    /// Exact `‖R − R̄‖²_{L²}`.
    pub deviation_sq_exact: EnergyQuantity,
    /// `Y²` lower bound as a real coefficient of `π²`.
    #[serde(with = "serde_f64_17")]
    pub yamabe_sq_lower: f64,
    /// `‖R − R̄‖_{L²}` as a real coefficient of `π`.
    #[serde(with = "serde_f64_17")]
    pub deviation_norm: f64,
    /// `R̄√V` as a real number (includes the factor `π`).
    #[serde(with = "serde_f64_17")]
    pub rbar_sqrt_vol: f64,
    /// `Y² > ‖R − R̄‖²`, decided exactly.
    pub bound_valid: bool,
    /// `max(6, R̄√V) / (Y − ‖R − R̄‖)`, present iff `bound_valid`. Holds at
    /// every later time of the flow started at this energy.
    #[serde(with = "serde_f64_17::option")]
    pub sobolev_upper: Option<f64>,
    /// `max(6, R̄√V) / (Y − ‖R − R̄‖)`; same as `sobolev_upper`.
    #[serde(with = "serde_f64_17::option")]
    pub conservative_form: Option<f64>,
    /// `R̄√V / (Y − ‖R − R̄‖)`, dropping the gradient coefficient 6.
    #[serde(with = "serde_f64_17::option")]
    #[serde(rename = "paper_form")]
    pub reduced_form: Option<f64>,
}

pub fn sobolev_upper_bound(
    w: &CohomologyClass,
    energy: &EnergyQuantity,
    futaki_norm_sq: &EnergyQuantity,
) -> Result<SobolevBoundReport, SobolevError> {
    let mean = mean_scalar_data(w)?;
    if energy < &mean.rbar_sq_vol {
        return Err(SobolevError::InconsistentEnergy {
            energy: energy.to_string(),
            minimum: mean.rbar_sq_vol.to_string(),
        });
    }
    let a = calabi_lower_bound_a(w, futaki_norm_sq)?;
    if energy < &a {
        return Err(SobolevError::BelowLowerBound {
            energy: energy.to_string(),
            lower_bound: a.to_string(),
        });
    }

    let yamabe_sq = yamabe_sq_lower_bound(w.model(), energy);
    let deviation_sq = energy - &mean.rbar_sq_vol;
    let bound_valid = yamabe_sq > deviation_sq;

    let pi = std::f64::consts::PI;
    let y_coeff = to_f64(yamabe_sq.pi2_coeff());
    let d_coeff = to_f64(deviation_sq.pi2_coeff());
    let deviation_norm = d_coeff.sqrt();
    let rbar_sqrt_vol = pi * to_f64(mean.rbar_sqrt_vol_sq.pi2_coeff()).sqrt();

    let (conservative, reduced) = if bound_valid {
        // Both terms carry a factor π: Y = π√y, ‖R − R̄‖ = π√d.
        let gap = pi * (y_coeff.sqrt() - deviation_norm);
        (
            Some(rbar_sqrt_vol.max(6.0) / gap),
            Some(rbar_sqrt_vol / gap),
        )
    } else {
        (None, None)
    };

    Ok(SobolevBoundReport {
        yamabe_sq_lower_exact: yamabe_sq,
        deviation_sq_exact: deviation_sq,
        yamabe_sq_lower: y_coeff,
        deviation_norm,
        rbar_sqrt_vol,
        bound_valid,
        sobolev_upper: conservative,
        conservative_form: conservative,
        reduced_form: reduced,
    })
}
