//! Calabi-energy functionals on a Kähler class.
//!
//! Every energy that appears in the exclusion argument is an exact rational
//! multiple of `π²`, so [`EnergyQuantity`] stores only that coefficient.
//! Square roots are taken downstream in [`crate::sobolev`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lattice::{first_chern, pairing, CohomologyClass, LatticeError, SurfaceModel};
use crate::rational::{format_fraction, parse_fraction, qi, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnergyError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("degenerate class: self-intersection {0} is not positive")]
    DegenerateClass(String),
    #[error("Futaki norm squared must be nonnegative, got {0}")]
    NegativeFutaki(String),
    #[error("energy must be positive, got {0}")]
    NonPositiveEnergy(String),
}

/// `q·π²` with `q` exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct EnergyQuantity {
    pi2_coeff: Q,
}

impl EnergyQuantity {
    pub fn from_pi2(pi2_coeff: Q) -> Self {
        Self { pi2_coeff }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_pi2(qi(n))
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn pi2_coeff(&self) -> &Q {
        &self.pi2_coeff
    }

    pub fn into_pi2_coeff(self) -> Q {
        self.pi2_coeff
    }

    pub fn is_negative(&self) -> bool {
        self.pi2_coeff.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.pi2_coeff.is_positive()
    }

    pub fn scale(&self, by: &Q) -> Self {
        Self::from_pi2(&self.pi2_coeff * by)
    }

    /// Approximate value including the `π²` factor.
    pub fn to_f64(&self) -> f64 {
        crate::rational::to_f64(&self.pi2_coeff) * std::f64::consts::PI.powi(2)
    }

    /// Parses `"p/q"`, `"p/q pi^2"` or `"p/q π²"`; the unit is always `π²`.
    pub fn parse(s: &str) -> Result<Self, crate::rational::ParseFractionError> {
        let t = s.trim();
        let t = t
            .strip_suffix("pi^2")
            .or_else(|| t.strip_suffix("π²"))
            .unwrap_or(t);
        parse_fraction(t.trim()).map(Self::from_pi2)
    }
}

impl fmt::Display for EnergyQuantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} pi^2", format_fraction(&self.pi2_coeff))
    }
}

impl Serialize for EnergyQuantity {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EnergyQuantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

macro_rules! energy_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&EnergyQuantity> for &EnergyQuantity {
            type Output = EnergyQuantity;
            fn $m(self, rhs: &EnergyQuantity) -> EnergyQuantity {
                EnergyQuantity::from_pi2((&self.pi2_coeff).$m(&rhs.pi2_coeff))
            }
        }
        impl $tr for EnergyQuantity {
            type Output = EnergyQuantity;
            fn $m(self, rhs: EnergyQuantity) -> EnergyQuantity {
                (&self).$m(&rhs)
            }
        }
    };
}
energy_binop!(Add, add);
energy_binop!(Sub, sub);

impl Mul<&Q> for &EnergyQuantity {
    type Output = EnergyQuantity;
    fn mul(self, rhs: &Q) -> EnergyQuantity {
        self.scale(rhs)
    }
}

impl Neg for EnergyQuantity {
    type Output = EnergyQuantity;
    fn neg(self) -> EnergyQuantity {
        EnergyQuantity::from_pi2(-self.pi2_coeff)
    }
}

/// `R̄²·V` for the class, carried twice: once as the mean-square term and
/// once as `(R̄√V)²` so callers can take the root themselves.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeanScalarData {
    pub rbar_sq_vol: EnergyQuantity,
    pub rbar_sqrt_vol_sq: EnergyQuantity,
}

/// `⟨c₁,w⟩² / ⟨w,w⟩`, the degree-zero ratio every functional is built on.
fn chern_ratio(w: &CohomologyClass) -> Result<Q, EnergyError> {
    let sq = w.square();
    if !sq.is_positive() {
        return Err(EnergyError::DegenerateClass(format_fraction(&sq)));
    }
    let c1w = pairing(&first_chern(w.model()), w)?;
    Ok(&c1w * &c1w / sq)
}

fn check_futaki(futaki_norm_sq: &EnergyQuantity) -> Result<(), EnergyError> {
    if futaki_norm_sq.is_negative() {
        return Err(EnergyError::NegativeFutaki(futaki_norm_sq.to_string()));
    }
    Ok(())
}

fn c1_sq(w: &CohomologyClass) -> Q {
    qi(w.model().c1_squared())
}

pub fn mean_scalar_data(w: &CohomologyClass) -> Result<MeanScalarData, EnergyError> {
    let v = EnergyQuantity::from_pi2(qi(32) * chern_ratio(w)?);
    Ok(MeanScalarData {
        rbar_sq_vol: v.clone(),
        rbar_sqrt_vol_sq: v,
    })
}

/// `𝒜 = 32π²⟨c₁,w⟩²/⟨w,w⟩ + ‖ℱ‖²`, the lower bound of the Calabi energy.
pub fn calabi_lower_bound_a(
    w: &CohomologyClass,
    futaki_norm_sq: &EnergyQuantity,
) -> Result<EnergyQuantity, EnergyError> {
    check_futaki(futaki_norm_sq)?;
    let base = EnergyQuantity::from_pi2(qi(32) * chern_ratio(w)?);
    Ok(&base + futaki_norm_sq)
}

/// `ℬ = 32π²(c₁² + ⅓⟨c₁,w⟩²/⟨w,w⟩) + ⅓‖ℱ‖²`.
pub fn energy_threshold_b(
    w: &CohomologyClass,
    futaki_norm_sq: &EnergyQuantity,
) -> Result<EnergyQuantity, EnergyError> {
    check_futaki(futaki_norm_sq)?;
    let third = Q::new(1.into(), 3.into());
    let inner = c1_sq(w) + &third * chern_ratio(w)?;
    Ok(&EnergyQuantity::from_pi2(qi(32) * inner) + &futaki_norm_sq.scale(&third))
}

/// `c₁² − ⅔⟨c₁,w⟩²/⟨w,w⟩ > 0`.
pub fn tian_cone(w: &CohomologyClass) -> Result<bool, EnergyError> {
    let two_thirds = Q::new(2.into(), 3.into());
    Ok((c1_sq(w) - two_thirds * chern_ratio(w)?).is_positive())
}

/// `48π²c₁² > 𝒜`.
pub fn generalized_tian_cone(
    w: &CohomologyClass,
    futaki_norm_sq: &EnergyQuantity,
) -> Result<bool, EnergyError> {
    let a = calabi_lower_bound_a(w, futaki_norm_sq)?;
    Ok(EnergyQuantity::from_pi2(qi(48) * c1_sq(w)).cmp(&a) == Ordering::Greater)
}

/// Upper bounds for `∫|Ric₀|²` and `∫|W₋|²` on the compact surface.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompactBudgets {
    pub ric0_budget: EnergyQuantity,
    pub wminus_budget: EnergyQuantity,
}

/// Curvature budgets from the Gauss-Bonnet and signature formulas together
/// with the Kähler identity `∫|W₊|² = ∫R²/24`:
///
/// * `∫|Ric₀|² = E/4 − 8π²c₁²`
/// * `∫|W₋|²  = E/24 − 12π²τ`
///
/// On the three-point blowup these read `E/4 − 48π²` and `E/24 + 24π²`.
pub fn compact_budgets(
    model: SurfaceModel,
    energy: &EnergyQuantity,
) -> Result<CompactBudgets, EnergyError> {
    if !energy.is_positive() {
        return Err(EnergyError::NonPositiveEnergy(energy.to_string()));
    }
    let e = energy.pi2_coeff();
    let ric0 = e / qi(4) - qi(8 * model.c1_squared());
    let wminus = e / qi(24) - qi(12 * model.signature());
    Ok(CompactBudgets {
        ric0_budget: EnergyQuantity::from_pi2(ric0),
        wminus_budget: EnergyQuantity::from_pi2(wminus),
    })
}

/// Everything the class alone determines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassAnalysis {
    pub kahler_class: CohomologyClass,
    pub unit: String,
    pub futaki_norm_sq: EnergyQuantity,
    #[serde(rename = "A")]
    pub lower_bound_a: EnergyQuantity,
    #[serde(rename = "B")]
    pub threshold_b: EnergyQuantity,
    pub rbar_sq_vol: EnergyQuantity,
    pub in_tian_cone: bool,
    pub in_generalized_tian_cone: bool,
}

pub fn analyze_class(
    w: &CohomologyClass,
    futaki_norm_sq: &EnergyQuantity,
) -> Result<ClassAnalysis, EnergyError> {
    let a = calabi_lower_bound_a(w, futaki_norm_sq)?;
    let b = energy_threshold_b(w, futaki_norm_sq)?;
    Ok(ClassAnalysis {
        kahler_class: w.clone(),
        unit: "pi^2".to_string(),
        futaki_norm_sq: futaki_norm_sq.clone(),
        lower_bound_a: a,
        threshold_b: b,
        rbar_sq_vol: mean_scalar_data(w)?.rbar_sq_vol,
        in_tian_cone: tian_cone(w)?,
        in_generalized_tian_cone: generalized_tian_cone(w, futaki_norm_sq)?,
    })
}

impl Zero for EnergyQuantity {
    fn zero() -> Self {
        Self::default()
    }
    fn is_zero(&self) -> bool {
        self.pi2_coeff.is_zero()
    }
}
