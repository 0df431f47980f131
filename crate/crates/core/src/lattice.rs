//! Second cohomology of the projective plane blown up at `b` points.
//!
//! **Sign convention.** A class is stored as `(h, e)` and denotes
//! `h·H − Σ eᵢ·Eᵢ`, the way Kähler classes such as `3H − ½(E₁+E₂+E₃)` are
//! usually written. Generic cohomology software stores `+Σ`; here the
//! exceptional divisor `Eᵢ` itself has `eᵢ = −1`.
//!
//! The intersection form has signature `(1, b)`: `H² = 1`, `Eᵢ² = −1`,
//! `H·Eᵢ = 0`. Everything is exact; there are no tolerances in this module.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{serde_fraction, serde_fraction_vec, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("dimension mismatch: class on {left} blowups paired with class on {right}")]
    Dimension { left: usize, right: usize },
    #[error("unsupported surface: operation implemented for 3 blowups, got {0}")]
    UnsupportedSurface(usize),
    #[error("exceptional divisor index {index} out of range for {blowups} blowups")]
    IndexOutOfRange { index: usize, blowups: usize },
}

/// `ℂP² ♯ b·(ℂP²)‾`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SurfaceModel {
    pub blowups: usize,
}

impl SurfaceModel {
    pub const fn new(blowups: usize) -> Self {
        Self { blowups }
    }

    /// The del Pezzo surface of degree six.
    pub const fn three_point_blowup() -> Self {
        Self { blowups: 3 }
    }

    pub fn euler_char(&self) -> i64 {
        3 + self.blowups as i64
    }

    pub fn signature(&self) -> i64 {
        1 - self.blowups as i64
    }

    /// `c₁² = 2χ + 3τ`.
    pub fn c1_squared(&self) -> i64 {
        2 * self.euler_char() + 3 * self.signature()
    }
}

/// A rational class `h·H − Σ eᵢ·Eᵢ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CohomologyClass {
    #[serde(with = "serde_fraction")]
    pub h: Q,
    #[serde(with = "serde_fraction_vec")]
    pub e: Vec<Q>,
}

impl CohomologyClass {
    pub fn new(h: Q, e: Vec<Q>) -> Self {
        Self { h, e }
    }

    pub fn zero(model: SurfaceModel) -> Self {
        Self::new(Q::zero(), vec![Q::zero(); model.blowups])
    }

    pub fn hyperplane(model: SurfaceModel) -> Self {
        Self::new(Q::from_integer(1.into()), vec![Q::zero(); model.blowups])
    }

    /// The exceptional curve `Eᵢ` (zero-based index). Stored with `eᵢ = −1`.
    pub fn exceptional(model: SurfaceModel, index: usize) -> Result<Self, LatticeError> {
        if index >= model.blowups {
            return Err(LatticeError::IndexOutOfRange {
                index,
                blowups: model.blowups,
            });
        }
        let mut e = vec![Q::zero(); model.blowups];
        e[index] = Q::from_integer((-1).into());
        Ok(Self::new(Q::zero(), e))
    }

    /// `h·H − x·ΣEᵢ`, the classes fixed by permuting the blowup points.
    pub fn symmetric(model: SurfaceModel, h: Q, x: Q) -> Self {
        Self::new(h, vec![x; model.blowups])
    }

    pub fn blowups(&self) -> usize {
        self.e.len()
    }

    pub fn model(&self) -> SurfaceModel {
        SurfaceModel::new(self.e.len())
    }

    /// Returns the common E-coefficient when all are equal.
    pub fn symmetric_coefficient(&self) -> Option<&Q> {
        let first = self.e.first()?;
        self.e.iter().all(|x| x == first).then_some(first)
    }

    pub fn scale(&self, lambda: &Q) -> Self {
        Self::new(
            &self.h * lambda,
            self.e.iter().map(|x| x * lambda).collect(),
        )
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, LatticeError> {
        same_dim(self, other)?;
        Ok(Self::new(
            &self.h + &other.h,
            self.e.iter().zip(&other.e).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, LatticeError> {
        same_dim(self, other)?;
        Ok(Self::new(
            &self.h - &other.h,
            self.e.iter().zip(&other.e).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Self-intersection `⟨w, w⟩`.
    pub fn square(&self) -> Q {
        pairing_unchecked(self, self)
    }
}

fn same_dim(a: &CohomologyClass, b: &CohomologyClass) -> Result<(), LatticeError> {
    if a.e.len() != b.e.len() {
        return Err(LatticeError::Dimension {
            left: a.e.len(),
            right: b.e.len(),
        });
    }
    Ok(())
}

fn pairing_unchecked(a: &CohomologyClass, b: &CohomologyClass) -> Q {
    a.e.iter()
        .zip(&b.e)
        .fold(&a.h * &b.h, |acc, (x, y)| acc - x * y)
}

/// Intersection pairing `h_a h_b − Σ e_{a,i} e_{b,i}`.
pub fn pairing(a: &CohomologyClass, b: &CohomologyClass) -> Result<Q, LatticeError> {
    same_dim(a, b)?;
    Ok(pairing_unchecked(a, b))
}

/// `c₁ = 3H − ΣEᵢ`.
pub fn first_chern(model: SurfaceModel) -> CohomologyClass {
    CohomologyClass::symmetric(
        model,
        Q::from_integer(BigInt::from(3)),
        Q::from_integer(BigInt::from(1)),
    )
}

/// Kähler-cone membership on the three-point blowup.
///
/// The cone of `ℂP² ♯ 3(ℂP²)‾` is cut out by `w² > 0` and positivity on its
/// six (−1)-curves: `Eᵢ` and `H − Eᵢ − Eⱼ`. Other surfaces are rejected.
pub fn kahler_cone_contains(
    model: SurfaceModel,
    w: &CohomologyClass,
) -> Result<bool, LatticeError> {
    if model.blowups != 3 {
        return Err(LatticeError::UnsupportedSurface(model.blowups));
    }
    if w.blowups() != 3 {
        return Err(LatticeError::Dimension {
            left: 3,
            right: w.blowups(),
        });
    }
    if !w.square().is_positive() {
        return Ok(false);
    }
    // ⟨w, Eᵢ⟩ = eᵢ under the storage convention.
    if !w.e.iter().all(Signed::is_positive) {
        return Ok(false);
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            let m = &w.h - &w.e[i] - &w.e[j];
            if !m.is_positive() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qi};
    use proptest::prelude::*;

    fn dp6() -> SurfaceModel {
        SurfaceModel::three_point_blowup()
    }

    fn omega(x: Q) -> CohomologyClass {
        CohomologyClass::symmetric(dp6(), qi(3), x)
    }

    #[test]
    fn topological_numbers() {
        let m = dp6();
        assert_eq!(m.euler_char(), 6);
        assert_eq!(m.signature(), -2);
        assert_eq!(m.c1_squared(), 6);
        for b in 0..=8 {
            let m = SurfaceModel::new(b);
            let c1 = first_chern(m);
            assert_eq!(c1.square(), qi(m.c1_squared()));
            assert_eq!(c1.square(), qi(9 - b as i64));
        }
    }

    #[test]
    fn pairing_examples() {
        let w = omega(q(1, 2));
        assert_eq!(pairing(&w, &w).unwrap(), q(33, 4));
        assert_eq!(pairing(&first_chern(dp6()), &w).unwrap(), q(15, 2));
        let h = CohomologyClass::hyperplane(dp6());
        for i in 0..3 {
            let e = CohomologyClass::exceptional(dp6(), i).unwrap();
            assert_eq!(pairing(&e, &e).unwrap(), qi(-1));
            assert_eq!(pairing(&h, &e).unwrap(), qi(0));
            assert_eq!(pairing(&w, &e).unwrap(), q(1, 2));
        }
        assert_eq!(pairing(&h, &h).unwrap(), qi(1));
    }

    #[test]
    fn pairing_dimension_error() {
        let a = CohomologyClass::hyperplane(SurfaceModel::new(2));
        let b = CohomologyClass::hyperplane(SurfaceModel::new(3));
        assert_eq!(
            pairing(&a, &b),
            Err(LatticeError::Dimension { left: 2, right: 3 })
        );
        assert!(CohomologyClass::exceptional(dp6(), 3).is_err());
    }

    #[test]
    fn kahler_cone_examples() {
        assert!(kahler_cone_contains(dp6(), &omega(q(1, 2))).unwrap());
        assert!(!kahler_cone_contains(dp6(), &omega(q(3, 2))).unwrap());
        assert!(!kahler_cone_contains(dp6(), &omega(qi(0))).unwrap());
        assert!(!kahler_cone_contains(dp6(), &omega(qi(2))).unwrap());
        assert!(kahler_cone_contains(dp6(), &first_chern(dp6())).unwrap());
        let asym = CohomologyClass::new(qi(3), vec![qi(1), q(1, 2), qi(2)]);
        assert!(!kahler_cone_contains(dp6(), &asym).unwrap());
    }

    #[test]
    fn kahler_cone_rejects_other_surfaces() {
        let m = SurfaceModel::new(2);
        assert_eq!(
            kahler_cone_contains(m, &first_chern(m)),
            Err(LatticeError::UnsupportedSurface(2))
        );
    }

    #[test]
    fn json_shape() {
        let w = omega(q(1, 2));
        let s = serde_json::to_string(&w).unwrap();
        assert_eq!(s, r#"{"h":"3","e":["1/2","1/2","1/2"]}"#);
    }

    fn rational() -> impl Strategy<Value = Q> {
        (-10_000i64..10_000, 1i64..500).prop_map(|(n, d)| q(n, d))
    }

    fn class(b: usize) -> impl Strategy<Value = CohomologyClass> {
        (rational(), proptest::collection::vec(rational(), b))
            .prop_map(|(h, e)| CohomologyClass::new(h, e))
    }

    proptest! {
        #[test]
        fn symmetric_family_cone_is_open_interval(n in -400i64..800, d in 1i64..200) {
            let x = q(n, d);
            let inside = x > qi(0) && x < q(3, 2);
            prop_assert_eq!(kahler_cone_contains(dp6(), &omega(x)).unwrap(), inside);
        }

        #[test]
        fn pairing_symmetric_and_bilinear(a in class(3), b in class(3), c in class(3), l in rational()) {
            prop_assert_eq!(pairing(&a, &b).unwrap(), pairing(&b, &a).unwrap());
            let lhs = pairing(&a.scale(&l).checked_add(&b).unwrap(), &c).unwrap();
            let rhs = &l * pairing(&a, &c).unwrap() + pairing(&b, &c).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn json_round_trip_is_exact(a in class(3)) {
            let s = serde_json::to_string(&a).unwrap();
            let back: CohomologyClass = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
