//! Toric scalar-flat ALE bubbles with `b₂ ∈ {1, 2, 3}`.
//!
//! A bubble is described by the self-intersection numbers of a chain of
//! holomorphic spheres: `(k)`, `(k, l)` or `(i, j, k)`. The intersection
//! matrix is tridiagonal with `−params` on the diagonal and `1` next to
//! it, and `|Γ|` is the absolute value of its determinant.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::energy::EnergyQuantity;
use crate::rational::{floor_i64, qi, serde_fraction, serde_fraction_vec, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BubbleError {
    #[error("b2 must be 1, 2 or 3, got {0}")]
    UnsupportedB2(usize),
    #[error("invalid parameters {params:?}: {reason}")]
    InvalidParams {
        params: Vec<i64>,
        reason: &'static str,
    },
    #[error("degenerate candidate {0:?}: group order is zero")]
    Degenerate(Vec<i64>),
    #[error("intersection form of {0:?} is not negative definite")]
    NotNegativeDefinite(Vec<i64>),
    #[error("budget must be positive for enumeration, got {0}")]
    NonPositiveBudget(String),
}

/// One bubble topology. Parameters are canonical: `k ≥ l` for `b₂ = 2`,
/// `i ≤ k` for `b₂ = 3` (the chain read backwards is the same bubble).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BubbleCandidate {
    pub b2: usize,
    pub params: Vec<i64>,
    pub group_order: i64,
    pub euler_char: i64,
}

/// `|det|` of the tridiagonal form with diagonal `−p` and off-diagonal `1`,
/// signed so that negative-definite chains give a positive value.
fn chain_determinant(p: &[i64]) -> i64 {
    // Continuant recursion for det(−Q): d_n = p_n d_{n−1} − d_{n−2}.
    let (mut prev, mut cur) = (1i64, 0i64);
    for (n, &x) in p.iter().enumerate() {
        let next = if n == 0 { x } else { x * cur - prev };
        if n > 0 {
            prev = cur;
        }
        cur = next;
    }
    cur
}

impl BubbleCandidate {
    /// Validates and canonicalizes a parameter tuple.
    pub fn new(params: &[i64]) -> Result<Self, BubbleError> {
        let invalid = |reason| BubbleError::InvalidParams {
            params: params.to_vec(),
            reason,
        };
        let canon: Vec<i64> = match *params {
            [k] => {
                if k < 1 {
                    return Err(invalid("need k >= 1"));
                }
                vec![k]
            }
            [a, b] => {
                let (k, l) = (a.max(b), a.min(b));
                if k < 2 || l < 1 {
                    return Err(invalid("need k >= 2 and l >= 1"));
                }
                vec![k, l]
            }
            [i, j, k] => {
                if i < 1 || j < 1 || k < 1 {
                    return Err(invalid("need i, j, k >= 1"));
                }
                if i <= k {
                    vec![i, j, k]
                } else {
                    vec![k, j, i]
                }
            }
            _ => return Err(BubbleError::UnsupportedB2(params.len())),
        };
        let order = chain_determinant(&canon);
        if order == 0 {
            return Err(BubbleError::Degenerate(canon));
        }
        let cand = Self {
            b2: canon.len(),
            euler_char: 1 + canon.len() as i64,
            params: canon,
            group_order: order,
        };
        if order < 0 || !cand.is_negative_definite() {
            return Err(BubbleError::NotNegativeDefinite(cand.params));
        }
        Ok(cand)
    }

    pub fn intersection_matrix(&self) -> Vec<Vec<i64>> {
        let n = self.params.len();
        (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| match r.abs_diff(c) {
                        0 => -self.params[r],
                        1 => 1,
                        _ => 0,
                    })
                    .collect()
            })
            .collect()
    }

    /// Sylvester's criterion on the leading principal minors of `Q`.
    pub fn is_negative_definite(&self) -> bool {
        (1..=self.params.len()).all(|n| chain_determinant(&self.params[..n]) > 0)
    }

    /// `c₁` in the basis of the sphere chain, solved from adjunction
    /// `c₁·Eᵢ = 2 + Eᵢ²` on the intersection form.
    pub fn c1_coeffs(&self) -> Vec<Q> {
        let q = self.intersection_matrix();
        let rhs: Vec<Q> = self.params.iter().map(|p| qi(2 - p)).collect();
        solve_exact(&q, &rhs)
    }
}

/// Gaussian elimination over `Q`; the matrix is assumed nonsingular.
fn solve_exact(m: &[Vec<i64>], rhs: &[Q]) -> Vec<Q> {
    let n = rhs.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .zip(rhs)
        .map(|(row, b)| row.iter().map(|&x| qi(x)).chain([b.clone()]).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).expect("singular");
        a.swap(col, pivot);
        let inv = Q::one() / &a[col][col];
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=n {
                    let delta = &f * &a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    a.into_iter().map(|row| row[n].clone()).collect()
}

fn ric0_pi2_coeff(c: &BubbleCandidate) -> Q {
    let one = Q::one();
    match c.params[..] {
        [k] => {
            let k = qi(k);
            let t = &k - qi(2);
            qi(8) * &t * &t / k
        }
        [k, l] => {
            let d = qi(c.group_order);
            let a = &one - qi(l + 1) / &d;
            let b = &one - qi(k + 1) / &d;
            qi(8) * (qi(k) * &a * &a + qi(l) * &b * &b) - qi(16) * &a * &b
        }
        [i, j, k] => {
            let d = qi(c.group_order);
            let a = &one - qi(j * k) / &d;
            let b = &one - qi(k + i) / &d;
            let cc = &one - qi(i * j) / &d;
            let tail = qi(2) - qi(j * (i + k)) / &d;
            qi(8) * (&a * &a * qi(i) + &b * &b * qi(j) + &cc * &cc * qi(k)) - qi(16) * &b * tail
        }
        _ => unreachable!("candidate b2 validated at construction"),
    }
}

/// `∫|Ric₀|²` from the toric closed forms.
pub fn ric0_energy(c: &BubbleCandidate) -> EnergyQuantity {
    EnergyQuantity::from_pi2(ric0_pi2_coeff(c))
}

/// `∫|W₋|² = 8π²(χ − 1/|Γ|) + ½∫|Ric₀|²` (Gauss-Bonnet on a scalar-flat ALE
/// Kähler surface).
pub fn wminus_energy(c: &BubbleCandidate) -> EnergyQuantity {
    let gb = qi(8) * (qi(c.euler_char) - Q::new(1.into(), c.group_order.into()));
    EnergyQuantity::from_pi2(gb + ric0_pi2_coeff(c) / qi(2))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BubbleEnergies {
    pub ric0: EnergyQuantity,
    pub wminus: EnergyQuantity,
    #[serde(with = "serde_fraction_vec")]
    pub c1_coeffs: Vec<Q>,
    /// `η(S³/Γ) = −∫|W₋|²/12π² − τ(M∞)` with `τ = −b₂`. Informational only.
    #[serde(with = "serde_fraction")]
    pub eta_invariant: Q,
}

pub fn energies(c: &BubbleCandidate) -> BubbleEnergies {
    let wminus = wminus_energy(c);
    let eta = -wminus.pi2_coeff() / qi(12) + qi(c.b2 as i64);
    BubbleEnergies {
        ric0: ric0_energy(c),
        wminus,
        c1_coeffs: c.c1_coeffs(),
        eta_invariant: eta,
    }
}

/// Largest parameter any candidate with `ric0 < budget` can carry.
///
/// For every sphere `E` of self-intersection `−p` in a negative-definite
/// chain, Cauchy-Schwarz on `−Q` gives `−c₁² ≥ (c₁·E)²/(−E²) = (p−2)²/p`.
/// Since `∫|Ric₀|² = −8π²c₁²` and `(p−2)²/p > p − 4`, a parameter
/// `p ≥ β + 4` with `β = budget/8π²` already exceeds the budget. So every
/// admissible parameter is at most `⌊β⌋ + 4`.
pub fn param_bound(ric0_budget: &EnergyQuantity) -> i64 {
    let beta = ric0_budget.pi2_coeff() / qi(8);
    floor_i64(&beta).unwrap_or(i64::MAX - 4).max(0) + 4
}

/// All canonical parameter tuples in `[1, bound]^b2`, lexicographic.
/// Tuples failing validation are skipped.
pub fn candidates_in_box(b2: usize, bound: i64) -> Box<dyn Iterator<Item = BubbleCandidate>> {
    match b2 {
        1 => Box::new((1..=bound).filter_map(|k| BubbleCandidate::new(&[k]).ok())),
        2 => Box::new(
            (2..=bound)
                .flat_map(move |k| (1..=k).filter_map(move |l| BubbleCandidate::new(&[k, l]).ok())),
        ),
        3 => Box::new((1..=bound).flat_map(move |i| {
            (1..=bound).flat_map(move |j| {
                (i..=bound).filter_map(move |k| BubbleCandidate::new(&[i, j, k]).ok())
            })
        })),
        _ => Box::new(std::iter::empty()),
    }
}

/// Lazily yields the candidates with `ric0 < budget` in lexicographic order.
pub fn candidates_within(
    b2: usize,
    ric0_budget: &EnergyQuantity,
) -> Result<impl Iterator<Item = BubbleCandidate>, BubbleError> {
    if !(1..=3).contains(&b2) {
        return Err(BubbleError::UnsupportedB2(b2));
    }
    let budget = ric0_budget.pi2_coeff().clone();
    let bound = if budget.is_positive() {
        param_bound(ric0_budget)
    } else {
        0
    };
    Ok(candidates_in_box(b2, bound).filter(move |c| ric0_pi2_coeff(c) < budget))
}

/// Triples with `|Γ| = 0` inside a box. These are not bubbles but are
/// reported rather than dropped.
pub fn degenerate_triples(bound: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for i in 1..=bound {
        for j in 1..=bound {
            for k in i..=bound {
                if chain_determinant(&[i, j, k]) == 0 {
                    out.push(vec![i, j, k]);
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Enumeration {
    pub b2: usize,
    pub ric0_budget: EnergyQuantity,
    /// Every admissible candidate has all parameters `<= param_bound`.
    pub param_bound: i64,
    pub candidates: Vec<BubbleCandidate>,
    /// Parameter triples in the search box whose group order vanishes.
    pub degenerate: Vec<Vec<i64>>,
}

pub fn enumerate_candidates(
    b2: usize,
    ric0_budget: &EnergyQuantity,
) -> Result<Enumeration, BubbleError> {
    if !ric0_budget.is_positive() {
        return Err(BubbleError::NonPositiveBudget(ric0_budget.to_string()));
    }
    let candidates: Vec<_> = candidates_within(b2, ric0_budget)?.collect();
    let bound = param_bound(ric0_budget);
    let degenerate = if b2 == 3 {
        degenerate_triples(bound)
    } else {
        Vec::new()
    };
    Ok(Enumeration {
        b2,
        ric0_budget: ric0_budget.clone(),
        param_bound: bound,
        candidates,
        degenerate,
    })
}

/// One catalog row, as exported by the CLI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    #[serde(flatten)]
    pub candidate: BubbleCandidate,
    #[serde(flatten)]
    pub energies: BubbleEnergies,
}

pub fn catalog(enumeration: &Enumeration) -> Vec<CatalogEntry> {
    enumeration
        .candidates
        .iter()
        .map(|c| CatalogEntry {
            candidate: c.clone(),
            energies: energies(c),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn cand(p: &[i64]) -> BubbleCandidate {
        BubbleCandidate::new(p).unwrap()
    }

    fn e(n: i64, d: i64) -> EnergyQuantity {
        EnergyQuantity::from_pi2(q(n, d))
    }

    #[test]
    fn group_orders() {
        assert_eq!(cand(&[5]).group_order, 5);
        assert_eq!(cand(&[2, 1]).group_order, 1);
        assert_eq!(cand(&[3, 2]).group_order, 5);
        assert_eq!(cand(&[2, 3, 4]).group_order, 24 - 6);
        assert_eq!(cand(&[1, 2, 2]).group_order, 1);
    }

    #[test]
    fn canonicalization() {
        assert_eq!(cand(&[1, 2]).params, vec![2, 1]);
        assert_eq!(cand(&[4, 2, 3]).params, vec![3, 2, 4]);
        assert_eq!(cand(&[4, 2, 3]), cand(&[3, 2, 4]));
    }

    #[test]
    fn rejections() {
        assert!(matches!(
            BubbleCandidate::new(&[1, 2, 1]),
            Err(BubbleError::Degenerate(_))
        ));
        assert!(matches!(
            BubbleCandidate::new(&[2, 1, 2]),
            Err(BubbleError::Degenerate(_))
        ));
        assert!(matches!(
            BubbleCandidate::new(&[1, 1, 5]),
            Err(BubbleError::NotNegativeDefinite(_))
        ));
        assert!(BubbleCandidate::new(&[1, 1]).is_err());
        assert!(BubbleCandidate::new(&[0]).is_err());
        assert!(matches!(
            BubbleCandidate::new(&[1, 1, 1, 1]),
            Err(BubbleError::UnsupportedB2(4))
        ));
    }

    #[test]
    fn ric0_examples() {
        assert_eq!(ric0_energy(&cand(&[2])), EnergyQuantity::zero());
        assert_eq!(ric0_energy(&cand(&[2, 1])), EnergyQuantity::from_int(16));
        assert_eq!(ric0_energy(&cand(&[5])), e(8 * 9, 5));
    }

    #[test]
    fn wminus_examples() {
        assert_eq!(wminus_energy(&cand(&[2, 1])), EnergyQuantity::from_int(24));
        for k in 1..200 {
            assert_eq!(wminus_energy(&cand(&[k])), e(4 * (k * k + 2), k));
        }
        for c in candidates_in_box(2, 30).filter(|c| c.group_order >= 2) {
            assert!(wminus_energy(&c) >= EnergyQuantity::from_int(20), "{c:?}");
        }
        for c in candidates_in_box(3, 12) {
            assert!(wminus_energy(&c) >= EnergyQuantity::from_int(24), "{c:?}");
        }
    }

    #[test]
    fn c1_matches_toric_formulas() {
        assert_eq!(cand(&[5]).c1_coeffs(), vec![q(3, 5)]);
        for c in candidates_in_box(2, 20) {
            let (k, l) = (c.params[0], c.params[1]);
            let d = qi(c.group_order);
            let expected = vec![qi(1) - qi(l + 1) / &d, qi(1) - qi(k + 1) / &d];
            assert_eq!(c.c1_coeffs(), expected);
        }
        for c in candidates_in_box(3, 12) {
            let (i, j, k) = (c.params[0], c.params[1], c.params[2]);
            let d = qi(c.group_order);
            let expected = vec![
                qi(1) - qi(j * k) / &d,
                qi(1) - qi(k + i) / &d,
                qi(1) - qi(i * j) / &d,
            ];
            assert_eq!(c.c1_coeffs(), expected);
        }
    }

    /// −8π² c₁ᵀ Q c₁ on the adjunction solution.
    fn quadratic_form_ric0(c: &BubbleCandidate) -> Q {
        let m = c.intersection_matrix();
        let v = c.c1_coeffs();
        let mut s = Q::zero();
        for (r, row) in m.iter().enumerate() {
            for (col, &x) in row.iter().enumerate() {
                s += &v[r] * &v[col] * qi(x);
            }
        }
        -qi(8) * s
    }

    #[test]
    fn closed_forms_equal_quadratic_form() {
        for b2 in 1..=3 {
            for c in candidates_in_box(b2, 50) {
                assert_eq!(
                    *ric0_energy(&c).pi2_coeff(),
                    quadratic_form_ric0(&c),
                    "{c:?}"
                );
            }
        }
    }

    #[test]
    fn energies_nonnegative() {
        for b2 in 1..=3 {
            for c in candidates_in_box(b2, 15) {
                let en = energies(&c);
                assert!(!en.ric0.is_negative() && !en.wminus.is_negative());
            }
        }
    }

    #[test]
    fn enumeration_examples() {
        let en = enumerate_candidates(1, &e(8 * 25, 11)).unwrap();
        let ks: Vec<i64> = en.candidates.iter().map(|c| c.params[0]).collect();
        assert_eq!(ks, vec![1, 2, 3, 4, 5]);

        let tiny = e(1, 1_000_000);
        let en = enumerate_candidates(1, &tiny).unwrap();
        assert_eq!(en.candidates, vec![cand(&[2])]);

        let en = enumerate_candidates(2, &e(8 * 23, 10)).unwrap();
        assert!(en.candidates.iter().all(|c| c.params[1] < 11));
        assert!(en.param_bound < 11);

        assert!(matches!(
            enumerate_candidates(4, &tiny),
            Err(BubbleError::UnsupportedB2(4))
        ));
        assert!(enumerate_candidates(1, &EnergyQuantity::zero()).is_err());
    }

    #[test]
    fn degenerate_triples_flagged() {
        assert_eq!(degenerate_triples(60), vec![vec![1, 2, 1], vec![2, 1, 2]]);
        let en = enumerate_candidates(3, &e(8 * 25, 11)).unwrap();
        assert_eq!(en.degenerate, vec![vec![1, 2, 1], vec![2, 1, 2]]);
    }

    #[test]
    fn enumeration_is_exactly_budget_filtered_set() {
        for (n, d) in [(200, 11), (8, 1), (40, 1), (1, 3)] {
            let budget = e(n, d);
            for b2 in 1..=3 {
                let got = enumerate_candidates(b2, &budget).unwrap().candidates;
                let want: Vec<_> = candidates_in_box(b2, 40)
                    .filter(|c| ric0_energy(c) < budget)
                    .collect();
                assert_eq!(got, want, "b2={b2} budget={budget}");
            }
        }
    }

    #[test]
    fn catalog_json() {
        let en = enumerate_candidates(2, &EnergyQuantity::from_int(20)).unwrap();
        let cat = catalog(&en);
        let v = serde_json::to_value(&cat).unwrap();
        assert_eq!(v[0]["params"], serde_json::json!([2, 1]));
        assert_eq!(v[0]["ric0"], "16 pi^2");
        assert_eq!(v[0]["wminus"], "24 pi^2");
        assert_eq!(v[0]["group_order"], 1);
    }

    proptest! {
        #[test]
        fn b2_one_identity(k in 1i64..=10_000) {
            let lhs = qi(8) * (qi(2) - q(1, k)) + q(8, 2) * q((k - 2) * (k - 2), k);
            prop_assert_eq!(lhs, q(4 * (k * k + 2), k));
            prop_assert_eq!(wminus_energy(&cand(&[k])).into_pi2_coeff(), q(4 * (k * k + 2), k));
        }

        #[test]
        fn chain_forms_negative_definite(i in 1i64..80, j in 1i64..80, k in 1i64..80) {
            if let Ok(c) = BubbleCandidate::new(&[i, j, k]) {
                prop_assert!(c.is_negative_definite());
                prop_assert!(c.group_order >= 1);
            }
        }
    }
}
