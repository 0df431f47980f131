//! Case-by-case exclusion of maximal bubbles on the three-point blowup.
//!
//! For each `b₂ ∈ {1, 2, 3}` the engine walks every bubble candidate whose
//! `∫|Ric₀|²` fits the compact budget and tries to close both branches:
//!
//! * **not ℤ₃-invariant**: three disjoint copies would form, so both
//!   `3∫|W₋|² < W₋ budget` and `3∫|Ric₀|² < Ric₀ budget` must hold. If
//!   either fails the bubble has to be invariant.
//! * **ℤ₃-invariant**: every generating sphere is then a limit of invariant
//!   classes `mH − n(E₁+E₂+E₃)` with `m² − 3n² = −p` and `⟨w, S⟩ = 0`.
//!   For a rational class `⟨w, S⟩` ranges over a discrete set, so the
//!   vanishing is exact.
//!
//! All comparisons are exact rationals times `π²`.

use std::fmt::Write as _;

use num_integer::Roots;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubbles::{
    candidates_within, param_bound, ric0_energy, wminus_energy, BubbleCandidate, BubbleError,
};
use crate::energy::{
    calabi_lower_bound_a, compact_budgets, energy_threshold_b, CompactBudgets, EnergyError,
    EnergyQuantity,
};
use crate::lattice::{kahler_cone_contains, CohomologyClass, LatticeError};
use crate::rational::{format_fraction, q, qi, serde_fraction, Q};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExclusionError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Bubble(#[from] BubbleError),
    #[error("class is not in the Kähler cone")]
    NotKahler,
    #[error("Lagrangian solver needs equal exceptional coefficients (a ℤ₃-fixed class)")]
    UnsupportedSymmetry,
    #[error("self-intersection must be negative, got {0}")]
    InvalidSelfIntersection(i64),
    #[error("class pairs to zero with every sphere class")]
    DegenerateClass,
    #[error("symmetry order must be 1 or 3, got {0}")]
    InvalidSymmetryOrder(u32),
    #[error("initial energy {energy} is below the lower bound A = {lower_bound}")]
    EnergyBelowLowerBound { energy: String, lower_bound: String },
    #[error("threshold search: {0}")]
    ThresholdSearch(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionInput {
    pub kahler_class: CohomologyClass,
    pub initial_energy: EnergyQuantity,
    /// 3 when the initial metric is ℤ₃-invariant, 1 otherwise.
    pub symmetry_order: u32,
    pub futaki_norm_sq: EnergyQuantity,
}

/// How many generating spheres must admit Lagrangian invariant classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorRule {
    #[default]
    All,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionOptions {
    pub generators: GeneratorRule,
    /// Stop a case once this many survivors are found (the verdict is
    /// already settled). `usize::MAX` walks every candidate.
    pub max_survivors: usize,
    /// Cap on per-candidate verdicts kept in the report.
    pub max_listed: usize,
}

impl Default for ExclusionOptions {
    fn default() -> Self {
        Self {
            generators: GeneratorRule::All,
            max_survivors: 64,
            max_listed: 10_000,
        }
    }
}

impl ExclusionOptions {
    pub fn exhaustive() -> Self {
        Self {
            max_survivors: usize::MAX,
            max_listed: usize::MAX,
            ..Self::default()
        }
    }
}

/// An invariant class `mH − n(E₁+E₂+E₃)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SphereClassSolution {
    pub m: i64,
    pub n: i64,
    pub self_intersection: i64,
    #[serde(with = "serde_fraction")]
    pub pairing_with_class: Q,
}

impl SphereClassSolution {
    fn new(m: i64, n: i64, w: &CohomologyClass) -> Self {
        let x = w.e.first().cloned().unwrap_or_default();
        Self {
            m,
            n,
            self_intersection: m * m - 3 * n * n,
            pairing_with_class: &w.h * qi(m) - qi(3 * n) * x,
        }
    }

    fn negated(&self) -> Self {
        Self {
            m: -self.m,
            n: -self.n,
            self_intersection: self.self_intersection,
            pairing_with_class: -self.pairing_with_class.clone(),
        }
    }

    /// `⟨S, S'⟩ = mm' − 3nn'`.
    pub fn pairing(&self, other: &Self) -> i64 {
        self.m * other.m - 3 * self.n * other.n
    }
}

/// Primitive invariant direction `(a, b)` with `⟨w, aH − bΣE⟩ = 0`, `b > 0`
/// (or `b = 0, a > 0`), together with `3b² − a²`.
fn lagrangian_direction(w: &CohomologyClass) -> Result<Option<(i64, i64, i64)>, ExclusionError> {
    if w.blowups() != 3 {
        return Err(LatticeError::UnsupportedSurface(w.blowups()).into());
    }
    let x = w
        .symmetric_coefficient()
        .ok_or(ExclusionError::UnsupportedSymmetry)?;
    if w.h.is_zero() {
        if x.is_zero() {
            return Err(ExclusionError::DegenerateClass);
        }
        // n = 0 is forced; then m² = −k has no solution.
        return Ok(None);
    }
    // h·m = 3x·n  ⇒  m/n = 3x/h.
    let ratio = qi(3) * x / &w.h;
    use num_traits::ToPrimitive;
    let (Some(a), Some(b)) = (ratio.numer().to_i64(), ratio.denom().to_i64()) else {
        return Ok(None);
    };
    let norm = 3 * b * b - a * a;
    Ok((norm > 0).then_some((a, b, norm)))
}

/// All invariant classes `S = mH − n(E₁+E₂+E₃)` with `⟨w, S⟩ = 0` and
/// `S² = self_int`, one representative per `±` pair (`n > 0`).
pub fn lagrangian_solutions(
    w: &CohomologyClass,
    self_int: i64,
) -> Result<Vec<SphereClassSolution>, ExclusionError> {
    if self_int >= 0 {
        return Err(ExclusionError::InvalidSelfIntersection(self_int));
    }
    let k = -self_int;
    let Some((a, b, norm)) = lagrangian_direction(w)? else {
        return Ok(Vec::new());
    };
    // Solutions are t·(a, b) with t²·norm = k.
    if k % norm != 0 {
        return Ok(Vec::new());
    }
    let t_sq = k / norm;
    let t = t_sq.sqrt();
    if t * t != t_sq {
        return Ok(Vec::new());
    }
    Ok(vec![SphereClassSolution::new(t * a, t * b, w)])
}

/// Smallest `p ≥ 1` for which a `(−p)`-sphere admits an invariant
/// Lagrangian class.
pub fn min_lagrangian_parameter(w: &CohomologyClass) -> Result<Option<i64>, ExclusionError> {
    Ok(lagrangian_direction(w)?.map(|(_, _, norm)| norm))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trichotomy {
    pub must_be_invariant: bool,
    pub wminus_triple: EnergyQuantity,
    pub ric0_triple: EnergyQuantity,
    /// `3∫|W₋|² < W₋ budget`.
    pub wminus_triple_fits: bool,
    /// `3∫|Ric₀|² < Ric₀ budget`.
    pub ric0_triple_fits: bool,
    pub reason: String,
}

pub fn z3_trichotomy(c: &BubbleCandidate, budgets: &CompactBudgets) -> Trichotomy {
    let three = qi(3);
    let wminus_triple = wminus_energy(c).scale(&three);
    let ric0_triple = ric0_energy(c).scale(&three);
    let wminus_triple_fits = wminus_triple < budgets.wminus_budget;
    let ric0_triple_fits = ric0_triple < budgets.ric0_budget;
    let must_be_invariant = !(wminus_triple_fits && ric0_triple_fits);
    let reason = match (wminus_triple_fits, ric0_triple_fits) {
        (false, false) => format!(
            "3·W- = {} >= {} and 3·Ric0 = {} >= {}",
            wminus_triple, budgets.wminus_budget, ric0_triple, budgets.ric0_budget
        ),
        (false, true) => format!("3·W- = {} >= {}", wminus_triple, budgets.wminus_budget),
        (true, false) => format!("3·Ric0 = {} >= {}", ric0_triple, budgets.ric0_budget),
        (true, true) => "three copies fit both budgets".to_string(),
    };
    Trichotomy {
        must_be_invariant,
        wminus_triple,
        ric0_triple,
        wminus_triple_fits,
        ric0_triple_fits,
        reason,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum KillReason {
    EnergyBudget,
    TripleCopyBudget,
    NoLagrangianSolution,
    SelfIntersectionMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OpenReason {
    /// Three disjoint copies fit both budgets; nothing forces invariance.
    TripleCopyFits,
    /// No symmetry, so invariance cannot be forced.
    TripleCopyUnavailable,
    /// Every required generator has an invariant Lagrangian class.
    LagrangianRealized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "lowercase")]
pub enum Fate {
    Killed(KillReason),
    Survives(OpenReason),
}

impl Fate {
    pub fn survives(&self) -> bool {
        matches!(self, Fate::Survives(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateVerdict {
    pub candidate: BubbleCandidate,
    pub ric0: EnergyQuantity,
    pub wminus: EnergyQuantity,
    pub trichotomy: Option<Trichotomy>,
    /// Lagrangian classes per diagonal parameter, empty if not computed.
    pub generator_solutions: Vec<Vec<SphereClassSolution>>,
    /// Status of the non-invariant branch.
    pub non_invariant_branch: Fate,
    /// Status of the invariant branch, when it had to be examined.
    pub invariant_branch: Option<Fate>,
    pub fate: Fate,
}

impl CandidateVerdict {
    pub fn kill_reason(&self) -> Option<KillReason> {
        match self.fate {
            Fate::Killed(r) => Some(r),
            Fate::Survives(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseReport {
    pub b2: usize,
    pub ric0_budget: EnergyQuantity,
    pub wminus_budget: EnergyQuantity,
    /// `ric0_budget / 8π²`, the exact right-hand side for the `Ric₀` test.
    #[serde(with = "serde_fraction")]
    pub exact_ric0_ratio: Q,
    /// Every energy-admissible candidate has parameters `<= param_bound`.
    pub param_bound: i64,
    /// Smallest self-intersection magnitude with an invariant Lagrangian
    /// class. Candidates whose generators all satisfy the Lagrangian
    /// condition have every parameter `>=` this.
    pub min_lagrangian_parameter: Option<i64>,
    /// True when no candidate with all parameters Lagrangian-admissible fits
    /// the budget (`min_lagrangian_parameter > param_bound`).
    pub lagrangian_candidates_exceed_budget: Option<bool>,
    /// Every examined candidate was forced to be ℤ₃-invariant.
    pub forced_invariant: bool,
    pub forcing_inequality: Option<String>,
    pub examined: usize,
    /// False when the walk stopped early after enough survivors.
    pub complete: bool,
    pub candidates: Vec<CandidateVerdict>,
    pub surviving_candidates: Vec<BubbleCandidate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Excluded,
    NotExcluded,
}

/// Rounded constants used in the hand computation, kept for comparison
/// next to the exact values the engine actually uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundedReference {
    pub ric0_ratio: String,
    pub case1_energy: String,
}

impl Default for RoundedReference {
    fn default() -> Self {
        Self {
            ric0_ratio: "2.1".to_string(),
            case1_energy: "258.9 pi^2".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub schema: u32,
    pub verdict: Verdict,
    pub input: ExclusionInput,
    pub generator_rule: GeneratorRule,
    pub lower_bound_a: EnergyQuantity,
    pub threshold_b: EnergyQuantity,
    pub rounded_reference: RoundedReference,
    pub per_case: Vec<CaseReport>,
}

fn validate(input: &ExclusionInput) -> Result<EnergyQuantity, ExclusionError> {
    if !matches!(input.symmetry_order, 1 | 3) {
        return Err(ExclusionError::InvalidSymmetryOrder(input.symmetry_order));
    }
    let w = &input.kahler_class;
    if !kahler_cone_contains(w.model(), w)? {
        return Err(ExclusionError::NotKahler);
    }
    let a = calabi_lower_bound_a(w, &input.futaki_norm_sq)?;
    if input.initial_energy < a {
        return Err(ExclusionError::EnergyBelowLowerBound {
            energy: input.initial_energy.to_string(),
            lower_bound: a.to_string(),
        });
    }
    Ok(a)
}

/// Signs `±` for each generator so that consecutive spheres meet once and
/// non-adjacent ones not at all.
fn realizes_chain(choices: &[Vec<SphereClassSolution>]) -> bool {
    fn go(choices: &[Vec<SphereClassSolution>], picked: &mut Vec<SphereClassSolution>) -> bool {
        let idx = picked.len();
        if idx == choices.len() {
            return true;
        }
        for base in &choices[idx] {
            for s in [base.clone(), base.negated()] {
                let ok = picked.iter().enumerate().all(|(j, prev)| {
                    let want = if idx - j == 1 { 1 } else { 0 };
                    prev.pairing(&s) == want
                });
                if ok {
                    picked.push(s);
                    if go(choices, picked) {
                        return true;
                    }
                    picked.pop();
                }
            }
        }
        false
    }
    go(choices, &mut Vec::new())
}

fn judge(
    c: BubbleCandidate,
    input: &ExclusionInput,
    budgets: &CompactBudgets,
    rule: GeneratorRule,
) -> Result<CandidateVerdict, ExclusionError> {
    let ric0 = ric0_energy(&c);
    let wminus = wminus_energy(&c);
    let mut verdict = CandidateVerdict {
        candidate: c,
        ric0,
        wminus,
        trichotomy: None,
        generator_solutions: Vec::new(),
        non_invariant_branch: Fate::Survives(OpenReason::TripleCopyUnavailable),
        invariant_branch: None,
        fate: Fate::Survives(OpenReason::TripleCopyUnavailable),
    };
    if input.symmetry_order != 3 {
        return Ok(verdict);
    }
    let tri = z3_trichotomy(&verdict.candidate, budgets);
    let forced = tri.must_be_invariant;
    verdict.trichotomy = Some(tri);
    if !forced {
        verdict.non_invariant_branch = Fate::Survives(OpenReason::TripleCopyFits);
        verdict.fate = verdict.non_invariant_branch;
        return Ok(verdict);
    }
    verdict.non_invariant_branch = Fate::Killed(KillReason::TripleCopyBudget);

    let w = &input.kahler_class;
    let sols = verdict
        .candidate
        .params
        .iter()
        .map(|&p| lagrangian_solutions(w, -p))
        .collect::<Result<Vec<_>, _>>()?;
    let realized = match rule {
        GeneratorRule::All => sols.iter().all(|s| !s.is_empty()),
        GeneratorRule::Any => sols.iter().any(|s| !s.is_empty()),
    };
    let inv = if !realized {
        Fate::Killed(KillReason::NoLagrangianSolution)
    } else if rule == GeneratorRule::All && !realizes_chain(&sols) {
        Fate::Killed(KillReason::SelfIntersectionMismatch)
    } else if verdict.ric0 >= budgets.ric0_budget {
        Fate::Killed(KillReason::EnergyBudget)
    } else {
        Fate::Survives(OpenReason::LagrangianRealized)
    };
    verdict.generator_solutions = sols;
    verdict.invariant_branch = Some(inv);
    verdict.fate = inv;
    Ok(verdict)
}

fn run_case(
    b2: usize,
    input: &ExclusionInput,
    budgets: &CompactBudgets,
    opts: &ExclusionOptions,
) -> Result<CaseReport, ExclusionError> {
    let exact_ratio = budgets.ric0_budget.pi2_coeff() / qi(8);
    let bound = if budgets.ric0_budget.is_positive() {
        param_bound(&budgets.ric0_budget)
    } else {
        0
    };
    let min_lag = if input.symmetry_order == 3 {
        min_lagrangian_parameter(&input.kahler_class)?
    } else {
        None
    };

    let mut examined = 0usize;
    let mut complete = true;
    let mut candidates = Vec::new();
    let mut survivors = Vec::new();
    let mut all_forced = true;
    let mut forcing: Option<String> = None;
    for c in candidates_within(b2, &budgets.ric0_budget)? {
        if survivors.len() >= opts.max_survivors {
            complete = false;
            break;
        }
        let v = judge(c, input, budgets, opts.generators)?;
        examined += 1;
        match &v.trichotomy {
            Some(t) if t.must_be_invariant => {
                let which = match (t.wminus_triple_fits, t.ric0_triple_fits) {
                    (false, false) => "3·W- >= W- budget and 3·Ric0 >= Ric0 budget",
                    (false, true) => "3·W- >= W- budget",
                    _ => "3·Ric0 >= Ric0 budget",
                };
                forcing = match forcing {
                    None => Some(which.to_string()),
                    Some(f) if f == which => Some(f),
                    Some(_) => Some("3·W- or 3·Ric0 over budget, by candidate".to_string()),
                };
            }
            _ => all_forced = false,
        }
        if v.fate.survives() {
            survivors.push(v.candidate.clone());
        }
        if candidates.len() < opts.max_listed {
            candidates.push(v);
        }
    }
    let forced_invariant = input.symmetry_order == 3 && all_forced && examined > 0;

    Ok(CaseReport {
        b2,
        ric0_budget: budgets.ric0_budget.clone(),
        wminus_budget: budgets.wminus_budget.clone(),
        exact_ric0_ratio: exact_ratio,
        param_bound: bound,
        min_lagrangian_parameter: min_lag,
        lagrangian_candidates_exceed_budget: min_lag.map(|p| p > bound),
        forced_invariant,
        forcing_inequality: if forced_invariant { forcing } else { None },
        examined,
        complete,
        candidates,
        surviving_candidates: survivors,
    })
}

pub fn exclude_with(
    input: &ExclusionInput,
    opts: &ExclusionOptions,
) -> Result<ExclusionReport, ExclusionError> {
    let a = validate(input)?;
    let b = energy_threshold_b(&input.kahler_class, &input.futaki_norm_sq)?;
    let budgets = compact_budgets(input.kahler_class.model(), &input.initial_energy)?;
    let per_case = [1usize, 2, 3]
        .par_iter()
        .map(|&b2| run_case(b2, input, &budgets, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let verdict = if per_case.iter().all(|c| c.surviving_candidates.is_empty()) {
        Verdict::Excluded
    } else {
        Verdict::NotExcluded
    };
    Ok(ExclusionReport {
        schema: REPORT_SCHEMA,
        verdict,
        input: input.clone(),
        generator_rule: opts.generators,
        lower_bound_a: a,
        threshold_b: b,
        rounded_reference: RoundedReference::default(),
        per_case,
    })
}

pub fn exclude(input: &ExclusionInput) -> Result<ExclusionReport, ExclusionError> {
    exclude_with(input, &ExclusionOptions::default())
}

/// Bracket `[excluded_at, not_excluded_at]` around the energy where the
/// verdict flips, with width `<= resolution`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipThreshold {
    pub excluded_at: EnergyQuantity,
    pub not_excluded_at: EnergyQuantity,
    pub resolution: EnergyQuantity,
}

/// Bisects on exact rationals. The verdict is monotone in energy because
/// every survival test compares a fixed candidate energy with a budget that
/// grows with the energy.
pub fn flip_threshold(
    kahler_class: &CohomologyClass,
    symmetry_order: u32,
    futaki_norm_sq: &EnergyQuantity,
    opts: &ExclusionOptions,
    resolution: &EnergyQuantity,
) -> Result<FlipThreshold, ExclusionError> {
    if !resolution.is_positive() {
        return Err(ExclusionError::ThresholdSearch(
            "resolution must be positive",
        ));
    }
    let verdict = |energy: &EnergyQuantity| -> Result<Verdict, ExclusionError> {
        let input = ExclusionInput {
            kahler_class: kahler_class.clone(),
            initial_energy: energy.clone(),
            symmetry_order,
            futaki_norm_sq: futaki_norm_sq.clone(),
        };
        Ok(exclude_with(&input, opts)?.verdict)
    };
    let mut lo = calabi_lower_bound_a(kahler_class, futaki_norm_sq)?;
    if verdict(&lo)? != Verdict::Excluded {
        return Err(ExclusionError::ThresholdSearch(
            "not excluded at the lower bound A",
        ));
    }
    let mut hi = energy_threshold_b(kahler_class, futaki_norm_sq)?;
    let two = qi(2);
    let mut grow = 0;
    while verdict(&hi)? == Verdict::Excluded {
        lo = hi.clone();
        hi = hi.scale(&two);
        grow += 1;
        if grow > 64 {
            return Err(ExclusionError::ThresholdSearch("no flip below 2^64 B"));
        }
    }
    let half = q(1, 2);
    while (&hi - &lo) > *resolution {
        let mid = (&lo + &hi).scale(&half);
        if verdict(&mid)? == Verdict::Excluded {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(FlipThreshold {
        excluded_at: lo,
        not_excluded_at: hi,
        resolution: resolution.clone(),
    })
}

fn wire_name<T: Serialize>(x: &T) -> String {
    match serde_json::to_value(x) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

impl ExclusionReport {
    /// Human-readable summary, one paragraph per case.
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let inp = &self.input;
        let _ = writeln!(
            s,
            "class h={} e=[{}]  E0={}  symmetry=Z{}  |F|^2={}",
            format_fraction(&inp.kahler_class.h),
            inp.kahler_class
                .e
                .iter()
                .map(format_fraction)
                .collect::<Vec<_>>()
                .join(", "),
            inp.initial_energy,
            inp.symmetry_order,
            inp.futaki_norm_sq,
        );
        let _ = writeln!(s, "A = {}   B = {}", self.lower_bound_a, self.threshold_b);
        for case in &self.per_case {
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "Case {}: b2 = {}. Budgets: Ric0 < {} (ratio {}; rounded reference {}), W- < {}.",
                case.b2,
                case.b2,
                case.ric0_budget,
                format_fraction(&case.exact_ric0_ratio),
                self.rounded_reference.ric0_ratio,
                case.wminus_budget,
            );
            let _ = writeln!(
                s,
                "  {} candidate(s) fit the Ric0 budget (all parameters <= {}){}.",
                case.examined,
                case.param_bound,
                if case.complete {
                    ""
                } else {
                    ", walk stopped early"
                },
            );
            if case.forced_invariant {
                let _ = writeln!(
                    s,
                    "  Every candidate is forced to be Z3-invariant ({}).",
                    case.forcing_inequality.as_deref().unwrap_or("-"),
                );
            }
            if let Some(p) = case.min_lagrangian_parameter {
                let _ = writeln!(
                    s,
                    "  Invariant Lagrangian spheres need self-intersection <= -{p}; {}.",
                    if p > case.param_bound {
                        "no such candidate fits the budget"
                    } else {
                        "some fit the budget"
                    }
                );
            }
            for v in &case.candidates {
                let fate = match v.fate {
                    Fate::Killed(r) => format!("killed: {}", wire_name(&r)),
                    Fate::Survives(r) => format!("survives: {}", wire_name(&r)),
                };
                let _ = writeln!(
                    s,
                    "    {:?}  |G|={}  Ric0={}  W-={}  {}",
                    v.candidate.params, v.candidate.group_order, v.ric0, v.wminus, fate
                );
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "Verdict: {}",
            match self.verdict {
                Verdict::Excluded => "EXCLUDED (no maximal bubble can form)",
                Verdict::NotExcluded => "NOT_EXCLUDED",
            }
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::BubbleCandidate;
    use crate::lattice::SurfaceModel;

    fn dp6() -> SurfaceModel {
        SurfaceModel::three_point_blowup()
    }

    fn omega(x: Q) -> CohomologyClass {
        CohomologyClass::symmetric(dp6(), qi(3), x)
    }

    fn e(n: i64, d: i64) -> EnergyQuantity {
        EnergyQuantity::from_pi2(q(n, d))
    }

    fn b_minus() -> EnergyQuantity {
        &e(2912, 11) - &e(1, 1_000_000)
    }

    fn input(energy: EnergyQuantity, s: u32) -> ExclusionInput {
        ExclusionInput {
            kahler_class: omega(q(1, 2)),
            initial_energy: energy,
            symmetry_order: s,
            futaki_norm_sq: EnergyQuantity::zero(),
        }
    }

    #[test]
    fn lagrangian_examples() {
        let w = omega(q(1, 2));
        let sols = lagrangian_solutions(&w, -11).unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!((sols[0].m, sols[0].n), (1, 2));
        assert_eq!(sols[0].self_intersection, -11);
        assert!(sols[0].pairing_with_class.is_zero());
        for k in 1..=5 {
            assert!(lagrangian_solutions(&w, -k).unwrap().is_empty());
        }
        let sols = lagrangian_solutions(&w, -44).unwrap();
        assert_eq!((sols[0].m, sols[0].n), (2, 4));
        assert_eq!(min_lagrangian_parameter(&w).unwrap(), Some(11));
    }

    #[test]
    fn lagrangian_errors() {
        let asym = CohomologyClass::new(qi(3), vec![q(1, 2), q(1, 3), q(1, 2)]);
        assert_eq!(
            lagrangian_solutions(&asym, -3),
            Err(ExclusionError::UnsupportedSymmetry)
        );
        assert_eq!(
            lagrangian_solutions(&omega(q(1, 2)), 0),
            Err(ExclusionError::InvalidSelfIntersection(0))
        );
    }

    #[test]
    fn trichotomy_examples() {
        let budgets = compact_budgets(dp6(), &e(2912, 11)).unwrap();
        for k in 1..200 {
            let t = z3_trichotomy(&BubbleCandidate::new(&[k]).unwrap(), &budgets);
            assert!(t.must_be_invariant, "k={k}");
            assert!(!t.wminus_triple_fits);
        }
        let t = z3_trichotomy(&BubbleCandidate::new(&[2, 1]).unwrap(), &budgets);
        assert!(t.must_be_invariant);
        assert_eq!(t.wminus_triple, EnergyQuantity::from_int(72));
    }

    #[test]
    fn trichotomy_ric0_branch_alone() {
        // k = 2 has ∫|Ric₀|² = 0, so only the W₋ test can force invariance.
        let c = BubbleCandidate::new(&[2]).unwrap();
        let roomy = CompactBudgets {
            ric0_budget: EnergyQuantity::from_int(1),
            wminus_budget: EnergyQuantity::from_int(1000),
        };
        let t = z3_trichotomy(&c, &roomy);
        assert!(!t.must_be_invariant);
        // A candidate whose W₋ triple fits but whose Ric₀ triple does not.
        let c5 = BubbleCandidate::new(&[5]).unwrap();
        let t = z3_trichotomy(&c5, &roomy);
        assert!(t.wminus_triple_fits && !t.ric0_triple_fits && t.must_be_invariant);
    }

    #[test]
    fn half_class_excluded_below_threshold() {
        let r = exclude(&input(b_minus(), 3)).unwrap();
        assert_eq!(r.verdict, Verdict::Excluded);
        let case1 = &r.per_case[0];
        let ks: Vec<i64> = case1
            .candidates
            .iter()
            .map(|v| v.candidate.params[0])
            .collect();
        assert_eq!(ks, vec![1, 2, 3, 4, 5]);
        assert!(case1
            .candidates
            .iter()
            .all(|v| v.kill_reason() == Some(KillReason::NoLagrangianSolution)));
        assert!(case1.forced_invariant);
        for case in &r.per_case[1..] {
            assert_eq!(case.min_lagrangian_parameter, Some(11));
            assert_eq!(case.lagrangian_candidates_exceed_budget, Some(true));
            assert!(case.surviving_candidates.is_empty());
        }
    }

    #[test]
    fn huge_energy_not_excluded() {
        let r = exclude(&input(EnergyQuantity::from_int(1_000_000), 3)).unwrap();
        assert_eq!(r.verdict, Verdict::NotExcluded);
        assert!(r
            .per_case
            .iter()
            .all(|c| !c.surviving_candidates.is_empty()));
    }

    #[test]
    fn no_symmetry_not_excluded() {
        let r = exclude(&input(e(2589, 10), 1)).unwrap();
        assert_eq!(r.verdict, Verdict::NotExcluded);
        let case1 = &r.per_case[0];
        assert!(case1
            .candidates
            .iter()
            .all(|v| v.fate == Fate::Survives(OpenReason::TripleCopyUnavailable)));
        let r = exclude(&input(b_minus(), 1)).unwrap();
        assert_eq!(r.verdict, Verdict::NotExcluded);
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            exclude(&input(EnergyQuantity::from_int(100), 3)),
            Err(ExclusionError::EnergyBelowLowerBound { .. })
        ));
        assert!(matches!(
            exclude(&input(b_minus(), 2)),
            Err(ExclusionError::InvalidSymmetryOrder(2))
        ));
        let mut bad = input(b_minus(), 3);
        bad.kahler_class = omega(qi(2));
        assert_eq!(exclude(&bad), Err(ExclusionError::NotKahler));
    }

    #[test]
    fn deterministic() {
        let a = exclude(&input(e(400, 1), 3)).unwrap();
        let b = exclude(&input(e(400, 1), 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chain_realization() {
        let w = omega(q(1, 2));
        let s11 = lagrangian_solutions(&w, -11).unwrap();
        // Two classes along the same direction pair to −11·t₁t₂, never 1.
        assert!(!realizes_chain(&[s11.clone(), s11.clone()]));
        assert!(realizes_chain(&[s11]));
    }

    #[test]
    fn flip_at_288() {
        let t = flip_threshold(
            &omega(q(1, 2)),
            3,
            &EnergyQuantity::zero(),
            &ExclusionOptions::default(),
            &e(1, 1 << 20),
        )
        .unwrap();
        assert!(t.excluded_at <= EnergyQuantity::from_int(288));
        assert!(t.not_excluded_at > EnergyQuantity::from_int(288));
        assert!(t.excluded_at >= e(2912, 11));
        let r = exclude(&input(EnergyQuantity::from_int(288), 3)).unwrap();
        assert_eq!(r.verdict, Verdict::Excluded);
    }

    #[test]
    fn text_rendering_mentions_cases() {
        let r = exclude(&input(b_minus(), 3)).unwrap();
        let t = r.render_text();
        assert!(t.contains("Case 1"));
        assert!(t.contains("Case 3"));
        assert!(t.contains("EXCLUDED"));
    }

    #[test]
    fn report_json_uses_stable_names() {
        let r = exclude(&input(b_minus(), 3)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["verdict"], "EXCLUDED");
        assert_eq!(
            v["per_case"][0]["candidates"][0]["fate"],
            serde_json::json!({"status": "killed", "reason": "NO_LAGRANGIAN_SOLUTION"})
        );
        assert_eq!(v["rounded_reference"]["ric0_ratio"], "2.1");
        let back: ExclusionReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
