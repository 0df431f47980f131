//! Exact bubble-exclusion arithmetic for the Calabi flow on the three-point
//! blowup of the projective plane, and a spectral Calabi-flow simulator on
//! the flat torus.
//!
//! The exact side ([`lattice`], [`energy`], [`bubbles`], [`exclusion`]) never
//! touches floating point in a verdict path. [`sobolev`] takes the final
//! square roots, and [`flow`] is the numerical testbed.

pub mod bubbles;
pub mod energy;
pub mod exclusion;
pub mod flow;
pub mod lattice;
pub mod rational;
pub mod sobolev;

pub use bubbles::{BubbleCandidate, BubbleEnergies, Enumeration};
pub use energy::{ClassAnalysis, CompactBudgets, EnergyQuantity};
pub use exclusion::{
    CaseReport, ExclusionInput, ExclusionOptions, ExclusionReport, GeneratorRule,
    SphereClassSolution, Verdict,
};
pub use flow::{CalabiFlow, FlowConfig, FlowError, FlowState, HistoryEntry, InitSpec, RunStatus};
pub use lattice::{CohomologyClass, SurfaceModel};
pub use rational::Q;
pub use sobolev::SobolevBoundReport;
