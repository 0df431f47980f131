//! Calabi flow on the flat torus in complex dimension one.
//!
//! Conventions: the background form is `ω₀ = dx∧dy` on `[0,1)²` and
//! `i∂∂̄φ = ½Δ₀φ dx∧dy`. The evolving metric has density
//! `u = 1 + ½Δ₀φ`, its scalar curvature (twice the Gaussian curvature) is
//! `R = −u⁻¹Δ₀ log u`, and the potential evolves by `∂φ/∂t = R − R̄` with
//! `R̄ = ∫R dg / ∫dg`. The Calabi energy is `𝒞 = ∫R² u dA`.
//!
//! This is a testbed: the geometry of interest lives on complex surfaces,
//! but the flow equation is dimension-agnostic and on a Riemann surface it
//! is known to converge to constant curvature, which here means `u ≡ 1`.
//!
//! Discretization is pseudo-spectral. Each step is semi-implicit:
//!
//! ```text
//! φ̂ⁿ⁺¹ = (φ̂ⁿ + dt·[R − R̄ + σΔ₀²φⁿ]^) / (1 + dt·σ|κ|⁴)
//! ```
//!
//! The fourth-order part is implicit with coefficient
//! `σ = max(½, 1/(2 min u²))`. The linearization at the flat metric is
//! `R ≈ −½Δ₀²φ`; at a metric of density `u` the leading part is
//! `−Δ₀²φ/(2u²)`, so taking `σ` at least that large keeps every mode of
//! the frozen-coefficient problem damped. The explicit bracket is
//! dealiased with the two-thirds rule. A step is rejected and `dt` halved
//! when the energy rises beyond the configured tolerance or `u` drops to
//! `u_min`; accepted steps grow `dt` by `dt_growth` up to `dt_max`.
//!
//! All transforms run on one thread, so results are bitwise reproducible.
//! Independent runs can be driven in parallel.

mod init;
mod interp;
mod io;
pub mod spectral;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use init::{random_band_limited, InitSpec};
pub use interp::{interpolation_check, interpolation_ratio, InterpolationCheck};
pub use io::{read_field, write_history_csv, write_snapshot, SnapshotMeta};
pub use spectral::SpectralGrid;

use spectral::mean;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid initial condition: {0}")]
    InvalidInit(String),
    #[error("metric positivity lost at cell ({ix}, {iy}): u = {u}")]
    Breakdown { ix: usize, iy: usize, u: f64 },
    #[error("time step underflow at t = {time}: dt = {dt} after repeated rejection")]
    Stiffness { time: f64, dt: f64 },
    #[error("field has {got} samples, expected {expected}")]
    FieldSize { got: usize, expected: usize },
    #[error("exponents violate the interpolation domain: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Grid points per side; a power of two, at least 16.
    pub grid_size: usize,
    pub dt_initial: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Factor applied to `dt` after each accepted step.
    pub dt_growth: f64,
    pub max_time: f64,
    /// Stop once `|Δ𝒞|/dt` drops below this; zero disables.
    pub energy_slope_tol: f64,
    /// Converged once `max|R|` drops below this.
    pub r_tol: f64,
    /// Positivity floor for `u`, in `(0, 1)`.
    pub u_min: f64,
    /// Accepted energy rise: `𝒞ⁿ⁺¹ ≤ 𝒞ⁿ(1 + rel) + abs`.
    pub energy_rel_tol: f64,
    pub energy_abs_tol: f64,
    pub max_steps: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            grid_size: 64,
            dt_initial: 1e-6,
            dt_min: 1e-14,
            dt_max: 1e-4,
            dt_growth: 1.25,
            max_time: 1.0,
            energy_slope_tol: 0.0,
            r_tol: 1e-8,
            u_min: 0.05,
            energy_rel_tol: 1e-12,
            energy_abs_tol: 1e-24,
            max_steps: 1_000_000,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::InvalidConfig(m.to_string()));
        if self.grid_size < 16 || !self.grid_size.is_power_of_two() {
            return bad("grid_size must be a power of two >= 16");
        }
        if !(self.u_min > 0.0 && self.u_min < 1.0) {
            return bad("u_min must lie in (0, 1)");
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_initial && self.dt_initial <= self.dt_max)
        {
            return bad("need 0 < dt_min <= dt_initial <= dt_max");
        }
        if !(self.dt_growth >= 1.0 && self.dt_growth.is_finite()) {
            return bad("dt_growth must be finite and >= 1");
        }
        if !(self.max_time >= 0.0) {
            return bad("max_time must be nonnegative");
        }
        if !(self.r_tol >= 0.0 && self.energy_slope_tol >= 0.0) {
            return bad("tolerances must be nonnegative");
        }
        if !(self.energy_rel_tol >= 0.0 && self.energy_abs_tol >= 0.0) {
            return bad("energy tolerances must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub time: f64,
    pub calabi_energy: f64,
    #[serde(rename = "max_abs_R")]
    pub max_abs_r: f64,
    pub total_area: f64,
    /// Step that produced this entry; zero for the initial state.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    n: usize,
    pub phi: Vec<f64>,
    pub u: Vec<f64>,
    curvature: Vec<f64>,
    energy: f64,
    pub time: f64,
    /// Step size to try next.
    pub dt: f64,
    pub history: Vec<HistoryEntry>,
}

impl FlowState {
    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn scalar_curvature(&self) -> &[f64] {
        &self.curvature
    }

    pub fn calabi_energy(&self) -> f64 {
        self.energy
    }

    pub fn max_abs_r(&self) -> f64 {
        self.curvature.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn total_area(&self) -> f64 {
        mean(&self.u)
    }

    /// `∫R dg / ∫dg`.
    pub fn mean_curvature(&self) -> f64 {
        weighted_mean(&self.curvature, &self.u)
    }

    /// `max u − min u`.
    pub fn u_oscillation(&self) -> f64 {
        let (lo, hi) = self
            .u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        hi - lo
    }

    fn entry(&self, dt: f64) -> HistoryEntry {
        HistoryEntry {
            time: self.time,
            calabi_energy: self.energy,
            max_abs_r: self.max_abs_r(),
            total_area: self.total_area(),
            dt,
        }
    }
}

fn weighted_mean(f: &[f64], w: &[f64]) -> f64 {
    let num: f64 = f.iter().zip(w).map(|(a, b)| a * b).sum();
    let den: f64 = w.iter().sum();
    num / den
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().fold(f64::INFINITY, |m, &x| m.min(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// `max|R| < r_tol`.
    Converged,
    /// Energy slope fell below `energy_slope_tol` first.
    Stalled,
    /// Reached `max_time` without converging.
    MaxTime,
    MaxSteps,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub state: FlowState,
    pub accepted: usize,
    pub rejected: usize,
}

/// A configured solver: grid transforms plus step control.
#[derive(Debug)]
pub struct CalabiFlow {
    cfg: FlowConfig,
    grid: SpectralGrid,
}

impl CalabiFlow {
    pub fn new(cfg: FlowConfig) -> Result<Self, FlowError> {
        cfg.validate()?;
        let grid = SpectralGrid::new(cfg.grid_size);
        Ok(Self { cfg, grid })
    }

    pub fn config(&self) -> &FlowConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    fn check_len(&self, len: usize) -> Result<(), FlowError> {
        if len != self.grid.len() {
            return Err(FlowError::FieldSize {
                got: len,
                expected: self.grid.len(),
            });
        }
        Ok(())
    }

    /// `u = 1 + ½Δ₀φ`.
    pub fn density(&self, phi: &[f64]) -> Vec<f64> {
        self.density_from_spec(&self.grid.forward(phi))
    }

    fn density_from_spec(&self, phi_hat: &[Complex64]) -> Vec<f64> {
        let lap = self.grid.inverse(&self.grid.laplacian_spec(phi_hat));
        lap.into_iter().map(|l| 1.0 + 0.5 * l).collect()
    }

    /// `R = −u⁻¹Δ₀ log u`. Fails at the first cell with `u ≤ u_min`.
    pub fn scalar_curvature(&self, u: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.check_len(u.len())?;
        let n = self.grid.n();
        if let Some(i) = u.iter().position(|&x| !(x > self.cfg.u_min)) {
            return Err(FlowError::Breakdown {
                ix: i % n,
                iy: i / n,
                u: u[i],
            });
        }
        let log_u: Vec<f64> = u.iter().map(|x| x.ln()).collect();
        let lap = self.grid.laplacian(&log_u);
        Ok(lap.iter().zip(u).map(|(l, x)| -l / x).collect())
    }

    /// `∫R² u dA`.
    pub fn calabi_energy_of(r: &[f64], u: &[f64]) -> f64 {
        r.iter().zip(u).map(|(r, u)| r * r * u).sum::<f64>() / r.len() as f64
    }

    /// Builds a state at time zero from a potential.
    pub fn state(&self, phi: Vec<f64>) -> Result<FlowState, FlowError> {
        self.state_at(phi, 0.0)
    }

    pub fn state_at(&self, phi: Vec<f64>, time: f64) -> Result<FlowState, FlowError> {
        self.check_len(phi.len())?;
        let u = self.density(&phi);
        let curvature = self.scalar_curvature(&u)?;
        let energy = Self::calabi_energy_of(&curvature, &u);
        let mut state = FlowState {
            n: self.grid.n(),
            phi,
            u,
            curvature,
            energy,
            time,
            dt: self.cfg.dt_initial,
            history: Vec::new(),
        };
        state.history.push(state.entry(0.0));
        Ok(state)
    }

    /// Analytic `d𝒞/dt = −∫(Δ₀R)²/u dA + ∫R|∇₀R|² dA` at the state.
    pub fn dissipation_rate(&self, state: &FlowState) -> f64 {
        let r = &state.curvature;
        let lap = self.grid.laplacian(r);
        let (gx, gy) = self.grid.gradient(r);
        let mut acc = 0.0;
        for i in 0..r.len() {
            acc += -lap[i] * lap[i] / state.u[i] + r[i] * (gx[i] * gx[i] + gy[i] * gy[i]);
        }
        acc / r.len() as f64
    }

    /// One accepted step, halving `dt` on rejection.
    pub fn step(&self, state: &FlowState) -> Result<FlowState, FlowError> {
        let (mut next, _) = self.step_counted(state)?;
        let mut history = state.history.clone();
        history.append(&mut next.history);
        next.history = history;
        Ok(next)
    }

    /// Returns the new state with only its own history entry.
    fn step_counted(&self, state: &FlowState) -> Result<(FlowState, usize), FlowError> {
        let grid = &self.grid;
        let n = grid.n();
        let phi_hat = grid.forward(&state.phi);
        let rbar = state.mean_curvature();
        let u_lo = min_of(&state.u);
        let sigma = (0.5 / (u_lo * u_lo)).max(0.5);

        let centered: Vec<f64> = state.curvature.iter().map(|r| r - rbar).collect();
        let mut rhs = grid.forward(&centered);
        let mut k4 = vec![0.0; grid.len()];
        for iy in 0..n {
            for ix in 0..n {
                let i = iy * n + ix;
                k4[i] = grid.kappa_sq(ix, iy).powi(2);
                rhs[i] += phi_hat[i] * (sigma * k4[i]);
            }
        }
        grid.dealias(&mut rhs);

        let ceiling = state.energy * (1.0 + self.cfg.energy_rel_tol) + self.cfg.energy_abs_tol;
        let mut dt = state.dt;
        let mut rejected = 0;
        loop {
            if dt < self.cfg.dt_min {
                return Err(FlowError::Stiffness {
                    time: state.time,
                    dt,
                });
            }
            let new_hat: Vec<Complex64> = (0..grid.len())
                .map(|i| (phi_hat[i] + rhs[i] * dt) / (1.0 + dt * sigma * k4[i]))
                .collect();
            let u = self.density_from_spec(&new_hat);
            let Ok(curvature) = (if min_of(&u) > self.cfg.u_min {
                self.scalar_curvature(&u)
            } else {
                Err(FlowError::Breakdown {
                    ix: 0,
                    iy: 0,
                    u: 0.0,
                })
            }) else {
                dt *= 0.5;
                rejected += 1;
                continue;
            };
            let energy = Self::calabi_energy_of(&curvature, &u);
            if !(energy <= ceiling) {
                dt *= 0.5;
                rejected += 1;
                continue;
            }
            let mut next = FlowState {
                n,
                phi: grid.inverse(&new_hat),
                u,
                curvature,
                energy,
                time: state.time + dt,
                dt: (dt * self.cfg.dt_growth).min(self.cfg.dt_max),
                history: Vec::new(),
            };
            let entry = next.entry(dt);
            next.history.push(entry);
            return Ok((next, rejected));
        }
    }

    /// Steps until converged, stalled, or out of time or steps.
    pub fn run(&self, mut state: FlowState) -> Result<RunOutcome, FlowError> {
        let mut accepted = 0;
        let mut rejected = 0;
        loop {
            let status = if state.max_abs_r() < self.cfg.r_tol {
                Some(RunStatus::Converged)
            } else if state.time >= self.cfg.max_time {
                Some(RunStatus::MaxTime)
            } else if accepted >= self.cfg.max_steps {
                Some(RunStatus::MaxSteps)
            } else {
                None
            };
            if let Some(status) = status {
                return Ok(RunOutcome {
                    status,
                    state,
                    accepted,
                    rejected,
                });
            }
            let before = state.energy;
            let (mut next, r) = self.step_counted(&state)?;
            rejected += r;
            accepted += 1;
            let dt = next.time - state.time;
            let mut history = std::mem::take(&mut state.history);
            history.append(&mut next.history);
            next.history = history;
            state = next;
            if self.cfg.energy_slope_tol > 0.0
                && (before - state.energy).abs() / dt < self.cfg.energy_slope_tol
                && state.max_abs_r() >= self.cfg.r_tol
            {
                return Ok(RunOutcome {
                    status: RunStatus::Stalled,
                    state,
                    accepted,
                    rejected,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn flow(n: usize) -> CalabiFlow {
        CalabiFlow::new(FlowConfig {
            grid_size: n,
            ..FlowConfig::default()
        })
        .unwrap()
    }

    fn cos_phi(n: usize, eps: f64) -> Vec<f64> {
        InitSpec::Cos { eps }.build(n).unwrap()
    }

    #[test]
    fn config_validation() {
        let bad = |f: fn(&mut FlowConfig)| {
            let mut c = FlowConfig::default();
            f(&mut c);
            assert!(matches!(c.validate(), Err(FlowError::InvalidConfig(_))));
        };
        bad(|c| c.grid_size = 48);
        bad(|c| c.grid_size = 8);
        bad(|c| c.u_min = 1.0);
        bad(|c| c.u_min = 0.0);
        bad(|c| c.dt_min = 1.0);
        assert!(FlowConfig::default().validate().is_ok());
    }

    #[test]
    fn flat_metric_is_fixed() {
        let f = flow(32);
        let s = f.state(vec![0.0; 32 * 32]).unwrap();
        assert_eq!(s.calabi_energy(), 0.0);
        assert_eq!(s.max_abs_r(), 0.0);
        let t = f.step(&s).unwrap();
        assert!(t.phi.iter().all(|&x| x.abs() < 1e-15));
        assert_eq!(t.history.len(), 2);
    }

    fn linearization_error(f: &CalabiFlow, n: usize, eps: f64) -> (f64, FlowState) {
        let s = f.state(cos_phi(n, eps)).unwrap();
        let c = -8.0 * PI.powi(4) * eps;
        let mut err: f64 = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let x = ix as f64 / n as f64;
                let lin = c * (2.0 * PI * x).cos();
                err = err.max((s.scalar_curvature()[iy * n + ix] - lin).abs());
            }
        }
        (err, s)
    }

    #[test]
    fn linearized_curvature() {
        let n = 64;
        let f = flow(n);
        let eps = 1e-3;
        let (err, s) = linearization_error(&f, n, eps);
        let (err_half, _) = linearization_error(&f, n, eps / 2.0);
        assert!(err < 5e4 * eps * eps, "err {err}");
        let order = err / err_half;
        assert!((order - 4.0).abs() < 0.1, "ratio {order}");
        let want = (2.0 * PI).powi(8) * eps * eps / 8.0;
        assert!((s.calabi_energy() - want).abs() < 0.02 * want);
    }

    #[test]
    fn gauss_bonnet_residual() {
        let n = 64;
        let f = flow(n);
        for seed in 0..5 {
            let phi = random_band_limited(n, seed, 8, 0.4);
            let s = f.state(phi).unwrap();
            let total: f64 = s
                .scalar_curvature()
                .iter()
                .zip(&s.u)
                .map(|(r, u)| r * u)
                .sum::<f64>()
                / (n * n) as f64;
            assert!(total.abs() < 1e-10, "{total}");
        }
    }

    #[test]
    fn positivity_violation_names_the_cell() {
        let f = flow(16);
        let mut u = vec![1.0; 256];
        u[3 * 16 + 5] = 0.01;
        match f.scalar_curvature(&u) {
            Err(FlowError::Breakdown { ix, iy, .. }) => assert_eq!((ix, iy), (5, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn linear_decay_rate() {
        let n = 64;
        let f = CalabiFlow::new(FlowConfig {
            grid_size: n,
            dt_max: 1e-5,
            ..FlowConfig::default()
        })
        .unwrap();
        let mut s = f.state(cos_phi(n, 1e-3)).unwrap();
        let e0 = s.calabi_energy();
        while s.time < 1e-3 {
            s = f.step(&s).unwrap();
        }
        let rate = -(s.calabi_energy() / e0).ln() / s.time;
        let want = (2.0 * PI).powi(4);
        assert!((rate - want).abs() < 0.2 * want, "rate {rate} vs {want}");
    }

    #[test]
    fn dissipation_matches_slope() {
        let n = 64;
        let f = flow(n);
        let s0 = f.state(cos_phi(n, 1e-3)).unwrap();
        let d = f.dissipation_rate(&s0);
        assert!(d < 0.0);
        let s = FlowState {
            dt: 1e-8,
            ..s0.clone()
        };
        let s1 = f.step(&s).unwrap();
        let slope = (s1.calabi_energy() - s0.calabi_energy()) / (s1.time - s0.time);
        assert!((slope - d).abs() < 0.05 * d.abs(), "{slope} vs {d}");
    }

    #[test]
    fn velocity_is_curvature() {
        let n = 32;
        let f = flow(n);
        let s0 = f.state(random_band_limited(n, 3, 4, 0.2)).unwrap();
        let s = FlowState {
            dt: 1e-11,
            ..s0.clone()
        };
        let s1 = f.step(&s).unwrap();
        let dt = s1.time - s0.time;
        let rbar = s0.mean_curvature();
        let scale = s0.max_abs_r();
        let centered: Vec<f64> = s0.scalar_curvature().iter().map(|r| r - rbar).collect();
        let mut spec = f.grid().forward(&centered);
        f.grid().dealias(&mut spec);
        let projected = f.grid().inverse(&spec);
        for i in 0..n * n {
            let v = (s1.phi[i] - s0.phi[i]) / dt;
            assert!(
                (v - projected[i]).abs() < 1e-5 * scale,
                "{v} vs {}",
                projected[i]
            );
            assert!((v - centered[i]).abs() < 1e-3 * scale);
        }
    }

    #[test]
    fn random_run_converges_monotonically() {
        let n = 32;
        let f = CalabiFlow::new(FlowConfig {
            grid_size: n,
            dt_max: 1e-2,
            ..FlowConfig::default()
        })
        .unwrap();
        let s = f.state(random_band_limited(n, 11, 5, 0.4)).unwrap();
        let out = f.run(s).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        let h = &out.state.history;
        let tol = f.config().energy_rel_tol;
        for w in h.windows(2) {
            assert!(w[1].calabi_energy <= w[0].calabi_energy * (1.0 + tol) + 1e-24);
            assert!((w[1].total_area - h[0].total_area).abs() < 1e-12);
        }
        assert!(out.state.max_abs_r() < 1e-8);
        assert!(out.state.u_oscillation() < 1e-6);
    }

    #[test]
    fn stationary_after_convergence() {
        let n = 32;
        let f = CalabiFlow::new(FlowConfig {
            grid_size: n,
            dt_max: 1e-2,
            ..FlowConfig::default()
        })
        .unwrap();
        let out = f.run(f.state(cos_phi(n, 1e-3)).unwrap()).unwrap();
        assert_eq!(out.status, RunStatus::Converged);
        let s = &out.state;
        let tol = s.max_abs_r();
        let next = f.step(s).unwrap();
        let dt = next.time - s.time;
        let change = s
            .phi
            .iter()
            .zip(&next.phi)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(change < 2.0 * tol * dt, "{change} vs {}", tol * dt);
    }

    #[test]
    fn stiffness_failure_below_dt_min() {
        let n = 16;
        let f = flow(n);
        let s = f.state(random_band_limited(n, 1, 4, 0.4)).unwrap();
        let s = FlowState { dt: 1e-15, ..s };
        assert!(matches!(f.step(&s), Err(FlowError::Stiffness { .. })));
    }

    #[test]
    fn history_columns() {
        let f = flow(16);
        let s = f.state(cos_phi(16, 1e-4)).unwrap();
        let t = f.step(&s).unwrap();
        let e = t.history.last().unwrap();
        assert!(e.dt > 0.0 && e.time == e.dt);
        let json = serde_json::to_string(e).unwrap();
        assert!(json.contains("\"max_abs_R\""));
    }
}
