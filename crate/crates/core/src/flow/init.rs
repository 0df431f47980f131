//! Initial potentials.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectral::SpectralGrid;
use super::FlowError;

/// Peak of `|½Δ₀φ|` for random initial data, so `u ∈ [0.6, 1.4]`.
pub const RANDOM_AMPLITUDE: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InitSpec {
    Zero,
    /// `φ = ε cos 2πx`.
    Cos {
        eps: f64,
    },
    /// Random modes with `max(|kx|, |ky|) ≤ band`.
    Random {
        seed: u64,
        band: usize,
    },
}

impl InitSpec {
    pub fn build(&self, n: usize) -> Result<Vec<f64>, FlowError> {
        match *self {
            InitSpec::Zero => Ok(vec![0.0; n * n]),
            InitSpec::Cos { eps } => {
                if !eps.is_finite() {
                    return Err(FlowError::InvalidInit(format!("eps = {eps}")));
                }
                // ½Δ₀φ = −2π²ε cos 2πx must stay above −1.
                if 2.0 * PI * PI * eps.abs() >= 1.0 {
                    return Err(FlowError::InvalidInit(format!(
                        "eps = {eps} makes the metric degenerate"
                    )));
                }
                let mut v = Vec::with_capacity(n * n);
                for _ in 0..n {
                    for ix in 0..n {
                        v.push(eps * (2.0 * PI * ix as f64 / n as f64).cos());
                    }
                }
                Ok(v)
            }
            InitSpec::Random { seed, band } => {
                if band == 0 || 3 * band >= n {
                    return Err(FlowError::InvalidInit(format!(
                        "band {band} must lie in 1..{} for N = {n}",
                        n.div_ceil(3)
                    )));
                }
                Ok(random_band_limited(n, seed, band, RANDOM_AMPLITUDE))
            }
        }
    }
}

impl fmt::Display for InitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitSpec::Zero => write!(f, "zero"),
            InitSpec::Cos { eps } => write!(f, "cos:{eps:e}"),
            InitSpec::Random { seed, band } => write!(f, "random:{seed},{band}"),
        }
    }
}

impl FromStr for InitSpec {
    type Err = FlowError;

    /// `zero`, `cos:<eps>` or `random:<seed>,<band>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FlowError::InvalidInit(format!("cannot parse {s:?}"));
        let s = s.trim();
        if s == "zero" {
            return Ok(InitSpec::Zero);
        }
        if let Some(rest) = s.strip_prefix("cos:") {
            let eps: f64 = rest.trim().parse().map_err(|_| bad())?;
            if !eps.is_finite() {
                return Err(bad());
            }
            return Ok(InitSpec::Cos { eps });
        }
        if let Some(rest) = s.strip_prefix("random:") {
            let (seed, band) = rest.split_once(',').ok_or_else(bad)?;
            let seed = seed.trim().parse().map_err(|_| bad())?;
            let band = band.trim().parse().map_err(|_| bad())?;
            return Ok(InitSpec::Random { seed, band });
        }
        Err(bad())
    }
}

/// A real band-limited field on the `N×N` grid, scaled so that
/// `max|½Δ₀φ| = amplitude`. Amplitudes fall off like `|k|⁻⁴`, so the
/// density perturbation has a `|k|⁻²` spectrum.
pub fn random_band_limited(n: usize, seed: u64, band: usize, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = SpectralGrid::new(n);
    let mut spec = vec![Complex64::default(); n * n];
    let b = band as i64;
    let wrap = |k: i64| k.rem_euclid(n as i64) as usize;
    let scale = (n * n) as f64;
    for ky in -b..=b {
        for kx in -b..=b {
            // One representative per ±k pair.
            if kx < 0 || (kx == 0 && ky <= 0) {
                continue;
            }
            let k2 = (kx * kx + ky * ky) as f64;
            let a: f64 = rng.random_range(-1.0..1.0) / (k2 * k2);
            let c: f64 = rng.random_range(-1.0..1.0) / (k2 * k2);
            // a cos θ + c sin θ = ½(a − ic)e^{iθ} + ½(a + ic)e^{−iθ}
            let z = Complex64::new(a, -c) * (0.5 * scale);
            spec[wrap(ky) * n + wrap(kx)] += z;
            spec[wrap(-ky) * n + wrap(-kx)] += z.conj();
        }
    }
    let phi = grid.inverse(&spec);
    let lap = grid.inverse(&grid.laplacian_spec(&spec));
    let peak = lap.iter().fold(0.0f64, |m, x| m.max((0.5 * x).abs()));
    let s = if peak > 0.0 { amplitude / peak } else { 0.0 };
    phi.into_iter().map(|x| x * s).collect()
}
