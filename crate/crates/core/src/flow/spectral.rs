//! Fourier differentiation on the periodic unit square.
//!
//! Fields are `N×N` row-major with `x` varying fastest: sample `(ix, iy)`
//! sits at `(ix/N, iy/N)`.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct SpectralGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Angular wavenumber `2πk` per index, Nyquist zeroed (odd derivatives).
    k_odd: Vec<f64>,
    /// `(2πk)²` per index, Nyquist kept.
    k_sq: Vec<f64>,
    /// Two-thirds rule: true where `|k| < N/3`.
    keep: Vec<bool>,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid").field("n", &self.n).finish()
    }
}

fn signed_index(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl SpectralGrid {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let two_pi = 2.0 * std::f64::consts::PI;
        let k_odd = (0..n)
            .map(|j| {
                if 2 * j == n {
                    0.0
                } else {
                    two_pi * signed_index(j, n) as f64
                }
            })
            .collect();
        let k_sq = (0..n)
            .map(|j| (two_pi * signed_index(j, n) as f64).powi(2))
            .collect();
        let keep = (0..n)
            .map(|j| 3 * signed_index(j, n).unsigned_abs() < n as u64)
            .collect();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            k_odd,
            k_sq,
            keep,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn transform_2d(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        for row in data.chunks_exact_mut(n) {
            fft.process(row);
        }
        let mut col = vec![Complex64::default(); n];
        for ix in 0..n {
            for iy in 0..n {
                col[iy] = data[iy * n + ix];
            }
            fft.process(&mut col);
            for iy in 0..n {
                data[iy * n + ix] = col[iy];
            }
        }
    }

    pub fn forward(&self, field: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.transform_2d(&mut data, &self.forward);
        data
    }

    /// Inverse transform, normalized, real part.
    pub fn inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        let mut data = spec.to_vec();
        self.transform_2d(&mut data, &self.inverse);
        let scale = 1.0 / (self.len() as f64);
        data.into_iter().map(|z| z.re * scale).collect()
    }

    /// Applies a real multiplier `m(kx², ky², kx, ky)` to a spectrum.
    fn map_spec(
        &self,
        spec: &[Complex64],
        f: impl Fn(usize, usize) -> Complex64,
    ) -> Vec<Complex64> {
        let n = self.n;
        let mut out = spec.to_vec();
        for iy in 0..n {
            for ix in 0..n {
                out[iy * n + ix] *= f(ix, iy);
            }
        }
        out
    }

    /// `|κ|²` at a spectral index.
    pub fn kappa_sq(&self, ix: usize, iy: usize) -> f64 {
        self.k_sq[ix] + self.k_sq[iy]
    }

    pub fn laplacian_spec(&self, spec: &[Complex64]) -> Vec<Complex64> {
        self.map_spec(spec, |ix, iy| Complex64::new(-self.kappa_sq(ix, iy), 0.0))
    }

    pub fn laplacian(&self, field: &[f64]) -> Vec<f64> {
        self.inverse(&self.laplacian_spec(&self.forward(field)))
    }

    /// `(∂ₓ, ∂ᵧ)` of a field.
    pub fn gradient(&self, field: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let spec = self.forward(field);
        let dx = self.map_spec(&spec, |ix, _| Complex64::new(0.0, self.k_odd[ix]));
        let dy = self.map_spec(&spec, |_, iy| Complex64::new(0.0, self.k_odd[iy]));
        (self.inverse(&dx), self.inverse(&dy))
    }

    /// `(∂ₓₓ, ∂ₓᵧ, ∂ᵧᵧ)` of a field.
    pub fn hessian(&self, field: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let spec = self.forward(field);
        let xx = self.map_spec(&spec, |ix, _| Complex64::new(-self.k_sq[ix], 0.0));
        let xy = self.map_spec(&spec, |ix, iy| {
            Complex64::new(-self.k_odd[ix] * self.k_odd[iy], 0.0)
        });
        let yy = self.map_spec(&spec, |_, iy| Complex64::new(-self.k_sq[iy], 0.0));
        (self.inverse(&xx), self.inverse(&xy), self.inverse(&yy))
    }

    /// Zeroes every mode outside the two-thirds band.
    pub fn dealias(&self, spec: &mut [Complex64]) {
        let n = self.n;
        for iy in 0..n {
            for ix in 0..n {
                if !(self.keep[ix] && self.keep[iy]) {
                    spec[iy * n + ix] = Complex64::default();
                }
            }
        }
    }

    /// `∫|∇ⁱT|²` over the unit square by Parseval (full tensor norm).
    pub fn derivative_energy(&self, field: &[f64], order: u32) -> f64 {
        let spec = self.forward(field);
        let n = self.n;
        let norm = 1.0 / (self.len() as f64).powi(2);
        let mut s = 0.0;
        for iy in 0..n {
            for ix in 0..n {
                let w = if order == 0 {
                    1.0
                } else {
                    self.kappa_sq(ix, iy).powi(order as i32)
                };
                s += w * spec[iy * n + ix].norm_sqr();
            }
        }
        s * norm
    }
}

/// Mean over the grid, i.e. the integral over the unit square.
pub fn mean(field: &[f64]) -> f64 {
    field.iter().sum::<f64>() / field.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(n: usize, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                v.push(f(ix as f64 / n as f64, iy as f64 / n as f64));
            }
        }
        v
    }

    #[test]
    fn round_trip() {
        let g = SpectralGrid::new(16);
        let f = sample(16, |x, y| (2.0 * PI * x).sin() + (4.0 * PI * y).cos() + 0.3);
        let back = g.inverse(&g.forward(&f));
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn derivatives_of_trig_modes() {
        let n = 32;
        let g = SpectralGrid::new(n);
        let f = sample(n, |x, y| (2.0 * PI * x).cos() * (4.0 * PI * y).sin());
        let lap = g.laplacian(&f);
        let want = sample(n, |x, y| {
            -20.0 * PI * PI * (2.0 * PI * x).cos() * (4.0 * PI * y).sin()
        });
        for (a, b) in lap.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
        let (dx, dy) = g.gradient(&f);
        let wdx = sample(n, |x, y| {
            -2.0 * PI * (2.0 * PI * x).sin() * (4.0 * PI * y).sin()
        });
        let wdy = sample(n, |x, y| {
            4.0 * PI * (2.0 * PI * x).cos() * (4.0 * PI * y).cos()
        });
        for i in 0..f.len() {
            assert!((dx[i] - wdx[i]).abs() < 1e-10);
            assert!((dy[i] - wdy[i]).abs() < 1e-10);
        }
        let (_, xy, _) = g.hessian(&f);
        let wxy = sample(n, |x, y| {
            -8.0 * PI * PI * (2.0 * PI * x).sin() * (4.0 * PI * y).cos()
        });
        for i in 0..f.len() {
            assert!((xy[i] - wxy[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn parseval_energy() {
        let n = 32;
        let g = SpectralGrid::new(n);
        let f = sample(n, |x, _| (2.0 * PI * x).cos());
        assert!((g.derivative_energy(&f, 0) - 0.5).abs() < 1e-14);
        assert!((g.derivative_energy(&f, 1) - 2.0 * PI * PI).abs() < 1e-11);
        assert!((g.derivative_energy(&f, 2) - 8.0 * PI.powi(4)).abs() < 1e-9);
    }

    #[test]
    fn dealias_band() {
        let g = SpectralGrid::new(48);
        let mut spec = vec![Complex64::new(1.0, 0.0); 48 * 48];
        g.dealias(&mut spec);
        let kept = spec.iter().filter(|z| z.re != 0.0).count();
        // |k| < 16 in each direction: 31 modes per axis.
        assert_eq!(kept, 31 * 31);
    }
}
