//! Split-step Fokker–Planck propagation.
//!
//! A step is `A(dt/2) · R(dt) · A(dt/2)` where `A` is free streaming in x and
//! `R` acts on each momentum row: half kick, exact Ornstein–Uhlenbeck update
//! of friction and diffusion, half kick. In the conjugate variable `k` the
//! whole row operator is explicit,
//!
//! `f̃'(k) = G(k)·e^{−ik(1+s)V′dt/2}·f̃(s·k)`, `s = e^{−γdt/m}`,
//! `G(k) = exp(−(m·kT/2)(1 − s²)k²)`,
//!
//! and `f̃(s·k) = Σ_p e^{iskp} f(p) dp` is evaluated exactly as a dense sum, so
//! Gaussians in p are mapped to Gaussians without interpolation error.

use super::ThermalParams;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, ParticleParams, PhaseSpaceField};
use crate::liouville::{kick_p, shear_x};
use crate::liouville::cfl_limit;
use crate::potential::Potential;
use crate::spectral::{map_rows, FftPair};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Reusable Fokker–Planck stepper for a fixed grid, potential and step size.
pub struct FpPropagator {
    grid: Grid1D,
    potential: Potential,
    params: ParticleParams,
    dt: f64,
    row: Option<RowOperator>,
}

struct RowOperator {
    /// `e^{i s k_l p_j} dp`, row-major over `(l, j)`.
    sample: Vec<Complex64>,
    /// `G(k_l)·(−1)^{l − n/2}`, the centered-order sign of the inverse transform.
    gain: Vec<Complex64>,
    /// `k_l (1 + s) dt / 2`, multiplied by `V′` per row.
    kick: Vec<f64>,
    force: Vec<f64>,
    fft: FftPair,
}

impl FpPropagator {
    pub fn new(
        grid: &Grid1D,
        v: &Potential,
        params: &ParticleParams,
        th: &ThermalParams,
        dt: f64,
    ) -> Result<Self> {
        let limit = cfl_limit(grid, v, params);
        if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!(
                "time step {dt} outside (0, {limit}] allowed by the CFL bound"
            )));
        }
        let diffusion = th.gamma * th.kt;
        if diffusion > 0.0 {
            let bound = 0.25 * grid.dp().powi(2) / diffusion;
            if dt > bound {
                return Err(Error::Parameter(format!(
                    "time step {dt} exceeds the diffusion bound {bound}"
                )));
            }
        }
        let row = if th.gamma == 0.0 && th.kt == 0.0 {
            None
        } else {
            Some(RowOperator::new(grid, v, params, th, dt))
        };
        Ok(FpPropagator { grid: *grid, potential: *v, params: *params, dt, row })
    }

    /// One step.
    pub fn step(&self, f: &PhaseSpaceField) -> Result<PhaseSpaceField> {
        self.evolve(f, 1)
    }

    /// `n_steps` consecutive steps.
    pub fn evolve(&self, f: &PhaseSpaceField, n_steps: usize) -> Result<PhaseSpaceField> {
        if *f.grid() != self.grid {
            return Err(Error::Structural("field grid differs from the propagator grid".into()));
        }
        let mut g = f.clone();
        for _ in 0..n_steps {
            shear_x(&mut g, &self.potential, &self.params, 0.5 * self.dt)?;
            match &self.row {
                None => kick_p(&mut g, &self.potential, self.dt),
                Some(op) => op.apply(&mut g),
            }
            shear_x(&mut g, &self.potential, &self.params, 0.5 * self.dt)?;
            g.check_aliasing()?;
        }
        Ok(g)
    }
}

impl RowOperator {
    fn new(grid: &Grid1D, v: &Potential, params: &ParticleParams, th: &ThermalParams, dt: f64) -> Self {
        let n = grid.n_p();
        let dp = grid.dp();
        let s = (-th.gamma * dt / params.m).exp();
        let spread = 0.5 * params.m * th.kt * (1.0 - s * s);
        let ks = grid.k_points();
        let ps = grid.p_points();
        let mut sample = Vec::with_capacity(n * n);
        for &k in &ks {
            for &p in &ps {
                sample.push(Complex64::from_polar(dp, s * k * p));
            }
        }
        let gain = ks
            .iter()
            .enumerate()
            .map(|(l, &k)| {
                let sign = if (l + n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(sign * (-spread * k * k).exp(), 0.0)
            })
            .collect();
        let kick = ks.iter().map(|k| k * (1.0 + s) * dt / 2.0).collect();
        RowOperator { sample, gain, kick, force: v.sample_force(grid), fft: FftPair::new(n) }
    }

    fn apply(&self, f: &mut PhaseSpaceField) {
        let grid = *f.grid();
        let n = grid.n_p();
        let scale = grid.dk() / (2.0 * PI);
        map_rows(f.values_mut(), n, |i, row| {
            let force = self.force[i];
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for l in 0..n {
                let weights = &self.sample[l * n..(l + 1) * n];
                let mut acc = Complex64::new(0.0, 0.0);
                for (w, v) in weights.iter().zip(row.iter()) {
                    acc += w * v;
                }
                let mut z = acc * self.gain[l] * Complex64::from_polar(1.0, -self.kick[l] * force);
                if l == 0 {
                    z = Complex64::new(z.re, 0.0);
                }
                // centered index l sits at FFT index (l − n/2) mod n
                buf[(l + n / 2) % n] = z;
            }
            self.fft.forward.process(&mut buf);
            for (v, z) in row.iter_mut().zip(&buf) {
                *v = z.re * scale;
            }
        });
    }
}

/// One Fokker–Planck step of
/// `∂ₜf + (p/m)∂ₓf − V′∂ₚf = ∂ₚ[(γp/m)f + γkT∂ₚf]`.
pub fn fp_step(
    f: &PhaseSpaceField,
    v: &Potential,
    params: &ParticleParams,
    th: &ThermalParams,
    dt: f64,
) -> Result<PhaseSpaceField> {
    FpPropagator::new(f.grid(), v, params, th, dt)?.step(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::liouville_step;

    fn maxwell_boltzmann(grid: Grid1D, v: &Potential, params: &ParticleParams, kt: f64) -> PhaseSpaceField {
        PhaseSpaceField::from_fn(grid, |x, p| (-(p * p / (2.0 * params.m) + v.v(x)) / kt).exp())
            .normalized()
            .unwrap()
    }

    #[test]
    fn closed_limit_is_liouville() {
        let g = Grid1D::new(-6.0, 6.0, 64, 6.0, 64).unwrap();
        let v = Potential::harmonic(1.0, 1.0).unwrap();
        let params = ParticleParams::default();
        let f = PhaseSpaceField::from_fn(g, |x, p| (-(x - 1.0).powi(2) - p * p).exp()).normalized().unwrap();
        let dt = 0.01;
        let a = fp_step(&f, &v, &params, &ThermalParams::closed(), dt).unwrap();
        let b = liouville_step(&f, &v, &params, dt).unwrap();
        assert!(a.l2_distance(&b) < 1e-14);
    }

    #[test]
    fn ornstein_uhlenbeck_row_is_exact_for_free_gaussians() {
        // V = 0 and a spatially uniform Gaussian in p: the momentum variance
        // relaxes as m·kT + (σ₀² − m·kT)e^{−2γt/m}
        let g = Grid1D::new(-4.0, 4.0, 8, 8.0, 128).unwrap();
        let params = ParticleParams::default();
        let th = ThermalParams::new(0.8, 1.0).unwrap();
        let s0: f64 = 0.3;
        let f = PhaseSpaceField::from_fn(g, |_, p| (-(p - 1.0).powi(2) / (2.0 * s0 * s0)).exp())
            .normalized()
            .unwrap();
        let dt = 0.002;
        let prop = FpPropagator::new(&g, &Potential::Free, &params, &th, dt).unwrap();
        let out = prop.evolve(&f, 250).unwrap();
        let t = 0.5;
        let mean = out.expectation(|_, p| p);
        let var = out.expectation(|_, p| (p - mean).powi(2));
        let decay = (-2.0 * th.gamma * t / params.m).exp();
        assert!((mean - (-th.gamma * t).exp()).abs() < 1e-10);
        assert!((var - (1.0 + (s0 * s0 - 1.0) * decay)).abs() < 1e-10);
        assert!((out.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gibbs_state_is_nearly_stationary() {
        let g = Grid1D::new(-6.0, 6.0, 64, 6.0, 64).unwrap();
        let v = Potential::harmonic(1.0, 1.0).unwrap();
        let params = ParticleParams::default();
        let th = ThermalParams::new(0.5, 0.5).unwrap();
        let f = maxwell_boltzmann(g, &v, &params, th.kt);
        let h = fp_step(&f, &v, &params, &th, 5e-4).unwrap();
        assert!(h.l2_distance(&f) < 1e-10, "{}", h.l2_distance(&f));
    }

    #[test]
    fn diffusion_bound_is_enforced() {
        let g = Grid1D::new(-6.0, 6.0, 64, 6.0, 64).unwrap();
        let th = ThermalParams::new(10.0, 10.0).unwrap();
        let f = PhaseSpaceField::zeros(g);
        assert!(matches!(
            fp_step(&f, &Potential::Free, &ParticleParams::default(), &th, 0.01),
            Err(Error::Parameter(_))
        ));
    }
}
