//! Brownian dynamics at finite temperature: Fokker–Planck propagation in phase
//! space, the Langevin ensemble it averages, the moment hierarchy, the
//! overdamped Smoluchowski limit, friction-damped action waves and the
//! thermal sound wave equation.

mod fp;
mod hierarchy;
mod langevin;
mod smoluchowski;
mod sound;

pub use fp::{fp_step, FpPropagator};
pub use hierarchy::{moment_step, Closure};
pub use langevin::{langevin_ensemble, EnsembleResult, EnsembleSpec, EnsembleStats, InitialSampler};
pub use smoluchowski::{smoluchowski_evolve, smoluchowski_step};
pub use sound::{measure_wave_speed, thermal_sound_evolve, DensityHistory, SoundPerturbation, SpeedFit};

use crate::error::{Error, Result};
use crate::grid::ParticleParams;
use crate::liouville::{advance_action, ActionState};
use crate::potential::Potential;

/// Friction `gamma` (mass/time) and temperature `kT` (energy).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalParams {
    pub gamma: f64,
    pub kt: f64,
}

impl ThermalParams {
    pub fn new(gamma: f64, kt: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) || !(kt >= 0.0 && kt.is_finite()) {
            return Err(Error::Parameter(format!(
                "friction and temperature must be finite and non-negative, got gamma = {gamma}, kT = {kt}"
            )));
        }
        Ok(ThermalParams { gamma, kt })
    }

    pub fn closed() -> Self {
        ThermalParams { gamma: 0.0, kt: 0.0 }
    }

    /// `D = kT/γ`.
    pub fn diffusion(&self) -> Result<f64> {
        if self.gamma > 0.0 {
            Ok(self.kt / self.gamma)
        } else {
            Err(Error::Parameter("the diffusion coefficient needs gamma > 0".into()))
        }
    }

    /// `v_s = √(kT/m)`.
    pub fn sound_speed(&self, params: &ParticleParams) -> f64 {
        (self.kt / params.m).sqrt()
    }
}

/// One RK4 step of `∂ₜS = −[(∂ₓS)²/2m + V + (γ/m)S]` with continuity for `n`,
/// the zero-temperature coherent solution of the Fokker–Planck equation.
pub fn modified_hj_step(
    s: &ActionState,
    v: &Potential,
    params: &ParticleParams,
    th: &ThermalParams,
    dt: f64,
) -> Result<ActionState> {
    if th.kt > 0.0 {
        return Err(Error::Parameter(format!(
            "the friction-modified Hamilton–Jacobi equation holds at kT = 0, got kT = {}",
            th.kt
        )));
    }
    advance_action(s, v, params, th.gamma, dt)
}
