//! Overdamped limit `∂ₜn = ∂ₓ(D∂ₓn + (V′/γ)n)` in Scharfetter–Gummel flux form.
//!
//! The face flux `J = (D/dx)[B(z)nᵢ − B(−z)nᵢ₊₁]` with `z = (Vᵢ₊₁ − Vᵢ)/kT` and
//! `B(z) = z/(eᶻ − 1)` vanishes identically on `e^{−V/kT}`, so the Gibbs
//! density is a discrete fixed point. The lattice ends are closed (no flux
//! across the periodic seam), which keeps confining potentials well posed.

use super::ThermalParams;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::potential::Potential;

fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

struct Faces {
    forward: Vec<f64>,
    backward: Vec<f64>,
    rate: f64,
}

fn faces(grid: &Grid1D, v: &Potential, th: &ThermalParams) -> Result<Faces> {
    if !(th.gamma > 0.0) || !(th.kt > 0.0) {
        return Err(Error::Parameter("the Smoluchowski limit needs gamma > 0 and kT > 0".into()));
    }
    if v.is_box() {
        return Err(Error::Parameter("the Smoluchowski solver does not support box potentials".into()));
    }
    let d = th.diffusion()?;
    let dx = grid.dx();
    let vs = v.sample(grid);
    let n = grid.n_x();
    let mut forward = Vec::with_capacity(n - 1);
    let mut backward = Vec::with_capacity(n - 1);
    let mut rate: f64 = 0.0;
    for i in 0..n - 1 {
        let z = (vs[i + 1] - vs[i]) / th.kt;
        forward.push(d / dx * bernoulli(z));
        backward.push(d / dx * bernoulli(-z));
        rate = rate.max((bernoulli(z) + bernoulli(-z)) * d / (dx * dx));
    }
    Ok(Faces { forward, backward, rate })
}

fn check_dt(grid: &Grid1D, th: &ThermalParams, faces: &Faces, dt: f64) -> Result<()> {
    let d = th.diffusion()?;
    let bound = 0.25 * grid.dx().powi(2) / d;
    if !(dt > 0.0) || dt > bound {
        return Err(Error::Parameter(format!("time step {dt} outside (0, {bound}] = (0, 0.25·dx²/D]")));
    }
    if dt * faces.rate > 1.0 {
        return Err(Error::Parameter(format!(
            "time step {dt} too large for the drift; need dt <= {}",
            1.0 / faces.rate
        )));
    }
    Ok(())
}

fn apply(faces: &Faces, n: &mut [f64], dx: f64, dt: f64, flux: &mut Vec<f64>) {
    flux.clear();
    flux.extend((0..n.len() - 1).map(|i| faces.forward[i] * n[i] - faces.backward[i] * n[i + 1]));
    let c = dt / dx;
    let last = n.len() - 1;
    for i in 0..n.len() {
        let out = if i < last { flux[i] } else { 0.0 };
        let inflow = if i > 0 { flux[i - 1] } else { 0.0 };
        n[i] -= c * (out - inflow);
    }
}

/// One explicit step.
pub fn smoluchowski_step(grid: &Grid1D, n: &[f64], v: &Potential, th: &ThermalParams, dt: f64) -> Result<Vec<f64>> {
    smoluchowski_evolve(grid, n, v, th, dt, 1)
}

/// `n_steps` explicit steps.
pub fn smoluchowski_evolve(
    grid: &Grid1D,
    n: &[f64],
    v: &Potential,
    th: &ThermalParams,
    dt: f64,
    n_steps: usize,
) -> Result<Vec<f64>> {
    if n.len() != grid.n_x() {
        return Err(Error::Structural(format!("density has {} samples, grid has {}", n.len(), grid.n_x())));
    }
    let f = faces(grid, v, th)?;
    check_dt(grid, th, &f, dt)?;
    let mut out = n.to_vec();
    let mut flux = Vec::with_capacity(n.len());
    for _ in 0..n_steps {
        apply(&f, &mut out, grid.dx(), dt, &mut flux);
    }
    Ok(out)
}
