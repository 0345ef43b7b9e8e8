//! Local moment equations of the Fokker–Planck dynamics,
//!
//! `∂ₜn = −∂ₓj`,
//! `m∂ₜj = −V′n − γj − 2∂ₓε`,
//! `∂ₜε = (γkT/m)n − V′j − (2γ/m)ε − 2∂ₓχ`,
//!
//! closed either by dropping `χ` or by slaving `ε` to its equilibrium value.

use super::ThermalParams;
use crate::error::{Error, Result};
use crate::grid::{MomentFields, ParticleParams, DENSITY_FLOOR};
use crate::potential::Potential;
use crate::spectral::derivative;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    /// `χ ≡ 0`.
    TruncateChi,
    /// `ε = (kT/2)n − (mV′/2γ)j`; needs `γ > 0`.
    EquilibriumEps,
}

struct State {
    n: Vec<f64>,
    j: Vec<f64>,
    eps: Vec<f64>,
}

fn slaved_eps(n: &[f64], j: &[f64], force: &[f64], params: &ParticleParams, th: &ThermalParams) -> Vec<f64> {
    (0..n.len())
        .map(|i| 0.5 * th.kt * n[i] - params.m * force[i] * j[i] / (2.0 * th.gamma))
        .collect()
}

/// One RK4 step of the closed moment system with spectral x-derivatives.
pub fn moment_step(
    mf: &MomentFields,
    v: &Potential,
    params: &ParticleParams,
    th: &ThermalParams,
    closure: Closure,
    dt: f64,
) -> Result<MomentFields> {
    if closure == Closure::EquilibriumEps && !(th.gamma > 0.0) {
        return Err(Error::Parameter("the equilibrium closure for eps needs gamma > 0".into()));
    }
    if v.is_box() {
        return Err(Error::Parameter("the moment hierarchy does not support box potentials".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    let grid = mf.grid;
    let dx = grid.dx();
    let m = params.m;
    // signal speed: bulk velocity plus the fastest acoustic mode √(3·2ε/(mn))
    // cells far below the peak carry noisy ratios and no weight
    let n_cut = DENSITY_FLOOR.max(1e-6 * mf.n.iter().cloned().fold(0.0, f64::max));
    let mut speed: f64 = (th.kt / m).sqrt();
    for i in 0..grid.n_x() {
        if mf.n[i] > n_cut {
            let u = (mf.j[i] / mf.n[i]).abs();
            let c = (6.0 * mf.eps[i].max(0.0) / (m * mf.n[i])).sqrt();
            speed = speed.max(u + c);
        }
    }
    if dt * speed > 0.5 * dx {
        return Err(Error::Parameter(format!(
            "time step {dt} violates the advective bound {}",
            0.5 * dx / speed
        )));
    }
    if dt * 2.0 * th.gamma / m > 2.0 {
        return Err(Error::Parameter(format!("time step {dt} is too large for friction {}", th.gamma)));
    }
    let force = v.sample_force(&grid);
    let rhs = |s: &State| -> State {
        let eps = match closure {
            Closure::TruncateChi => s.eps.clone(),
            Closure::EquilibriumEps => slaved_eps(&s.n, &s.j, &force, params, th),
        };
        let dj = derivative(&s.j, dx, 1);
        let de = derivative(&eps, dx, 1);
        let n_len = s.n.len();
        let dn: Vec<f64> = dj.iter().map(|d| -d).collect();
        let djt: Vec<f64> = (0..n_len)
            .map(|i| (-force[i] * s.n[i] - th.gamma * s.j[i] - 2.0 * de[i]) / m)
            .collect();
        let det = match closure {
            Closure::TruncateChi => (0..n_len)
                .map(|i| {
                    th.gamma * th.kt / m * s.n[i] - force[i] * s.j[i] - 2.0 * th.gamma / m * s.eps[i]
                })
                .collect(),
            Closure::EquilibriumEps => vec![0.0; n_len],
        };
        State { n: dn, j: djt, eps: det }
    };
    let axpy = |a: &State, k: &State, h: f64| State {
        n: a.n.iter().zip(&k.n).map(|(x, y)| x + h * y).collect(),
        j: a.j.iter().zip(&k.j).map(|(x, y)| x + h * y).collect(),
        eps: a.eps.iter().zip(&k.eps).map(|(x, y)| x + h * y).collect(),
    };
    let s0 = State { n: mf.n.clone(), j: mf.j.clone(), eps: mf.eps.clone() };
    let k1 = rhs(&s0);
    let k2 = rhs(&axpy(&s0, &k1, 0.5 * dt));
    let k3 = rhs(&axpy(&s0, &k2, 0.5 * dt));
    let k4 = rhs(&axpy(&s0, &k3, dt));
    let c = dt / 6.0;
    let comb = |a: &[f64], a1: &[f64], a2: &[f64], a3: &[f64], a4: &[f64]| -> Vec<f64> {
        (0..a.len()).map(|i| a[i] + c * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i])).collect()
    };
    let n = comb(&s0.n, &k1.n, &k2.n, &k3.n, &k4.n);
    let j = comb(&s0.j, &k1.j, &k2.j, &k3.j, &k4.j);
    let eps = match closure {
        Closure::TruncateChi => comb(&s0.eps, &k1.eps, &k2.eps, &k3.eps, &k4.eps),
        Closure::EquilibriumEps => slaved_eps(&n, &j, &force, params, th),
    };
    let chi = vec![0.0; grid.n_x()];
    MomentFields::new(grid, n, j, eps, chi)
}
