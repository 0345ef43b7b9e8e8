//! Action and Hamiltonian functionals of the conjugate pair `(n, S)` and
//! numerical checks of the structure they imply: Hamilton's equations as
//! functional derivatives, gauge freedom of `S`, and agreement of the `(n, S)`
//! symplectic form with the one induced by `ψ = √n·e^{iS/σ}`.
//!
//! Functional derivatives are taken with respect to `value·dx`, so lattice and
//! continuum Euler–Lagrange equations coincide.

use crate::error::{Error, Result};
use crate::grid::{ParticleParams, DENSITY_FLOOR};
use crate::liouville::{evolve_action_wave, ActionState};
use crate::potential::Potential;
use crate::stencil;
use num_complex::Complex64;
use std::io::Write;

/// A variation `(δn, δS)` of an action state.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub dn: Vec<f64>,
    pub ds: Vec<f64>,
}

impl Tangent {
    /// Removes the mean of `δn` so the variation preserves normalization.
    pub fn projected(&self) -> Tangent {
        let mean = self.dn.iter().sum::<f64>() / self.dn.len() as f64;
        Tangent { dn: self.dn.iter().map(|v| v - mean).collect(), ds: self.ds.clone() }
    }
}

/// An action state together with an optional variation.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldPair {
    pub state: ActionState,
    pub tangent: Option<Tangent>,
}

/// `H = Σ n[(∂ₓS)²/2m + V]dx`.
pub fn hamiltonian_functional(s: &ActionState, v: &Potential, params: &ParticleParams) -> f64 {
    let grid = s.grid();
    let u = s.momentum();
    s.n()
        .iter()
        .zip(&u)
        .enumerate()
        .map(|(i, (n, u))| {
            let pot = if *n == 0.0 { 0.0 } else { v.v(grid.x(i)) };
            n * (u * u / (2.0 * params.m) + pot)
        })
        .sum::<f64>()
        * grid.dx()
}

/// `δH/δS = −∂ₓ(n∂ₓS/m)` and `δH/δn = (∂ₓS)²/2m + V`, in the lattice
/// discretization used by [`hamiltonian_functional`].
pub fn hamiltonian_gradient(s: &ActionState, v: &Potential, params: &ParticleParams) -> (Vec<f64>, Vec<f64>) {
    let grid = s.grid();
    let u = s.momentum();
    let flux: Vec<f64> = s.n().iter().zip(&u).map(|(n, u)| n * u / params.m).collect();
    let d_s = stencil::d1_periodic(&flux, grid.dx()).into_iter().map(|d| -d).collect();
    let d_n = u
        .iter()
        .enumerate()
        .map(|(i, u)| u * u / (2.0 * params.m) + v.v(grid.x(i)))
        .collect();
    (d_n, d_s)
}

/// `𝒜 = −Σₜ Σₓ n[∂ₜS + (∂ₓS)²/2m + V]dx·dt` over the interior snapshots with
/// centered time differences; snapshots are `dt` apart.
pub fn action_functional(traj: &[ActionState], v: &Potential, params: &ParticleParams, dt: f64) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::Structural("the action functional needs at least three snapshots".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("snapshot spacing must be positive, got {dt}")));
    }
    let grid = traj[0].grid();
    if traj.iter().any(|s| s.grid() != grid) {
        return Err(Error::Structural("snapshots live on different grids".into()));
    }
    let vx = v.sample(grid);
    let mut total = 0.0;
    for k in 1..traj.len() - 1 {
        let (prev, cur, next) = (traj[k - 1].s(), &traj[k], traj[k + 1].s());
        let u = cur.momentum();
        for i in 0..grid.n_x() {
            let dsdt = (next[i] - prev[i]) / (2.0 * dt);
            total += cur.n()[i] * (dsdt + u[i] * u[i] / (2.0 * params.m) + vx[i]);
        }
    }
    Ok(-total * grid.dx() * dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    /// Error of `δH/δn`.
    pub err_n: f64,
    /// Error of `δH/δS`.
    pub err_s: f64,
}

fn numeric_gradient(s: &ActionState, v: &Potential, params: &ParticleParams, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let grid = *s.grid();
    let bump = eps / grid.dx();
    let n = s.n().to_vec();
    let sl = s.s_local().to_vec();
    let w = s.winding();
    let h = |n: Vec<f64>, sl: Vec<f64>| {
        let st = ActionState::with_winding(grid, n, sl, w).expect("finite perturbation");
        hamiltonian_functional(&st, v, params)
    };
    let mut d_n = Vec::with_capacity(n.len());
    let mut d_s = Vec::with_capacity(n.len());
    for i in 0..n.len() {
        let (mut up, mut dn) = (n.clone(), n.clone());
        up[i] += bump;
        dn[i] -= bump;
        d_n.push((h(up, sl.clone()) - h(dn, sl.clone())) / (2.0 * eps));
        let (mut up, mut dn) = (sl.clone(), sl.clone());
        up[i] += bump;
        dn[i] -= bump;
        d_s.push((h(n.clone(), up) - h(n.clone(), dn)) / (2.0 * eps));
    }
    (d_n, d_s)
}

/// Compares [`hamiltonian_gradient`] with central finite differences of
/// [`hamiltonian_functional`] at bump size `ε = 1e-5` (and `ε/2` as a
/// convergence guard). The winding of `S` is held fixed. Errors are maximum
/// deviations relative to the largest component of the full gradient
/// `(δH/δn, δH/δS)`, which stays meaningful when one half vanishes.
pub fn functional_gradient_check(s: &ActionState, v: &Potential, params: &ParticleParams) -> Result<GradientCheck> {
    let (ana_n, ana_s) = hamiltonian_gradient(s, v, params);
    let eps = 1e-5;
    let (num_n, num_s) = numeric_gradient(s, v, params, eps);
    let (half_n, half_s) = numeric_gradient(s, v, params, 0.5 * eps);
    let scale = ana_n.iter().chain(&ana_s).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let spread = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let drift = spread(&num_n, &half_n).max(spread(&num_s, &half_s)) / scale;
    if !drift.is_finite() || drift > 1e-6 {
        return Err(Error::Numerical(format!(
            "finite-difference functional derivatives change by {drift:e} under bump halving"
        )));
    }
    Ok(GradientCheck { err_n: spread(&num_n, &ana_n) / scale, err_s: spread(&num_s, &ana_s) / scale })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeCheck {
    /// Largest `|n′ − n|` after one step, over all snapshots.
    pub max_density_difference: f64,
    /// Largest `|S′ − S − c|` after one step.
    pub max_action_offset_error: f64,
}

/// Evolves a reference trajectory from `s` and, at each of its snapshots `k`,
/// the gauge-shifted copy `S + c[k]` by one step; compares the results.
pub fn gauge_invariance_check(
    s: &ActionState,
    v: &Potential,
    params: &ParticleParams,
    c: &[f64],
    dt: f64,
) -> Result<GaugeCheck> {
    let mut cur = s.clone();
    let mut dn: f64 = 0.0;
    let mut ds: f64 = 0.0;
    for &ck in c {
        let next = evolve_action_wave(&cur, v, params, dt)?;
        let shifted = evolve_action_wave(&cur.shifted_gauge(ck), v, params, dt)?;
        for (a, b) in next.n().iter().zip(shifted.n()) {
            dn = dn.max((a - b).abs());
        }
        for (a, b) in next.s().iter().zip(shifted.s()) {
            ds = ds.max(((b - a) - ck).abs());
        }
        cur = next;
    }
    Ok(GaugeCheck { max_density_difference: dn, max_action_offset_error: ds })
}

/// `(ω₁, ω₂)`: the `(n, S)` form `Σ(δn₁δS₂ − δn₂δS₁)dx` and the wave-function
/// form `−iσΣ(δψ₁*δψ₂ − δψ₂*δψ₁)dx` with `δψ = ψ(δn/2n + iδS/σ)`.
pub fn symplectic_forms(s: &ActionState, params: &ParticleParams, a: &Tangent, b: &Tangent) -> Result<(f64, f64)> {
    let grid = s.grid();
    let n_x = grid.n_x();
    if [a.dn.len(), a.ds.len(), b.dn.len(), b.ds.len()].iter().any(|&l| l != n_x) {
        return Err(Error::Structural(format!("tangents must have n_x = {n_x} samples")));
    }
    let n = s.n();
    if let Some(i) = (0..n_x).find(|&i| n[i] <= DENSITY_FLOOR) {
        return Err(Error::Node { x: grid.x(i), density: n[i] });
    }
    let (a, b) = (a.projected(), b.projected());
    let sigma = params.sigma;
    let phase = s.s();
    let dx = grid.dx();
    let mut w1 = 0.0;
    let mut w2 = Complex64::new(0.0, 0.0);
    for i in 0..n_x {
        w1 += a.dn[i] * b.ds[i] - b.dn[i] * a.ds[i];
        let psi = Complex64::from_polar(n[i].sqrt(), phase[i] / sigma);
        let da = psi * Complex64::new(a.dn[i] / (2.0 * n[i]), a.ds[i] / sigma);
        let db = psi * Complex64::new(b.dn[i] / (2.0 * n[i]), b.ds[i] / sigma);
        w2 += da.conj() * db - db.conj() * da;
    }
    let w2 = Complex64::new(0.0, -sigma) * w2;
    Ok((w1 * dx, w2.re * dx))
}

/// `|ω₁ − ω₂|/|ω₁|` (absolute when `ω₁ = 0`).
pub fn symplectic_identity_check(s: &ActionState, params: &ParticleParams, a: &Tangent, b: &Tangent) -> Result<f64> {
    let (w1, w2) = symplectic_forms(s, params, a, b)?;
    let d = (w1 - w2).abs();
    Ok(if w1 != 0.0 { d / w1.abs() } else { d })
}

/// One named scalar check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRow {
    /// Passes when `value < tolerance`.
    pub fn below(check: &str, value: f64, tolerance: f64) -> Self {
        CheckRow { check: check.to_string(), value, tolerance, pass: value < tolerance }
    }
}

pub fn write_checks_csv<W: Write>(rows: &[CheckRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "check,value,tolerance,pass")?;
    for r in rows {
        writeln!(w, "{},{:e},{:e},{}", r.check, r.value, r.tolerance, r.pass)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    fn grid() -> Grid1D {
        Grid1D::new(-6.0, 6.0, 128, 6.0, 16).unwrap()
    }

    fn gauss(x: f64) -> f64 {
        (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
    }

    #[test]
    fn plane_wave_energy() {
        let g = grid();
        let params = ParticleParams::new(2.0, 1.0).unwrap();
        let st = ActionState::from_fn(g, gauss, |x| 0.7 * x).unwrap();
        let h = hamiltonian_functional(&st, &Potential::Free, &params);
        assert!((h - 0.49 / 4.0 * st.mass()).abs() < 1e-10);
        let zero = ActionState::from_fn(g, gauss, |_| 0.0).unwrap();
        assert_eq!(hamiltonian_functional(&zero, &Potential::Free, &params), 0.0);
    }

    #[test]
    fn uniform_plane_wave_gradients() {
        let g = grid();
        let params = ParticleParams::default();
        let v = Potential::harmonic(1.0, 1.0).unwrap();
        let st = ActionState::from_fn(g, |_| 1.0 / 12.0, |x| 0.5 * x).unwrap();
        let (d_n, d_s) = hamiltonian_gradient(&st, &v, &params);
        for (i, (a, b)) in d_n.iter().zip(&d_s).enumerate() {
            assert!((a - (0.125 + v.v(g.x(i)))).abs() < 1e-12);
            assert!(b.abs() < 1e-12);
        }
        let chk = functional_gradient_check(&st, &v, &params).unwrap();
        assert!(chk.err_n < 1e-6 && chk.err_s < 1e-6, "{chk:?}");
    }

    #[test]
    fn static_action_closed_form() {
        let g = grid();
        let params = ParticleParams::default();
        let v = Potential::harmonic(1.0, 1.0).unwrap();
        let e = 0.8;
        let dt = 0.1;
        let traj: Vec<ActionState> = (0..6)
            .map(|k| ActionState::from_fn(g, gauss, |_| -e * k as f64 * dt).unwrap())
            .collect();
        let a = action_functional(&traj, &v, &params, dt).unwrap();
        let mean_v: f64 = traj[0].n().iter().enumerate().map(|(i, n)| n * v.v(g.x(i))).sum::<f64>() * g.dx();
        let t = 4.0 * dt;
        assert!((a - (e * traj[0].mass() - mean_v) * t).abs() < 1e-12);
        assert!(action_functional(&traj[..2], &v, &params, dt).is_err());
    }

    #[test]
    fn symplectic_forms_agree_and_are_antisymmetric() {
        let g = grid();
        let params = ParticleParams::new(1.0, 0.7).unwrap();
        let st = ActionState::from_fn(g, |x| 0.05 + gauss(x), |x| 0.3 * (x / 2.0).sin()).unwrap();
        let t1 = Tangent { dn: g.x_points().iter().map(|x| (x * 0.9).cos()).collect(), ds: vec![0.0; 128] };
        let t2 = Tangent { dn: vec![0.0; 128], ds: g.x_points().iter().map(|x| (x * 0.4).sin() + 0.2).collect() };
        assert!(symplectic_identity_check(&st, &params, &t1, &t2).unwrap() < 1e-12);
        let (w1, w2) = symplectic_forms(&st, &params, &t1, &t1).unwrap();
        assert!(w1.abs() < 1e-15 && w2.abs() < 1e-15);
        let holes = ActionState::from_fn(g, |x| 3.0 * gauss(3.0 * x), |_| 0.0).unwrap();
        assert!(matches!(symplectic_forms(&holes, &params, &t1, &t2), Err(Error::Node { .. })));
    }

    #[test]
    fn gauge_shift_leaves_density_untouched() {
        let g = grid();
        let params = ParticleParams::default();
        let v = Potential::harmonic(1.0, 1.0).unwrap();
        let st = ActionState::from_fn(g, gauss, |x| 0.2 * x).unwrap();
        let chk = gauge_invariance_check(&st, &v, &params, &[1.0, 1e6, -3.5], 0.01).unwrap();
        assert_eq!(chk.max_density_difference, 0.0);
        assert!(chk.max_action_offset_error < 1e-9);
    }
}
