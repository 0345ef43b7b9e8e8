//! Action waves: density `n(x)` and generating function `S(x)` evolved by the
//! continuity and Hamilton–Jacobi equations.
//!
//! `S` is stored as `gauge + s(x)` where `s` may wind, `s[i + n_x] = s[i] + W`.
//! The winding is tracked explicitly so plane waves `p0·x` are represented
//! exactly on the periodic lattice.

use crate::error::{Error, Result};
use crate::grid::{Grid1D, ParticleParams, PhaseSpaceField, DENSITY_FLOOR, MASS_TOLERANCE, NEGATIVE_LIMIT};
use crate::potential::Potential;
use crate::stencil;

/// Width of the momentum profile standing in for `δ(p − ∂ₓS)`, in momentum bins.
pub const DELTA_WIDTH_BINS: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ActionState {
    grid: Grid1D,
    n: Vec<f64>,
    s: Vec<f64>,
    winding: f64,
    gauge: f64,
}

impl ActionState {
    /// Builds a state from samples of `n` and `S`; the winding of `S` across
    /// the periodic cell is inferred from its samples near the seam.
    pub fn new(grid: Grid1D, n: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        if s.len() != grid.n_x() {
            return Err(Error::Structural(format!(
                "S has {} samples, grid has {}",
                s.len(),
                grid.n_x()
            )));
        }
        let w = stencil::winding(&s);
        ActionState::with_winding(grid, n, s, w)
    }

    /// As [`ActionState::new`] with the winding `S(x + L) − S(x)` given.
    pub fn with_winding(grid: Grid1D, n: Vec<f64>, s: Vec<f64>, winding: f64) -> Result<Self> {
        if n.len() != grid.n_x() || s.len() != grid.n_x() {
            return Err(Error::Structural(format!(
                "action state arrays must have n_x = {} samples",
                grid.n_x()
            )));
        }
        if n.iter().chain(&s).any(|v| !v.is_finite()) || !winding.is_finite() {
            return Err(Error::Data("action state contains non-finite values".into()));
        }
        Ok(ActionState { grid, n, s, winding, gauge: 0.0 })
    }

    pub fn from_fn(grid: Grid1D, n: impl Fn(f64) -> f64, s: impl Fn(f64) -> f64) -> Result<Self> {
        let xs = grid.x_points();
        ActionState::new(grid, xs.iter().map(|&x| n(x)).collect(), xs.iter().map(|&x| s(x)).collect())
    }

    /// Adds the constant `c` to `S`.
    pub fn shifted_gauge(&self, c: f64) -> Self {
        ActionState { gauge: self.gauge + c, ..self.clone() }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
    pub fn n(&self) -> &[f64] {
        &self.n
    }
    /// Samples of `S`.
    pub fn s(&self) -> Vec<f64> {
        self.s.iter().map(|v| v + self.gauge).collect()
    }
    /// `S` without the spatially constant gauge part.
    pub fn s_local(&self) -> &[f64] {
        &self.s
    }
    pub fn gauge(&self) -> f64 {
        self.gauge
    }
    pub fn winding(&self) -> f64 {
        self.winding
    }
    pub fn mass(&self) -> f64 {
        self.n.iter().sum::<f64>() * self.grid.dx()
    }

    /// `∂ₓS` by fourth-order central differences across the winding seam.
    pub fn momentum(&self) -> Vec<f64> {
        stencil::d1_quasi_periodic(&self.s, self.grid.dx(), self.winding)
    }

    /// Current `j = n·∂ₓS/m`.
    pub fn current(&self, params: &ParticleParams) -> Vec<f64> {
        self.momentum().iter().zip(&self.n).map(|(u, n)| n * u / params.m).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let min = self.n.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_LIMIT {
            return Err(Error::Data(format!("density reaches {min}")));
        }
        let mass = self.mass();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Data(format!("action state mass {mass} differs from 1")));
        }
        Ok(())
    }

    pub(crate) fn parts(&self) -> (&[f64], &[f64], f64, f64) {
        (&self.n, &self.s, self.winding, self.gauge)
    }

    pub(crate) fn from_parts(grid: Grid1D, n: Vec<f64>, s: Vec<f64>, winding: f64, gauge: f64) -> Self {
        ActionState { grid, n, s, winding, gauge }
    }
}

/// `0.5·m·dx/max|∂ₓS|`.
pub fn action_cfl_limit(s: &ActionState, params: &ParticleParams) -> f64 {
    let umax = s.momentum().iter().fold(0.0f64, |a, u| a.max(u.abs()));
    if umax > 0.0 {
        0.5 * params.m * s.grid.dx() / umax
    } else {
        f64::INFINITY
    }
}

struct Rates {
    n: Vec<f64>,
    s: Vec<f64>,
    winding: f64,
    gauge: f64,
}

fn rates(
    grid: &Grid1D,
    n: &[f64],
    s: &[f64],
    winding: f64,
    gauge: f64,
    vx: &[f64],
    m: f64,
    gamma: f64,
) -> Rates {
    let dx = grid.dx();
    let u = stencil::d1_quasi_periodic(s, dx, winding);
    let flux: Vec<f64> = n.iter().zip(&u).map(|(n, u)| n * u / m).collect();
    let dn: Vec<f64> = stencil::d1_periodic(&flux, dx).into_iter().map(|d| -d).collect();
    let mut ds: Vec<f64> = u.iter().zip(vx).map(|(u, v)| -(u * u / (2.0 * m) + v)).collect();
    let (dw, dg) = if gamma != 0.0 {
        let rate = gamma / m;
        for (d, sv) in ds.iter_mut().zip(s) {
            *d -= rate * sv;
        }
        (-rate * winding, -rate * gauge)
    } else {
        (0.0, 0.0)
    };
    Rates { n: dn, s: ds, winding: dw, gauge: dg }
}

fn check_caustic(state: &ActionState, m: f64, dt: f64) -> Result<()> {
    let u = state.momentum();
    let grad = stencil::d1_periodic(&u, state.grid.dx());
    for (i, (g, n)) in grad.iter().zip(&state.n).enumerate() {
        let g = g / m;
        if *n > DENSITY_FLOOR && g * dt <= -1.0 {
            return Err(Error::Caustic { x: state.grid.x(i), gradient: g });
        }
    }
    Ok(())
}

/// Shared RK4 step for the frictionless and friction-modified systems.
pub(crate) fn advance_action(
    state: &ActionState,
    v: &Potential,
    params: &ParticleParams,
    gamma: f64,
    dt: f64,
) -> Result<ActionState> {
    if v.is_box() {
        return Err(Error::Parameter("action waves do not support box potentials".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
    }
    check_caustic(state, params.m, dt)?;
    let limit = action_cfl_limit(state, params);
    if dt > limit {
        return Err(Error::Parameter(format!(
            "time step {dt} exceeds the action-wave CFL bound {limit}"
        )));
    }
    let grid = state.grid;
    let vx = v.sample(&grid);
    let m = params.m;
    let (n0, s0, w0, g0) = state.parts();
    let stage = |k: &Rates, h: f64| {
        let n: Vec<f64> = n0.iter().zip(&k.n).map(|(a, b)| a + h * b).collect();
        let s: Vec<f64> = s0.iter().zip(&k.s).map(|(a, b)| a + h * b).collect();
        (n, s, w0 + h * k.winding, g0 + h * k.gauge)
    };
    let k1 = rates(&grid, n0, s0, w0, g0, &vx, m, gamma);
    let (n, s, w, g) = stage(&k1, 0.5 * dt);
    let k2 = rates(&grid, &n, &s, w, g, &vx, m, gamma);
    let (n, s, w, g) = stage(&k2, 0.5 * dt);
    let k3 = rates(&grid, &n, &s, w, g, &vx, m, gamma);
    let (n, s, w, g) = stage(&k3, dt);
    let k4 = rates(&grid, &n, &s, w, g, &vx, m, gamma);
    let c = dt / 6.0;
    let combine = |a: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
        (0..a.len())
            .map(|i| a[i] + c * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    };
    let n = combine(n0, &k1.n, &k2.n, &k3.n, &k4.n);
    let s = combine(s0, &k1.s, &k2.s, &k3.s, &k4.s);
    let w = w0 + c * (k1.winding + 2.0 * k2.winding + 2.0 * k3.winding + k4.winding);
    let g = g0 + c * (k1.gauge + 2.0 * k2.gauge + 2.0 * k3.gauge + k4.gauge);
    Ok(ActionState::from_parts(grid, n, s, w, g))
}

/// One RK4 step of `∂ₜn = −∂ₓ(n∂ₓS/m)`, `∂ₜS = −[(∂ₓS)²/2m + V]`.
pub fn evolve_action_wave(
    s: &ActionState,
    v: &Potential,
    params: &ParticleParams,
    dt: f64,
) -> Result<ActionState> {
    advance_action(s, v, params, 0.0, dt)
}

/// Realizes `n(x)·δ(p − ∂ₓS(x))` on `grid` with a Gaussian of width `1.5·dp`.
pub fn action_to_phase_space(s: &ActionState, grid: &Grid1D) -> Result<PhaseSpaceField> {
    if !grid.same_x(&s.grid) {
        return Err(Error::Structural("target grid has a different coordinate lattice".into()));
    }
    let u = s.momentum();
    let limit = 0.9 * grid.p_max();
    if let Some(bad) = u.iter().find(|u| u.abs() > limit) {
        return Err(Error::Cutoff { slope: bad.abs(), limit });
    }
    let dp = grid.dp();
    let width = DELTA_WIDTH_BINS * dp;
    let ps = grid.p_points();
    let mut values = Vec::with_capacity(grid.n_x() * grid.n_p());
    let mut col = vec![0.0; grid.n_p()];
    for (ui, ni) in u.iter().zip(&s.n) {
        for (c, p) in col.iter_mut().zip(&ps) {
            let z = (p - ui) / width;
            *c = (-0.5 * z * z).exp();
        }
        let norm = col.iter().sum::<f64>() * dp;
        values.extend(col.iter().map(|c| ni * c / norm));
    }
    PhaseSpaceField::new(*grid, values)
}
