//! Strang-split spectral advection: half shear in x, full kick in p, half shear.

use crate::error::{Error, Result};
use crate::grid::{Grid1D, ParticleParams, PhaseSpaceField};
use crate::potential::Potential;
use crate::spectral::{map_columns, map_rows, Translator};

/// Largest admissible step, `0.5·min(m·dx/p_max, dp/max|V′|)`.
pub fn cfl_limit(grid: &Grid1D, v: &Potential, params: &ParticleParams) -> f64 {
    let shear = params.m * grid.dx() / grid.p_max();
    let force = v.max_abs_force(grid);
    let kick = if force > 0.0 { grid.dp() / force } else { f64::INFINITY };
    0.5 * shear.min(kick)
}

pub(crate) fn check_step(grid: &Grid1D, v: &Potential, params: &ParticleParams, dt: f64) -> Result<()> {
    let limit = cfl_limit(grid, v, params);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "time step {dt} outside (0, {limit}] allowed by the CFL bound"
        )));
    }
    Ok(())
}

/// Free streaming `f(x, p) → f(x − p·tau/m, p)`. With a box potential the
/// rows from wall to wall are unfolded into a doubled periodic cell, mirror
/// half reversed in x and p, which realizes specular reflection. The mirror
/// planes sit half a cell outside the wall points, so the restriction to the
/// box conserves mass exactly.
pub(crate) fn shear_x(f: &mut PhaseSpaceField, v: &Potential, params: &ParticleParams, tau: f64) -> Result<()> {
    let grid = *f.grid();
    let (n_x, n_p) = (grid.n_x(), grid.n_p());
    let ps = grid.p_points();
    let m = params.m;
    match v.wall_indices(&grid)? {
        None => {
            let tr = Translator::new(n_x, grid.dx());
            map_columns(f.values_mut(), n_x, n_p, |j, col| {
                let mut buf = Vec::with_capacity(n_x);
                tr.apply(col, ps[j] * tau / m, &mut buf);
            });
        }
        Some((a, b)) => {
            let rows = b - a + 1;
            let period = 2 * rows;
            let values = f.values_mut();
            let mut ext = vec![0.0; period * n_p];
            for r in 0..period {
                let (row, flip) = if r < rows { (a + r, false) } else { (a + period - 1 - r, true) };
                for j in 0..n_p {
                    let src = if flip { grid.mirror_p_index(j) } else { j };
                    ext[r * n_p + j] = values[row * n_p + src];
                }
            }
            let tr = Translator::new(period, grid.dx());
            map_columns(&mut ext, period, n_p, |j, col| {
                let mut buf = Vec::with_capacity(period);
                tr.apply(col, ps[j] * tau / m, &mut buf);
            });
            values.iter_mut().for_each(|x| *x = 0.0);
            for r in 0..rows {
                let row = a + r;
                values[row * n_p..(row + 1) * n_p].copy_from_slice(&ext[r * n_p..(r + 1) * n_p]);
            }
        }
    }
    Ok(())
}

/// Momentum kick `f(x, p) → f(x, p + V′(x)·tau)`.
pub(crate) fn kick_p(f: &mut PhaseSpaceField, v: &Potential, tau: f64) {
    let grid = *f.grid();
    if v.is_box() || matches!(v, Potential::Free) {
        return;
    }
    let force = v.sample_force(&grid);
    let tr = Translator::new(grid.n_p(), grid.dp());
    map_rows(f.values_mut(), grid.n_p(), |i, row| {
        let mut buf = Vec::with_capacity(row.len());
        tr.apply(row, -force[i] * tau, &mut buf);
    });
}

/// One second-order step of `∂ₜf + (p/m)∂ₓf − V′∂ₚf = 0`.
pub fn liouville_step(
    f: &PhaseSpaceField,
    v: &Potential,
    params: &ParticleParams,
    dt: f64,
) -> Result<PhaseSpaceField> {
    liouville_evolve(f, v, params, dt, 1)
}

/// `n_steps` Liouville steps with adjacent half shears merged. Equal to
/// repeated [`liouville_step`] up to rounding and the Nyquist mode, whose
/// real translation multipliers do not compose exactly.
pub fn liouville_evolve(
    f: &PhaseSpaceField,
    v: &Potential,
    params: &ParticleParams,
    dt: f64,
    n_steps: usize,
) -> Result<PhaseSpaceField> {
    check_step(f.grid(), v, params, dt)?;
    let mut g = f.clone();
    if n_steps == 0 {
        return Ok(g);
    }
    shear_x(&mut g, v, params, 0.5 * dt)?;
    for step in 0..n_steps {
        kick_p(&mut g, v, dt);
        let tau = if step + 1 == n_steps { 0.5 * dt } else { dt };
        shear_x(&mut g, v, params, tau)?;
        g.check_aliasing()?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(grid: Grid1D, x0: f64, p0: f64, s: f64) -> PhaseSpaceField {
        PhaseSpaceField::from_fn(grid, |x, p| {
            (-((x - x0).powi(2) + (p - p0).powi(2)) / (2.0 * s * s)).exp()
        })
        .normalized()
        .unwrap()
    }

    #[test]
    fn free_streaming_moves_center_and_keeps_p_marginal() {
        let g = Grid1D::new(-8.0, 8.0, 64, 6.0, 64).unwrap();
        let f = blob(g, -1.0, 1.0, 0.6);
        let params = ParticleParams::default();
        let dt = 0.5 * cfl_limit(&g, &Potential::Free, &params);
        let h = liouville_step(&f, &Potential::Free, &params, dt).unwrap();
        let dx_center = h.expectation(|x, _| x) - f.expectation(|x, _| x);
        assert!((dx_center - f.expectation(|_, p| p) * dt).abs() < 1e-12);
        for (a, b) in f.p_marginal().iter().zip(h.p_marginal()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((h.mass() - f.mass()).abs() < 1e-12);
    }

    #[test]
    fn cfl_violation_is_a_parameter_error() {
        let g = Grid1D::new(-8.0, 8.0, 64, 6.0, 64).unwrap();
        let f = blob(g, 0.0, 0.0, 0.6);
        let params = ParticleParams::default();
        let too_big = 2.0 * cfl_limit(&g, &Potential::Free, &params);
        assert!(matches!(
            liouville_step(&f, &Potential::Free, &params, too_big),
            Err(Error::Parameter(_))
        ));
        assert!(liouville_step(&f, &Potential::Free, &params, -0.01).is_err());
    }

    #[test]
    fn fused_evolution_matches_repeated_steps() {
        let g = Grid1D::new(-8.0, 8.0, 64, 6.0, 64).unwrap();
        let f = blob(g, 1.0, 0.5, 0.8);
        let v = Potential::harmonic(0.7, 1.0).unwrap();
        let params = ParticleParams::default();
        let dt = 0.4 * cfl_limit(&g, &v, &params);
        let mut a = f.clone();
        for _ in 0..7 {
            a = liouville_step(&a, &v, &params, dt).unwrap();
        }
        let b = liouville_evolve(&f, &v, &params, dt, 7).unwrap();
        assert!(a.l2_distance(&b) < 1e-12, "{}", a.l2_distance(&b));
    }

    #[test]
    fn box_reflects_momentum() {
        let g = Grid1D::new(-4.0, 4.0, 64, 8.0, 64).unwrap();
        let v = Potential::boxed(6.0).unwrap();
        let params = ParticleParams::default();
        let f = blob(g, 0.5, 3.0, 0.3);
        let dt = 0.9 * cfl_limit(&g, &v, &params);
        let steps = (1.2 / dt).ceil() as usize;
        let h = liouville_evolve(&f, &v, &params, dt, steps).unwrap();
        assert!(h.expectation(|_, p| p) < -2.0, "momentum should have reversed");
        assert!((h.mass() - 1.0).abs() < 1e-12, "{:e} {:e}", h.mass() - 1.0, f.mass() - 1.0);
    }
}
