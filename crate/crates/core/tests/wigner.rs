use num_complex::Complex64;
use phasewave::liouville::liouville_evolve;
use phasewave::wigner::{
    glauber_center, glauber_state, glauber_wigner, madelung_decompose, quantum_hj_residual, quartic_residual,
    tdse_evolve, tdse_step, wigner_transform, GlauberSpec, WaveFunction,
};
use phasewave::{Grid1D, ParticleParams, PhaseSpaceField, Potential};
use std::f64::consts::PI;

fn grid128() -> Grid1D {
    Grid1D::for_wave_functions(-8.0, 8.0, 128, 128, 1.0, 1).unwrap()
}

fn gaussian(grid: Grid1D, params: ParticleParams, x0: f64, s0: f64, p0: f64) -> WaveFunction {
    WaveFunction::from_fn(grid, params, |x| {
        let a = (-(x - x0).powi(2) / (4.0 * s0 * s0)).exp() / (2.0 * PI * s0 * s0).powf(0.25);
        Complex64::from_polar(a, p0 * x / params.sigma)
    })
    .unwrap()
}

fn check_marginals(psi: &WaveFunction, f: &PhaseSpaceField, tol: f64) {
    let grid = *f.grid();
    for (a, b) in f.x_marginal().iter().zip(psi.density()) {
        assert!((a - b).abs() < tol, "x marginal {a} vs {b}");
    }
    for (j, a) in f.p_marginal().iter().enumerate() {
        let b = psi.momentum_density(grid.p(j));
        assert!((a - b).abs() < tol, "p marginal at {}: {a} vs {b}", grid.p(j));
    }
}

#[test]
fn glauber_wigner_matches_closed_form_at_any_time() {
    let grid = grid128();
    for sigma in [1.0] {
        let params = ParticleParams::new(1.0, sigma).unwrap();
        let spec = GlauberSpec::matched(&params, 1.0, 1.5, -0.7);
        for t in [0.0, 0.4, 1.9, 5.3] {
            let psi = glauber_state(&grid, &spec, &params, t).unwrap();
            assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
            let f = wigner_transform(&psi).unwrap();
            let exact = glauber_wigner(&grid, &spec, &params, t).unwrap();
            let err = f.values().iter().zip(exact.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err < 1e-8, "t = {t}: {err}");
        }
    }
}

#[test]
fn marginals_of_a_chirped_state() {
    let grid = grid128();
    let params = ParticleParams::default();
    let psi = WaveFunction::from_fn(grid, params, |x| {
        let a = (1.0 + 0.3 * x) * (-(x - 0.5).powi(2) / 2.0).exp();
        Complex64::from_polar(a, 0.4 * x + 0.15 * x * x)
    })
    .unwrap()
    .normalized()
    .unwrap();
    let f = wigner_transform(&psi).unwrap();
    assert!((f.mass() - 1.0).abs() < 1e-10);
    check_marginals(&psi, &f, 1e-8);
}

#[test]
fn plane_phase_concentrates_momentum() {
    let grid = grid128();
    let params = ParticleParams::default();
    let p0 = 2.0;
    let psi = gaussian(grid, params, 0.0, 1.5, p0);
    let f = wigner_transform(&psi).unwrap();
    let nu = f.p_marginal();
    let jmax = (0..nu.len()).max_by(|&a, &b| nu[a].total_cmp(&nu[b])).unwrap();
    assert!((grid.p(jmax) - p0).abs() <= grid.dp());
    check_marginals(&psi, &f, 1e-8);
}

#[test]
fn separated_pair_shows_interference_fringes() {
    let grid = grid128();
    let params = ParticleParams::default();
    let a = gaussian(grid, params, -2.5, 0.5, 0.0);
    let b = gaussian(grid, params, 2.5, 0.5, 0.0);
    let psi = WaveFunction::new(
        grid,
        a.values().iter().zip(b.values()).map(|(x, y)| x + y).collect(),
        params,
    )
    .unwrap()
    .normalized()
    .unwrap();
    let f = wigner_transform(&psi).unwrap();
    let min = f.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let max = f.max_abs();
    assert!(min < -0.2 * max, "fringes too weak: {min} vs {max}");
    // fringes sit midway between the packets
    let i0 = grid.index_of(0.0).unwrap();
    assert!(f.row(i0).iter().any(|&v| v < -0.1 * max));
    assert!((f.mass() - 1.0).abs() < 1e-10);
    check_marginals(&psi, &f, 1e-8);
}

#[test]
fn ground_state_only_acquires_its_phase() {
    let grid = grid128();
    let params = ParticleParams::default();
    let v = Potential::harmonic(1.0, 1.0).unwrap();
    let spec = GlauberSpec::matched(&params, 1.0, 0.0, 0.0);
    let psi0 = glauber_state(&grid, &spec, &params, 0.0).unwrap();
    let n = 4000;
    let psi = tdse_evolve(&psi0, &v, 2.0 * PI / n as f64, n).unwrap();
    for (a, b) in psi.density().iter().zip(psi0.density()) {
        assert!((a - b).abs() < 1e-8);
    }
    // e^{−iωT/2} = −1 after one period
    let z = psi0.overlap(&psi);
    assert!((z.norm() - 1.0).abs() < 1e-8);
    let phase_err = (z.arg().abs() - PI).abs();
    assert!(phase_err < 1e-6, "phase error {phase_err}");
}

#[test]
fn coherent_state_center_follows_the_ellipse_with_fixed_width() {
    let grid = grid128();
    let params = ParticleParams::default();
    let v = Potential::harmonic(1.0, 1.0).unwrap();
    let spec = GlauberSpec::matched(&params, 1.0, 2.0, 0.0);
    let mut psi = glauber_state(&grid, &spec, &params, 0.0).unwrap();
    let var0 = psi.variance_x();
    let dt = 1e-3;
    for k in 1..=8 {
        psi = tdse_evolve(&psi, &v, dt, 785).unwrap();
        let t = k as f64 * 785.0 * dt;
        let (u, p) = glauber_center(&spec, &params, t);
        assert!((psi.mean_x() - u).abs() < 1e-6, "t = {t}");
        assert!((psi.mean_p() - p).abs() < 1e-6, "t = {t}");
        assert!((psi.variance_x() - var0).abs() < 1e-6);
    }
}

#[test]
fn quarter_period_moves_displacement_into_momentum() {
    let params = ParticleParams::new(1.7, 1.0).unwrap();
    let (a, w) = (1.3, 2.0);
    let spec = GlauberSpec::matched(&params, w, a, 0.0);
    let (u, v) = glauber_center(&spec, &params, 0.25 * 2.0 * PI / w);
    assert!(u.abs() < 1e-12);
    assert!((v + params.m * w * a).abs() < 1e-12);
}

#[test]
fn free_packet_spreads_by_the_analytic_law() {
    let grid = Grid1D::for_wave_functions(-16.0, 16.0, 256, 128, 1.0, 1).unwrap();
    let params = ParticleParams::new(2.0, 1.0).unwrap();
    let s0 = 0.6;
    let psi0 = gaussian(grid, params, -2.0, s0, 0.5);
    let dt = 0.01;
    let mut psi = psi0.clone();
    for k in 1..=5 {
        psi = tdse_evolve(&psi, &Potential::Free, dt, 100).unwrap();
        let t = k as f64;
        let expect = s0 * s0 + (params.sigma * t / (2.0 * params.m * s0)).powi(2);
        assert!((psi.variance_x() - expect).abs() < 1e-10, "t = {t}");
        assert!((psi.mean_x() - (-2.0 + 0.5 * t / params.m)).abs() < 1e-10);
    }
}

#[test]
fn energy_and_norm_are_conserved() {
    let grid = grid128();
    let params = ParticleParams::default();
    for v in [Potential::harmonic(1.0, 1.0).unwrap(), Potential::Quartic { c2: 0.5, c3: 0.0, c4: 0.1 }] {
        let spec = GlauberSpec::matched(&params, 1.0, 1.0, 0.5);
        let psi0 = glauber_state(&grid, &spec, &params, 0.0).unwrap();
        let e0 = psi0.energy(&v);
        let dt = 1e-4;
        let mut psi = tdse_step(&psi0, &v, dt).unwrap();
        assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        psi = tdse_evolve(&psi, &v, dt, 999).unwrap();
        assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        let e1 = psi.energy(&v);
        assert!((e1 - e0).abs() < 1e-8, "{v:?}: {e0} -> {e1}");
    }
}

#[test]
fn madelung_variables_of_a_coherent_state() {
    let grid = grid128();
    let params = ParticleParams::default();
    let spec = GlauberSpec::matched(&params, 1.0, 0.8, 1.1);
    let psi = glauber_state(&grid, &spec, &params, 0.0).unwrap();
    let state = madelung_decompose(&psi).unwrap();
    let j = state.current(&params);
    for (i, (&n, &j)) in state.n().iter().zip(&j).enumerate() {
        if n > 1e-6 {
            assert!((j - n * 1.1 / params.m).abs() < 1e-8, "at {}", grid.x(i));
        }
    }
    let back = WaveFunction::from_action(&state, grid, params).unwrap();
    let fidelity = psi.overlap(&back).norm_sqr();
    assert!(fidelity > 1.0 - 1e-12, "fidelity {fidelity}");
}

#[test]
fn quantum_hamilton_jacobi_holds_along_the_tdse() {
    let grid = grid128();
    let params = ParticleParams::default();
    let v = Potential::Quartic { c2: 0.5, c3: 0.05, c4: 0.05 };
    let psi0 = gaussian(grid, params, 0.5, 0.8, 0.3);
    let dt = 1e-3;
    let psi1 = tdse_step(&psi0, &v, dt).unwrap();
    let psi2 = tdse_step(&psi1, &v, dt).unwrap();
    let r = quantum_hj_residual(&psi0, &psi1, &psi2, &v, dt).unwrap();
    // the wrong potential leaves an O(1) residual
    let wrong = quantum_hj_residual(&psi0, &psi1, &psi2, &Potential::Free, dt).unwrap();
    assert!(r < 1e-4, "residual {r}");
    assert!(wrong > 1e3 * r);
}

#[test]
fn harmonic_correction_term_vanishes() {
    let grid = grid128();
    let params = ParticleParams::default();
    let v = Potential::harmonic(1.0, 1.0).unwrap();
    let psi = gaussian(grid, params, 1.0, 0.5, 0.0);
    let r = quartic_residual(&psi, &v, 1e-3).unwrap();
    assert_eq!(r.r_plain, r.r_corrected);
    assert!(r.r_plain < 1e-4);
}

/// Relative L2 gap between the two routes after `n` steps of `dt`.
fn correspondence_gap(v: &Potential, psi0: &WaveFunction, dt: f64, n: usize) -> f64 {
    let params = *psi0.params();
    let f0 = wigner_transform(psi0).unwrap();
    let quantum = wigner_transform(&tdse_evolve(psi0, v, dt, n).unwrap()).unwrap();
    let classical = liouville_evolve(&f0, v, &params, dt, n).unwrap();
    quantum.l2_distance(&classical) / quantum.l2_norm()
}

#[test]
fn wigner_evolution_commutes_with_tdse_for_low_degree_potentials() {
    let grid = Grid1D::for_wave_functions(-10.0, 10.0, 256, 256, 1.0, 1).unwrap();
    let params = ParticleParams::new(2.0, 1.0).unwrap();
    let psi0 = gaussian(grid, params, -2.0, 0.7, 2.0);
    let dt = 1e-3;
    for (v, t) in [(Potential::Free, 2.0), (Potential::Uniform { g: 1.0 }, 2.0)] {
        let gap = correspondence_gap(&v, &psi0, dt, (t / dt) as usize);
        assert!(gap < 1e-3, "{v:?}: {gap}");
    }
}

#[test]
fn box_reflection_agrees_between_routes() {
    let grid = Grid1D::for_wave_functions(-10.0, 10.0, 256, 256, 1.0, 1).unwrap();
    let params = ParticleParams::new(4.0, 1.0).unwrap();
    let v = Potential::boxed(12.5).unwrap();
    let psi0 = gaussian(grid, params, 0.0, 0.8, 12.0);
    let dt = 1e-3;
    // Bounce off the right wall and return to the center. Quantum fringes
    // between incident and reflected parts scale with the amplitude at the
    // wall, so both ends of the run keep ψ ~ 1e-4 there.
    let gap = correspondence_gap(&v, &psi0, dt, 4167);
    assert!(gap < 1e-3, "box: {gap}");
}
