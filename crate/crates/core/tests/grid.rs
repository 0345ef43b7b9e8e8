use num_complex::Complex64;
use phasewave::grid::{fourier_k_to_p, fourier_p_to_k, moments};
use phasewave::wigner::{glauber_wigner, GlauberSpec};
use phasewave::{Grid1D, KSpaceField, ParticleParams, PhaseSpaceField};
use proptest::prelude::*;
use std::f64::consts::PI;

fn random_field(grid: Grid1D) -> impl Strategy<Value = PhaseSpaceField> {
    prop::collection::vec(-1.0f64..1.0, grid.n_x() * grid.n_p())
        .prop_map(move |v| PhaseSpaceField::new(grid, v).unwrap())
}

fn g16() -> Grid1D {
    Grid1D::new(-3.0, 5.0, 16, 4.0, 16).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval_holds(f in random_field(g16())) {
        let lhs = f.l2_norm().powi(2);
        let rhs = fourier_p_to_k(&f).parseval_norm_sq();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.max(1.0));
    }

    #[test]
    fn transform_is_linear(
        f in random_field(g16()),
        g in random_field(g16()),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let lhs = fourier_p_to_k(&f.combine(a, &g, b));
        let tf = fourier_p_to_k(&f);
        let tg = fourier_p_to_k(&g);
        for ((z, x), y) in lhs.values().iter().zip(tf.values()).zip(tg.values()) {
            prop_assert!((z - (x * a + y * b)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_wavenumber_row_is_the_density(f in random_field(g16())) {
        let params = ParticleParams::default();
        let ft = fourier_p_to_k(&f);
        let mf = moments(&f, &params);
        let l0 = f.grid().n_p() / 2;
        for i in 0..f.grid().n_x() {
            let z = ft.get(i, l0);
            prop_assert!((z.re - mf.n[i]).abs() < 1e-12);
            prop_assert!(z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn real_fields_have_hermitian_transforms_and_round_trip(f in random_field(g16())) {
        let ft = fourier_p_to_k(&f);
        prop_assert!(ft.hermitian_defect() < 1e-12);
        let back = fourier_k_to_p(&ft).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hermitian_amplitudes_round_trip(raw in prop::collection::vec(-1.0f64..1.0, 2 * 16 * 16)) {
        // symmetrize a random complex array into a Hermitian one
        let grid = g16();
        let n_p = grid.n_p();
        let z: Vec<Complex64> = raw.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let mut h = vec![Complex64::new(0.0, 0.0); z.len()];
        for i in 0..grid.n_x() {
            for l in 0..n_p {
                let c = grid.conjugate_k_index(l);
                h[i * n_p + l] = (z[i * n_p + l] + z[i * n_p + c].conj()) * 0.5;
            }
        }
        let ft = KSpaceField::new(grid, h).unwrap();
        let f = fourier_k_to_p(&ft).unwrap();
        let again = fourier_p_to_k(&f);
        for (a, b) in again.values().iter().zip(ft.values()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }
}

#[test]
fn matches_brute_force_quadrature_on_8x8() {
    let grid = Grid1D::new(-1.0, 1.0, 8, 2.5, 8).unwrap();
    let mut seed = 12345u64;
    let vals: Vec<f64> = (0..64)
        .map(|_| {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect();
    let f = PhaseSpaceField::new(grid, vals).unwrap();
    let ft = fourier_p_to_k(&f);
    for i in 0..8 {
        for l in 0..8 {
            let k = grid.k(l);
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..8 {
                s += Complex64::from_polar(1.0, k * grid.p(j)) * f.get(i, j) * grid.dp();
            }
            assert!((ft.get(i, l) - s).norm() < 1e-12, "({i},{l})");
        }
    }
}

#[test]
fn zero_field_is_fixed_both_ways() {
    let grid = g16();
    let ft = fourier_p_to_k(&PhaseSpaceField::zeros(grid));
    assert!(ft.values().iter().all(|z| z.norm() == 0.0));
    let f = fourier_k_to_p(&ft).unwrap();
    assert!(f.values().iter().all(|&v| v == 0.0));
}

#[test]
fn narrow_momentum_gaussian_carries_the_slope_as_phase() {
    let grid = Grid1D::new(-4.0, 4.0, 32, 8.0, 128).unwrap();
    let dp = grid.dp();
    let p0 = 1.234;
    let n = |x: f64| (-(x * x) / 2.0).exp() / (2.0 * PI).sqrt();
    let f = PhaseSpaceField::from_fn(grid, |x, p| {
        n(x) * (-(p - p0).powi(2) / (2.0 * dp * dp)).exp() / ((2.0 * PI).sqrt() * dp)
    });
    let ft = fourier_p_to_k(&f);
    let l = grid.n_p() / 2 + 1;
    let k = grid.k(l);
    for i in 0..grid.n_x() {
        let z = ft.get(i, l);
        let slope = z.arg() / k;
        assert!(((slope - p0) / p0).abs() < 1e-6, "slope {slope}");
        let amp = n(grid.x(i)) * (-(k * k * dp * dp) / 2.0).exp();
        assert!((z.norm() - amp).abs() < 1e-6 * amp.max(1e-3));
    }
}

#[test]
fn pure_phase_amplitude_is_the_narrowest_peak() {
    let grid = Grid1D::new(-2.0, 2.0, 16, 4.0, 32).unwrap();
    let j0 = 21;
    let p0 = grid.p(j0);
    let n = |x: f64| 1.0 + 0.5 * (x * PI / 2.0).cos();
    let mut vals = Vec::new();
    for i in 0..grid.n_x() {
        for l in 0..grid.n_p() {
            vals.push(Complex64::from_polar(n(grid.x(i)), grid.k(l) * p0));
        }
    }
    let f = fourier_k_to_p(&KSpaceField::new(grid, vals).unwrap()).unwrap();
    for i in 0..grid.n_x() {
        for j in 0..grid.n_p() {
            let expect = if j == j0 { n(grid.x(i)) / grid.dp() } else { 0.0 };
            assert!((f.get(i, j) - expect).abs() < 1e-12);
        }
        let column: f64 = f.row(i).iter().sum::<f64>() * grid.dp() * grid.dx();
        assert!((column - n(grid.x(i)) * grid.dx()).abs() < 1e-12);
    }
}

#[test]
fn ground_state_density_and_current() {
    let params = ParticleParams::new(1.0, 1.0).unwrap();
    let grid = Grid1D::new(-8.0, 8.0, 128, 8.0, 128).unwrap();
    let spec = GlauberSpec::matched(&params, 1.0, 0.0, 0.0);
    let f = glauber_wigner(&grid, &spec, &params, 0.0).unwrap();
    let mf = moments(&f, &params);
    for i in 0..grid.n_x() {
        let x = grid.x(i);
        assert!((mf.n[i] - (-(x * x)).exp() / PI.sqrt()).abs() < 1e-10);
        assert!(mf.j[i].abs() < 1e-12);
    }
}

#[test]
fn moving_gaussian_moments_match_quadrature() {
    let params = ParticleParams::new(1.0, 1.0).unwrap();
    let grid = Grid1D::new(-8.0, 8.0, 128, 12.0, 128).unwrap();
    let v = 2.0;
    let spec = GlauberSpec::matched(&params, 1.0, 0.5, v);
    let f = glauber_wigner(&grid, &spec, &params, 0.0).unwrap();
    let mf = moments(&f, &params);
    for i in 0..grid.n_x() {
        let (mut j, mut e) = (0.0, 0.0);
        for jp in 0..grid.n_p() {
            let p = grid.p(jp);
            j += p / params.m * f.get(i, jp) * grid.dp();
            e += p * p / (2.0 * params.m) * f.get(i, jp) * grid.dp();
        }
        assert!((mf.j[i] - j).abs() < 1e-10);
        assert!((mf.eps[i] - e).abs() < 1e-10);
        // closed form of the p-Gaussian at fixed x: variance ασ²/2
        let n = mf.n[i];
        assert!((mf.j[i] - n * v).abs() < 1e-10);
        assert!((mf.eps[i] - n * (v * v + 0.5) / 2.0).abs() < 1e-10);
    }
}

/// Max error of the finite-difference `j` and `ε` read off `f̃` around `k = 0`.
fn k_derivative_errors(p_max: f64, n_p: usize) -> (f64, f64) {
    let params = ParticleParams::new(1.3, 1.0).unwrap();
    let grid = Grid1D::new(-4.0, 4.0, 16, p_max, n_p).unwrap();
    let f = PhaseSpaceField::from_fn(grid, |x, p| {
        let x0 = 0.3 * x.sin();
        (-(x * x) / 4.0).exp() * (-(p - 0.7 - x0).powi(2) / 2.0).exp()
    });
    let ft = fourier_p_to_k(&f);
    let mf = moments(&f, &params);
    let l0 = n_p / 2;
    let dk = grid.dk();
    let (mut ej, mut ee): (f64, f64) = (0.0, 0.0);
    for i in 0..grid.n_x() {
        let (a, b, c) = (ft.get(i, l0 - 1), ft.get(i, l0), ft.get(i, l0 + 1));
        let d1 = (c - a) / (2.0 * dk);
        let d2 = (c - b * 2.0 + a) / (dk * dk);
        ej = ej.max((d1.im / params.m - mf.j[i]).abs());
        ee = ee.max((-d2.re / (2.0 * params.m) - mf.eps[i]).abs());
    }
    (ej, ee)
}

#[test]
fn wavenumber_derivatives_converge_at_second_order() {
    let (j1, e1) = k_derivative_errors(16.0, 64);
    let (j2, e2) = k_derivative_errors(32.0, 128);
    let (j3, e3) = k_derivative_errors(64.0, 256);
    for (a, b) in [(j1, j2), (j2, j3), (e1, e2), (e2, e3)] {
        let r = a / b;
        assert!((3.6..4.4).contains(&r), "ratio {r} ({a:e} -> {b:e})");
    }
}
