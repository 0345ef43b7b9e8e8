//! The named experiments. Each pipeline runs the solvers, cross-checks them
//! against an independent route, and returns its artifacts.

use crate::config::{ScenarioConfig, ScenarioKind};
use crate::output::{Artifacts, Check};
use crate::plot::{line_chart, Series};
use num_complex::Complex64;
use phasewave::fokkerplanck::{
    langevin_ensemble, measure_wave_speed, modified_hj_step, moment_step, smoluchowski_evolve, smoluchowski_step,
    thermal_sound_evolve, Closure, DensityHistory, EnsembleSpec, FpPropagator, InitialSampler, SoundPerturbation,
    ThermalParams,
};
use phasewave::liouville::{
    action_to_phase_space, coherence_defect, evolve_action_wave, liouville_evolve, ActionState, Snapshot, Template,
};
use phasewave::variational::{
    action_functional, functional_gradient_check, gauge_invariance_check, symplectic_identity_check,
    write_checks_csv, CheckRow, Tangent,
};
use phasewave::wigner::{
    glauber_state, glauber_wigner, quartic_residual, tdse_evolve, wigner_transform, GlauberSpec, WaveFunction,
};
use phasewave::{Error, Grid1D, MomentFields, ParticleParams, PhaseSpaceField, Potential, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::io::Write;

/// Runs the pipeline named by `cfg.scenario`.
pub fn run_scenario(cfg: &ScenarioConfig, plot: bool) -> Result<Artifacts> {
    let mut a = Artifacts::new();
    a.label("scenario", cfg.scenario.name());
    a.label("seed", &cfg.run.seed.to_string());
    match cfg.scenario {
        ScenarioKind::ActionWave => action_wave(cfg, plot, &mut a)?,
        ScenarioKind::GlauberLiouville => glauber_liouville(cfg, plot, &mut a)?,
        ScenarioKind::TdseVsLiouville => tdse_vs_liouville(cfg, plot, &mut a)?,
        ScenarioKind::QuarticCorrection => quartic_correction(cfg, plot, &mut a)?,
        ScenarioKind::FokkerPlanckVsLangevin => fokker_planck_vs_langevin(cfg, plot, &mut a)?,
        ScenarioKind::ThermalSound => thermal_sound(cfg, plot, &mut a)?,
        ScenarioKind::Smoluchowski => smoluchowski(cfg, plot, &mut a)?,
        ScenarioKind::ModifiedHj => modified_hj(cfg, plot, &mut a)?,
        ScenarioKind::VariationalChecks => variational_checks(cfg, &mut a)?,
    }
    Ok(a)
}

fn gauss(x: f64, c: f64, w: f64) -> f64 {
    (-(x - c).powi(2) / (2.0 * w * w)).exp() / ((2.0 * PI).sqrt() * w)
}

fn normalize(v: &mut [f64], h: f64) {
    let z: f64 = v.iter().sum::<f64>() * h;
    v.iter_mut().for_each(|x| *x /= z);
}

/// Snapshot interval in steps, at least one and at most `steps`.
fn chunk(cfg: &ScenarioConfig, steps: usize, default_frames: usize) -> usize {
    let every = if cfg.run.output_every == 0 { steps.div_ceil(default_frames) } else { cfg.run.output_every };
    every.clamp(1, steps.max(1))
}

fn field_file(a: &mut Artifacts, name: &str, f: &PhaseSpaceField) {
    a.file(name, "phase_space", |w| f.write_csv(w));
}

fn columns(a: &mut Artifacts, name: &str, kind: &str, header: &str, rows: &[Vec<f64>]) {
    a.file(name, kind, |w| {
        writeln!(w, "{header}")?;
        for r in rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    });
}

/// Density-weighted mean and spread of `p` in every `x` column.
fn conditional_p(f: &PhaseSpaceField) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = *f.grid();
    let ps = g.p_points();
    let mut n = Vec::with_capacity(g.n_x());
    let mut mean = Vec::with_capacity(g.n_x());
    let mut spread = Vec::with_capacity(g.n_x());
    for i in 0..g.n_x() {
        let row = f.row(i);
        let m0: f64 = row.iter().sum();
        let m1: f64 = row.iter().zip(&ps).map(|(f, p)| f * p).sum();
        let mu = if m0 > 0.0 { m1 / m0 } else { 0.0 };
        let m2: f64 = row.iter().zip(&ps).map(|(f, p)| f * (p - mu).powi(2)).sum();
        n.push(m0 * g.dp());
        mean.push(mu);
        spread.push(if m0 > 0.0 { (m2 / m0).max(0.0).sqrt() } else { 0.0 });
    }
    (n, mean, spread)
}

/// `n(x)·g(p − ∂ₓS)` with a Gaussian `g` of `bins` momentum cells; wide
/// enough that p-kicks do not spread its Nyquist content into the alias band.
fn smooth_image(s: &ActionState, bins: f64) -> Result<PhaseSpaceField> {
    let grid = *s.grid();
    let w = bins * grid.dp();
    let u = s.momentum();
    let ps = grid.p_points();
    let mut vals = Vec::with_capacity(grid.n_x() * grid.n_p());
    for i in 0..grid.n_x() {
        let row: Vec<f64> = ps.iter().map(|&p| (-(p - u[i]).powi(2) / (2.0 * w * w)).exp()).collect();
        let z: f64 = row.iter().sum::<f64>() * grid.dp();
        vals.extend(row.iter().map(|g| s.n()[i] * g / z));
    }
    PhaseSpaceField::new(grid, vals)
}

fn action_wave(cfg: &ScenarioConfig, plot: bool, a: &mut Artifacts) -> Result<()> {
    let grid = cfg.grid()?;
    let params = cfg.particle()?;
    let v = cfg.potential()?;
    let init = &cfg.initial;
    let (x0, w, p0) = (init.x0.unwrap_or(1.5), init.width.unwrap_or(0.5), init.p0.unwrap_or(0.0));
    let dt = cfg.run.dt;
    let steps = cfg.steps();
    let s0 = ActionState::from_fn(grid, |x| gauss(x, x0, w), |x| p0 * x)?;
    let f0 = smooth_image(&s0, 2.0)?;
    let mut s = s0.clone();
    let mut mass_err: f64 = 0.0;
    let mut history = vec![vec![0.0, s0.mass()]];
    for k in 1..=steps {
        s = evolve_action_wave(&s, &v, &params, dt)?;
        mass_err = mass_err.max((s.mass() - s0.mass()).abs() / s0.mass());
        if k % chunk(cfg, steps, 20) == 0 || k == steps {
            history.push(vec![k as f64 * dt, s.mass()]);
        }
    }
    let fl = liouville_evolve(&f0, &v, &params, dt, steps)?;
    mass_err = mass_err.max((fl.mass() - f0.mass()).abs() / f0.mass());
    let fa = action_to_phase_space(&s, &grid)?;
    let (na, ma, sa) = conditional_p(&fa);
    let (nl, ml, sl) = conditional_p(&fl);
    let peak = na.iter().cloned().fold(0.0, f64::max);
    let dp = grid.dp();
    let (mut offset, mut broadening): (f64, f64) = (0.0, 0.0);
    for i in 0..grid.n_x() {
        if na[i] >= 1e-2 * peak {
            offset = offset.max((ma[i] - ml[i]).abs() / dp);
            broadening = broadening.max((sl[i] - sa[i]).abs() / dp);
        }
    }
    let dens_gap = na.iter().zip(&nl).map(|(x, y)| (x - y).abs()).sum::<f64>() * grid.dx();
    a.value("mass_error", mass_err);
    a.value("momentum_offset_bins", offset);
    a.value("broadening_bins", broadening);
    a.value("density_l1_gap", dens_gap);
    a.check(Check::at_most("mass_error", mass_err, 1e-10));
    a.check(Check::at_most("momentum_offset_bins", offset, 2.0));
    a.check(Check::at_most("broadening_bins", broadening, 2.0));
    let u = s.momentum();
    let sv = s.s();
    let rows: Vec<Vec<f64>> = (0..grid.n_x()).map(|i| vec![grid.x(i), s.n()[i], sv[i], u[i]]).collect();
    columns(a, "action_final.csv", "action", "x,n,S,dSdx", &rows);
    let rows: Vec<Vec<f64>> = (0..grid.n_x()).map(|i| vec![grid.x(i), na[i], nl[i], ma[i], ml[i], sa[i], sl[i]]).collect();
    columns(a, "moments.csv", "moments", "x,n_action,n_liouville,p_action,p_liouville,dp_action,dp_liouville", &rows);
    columns(a, "mass.csv", "series", "t,mass", &history);
    field_file(a, "liouville_final.csv", &fl);
    if plot {
        let xs = grid.x_points();
        let svg = line_chart(
            "density after evolution",
            "x",
            "n",
            &[
                Series::new("action wave", xs.iter().cloned().zip(na.iter().cloned()).collect()),
                Series::new("liouville", xs.iter().cloned().zip(nl.iter().cloned()).collect()),
            ],
        );
        a.text("density.svg", "plot", svg);
    }
    Ok(())
}

fn harmonic_omega(v: &Potential) -> Option<f64> {
    match v {
        Potential::Harmonic { omega, .. } => Some(*omega),
        _ => None,
    }
}

fn glauber_liouville(cfg: &ScenarioConfig, plot: bool, a: &mut Artifacts) -> Result<()> {
    let grid = cfg.grid()?;
    let params = cfg.particle()?;
    let v = cfg.potential()?;
    let omega = harmonic_omega(&v).ok_or_else(|| Error::Parameter("glauber_liouville needs a harmonic potential".into()))?;
    let spec = GlauberSpec::matched(&params, omega, cfg.initial.x0.unwrap_or(2.0), cfg.initial.p0.unwrap_or(0.5));
    let dt = cfg.run.dt;
    let steps = cfg.steps();
    let every = chunk(cfg, steps, 8);
    let f0 = glauber_wigner(&grid, &spec, &params, 0.0)?;
    let peak0 = f0.max_abs();
    let mut f = f0.clone();
    let mut history = vec![Snapshot { t: 0.0, field: f0.clone() }];
    let mut rows = vec![vec![0.0, 0.0, 0.0]];
    let (mut l2, mut drift): (f64, f64) = (0.0, 0.0);
    let mut done = 0;
    while done < steps {
        let n = every.min(steps - done);
        f = liouville_evolve(&f, &v, &params, dt, n)?;
        done += n;
        let t = done as f64 * dt;
        let exact = glauber_wigner(&grid, &spec, &params, t)?;
        let e = f.l2_distance(&exact) / exact.l2_norm();
        let d = (f.max_abs() - peak0).abs() / peak0;
        l2 = l2.max(e);
        drift = drift.max(d);
        rows.push(vec![t, e, d]);
        history.push(Snapshot { t, field: f.clone() });
    }
    let report = coherence_defect(&history, Template::Gaussian)?;
    let mass_err = (f.mass() - f0.mass()).abs();
    a.value("coherence_defect", report.max);
    a.value("l2_vs_closed_form", l2);
    a.value("peak_drift", drift);
    a.value("mass_error", mass_err);
    a.check(Check::at_most("coherence_defect", report.max, 1e-2));
    a.check(Check::at_most("l2_vs_closed_form", l2, 1e-3));
    a.check(Check::at_most("mass_error", mass_err, 1e-10));
    a.file("coherence.csv", "series", |w| report.write_csv(w));
    columns(a, "errors.csv", "series", "t,l2_vs_closed_form,peak_drift", &rows);
    field_file(a, "wigner_final.csv", &f);
    if plot {
        let svg = line_chart("coherence defect", "t", "defect", &[Series::new("gaussian family", report.series.clone())]);
        a.text("coherence.svg", "plot", svg);
    }
    Ok(())
}

/// Normalized Gaussian packet with position spread `s0` and mean momentum `p0`.
fn packet(grid: Grid1D, params: ParticleParams, x0: f64, s0: f64, p0: f64) -> Result<WaveFunction> {
    let amp = (2.0 * PI * s0 * s0).powf(-0.25);
    WaveFunction::from_fn(grid, params, |x| {
        Complex64::from_polar(amp * (-(x - x0).powi(2) / (4.0 * s0 * s0)).exp(), p0 * x / params.sigma)
    })
}

fn tdse_vs_liouville(cfg: &ScenarioConfig, plot: bool, a: &mut Artifacts) -> Result<()> {
    let grid = cfg.grid()?;
    let params = cfg.particle()?;
    let v = cfg.potential()?;
    let (x0, p0) = (cfg.initial.x0.unwrap_or(2.0), cfg.initial.p0.unwrap_or(0.5));
    let omega = harmonic_omega(&v);
    let psi0 = match omega {
        Some(w) => glauber_state(&grid, &GlauberSpec::matched(&params, w, x0, p0), &params, 0.0)?,
        None => packet(grid, params, x0, cfg.initial.width.unwrap_or(0.7), p0)?,
    };
    let dt = cfg.run.dt;
    let steps = cfg.steps();
    let every = chunk(cfg, steps, 8);
    let f0 = wigner_transform(&psi0)?;
    let (mut psi, mut f) = (psi0.clone(), f0.clone());
    let mut history = vec![Snapshot { t: 0.0, field: f0.clone() }];
    let mut rows = vec![vec![0.0, 0.0]];
    let mut gap: f64 = 0.0;
    let mut quantum = f0;
    let mut done = 0;
    while done < steps {
        let n = every.min(steps - done);
        psi = tdse_evolve(&psi, &v, dt, n)?;
        f = liouville_evolve(&f, &v, &params, dt, n)?;
        done += n;
        let t = done as f64 * dt;
        quantum = wigner_transform(&psi)?;
        let g = quantum.l2_distance(&f) / quantum.l2_norm();
        gap = gap.max(g);
        rows.push(vec![t, g]);
        history.push(Snapshot { t, field: f.clone() });
    }
    a.value("wigner_gap", gap);
    a.check(Check::at_most("wigner_gap", gap, 1e-3));
    let report = coherence_defect(&history, Template::Gaussian)?;
    a.value("coherence_defect", report.max);
    if omega.is_some() {
        a.check(Check::at_most("coherence_defect", report.max, 1e-2));
    }
    columns(a, "gap.csv", "series", "t,wigner_gap", &rows);
    a.file("coherence.csv", "series", |w| report.write_csv(w));
    a.file("psi_final.csv", "wave_function", |w| psi.write_csv(w));
    field_file(a, "wigner_tdse_final.csv", &quantum);
    field_file(a, "wigner_liouville_final.csv", &f);
    if plot {
        let pts = rows.iter().map(|r| (r[0], r[1])).collect();
        a.text("gap.svg", "plot", line_chart("TDSE vs Liouville", "t", "relative L2 gap", &[Series::new("gap", pts)]));
    }
    Ok(())
}

fn quartic_correction(cfg: &ScenarioConfig, plot: bool, a: &mut Artifacts) -> Result<()> {
    let v = cfg.potential()?;
    let g = &cfg.grid;
    let sigma = cfg.physics.sigma;
    let init = &cfg.initial;
    let (x0, p0, p_width) = (init.x0.unwrap_or(1.0), init.p0.unwrap_or(0.0), init.p_width.unwrap_or(1.0));
    let mut rows = Vec::new();
    for s in [sigma, 0.5 * sigma] {
        let grid = Grid1D::for_wave_functions(g.x_min, g.x_max, g.n_x, g.n_p, s, 1)?;
        let params = ParticleParams::new(cfg.physics.m, s)?;
        // the momentum spread is held fixed, so the packet narrows with σ
        let psi = packet(grid, params, x0, s / (2.0 * p_width), p0)?;
        let r = quartic_residual(&psi, &v, cfg.run.dt)?;
        if let Some(w) = &r.warning {
            a.label(&format!("warning_sigma_{s}"), w);
        }
        rows.push(vec![s, r.r_plain, r.r_corrected]);
    }
    let (plain, corr) = (rows[0][1], rows[0][2]);
    let ratio = corr / plain;
    let law = (rows[0][1] - rows[0][2]) / (rows[1][1] - rows[1][2]);
    let law_err = (law / 4.0 - 1.0).abs();
    a.value("r_plain", plain);
    a.value("r_corrected", corr);
    a.value("corrected_over_plain", ratio);
    a.value("sigma_halving_ratio", law);
    a.check(Check::at_most("corrected_over_plain", ratio, 0.1));
    a.check(Check::at_most("sigma_squared_law_error", law_err, 0.2));
    columns(a, "residuals.csv", "residuals", "sigma,r_plain,r_corrected", &rows);
    if plot {
        let svg = line_chart(
            "Liouville residual",
            "sigma",
            "residual",
            &[
                Series::new("plain", rows.iter().map(|r| (r[0], r[1])).collect()),
                Series::new("corrected", rows.iter().map(|r| (r[0], r[2])).collect()),
            ],
        );
        a.text("residuals.svg", "plot", svg);
    }
    Ok(())
}

/// Largest per-step L2 change of the normalized Maxwell–Boltzmann field over
/// `steps` Fokker–Planck steps.
pub fn gibbs_step_change(
    grid: &Grid1D,
    v: &Potential,
    params: &ParticleParams,
    th: &ThermalParams,
    dt: f64,
    steps: usize,
) -> Result<f64> {
    let mut f = PhaseSpaceField::from_fn(*grid, |x, p| (-(p * p / (2.0 * params.m) + v.v(x)) / th.kt).exp()).normalized()?;
    let prop = FpPropagator::new(grid, v, params, th, dt)?;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let next = prop.step(&f)?;
        worst = worst.max(next.l2_distance(&f));
        f = next;
    }
    Ok(worst)
}

fn l1(a: &[f64], b: &[f64], h: f64) -> f64 {
    a.iter().zip(b).map(|(a, b)| (a - b).abs()).sum::<f64>() * h
}

fn fokker_planck_vs_langevin(cfg: &ScenarioConfig, plot: bool, a: &mut Artifacts) -> Result<()> {
    let grid = cfg.grid()?;
    let params = cfg.particle()?;
    let th = cfg.thermal()?;
    let v = cfg.potential()?;
    let init = &cfg.initial;
    let (x0, p0) = (init.x0.unwrap_or(1.0), init.p0.unwrap_or(0.0));
    let (sx, sp) = (init.width.unwrap_or(0.3), init.p_width.unwrap_or(0.3));
    let dt = cfg.run.dt;
    let steps = cfg.steps();
    let t_end = steps as f64 * dt;
    let f0 = PhaseSpaceField::from_fn(grid, |x, p| {
        (-(x - x0).powi(2) / (2.0 * sx * sx) - (p - p0).powi(2) / (2.0 * sp * sp)).exp()
    })
    .normalized()?;
    let prop = FpPropagator::new(&grid, &v, &params, &th, dt)?;
    let f = prop.evolve(&f0, steps)?;
    let spec = EnsembleSpec {
        n_traj: cfg.run.n_traj,
        dt,
        seed: cfg.run.seed,
        init: InitialSampler::Gaussian { x0, p0, sx, sp },
        record_every: chunk(cfg, steps, 20),
    };
    let ens = langevin_ensemble(&grid, &v, &params, &th, &spec, t_end)?;
    let (fx, lx) = (f.x_marginal(), ens.field.x_marginal());
    let (fp, lp) = (f.p_marginal(), ens.field.p_marginal());
    let dx = l1(&fx, &lx, grid.dx());
    let dp = l1(&fp, &lp, grid.dp());
    a.value("x_marginal_l1", dx);
    a.value("p_marginal_l1", dp);
    a.value("escapes", ens.escapes as f64);
    a.check(Check::at_most("x_marginal_l1", dx, 0.05));
    a.check(Check::at_most("p_marginal_l1", dp, 0.05));
    let gibbs = gibbs_step_change(&grid, &v, &params, &th, dt, 1000)?;
    a.value("gibbs_step_change", gibbs);
    a.check(Check::at_most("gibbs_step_change", gibbs, 1e-10));
    let xs = grid.x_points();
    let ps = grid.p_points();
    let rows: Vec<Vec<f64>> = (0..grid.n_x()).map(|i| vec![xs[i], fx[i], lx[i]]).collect();
    columns(a, "x_marginals.csv", "marginal", "x,fokker_planck,langevin", &rows);
    let rows: Vec<Vec<f64>> = (0..grid.n_p()).map(|j| vec![ps[j], fp[j], lp[j]]).collect();
    columns(a, "p_marginals.csv", "marginal", "p,fokker_planck,langevin", &rows);
    a.file("langevin_stats.csv", "series", |w| ens.write_stats_csv(w));
    field_file(a, "fokker_planck_final.csv", &f);
    field_file(a, "langevin_final.csv", &ens.field);
    if plot {
        let svg = line_chart(
            "x marginal",
            "x",
            "density",
            &[
                Series::new("fokker-planck", xs.iter().cloned().zip(fx.iter().cloned()).collect()),
                Series::new("langevin", xs.iter().cloned().zip(lx.iter().cloned()).collect()),
            ],
        );
        a.text("x_marginal.svg", "plot", svg);
    }
    Ok(())
}

/// Integrates the moment hierarchy with the equilibrium closure and samples
/// `n` at the given spacing.
fn hierarchy_sound(
    grid: &Grid1D,
    n: Vec<f64>,
    params: &ParticleParams,
    th: &ThermalParams,
    t_end: f64,
    dt_out: f64,
) -> Result<DensityHistory> {
    let eps = n.iter().map(|n| 0.5 * th.kt * n).collect();
    let z = vec![0.0; grid.n_x()];
    let mut mf = MomentFields::new(*grid, n, z.clone(), eps, z)?;
    let bound = 0.2 * grid.dx() / th.sound_speed(params);
    let sub = (dt_out / bound).ceil().max(1.0) as usize;
    let h = dt_out / sub as f64;
    let frames_n = (t_end / dt_out).round() as usize;
    let mut times = vec![0.0];
    let mut frames = vec![mf.n.clone()];
    for k in 1..=frames_n {
        for _ in 0..sub {
            mf = moment_step(&mf, &Potential::Free, params, th, Closure::EquilibriumEps, h)?;
        }
        times.push(k as f64 * dt_out);
        frames.push(mf.n.clone());
    }
    DensityHistory::new(*grid, times, frames)
}

fn thermal_sound(cfg: &ScenarioConfig, plot: bool, a: &mut Artifacts) -> Result<()> {
    let grid = cfg.grid()?;
    let params = cfg.particle()?;
    let th = cfg.thermal()?;
    let init = &cfg.initial;
    let (x0, w, amp) = (init.x0.unwrap_or(0.0), init.width.unwrap_or(0.5), init.amplitude.unwrap_or(0.01));
    let xs = grid.x_points();
    let n0 = vec![1.0 / grid.length(); grid.n_x()];
    let pert = SoundPerturbation {
        density: xs.iter().map(|x| amp * (-(x - x0).powi(2) / (2.0 * w * w)).exp()).collect(),
        current: vec![0.0; grid.n_x()],
    };
    let hist = thermal_sound_evolve(&grid, &n0, &pert, &params, &th, cfg.run.t_end, cfg.run.dt)?;
    let fit = measure_wave_speed(&hist)?;
    let vs = th.sound_speed(&params);
    let err = ((fit.speed - vs) / vs).abs();
    a.value("expected_speed", vs);
    a.value("measured_speed", fit.speed);
    a.value("track_residual", fit.residual);
    a.check(Check::at_most("speed_error", err, 0.02));
    let start: Vec<f64> = n0.iter().zip(&pert.density).map(|(a, b)| a + b).collect();
    let moments_hist = hierarchy_sound(&grid, start, &params, &th, cfg.run.t_end, cfg.run.dt)?;
    let hfit = measure_wave_speed(&moments_hist)?;
    let herr = ((hfit.speed - vs) / vs).abs();
    a.value("hierarchy_speed", hfit.speed);
    a.check(Check::at_most("hierarchy_speed_error", herr, 0.03));
    let every = if cfg.run.output_every == 0 { hist.times.len().div_ceil(6) } else { cfg.run.output_every };
    let mut index = String::from("t,filename\n");
    for k in (0..hist.times.len()).step_by(every.max(1)) {
        let name = format!("density_{k:05}.csv");
        a.file(&name, "density", |w| hist.write_frame_csv(k, w));
        index.push_str(&format!("{:e},{name}\n", hist.times[k]));
    }
    a.text("density_index.csv", "index", index);
    let rows: Vec<Vec<f64>> = fit.track.iter().map(|(t, x)| vec![*t, *x]).collect();
    columns(a, "track.csv", "series", "t,x_peak", &rows);
    if plot {
        let picks = [0, hist.times.len() / 2, hist.times.len() - 1];
        let series: Vec<Series> = picks
            .iter()
            .map(|&k| Series::new(format!("t = {:.2}", hist.times[k]), xs.iter().cloned().zip(hist.frames[k].iter().cloned()).collect()))
            .collect();
        a.text("density.svg", "plot", line_chart("thermal sound", "x", "n", &series));
    }
    Ok(())
}

fn variance(grid: &Grid1D, n: &[f64]) -> f64 {
    let dx = grid.dx();
    let xs = grid.x_points();
    let mass: f64 = n.iter().sum::<f64>() * dx;
    let mean = xs.iter().zip(n).map(|(x, n)| x * n).sum::<f64>() * dx / mass;
    xs.iter().zip(n).map(|(x, n)| (x - mean).powi(2) * n).sum::<f64>() * dx / mass
}

/// Largest per-step change of `e^{−V/kT}`, relative to its peak.
pub fn smoluchowski_gibbs_change(grid: &Grid1D, v: &Potential, th: &ThermalParams, dt: f64, steps: usize) -> Result<f64> {
    let mut n: Vec<f64> = grid.x_points().iter().map(|&x| (-v.v(x) / th.kt).exp()).collect();
    normalize(&mut n, grid.dx());
    let peak = n.iter().cloned().fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let next = smoluchowski_step(grid, &n, v, th, dt)?;
        worst = worst.max(n.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / peak);
        n = next;
    }
    Ok(worst)
}

fn smoluchowski(cfg: &ScenarioConfig, plot: bool, a: &mut Artifacts) -> Result<()> {
    let grid = cfg.grid()?;
    let params = cfg.particle()?;
    let th = cfg.thermal()?;
    let v = cfg.potential()?;
    let (x0, s0) = (cfg.initial.x0.unwrap_or(0.0), cfg.initial.width.unwrap_or(0.3));
    let mut n: Vec<f64> = grid.x_points().iter().map(|&x| gauss(x, x0, s0)).collect();
    normalize(&mut n, grid.dx());
    let dt = cfg.run.dt;
    let steps = cfg.steps();
    let every = chunk(cfg, steps, 20);
    let var0 = variance(&grid, &n);
    // overdamped relaxation of a harmonic well: d var/dt = 2D − 2(mω²/γ)var
    let analytic = harmonic_omega(&v).map(|w| {
        let rate = params.m * w * w / th.gamma;
        let var_inf = th.kt / (params.m * w * w);
        move |t: f64| var_inf + (var0 - var_inf) * (-2.0 * rate * t).exp()
    });
    let mut rows = vec![vec![0.0, var0, analytic.as_ref().map_or(f64::NAN, |f| f(0.0))]];
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < steps {
        let k = every.min(steps - done);
        n = smoluchowski_evolve(&grid, &n, &v, &th, dt, k)?;
        done += k;
        let t = done as f64 * dt;
        let var = variance(&grid, &n);
        let exact = analytic.as_ref().map_or(f64::NAN, |f| f(t));
        if analytic.is_some() {
            worst = worst.max(((var - exact) / exact).abs());
        }
        rows.push(vec![t, var, exact]);
    }
    a.value("final_variance", rows.last().map_or(var0, |r| r[1]));
    if analytic.is_some() {
        a.value("variance_error", worst);
        a.check(Check::at_most("variance_error", worst, 0.01));
    }
    let gibbs = smoluchowski_gibbs_change(&grid, &v, &th, dt, 100)?;
    a.value("gibbs_step_change", gibbs);
    a.check(Check::at_most("gibbs_step_change", gibbs, 1e-10));
    columns(a, "variance.csv", "series", "t,variance,analytic", &rows);
    if plot {
        let mut series = vec![Series::new("measured", rows.iter().map(|r| (r[0], r[1])).collect())];
        if analytic.is_some() {
            series.push(Series::new("analytic", rows.iter().map(|r| (r[0], r[2])).collect()));
        }
        a.text("variance.svg", "plot", line_chart("overdamped relaxation", "t", "variance", &series));
    }
    let rows: Vec<Vec<f64>> = (0..grid.n_x()).map(|i| vec![grid.x(i), n[i]]).collect();
    columns(a, "density_final.csv", "density", "x,n", &rows);
    Ok(())
}

/// Least-squares slope of `ln y` against `t`.
fn log_slope(pts: &[(f64, f64)]) -> f64 {
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / k;
    let num: f64 = pts.iter().map(|(t, y)| (t - mt) * (y.ln() - my)).sum();
    let den: f64 = pts.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    num / den
}

fn modified_hj(cfg: &ScenarioConfig, plot: bool, a: &mut Artifacts) -> Result<()> {
    let grid = cfg.grid()?;
    let params = cfg.particle()?;
    let th = cfg.thermal()?;
    let v = cfg.potential()?;
    let p0 = cfg.initial.p0.unwrap_or(1.5);
    let mut s = ActionState::from_fn(grid, |_| 1.0 / grid.length(), |x| p0 * x)?;
    let dt = cfg.run.dt;
    let steps = cfg.steps();
    let every = chunk(cfg, steps, 50);
    let mean_slope = |s: &ActionState| s.momentum().iter().sum::<f64>() / grid.n_x() as f64;
    let mut track = vec![(0.0, mean_slope(&s))];
    for k in 1..=steps {
        s = modified_hj_step(&s, &v, &params, &th, dt)?;
        if k % every == 0 || k == steps {
            track.push((k as f64 * dt, mean_slope(&s)));
        }
    }
    if track.iter().any(|p| !(p.1 > 0.0)) {
        return Err(Error::Measurement("mean action slope must stay positive for the decay fit".into()));
    }
    let rate = -log_slope(&track);
    let expect = th.gamma / params.m;
    a.value("fitted_rate", rate);
    a.value("expected_rate", expect);
    if matches!(v, Potential::Free) && expect > 0.0 {
        a.check(Check::at_most("rate_error", ((rate - expect) / expect).abs(), 0.005));
    }
    let rows: Vec<Vec<f64>> = track.iter().map(|(t, u)| vec![*t, *u]).collect();
    columns(a, "slope.csv", "series", "t,mean_dSdx", &rows);
    if plot {
        a.text("slope.svg", "plot", line_chart("action slope", "t", "mean dS/dx", &[Series::new("slope", track)]));
    }
    Ok(())
}

/// Sum of the lowest periodic Fourier modes of the domain.
fn modes(grid: &Grid1D, c: &[f64]) -> Vec<f64> {
    let l = grid.length();
    grid.x_points()
        .iter()
        .map(|&x| {
            c.chunks(2)
                .enumerate()
                .map(|(q, ab)| {
                    let k = 2.0 * PI * (q + 1) as f64 / l;
                    ab[0] * (k * x).cos() + ab.get(1).map_or(0.0, |b| b * (k * x).sin())
                })
                .sum()
        })
        .collect()
}

fn draw(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..r)).collect()
}

/// Exponent of `|A[traj + ηδ] − A[traj]|` in `η`, with the variation pinned
/// at both ends of the trajectory.
fn stationarity_exponent(traj: &[ActionState], v: &Potential, params: &ParticleParams, dt: f64, x0: f64) -> Result<f64> {
    let grid = *traj[0].grid();
    let l = grid.length();
    let last = traj.len() - 1;
    if last < 4 {
        return Err(Error::Parameter("stationarity needs at least five snapshots".into()));
    }
    let a0 = action_functional(traj, v, params, dt)?;
    let dn: Vec<f64> = grid.x_points().iter().map(|&x| 0.1 * (4.0 * PI * x / l).sin() * gauss(x, x0, 1.0)).collect();
    let ds: Vec<f64> = grid.x_points().iter().map(|&x| (2.0 * PI * x / l).cos()).collect();
    // the centered time difference couples the first and last interior
    // snapshots to the ends, so those are pinned too
    let bend = |eta: f64| -> Result<f64> {
        let bent = traj
            .iter()
            .enumerate()
            .map(|(k, st)| {
                let w = if k == 0 || k == last { 0.0 } else { eta * (PI * (k - 1) as f64 / (last - 2) as f64).sin() };
                let n = st.n().iter().zip(&dn).map(|(n, d)| n + w * d).collect();
                let s = st.s().iter().zip(&ds).map(|(s, d)| s + w * d).collect();
                ActionState::new(grid, n, s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((action_functional(&bent, v, params, dt)? - a0).abs())
    };
    let mut pts = Vec::new();
    for eta in [0.01, 0.02, 0.04, 0.08] {
        pts.push((eta, bend(eta)?));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|(e, d)| (e.ln(), d.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let num: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    Ok(num / den)
}

fn variational_checks(cfg: &ScenarioConfig, a: &mut Artifacts) -> Result<()> {
    let grid = cfg.grid()?;
    let params = cfg.particle()?;
    let v = cfg.potential()?;
    let init = &cfg.initial;
    let (x0, w, p0) = (init.x0.unwrap_or(1.0), init.width.unwrap_or(0.6), init.p0.unwrap_or(0.1));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    let n_x = grid.n_x();
    let l = grid.length();
    // nodeless states keep 1/n finite in the wave-function form
    let nodeless = |bump: &[f64], wave: &[f64], slope: f64| -> Result<ActionState> {
        let mut n: Vec<f64> = grid.x_points().iter().zip(bump).map(|(&x, b)| gauss(x, x0, 0.25 * l) + 0.01 + b).collect();
        normalize(&mut n, grid.dx());
        let s = grid.x_points().iter().zip(wave).map(|(x, w)| slope * x + w).collect();
        ActionState::new(grid, n, s)
    };
    let mut grad: f64 = 0.0;
    for _ in 0..4 {
        let bump: Vec<f64> = modes(&grid, &draw(&mut rng, 6, 1.0)).iter().map(|b| 0.002 * b).collect();
        let wave = modes(&grid, &draw(&mut rng, 6, 1.0));
        let slope = rng.random_range(-1.0..1.0);
        let st = nodeless(&bump, &wave, slope)?;
        let c = functional_gradient_check(&st, &v, &params)?;
        grad = grad.max(c.err_n).max(c.err_s);
    }
    let base = nodeless(&vec![0.0; n_x], &modes(&grid, &[0.0, 0.5]), 0.3)?;
    let mut sym: f64 = 0.0;
    for _ in 0..100 {
        let mut tangent = || Tangent { dn: modes(&grid, &draw(&mut rng, 8, 1.0)), ds: modes(&grid, &draw(&mut rng, 8, 1.0)) };
        let (t1, t2) = (tangent(), tangent());
        sym = sym.max(symplectic_identity_check(&base, &params, &t1, &t2)?);
    }
    let packet = ActionState::from_fn(grid, |x| gauss(x, x0, w), |x| p0 * x)?;
    let dt = cfg.run.dt;
    let big = gauge_invariance_check(&packet, &v, &params, &[1e6; 5], dt)?;
    let wobble: Vec<f64> = (0..20).map(|k| (0.37 * k as f64).sin() * 50.0 + (k * k) as f64).collect();
    let small = gauge_invariance_check(&packet, &v, &params, &wobble, dt)?;
    let gauge = big.max_density_difference.max(small.max_density_difference);
    let mut traj = vec![packet];
    for _ in 0..cfg.steps() {
        let next = evolve_action_wave(traj.last().expect("non-empty"), &v, &params, dt)?;
        traj.push(next);
    }
    let exponent = stationarity_exponent(&traj, &v, &params, dt, x0)?;
    let rows = vec![
        CheckRow::below("gradient_check", grad, 1e-6),
        CheckRow::below("symplectic_identity", sym, 1e-10),
        CheckRow::below("gauge_invariance", gauge, 1e-12),
        CheckRow::below("stationarity_exponent_error", (exponent - 2.0).abs(), 0.05),
    ];
    a.value("stationarity_exponent", exponent);
    for r in &rows {
        a.value(&r.check, r.value);
        a.check(Check { name: r.check.clone(), value: r.value, tolerance: r.tolerance, pass: r.pass });
    }
    a.file("checks.csv", "checks", |w| write_checks_csv(&rows, w));
    Ok(())
}
