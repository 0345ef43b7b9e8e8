//! Damped thermal sound `∂ₜ²n = v_s²∂ₓ²n − (γ/m)∂ₜn` and pulse-speed measurement.

use super::ThermalParams;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, ParticleParams};
use crate::spectral::{derivative, wavenumbers, FftPair};
use num_complex::Complex64;
use std::io::Write;

/// Initial density perturbation on top of `n0` and initial current `j0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoundPerturbation {
    pub density: Vec<f64>,
    pub current: Vec<f64>,
}

/// Density frames sampled at `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityHistory {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub frames: Vec<Vec<f64>>,
}

impl DensityHistory {
    pub fn new(grid: Grid1D, times: Vec<f64>, frames: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != frames.len() || frames.iter().any(|f| f.len() != grid.n_x()) {
            return Err(Error::Structural("history frames do not match times and grid".into()));
        }
        Ok(DensityHistory { grid, times, frames })
    }

    /// One frame as CSV: grid header, then `x,n` rows.
    pub fn write_frame_csv<W: Write>(&self, k: usize, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.grid.csv_header())?;
        writeln!(w, "# t={:e}", self.times[k])?;
        writeln!(w, "x,n")?;
        for (i, v) in self.frames[k].iter().enumerate() {
            writeln!(w, "{:e},{:e}", self.grid.x(i), v)?;
        }
        Ok(())
    }
}

/// Evolves every Fourier mode of `n` with the exact solution of the damped
/// oscillator `ẍ + (γ/m)ẋ + v_s²κ²x = 0`, from `n(0) = n0 + δn` and
/// `∂ₜn(0) = −∂ₓj0`. Frames are written every `dt_out` up to `t_end`.
pub fn thermal_sound_evolve(
    grid: &Grid1D,
    n0: &[f64],
    perturbation: &SoundPerturbation,
    params: &ParticleParams,
    th: &ThermalParams,
    t_end: f64,
    dt_out: f64,
) -> Result<DensityHistory> {
    let n_x = grid.n_x();
    if n0.len() != n_x || perturbation.density.len() != n_x || perturbation.current.len() != n_x {
        return Err(Error::Structural(format!("sound arrays must have n_x = {n_x} samples")));
    }
    if !(dt_out > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Parameter("need dt_out > 0 and t_end >= 0".into()));
    }
    let fft = FftPair::new(n_x);
    let start: Vec<Complex64> = n0
        .iter()
        .zip(&perturbation.density)
        .map(|(a, b)| Complex64::new(a + b, 0.0))
        .collect();
    let rate: Vec<Complex64> = derivative(&perturbation.current, grid.dx(), 1)
        .into_iter()
        .map(|d| Complex64::new(-d, 0.0))
        .collect();
    let mut x0 = start;
    let mut v0 = rate;
    fft.forward.process(&mut x0);
    fft.forward.process(&mut v0);
    let kappa = wavenumbers(n_x, grid.dx());
    let lambda = th.gamma / (2.0 * params.m);
    let c2 = th.kt / params.m;
    let n_frames = (t_end / dt_out + 1e-9).floor() as usize + 1;
    let mut times = Vec::with_capacity(n_frames);
    let mut frames = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let t = k as f64 * dt_out;
        let mut buf: Vec<Complex64> = (0..n_x)
            .map(|m| {
                let (a, b) = mode_factors(c2 * kappa[m] * kappa[m], lambda, t);
                x0[m] * a + v0[m] * b
            })
            .collect();
        fft.inverse.process(&mut buf);
        frames.push(buf.iter().map(|z| z.re / n_x as f64).collect());
        times.push(t);
    }
    DensityHistory::new(*grid, times, frames)
}

/// `(a, b)` with `x(t) = a·x(0) + b·ẋ(0)` for `ẍ + 2λẋ + w2·x = 0`.
fn mode_factors(w2: f64, lambda: f64, t: f64) -> (f64, f64) {
    let decay = (-lambda * t).exp();
    let omega2 = w2 - lambda * lambda;
    if w2 == 0.0 {
        let b = if lambda > 0.0 { -(-2.0 * lambda * t).exp_m1() / (2.0 * lambda) } else { t };
        return (1.0, b);
    }
    if omega2.abs() <= 1e-12 * lambda * lambda {
        return (decay * (1.0 + lambda * t), decay * t);
    }
    if omega2 > 0.0 {
        let om = omega2.sqrt();
        let (s, c) = (om * t).sin_cos();
        (decay * (c + lambda * s / om), decay * s / om)
    } else {
        let mu = (-omega2).sqrt();
        // e^{−λt}cosh(μt) etc. written with decaying exponentials only
        let ep = (-(lambda - mu) * t).exp();
        let em = (-(lambda + mu) * t).exp();
        let ch = 0.5 * (ep + em);
        let sh = 0.5 * (ep - em);
        (ch + lambda * sh / mu, sh / mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedFit {
    pub speed: f64,
    /// RMS deviation of the tracked peak positions from the fitted line.
    pub residual: f64,
    /// Tracked `(t, x_peak)` pairs used in the fit.
    pub track: Vec<(f64, f64)>,
}

/// Speed of the right-moving pulse from a least-squares line through its
/// sub-bin peak positions.
pub fn measure_wave_speed(history: &DensityHistory) -> Result<SpeedFit> {
    let grid = history.grid;
    let n_x = grid.n_x();
    if history.frames.len() < 3 {
        return Err(Error::Measurement("need at least three frames".into()));
    }
    let background = |f: &[f64]| {
        let mut s = f.to_vec();
        s.sort_by(f64::total_cmp);
        s[n_x / 2]
    };
    let first = &history.frames[0];
    let base0 = background(first);
    let i0 = (0..n_x).max_by(|&a, &b| first[a].total_cmp(&first[b])).unwrap_or(0);
    let amp0 = first[i0] - base0;
    if !(amp0 > 0.0) {
        return Err(Error::Measurement("initial frame has no pulse".into()));
    }
    let half = base0 + 0.5 * amp0;
    let mut r = i0;
    while r + 1 < n_x && first[r + 1] > half {
        r += 1;
    }
    let width = ((r - i0) as f64 + 0.5) * grid.dx() / (2.0 * 2f64.ln()).sqrt();
    let x0 = grid.x(i0);
    let lo = x0 + 2.0 * width;
    let hi = grid.x_max() - 2.0 * width;
    let mut track = Vec::new();
    for (t, frame) in history.times.iter().zip(&history.frames).skip(1) {
        let base = background(frame);
        let from = i0 + 1;
        let Some(im) = (from..n_x).max_by(|&a, &b| frame[a].total_cmp(&frame[b])) else {
            continue;
        };
        if frame[im] - base < 0.1 * amp0 {
            break;
        }
        let xm = if im > from && im + 1 < n_x {
            let (l, c, rr) = (frame[im - 1], frame[im], frame[im + 1]);
            let den = l - 2.0 * c + rr;
            let off = if den < 0.0 { 0.5 * (l - rr) / den } else { 0.0 };
            grid.x(im) + off * grid.dx()
        } else {
            grid.x(im)
        };
        if xm < lo {
            continue;
        }
        if xm > hi {
            break;
        }
        track.push((*t, xm));
    }
    if track.len() < 3 {
        return Err(Error::Measurement(format!(
            "only {} usable peak positions; the pulse dispersed or left the window",
            track.len()
        )));
    }
    if track.windows(2).any(|w| w[1].1 <= w[0].1) {
        return Err(Error::Measurement("peak track is not monotone".into()));
    }
    let n = track.len() as f64;
    let mt = track.iter().map(|p| p.0).sum::<f64>() / n;
    let mx = track.iter().map(|p| p.1).sum::<f64>() / n;
    let stt = track.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
    let stx = track.iter().map(|p| (p.0 - mt) * (p.1 - mx)).sum::<f64>();
    let speed = stx / stt;
    let residual = (track
        .iter()
        .map(|p| (p.1 - (mx + speed * (p.0 - mt))).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(SpeedFit { speed, residual, track })
}
