//! Euler–Maruyama ensembles of Brownian trajectories
//! `dx = (p/m)dt`, `dp = (−V′ − γp/m)dt + √(2γkT)dW`.
//!
//! Trajectory `i` draws from its own ChaCha stream `(seed, i)`, histograms are
//! integer counts, and per-chunk partial sums are reduced in chunk order, so
//! results do not depend on the number of worker threads.

use super::ThermalParams;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, ParticleParams, PhaseSpaceField};
use crate::potential::Potential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::io::Write;

/// Escaped fraction above which an ensemble run is rejected.
pub const ESCAPE_LIMIT: f64 = 0.01;
const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialSampler {
    /// Every trajectory starts at `(x, p)`.
    Point { x: f64, p: f64 },
    /// Independent normal draws.
    Gaussian { x0: f64, p0: f64, sx: f64, sp: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub n_traj: usize,
    pub dt: f64,
    pub seed: u64,
    pub init: InitialSampler,
    /// Record ensemble statistics every this many steps (0: only at the end).
    pub record_every: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub t: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub escapes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    /// Histogram density of the trajectories still on the grid at `t_end`.
    pub field: PhaseSpaceField,
    pub escapes: usize,
    pub stats: Vec<EnsembleStats>,
}

impl EnsembleResult {
    pub fn write_stats_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,mean_x,mean_p,var_x,var_p,escapes")?;
        for s in &self.stats {
            writeln!(w, "{:e},{:e},{:e},{:e},{:e},{}", s.t, s.mean_x, s.mean_p, s.var_x, s.var_p, s.escapes)?;
        }
        Ok(())
    }
}

fn bin(grid: &Grid1D, x: f64, p: f64) -> Option<usize> {
    let i = ((x - grid.x_min()) / grid.dx()).round();
    let j = ((p + grid.p_max()) / grid.dp()).round();
    if i >= 0.0 && i < grid.n_x() as f64 && j >= 0.0 && j < grid.n_p() as f64 {
        Some(i as usize * grid.n_p() + j as usize)
    } else {
        None
    }
}

#[derive(Clone, Default)]
struct Moments {
    count: usize,
    sx: f64,
    sp: f64,
    sxx: f64,
    spp: f64,
    escapes: usize,
}

struct ChunkOut {
    counts: Vec<u32>,
    records: Vec<Moments>,
    escapes: usize,
}

/// Runs the ensemble to `t_end` and histograms it on `grid`.
pub fn langevin_ensemble(
    grid: &Grid1D,
    v: &Potential,
    params: &ParticleParams,
    th: &ThermalParams,
    spec: &EnsembleSpec,
    t_end: f64,
) -> Result<EnsembleResult> {
    if spec.n_traj == 0 || !(spec.dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::Parameter("ensemble needs n_traj >= 1, dt > 0 and t_end >= 0".into()));
    }
    if v.is_box() {
        return Err(Error::Parameter("Langevin ensembles do not support box potentials".into()));
    }
    let n_steps = (t_end / spec.dt).round() as usize;
    let every = if spec.record_every == 0 { n_steps.max(1) } else { spec.record_every };
    let record_steps: Vec<usize> = (0..=n_steps).filter(|s| s % every == 0 || *s == n_steps).collect();
    let m = params.m;
    let noise = (2.0 * th.gamma * th.kt * spec.dt).sqrt();
    let dt = spec.dt;
    let n_chunks = spec.n_traj.div_ceil(CHUNK);
    let run_chunk = |c: usize| -> ChunkOut {
        let mut counts = vec![0u32; grid.n_x() * grid.n_p()];
        let mut records = vec![Moments::default(); record_steps.len()];
        let mut escapes = 0;
        for traj in c * CHUNK..((c + 1) * CHUNK).min(spec.n_traj) {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(traj as u64);
            let (mut x, mut p) = match spec.init {
                InitialSampler::Point { x, p } => (x, p),
                InitialSampler::Gaussian { x0, p0, sx, sp } => {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    (x0 + sx * a, p0 + sp * b)
                }
            };
            let mut escaped = false;
            let mut next_record = 0;
            for step in 0..=n_steps {
                if !escaped && bin(grid, x, p).is_none() {
                    escaped = true;
                }
                if next_record < record_steps.len() && record_steps[next_record] == step {
                    let r = &mut records[next_record];
                    if escaped {
                        r.escapes += 1;
                    } else {
                        r.count += 1;
                        r.sx += x;
                        r.sp += p;
                        r.sxx += x * x;
                        r.spp += p * p;
                    }
                    next_record += 1;
                }
                if escaped || step == n_steps {
                    break;
                }
                let xi: f64 = if noise > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                let force = v.dv(x);
                let x_new = x + p * dt / m;
                p += (-force - th.gamma * p / m) * dt + noise * xi;
                x = x_new;
            }
            if escaped {
                escapes += 1;
                // remaining record slots see this trajectory as escaped
                for r in records.iter_mut().skip(next_record) {
                    r.escapes += 1;
                }
            } else if let Some(b) = bin(grid, x, p) {
                counts[b] += 1;
            }
        }
        ChunkOut { counts, records, escapes }
    };
    let outs: Vec<ChunkOut> = (0..n_chunks).into_par_iter().map(run_chunk).collect();
    let mut counts = vec![0u64; grid.n_x() * grid.n_p()];
    let mut records = vec![Moments::default(); record_steps.len()];
    let mut escapes = 0;
    for out in &outs {
        for (a, b) in counts.iter_mut().zip(&out.counts) {
            *a += *b as u64;
        }
        for (a, b) in records.iter_mut().zip(&out.records) {
            a.count += b.count;
            a.sx += b.sx;
            a.sp += b.sp;
            a.sxx += b.sxx;
            a.spp += b.spp;
            a.escapes += b.escapes;
        }
        escapes += out.escapes;
    }
    if escapes as f64 > ESCAPE_LIMIT * spec.n_traj as f64 {
        return Err(Error::Runtime(format!(
            "{escapes} of {} trajectories left the grid",
            spec.n_traj
        )));
    }
    let inside: u64 = counts.iter().sum();
    let norm = if inside > 0 { 1.0 / (inside as f64 * grid.cell_area()) } else { 0.0 };
    let field = PhaseSpaceField::new(*grid, counts.iter().map(|&c| c as f64 * norm).collect())?;
    let stats = record_steps
        .iter()
        .zip(&records)
        .map(|(&step, r)| {
            let n = r.count.max(1) as f64;
            let (mx, mp) = (r.sx / n, r.sp / n);
            EnsembleStats {
                t: step as f64 * dt,
                mean_x: mx,
                mean_p: mp,
                var_x: r.sxx / n - mx * mx,
                var_p: r.spp / n - mp * mp,
                escapes: r.escapes,
            }
        })
        .collect();
    Ok(EnsembleResult { field, escapes, stats })
}
