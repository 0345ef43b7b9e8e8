//! Wave functions on the coordinate lattice: Wigner transform, split-operator
//! Schrödinger propagation `iσ∂ₜψ = [−σ²/2m ∂ₓ² + V]ψ`, coherent states,
//! the quartic correction to Liouville transport and the Madelung form.

use crate::error::{Error, Result};
use crate::grid::{k_to_p_unchecked, Grid1D, KSpaceField, ParticleParams, PhaseSpaceField, DENSITY_FLOOR};
use crate::liouville::ActionState;
use crate::potential::Potential;
use crate::spectral::{map_columns, map_rows, wavenumbers, FftPair};
use crate::stencil;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

/// Norm tolerance of a wave function.
pub const NORM_TOLERANCE: f64 = 1e-10;
/// Wrapped phase jumps between neighbours larger than this are ambiguous.
pub const UNWRAP_LIMIT: f64 = 0.75 * PI;

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid1D,
    values: Vec<Complex64>,
    params: ParticleParams,
}

impl WaveFunction {
    pub fn new(grid: Grid1D, values: Vec<Complex64>, params: ParticleParams) -> Result<Self> {
        if values.len() != grid.n_x() {
            return Err(Error::Structural(format!(
                "wave function has {} samples, grid has {}",
                values.len(),
                grid.n_x()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Data("wave function contains non-finite values".into()));
        }
        Ok(WaveFunction { grid, values, params })
    }

    pub fn from_fn(grid: Grid1D, params: ParticleParams, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        WaveFunction::new(grid, grid.x_points().into_iter().map(f).collect(), params)
    }

    /// `√n·e^{iS/σ}`.
    pub fn from_action(state: &ActionState, grid: Grid1D, params: ParticleParams) -> Result<Self> {
        if !grid.same_x(state.grid()) {
            return Err(Error::Structural("action state lives on a different lattice".into()));
        }
        let s = state.s();
        let values = state
            .n()
            .iter()
            .zip(&s)
            .map(|(n, s)| Complex64::from_polar(n.max(0.0).sqrt(), s / params.sigma))
            .collect();
        WaveFunction::new(grid, values, params)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn params(&self) -> &ParticleParams {
        &self.params
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0) {
            return Err(Error::Data("cannot normalize a zero wave function".into()));
        }
        let s = 1.0 / n.sqrt();
        Ok(WaveFunction { values: self.values.iter().map(|z| z * s).collect(), ..self.clone() })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.norm_sq();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Data(format!("wave function norm {n} differs from 1")));
        }
        Ok(())
    }

    /// `Σψ₁*ψ₂ dx`.
    pub fn overlap(&self, other: &WaveFunction) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<Complex64>()
            * self.grid.dx()
    }

    pub fn mean_x(&self) -> f64 {
        let d = self.density();
        d.iter().enumerate().map(|(i, n)| self.grid.x(i) * n).sum::<f64>() * self.grid.dx()
    }

    pub fn variance_x(&self) -> f64 {
        let mu = self.mean_x();
        let d = self.density();
        d.iter()
            .enumerate()
            .map(|(i, n)| (self.grid.x(i) - mu).powi(2) * n)
            .sum::<f64>()
            * self.grid.dx()
    }

    /// `⟨p⟩ = σ·Im Σψ*∂ₓψ dx` with a spectral derivative.
    pub fn mean_p(&self) -> f64 {
        let d = complex_derivative(&self.values, self.grid.dx());
        self.params.sigma * self.overlap_raw(&d).im
    }

    fn overlap_raw(&self, other: &[Complex64]) -> Complex64 {
        self.values.iter().zip(other).map(|(a, b)| a.conj() * b).sum::<Complex64>() * self.grid.dx()
    }

    /// `⟨ψ|Ĥ|ψ⟩` with the kinetic term evaluated spectrally.
    pub fn energy(&self, v: &Potential) -> f64 {
        let d = complex_derivative(&self.values, self.grid.dx());
        let kin = self.params.sigma.powi(2) / (2.0 * self.params.m)
            * d.iter().map(|z| z.norm_sqr()).sum::<f64>()
            * self.grid.dx();
        let pot: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let n = z.norm_sqr();
                if n == 0.0 {
                    0.0
                } else {
                    v.v(self.grid.x(i)) * n
                }
            })
            .sum::<f64>()
            * self.grid.dx();
        kin + pot
    }

    /// Momentum density `|⟨ψ_p|ψ⟩|²` with `ψ_p = e^{ixp/σ}/√(2πσ)`, by direct projection.
    pub fn momentum_density(&self, p: f64) -> f64 {
        let sigma = self.params.sigma;
        let amp: Complex64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, z)| Complex64::from_polar(1.0, -self.grid.x(i) * p / sigma) * z)
            .sum::<Complex64>()
            * self.grid.dx()
            / (2.0 * PI * sigma).sqrt();
        amp.norm_sqr()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.grid.csv_header())?;
        writeln!(w, "# params m={:e} sigma={:e}", self.params.m, self.params.sigma)?;
        writeln!(w, "x,re,im")?;
        for (i, z) in self.values.iter().enumerate() {
            writeln!(w, "{:e},{:e},{:e}", self.grid.x(i), z.re, z.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Data("truncated wave-function CSV".into()))?
                .map_err(|e| Error::Data(e.to_string()))
        };
        let grid = Grid1D::parse_csv_header(&next()?)?;
        let params_line = next()?;
        let mut m = None;
        let mut sigma = None;
        for tok in params_line.trim_start_matches("# params").split_whitespace() {
            match tok.split_once('=') {
                Some(("m", v)) => m = v.parse::<f64>().ok(),
                Some(("sigma", v)) => sigma = v.parse::<f64>().ok(),
                _ => return Err(Error::Data(format!("bad params token {tok:?}"))),
            }
        }
        let params = match (m, sigma) {
            (Some(m), Some(s)) => ParticleParams::new(m, s)?,
            _ => return Err(Error::Data("missing m or sigma in params line".into())),
        };
        if next()?.trim() != "x,re,im" {
            return Err(Error::Data("expected column line x,re,im".into()));
        }
        let mut values = Vec::with_capacity(grid.n_x());
        while let Ok(line) = next() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Data(e.to_string()))?;
            if cols.len() != 3 {
                return Err(Error::Data(format!("expected 3 columns, got {}", cols.len())));
            }
            values.push(Complex64::new(cols[1], cols[2]));
        }
        WaveFunction::new(grid, values, params)
    }
}

fn complex_derivative(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let fft = FftPair::new(n);
    let kappa = wavenumbers(n, h);
    let mut buf = values.to_vec();
    fft.forward.process(&mut buf);
    for (m, z) in buf.iter_mut().enumerate() {
        *z = if m == n / 2 { Complex64::new(0.0, 0.0) } else { *z * Complex64::new(0.0, kappa[m]) };
    }
    fft.inverse.process(&mut buf);
    buf.iter().map(|z| z / n as f64).collect()
}

/// `f_ψ(x,p) = (1/2π)Σ_k e^{−ikp} ψ*(x − σk/2)ψ(x + σk/2) dk`, with the shifted
/// products taken by whole index shifts and zero outside the lattice.
pub fn wigner_transform(psi: &WaveFunction) -> Result<PhaseSpaceField> {
    let grid = psi.grid;
    let q = grid.sigma_shift(psi.params.sigma)? as isize;
    let (n_x, n_p) = (grid.n_x(), grid.n_p());
    let at = |i: isize| -> Complex64 {
        if i >= 0 && (i as usize) < n_x {
            psi.values[i as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let mut ft = Vec::with_capacity(n_x * n_p);
    for i in 0..n_x as isize {
        for l in 0..n_p {
            let s = l as isize - (n_p / 2) as isize;
            let d = s * q;
            let z = at(i - d).conj() * at(i + d);
            // the unpaired row k = −k_max is its own conjugate partner
            ft.push(if l == 0 { Complex64::new(z.re, 0.0) } else { z });
        }
    }
    Ok(k_to_p_unchecked(&KSpaceField::new(grid, ft)?))
}

/// Precomputed split-operator factors for one `(grid, V, params, dt)`.
struct TdsePropagator {
    n: usize,
    fft: FftPair,
    kinetic: Vec<Complex64>,
    potential: Vec<Complex64>,
    walls: Option<(usize, usize)>,
}

impl TdsePropagator {
    fn new(grid: &Grid1D, v: &Potential, params: &ParticleParams, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Parameter(format!("time step must be positive, got {dt}")));
        }
        let walls = v.wall_indices(grid)?;
        let n = match walls {
            Some((a, b)) => 2 * (b - a + 1),
            None => grid.n_x(),
        };
        let (m, sigma) = (params.m, params.sigma);
        let kinetic = wavenumbers(n, grid.dx())
            .into_iter()
            .map(|k| Complex64::from_polar(1.0, -sigma * k * k * dt / (4.0 * m)))
            .collect();
        let potential = grid
            .x_points()
            .into_iter()
            .map(|x| {
                if walls.is_some() {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, -v.v(x) * dt / sigma)
                }
            })
            .collect();
        Ok(TdsePropagator { n, fft: FftPair::new(n), kinetic, potential, walls })
    }

    fn kinetic_half(&self, psi: &mut [Complex64], buf: &mut Vec<Complex64>) {
        let scale = 1.0 / self.n as f64;
        match self.walls {
            None => {
                self.fft.forward.process(psi);
                for (z, k) in psi.iter_mut().zip(&self.kinetic) {
                    *z *= k * scale;
                }
                self.fft.inverse.process(psi);
            }
            Some((a, b)) => {
                // odd extension about the planes half a cell outside the
                // wall points, the same planes the Liouville mirror uses
                let rows = b - a + 1;
                buf.clear();
                buf.resize(self.n, Complex64::new(0.0, 0.0));
                for r in 0..rows {
                    buf[r] = psi[a + r];
                    buf[self.n - 1 - r] = -psi[a + r];
                }
                self.fft.forward.process(buf);
                for (z, k) in buf.iter_mut().zip(&self.kinetic) {
                    *z *= k * scale;
                }
                self.fft.inverse.process(buf);
                psi.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                for r in 0..rows {
                    psi[a + r] = buf[r];
                }
            }
        }
    }

    fn run(&self, psi: &mut [Complex64], steps: usize) {
        let mut buf = Vec::new();
        if steps == 0 {
            return;
        }
        self.kinetic_half(psi, &mut buf);
        for s in 0..steps {
            for (z, u) in psi.iter_mut().zip(&self.potential) {
                *z *= u;
            }
            self.kinetic_half(psi, &mut buf);
            if s + 1 < steps {
                self.kinetic_half(psi, &mut buf);
            }
        }
    }
}

/// One Strang step: kinetic half step, potential step, kinetic half step.
/// Box potentials use a sine basis with nodes half a cell outside the wall points.
pub fn tdse_step(psi: &WaveFunction, v: &Potential, dt: f64) -> Result<WaveFunction> {
    tdse_evolve(psi, v, dt, 1)
}

/// `n_steps` Strang steps with the same operator sequence as repeated [`tdse_step`].
pub fn tdse_evolve(psi: &WaveFunction, v: &Potential, dt: f64, n_steps: usize) -> Result<WaveFunction> {
    let prop = TdsePropagator::new(&psi.grid, v, &psi.params, dt)?;
    let mut values = psi.values.clone();
    if prop.walls.is_some() {
        let (a, b) = prop.walls.unwrap_or((0, 0));
        for (i, z) in values.iter_mut().enumerate() {
            if i < a || i > b {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }
    prop.run(&mut values, n_steps);
    Ok(WaveFunction { values, ..psi.clone() })
}

/// Coherent-state parameters: width `alpha`, initial center `(u0, v0)`, frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlauberSpec {
    pub alpha: f64,
    pub u0: f64,
    pub v0: f64,
    pub omega: f64,
}

impl GlauberSpec {
    /// Shape-invariant width `α = mω/σ`.
    pub fn matched(params: &ParticleParams, omega: f64, u0: f64, v0: f64) -> Self {
        GlauberSpec { alpha: params.m * omega / params.sigma, u0, v0, omega }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !(self.omega > 0.0) {
            return Err(Error::Parameter("Glauber state needs alpha > 0 and omega > 0".into()));
        }
        Ok(())
    }
}

/// Classical center `(u, v)` at time `t` from `u' = v/m`, `v' = −mω²u`, by RK4.
pub fn glauber_center(spec: &GlauberSpec, params: &ParticleParams, t: f64) -> (f64, f64) {
    let (m, w) = (params.m, spec.omega);
    let steps = ((w * t.abs()) / 1e-3).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let rhs = |u: f64, v: f64| (v / m, -m * w * w * u);
    let (mut u, mut v) = (spec.u0, spec.v0);
    for _ in 0..steps {
        let (a1, b1) = rhs(u, v);
        let (a2, b2) = rhs(u + 0.5 * h * a1, v + 0.5 * h * b1);
        let (a3, b3) = rhs(u + 0.5 * h * a2, v + 0.5 * h * b2);
        let (a4, b4) = rhs(u + h * a3, v + h * b3);
        u += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        v += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    }
    (u, v)
}

/// `(α/π)^{1/4} e^{−iωt/2} exp(−α(x−u)²/2 + iαv(x − u/2)/(mω))`.
pub fn glauber_state(grid: &Grid1D, spec: &GlauberSpec, params: &ParticleParams, t: f64) -> Result<WaveFunction> {
    spec.validate()?;
    let (u, v) = glauber_center(spec, params, t);
    let a = spec.alpha;
    let k = a * v / (params.m * spec.omega);
    let amp = (a / PI).powf(0.25);
    WaveFunction::from_fn(*grid, *params, |x| {
        let re = -0.5 * a * (x - u).powi(2);
        let phase = -0.5 * spec.omega * t + k * (x - 0.5 * u);
        Complex64::from_polar(amp * re.exp(), phase)
    })
}

/// Closed-form Wigner function of [`glauber_state`]:
/// `(1/πσ)exp(−α(x−u)² − (p − σαv/(mω))²/(σ²α))`. With `α = mω/σ` this is
/// `(α/πmω)exp(−α(x−u)² − α(p−v)²/(mω)²)`.
pub fn glauber_wigner(grid: &Grid1D, spec: &GlauberSpec, params: &ParticleParams, t: f64) -> Result<PhaseSpaceField> {
    spec.validate()?;
    let (u, v) = glauber_center(spec, params, t);
    let (a, s) = (spec.alpha, params.sigma);
    let pbar = s * a * v / (params.m * spec.omega);
    Ok(PhaseSpaceField::from_fn(*grid, |x, p| {
        (-a * (x - u).powi(2) - (p - pbar).powi(2) / (s * s * a)).exp() / (PI * s)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuarticResidual {
    /// `‖∂ₜf + (p/m)∂ₓf − V′∂ₚf‖ / ‖f‖`.
    pub r_plain: f64,
    /// Same with `+(σ²/24)V‴∂ₚ³f` added.
    pub r_corrected: f64,
    /// Set when halving `dt` still changes `r_corrected` substantially.
    pub warning: Option<String>,
}

fn residuals(psi: &WaveFunction, v: &Potential, dt: f64) -> Result<(f64, f64)> {
    let psi1 = tdse_step(psi, v, dt)?;
    let psi2 = tdse_step(&psi1, v, dt)?;
    let f0 = wigner_transform(psi)?;
    let f1 = wigner_transform(&psi1)?;
    let f2 = wigner_transform(&psi2)?;
    let grid = *f1.grid();
    let (n_x, n_p) = (grid.n_x(), grid.n_p());
    let (m, sigma) = (psi.params.m, psi.params.sigma);
    let mut dfx = f1.values().to_vec();
    map_columns(&mut dfx, n_x, n_p, |_, col| {
        let d = crate::spectral::derivative(col, grid.dx(), 1);
        col.copy_from_slice(&d);
    });
    let mut dfp = f1.values().to_vec();
    let mut dfp3 = f1.values().to_vec();
    map_rows(&mut dfp, n_p, |_, row| {
        let d = crate::spectral::derivative(row, grid.dp(), 1);
        row.copy_from_slice(&d);
    });
    map_rows(&mut dfp3, n_p, |_, row| {
        let d = crate::spectral::derivative(row, grid.dp(), 3);
        row.copy_from_slice(&d);
    });
    let (mut plain, mut corr, mut norm) = (0.0, 0.0, 0.0);
    for i in 0..n_x {
        let x = grid.x(i);
        let (f1d, f3d) = (v.dv(x), v.d3v(x));
        for j in 0..n_p {
            let idx = i * n_p + j;
            let dt_f = (f2.values()[idx] - f0.values()[idx]) / (2.0 * dt);
            let r = dt_f + grid.p(j) / m * dfx[idx] - f1d * dfp[idx];
            let rc = r + sigma * sigma / 24.0 * f3d * dfp3[idx];
            plain += r * r;
            corr += rc * rc;
            norm += f1.values()[idx].powi(2);
        }
    }
    Ok(((plain / norm).sqrt(), (corr / norm).sqrt()))
}

/// Residuals of the Liouville equation, without and with the third-order
/// quantum correction, for the Wigner function of a TDSE trajectory.
pub fn quartic_residual(psi: &WaveFunction, v: &Potential, dt: f64) -> Result<QuarticResidual> {
    if v.is_box() {
        return Err(Error::Parameter("the quartic residual needs a smooth potential".into()));
    }
    let (r_plain, r_corrected) = residuals(psi, v, dt)?;
    let (_, r_half) = residuals(psi, v, 0.5 * dt)?;
    let warning = if r_corrected >= 0.1 * r_plain && r_half < 0.5 * r_corrected {
        Some(format!(
            "time discretization dominates: r_corrected = {r_corrected:e} at dt, {r_half:e} at dt/2"
        ))
    } else {
        None
    };
    Ok(QuarticResidual { r_plain, r_corrected, warning })
}

/// `n = |ψ|²`, `S = σ·arg ψ` unwrapped outward from the density peak over its
/// support and continued linearly beyond it.
pub fn madelung_decompose(psi: &WaveFunction) -> Result<ActionState> {
    let grid = psi.grid;
    let n_x = grid.n_x();
    let n = psi.density();
    let peak = (0..n_x).max_by(|&a, &b| n[a].total_cmp(&n[b])).unwrap_or(0);
    if n[peak] < DENSITY_FLOOR {
        return Err(Error::Node { x: grid.x(peak), density: n[peak] });
    }
    let mut lo = peak;
    while lo > 0 && n[lo - 1] >= DENSITY_FLOOR {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < n_x && n[hi + 1] >= DENSITY_FLOOR {
        hi += 1;
    }
    for i in (0..lo).chain(hi + 1..n_x) {
        if n[i] >= DENSITY_FLOOR {
            let gap = if i < lo { lo - 1 } else { hi + 1 };
            return Err(Error::Node { x: grid.x(gap), density: n[gap] });
        }
    }
    let arg: Vec<f64> = psi.values.iter().map(|z| z.arg()).collect();
    let mut phase = vec![0.0; n_x];
    phase[peak] = arg[peak];
    let wrap = |d: f64| d - 2.0 * PI * (d / (2.0 * PI)).round();
    for i in peak + 1..=hi {
        let jump = wrap(arg[i] - arg[i - 1]);
        if jump.abs() > UNWRAP_LIMIT {
            return Err(Error::Unwrap { x: grid.x(i), jump });
        }
        phase[i] = phase[i - 1] + jump;
    }
    for i in (lo..peak).rev() {
        let jump = wrap(arg[i] - arg[i + 1]);
        if jump.abs() > UNWRAP_LIMIT {
            return Err(Error::Unwrap { x: grid.x(i), jump });
        }
        phase[i] = phase[i + 1] + jump;
    }
    let slope_hi = if hi > lo { phase[hi] - phase[hi - 1] } else { 0.0 };
    let slope_lo = if hi > lo { phase[lo + 1] - phase[lo] } else { 0.0 };
    for i in hi + 1..n_x {
        phase[i] = phase[hi] + slope_hi * (i - hi) as f64;
    }
    for i in 0..lo {
        phase[i] = phase[lo] - slope_lo * (lo - i) as f64;
    }
    let s = phase.into_iter().map(|ph| psi.params.sigma * ph).collect();
    ActionState::new(grid, n, s)
}

/// Pointwise quantum Hamilton–Jacobi residual
/// `∂ₜS + (∂ₓS)²/2m − (σ²/2m)(∂ₓ²√n)/√n + V` at the middle of three
/// equally spaced states, maximized where `n` exceeds `1e-4·max n`.
pub fn quantum_hj_residual(
    psi0: &WaveFunction,
    psi1: &WaveFunction,
    psi2: &WaveFunction,
    v: &Potential,
    dt: f64,
) -> Result<f64> {
    let a0 = madelung_decompose(psi0)?;
    let a1 = madelung_decompose(psi1)?;
    let a2 = madelung_decompose(psi2)?;
    let grid = psi1.grid;
    let (m, sigma) = (psi1.params.m, psi1.params.sigma);
    let (s0, s1, s2) = (a0.s(), a1.s(), a2.s());
    let n1 = a1.n();
    let peak = (0..grid.n_x()).max_by(|&a, &b| n1[a].total_cmp(&n1[b])).unwrap_or(0);
    let turn = 2.0 * PI * sigma;
    let offset = |s: &[f64]| turn * ((s[peak] - s1[peak]) / turn).round();
    let (o0, o2) = (offset(&s0), offset(&s2));
    let u = stencil::d1_quasi_periodic(a1.s_local(), grid.dx(), a1.winding());
    let root: Vec<f64> = n1.iter().map(|n| n.max(0.0).sqrt()).collect();
    let lap = crate::spectral::derivative(&root, grid.dx(), 2);
    let nmax = n1[peak];
    let mut worst: f64 = 0.0;
    for i in 0..grid.n_x() {
        if n1[i] < 1e-4 * nmax {
            continue;
        }
        let dsdt = ((s2[i] - o2) - (s0[i] - o0)) / (2.0 * dt);
        let q = -sigma * sigma / (2.0 * m) * lap[i] / root[i];
        let r = dsdt + u[i] * u[i] / (2.0 * m) + q + v.v(grid.x(i));
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid1D {
        Grid1D::for_wave_functions(-8.0, 8.0, 128, 128, 1.0, 1).unwrap()
    }

    #[test]
    fn incompatible_sigma_is_a_configuration_error() {
        let g = grid();
        let params = ParticleParams::new(1.0, 0.7).unwrap();
        let psi = glauber_state(&g, &GlauberSpec::matched(&params, 1.0, 0.0, 0.0), &params, 0.0).unwrap();
        assert!(matches!(wigner_transform(&psi), Err(Error::Configuration(_))));
    }

    #[test]
    fn ground_state_wigner_is_the_phase_space_gaussian() {
        let g = grid();
        let params = ParticleParams::default();
        let spec = GlauberSpec::matched(&params, 1.0, 0.0, 0.0);
        let psi = glauber_state(&g, &spec, &params, 0.0).unwrap();
        assert!((psi.norm_sq() - 1.0).abs() < 1e-12);
        let w = wigner_transform(&psi).unwrap();
        let exact = glauber_wigner(&g, &spec, &params, 0.0).unwrap();
        let err = w.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "pointwise error {err}");
        for (a, b) in w.x_marginal().iter().zip(psi.density()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_is_conserved_per_step() {
        let g = grid();
        let params = ParticleParams::default();
        let psi = glauber_state(&g, &GlauberSpec::matched(&params, 1.0, 1.0, 0.5), &params, 0.0).unwrap();
        for v in [Potential::harmonic(1.0, 1.0).unwrap(), Potential::boxed(14.0).unwrap(), Potential::Free] {
            let out = tdse_step(&psi, &v, 0.01).unwrap();
            assert!((out.norm_sq() - psi.norm_sq()).abs() < 1e-12, "{v:?}");
        }
    }

    #[test]
    fn plane_wave_madelung_round_trip() {
        let g = grid();
        let params = ParticleParams::new(1.0, 0.5).unwrap();
        let p0 = 0.8;
        let psi = WaveFunction::from_fn(g, params, |x| {
            Complex64::from_polar((-x * x / 2.0).exp(), p0 * x / params.sigma)
        })
        .unwrap()
        .normalized()
        .unwrap();
        let st = madelung_decompose(&psi).unwrap();
        let s = st.s();
        for i in 1..g.n_x() {
            assert!(((s[i] - s[i - 1]) - p0 * g.dx()).abs() < 1e-12);
        }
        let back = WaveFunction::from_action(&st, g, params).unwrap();
        let fid = psi.overlap(&back).norm_sqr();
        assert!(fid > 1.0 - 1e-12, "fidelity {fid}");
    }

    #[test]
    fn nodes_are_reported() {
        let g = grid();
        let params = ParticleParams::default();
        let psi = WaveFunction::from_fn(g, params, |x| {
            Complex64::new((-(x - 2.0).powi(2) * 4.0).exp() + (-(x + 2.0).powi(2) * 4.0).exp(), 0.0)
        })
        .unwrap();
        assert!(matches!(madelung_decompose(&psi), Err(Error::Node { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let g = grid();
        let params = ParticleParams::new(2.0, 1.0).unwrap();
        let psi = glauber_state(&g, &GlauberSpec::matched(&params, 1.0, 0.3, 0.2), &params, 0.4).unwrap();
        let mut buf = Vec::new();
        psi.write_csv(&mut buf).unwrap();
        assert_eq!(WaveFunction::read_csv(buf.as_slice()).unwrap(), psi);
    }
}
