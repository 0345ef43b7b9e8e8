//! Uniform periodic phase-space lattice, the discrete p↔k Fourier pairing and
//! local moments of a distribution.
//!
//! Point `i` of the coordinate lattice sits at `x_min + i·dx` with
//! `dx = (x_max − x_min)/n_x`; momentum point `j` at `−p_max + j·dp` with
//! `dp = 2·p_max/n_p`. The conjugate variable `k` lives on `(l − n_p/2)·dk`,
//! `dk = π/p_max`, so `f̃(x,k) = Σ_p e^{ikp} f(x,p) dp` and its inverse
//! `f = (dk/2π) Σ_k e^{−ikp} f̃` are exact inverses on the lattice.

use crate::error::{Error, Result};
use crate::spectral::FftPair;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

/// Negative excursions down to this size are treated as roundoff.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;
/// Values below `-NEGATIVE_LIMIT` mean the solver has failed.
pub const NEGATIVE_LIMIT: f64 = 1e-6;
/// Density floor for divisions such as `j/n`.
pub const DENSITY_FLOOR: f64 = 1e-10;
/// Tolerance on unit normalization.
pub const MASS_TOLERANCE: f64 = 1e-9;
/// Largest admissible mass fraction in the outer momentum band.
pub const ALIAS_MASS_LIMIT: f64 = 1e-6;
/// Momentum bins with `|p| ≥ ALIAS_BAND·p_max` form the monitored band.
pub const ALIAS_BAND: f64 = 0.9;
/// Largest accepted violation of `f̃(x,−k) = conj f̃(x,k)`.
pub const HERMITIAN_TOLERANCE: f64 = 1e-8;

fn is_power_of_two_at_least_8(n: usize) -> bool {
    n >= 8 && n.is_power_of_two()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_x: usize,
    p_max: f64,
    n_p: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_x: usize, p_max: f64, n_p: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::Parameter(format!(
                "coordinate bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(Error::Parameter(format!("p_max must be positive, got {p_max}")));
        }
        if !is_power_of_two_at_least_8(n_x) || !is_power_of_two_at_least_8(n_p) {
            return Err(Error::Parameter(format!(
                "n_x and n_p must be powers of two >= 8, got n_x = {n_x}, n_p = {n_p}"
            )));
        }
        Ok(Grid1D { x_min, x_max, n_x, p_max, n_p })
    }

    /// Grid whose k-lattice steps `σ·k/2` by exactly `shift` coordinate cells,
    /// i.e. `p_max = σπ/(2·shift·dx)`.
    pub fn for_wave_functions(
        x_min: f64,
        x_max: f64,
        n_x: usize,
        n_p: usize,
        sigma: f64,
        shift: usize,
    ) -> Result<Self> {
        if shift == 0 || !(sigma > 0.0) {
            return Err(Error::Parameter("sigma and shift must be positive".into()));
        }
        let dx = (x_max - x_min) / n_x as f64;
        Grid1D::new(x_min, x_max, n_x, sigma * PI / (2.0 * shift as f64 * dx), n_p)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn p_max(&self) -> f64 {
        self.p_max
    }
    pub fn n_p(&self) -> usize {
        self.n_p
    }
    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }
    pub fn dp(&self) -> f64 {
        2.0 * self.p_max / self.n_p as f64
    }
    pub fn dk(&self) -> f64 {
        PI / self.p_max
    }
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }
    pub fn p(&self, j: usize) -> f64 {
        -self.p_max + j as f64 * self.dp()
    }
    /// Centered k ordering: `l = n_p/2` is `k = 0`.
    pub fn k(&self, l: usize) -> f64 {
        (l as f64 - (self.n_p / 2) as f64) * self.dk()
    }
    pub fn x_points(&self) -> Vec<f64> {
        (0..self.n_x).map(|i| self.x(i)).collect()
    }
    pub fn p_points(&self) -> Vec<f64> {
        (0..self.n_p).map(|j| self.p(j)).collect()
    }
    pub fn k_points(&self) -> Vec<f64> {
        (0..self.n_p).map(|l| self.k(l)).collect()
    }
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dp()
    }

    /// Index of the k-row holding `-k` for row `l` (row 0 is its own partner).
    pub fn conjugate_k_index(&self, l: usize) -> usize {
        (self.n_p - l) % self.n_p
    }

    /// Index of the momentum row holding `-p` (row 0, `p = -p_max`, maps to itself).
    pub fn mirror_p_index(&self, j: usize) -> usize {
        (self.n_p - j) % self.n_p
    }

    /// Number of coordinate cells in one `σ·dk/2` step; errors unless that is
    /// an integer, because shifted products are taken by index shifts only.
    pub fn sigma_shift(&self, sigma: f64) -> Result<usize> {
        let q = sigma * self.dk() / (2.0 * self.dx());
        let r = q.round();
        if r < 1.0 || (q - r).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::Configuration(format!(
                "sigma·dk/2 = {} is not an integer multiple of dx = {} (ratio {q})",
                sigma * self.dk() / 2.0,
                self.dx()
            )));
        }
        Ok(r as usize)
    }

    pub fn same_x(&self, other: &Grid1D) -> bool {
        self.n_x == other.n_x && self.x_min == other.x_min && self.x_max == other.x_max
    }

    /// Lattice index of `x` if it coincides with a grid point (or `x_max`, index `n_x`).
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let t = (x - self.x_min) / self.dx();
        let r = t.round();
        if (t - r).abs() < 1e-9 && r >= 0.0 && r <= self.n_x as f64 {
            Some(r as usize)
        } else {
            None
        }
    }

    pub fn csv_header(&self) -> String {
        format!(
            "# grid x_min={:e} x_max={:e} n_x={} p_max={:e} n_p={}",
            self.x_min, self.x_max, self.n_x, self.p_max, self.n_p
        )
    }

    pub fn parse_csv_header(line: &str) -> Result<Self> {
        let body = line
            .trim()
            .strip_prefix("# grid")
            .ok_or_else(|| Error::Data(format!("expected '# grid' header, got {line:?}")))?;
        let mut x_min = None;
        let mut x_max = None;
        let mut n_x = None;
        let mut p_max = None;
        let mut n_p = None;
        for token in body.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Data(format!("malformed header token {token:?}")))?;
            let bad = || Error::Data(format!("cannot parse {key}={value}"));
            match key {
                "x_min" => x_min = Some(value.parse::<f64>().map_err(|_| bad())?),
                "x_max" => x_max = Some(value.parse::<f64>().map_err(|_| bad())?),
                "n_x" => n_x = Some(value.parse::<usize>().map_err(|_| bad())?),
                "p_max" => p_max = Some(value.parse::<f64>().map_err(|_| bad())?),
                "n_p" => n_p = Some(value.parse::<usize>().map_err(|_| bad())?),
                _ => return Err(Error::Data(format!("unknown header key {key:?}"))),
            }
        }
        match (x_min, x_max, n_x, p_max, n_p) {
            (Some(a), Some(b), Some(c), Some(d), Some(e)) => Grid1D::new(a, b, c, d, e),
            _ => Err(Error::Data(format!("incomplete grid header {line:?}"))),
        }
    }
}

/// Mass and action-scale constants of the particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleParams {
    pub m: f64,
    pub sigma: f64,
}

impl ParticleParams {
    pub fn new(m: f64, sigma: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) || !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Parameter(format!(
                "particle parameters must be positive, got m = {m}, sigma = {sigma}"
            )));
        }
        Ok(ParticleParams { m, sigma })
    }
}

impl Default for ParticleParams {
    fn default() -> Self {
        ParticleParams { m: 1.0, sigma: 1.0 }
    }
}

/// Real phase-space density, row-major with one row of `n_p` momenta per x.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceField {
    grid: Grid1D,
    values: Vec<f64>,
}

impl PhaseSpaceField {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_x * grid.n_p {
            return Err(Error::Structural(format!(
                "field has {} values, grid needs {}×{}",
                values.len(),
                grid.n_x,
                grid.n_p
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("field contains non-finite values".into()));
        }
        Ok(PhaseSpaceField { grid, values })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        PhaseSpaceField { grid, values: vec![0.0; grid.n_x * grid.n_p] }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.n_x * grid.n_p);
        for i in 0..grid.n_x {
            let x = grid.x(i);
            for j in 0..grid.n_p {
                values.push(f(x, grid.p(j)));
            }
        }
        PhaseSpaceField { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_p + j]
    }
    pub fn row(&self, i: usize) -> &[f64] {
        let n_p = self.grid.n_p;
        &self.values[i * n_p..(i + 1) * n_p]
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// `Σ g(x,p) f dx dp`.
    pub fn expectation(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.grid.n_x {
            let x = self.grid.x(i);
            for (j, &v) in self.row(i).iter().enumerate() {
                sum += g(x, self.grid.p(j)) * v;
            }
        }
        sum * self.grid.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_area()).sqrt()
    }

    /// L2 distance; panics if the grids differ.
    pub fn l2_distance(&self, other: &PhaseSpaceField) -> f64 {
        assert_eq!(self.grid, other.grid, "l2_distance on different grids");
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (s * self.grid.cell_area()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `n(x) = Σ_p f dp`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = self.grid.dp();
        (0..self.grid.n_x)
            .map(|i| self.row(i).iter().sum::<f64>() * dp)
            .collect()
    }

    /// `ν(p) = Σ_x f dx`.
    pub fn p_marginal(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        let mut nu = vec![0.0; self.grid.n_p];
        for i in 0..self.grid.n_x {
            for (acc, v) in nu.iter_mut().zip(self.row(i)) {
                *acc += v;
            }
        }
        nu.iter_mut().for_each(|v| *v *= dx);
        nu
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &PhaseSpaceField, b: f64) -> PhaseSpaceField {
        assert_eq!(self.grid, other.grid, "combine on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| a * u + b * v)
            .collect();
        PhaseSpaceField { grid: self.grid, values }
    }

    pub fn scaled(&self, a: f64) -> PhaseSpaceField {
        PhaseSpaceField { grid: self.grid, values: self.values.iter().map(|v| a * v).collect() }
    }

    /// Rescaled to unit mass.
    pub fn normalized(&self) -> Result<PhaseSpaceField> {
        let mass = self.mass();
        if !(mass > 0.0) {
            return Err(Error::Data(format!("cannot normalize a field with mass {mass}")));
        }
        Ok(self.scaled(1.0 / mass))
    }

    /// Checks the invariants of a classical probability density.
    pub fn validate_density(&self) -> Result<()> {
        let min = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_LIMIT {
            return Err(Error::Data(format!("density reaches {min} < -{NEGATIVE_LIMIT}")));
        }
        let mass = self.mass();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Data(format!("total mass {mass} differs from 1")));
        }
        Ok(())
    }

    /// Fraction of `Σ|f|` sitting in momentum bins with `|p| ≥ 0.9·p_max`.
    pub fn alias_fraction(&self) -> f64 {
        let limit = ALIAS_BAND * self.grid.p_max;
        let outer: Vec<bool> = (0..self.grid.n_p).map(|j| self.grid.p(j).abs() >= limit).collect();
        let mut band = 0.0;
        let mut total = 0.0;
        for i in 0..self.grid.n_x {
            for (j, v) in self.row(i).iter().enumerate() {
                total += v.abs();
                if outer[j] {
                    band += v.abs();
                }
            }
        }
        if total > 0.0 {
            band / total
        } else {
            0.0
        }
    }

    /// Runtime error when the outer momentum band holds more than `1e-6` of the mass.
    pub fn check_aliasing(&self) -> Result<()> {
        let frac = self.alias_fraction();
        if frac > ALIAS_MASS_LIMIT {
            return Err(Error::Runtime(format!(
                "aliasing monitor: {frac:e} of the mass sits in |p| >= {ALIAS_BAND}·p_max"
            )));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.grid.csv_header())?;
        for i in 0..self.grid.n_x {
            write_row(&mut w, self.row(i))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (grid, rows) = read_grid_csv(r)?;
        if rows.len() != grid.n_x || rows.iter().any(|row| row.len() != grid.n_p) {
            return Err(Error::Structural("CSV body does not match the grid header".into()));
        }
        PhaseSpaceField::new(grid, rows.concat())
    }
}

pub(crate) fn write_row<W: Write>(w: &mut W, row: &[f64]) -> std::io::Result<()> {
    let mut line = String::with_capacity(row.len() * 24);
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            line.push(',');
        }
        line.push_str(&format!("{v:e}"));
    }
    writeln!(w, "{line}")
}

pub(crate) fn read_grid_csv<R: BufRead>(r: R) -> Result<(Grid1D, Vec<Vec<f64>>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Data("empty CSV".into()))?
        .map_err(|e| Error::Data(e.to_string()))?;
    let grid = Grid1D::parse_csv_header(&header)?;
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Data(e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = trimmed
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Data(format!("line {}: {e}", lineno + 2)))?;
        rows.push(row);
    }
    Ok((grid, rows))
}

/// Complex amplitude `f̃(x, k)`, rows over x, centered k ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct KSpaceField {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl KSpaceField {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_x * grid.n_p {
            return Err(Error::Structural(format!(
                "k-space field has {} values, grid needs {}×{}",
                values.len(),
                grid.n_x,
                grid.n_p
            )));
        }
        Ok(KSpaceField { grid, values })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn get(&self, i: usize, l: usize) -> Complex64 {
        self.values[i * self.grid.n_p + l]
    }
    pub fn row(&self, i: usize) -> &[Complex64] {
        let n_p = self.grid.n_p;
        &self.values[i * n_p..(i + 1) * n_p]
    }

    /// Largest `|f̃(x,−k) − conj f̃(x,k)|`; the unpaired row `k = −n_p·dk/2` must be real.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.grid.n_x {
            let row = self.row(i);
            for l in 0..self.grid.n_p {
                let c = self.grid.conjugate_k_index(l);
                worst = worst.max((row[c] - row[l].conj()).norm());
            }
        }
        worst
    }

    /// Parseval form `Σ|f̃|² dx dk / 2π`.
    pub fn parseval_norm_sq(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx() * self.grid.dk()
            / (2.0 * PI)
    }
}

#[inline]
fn parity_sign(s: isize) -> f64 {
    if s.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `f̃(x,k) = Σ_p e^{ikp} f(x,p) dp` on the conjugate lattice.
pub fn fourier_p_to_k(f: &PhaseSpaceField) -> KSpaceField {
    let grid = f.grid;
    let n_p = grid.n_p;
    let fft = FftPair::new(n_p);
    let dp = grid.dp();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.n_x * n_p];
    out.par_chunks_mut(n_p).enumerate().for_each(|(i, dst)| {
        let mut buf: Vec<Complex64> = f.row(i).iter().map(|&v| Complex64::new(v, 0.0)).collect();
        // positive exponent: e^{ik_s p_j} = (-1)^s e^{2πi s j / n}
        fft.inverse.process(&mut buf);
        for (l, z) in dst.iter_mut().enumerate() {
            let s = l as isize - (n_p / 2) as isize;
            let m = s.rem_euclid(n_p as isize) as usize;
            *z = buf[m] * (dp * parity_sign(s));
        }
    });
    KSpaceField { grid, values: out }
}

/// Inverse of [`fourier_p_to_k`]; rejects amplitudes that are not Hermitian in k.
pub fn fourier_k_to_p(ft: &KSpaceField) -> Result<PhaseSpaceField> {
    let defect = ft.hermitian_defect();
    if defect > HERMITIAN_TOLERANCE {
        return Err(Error::Data(format!(
            "k-space field violates Hermitian symmetry by {defect:e}"
        )));
    }
    Ok(k_to_p_unchecked(ft))
}

pub(crate) fn k_to_p_unchecked(ft: &KSpaceField) -> PhaseSpaceField {
    let grid = ft.grid;
    let n_p = grid.n_p;
    let fft = FftPair::new(n_p);
    let scale = grid.dk() / (2.0 * PI);
    let mut out = vec![0.0; grid.n_x * n_p];
    out.par_chunks_mut(n_p).enumerate().for_each(|(i, dst)| {
        let row = ft.row(i);
        let mut buf = vec![Complex64::new(0.0, 0.0); n_p];
        for (l, z) in row.iter().enumerate() {
            let s = l as isize - (n_p / 2) as isize;
            let m = s.rem_euclid(n_p as isize) as usize;
            buf[m] = *z * parity_sign(s);
        }
        fft.forward.process(&mut buf);
        for (v, z) in dst.iter_mut().zip(&buf) {
            *v = z.re * scale;
        }
    });
    PhaseSpaceField { grid, values: out }
}

/// Local densities `n`, `j`, `ε`, `χ` of a phase-space field.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentFields {
    pub grid: Grid1D,
    pub n: Vec<f64>,
    pub j: Vec<f64>,
    pub eps: Vec<f64>,
    pub chi: Vec<f64>,
}

impl MomentFields {
    pub fn new(grid: Grid1D, n: Vec<f64>, j: Vec<f64>, eps: Vec<f64>, chi: Vec<f64>) -> Result<Self> {
        let n_x = grid.n_x;
        if [n.len(), j.len(), eps.len(), chi.len()].iter().any(|&l| l != n_x) {
            return Err(Error::Structural(format!("moment arrays must have length n_x = {n_x}")));
        }
        Ok(MomentFields { grid, n, j, eps, chi })
    }

    pub fn zeros(grid: Grid1D) -> Self {
        let z = vec![0.0; grid.n_x];
        MomentFields { grid, n: z.clone(), j: z.clone(), eps: z.clone(), chi: z }
    }

    pub fn mass(&self) -> f64 {
        self.n.iter().sum::<f64>() * self.grid.dx()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.grid.csv_header())?;
        writeln!(w, "# columns n,j,eps,chi")?;
        for i in 0..self.grid.n_x {
            write_row(&mut w, &[self.n[i], self.j[i], self.eps[i], self.chi[i]])?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let (grid, rows) = read_grid_csv(r)?;
        if rows.len() != grid.n_x || rows.iter().any(|row| row.len() != 4) {
            return Err(Error::Structural("moment CSV needs n_x rows of 4 columns".into()));
        }
        let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<_>>();
        MomentFields::new(grid, col(0), col(1), col(2), col(3))
    }
}

/// `n = ∫f dp`, `j = ∫(p/m) f dp`, `ε = ∫(p²/2m) f dp`, `χ = ∫p³ f dp/(2m)²`.
pub fn moments(f: &PhaseSpaceField, params: &ParticleParams) -> MomentFields {
    let grid = f.grid;
    let dp = grid.dp();
    let m = params.m;
    let ps = grid.p_points();
    let mut out = MomentFields::zeros(grid);
    for i in 0..grid.n_x {
        let (mut n, mut j, mut e, mut c) = (0.0, 0.0, 0.0, 0.0);
        for (&p, &v) in ps.iter().zip(f.row(i)) {
            n += v;
            j += p * v;
            e += p * p * v;
            c += p * p * p * v;
        }
        out.n[i] = n * dp;
        out.j[i] = j * dp / m;
        out.eps[i] = e * dp / (2.0 * m);
        out.chi[i] = c * dp / (4.0 * m * m);
    }
    out
}
