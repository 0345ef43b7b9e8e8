//! FFT plumbing: cached plans, periodic translations and derivatives, and
//! row/column sweeps over row-major `n_x × n_p` arrays.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();

#[derive(Clone)]
pub(crate) struct FftPair {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = PLANNER
            .get_or_init(|| Mutex::new(FftPlanner::new()))
            .lock()
            .expect("fft planner poisoned");
        FftPair {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Signed FFT index: `m` for `m < n/2`, `m - n` otherwise (Nyquist is negative).
#[inline]
pub(crate) fn signed_index(m: usize, n: usize) -> isize {
    if m < n / 2 {
        m as isize
    } else {
        m as isize - n as isize
    }
}

/// Angular wave numbers in FFT order for `n` samples at spacing `h`.
pub(crate) fn wavenumbers(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|m| 2.0 * PI * signed_index(m, n) as f64 / (n as f64 * h))
        .collect()
}

/// Spectral translation `g(y) = f(y - a)` of real periodic sequences of one
/// fixed length and spacing.
pub(crate) struct Translator {
    fft: FftPair,
    kappa: Vec<f64>,
}

impl Translator {
    pub fn new(n: usize, h: f64) -> Self {
        Translator { fft: FftPair::new(n), kappa: wavenumbers(n, h) }
    }

    pub fn apply(&self, values: &mut [f64], a: f64, buf: &mut Vec<Complex64>) {
        let n = values.len();
        buf.clear();
        buf.extend(values.iter().map(|&v| Complex64::new(v, 0.0)));
        self.fft.forward.process(buf);
        for (m, z) in buf.iter_mut().enumerate() {
            let phase = self.kappa[m] * a;
            if m == n / 2 {
                *z *= phase.cos();
            } else {
                *z *= Complex64::from_polar(1.0, -phase);
            }
        }
        self.fft.inverse.process(buf);
        let scale = 1.0 / n as f64;
        for (v, z) in values.iter_mut().zip(buf.iter()) {
            *v = z.re * scale;
        }
    }
}

/// Spectral derivative of the given order of a real periodic sequence.
pub(crate) fn derivative(values: &[f64], h: f64, order: u32) -> Vec<f64> {
    let n = values.len();
    let fft = FftPair::new(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward.process(&mut buf);
    let kappa = wavenumbers(n, h);
    let i = Complex64::new(0.0, 1.0);
    for (m, z) in buf.iter_mut().enumerate() {
        if order % 2 == 1 && m == n / 2 {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z *= (i * kappa[m]).powu(order);
        }
    }
    fft.inverse.process(&mut buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}

/// Apply `op(row_index, row)` to every contiguous row of length `row_len`.
pub(crate) fn map_rows<F>(values: &mut [f64], row_len: usize, op: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    values
        .par_chunks_mut(row_len)
        .enumerate()
        .for_each(|(i, row)| op(i, row));
}

/// Apply `op(column_index, column)` to every column of a row-major
/// `n_rows × n_cols` array.
pub(crate) fn map_columns<F>(values: &mut [f64], n_rows: usize, n_cols: usize, op: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let mut t = vec![0.0; values.len()];
    for i in 0..n_rows {
        for j in 0..n_cols {
            t[j * n_rows + i] = values[i * n_cols + j];
        }
    }
    t.par_chunks_mut(n_rows)
        .enumerate()
        .for_each(|(j, col)| op(j, col));
    for i in 0..n_rows {
        for j in 0..n_cols {
            values[i * n_cols + j] = t[j * n_rows + i];
        }
    }
}
