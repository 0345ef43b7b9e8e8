//! Fourth-order central finite differences on the periodic x lattice.
//!
//! Action functions `S` are allowed to wind: `S(x + L) = S(x) + W` with the
//! winding `W` inferred from the end points, so a plane action wave `p0·x`
//! differentiates exactly to `p0` across the seam.

#[inline]
fn wrap(i: isize, n: usize) -> (usize, isize) {
    let n_i = n as isize;
    let q = i.div_euclid(n_i);
    (i.rem_euclid(n_i) as usize, q)
}

/// Winding `W` with `S[i + n] ≈ S[i] + W`, from a cubic extrapolation of the
/// last four samples across the seam. Exact for cubic `S`, `O(h⁴)` for
/// smooth periodic parts.
pub(crate) fn winding(s: &[f64]) -> f64 {
    let n = s.len();
    let next = 4.0 * s[n - 1] - 6.0 * s[n - 2] + 4.0 * s[n - 3] - s[n - 4];
    next - s[0]
}

/// `df/dx` for a periodic sequence.
pub(crate) fn d1_periodic(f: &[f64], h: f64) -> Vec<f64> {
    d1_quasi_periodic(f, h, 0.0)
}

/// `dS/dx` for a sequence that satisfies `S[i + n] = S[i] + w`.
pub(crate) fn d1_quasi_periodic(s: &[f64], h: f64, w: f64) -> Vec<f64> {
    let n = s.len();
    let at = |i: isize| {
        let (k, q) = wrap(i, n);
        s[k] + w * q as f64
    };
    (0..n as isize)
        .map(|i| (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * h))
        .collect()
}

/// `d²f/dx²` for a periodic sequence.
#[cfg(test)]
pub(crate) fn d2_periodic(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let at = |i: isize| f[wrap(i, n).0];
    (0..n as isize)
        .map(|i| {
            (-at(i + 2) + 16.0 * at(i + 1) - 30.0 * at(i) + 16.0 * at(i - 1) - at(i - 2))
                / (12.0 * h * h)
        })
        .collect()
}

/// `dS/dx` with the winding taken from `s` itself.
#[cfg(test)]
pub(crate) fn gradient(s: &[f64], h: f64) -> Vec<f64> {
    d1_quasi_periodic(s, h, winding(s))
}
