//! Distance of a history of phase-space fields from a shape-preserving family.

use crate::error::{Error, Result};
use crate::grid::{PhaseSpaceField, DENSITY_FLOOR};
use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub field: PhaseSpaceField,
}

/// Family against which each snapshot is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    /// `exp` of a negative-definite quadratic form in `(x, p)`.
    Gaussian,
    /// `n(x)·g(p − p*(x))` with one common profile width.
    Action,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    /// `(t, defect)` per snapshot.
    pub series: Vec<(f64, f64)>,
    pub max: f64,
}

impl CoherenceReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,defect")?;
        for (t, d) in &self.series {
            writeln!(w, "{t:e},{d:e}")?;
        }
        Ok(())
    }
}

/// Largest normalized L2 misfit between a snapshot and its best-fit member of
/// `template`, over the history.
pub fn coherence_defect(history: &[Snapshot], template: Template) -> Result<CoherenceReport> {
    if history.len() < 2 {
        return Err(Error::Structural("coherence_defect needs at least two snapshots".into()));
    }
    let mut series = Vec::with_capacity(history.len());
    for snap in history {
        let d = match template {
            Template::Gaussian => gaussian_defect(&snap.field)?,
            Template::Action => action_defect(&snap.field)?,
        };
        series.push((snap.t, d));
    }
    let max = series.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(CoherenceReport { series, max })
}

fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Fits `exp(a·φ)` with `φ = (1, ξ, η, ξ², ξη, η²)` in standardized
/// coordinates by Levenberg–Marquardt, starting from the moment match.
fn gaussian_defect(f: &PhaseSpaceField) -> Result<f64> {
    let grid = *f.grid();
    let mass = f.mass();
    if !(mass > 0.0) {
        return Err(Error::Numerical("cannot fit a Gaussian to a field without mass".into()));
    }
    let mx = f.expectation(|x, _| x) / mass;
    let mp = f.expectation(|_, p| p) / mass;
    let vx = f.expectation(|x, _| (x - mx) * (x - mx)) / mass;
    let vp = f.expectation(|_, p| (p - mp) * (p - mp)) / mass;
    let cxp = f.expectation(|x, p| (x - mx) * (p - mp)) / mass;
    if !(vx > 0.0 && vp > 0.0) {
        return Err(Error::Numerical("degenerate second moments in Gaussian fit".into()));
    }
    let (sx, sp) = (vx.sqrt(), vp.sqrt());
    let rho = (cxp / (sx * sp)).clamp(-0.99, 0.99);
    let q = 1.0 - rho * rho;
    let mut a = vec![
        (mass / (2.0 * std::f64::consts::PI * sx * sp * q.sqrt())).ln(),
        0.0,
        0.0,
        -0.5 / q,
        rho / q,
        -0.5 / q,
    ];
    let xs: Vec<f64> = (0..grid.n_x()).map(|i| (grid.x(i) - mx) / sx).collect();
    let ps: Vec<f64> = (0..grid.n_p()).map(|j| (grid.p(j) - mp) / sp).collect();
    let basis = |i: usize, j: usize| {
        let (x, p) = (xs[i], ps[j]);
        [1.0, x, p, x * x, x * p, p * p]
    };
    let data = f.values();
    let n_p = grid.n_p();
    let cost_of = |a: &[f64]| -> f64 {
        let mut c = 0.0;
        for i in 0..xs.len() {
            for j in 0..n_p {
                let phi = basis(i, j);
                let e: f64 = phi.iter().zip(a).map(|(u, v)| u * v).sum();
                let r = e.exp() - data[i * n_p + j];
                c += r * r;
            }
        }
        c
    };
    let norm_sq: f64 = data.iter().map(|v| v * v).sum();
    let mut cost = cost_of(&a);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        if cost <= 1e-32 * norm_sq {
            break;
        }
        let mut jtj = vec![vec![0.0; 6]; 6];
        let mut jtr = vec![0.0; 6];
        for i in 0..xs.len() {
            for j in 0..n_p {
                let phi = basis(i, j);
                let e: f64 = phi.iter().zip(&a).map(|(u, v)| u * v).sum();
                let model = e.exp();
                let r = model - data[i * n_p + j];
                for k in 0..6 {
                    let jk = model * phi[k];
                    jtr[k] += jk * r;
                    for l in k..6 {
                        jtj[k][l] += jk * model * phi[l];
                    }
                }
            }
        }
        for k in 0..6 {
            for l in 0..k {
                jtj[k][l] = jtj[l][k];
            }
        }
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj.clone();
            for k in 0..6 {
                m[k][k] *= 1.0 + lambda;
            }
            let rhs: Vec<f64> = jtr.iter().map(|v| -v).collect();
            let Some(delta) = solve_small(m, rhs) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = a.iter().zip(&delta).map(|(u, d)| u + d).collect();
            let c = cost_of(&trial);
            if c.is_finite() && c < cost {
                let rel = (cost - c) / cost;
                a = trial;
                cost = c;
                lambda = (lambda / 3.0).max(1e-12);
                improved = rel > 1e-14;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    let definite = a[3] < 0.0 && 4.0 * a[3] * a[5] - a[4] * a[4] > 0.0;
    if !cost.is_finite() || a.iter().any(|v| !v.is_finite()) || !definite {
        return Err(Error::Numerical("Gaussian template fit did not converge".into()));
    }
    Ok((cost / norm_sq).sqrt())
}

/// Per-column mass and ridge, shared profile width chosen by golden section.
fn action_defect(f: &PhaseSpaceField) -> Result<f64> {
    let grid = *f.grid();
    let (n_x, n_p) = (grid.n_x(), grid.n_p());
    let dp = grid.dp();
    let data = f.values();
    let mut columns = Vec::with_capacity(n_x);
    for i in 0..n_x {
        let row = f.row(i);
        let mass: f64 = row.iter().sum::<f64>() * dp;
        if mass <= DENSITY_FLOOR {
            columns.push(None);
            continue;
        }
        let jm = (0..n_p).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap_or(0);
        let l = row[(jm + n_p - 1) % n_p];
        let c = row[jm];
        let r = row[(jm + 1) % n_p];
        let den = l - 2.0 * c + r;
        let off = if den < 0.0 { (0.5 * (l - r) / den).clamp(-0.5, 0.5) } else { 0.0 };
        columns.push(Some((mass, grid.p(jm) + off * dp)));
    }
    let ps = grid.p_points();
    let cost_of = |w: f64| -> f64 {
        let mut c = 0.0;
        let mut prof = vec![0.0; n_p];
        for (i, col) in columns.iter().enumerate() {
            match col {
                None => {
                    c += data[i * n_p..(i + 1) * n_p].iter().map(|v| v * v).sum::<f64>();
                }
                Some((mass, center)) => {
                    for (g, p) in prof.iter_mut().zip(&ps) {
                        let z = (p - center) / w;
                        *g = (-0.5 * z * z).exp();
                    }
                    let norm = prof.iter().sum::<f64>() * dp;
                    for j in 0..n_p {
                        let r = mass * prof[j] / norm - data[i * n_p + j];
                        c += r * r;
                    }
                }
            }
        }
        c
    };
    let (mut lo, mut hi) = ((0.3 * dp).ln(), (0.5 * grid.p_max()).ln());
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c1 = hi - phi * (hi - lo);
    let mut c2 = lo + phi * (hi - lo);
    let mut f1 = cost_of(c1.exp());
    let mut f2 = cost_of(c2.exp());
    for _ in 0..80 {
        if f1 < f2 {
            hi = c2;
            c2 = c1;
            f2 = f1;
            c1 = hi - phi * (hi - lo);
            f1 = cost_of(c1.exp());
        } else {
            lo = c1;
            c1 = c2;
            f1 = f2;
            c2 = lo + phi * (hi - lo);
            f2 = cost_of(c2.exp());
        }
    }
    let best = f1.min(f2);
    let norm_sq: f64 = data.iter().map(|v| v * v).sum();
    if !best.is_finite() || !(norm_sq > 0.0) {
        return Err(Error::Numerical("action template fit did not converge".into()));
    }
    Ok((best / norm_sq).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    #[test]
    fn exact_gaussians_have_no_defect() {
        let g = Grid1D::new(-6.0, 6.0, 64, 6.0, 64).unwrap();
        let history: Vec<Snapshot> = (0..3)
            .map(|k| {
                let t = k as f64 * 0.3;
                let (u, v) = (1.2 * t.cos(), -1.2 * t.sin());
                let field = PhaseSpaceField::from_fn(g, |x, p| {
                    let (a, b) = (x - u, p - v);
                    (-(1.3 * a * a + 0.4 * a * b + 0.9 * b * b)).exp()
                });
                Snapshot { t, field }
            })
            .collect();
        let rep = coherence_defect(&history, Template::Gaussian).unwrap();
        assert!(rep.max < 1e-10, "defect {}", rep.max);
        assert_eq!(rep.series.len(), 3);
    }

    #[test]
    fn non_gaussian_shapes_have_a_defect() {
        let g = Grid1D::new(-6.0, 6.0, 64, 6.0, 64).unwrap();
        let field = PhaseSpaceField::from_fn(g, |x, p| {
            (-(x - 1.5).powi(2) - p * p).exp() + (-(x + 1.5).powi(2) - p * p).exp()
        });
        let history = vec![Snapshot { t: 0.0, field: field.clone() }, Snapshot { t: 1.0, field }];
        assert!(coherence_defect(&history, Template::Gaussian).unwrap().max > 0.1);
        assert!(coherence_defect(&history[..1], Template::Gaussian).is_err());
    }
}
