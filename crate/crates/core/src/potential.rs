//! External potentials `V(x)` with exact first and third derivatives.

use crate::error::{Error, Result};
use crate::grid::Grid1D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Free,
    /// `V = g·x`.
    Uniform { g: f64 },
    /// `V = m·ω²·x²/2`; the mass is stored so the potential is self-contained.
    Harmonic { omega: f64, m: f64 },
    /// `V = c2·x² + c3·x³ + c4·x⁴`.
    Quartic { c2: f64, c3: f64, c4: f64 },
    /// Hard walls at `±l/2`, `V = 0` between them.
    Box { l: f64 },
}

impl Potential {
    pub fn harmonic(omega: f64, m: f64) -> Result<Self> {
        if !(omega > 0.0) || !(m > 0.0) {
            return Err(Error::Parameter(format!(
                "harmonic potential needs omega > 0 and m > 0, got {omega}, {m}"
            )));
        }
        Ok(Potential::Harmonic { omega, m })
    }

    pub fn boxed(l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Parameter(format!("box width must be positive, got {l}")));
        }
        Ok(Potential::Box { l })
    }

    /// `V(x)`; infinite outside a box.
    pub fn v(&self, x: f64) -> f64 {
        match *self {
            Potential::Free => 0.0,
            Potential::Uniform { g } => g * x,
            Potential::Harmonic { omega, m } => 0.5 * m * omega * omega * x * x,
            Potential::Quartic { c2, c3, c4 } => x * x * (c2 + x * (c3 + x * c4)),
            Potential::Box { l } => {
                if x.abs() <= 0.5 * l {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `V′(x)`; zero inside a box (the walls act through reflection).
    pub fn dv(&self, x: f64) -> f64 {
        match *self {
            Potential::Free | Potential::Box { .. } => 0.0,
            Potential::Uniform { g } => g,
            Potential::Harmonic { omega, m } => m * omega * omega * x,
            Potential::Quartic { c2, c3, c4 } => x * (2.0 * c2 + x * (3.0 * c3 + x * 4.0 * c4)),
        }
    }

    pub fn d2v(&self, x: f64) -> f64 {
        match *self {
            Potential::Free | Potential::Box { .. } | Potential::Uniform { .. } => 0.0,
            Potential::Harmonic { omega, m } => m * omega * omega,
            Potential::Quartic { c2, c3, c4 } => 2.0 * c2 + x * (6.0 * c3 + x * 12.0 * c4),
        }
    }

    pub fn d3v(&self, x: f64) -> f64 {
        match *self {
            Potential::Quartic { c3, c4, .. } => 6.0 * c3 + 24.0 * c4 * x,
            _ => 0.0,
        }
    }

    pub fn is_box(&self) -> bool {
        matches!(self, Potential::Box { .. })
    }

    /// Largest `|V′|` over the coordinate lattice.
    pub fn max_abs_force(&self, grid: &Grid1D) -> f64 {
        (0..grid.n_x()).map(|i| self.dv(grid.x(i)).abs()).fold(0.0, f64::max)
    }

    pub fn sample(&self, grid: &Grid1D) -> Vec<f64> {
        grid.x_points().into_iter().map(|x| self.v(x)).collect()
    }

    pub fn sample_force(&self, grid: &Grid1D) -> Vec<f64> {
        grid.x_points().into_iter().map(|x| self.dv(x)).collect()
    }

    /// Lattice indices `(a, b)` of the walls `−l/2` and `+l/2`, which must sit on
    /// grid points strictly inside the periodic box.
    pub fn wall_indices(&self, grid: &Grid1D) -> Result<Option<(usize, usize)>> {
        let Potential::Box { l } = *self else {
            return Ok(None);
        };
        let a = grid.index_of(-0.5 * l);
        let b = grid.index_of(0.5 * l);
        match (a, b) {
            (Some(a), Some(b)) if b < grid.n_x() && b > a + 2 => Ok(Some((a, b))),
            _ => Err(Error::Configuration(format!(
                "box walls ±{} must fall on grid points inside [{}, {})",
                0.5 * l,
                grid.x_min(),
                grid.x_max()
            ))),
        }
    }
}
