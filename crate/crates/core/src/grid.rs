//! Uniform frequency grids for the two-photon spectral amplitude.

use crate::error::{Error, Result};

/// Uniform, strictly ascending signal/idler angular-frequency axes (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub omega_s: Vec<f64>,
    pub omega_i: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(
        omega_s_min: f64,
        omega_s_max: f64,
        n_s: usize,
        omega_i_min: f64,
        omega_i_max: f64,
        n_i: usize,
    ) -> Result<Self> {
        if n_s < 2 || n_i < 2 {
            return Err(Error::InvalidParameter("grid needs at least 2x2 points".into()));
        }
        if !(omega_s_min < omega_s_max && omega_i_min < omega_i_max) {
            return Err(Error::InvalidParameter("grid axes must be ascending".into()));
        }
        Ok(FrequencyGrid {
            omega_s: linspace(omega_s_min, omega_s_max, n_s),
            omega_i: linspace(omega_i_min, omega_i_max, n_i),
        })
    }

    /// Square grid of `n` points per axis, `center ± half_span` on each axis.
    pub fn centered(center_s: f64, center_i: f64, half_span: f64, n: usize) -> Result<Self> {
        Self::new(
            center_s - half_span,
            center_s + half_span,
            n,
            center_i - half_span,
            center_i + half_span,
            n,
        )
    }

    pub fn len_s(&self) -> usize {
        self.omega_s.len()
    }

    pub fn len_i(&self) -> usize {
        self.omega_i.len()
    }

    /// Axis steps (uniform by construction).
    pub fn steps(&self) -> (f64, f64) {
        (
            self.omega_s[1] - self.omega_s[0],
            self.omega_i[1] - self.omega_i[0],
        )
    }

    /// Same extent with midpoints inserted (2n−1 per axis); every node of
    /// the original grid is shared with the refined one.
    pub fn refined(&self) -> Self {
        FrequencyGrid {
            omega_s: linspace(
                self.omega_s[0],
                *self.omega_s.last().unwrap(),
                2 * self.omega_s.len() - 1,
            ),
            omega_i: linspace(
                self.omega_i[0],
                *self.omega_i.last().unwrap(),
                2 * self.omega_i.len() - 1,
            ),
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + i as f64 * step).collect()
}
