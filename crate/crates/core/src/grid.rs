//! Spacetime grids and the continuity-equation check.
//!
//! The residual `∂_t P_tot + ∂_x J_tot` is formed with second-order central
//! differences at every grid node. The exact fields satisfy continuity, so the
//! residual is pure truncation error and shrinks by a factor of four when the
//! stencil step is halved.

use rayon::prelude::*;

use crate::emergence::EmergentField;
use crate::error::{invalid, Result};
use crate::wavemode::WaveMode;

/// Rectangular `(x, t)` node set, `nx × nt` nodes including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, nx: usize, t_min: f64, t_max: f64, nt: usize) -> Result<Self> {
        let grid = Self {
            x_min,
            x_max,
            nx,
            t_min,
            t_max,
            nt,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid over `[t_min, t_max]` whose x-range spans every mode's center
    /// `± k·σ(t)` over the whole time range.
    pub fn auto(modes: &[WaveMode], k: f64, nx: usize, t_min: f64, t_max: f64, nt: usize) -> Result<Self> {
        if modes.is_empty() {
            return Err(invalid("modes", "at least one mode is required"));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid("k", "must be positive and finite"));
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for m in modes {
            // the center is linear and the width monotone in |t|, so the
            // extremes sit at the ends or at t = 0
            for t in [t_min, t_max, 0.0_f64.clamp(t_min, t_max)] {
                lo = lo.min(m.center_at(t) - k * m.width_at(t));
                hi = hi.max(m.center_at(t) + k * m.width_at(t));
            }
        }
        Self::new(lo, hi, nx, t_min, t_max, nt)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 {
            return Err(invalid("nx", "must be at least 2"));
        }
        if self.nt < 2 {
            return Err(invalid("nt", "must be at least 2"));
        }
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_min < self.x_max) {
            return Err(invalid("x_min/x_max", "need finite x_min < x_max"));
        }
        if !(self.t_min.is_finite() && self.t_max.is_finite() && self.t_min < self.t_max) {
            return Err(invalid("t_min/t_max", "need finite t_min < t_max"));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dt(&self) -> f64 {
        (self.t_max - self.t_min) / (self.nt - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.x_max
        } else {
            self.x_min + i as f64 * self.dx()
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        if j + 1 == self.nt {
            self.t_max
        } else {
            self.t_min + j as f64 * self.dt()
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.nt
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes row-major with `t` outer and `x` inner.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.nt).flat_map(move |j| (0..self.nx).map(move |i| (self.x(i), self.t(j))))
    }

    /// Evaluates `f` at every node in parallel; the result is in
    /// [`Grid::nodes`] order regardless of scheduling.
    pub fn map<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(f64, f64) -> T + Sync,
    {
        (0..self.nt)
            .into_par_iter()
            .flat_map_iter(|j| {
                let t = self.t(j);
                let f = &f;
                (0..self.nx).map(move |i| f(self.x(i), t))
            })
            .collect()
    }
}

/// Central-difference continuity residual at every node of `grid`, with
/// stencil steps `hx` in space and `ht` in time.
pub fn continuity_residual(field: &EmergentField, grid: &Grid, hx: f64, ht: f64) -> Result<Vec<f64>> {
    if !(hx > 0.0 && ht > 0.0) {
        return Err(invalid("hx/ht", "stencil steps must be positive"));
    }
    Ok(grid.map(|x, t| {
        let dp_dt = (field.total_density(x, t + ht) - field.total_density(x, t - ht)) / (2.0 * ht);
        let dj_dx = (field.total_current(x + hx, t) - field.total_current(x - hx, t)) / (2.0 * hx);
        dp_dt + dj_dx
    }))
}

/// Root-mean-square of a residual field.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    /// Stencil steps `(hx, ht)` per refinement level.
    pub steps: Vec<(f64, f64)>,
    /// RMS residual per level.
    pub norms: Vec<f64>,
    /// `norms[k] / norms[k+1]`; close to 4 for second-order convergence.
    pub ratios: Vec<f64>,
}

impl ContinuityReport {
    /// Whether every refinement ratio lies in `[lo, hi]`.
    pub fn converges_within(&self, lo: f64, hi: f64) -> bool {
        !self.ratios.is_empty() && self.ratios.iter().all(|r| (lo..=hi).contains(r))
    }
}

/// Continuity residual norms with the stencil starting at the grid spacing
/// and halved `levels − 1` times.
pub fn continuity_convergence(field: &EmergentField, grid: &Grid, levels: usize) -> Result<ContinuityReport> {
    if levels < 2 {
        return Err(invalid("levels", "need at least two refinement levels"));
    }
    let mut steps = Vec::with_capacity(levels);
    let mut norms = Vec::with_capacity(levels);
    let (mut hx, mut ht) = (grid.dx(), grid.dt());
    for _ in 0..levels {
        norms.push(rms(&continuity_residual(field, grid, hx, ht)?));
        steps.push((hx, ht));
        hx *= 0.5;
        ht *= 0.5;
    }
    let ratios = norms.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(ContinuityReport {
        steps,
        norms,
        ratios,
    })
}
