//! Uniform rectangular configuration-space grids and complex functions on them.
//!
//! Grids are periodic: axis `j` holds `n_j` points `lo_j + k h_j` with
//! `h_j = (hi_j - lo_j) / n_j`, so the same grid serves the spectral solver.
//! Integrals use the trapezoidal rule, which on a periodic grid is the plain
//! sum times the cell volume.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: Vec<usize>,
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.len() != n.len() {
            return Err(Error::invalid("grid box and shape must have equal non-zero rank"));
        }
        for j in 0..lo.len() {
            if !(lo[j].is_finite() && hi[j].is_finite() && hi[j] > lo[j]) {
                return Err(Error::invalid(format!("grid axis {j} has an empty box")));
            }
            if !n[j].is_power_of_two() || n[j] < 2 {
                return Err(Error::invalid(format!(
                    "grid axis {j}: {} points is not a power of two",
                    n[j]
                )));
            }
        }
        Ok(Self { lo, hi, n })
    }

    /// Same box and resolution on every axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.n[axis] as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.spacing(j)).product()
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        (0..self.n[axis])
            .map(|k| self.lo[axis] + k as f64 * h)
            .collect()
    }

    /// Coordinates of the point with flat (row-major, last axis fastest) index.
    pub fn point(&self, index: usize, out: &mut [f64]) {
        let mut rest = index;
        for j in (0..self.dim()).rev() {
            let k = rest % self.n[j];
            rest /= self.n[j];
            out[j] = self.lo[j] + k as f64 * self.spacing(j);
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut x = vec![0.0; self.dim()];
        (0..self.len())
            .map(|i| {
                self.point(i, &mut x);
                x.clone()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid("value count does not match grid size"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, values }
    }

    /// Samples `f` at every grid point, in parallel over chunks.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let d = grid.dim();
        let values = (0..grid.len())
            .into_par_iter()
            .with_min_len(256)
            .map_init(
                || vec![0.0; d],
                |x, i| {
                    grid.point(i, x);
                    f(x)
                },
            )
            .collect();
        Self { grid, values }
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn overlap(&self, other: &GridFunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn l2_distance(&self, other: &GridFunction) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `α self + β other`.
    pub fn combine(&self, alpha: Complex64, other: &GridFunction, beta: Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
        })
    }

    /// `|ψ|²` mass within `band` cells of the box faces, as a fraction of the
    /// total mass.
    pub fn boundary_mass_fraction(&self, band_fraction: f64) -> f64 {
        let total: f64 = self.values.iter().map(|v| v.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let d = self.grid.dim();
        let shape = self.grid.shape().to_vec();
        let bands: Vec<usize> = shape
            .iter()
            .map(|&n| ((n as f64 * band_fraction).ceil() as usize).max(1))
            .collect();
        let mut edge = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let mut rest = i;
            let mut on_edge = false;
            for j in (0..d).rev() {
                let k = rest % shape[j];
                rest /= shape[j];
                if k < bands[j] || k >= shape[j] - bands[j] {
                    on_edge = true;
                }
            }
            if on_edge {
                edge += v.norm_sqr();
            }
        }
        edge / total
    }

    /// CSV export. One-dimensional functions get columns `x, re, im, abs2`;
    /// higher dimensions are written flat (row-major, last axis fastest) as
    /// `re, im, abs2` and need the JSON sidecar from [`GridFunction::sidecar_json`].
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        if self.grid.dim() == 1 {
            writeln!(w, "x,re,im,abs2")?;
            for (x, v) in self.grid.axis(0).iter().zip(&self.values) {
                writeln!(w, "{}", crate::format_row(&[*x, v.re, v.im, v.norm_sqr()]))?;
            }
        } else {
            writeln!(w, "re,im,abs2")?;
            for v in &self.values {
                writeln!(w, "{}", crate::format_row(&[v.re, v.im, v.norm_sqr()]))?;
            }
        }
        Ok(())
    }

    pub fn sidecar_json(&self) -> String {
        serde_json::json!({
            "lo": self.grid.lo(),
            "hi": self.grid.hi(),
            "shape": self.grid.shape(),
            "layout": "row-major, last axis fastest",
            "columns": ["re", "im", "abs2"],
        })
        .to_string()
    }
}

/// Trapezoidal L² distance between two grid functions.
pub fn l2_distance(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.l2_distance(g)
}
