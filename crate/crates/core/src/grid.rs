//! Uniform grids on the half-line `[0, L]` and the half-plane strip
//! `[0, Lx] x [0, Ly)` (periodic in `y`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 16;

/// Nodes `x_j = j h`, `j = 0..n`, with `x_{n-1} = L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfLineGrid {
    pub n: usize,
    pub h: f64,
}

impl HalfLineGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::Config(format!("grid needs n >= {MIN_POINTS}, got {n}")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Config(format!("grid length must be positive, got {length}")));
        }
        Ok(Self {
            n,
            h: length / (n - 1) as f64,
        })
    }

    pub fn with_spacing(n: usize, h: f64) -> Result<Self> {
        Self::new(n, h * (n - 1) as f64)
    }

    pub fn length(&self) -> f64 {
        self.h * (self.n - 1) as f64
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.h
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Same length, spacing halved (`2n - 1` nodes; old nodes are the even ones).
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n - 1,
            h: 0.5 * self.h,
        }
    }

    pub fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Shape(format!(
                "{what} has {len} samples, grid has {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// `nx` nodes in `x` as in [`HalfLineGrid`]; `ny` cells of width `hy = Ly / ny`
/// in the periodic `y` direction. Fields are stored row-major with `y` fastest:
/// index `i * ny + j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlaneGrid {
    pub x: HalfLineGrid,
    pub ny: usize,
    pub hy: f64,
}

impl HalfPlaneGrid {
    pub fn new(nx: usize, lx: f64, ny: usize, ly: f64) -> Result<Self> {
        let x = HalfLineGrid::new(nx, lx)?;
        if ny < 2 || !ny.is_power_of_two() {
            return Err(Error::Config(format!("ny must be a power of two >= 2, got {ny}")));
        }
        if !(ly > 0.0) || !ly.is_finite() {
            return Err(Error::Config(format!("Ly must be positive, got {ly}")));
        }
        Ok(Self {
            x,
            ny,
            hy: ly / ny as f64,
        })
    }

    pub fn nx(&self) -> usize {
        self.x.n
    }

    pub fn hx(&self) -> f64 {
        self.x.h
    }

    pub fn ly(&self) -> f64 {
        self.hy * self.ny as f64
    }

    pub fn len(&self) -> usize {
        self.x.n * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy
    }

    pub fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Shape(format!(
                "{what} has {len} samples, grid has {} x {}",
                self.nx(),
                self.ny
            )));
        }
        Ok(())
    }
}
