//! Scenario dimensions and probability tables `p(c|x,y,z)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum_c p(c|x,y,z) = 1` accepted by witness evaluation.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// Sizes of the preparation, setting and outcome alphabets.
///
/// Outcome indices are 0-based inside the library; files and reports use
/// `c = 1..=nc`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub nc: usize,
}

impl Dims {
    pub const fn new(nx: usize, ny: usize, nz: usize, nc: usize) -> Self {
        Self { nx, ny, nz, nc }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz * self.nc
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of `(x, y, z)` cell groups.
    pub fn groups(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    /// Flat index; outcomes of one `(z, x, y)` group are contiguous.
    #[inline]
    pub fn index(&self, c: usize, x: usize, y: usize, z: usize) -> usize {
        debug_assert!(c < self.nc && x < self.nx && y < self.ny && z < self.nz);
        ((z * self.nx + x) * self.ny + y) * self.nc + c
    }

    /// Start of the contiguous outcome block for group `(x, y, z)`.
    #[inline]
    pub fn group_offset(&self, x: usize, y: usize, z: usize) -> usize {
        self.index(0, x, y, z)
    }

    /// All `(x, y, z)` triples in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.nz).flat_map(move |z| {
            (0..self.nx).flat_map(move |x| (0..self.ny).map(move |y| (x, y, z)))
        })
    }

    pub fn check_same(&self, other: &Dims) -> Result<()> {
        if self != other {
            return Err(Error::DimensionMismatch(format!(
                "{self} vs {other}"
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for Dims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "(nx={}, ny={}, nz={}, nc={})",
            self.nx, self.ny, self.nz, self.nc
        )
    }
}

/// Outcome distribution `p(c|x,y,z)` for every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    dims: Dims,
    values: Vec<f64>,
}

impl ProbabilityTable {
    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            values: vec![0.0; dims.len()],
        }
    }

    pub fn from_values(dims: Dims, values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for dims {dims}",
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    /// Every outcome equally likely.
    pub fn uniform(dims: Dims) -> Self {
        Self {
            dims,
            values: vec![1.0 / dims.nc as f64; dims.len()],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, c: usize, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.dims.index(c, x, y, z)]
    }

    pub fn set(&mut self, c: usize, x: usize, y: usize, z: usize, p: f64) {
        let i = self.dims.index(c, x, y, z);
        self.values[i] = p;
    }

    /// Outcome distribution of one cell group.
    pub fn group(&self, x: usize, y: usize, z: usize) -> &[f64] {
        let o = self.dims.group_offset(x, y, z);
        &self.values[o..o + self.dims.nc]
    }

    /// Checks `sum_c p = 1` in every group within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        for (x, y, z) in self.dims.cells() {
            let sum: f64 = self.group(x, y, z).iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::UnnormalizedTable { x, y, z, sum });
            }
        }
        Ok(())
    }

    /// `lambda * self + (1 - lambda) * other`
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        self.dims.check_same(&other.dims)?;
        Ok(Self {
            dims: self.dims,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        })
    }
}
