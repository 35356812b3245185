//! Small real-valued filters.
//!
//! A [`Kernel2D`] stores `k * k` values row-major: index `y * k + x` with
//! `x` the column and `y` the row. Centred coordinates are measured from
//! `((k - 1) / 2, (k - 1) / 2)`, which is a half-integer for even `k`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::error::{EimError, Result};

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(EimError::NonFinite(i)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D {
    values: Vec<f64>,
}

impl Kernel1D {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(EimError::Shape("1D kernel must have at least one value".into()));
        }
        check_finite(&values)?;
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Mirror image about the centre, `f(-x)`.
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values }
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    values: Vec<f64>,
}

impl Kernel2D {
    /// Builds a `size x size` kernel from row-major values.
    pub fn new(size: usize, values: Vec<f64>) -> Result<Self> {
        if size == 0 {
            return Err(EimError::Shape("kernel size must be at least 1".into()));
        }
        if values.len() != size * size {
            return Err(EimError::CountMismatch {
                shape: vec![size, size],
                expected: size * size,
                found: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(Self { size, values })
    }

    /// Builds a kernel from rows; fails unless the rows form a square.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != size) {
            return Err(EimError::Shape(format!(
                "kernel is not square: {} rows but a row of length {}",
                size,
                bad.len()
            )));
        }
        Self::new(size, rows.concat())
    }

    pub fn zeros(size: usize) -> Result<Self> {
        Self::new(size, vec![0.0; size * size])
    }

    /// Unit value at column `x`, row `y`, zeros elsewhere.
    pub fn impulse_at(size: usize, x: usize, y: usize) -> Result<Self> {
        if x >= size || y >= size {
            return Err(EimError::Range(format!("({x}, {y}) outside a {size}x{size} kernel")));
        }
        let mut k = Self::zeros(size)?;
        k.values[y * size + x] = 1.0;
        Ok(k)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.size + x]
    }

    /// Centre of the grid in index units, `(k - 1) / 2`.
    pub fn center(&self) -> f64 {
        (self.size as f64 - 1.0) / 2.0
    }

    /// Centred coordinates of column `x`, row `y`.
    pub fn centered(&self, x: usize, y: usize) -> (f64, f64) {
        let c = self.center();
        (x as f64 - c, y as f64 - c)
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn dot(&self, other: &Kernel2D) -> Result<f64> {
        self.same_size(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }

    /// Rescales to unit energy; fails on the zero kernel.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(EimError::Domain("cannot normalise the zero kernel".into()));
        }
        Ok(self.scale(1.0 / n))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            size: self.size,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let k = self.size;
        let mut values = vec![0.0; k * k];
        for y in 0..k {
            for x in 0..k {
                values[x * k + y] = self.values[y * k + x];
            }
        }
        Self { size: k, values }
    }

    /// `max(f, 0)` elementwise.
    pub fn positive_part(&self) -> Self {
        Self {
            size: self.size,
            values: self.values.iter().map(|v| v.max(0.0)).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Kernel2D) -> Result<f64> {
        self.same_size(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    fn same_size(&self, other: &Kernel2D) -> Result<()> {
        if self.size != other.size {
            return Err(EimError::Shape(format!(
                "kernel sizes differ: {} vs {}",
                self.size, other.size
            )));
        }
        Ok(())
    }

    pub(crate) fn from_raw(size: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), size * size);
        Self { size, values }
    }

    fn zip_with(&self, other: &Kernel2D, f: impl Fn(f64, f64) -> f64) -> Kernel2D {
        assert_eq!(self.size, other.size, "kernel sizes differ");
        Kernel2D {
            size: self.size,
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        }
    }
}

// Arithmetic on mismatched sizes is a programming error and panics; use
// `dot` / `max_abs_diff` for checked access.
impl Add for &Kernel2D {
    type Output = Kernel2D;
    fn add(self, rhs: &Kernel2D) -> Kernel2D {
        self.zip_with(rhs, |a, b| a + b)
    }
}

impl Sub for &Kernel2D {
    type Output = Kernel2D;
    fn sub(self, rhs: &Kernel2D) -> Kernel2D {
        self.zip_with(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &Kernel2D {
    type Output = Kernel2D;
    fn mul(self, rhs: f64) -> Kernel2D {
        self.scale(rhs)
    }
}

impl fmt::Display for Kernel2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.values.chunks(self.size) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.6}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(Kernel2D::new(0, vec![]), Err(EimError::Shape(_))));
        assert!(matches!(
            Kernel2D::new(3, vec![0.0; 8]),
            Err(EimError::CountMismatch {
                expected: 9,
                found: 8,
                ..
            })
        ));
        let ragged = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(matches!(Kernel2D::from_rows(&ragged), Err(EimError::Shape(_))));
        let wide = vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        assert!(matches!(Kernel2D::from_rows(&wide), Err(EimError::Shape(_))));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            Kernel2D::new(2, vec![0.0, f64::NAN, 0.0, 0.0]),
            Err(EimError::NonFinite(1))
        ));
        assert!(Kernel1D::new(vec![f64::INFINITY]).is_err());
        assert!(Kernel1D::new(vec![]).is_err());
    }

    #[test]
    fn centred_coordinates() {
        let k3 = Kernel2D::zeros(3).unwrap();
        assert_eq!(k3.centered(0, 0), (-1.0, -1.0));
        assert_eq!(k3.centered(2, 1), (1.0, 0.0));
        let k2 = Kernel2D::zeros(2).unwrap();
        assert_eq!(k2.centered(1, 0), (0.5, -0.5));
    }

    #[test]
    fn transpose_swaps_axes() {
        let k = Kernel2D::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(k.transpose().values(), &[1.0, 3.0, 2.0, 4.0]);
    }
}
