//! Orthonormal 2D DCT-II basis for small kernels.
//!
//! Basis items are ordered low-frequency first: by `u + v`, then `|u - v|`,
//! then `u`. For `k = 3` that gives
//! `(0,0); (0,1) (1,0); (1,1) (0,2) (2,0); (1,2) (2,1); (2,2)`, so keeping the
//! first 1, 3 or 4 items keeps the DC term, adds both first-order gradients,
//! and then the diagonal saddle.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{EimError, Result};
use crate::kernel::Kernel2D;

pub const MAX_BASIS_SIZE: usize = 16;

/// Dihedral parity of a DCT basis kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymClass {
    Even,
    Odd,
    Mixed,
}

impl SymClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SymClass::Even => "even",
            SymClass::Odd => "odd",
            SymClass::Mixed => "mixed",
        }
    }
}

impl fmt::Display for SymClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Any odd wave number makes the basis odd; two equal even wave numbers make
/// it even; two unequal even wave numbers give a mix of both.
pub fn classify_symmetry(u: usize, v: usize) -> SymClass {
    if u % 2 == 1 || v % 2 == 1 {
        SymClass::Odd
    } else if u == v {
        SymClass::Even
    } else {
        SymClass::Mixed
    }
}

#[derive(Debug, Clone)]
pub struct BasisItem {
    /// Horizontal wave number (varies along x).
    pub u: usize,
    /// Vertical wave number (varies along y).
    pub v: usize,
    pub basis: Kernel2D,
    pub sym_class: SymClass,
}

#[derive(Debug, Clone)]
pub struct DctBasis {
    k: usize,
    items: Vec<BasisItem>,
}

fn alpha(k: usize, u: usize) -> f64 {
    if u == 0 {
        (1.0 / k as f64).sqrt()
    } else {
        (2.0 / k as f64).sqrt()
    }
}

/// Low-frequency-first order of all `(u, v)` pairs for a `k x k` grid.
pub fn canonical_order(k: usize) -> Vec<(usize, usize)> {
    let mut idx: Vec<(usize, usize)> = (0..k).flat_map(|u| (0..k).map(move |v| (u, v))).collect();
    idx.sort_by_key(|&(u, v)| (u + v, u.abs_diff(v), u));
    idx
}

pub fn build_basis(k: usize) -> Result<DctBasis> {
    if !(1..=MAX_BASIS_SIZE).contains(&k) {
        return Err(EimError::Range(format!(
            "DCT basis size must be in 1..={MAX_BASIS_SIZE}, got {k}"
        )));
    }
    let kf = k as f64;
    let cos_table: Vec<Vec<f64>> = (0..k)
        .map(|u| {
            (0..k)
                .map(|x| alpha(k, u) * (PI * (2 * x + 1) as f64 * u as f64 / (2.0 * kf)).cos())
                .collect()
        })
        .collect();
    let items = canonical_order(k)
        .into_iter()
        .map(|(u, v)| {
            let mut values = Vec::with_capacity(k * k);
            for y in 0..k {
                for x in 0..k {
                    values.push(cos_table[u][x] * cos_table[v][y]);
                }
            }
            BasisItem {
                u,
                v,
                basis: Kernel2D::from_raw(k, values),
                sym_class: classify_symmetry(u, v),
            }
        })
        .collect();
    Ok(DctBasis { k, items })
}

impl DctBasis {
    pub fn size(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[BasisItem] {
        &self.items
    }

    pub fn item(&self, i: usize) -> &BasisItem {
        &self.items[i]
    }

    /// Position of `(u, v)` in the canonical order.
    pub fn position(&self, u: usize, v: usize) -> Option<usize> {
        self.items.iter().position(|it| it.u == u && it.v == v)
    }

    /// Gram matrix of the basis kernels, row-major `len x len`.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.items.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = self.items[i]
                    .basis
                    .values()
                    .iter()
                    .zip(self.items[j].basis.values())
                    .map(|(a, b)| a * b)
                    .sum();
            }
        }
        g
    }
}

/// DCT coefficients of one kernel, aligned with the basis order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    pub k: usize,
    pub omega: Vec<f64>,
}

impl CoeffVector {
    pub fn energy(&self) -> f64 {
        self.omega.iter().map(|w| w * w).sum()
    }
}

pub fn project(kernel: &Kernel2D, basis: &DctBasis) -> Result<CoeffVector> {
    if kernel.size() != basis.size() {
        return Err(EimError::Shape(format!(
            "kernel is {0}x{0} but the basis is {1}x{1}",
            kernel.size(),
            basis.size()
        )));
    }
    let omega = basis
        .items
        .iter()
        .map(|it| it.basis.values().iter().zip(kernel.values()).map(|(b, f)| b * f).sum())
        .collect();
    Ok(CoeffVector { k: basis.size(), omega })
}

/// Sum of the first `n_keep` ordered basis kernels weighted by `omega`.
pub fn reconstruct(omega: &CoeffVector, basis: &DctBasis, n_keep: usize) -> Result<Kernel2D> {
    let k = basis.size();
    if omega.k != k || omega.omega.len() != basis.len() {
        return Err(EimError::Shape(format!(
            "coefficients for k={} ({} values) do not match a k={} basis",
            omega.k,
            omega.omega.len(),
            k
        )));
    }
    if !(1..=basis.len()).contains(&n_keep) {
        return Err(EimError::Range(format!(
            "n_keep must be in 1..={}, got {n_keep}",
            basis.len()
        )));
    }
    let mut out = vec![0.0; k * k];
    for (w, it) in omega.omega.iter().zip(&basis.items).take(n_keep) {
        for (o, b) in out.iter_mut().zip(it.basis.values()) {
            *o += w * b;
        }
    }
    Ok(Kernel2D::from_raw(k, out))
}

/// `omega_i^2 / |omega|^2` for every coefficient.
pub fn energy_distribution(omega: &CoeffVector) -> Result<Vec<f64>> {
    let total = omega.energy();
    if total == 0.0 {
        return Err(EimError::ZeroMass(
            "energy distribution of a zero coefficient vector".into(),
        ));
    }
    Ok(omega.omega.iter().map(|w| w * w / total).collect())
}
