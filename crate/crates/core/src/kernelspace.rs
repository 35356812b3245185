//! Even/odd decomposition of kernels under the dihedral group of the square.
//!
//! The even part of a kernel is its average over the eight sign flips and
//! axis swaps of centred coordinates; the odd part is the remainder. The two
//! parts are orthogonal, so their energies add up to the kernel energy and
//! the odd share of that energy gives the mixing ratio `beta_sq`.

use crate::error::{EimError, Result};
use crate::kernel::{Kernel1D, Kernel2D};

/// Tolerance used when checking that a unit component really is unit length
/// and of a single parity.
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EvenOddSplit<K = Kernel2D> {
    pub even: K,
    pub odd: K,
    pub energy_even: f64,
    pub energy_odd: f64,
    pub beta_sq: f64,
}

impl<K> EvenOddSplit<K> {
    pub fn energy(&self) -> f64 {
        self.energy_even + self.energy_odd
    }

    pub fn beta(&self) -> f64 {
        self.beta_sq.sqrt()
    }
}

fn beta_sq(energy_even: f64, energy_odd: f64) -> f64 {
    let total = energy_even + energy_odd;
    if total == 0.0 {
        0.0
    } else {
        energy_odd / total
    }
}

/// Index pairs of the eight dihedral images of `(x, y)` on a `k x k` grid.
pub fn dihedral_orbit(k: usize, x: usize, y: usize) -> [(usize, usize); 8] {
    let r = |i: usize| k - 1 - i;
    [
        (x, y),
        (r(x), y),
        (x, r(y)),
        (r(x), r(y)),
        (y, x),
        (r(y), x),
        (y, r(x)),
        (r(y), r(x)),
    ]
}

/// Even (dihedrally symmetric) part of a kernel.
///
/// The eight orbit values are sorted and summed in mirrored pairs, so every
/// point of an orbit receives a bit-identical average and an antisymmetric
/// orbit averages to exactly zero.
pub fn dihedral_average(kernel: &Kernel2D) -> Kernel2D {
    let k = kernel.size();
    let mut out = vec![0.0; k * k];
    for y in 0..k {
        for x in 0..k {
            let mut vals = dihedral_orbit(k, x, y).map(|(i, j)| kernel.get(i, j));
            vals.sort_by(f64::total_cmp);
            let pair = |i: usize| vals[i] + vals[7 - i];
            out[y * k + x] = ((pair(0) + pair(1)) + (pair(2) + pair(3))) / 8.0;
        }
    }
    Kernel2D::from_raw(k, out)
}

pub fn decompose(kernel: &Kernel2D) -> EvenOddSplit {
    let even = dihedral_average(kernel);
    let odd = kernel - &even;
    let energy_even = even.energy();
    let energy_odd = odd.energy();
    EvenOddSplit {
        beta_sq: beta_sq(energy_even, energy_odd),
        even,
        odd,
        energy_even,
        energy_odd,
    }
}

/// Left/right split of a 1D kernel about its centre.
pub fn decompose1d(kernel: &Kernel1D) -> EvenOddSplit<Kernel1D> {
    let f = kernel.values();
    let n = f.len();
    let even: Vec<f64> = (0..n).map(|i| (f[i] + f[n - 1 - i]) / 2.0).collect();
    let odd: Vec<f64> = f.iter().zip(&even).map(|(a, e)| a - e).collect();
    let even = Kernel1D::from_raw(even);
    let odd = Kernel1D::from_raw(odd);
    let energy_even = even.energy();
    let energy_odd = odd.energy();
    EvenOddSplit {
        beta_sq: beta_sq(energy_even, energy_odd),
        even,
        odd,
        energy_even,
        energy_odd,
    }
}

/// `magnitude * (beta * odd_unit + sqrt(1 - beta^2) * even_unit)`.
pub fn mix(even_unit: &Kernel2D, odd_unit: &Kernel2D, beta: f64, magnitude: f64) -> Result<Kernel2D> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(EimError::Range(format!("beta = {beta} is outside [0, 1]")));
    }
    if !(magnitude > 0.0 && magnitude.is_finite()) {
        return Err(EimError::Range(format!("magnitude = {magnitude} must be positive")));
    }
    if even_unit.size() != odd_unit.size() {
        return Err(EimError::Shape(format!(
            "even component is {0}x{0}, odd component is {1}x{1}",
            even_unit.size(),
            odd_unit.size()
        )));
    }
    check_unit(even_unit, "even")?;
    check_unit(odd_unit, "odd")?;
    let e = decompose(even_unit);
    if e.energy_odd.sqrt() > UNIT_TOLERANCE {
        return Err(EimError::Contract(format!(
            "even component has odd energy {:e}",
            e.energy_odd
        )));
    }
    let o = decompose(odd_unit);
    if o.energy_even.sqrt() > UNIT_TOLERANCE {
        return Err(EimError::Contract(format!(
            "odd component has even energy {:e}",
            o.energy_even
        )));
    }
    let even_weight = (1.0 - beta * beta).sqrt();
    let values = odd_unit
        .values()
        .iter()
        .zip(even_unit.values())
        .map(|(o, e)| magnitude * (beta * o + even_weight * e))
        .collect();
    Ok(Kernel2D::from_raw(even_unit.size(), values))
}

fn check_unit(kernel: &Kernel2D, which: &str) -> Result<()> {
    let n = kernel.norm();
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(EimError::Contract(format!(
            "{which} component has norm {n}, expected 1"
        )));
    }
    Ok(())
}

/// One-pixel displacement from the kernel centre. `+y` points down the rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    PosX,
    NegX,
    PosY,
    NegY,
}

/// Which corner of the 3x3 canvas receives an embedded 2x2 block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// Rows and columns 0..=1, centred offsets {-1, 0}.
    Even,
    /// Rows and columns 1..=2, centred offsets {0, +1}.
    Odd,
}

impl Parity {
    pub fn of_step(step: usize) -> Self {
        if step.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StandardKernel {
    /// All-ones, unit energy.
    Dc,
    /// Columns proportional to the centred x offset, unit energy.
    GradX,
    GradY,
    /// `cos(theta) GradX + sin(theta) GradY`, unit energy.
    GradTheta(f64),
    /// A single 1 one pixel off centre.
    OffsetImpulse(Direction),
    /// Unit 2x2 `GradX` placed in one corner of a 3x3 canvas.
    Embedded2x2(Parity),
}

pub const STANDARD_SIZES: [usize; 3] = [2, 3, 5];

pub fn standard_kernel(kind: StandardKernel, k: usize) -> Result<Kernel2D> {
    if !STANDARD_SIZES.contains(&k) {
        return Err(EimError::Range(format!(
            "standard kernels exist for sizes {STANDARD_SIZES:?}, not {k}"
        )));
    }
    match kind {
        StandardKernel::Dc => Kernel2D::new(k, vec![1.0; k * k])?.normalized(),
        StandardKernel::GradX => {
            let c = (k as f64 - 1.0) / 2.0;
            let values = (0..k * k).map(|i| (i % k) as f64 - c).collect();
            Kernel2D::new(k, values)?.normalized()
        }
        StandardKernel::GradY => Ok(standard_kernel(StandardKernel::GradX, k)?.transpose()),
        StandardKernel::GradTheta(theta) => {
            if !theta.is_finite() {
                return Err(EimError::Range("gradient angle must be finite".into()));
            }
            let gx = standard_kernel(StandardKernel::GradX, k)?;
            let gy = gx.transpose();
            (&(&gx * theta.cos()) + &(&gy * theta.sin())).normalized()
        }
        StandardKernel::OffsetImpulse(dir) => {
            if k.is_multiple_of(2) {
                return Err(EimError::Range(format!(
                    "offset impulse needs an odd size with a centre pixel, got {k}"
                )));
            }
            let c = (k - 1) / 2;
            let (x, y) = match dir {
                Direction::PosX => (c + 1, c),
                Direction::NegX => (c - 1, c),
                Direction::PosY => (c, c + 1),
                Direction::NegY => (c, c - 1),
            };
            Kernel2D::impulse_at(k, x, y)
        }
        StandardKernel::Embedded2x2(parity) => {
            if k != 3 {
                return Err(EimError::Range(format!(
                    "2x2 blocks are embedded in a 3x3 canvas, not {k}x{k}"
                )));
            }
            embed_2x2(&standard_kernel(StandardKernel::GradX, 2)?, parity)
        }
    }
}

/// Places a 2x2 kernel into a zero 3x3 canvas at the corner chosen by `parity`.
pub fn embed_2x2(block: &Kernel2D, parity: Parity) -> Result<Kernel2D> {
    if block.size() != 2 {
        return Err(EimError::Shape(format!(
            "expected a 2x2 block, got {0}x{0}",
            block.size()
        )));
    }
    let off = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    let mut values = vec![0.0; 9];
    for y in 0..2 {
        for x in 0..2 {
            values[(y + off) * 3 + x + off] = block.get(x, y);
        }
    }
    Ok(Kernel2D::from_raw(3, values))
}
