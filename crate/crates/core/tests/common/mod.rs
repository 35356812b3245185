#![allow(dead_code)]

use eim_core::Kernel2D;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_kernel<R: Rng>(rng: &mut R, k: usize) -> Kernel2D {
    let values = (0..k * k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Kernel2D::new(k, values).unwrap()
}

type CoordMap = fn(f64, f64) -> (f64, f64);

/// The eight dihedral maps written out on centred coordinates, independent
/// of the library's index-reflection implementation.
pub fn dihedral_images(kernel: &Kernel2D) -> Vec<Kernel2D> {
    let k = kernel.size();
    let c = (k as f64 - 1.0) / 2.0;
    let maps: [CoordMap; 8] = [
        |x, y| (x, y),
        |x, y| (-x, y),
        |x, y| (x, -y),
        |x, y| (-x, -y),
        |x, y| (y, x),
        |x, y| (-y, x),
        |x, y| (y, -x),
        |x, y| (-y, -x),
    ];
    maps.iter()
        .map(|m| {
            let mut out = vec![0.0; k * k];
            for iy in 0..k {
                for ix in 0..k {
                    let (x, y) = m(ix as f64 - c, iy as f64 - c);
                    let (sx, sy) = ((x + c).round() as usize, (y + c).round() as usize);
                    out[iy * k + ix] = kernel.get(sx, sy);
                }
            }
            Kernel2D::new(k, out).unwrap()
        })
        .collect()
}

pub fn l2(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn diff_norm(a: &Kernel2D, b: &Kernel2D) -> f64 {
    (a - b).norm()
}
