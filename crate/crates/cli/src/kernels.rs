use std::path::Path;

use eim_core::kernelspace::{mix, standard_kernel, Direction, StandardKernel};
use eim_core::spectra::load_tensor;
use eim_core::{EimError, Kernel2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::CliError;

pub const BUILTINS: [&str; 5] = ["gradx3", "dc3", "trans3", "gradx5", "emb2x2"];

fn builtin(name: &str) -> Option<eim_core::Result<Kernel2D>> {
    let (kind, k) = match name {
        "gradx3" => (StandardKernel::GradX, 3),
        "dc3" => (StandardKernel::Dc, 3),
        "trans3" => (StandardKernel::OffsetImpulse(Direction::PosX), 3),
        "gradx5" => (StandardKernel::GradX, 5),
        // the 2x2 block itself; propagation embeds it
        "emb2x2" => (StandardKernel::GradX, 2),
        _ => return None,
    };
    Some(standard_kernel(kind, k))
}

/// A built-in name, or a file holding either a JSON array of rows or a
/// single-kernel EIM tensor.
pub fn resolve(spec: &str) -> Result<Kernel2D, CliError> {
    if let Some(k) = builtin(spec) {
        return Ok(k?);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "{spec:?} is neither a file nor a built-in kernel ({})",
            BUILTINS.join(", ")
        )));
    }
    let bytes = std::fs::read(path).map_err(EimError::from)?;
    let rows: Option<Vec<Vec<f64>>> = serde_json::from_slice(&bytes).ok();
    if let Some(rows) = rows {
        return Ok(Kernel2D::from_rows(&rows)?);
    }
    let tensor = load_tensor(path)?;
    if tensor.kernel_count() != 1 {
        return Err(CliError::Data(format!(
            "{spec}: expected a single kernel, the tensor holds {}",
            tensor.kernel_count()
        )));
    }
    Ok(tensor.kernel(0, 0))
}

/// `mix(DC, GradX, sqrt(beta_sq))` at unit magnitude.
pub fn mixed(size: usize, beta_sq: f64) -> Result<Kernel2D, CliError> {
    if !(0.0..=1.0).contains(&beta_sq) {
        return Err(CliError::Usage(format!("--beta-sq must be in [0, 1], got {beta_sq}")));
    }
    let dc = standard_kernel(StandardKernel::Dc, size)?;
    let gx = standard_kernel(StandardKernel::GradX, size)?;
    Ok(mix(&dc, &gx, beta_sq.sqrt(), 1.0)?)
}

pub fn random(size: usize, seed: u64) -> Result<Kernel2D, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..size * size).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Ok(Kernel2D::new(size, values)?)
}
