//! DCT energy spectra of 4D convolution weight tensors.
//!
//! Tensors are stored in the EIM format: shape `[k, k, c_in, c_out]`, values
//! in canonical order (x fastest, then y, then input channel, then output
//! channel) as 32-bit floats. Two encodings exist:
//!
//! * JSON: `{"format":"eim-tensor","version":1,"name":..,"shape":[..],
//!   "order":"x-fastest","dtype":"f32","data":[..]}`
//! * binary: `b"EIMT"`, `u32` version, `u32` ndim, `ndim` x `u32` dims, then
//!   little-endian `f32` values.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dct::{build_basis, energy_distribution, project, reconstruct, DctBasis};
use crate::error::{EimError, Result};
use crate::kernel::Kernel2D;

pub const FORMAT_TAG: &str = "eim-tensor";
pub const FORMAT_VERSION: u32 = 1;
pub const ORDER_TAG: &str = "x-fastest";
pub const DTYPE_TAG: &str = "f32";
pub const BINARY_MAGIC: &[u8; 4] = b"EIMT";

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTensor {
    name: String,
    shape: [usize; 4],
    data: Vec<f32>,
}

impl WeightTensor {
    pub fn new(name: impl Into<String>, shape: [usize; 4], data: Vec<f32>) -> Result<Self> {
        validate_shape(&shape)?;
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(EimError::CountMismatch {
                shape: shape.to_vec(),
                expected,
                found: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(EimError::NonFinite(i));
        }
        Ok(Self {
            name: name.into(),
            shape,
            data,
        })
    }

    /// Builds a tensor from kernels indexed `[c_out][c_in]`.
    pub fn from_kernels(name: impl Into<String>, kernels: &[Vec<Kernel2D>]) -> Result<Self> {
        let c_out = kernels.len();
        let c_in = kernels.first().map_or(0, Vec::len);
        let k = kernels.first().and_then(|r| r.first()).map_or(0, Kernel2D::size);
        let mut data = Vec::with_capacity(k * k * c_in * c_out);
        for row in kernels {
            if row.len() != c_in {
                return Err(EimError::Shape("ragged kernel grid".into()));
            }
            for kern in row {
                if kern.size() != k {
                    return Err(EimError::Shape("kernels of mixed sizes".into()));
                }
                data.extend(kern.values().iter().map(|&v| v as f32));
            }
        }
        Self::new(name, [k, k, c_in, c_out], data)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn kernel_size(&self) -> usize {
        self.shape[0]
    }

    pub fn c_in(&self) -> usize {
        self.shape[2]
    }

    pub fn c_out(&self) -> usize {
        self.shape[3]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn kernel_count(&self) -> usize {
        self.c_in() * self.c_out()
    }

    /// Flat canonical index of kernel position `(x, y)` in channel pair
    /// `(ci, co)`.
    pub fn index(&self, x: usize, y: usize, ci: usize, co: usize) -> usize {
        let k = self.kernel_size();
        x + k * (y + k * (ci + self.c_in() * co))
    }

    /// Kernel for input channel `ci`, output channel `co`.
    pub fn kernel(&self, ci: usize, co: usize) -> Kernel2D {
        let k = self.kernel_size();
        let start = self.index(0, 0, ci, co);
        let values = self.data[start..start + k * k].iter().map(|&v| f64::from(v)).collect();
        Kernel2D::from_raw(k, values)
    }

    /// Kernels in canonical order (input channel fastest).
    pub fn kernels(&self) -> impl Iterator<Item = Kernel2D> + '_ {
        let k = self.kernel_size();
        self.data
            .chunks(k * k)
            .map(move |c| Kernel2D::from_raw(k, c.iter().map(|&v| f64::from(v)).collect()))
    }

    /// A single kernel as a `[k, k, 1, 1]` tensor.
    pub fn from_kernel(name: impl Into<String>, kernel: &Kernel2D) -> Result<Self> {
        let k = kernel.size();
        Self::new(name, [k, k, 1, 1], kernel.values().iter().map(|&v| v as f32).collect())
    }
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.len() != 4 {
        return Err(EimError::Shape(format!("expected 4 dimensions, got {}", shape.len())));
    }
    if shape.contains(&0) {
        return Err(EimError::Shape(format!("empty dimension in shape {shape:?}")));
    }
    if shape[0] != shape[1] {
        return Err(EimError::Shape(format!("kernels must be square, shape {shape:?}")));
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct TensorDoc {
    format: String,
    version: u32,
    name: String,
    shape: Vec<usize>,
    order: String,
    dtype: String,
    data: Vec<f64>,
}

#[derive(Serialize)]
struct TensorDocOut<'a> {
    format: &'static str,
    version: u32,
    name: &'a str,
    shape: [usize; 4],
    order: &'static str,
    dtype: &'static str,
    data: &'a [f32],
}

pub fn tensor_to_json(tensor: &WeightTensor) -> Result<String> {
    Ok(serde_json::to_string(&TensorDocOut {
        format: FORMAT_TAG,
        version: FORMAT_VERSION,
        name: &tensor.name,
        shape: tensor.shape,
        order: ORDER_TAG,
        dtype: DTYPE_TAG,
        data: &tensor.data,
    })?)
}

pub fn tensor_from_json(text: &str) -> Result<WeightTensor> {
    let doc: TensorDoc = serde_json::from_str(text)?;
    if doc.format != FORMAT_TAG {
        return Err(EimError::Format(format!(
            "format tag {:?}, expected {FORMAT_TAG:?}",
            doc.format
        )));
    }
    if doc.version != FORMAT_VERSION {
        return Err(EimError::Format(format!("unsupported version {}", doc.version)));
    }
    if doc.order != ORDER_TAG {
        return Err(EimError::Format(format!(
            "order {:?}, expected {ORDER_TAG:?}",
            doc.order
        )));
    }
    if doc.dtype != DTYPE_TAG {
        return Err(EimError::Format(format!(
            "dtype {:?}, expected {DTYPE_TAG:?}",
            doc.dtype
        )));
    }
    validate_shape(&doc.shape)?;
    let shape = [doc.shape[0], doc.shape[1], doc.shape[2], doc.shape[3]];
    let data = doc.data.iter().map(|&v| v as f32).collect();
    WeightTensor::new(doc.name, shape, data)
}

pub fn write_binary<W: Write>(tensor: &WeightTensor, mut w: W) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&4u32.to_le_bytes())?;
    for d in tensor.shape {
        let d = u32::try_from(d).map_err(|_| EimError::Shape(format!("dimension {d} exceeds u32")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    for v in &tensor.data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R, name: impl Into<String>) -> Result<WeightTensor> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut words = bytes.get(4..).unwrap_or_default().chunks_exact(4);
    if bytes.get(..4) != Some(&BINARY_MAGIC[..]) {
        return Err(EimError::Format("missing EIMT magic".into()));
    }
    let mut next_u32 = |what: &str| -> Result<u32> {
        words
            .next()
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .ok_or_else(|| EimError::Format(format!("truncated header: missing {what}")))
    };
    let version = next_u32("version")?;
    if version != FORMAT_VERSION {
        return Err(EimError::Format(format!("unsupported version {version}")));
    }
    let ndim = next_u32("ndim")? as usize;
    if ndim != 4 {
        return Err(EimError::Shape(format!("expected 4 dimensions, got {ndim}")));
    }
    let mut shape = [0usize; 4];
    for d in shape.iter_mut() {
        *d = next_u32("dimension")? as usize;
    }
    validate_shape(&shape)?;
    let body = &bytes[4 + 4 * (2 + ndim)..];
    if body.len() % 4 != 0 {
        return Err(EimError::Format("trailing partial value".into()));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    WeightTensor::new(name, shape, data)
}

/// Loads a tensor, choosing the encoding from the file's leading bytes.
pub fn load_tensor(path: &Path) -> Result<WeightTensor> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(BINARY_MAGIC) {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        read_binary(&bytes[..], name)
    } else {
        let text = String::from_utf8(bytes).map_err(|e| EimError::Format(e.to_string()))?;
        tensor_from_json(&text)
    }
}

/// Saves as JSON, or binary when `binary` is set.
pub fn save_tensor(tensor: &WeightTensor, path: &Path, binary: bool) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    if binary {
        write_binary(tensor, file)
    } else {
        let mut file = file;
        file.write_all(tensor_to_json(tensor)?.as_bytes())?;
        file.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Uniform,
    /// Each kernel's distribution weighted by its energy.
    Energy,
}

/// Energy fractions of one layer, aligned with the DCT basis order.
#[derive(Debug, Clone)]
pub struct LayerSpectrum {
    pub name: String,
    pub k: usize,
    /// `(u, v)` of each basis item, in order.
    pub indices: Vec<(usize, usize)>,
    pub mean_fractions: Vec<f64>,
    pub dc: f64,
    /// `(0,1) + (1,0)`.
    pub gradient: f64,
    pub higher: f64,
    pub kernels_used: usize,
    pub kernels_skipped: usize,
}

impl LayerSpectrum {
    pub fn fraction(&self, u: usize, v: usize) -> Option<f64> {
        self.indices
            .iter()
            .position(|&p| p == (u, v))
            .map(|i| self.mean_fractions[i])
    }
}

pub fn layer_spectrum(tensor: &WeightTensor, weighting: Weighting) -> Result<LayerSpectrum> {
    let k = tensor.kernel_size();
    let basis = build_basis(k)?;
    let n = basis.len();
    let mut acc = vec![0.0; n];
    let mut weight_total = 0.0;
    let (mut used, mut skipped) = (0, 0);
    for kernel in tensor.kernels() {
        let omega = project(&kernel, &basis)?;
        let energy = omega.energy();
        if energy == 0.0 {
            skipped += 1;
            continue;
        }
        let dist = energy_distribution(&omega)?;
        let w = match weighting {
            Weighting::Uniform => 1.0,
            Weighting::Energy => energy,
        };
        for (a, d) in acc.iter_mut().zip(&dist) {
            *a += w * d;
        }
        weight_total += w;
        used += 1;
    }
    if used == 0 {
        return Err(EimError::ZeroMass(format!("every kernel in {:?} is zero", tensor.name)));
    }
    let mean: Vec<f64> = acc.iter().map(|a| a / weight_total).collect();
    let indices: Vec<(usize, usize)> = basis.items().iter().map(|it| (it.u, it.v)).collect();
    let pick = |u, v| indices.iter().position(|&p| p == (u, v)).map_or(0.0, |i| mean[i]);
    let dc = pick(0, 0);
    let gradient = if k > 1 { pick(0, 1) + pick(1, 0) } else { 0.0 };
    Ok(LayerSpectrum {
        name: tensor.name.clone(),
        k,
        higher: (1.0 - dc - gradient).max(0.0),
        indices,
        mean_fractions: mean,
        dc,
        gradient,
        kernels_used: used,
        kernels_skipped: skipped,
    })
}

/// Per-layer spectra for a set of tensors.
#[derive(Debug, Clone, Default)]
pub struct SpectrumReport {
    pub layers: Vec<LayerSpectrum>,
}

impl SpectrumReport {
    pub fn from_tensors(tensors: &[WeightTensor], weighting: Weighting) -> Result<Self> {
        let layers = tensors
            .iter()
            .map(|t| layer_spectrum(t, weighting))
            .collect::<Result<_>>()?;
        Ok(Self { layers })
    }
}

fn truncate_kernel(kernel: &Kernel2D, basis: &DctBasis, n_keep: usize) -> Result<Kernel2D> {
    reconstruct(&project(kernel, basis)?, basis, n_keep)
}

/// Replaces every kernel by its reconstruction from the lowest `n_keep`
/// DCT components.
pub fn truncate_tensor(tensor: &WeightTensor, n_keep: usize) -> Result<WeightTensor> {
    let k = tensor.kernel_size();
    let basis = build_basis(k)?;
    if !(1..=basis.len()).contains(&n_keep) {
        return Err(EimError::Range(format!(
            "n_keep must be in 1..={}, got {n_keep}",
            basis.len()
        )));
    }
    let mut data = Vec::with_capacity(tensor.data.len());
    for kernel in tensor.kernels() {
        let t = truncate_kernel(&kernel, &basis, n_keep)?;
        data.extend(t.values().iter().map(|&v| v as f32));
    }
    WeightTensor::new(tensor.name.clone(), tensor.shape, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn planted(items: &[usize], copies: usize) -> WeightTensor {
        let basis = build_basis(3).unwrap();
        let row: Vec<Kernel2D> = (0..copies)
            .flat_map(|_| items.iter().map(|&i| basis.item(i).basis.clone()))
            .collect();
        WeightTensor::from_kernels("planted", &[row]).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let data: Vec<f32> = (0..36).map(|i| i as f32 * 0.1 - 1.3).collect();
        let t = WeightTensor::new("conv1", [3, 3, 2, 2], data).unwrap();
        let back = tensor_from_json(&tensor_to_json(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn binary_round_trip() {
        let data: Vec<f32> = (0..72).map(|i| (i as f32).sin()).collect();
        let t = WeightTensor::new("b", [3, 3, 2, 4], data).unwrap();
        let mut buf = Vec::new();
        write_binary(&t, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"EIMT");
        assert_eq!(buf.len(), 4 + 4 * 6 + 72 * 4);
        assert_eq!(read_binary(&buf[..], "b").unwrap(), t);
        assert!(read_binary(&buf[..10], "b").is_err());
        assert!(read_binary(&buf[..buf.len() - 2], "b").is_err());
    }

    #[test]
    fn malformed_documents() {
        let doc = |shape: &str, n: usize| {
            let data = vec!["0.5"; n].join(",");
            format!(
                r#"{{"format":"eim-tensor","version":1,"name":"x","shape":{shape},"order":"x-fastest","dtype":"f32","data":[{data}]}}"#
            )
        };
        assert!(tensor_from_json(&doc("[3,3,2,2]", 36)).is_ok());
        assert!(matches!(
            tensor_from_json(&doc("[3,3,2,2]", 35)),
            Err(EimError::CountMismatch {
                expected: 36,
                found: 35,
                ..
            })
        ));
        assert!(matches!(
            tensor_from_json(&doc("[3,3,0,2]", 0)),
            Err(EimError::Shape(_))
        ));
        assert!(matches!(tensor_from_json(&doc("[3,3,2]", 18)), Err(EimError::Shape(_))));
        assert!(matches!(
            tensor_from_json(&doc("[3,3,1,1]", 9).replace("x-fastest", "c-order")),
            Err(EimError::Format(_))
        ));
        assert!(matches!(
            tensor_from_json(&doc("[3,3,1,1]", 9).replace("eim-tensor", "npy")),
            Err(EimError::Format(_))
        ));
        assert!(tensor_from_json("{not json").is_err());
        // overflows f32
        assert!(matches!(
            tensor_from_json(&doc("[1,1,1,1]", 1).replace("0.5", "1e300")),
            Err(EimError::NonFinite(0))
        ));
    }

    #[test]
    fn canonical_index_layout() {
        let mut data = vec![0.0f32; 3 * 3 * 2 * 4];
        let probe = WeightTensor::new("p", [3, 3, 2, 4], data.clone()).unwrap();
        let (x, y, ci, co) = (2, 0, 1, 3);
        let i = probe.index(x, y, ci, co);
        assert_eq!(i, x + 3 * (y + 3 * (ci + 2 * co)));
        data[i] = 1.0;
        let t = WeightTensor::new("p", [3, 3, 2, 4], data).unwrap();
        let k = t.kernel(1, 3);
        assert_eq!(k.get(2, 0), 1.0);
        assert_eq!(k.energy(), 1.0);
        assert_eq!(t.kernel(0, 3).energy(), 0.0);
    }

    #[test]
    fn dc_layer() {
        let s = layer_spectrum(&planted(&[0], 4), Weighting::Uniform).unwrap();
        assert_abs_diff_eq!(s.mean_fractions[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(s.dc, 1.0, epsilon = 1e-9);
        assert_eq!(s.kernels_used, 4);
    }

    #[test]
    fn half_dc_half_gradient() {
        let s = layer_spectrum(&planted(&[0, 1], 3), Weighting::Uniform).unwrap();
        assert_abs_diff_eq!(s.fraction(0, 0).unwrap(), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(s.fraction(0, 1).unwrap(), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(s.gradient, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(s.higher, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn zero_kernels_are_skipped() {
        let basis = build_basis(3).unwrap();
        let z = Kernel2D::zeros(3).unwrap();
        let t = WeightTensor::from_kernels("z", &[vec![basis.item(0).basis.clone(), z.clone()]]).unwrap();
        let s = layer_spectrum(&t, Weighting::Uniform).unwrap();
        assert_eq!((s.kernels_used, s.kernels_skipped), (1, 1));
        let all_zero = WeightTensor::from_kernels("z", &[vec![z.clone(), z]]).unwrap();
        assert!(matches!(
            layer_spectrum(&all_zero, Weighting::Uniform),
            Err(EimError::ZeroMass(_))
        ));
    }

    #[test]
    fn energy_weighting_differs_from_uniform() {
        let basis = build_basis(3).unwrap();
        let t = WeightTensor::from_kernels(
            "w",
            &[vec![basis.item(0).basis.scale(3.0), basis.item(1).basis.clone()]],
        )
        .unwrap();
        let u = layer_spectrum(&t, Weighting::Uniform).unwrap();
        let e = layer_spectrum(&t, Weighting::Energy).unwrap();
        assert_abs_diff_eq!(u.dc, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(e.dc, 0.9, epsilon = 1e-6);
    }

    #[test]
    fn truncation() {
        let full = planted(&[0, 1, 2, 8], 2);
        let same = truncate_tensor(&full, 9).unwrap();
        for (a, b) in full.data().iter().zip(same.data()) {
            assert!((a - b).abs() <= 1e-6);
        }
        assert!(truncate_tensor(&full, 0).is_err());
        assert!(truncate_tensor(&full, 10).is_err());

        let odd = planted(&[1, 2, 3], 2);
        let t = truncate_tensor(&odd, 1).unwrap();
        assert!(t.data().iter().all(|v| v.abs() < 1e-7));
    }
}
