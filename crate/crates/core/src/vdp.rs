//! Functional execution of dot-product schedules the way the photonic
//! hardware computes them: operands quantized to the available
//! resolution, products formed per MR bank, partial sums re-accumulated
//! across arms, with optional crosstalk noise injection.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perf::AcceleratorConfig;
use crate::seeding::derive_seed;
use crate::workload::{LayerSpec, ModelSpec, ModelWeights, TensorShape};

/// Architecture cap on rings per bank.
pub const MAX_MRS_PER_BANK: usize = 15;

/// Geometry of one vector-dot-product unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VDPUnitConfig {
    /// Full vector length the unit accepts in one pass.
    pub vector_size: usize,
    /// Rings per bank; one weight bank plus one activation bank per arm.
    pub mrs_per_bank: usize,
    /// Parallel arms sharing the unit's wavelengths.
    pub arms: usize,
    /// Distinct wavelengths lit per arm.
    pub wavelengths_per_arm: usize,
}

impl VDPUnitConfig {
    /// Unit sized so one pass covers `vector_size` elements: enough
    /// arms to hold every bank-sized chunk in parallel.
    pub fn for_vector_size(vector_size: usize, mrs_per_bank: usize) -> Result<Self> {
        if vector_size == 0 {
            return Err(Error::InvalidParameter("vector_size must be >= 1".into()));
        }
        let unit = Self {
            vector_size,
            mrs_per_bank,
            arms: vector_size.div_ceil(mrs_per_bank.max(1)),
            wavelengths_per_arm: mrs_per_bank.min(vector_size),
        };
        unit.validate()?;
        Ok(unit)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mrs_per_bank == 0 || self.mrs_per_bank > MAX_MRS_PER_BANK {
            return Err(Error::InvalidParameter(format!(
                "mrs_per_bank must be in [1, {MAX_MRS_PER_BANK}], got {}",
                self.mrs_per_bank
            )));
        }
        if self.arms == 0 {
            return Err(Error::InvalidParameter("arms must be >= 1".into()));
        }
        if self.vector_size == 0 {
            return Err(Error::InvalidParameter("vector_size must be >= 1".into()));
        }
        if self.arms * self.mrs_per_bank < self.vector_size {
            return Err(Error::InvalidParameter(format!(
                "{} arms of {} MRs cannot hold a {}-element vector",
                self.arms, self.mrs_per_bank, self.vector_size
            )));
        }
        if self.wavelengths_per_arm == 0 || self.wavelengths_per_arm > self.mrs_per_bank {
            return Err(Error::InvalidParameter(
                "wavelengths_per_arm must be in [1, mrs_per_bank]".into(),
            ));
        }
        Ok(())
    }
}

/// Uniform symmetric quantization grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationSpec {
    /// Bit width in [1, 16].
    pub bits: u32,
    /// Symmetric max-abs range; values outside clamp to ±range.
    pub range: f64,
}

impl QuantizationSpec {
    pub fn new(bits: u32, range: f64) -> Result<Self> {
        let spec = Self { bits, range };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits == 0 || self.bits > 16 {
            return Err(Error::ContractViolation(format!(
                "quantization bits must be in [1, 16], got {}",
                self.bits
            )));
        }
        if !(self.range > 0.0) || !self.range.is_finite() {
            return Err(Error::ContractViolation("range must be finite and > 0".into()));
        }
        Ok(())
    }

    /// Grid step: the range is carved into 2^bits intervals, so the
    /// representable values are k·step for |k·step| ≤ range (a
    /// mid-tread grid — zero is always representable, and at 1 bit the
    /// outputs are {−range, 0, +range}).
    pub fn step(&self) -> f64 {
        2.0 * self.range / f64::powi(2.0, self.bits as i32)
    }
}

/// Snap a value to the quantization grid. Idempotent; worst-case error
/// is range/2^bits for in-range values.
pub fn quantize(value: f64, spec: &QuantizationSpec) -> Result<f64> {
    spec.validate()?;
    if !value.is_finite() {
        return Err(Error::ContractViolation("cannot quantize a non-finite value".into()));
    }
    let step = spec.step();
    let clamped = value.clamp(-spec.range, spec.range);
    Ok((clamped / step).round() * step)
}

/// Dense tensor with f64 storage; file I/O is 32-bit row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: TensorShape,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: TensorShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.element_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for shape {shape:?}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: TensorShape) -> Self {
        Self {
            data: vec![0.0; shape.element_count()],
            shape,
        }
    }

    /// Read a flat little-endian f32 file into the given shape.
    pub fn from_f32_file(path: &Path, shape: TensorShape) -> Result<Self> {
        let bytes =
            std::fs::read(path).map_err(|e| Error::ModelIo(format!("{}: {e}", path.display())))?;
        if bytes.len() != shape.element_count() * 4 {
            return Err(Error::ModelIo(format!(
                "{}: expected {} f32 values, found {} bytes",
                path.display(),
                shape.element_count(),
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        Ok(Self { shape, data })
    }

    pub fn to_f32_file(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.data.len() * 4);
        for v in &self.data {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        std::fs::write(path, bytes).map_err(|e| Error::ModelIo(format!("{}: {e}", path.display())))
    }

    /// Parse an inline JSON array (flat, row-major) into the given
    /// shape. Handy for small test vectors.
    pub fn from_json_array(text: &str, shape: TensorShape) -> Result<Self> {
        let data: Vec<f64> = serde_json::from_str(text)
            .map_err(|e| Error::ModelIo(format!("inline tensor: {e}")))?;
        Self::new(shape, data)
    }

    pub fn argmax(&self) -> usize {
        self.data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Execute one dot product on a unit: operands are chunked per bank,
/// each elementwise product optionally perturbed by a uniform draw in
/// [−max_noise, +max_noise], and the per-bank partial sums accumulated.
pub fn execute_op(
    weights: &[f64],
    activations: &[f64],
    unit: &VDPUnitConfig,
    quant: Option<&QuantizationSpec>,
    max_noise: Option<f64>,
    seed: u64,
) -> Result<f64> {
    if weights.len() != activations.len() {
        return Err(Error::LengthMismatch(format!(
            "{} weights vs {} activations",
            weights.len(),
            activations.len()
        )));
    }
    if weights.is_empty() {
        return Err(Error::ContractViolation("empty operands".into()));
    }
    if weights.len() > unit.vector_size {
        return Err(Error::Capacity(format!(
            "op length {} exceeds unit vector size {}",
            weights.len(),
            unit.vector_size
        )));
    }
    if let Some(q) = quant {
        q.validate()?;
    }
    let noise = match max_noise {
        Some(m) if !(0.0..=1.0).contains(&m) => {
            return Err(Error::ContractViolation(format!(
                "max_noise must be in [0, 1], got {m}"
            )));
        }
        Some(m) if m > 0.0 => Some(m),
        _ => None,
    };
    let mut rng = noise.map(|_| ChaCha8Rng::seed_from_u64(seed));

    let apply_quant = |value: f64| match quant {
        Some(spec) => {
            let step = spec.step();
            (value.clamp(-spec.range, spec.range) / step).round() * step
        }
        None => value,
    };

    let mut total = 0.0;
    for (w_chunk, a_chunk) in weights
        .chunks(unit.mrs_per_bank)
        .zip(activations.chunks(unit.mrs_per_bank))
    {
        let mut partial = 0.0;
        for (w, a) in w_chunk.iter().zip(a_chunk.iter()) {
            let mut product = apply_quant(*w) * apply_quant(*a);
            if let (Some(m), Some(rng)) = (noise, rng.as_mut()) {
                product *= 1.0 + rng.random_range(-m..=m);
            }
            partial += product;
        }
        total += partial;
    }
    Ok(total)
}

/// Run a vector longer than the unit through repeated passes, summing
/// the per-pass partial results.
fn execute_vector(
    weights: &[f64],
    activations: &[f64],
    unit: &VDPUnitConfig,
    quant: Option<&QuantizationSpec>,
    max_noise: Option<f64>,
    op_seed: u64,
) -> Result<f64> {
    let mut total = 0.0;
    for (pass, (w, a)) in weights
        .chunks(unit.vector_size)
        .zip(activations.chunks(unit.vector_size))
        .enumerate()
    {
        total += execute_op(w, a, unit, quant, max_noise, derive_seed(op_seed, pass as u64))?;
    }
    Ok(total)
}

/// Execute a whole model: conv ops on the CONV units, fc ops on the FC
/// units, ReLU applied electronically between layers, pooling and
/// batch-norm in the electronic domain. With quantization and noise off
/// this reproduces plain float inference up to accumulation rounding.
pub fn execute_model(
    model: &ModelSpec,
    weights: &ModelWeights,
    input: &Tensor,
    cfg: &AcceleratorConfig,
    quant: Option<&QuantizationSpec>,
    max_noise: Option<f64>,
    seed: u64,
) -> Result<Tensor> {
    model.validate()?;
    if weights.per_layer.len() != model.layers.len() {
        return Err(Error::ShapeMismatch(format!(
            "model '{}' has {} layers but weights cover {}",
            model.name,
            model.layers.len(),
            weights.per_layer.len()
        )));
    }
    let expected_input = model.input_shape()?;
    if input.shape != expected_input {
        return Err(Error::ShapeMismatch(format!(
            "model '{}' expects input {expected_input:?}, got {:?}",
            model.name, input.shape
        )));
    }
    let conv_unit = cfg.conv_unit()?;
    let fc_unit = cfg.fc_unit()?;

    let mut current = input.clone();
    let mut op_counter: u64 = 0;
    let last = model.layers.len() - 1;
    for (index, layer) in model.layers.iter().enumerate() {
        let layer_weights = &weights.per_layer[index];
        if layer_weights.len() != layer.weight_count() {
            return Err(Error::ShapeMismatch(format!(
                "layer {index} of '{}' expects {} weights, found {}",
                model.name,
                layer.weight_count(),
                layer_weights.len()
            )));
        }
        current = match *layer {
            LayerSpec::Conv {
                kernel_h,
                kernel_w,
                in_channels,
                out_channels,
                stride,
                ..
            } => {
                let (in_c, in_h, in_w) = match current.shape {
                    TensorShape::Chw(c, h, w) => (c, h, w),
                    TensorShape::Flat(_) => {
                        return Err(Error::ShapeMismatch(format!(
                            "layer {index}: conv needs a CHW input"
                        )));
                    }
                };
                if in_c != in_channels {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {index}: expected {in_channels} channels, got {in_c}"
                    )));
                }
                let (out_h, out_w) = layer.conv_output_dims()?;
                let kernel_len = kernel_h * kernel_w * in_channels;
                let mut out = Tensor::zeros(TensorShape::Chw(out_channels, out_h, out_w));
                let mut patch = vec![0.0; kernel_len];
                for oc in 0..out_channels {
                    let kernel = &layer_weights[oc * kernel_len..(oc + 1) * kernel_len];
                    let kernel: Vec<f64> = kernel.iter().map(|w| *w as f64).collect();
                    for oy in 0..out_h {
                        for ox in 0..out_w {
                            let mut at = 0;
                            for c in 0..in_channels {
                                for ky in 0..kernel_h {
                                    let y = oy * stride + ky;
                                    for kx in 0..kernel_w {
                                        let x = ox * stride + kx;
                                        patch[at] = current.data[(c * in_h + y) * in_w + x];
                                        at += 1;
                                    }
                                }
                            }
                            let value = execute_vector(
                                &kernel,
                                &patch,
                                &conv_unit,
                                quant,
                                max_noise,
                                derive_seed(seed, op_counter),
                            )?;
                            op_counter += 1;
                            out.data[(oc * out_h + oy) * out_w + ox] = value;
                        }
                    }
                }
                out
            }
            LayerSpec::Fc {
                in_features,
                out_features,
            } => {
                if current.data.len() != in_features {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {index}: fc expects {in_features} inputs, got {}",
                        current.data.len()
                    )));
                }
                // Implicit flatten: CHW data is already row-major.
                let mut out = Tensor::zeros(TensorShape::Flat(out_features));
                for o in 0..out_features {
                    let row = &layer_weights[o * in_features..(o + 1) * in_features];
                    let row: Vec<f64> = row.iter().map(|w| *w as f64).collect();
                    out.data[o] = execute_vector(
                        &row,
                        &current.data,
                        &fc_unit,
                        quant,
                        max_noise,
                        derive_seed(seed, op_counter),
                    )?;
                    op_counter += 1;
                }
                out
            }
            LayerSpec::Pool { pool_h, pool_w, stride } => max_pool(&current, pool_h, pool_w, stride, index)?,
            LayerSpec::BatchNorm => current,
        };
        if layer.is_photonic() && index != last {
            for v in &mut current.data {
                *v = v.max(0.0);
            }
        }
    }
    Ok(current)
}

fn max_pool(input: &Tensor, pool_h: usize, pool_w: usize, stride: usize, index: usize) -> Result<Tensor> {
    let (c_n, h, w) = match input.shape {
        TensorShape::Chw(c, h, w) => (c, h, w),
        TensorShape::Flat(_) => {
            return Err(Error::ShapeMismatch(format!("layer {index}: pool needs a CHW input")));
        }
    };
    if h < pool_h || w < pool_w || (h - pool_h) % stride != 0 || (w - pool_w) % stride != 0 {
        return Err(Error::ShapeMismatch(format!(
            "layer {index}: pool window/stride incompatible with {h}×{w} input"
        )));
    }
    let out_h = (h - pool_h) / stride + 1;
    let out_w = (w - pool_w) / stride + 1;
    let mut out = Tensor::zeros(TensorShape::Chw(c_n, out_h, out_w));
    for c in 0..c_n {
        for oy in 0..out_h {
            for ox in 0..out_w {
                let mut best = f64::NEG_INFINITY;
                for ky in 0..pool_h {
                    for kx in 0..pool_w {
                        let v = input.data[(c * h + oy * stride + ky) * w + ox * stride + kx];
                        best = best.max(v);
                    }
                }
                out.data[(c * out_h + oy) * out_w + ox] = best;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(vector_size: usize, mrs: usize) -> VDPUnitConfig {
        VDPUnitConfig::for_vector_size(vector_size, mrs).unwrap()
    }

    #[test]
    fn worked_example_half_intensity() {
        // 0.8 imprinted, weighted by 0.5 → 0.4 at the through port.
        let result = execute_op(&[0.5], &[0.8], &unit(1, 1), None, None, 0).unwrap();
        assert_eq!(result, 0.5 * 0.8);
        assert_eq!(result, 0.4);
    }

    #[test]
    fn zero_weights_stay_zero_under_noise() {
        let w = vec![0.0; 10];
        let a = vec![0.7; 10];
        let result = execute_op(&w, &a, &unit(10, 4), None, Some(0.5), 123).unwrap();
        assert_eq!(result, 0.0);
    }

    #[test]
    fn chunked_execution_matches_plain_dot_product() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<f64> = (0..150).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a: Vec<f64> = (0..150).map(|_| rng.random_range(-1.0..1.0)).collect();
        let direct: f64 = w.iter().zip(&a).map(|(x, y)| x * y).sum();
        let chunked = execute_op(&w, &a, &unit(150, 15), None, None, 0).unwrap();
        assert!((chunked - direct).abs() < 1e-12);
    }

    #[test]
    fn result_is_independent_of_bank_size_in_exact_mode() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let w: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
        let reference = execute_op(&w, &a, &unit(60, 1), None, None, 0).unwrap();
        for mrs in 2..=15 {
            let other = execute_op(&w, &a, &unit(60, mrs), None, None, 0).unwrap();
            assert!((other - reference).abs() < 1e-12);
        }
    }

    #[test]
    fn length_and_capacity_errors() {
        assert!(matches!(
            execute_op(&[1.0, 2.0], &[1.0], &unit(4, 2), None, None, 0),
            Err(Error::LengthMismatch(_))
        ));
        assert!(matches!(
            execute_op(&[1.0; 9], &[1.0; 9], &unit(4, 2), None, None, 0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn noise_zero_is_bitwise_noop() {
        let w = [0.3, -0.2, 0.9];
        let a = [0.5, 0.5, -0.1];
        let clean = execute_op(&w, &a, &unit(3, 2), None, None, 7).unwrap();
        let zeroed = execute_op(&w, &a, &unit(3, 2), None, Some(0.0), 7).unwrap();
        assert_eq!(clean.to_bits(), zeroed.to_bits());
    }

    #[test]
    fn noisy_execution_is_seed_deterministic() {
        let w = [0.3, -0.2, 0.9, 0.4];
        let a = [0.5, 0.5, -0.1, 0.2];
        let u = unit(4, 2);
        let first = execute_op(&w, &a, &u, None, Some(0.1), 42).unwrap();
        let second = execute_op(&w, &a, &u, None, Some(0.1), 42).unwrap();
        let other_seed = execute_op(&w, &a, &u, None, Some(0.1), 43).unwrap();
        assert_eq!(first.to_bits(), second.to_bits());
        assert_ne!(first.to_bits(), other_seed.to_bits());
    }

    #[test]
    fn quantize_zero_maps_to_zero() {
        for bits in 1..=16 {
            let spec = QuantizationSpec::new(bits, 1.0).unwrap();
            assert_eq!(quantize(0.0, &spec).unwrap(), 0.0);
        }
    }

    #[test]
    fn quantize_one_bit_grid() {
        let spec = QuantizationSpec::new(1, 1.0).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        let mut x = -2.0;
        while x <= 2.0 {
            let q = quantize(x, &spec).unwrap();
            seen.insert((q * 1000.0).round() as i64);
            x += 0.05;
        }
        assert_eq!(
            seen.into_iter().collect::<Vec<_>>(),
            vec![-1000, 0, 1000],
            "1-bit outputs must be -range, 0, +range"
        );
    }

    #[test]
    fn quantize_error_bound_by_scan() {
        let spec = QuantizationSpec::new(8, 1.0).unwrap();
        let bound = 1.0 / 256.0;
        let mut x = -1.0;
        while x <= 1.0 {
            let q = quantize(x, &spec).unwrap();
            assert!((q - x).abs() <= bound + 1e-15, "error at {x}");
            x += 1e-3;
        }
    }

    #[test]
    fn quantize_is_idempotent() {
        let spec = QuantizationSpec::new(5, 0.7).unwrap();
        let mut x = -1.0;
        while x <= 1.0 {
            let once = quantize(x, &spec).unwrap();
            let twice = quantize(once, &spec).unwrap();
            assert_eq!(once.to_bits(), twice.to_bits());
            x += 0.01;
        }
    }

    #[test]
    fn quantize_rejects_zero_bits() {
        let spec = QuantizationSpec { bits: 0, range: 1.0 };
        assert!(matches!(
            quantize(0.5, &spec),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn model_execution_reports_shape_errors_by_layer() {
        use crate::perf::AcceleratorConfig;
        use crate::workload::{LayerSpec, ModelSpec, ModelWeights};
        let model = ModelSpec {
            name: "shapes".into(),
            layers: vec![LayerSpec::Fc {
                in_features: 4,
                out_features: 2,
            }],
            weights: None,
        };
        let weights = ModelWeights::synthetic(&model, 0);
        let cfg = AcceleratorConfig {
            conv_vector_size: 4,
            fc_vector_size: 8,
            conv_units: 2,
            fc_units: 1,
            mrs_per_bank: 4,
            ..Default::default()
        };
        let bad_input = Tensor::zeros(TensorShape::Flat(5));
        let err = execute_model(&model, &weights, &bad_input, &cfg, None, None, 0).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));

        let wrong_weights = ModelWeights {
            per_layer: vec![vec![0.0; 3]],
        };
        let input = Tensor::zeros(TensorShape::Flat(4));
        let err = execute_model(&model, &wrong_weights, &input, &cfg, None, None, 0).unwrap_err();
        assert!(err.to_string().contains("layer 0"), "{err}");
    }

    #[test]
    fn unit_capacity_must_cover_vector() {
        let bad = VDPUnitConfig {
            vector_size: 40,
            mrs_per_bank: 10,
            arms: 2,
            wavelengths_per_arm: 10,
        };
        assert!(bad.validate().is_err());
        assert!(unit(40, 10).validate().is_ok());
    }

    #[test]
    fn unit_rejects_more_than_fifteen_mrs() {
        assert!(VDPUnitConfig::for_vector_size(20, 16).is_err());
    }

    #[test]
    fn tensor_io_roundtrip_and_json_arrays() {
        let t = Tensor::from_json_array("[0.5, -1.0, 2.0, 0.25]", TensorShape::Flat(4)).unwrap();
        assert_eq!(t.data, vec![0.5, -1.0, 2.0, 0.25]);
        assert!(Tensor::from_json_array("[1.0]", TensorShape::Flat(2)).is_err());

        let dir = std::env::temp_dir().join("photosim-vdp-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tensor.bin");
        t.to_f32_file(&path).unwrap();
        let back = Tensor::from_f32_file(&path, TensorShape::Flat(4)).unwrap();
        assert_eq!(back.data, t.data);
    }
}
