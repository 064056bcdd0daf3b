//! DNN workload descriptions and their lowering to fixed-length
//! dot-product schedules with partial-sum structure.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which accelerator sub-unit an op belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerRole {
    Conv,
    Fc,
}

/// One layer of a model. Conv layers use valid (unpadded) convolution;
/// pooling and batch-norm run in the electronic domain and contribute
/// no photonic ops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    Conv {
        kernel_h: usize,
        kernel_w: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        input_h: usize,
        input_w: usize,
    },
    Fc {
        in_features: usize,
        out_features: usize,
    },
    /// Max pooling over non-overlapping-or-strided windows.
    Pool {
        pool_h: usize,
        pool_w: usize,
        stride: usize,
    },
    /// Accepted for model compatibility; treated as identity at
    /// inference (assumed folded into the stored weights).
    BatchNorm,
}

/// Tensor shape flowing between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorShape {
    /// Channels × height × width.
    Chw(usize, usize, usize),
    /// Flat feature vector.
    Flat(usize),
}

impl TensorShape {
    pub fn element_count(&self) -> usize {
        match *self {
            TensorShape::Chw(c, h, w) => c * h * w,
            TensorShape::Flat(n) => n,
        }
    }
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerSpec::Conv {
                kernel_h,
                kernel_w,
                in_channels,
                out_channels,
                stride,
                input_h,
                input_w,
            } => {
                let dims = [kernel_h, kernel_w, in_channels, out_channels, stride, input_h, input_w];
                if dims.contains(&0) {
                    return Err(Error::InvalidParameter(
                        "conv dimensions and stride must be >= 1".into(),
                    ));
                }
                self.conv_output_dims()?;
                Ok(())
            }
            LayerSpec::Fc {
                in_features,
                out_features,
            } => {
                if in_features == 0 || out_features == 0 {
                    return Err(Error::InvalidParameter("fc dimensions must be >= 1".into()));
                }
                Ok(())
            }
            LayerSpec::Pool { pool_h, pool_w, stride } => {
                if pool_h == 0 || pool_w == 0 || stride == 0 {
                    return Err(Error::InvalidParameter(
                        "pool dimensions and stride must be >= 1".into(),
                    ));
                }
                Ok(())
            }
            LayerSpec::BatchNorm => Ok(()),
        }
    }

    /// Output spatial dims of a conv layer; the stride must tile the
    /// input exactly.
    pub fn conv_output_dims(&self) -> Result<(usize, usize)> {
        match *self {
            LayerSpec::Conv {
                kernel_h,
                kernel_w,
                stride,
                input_h,
                input_w,
                ..
            } => {
                if input_h < kernel_h || input_w < kernel_w {
                    return Err(Error::InvalidParameter(
                        "conv kernel larger than its input".into(),
                    ));
                }
                if (input_h - kernel_h) % stride != 0 || (input_w - kernel_w) % stride != 0 {
                    return Err(Error::InvalidParameter(
                        "conv stride does not tile the input exactly".into(),
                    ));
                }
                Ok(((input_h - kernel_h) / stride + 1, (input_w - kernel_w) / stride + 1))
            }
            _ => Err(Error::KindMismatch("not a conv layer".into())),
        }
    }

    /// Shape this layer requires on its input.
    pub fn input_shape(&self) -> Option<TensorShape> {
        match *self {
            LayerSpec::Conv {
                in_channels,
                input_h,
                input_w,
                ..
            } => Some(TensorShape::Chw(in_channels, input_h, input_w)),
            LayerSpec::Fc { in_features, .. } => Some(TensorShape::Flat(in_features)),
            // Pool and BatchNorm take whatever the previous layer produced.
            _ => None,
        }
    }

    /// Shape produced given a compatible input shape.
    pub fn output_shape(&self, input: TensorShape) -> Result<TensorShape> {
        match *self {
            LayerSpec::Conv { out_channels, .. } => {
                let (oh, ow) = self.conv_output_dims()?;
                Ok(TensorShape::Chw(out_channels, oh, ow))
            }
            LayerSpec::Fc { out_features, .. } => Ok(TensorShape::Flat(out_features)),
            LayerSpec::Pool { pool_h, pool_w, stride } => match input {
                TensorShape::Chw(c, h, w) => {
                    if h < pool_h || w < pool_w {
                        return Err(Error::ShapeMismatch("pool window larger than input".into()));
                    }
                    if (h - pool_h) % stride != 0 || (w - pool_w) % stride != 0 {
                        return Err(Error::ShapeMismatch(
                            "pool stride does not tile the input exactly".into(),
                        ));
                    }
                    Ok(TensorShape::Chw(c, (h - pool_h) / stride + 1, (w - pool_w) / stride + 1))
                }
                TensorShape::Flat(_) => {
                    Err(Error::ShapeMismatch("pool layer needs a CHW input".into()))
                }
            },
            LayerSpec::BatchNorm => Ok(input),
        }
    }

    /// Stored weight element count (0 for electronic layers).
    pub fn weight_count(&self) -> usize {
        match *self {
            LayerSpec::Conv {
                kernel_h,
                kernel_w,
                in_channels,
                out_channels,
                ..
            } => out_channels * in_channels * kernel_h * kernel_w,
            LayerSpec::Fc {
                in_features,
                out_features,
            } => out_features * in_features,
            _ => 0,
        }
    }

    pub fn is_photonic(&self) -> bool {
        matches!(self, LayerSpec::Conv { .. } | LayerSpec::Fc { .. })
    }
}

/// A named model: an ordered layer list plus an optional weights file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub layers: Vec<LayerSpec>,
    /// Path to a little-endian f32 weights file, resolved relative to
    /// the model file's directory when loaded from disk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
}

impl ModelSpec {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ModelIo(format!("{}: {e}", path.display())))?;
        let mut model: ModelSpec = serde_json::from_str(&text)
            .map_err(|e| Error::ModelIo(format!("{}: {e}", path.display())))?;
        if let Some(weights) = &model.weights {
            if let Some(dir) = path.parent() {
                model.weights = Some(dir.join(weights).to_string_lossy().into_owned());
            }
        }
        model.validate()?;
        Ok(model)
    }

    /// Check every layer and the shape chain between consecutive
    /// layers, with an implicit flatten at the first Fc layer.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "model '{}' has no layers",
                self.name
            )));
        }
        for (index, layer) in self.layers.iter().enumerate() {
            layer
                .validate()
                .map_err(|e| Error::InvalidParameter(format!("layer {index}: {e}")))?;
        }
        let mut shape = self.input_shape()?;
        for (index, layer) in self.layers.iter().enumerate() {
            if let Some(required) = layer.input_shape() {
                if !shapes_compatible(shape, required) {
                    return Err(Error::ShapeMismatch(format!(
                        "layer {index} expects {required:?} but receives {shape:?}"
                    )));
                }
            }
            shape = layer
                .output_shape(shape)
                .map_err(|e| Error::ShapeMismatch(format!("layer {index}: {e}")))?;
        }
        Ok(())
    }

    /// Input shape required by the first shaped layer.
    pub fn input_shape(&self) -> Result<TensorShape> {
        self.layers
            .iter()
            .find_map(LayerSpec::input_shape)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "model '{}' has no conv or fc layer to anchor its input shape",
                    self.name
                ))
            })
    }

    /// Total multiply-accumulate count over all photonic layers.
    pub fn total_macs(&self) -> Result<usize> {
        let mut total = 0;
        for (index, layer) in self.layers.iter().enumerate() {
            if let Some(schedule) = schedule_layer(layer, index)? {
                total += schedule.total_macs();
            }
        }
        Ok(total)
    }
}

fn shapes_compatible(produced: TensorShape, required: TensorShape) -> bool {
    match (produced, required) {
        (TensorShape::Chw(c, h, w), TensorShape::Chw(rc, rh, rw)) => c == rc && h == rh && w == rw,
        (TensorShape::Flat(n), TensorShape::Flat(rn)) => n == rn,
        // Implicit flatten into an Fc layer.
        (TensorShape::Chw(c, h, w), TensorShape::Flat(rn)) => c * h * w == rn,
        (TensorShape::Flat(_), TensorShape::Chw(..)) => false,
    }
}

/// One full-length dot product before decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DotProductOp {
    pub length: usize,
    pub layer_index: usize,
    pub role: LayerRole,
}

/// A layer lowered to uniform dot products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DotProductSchedule {
    pub ops: Vec<DotProductOp>,
}

impl DotProductSchedule {
    pub fn total_macs(&self) -> usize {
        self.ops.iter().map(|op| op.length).sum()
    }

    /// Chunks every op would need at a given chunk size.
    pub fn chunks_per_op(&self, chunk_size: usize) -> Result<Vec<usize>> {
        self.ops
            .iter()
            .map(|op| Ok(decompose(op.length, chunk_size)?.chunk_count))
            .collect()
    }
}

/// Partial-sum structure of one decomposed dot product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decomposition {
    pub chunk_count: usize,
    /// length mod chunk_size; 0 means every chunk is full.
    pub tail_length: usize,
    /// 1 when partial sums must be re-accumulated, else 0.
    pub accumulation_stages: usize,
}

/// Lower a conv layer: one dot product of length kh×kw×in_channels per
/// (output pixel × output channel).
pub fn conv_to_schedule(layer: &LayerSpec, layer_index: usize) -> Result<DotProductSchedule> {
    match *layer {
        LayerSpec::Conv {
            kernel_h,
            kernel_w,
            in_channels,
            out_channels,
            ..
        } => {
            let (out_h, out_w) = layer.conv_output_dims()?;
            let length = kernel_h * kernel_w * in_channels;
            let op = DotProductOp {
                length,
                layer_index,
                role: LayerRole::Conv,
            };
            Ok(DotProductSchedule {
                ops: vec![op; out_h * out_w * out_channels],
            })
        }
        _ => Err(Error::KindMismatch(format!(
            "conv_to_schedule on a non-conv layer (index {layer_index})"
        ))),
    }
}

/// Lower an fc layer: out_features dot products of length in_features.
pub fn fc_to_schedule(layer: &LayerSpec, layer_index: usize) -> Result<DotProductSchedule> {
    match *layer {
        LayerSpec::Fc {
            in_features,
            out_features,
        } => {
            let op = DotProductOp {
                length: in_features,
                layer_index,
                role: LayerRole::Fc,
            };
            Ok(DotProductSchedule {
                ops: vec![op; out_features],
            })
        }
        _ => Err(Error::KindMismatch(format!(
            "fc_to_schedule on a non-fc layer (index {layer_index})"
        ))),
    }
}

/// Lower any layer; electronic layers produce no schedule.
pub fn schedule_layer(layer: &LayerSpec, layer_index: usize) -> Result<Option<DotProductSchedule>> {
    match layer {
        LayerSpec::Conv { .. } => Ok(Some(conv_to_schedule(layer, layer_index)?)),
        LayerSpec::Fc { .. } => Ok(Some(fc_to_schedule(layer, layer_index)?)),
        _ => Ok(None),
    }
}

/// Split a dot product of `length` into partial sums of `chunk_size`.
pub fn decompose(length: usize, chunk_size: usize) -> Result<Decomposition> {
    if chunk_size == 0 {
        return Err(Error::ContractViolation("chunk_size must be >= 1".into()));
    }
    if length == 0 {
        return Err(Error::ContractViolation("op length must be >= 1".into()));
    }
    let chunk_count = length.div_ceil(chunk_size);
    Ok(Decomposition {
        chunk_count,
        tail_length: length % chunk_size,
        accumulation_stages: usize::from(chunk_count > 1),
    })
}

/// Per-layer weight tensors, stored flat in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub per_layer: Vec<Vec<f32>>,
}

impl ModelWeights {
    /// Read the model's weights file: consecutive little-endian f32
    /// blocks, one per layer, row-major
    /// (conv: out_c × in_c × kh × kw; fc: out_features × in_features).
    pub fn load(model: &ModelSpec) -> Result<Self> {
        let path = model.weights.as_ref().ok_or_else(|| {
            Error::ModelIo(format!("model '{}' names no weights file", model.name))
        })?;
        let bytes = std::fs::read(path).map_err(|e| Error::ModelIo(format!("{path}: {e}")))?;
        let expected: usize = model.layers.iter().map(LayerSpec::weight_count).sum();
        if bytes.len() != expected * 4 {
            return Err(Error::ModelIo(format!(
                "{path}: expected {} bytes ({expected} f32 values), found {}",
                expected * 4,
                bytes.len()
            )));
        }
        let mut values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
        let per_layer = model
            .layers
            .iter()
            .map(|layer| (&mut values).take(layer.weight_count()).collect())
            .collect();
        Ok(Self { per_layer })
    }

    /// Write weights in the same flat layout.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        for layer in &self.per_layer {
            for v in layer {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        std::fs::write(path, bytes).map_err(|e| Error::ModelIo(format!("{}: {e}", path.display())))
    }

    /// Deterministic random weights in [−0.5, 0.5] for tests and
    /// synthetic workloads.
    pub fn synthetic(model: &ModelSpec, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let per_layer = model
            .layers
            .iter()
            .map(|layer| {
                (0..layer.weight_count())
                    .map(|_| rng.random_range(-0.5f32..0.5f32))
                    .collect()
            })
            .collect();
        Self { per_layer }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(
        kernel: usize,
        in_c: usize,
        out_c: usize,
        input: usize,
        stride: usize,
    ) -> LayerSpec {
        LayerSpec::Conv {
            kernel_h: kernel,
            kernel_w: kernel,
            in_channels: in_c,
            out_channels: out_c,
            stride,
            input_h: input,
            input_w: input,
        }
    }

    #[test]
    fn conv_worked_example_is_one_op_of_length_four() {
        // 2×2 kernel over a 2×2 input: a single 4-element dot product.
        let schedule = conv_to_schedule(&conv(2, 1, 1, 2, 1), 0).unwrap();
        assert_eq!(schedule.ops.len(), 1);
        assert_eq!(schedule.ops[0].length, 4);
    }

    #[test]
    fn conv_identity_kernel_is_per_pixel() {
        let schedule = conv_to_schedule(&conv(1, 1, 1, 7, 1), 0).unwrap();
        assert_eq!(schedule.ops.len(), 49);
        assert!(schedule.ops.iter().all(|op| op.length == 1));
    }

    #[test]
    fn conv_counts_match_closed_form() {
        // 3×3 kernel, 8 in, 16 out, 10×10 input → 1024 ops of length 72.
        let schedule = conv_to_schedule(&conv(3, 8, 16, 10, 1), 2).unwrap();
        assert_eq!(schedule.ops.len(), 8 * 8 * 16);
        assert_eq!(schedule.ops[0].length, 72);
        assert_eq!(schedule.total_macs(), 73_728);
        assert_eq!(schedule.ops[0].layer_index, 2);
    }

    #[test]
    fn conv_rejects_fc_layer() {
        let layer = LayerSpec::Fc {
            in_features: 4,
            out_features: 2,
        };
        assert!(matches!(
            conv_to_schedule(&layer, 0),
            Err(Error::KindMismatch(_))
        ));
        assert!(matches!(
            fc_to_schedule(&conv(2, 1, 1, 4, 1), 0),
            Err(Error::KindMismatch(_))
        ));
    }

    #[test]
    fn fc_schedule_shapes() {
        let layer = LayerSpec::Fc {
            in_features: 100,
            out_features: 100,
        };
        let schedule = fc_to_schedule(&layer, 0).unwrap();
        assert_eq!(schedule.ops.len(), 100);
        assert!(schedule.ops.iter().all(|op| op.length == 100));

        let tiny = LayerSpec::Fc {
            in_features: 1,
            out_features: 1,
        };
        let schedule = fc_to_schedule(&tiny, 0).unwrap();
        assert_eq!(schedule.ops.len(), 1);
        assert_eq!(schedule.ops[0].length, 1);

        let mnist_head = LayerSpec::Fc {
            in_features: 784,
            out_features: 10,
        };
        let schedule = fc_to_schedule(&mnist_head, 0).unwrap();
        assert_eq!(schedule.total_macs(), 7_840);
    }

    #[test]
    fn decompose_partial_sums() {
        let d = decompose(4, 2).unwrap();
        assert_eq!(d.chunk_count, 2);
        assert_eq!(d.accumulation_stages, 1);

        let d = decompose(10, 100).unwrap();
        assert_eq!(d.chunk_count, 1);
        assert_eq!(d.accumulation_stages, 0);

        let d = decompose(150, 15).unwrap();
        assert_eq!(d.chunk_count, 10);
        assert_eq!(d.tail_length, 0);
        assert_eq!(d.accumulation_stages, 1);

        assert!(matches!(
            decompose(4, 0),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn decompose_conserves_elements() {
        for length in 1..60usize {
            for chunk in 1..20usize {
                let d = decompose(length, chunk).unwrap();
                assert!(d.chunk_count * chunk >= length);
                assert!((d.chunk_count - 1) * chunk < length);
            }
        }
    }

    #[test]
    fn lowering_is_deterministic() {
        let layer = conv(3, 2, 4, 8, 1);
        assert_eq!(
            conv_to_schedule(&layer, 1).unwrap(),
            conv_to_schedule(&layer, 1).unwrap()
        );
    }

    #[test]
    fn conv_stride_must_tile_exactly() {
        assert!(conv(3, 1, 1, 8, 2).validate().is_err());
        assert!(conv(3, 1, 1, 9, 2).validate().is_ok());
    }

    #[test]
    fn model_shape_chain_with_flatten() {
        let model = ModelSpec {
            name: "chain".into(),
            layers: vec![
                conv(3, 1, 4, 10, 1),
                LayerSpec::Pool {
                    pool_h: 2,
                    pool_w: 2,
                    stride: 2,
                },
                LayerSpec::Fc {
                    in_features: 64,
                    out_features: 10,
                },
            ],
            weights: None,
        };
        model.validate().unwrap();
    }

    #[test]
    fn model_rejects_incompatible_chain() {
        let model = ModelSpec {
            name: "broken".into(),
            layers: vec![
                conv(3, 1, 4, 10, 1),
                LayerSpec::Fc {
                    in_features: 100,
                    out_features: 10,
                },
            ],
            weights: None,
        };
        assert!(matches!(model.validate(), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn weights_roundtrip_through_file() {
        let model = ModelSpec {
            name: "w".into(),
            layers: vec![LayerSpec::Fc {
                in_features: 3,
                out_features: 2,
            }],
            weights: None,
        };
        let weights = ModelWeights::synthetic(&model, 9);
        let dir = std::env::temp_dir().join("photosim-workload-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("weights.bin");
        weights.save(&path).unwrap();
        let mut on_disk = model.clone();
        on_disk.weights = Some(path.to_string_lossy().into_owned());
        let loaded = ModelWeights::load(&on_disk).unwrap();
        assert_eq!(weights, loaded);
    }

    #[test]
    fn weights_length_mismatch_is_reported() {
        let model = ModelSpec {
            name: "w".into(),
            layers: vec![LayerSpec::Fc {
                in_features: 3,
                out_features: 2,
            }],
            weights: None,
        };
        let dir = std::env::temp_dir().join("photosim-workload-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("short.bin");
        std::fs::write(&path, [0u8; 8]).unwrap();
        let mut on_disk = model;
        on_disk.weights = Some(path.to_string_lossy().into_owned());
        assert!(matches!(ModelWeights::load(&on_disk), Err(Error::ModelIo(_))));
    }
}
