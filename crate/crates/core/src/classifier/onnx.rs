use std::path::Path;

use tract_onnx::prelude::*;

use super::{Backend, RawScores, ScoreKind, TensorLayout};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::imagery::Shape;

/// ONNX graph evaluated in-process with tract, one image per run. The plan
/// is immutable, so batches fan out across threads.
pub(crate) struct OnnxBackend {
    plan: TypedRunnableModel<TypedModel>,
    layout: TensorLayout,
    scores: ScoreKind,
    execution: Execution,
}

fn backend_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Backend(format!("{}: {e}", path.display()))
}

impl OnnxBackend {
    pub fn load(
        path: &Path,
        shape: Shape,
        layout: TensorLayout,
        scores: ScoreKind,
        execution: Execution,
    ) -> Result<Self> {
        let Shape { height: h, width: w, channels: c } = shape;
        let dims: [usize; 4] = match layout {
            TensorLayout::Nchw => [1, c, h, w],
            TensorLayout::Nhwc => [1, h, w, c],
        };
        let plan = tract_onnx::onnx()
            .model_for_path(path)
            .and_then(|m| m.with_input_fact(0, f32::fact(dims).into()))
            .and_then(|m| m.into_optimized())
            .and_then(|m| m.into_runnable())
            .map_err(|e| backend_err(path, e))?;
        Ok(OnnxBackend { plan, layout, scores, execution })
    }

    fn run_one(&self, shape: Shape, hwc: &[f32]) -> Result<RawScores> {
        let Shape { height: h, width: w, channels: c } = shape;
        let input: Tensor = match self.layout {
            TensorLayout::Nhwc => tract_ndarray::Array4::from_shape_vec((1, h, w, c), hwc.to_vec())
                .map_err(|e| Error::Input(e.to_string()))?
                .into(),
            TensorLayout::Nchw => {
                let mut chw = vec![0f32; hwc.len()];
                for p in 0..h * w {
                    for ch in 0..c {
                        chw[ch * h * w + p] = hwc[p * c + ch];
                    }
                }
                tract_ndarray::Array4::from_shape_vec((1, c, h, w), chw)
                    .map_err(|e| Error::Input(e.to_string()))?
                    .into()
            }
        };
        let out = self
            .plan
            .run(tvec!(input.into()))
            .map_err(|e| Error::Backend(format!("onnx inference failed: {e}")))?;
        let view = out[0]
            .to_array_view::<f32>()
            .map_err(|e| Error::Protocol(format!("onnx output is not f32: {e}")))?;
        Ok(RawScores { reported_label: None, scores: view.iter().map(|v| *v as f64).collect() })
    }
}

impl Backend for OnnxBackend {
    fn infer(&self, shape: Shape, tensors: &[Vec<f32>]) -> Result<Vec<RawScores>> {
        self.execution.try_map(tensors, |t| self.run_one(shape, t))
    }

    fn emits_logits(&self) -> bool {
        self.scores == ScoreKind::Logits
    }
}
