//! Black-box classifier handle.
//!
//! Three backends sit behind one [`Classifier`]: an ONNX graph, an external
//! process speaking newline-delimited JSON, and small closed-form builtins
//! used for testing. Preprocessing (mean/std normalisation) happens here, so
//! callers only ever deal with raw pixel values.

mod builtin;
#[cfg(feature = "onnx")]
mod onnx;
pub mod protocol;
mod subprocess;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

pub use builtin::BuiltinModel;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::imagery::{Baseline, ImageTensor, Shape};

/// Tolerance on the sum of a probability vector before it is treated as logits.
const PROB_SUM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TensorLayout {
    #[default]
    Nchw,
    Nhwc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Logits,
    Probs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BackendKind {
    OnnxFile {
        path: PathBuf,
        #[serde(default)]
        layout: TensorLayout,
        scores: ScoreKind,
    },
    Subprocess {
        command: Vec<String>,
    },
    Builtin {
        name: BuiltinModel,
    },
}

impl BackendKind {
    /// Human-readable reference for manifests and records.
    pub fn model_ref(&self) -> String {
        match self {
            BackendKind::OnnxFile { path, .. } => path.display().to_string(),
            BackendKind::Subprocess { command } => command.join(" "),
            BackendKind::Builtin { name } => format!("builtin:{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    /// Per-channel (or single broadcast) mean subtracted before inference.
    pub mean: Vec<f32>,
    pub std: Vec<f32>,
    /// Range of raw pixel values the engine works in.
    pub value_range: (f32, f32),
}

impl Default for Preprocessing {
    fn default() -> Self {
        Preprocessing { mean: vec![0.0], std: vec![1.0], value_range: (0.0, 1.0) }
    }
}

impl Preprocessing {
    fn component(values: &[f32], ch: usize) -> f32 {
        if values.len() == 1 {
            values[0]
        } else {
            values[ch]
        }
    }

    fn apply(&self, image: &ImageTensor) -> Vec<f32> {
        let c = image.channels();
        image
            .data()
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let ch = i % c;
                (v - Self::component(&self.mean, ch)) / Self::component(&self.std, ch)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub backend: BackendKind,
    pub input_shape: Shape,
    pub preprocessing: Preprocessing,
    pub class_count: usize,
}

impl ClassifierSpec {
    /// Builtin classifier over an `height`×`width`×`channels` grid with identity preprocessing.
    pub fn builtin(name: BuiltinModel, input_shape: Shape) -> Self {
        ClassifierSpec {
            class_count: name.class_count(),
            backend: BackendKind::Builtin { name },
            input_shape,
            preprocessing: Preprocessing::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.input_shape.channels;
        let p = &self.preprocessing;
        for (what, v) in [("mean", &p.mean), ("std", &p.std)] {
            if v.len() != 1 && v.len() != c {
                return Err(Error::Config(format!(
                    "preprocessing {what} has {} components for {c} channels",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(format!("preprocessing {what} is not finite")));
            }
        }
        if p.std.contains(&0.0) {
            return Err(Error::Config("preprocessing std has a zero component".into()));
        }
        let (lo, hi) = p.value_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad value range [{lo}, {hi}]")));
        }
        if self.class_count < 2 {
            return Err(Error::Config(format!(
                "class_count must be at least 2, got {}",
                self.class_count
            )));
        }
        if let BackendKind::Builtin { name } = &self.backend {
            name.check_fits(self.input_shape.pixels())?;
            if name.class_count() != self.class_count {
                return Err(Error::Config(format!(
                    "builtin {name} has {} classes, spec says {}",
                    name.class_count(),
                    self.class_count
                )));
            }
        }
        if let BackendKind::Subprocess { command } = &self.backend {
            if command.is_empty() {
                return Err(Error::Config("subprocess command is empty".into()));
            }
        }
        Ok(())
    }

    /// Reads the JSON sidecar that accompanies an exported ONNX model.
    pub fn from_onnx_manifest(manifest_path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(manifest_path)?;
        let m: OnnxManifest = serde_json::from_str(&text)?;
        let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
        let [h, w, c] = m.input_shape;
        let spec = ClassifierSpec {
            backend: BackendKind::OnnxFile {
                path: base.join(&m.onnx_path),
                layout: m.layout.unwrap_or_default(),
                scores: m.logits_or_probs,
            },
            input_shape: Shape::new(h, w, c)?,
            preprocessing: Preprocessing {
                mean: m.mean,
                std: m.std,
                value_range: m.value_range.unwrap_or((0.0, 1.0)),
            },
            class_count: m.class_count,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// An image of the right shape and range filled with the baseline.
    pub fn baseline_image(&self, baseline: &Baseline) -> Result<ImageTensor> {
        let s = self.input_shape;
        let data = (0..s.len()).map(|i| baseline.value(i % s.channels)).collect();
        ImageTensor::new(s, self.preprocessing.value_range, data)
    }
}

/// Sidecar written next to an exported ONNX model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnnxManifest {
    #[serde(default)]
    pub model_name: Option<String>,
    pub onnx_path: PathBuf,
    /// `[H, W, C]`.
    pub input_shape: [usize; 3],
    pub mean: Vec<f32>,
    pub std: Vec<f32>,
    pub class_count: usize,
    pub logits_or_probs: ScoreKind,
    #[serde(default)]
    pub opset: Option<u32>,
    #[serde(default)]
    pub source_weights_id: Option<String>,
    #[serde(default)]
    pub layout: Option<TensorLayout>,
    #[serde(default)]
    pub value_range: Option<(f32, f32)>,
}

/// Top label and full post-softmax confidence vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierOutput {
    pub label: usize,
    pub confidences: Vec<f64>,
}

impl ClassifierOutput {
    /// Builds an output from a probability vector, choosing the label by
    /// argmax with ties going to the lowest index.
    pub fn from_probs(confidences: Vec<f64>) -> Self {
        let label = argmax(&confidences);
        ClassifierOutput { label, confidences }
    }

    /// Confidence of the top label.
    pub fn confidence(&self) -> f64 {
        self.confidences[self.label]
    }

    /// Confidence assigned to `class`.
    pub fn confidence_of(&self, class: usize) -> f64 {
        self.confidences[class]
    }
}

pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = xs.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Raw answer from a backend before normalisation.
pub(crate) struct RawScores {
    pub reported_label: Option<usize>,
    pub scores: Vec<f64>,
}

/// What each backend implements: scores for already-normalised tensors.
pub(crate) trait Backend: Send + Sync {
    fn infer(&self, shape: Shape, tensors: &[Vec<f32>]) -> Result<Vec<RawScores>>;

    /// Backends that emit logits by construction.
    fn emits_logits(&self) -> bool {
        false
    }
}

/// Shared handle on a classifier. Safe to use from many threads.
pub struct Classifier {
    spec: ClassifierSpec,
    backend: Box<dyn Backend>,
    execution: Execution,
    softmax_applied: AtomicBool,
}

impl std::fmt::Debug for Classifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Classifier")
            .field("spec", &self.spec)
            .field("execution", &self.execution)
            .finish()
    }
}

impl Classifier {
    pub fn load(spec: ClassifierSpec) -> Result<Self> {
        Self::load_with(spec, Execution::default())
    }

    pub fn load_with(spec: ClassifierSpec, execution: Execution) -> Result<Self> {
        spec.validate()?;
        let backend: Box<dyn Backend> = match &spec.backend {
            BackendKind::Builtin { name } => Box::new(builtin::BuiltinBackend::new(name.clone(), execution)),
            BackendKind::Subprocess { command } => {
                Box::new(subprocess::SubprocessBackend::spawn(command)?)
            }
            #[cfg(feature = "onnx")]
            BackendKind::OnnxFile { path, layout, scores } => Box::new(onnx::OnnxBackend::load(
                path,
                spec.input_shape,
                *layout,
                *scores,
                execution,
            )?),
            #[cfg(not(feature = "onnx"))]
            BackendKind::OnnxFile { .. } => {
                return Err(Error::Config(
                    "ONNX support not compiled in (enable the `onnx` feature)".into(),
                ))
            }
        };
        Ok(Classifier { spec, backend, execution, softmax_applied: AtomicBool::new(false) })
    }

    pub fn spec(&self) -> &ClassifierSpec {
        &self.spec
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    /// True once any response has been passed through softmax.
    pub fn softmax_applied(&self) -> bool {
        self.softmax_applied.load(Ordering::Relaxed)
    }

    pub fn classify(&self, image: &ImageTensor) -> Result<ClassifierOutput> {
        let mut out = self.classify_batch(std::slice::from_ref(image))?;
        Ok(out.remove(0))
    }

    /// Classifies a nonempty batch; outputs line up with the inputs.
    pub fn classify_batch(&self, images: &[ImageTensor]) -> Result<Vec<ClassifierOutput>> {
        if images.is_empty() {
            return Err(Error::Input("empty batch".into()));
        }
        let shape = self.spec.input_shape;
        for (i, img) in images.iter().enumerate() {
            if img.shape() != shape {
                return Err(Error::Input(format!(
                    "image {i} has shape {}, classifier expects {shape}",
                    img.shape()
                )));
            }
        }
        let tensors: Vec<Vec<f32>> = images.iter().map(|i| self.spec.preprocessing.apply(i)).collect();
        let raw = self.backend.infer(shape, &tensors)?;
        if raw.len() != images.len() {
            return Err(Error::Protocol(format!(
                "backend returned {} outputs for {} images",
                raw.len(),
                images.len()
            )));
        }
        raw.into_iter().map(|r| self.finish(r)).collect()
    }

    fn finish(&self, raw: RawScores) -> Result<ClassifierOutput> {
        let n = self.spec.class_count;
        if raw.scores.len() != n {
            return Err(Error::Protocol(format!(
                "backend returned {} scores, expected {n}",
                raw.scores.len()
            )));
        }
        if raw.scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Protocol("backend returned a non-finite score".into()));
        }
        let sum: f64 = raw.scores.iter().sum();
        let looks_like_probs = raw.scores.iter().all(|s| (0.0..=1.0).contains(s))
            && (sum - 1.0).abs() <= PROB_SUM_TOLERANCE;
        let probs = if self.backend.emits_logits() || !looks_like_probs {
            self.softmax_applied.store(true, Ordering::Relaxed);
            softmax(&raw.scores)
        } else if (sum - 1.0).abs() > 1e-9 {
            raw.scores.iter().map(|s| s / sum).collect()
        } else {
            raw.scores
        };
        let out = ClassifierOutput::from_probs(probs);
        if let Some(reported) = raw.reported_label {
            if reported >= n {
                return Err(Error::Protocol(format!("label {reported} out of range")));
            }
            // the reported label must at least be a maximum of its own vector
            if out.confidences[reported] < out.confidence() {
                return Err(Error::Protocol(format!(
                    "reported label {reported} is not the top class ({} has higher confidence)",
                    out.label
                )));
            }
        }
        Ok(out)
    }
}

/// True iff the all-baseline image is classified differently from `image`.
/// A baseline sharing the image's label cannot act as a contrast.
pub fn validate_baseline(classifier: &Classifier, image: &ImageTensor, baseline: &Baseline) -> Result<bool> {
    baseline.validate_for(image)?;
    let b = baseline.image_like(image)?;
    let out = classifier.classify_batch(&[image.clone(), b])?;
    Ok(out[0].label != out[1].label)
}
