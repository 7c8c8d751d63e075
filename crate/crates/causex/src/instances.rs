//! Tiny oracle instances, by name or from a JSON file.

use std::path::Path;

use anyhow::Context;
use causex_core::oracle::TinyInstance;
use causex_core::{Baseline, ClassifierSpec, ImageTensor, Shape};
use serde::{Deserialize, Serialize};

/// On-disk instance: a grayscale grid and a builtin classifier name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub classifier: String,
    pub height: usize,
    pub width: usize,
    /// Row-major values in [0, 1].
    pub pixels: Vec<f32>,
    #[serde(default)]
    pub baseline: f32,
}

impl InstanceFile {
    pub fn build(&self) -> anyhow::Result<TinyInstance> {
        let model = self.classifier.parse().map_err(anyhow::Error::msg)?;
        let spec = ClassifierSpec::builtin(model, Shape::new(self.height, self.width, 1)?);
        spec.validate()?;
        let image = ImageTensor::from_gray(self.height, self.width, (0.0, 1.0), &self.pixels)?;
        Ok(TinyInstance::new(image, spec, Baseline::Constant(self.baseline))?)
    }
}

/// `<builtin>` or `<builtin>@HxW` (all pixels on, baseline 0), or a path to
/// an [`InstanceFile`].
pub fn resolve(token: &str) -> anyhow::Result<TinyInstance> {
    let path = Path::new(token);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let file: InstanceFile =
            serde_json::from_str(&text).with_context(|| format!("parsing instance {}", path.display()))?;
        return file.build();
    }
    let (name, shape) = match token.rsplit_once('@') {
        Some((n, s)) => (n, crate::config::parse_shape(s)?),
        None => (token, Shape::new(2, 2, 1)?),
    };
    anyhow::ensure!(shape.channels == 1, "named instances are single-channel");
    InstanceFile {
        classifier: name.to_string(),
        height: shape.height,
        width: shape.width,
        pixels: vec![1.0; shape.pixels()],
        baseline: 0.0,
    }
    .build()
    .with_context(|| format!("{token:?} is neither an instance file nor a builtin name"))
}
