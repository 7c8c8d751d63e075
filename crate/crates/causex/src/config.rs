//! Run settings, from flags and an optional TOML file.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use causex_core::classifier::{BackendKind, Preprocessing};
use causex_core::explain::ExplainConfig;
use causex_core::responsibility::{Partitioning, ResponsibilityConfig};
use causex_core::{Baseline, ClassifierSpec, Execution, Shape};
use serde::{Deserialize, Serialize};

/// Algorithm settings shared by `explain` and `batch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub delta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub baseline: f32,
    pub precision_dp: u32,
    pub branching: usize,
    pub min_area: usize,
    /// Force single-threaded evaluation.
    pub sequential: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            delta: 1.0,
            seed: 0,
            iterations: 20,
            baseline: 0.0,
            precision_dp: 4,
            branching: 4,
            min_area: 4,
            sequential: false,
        }
    }
}

impl RunConfig {
    pub fn execution(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    pub fn responsibility(&self) -> ResponsibilityConfig {
        ResponsibilityConfig {
            seed: self.seed,
            iterations: self.iterations,
            partitioning: Partitioning::Random { branching: self.branching },
            min_area: self.min_area,
            execution: self.execution(),
            ..Default::default()
        }
    }

    pub fn explain(&self) -> ExplainConfig {
        ExplainConfig { precision_dp: self.precision_dp, ..Default::default() }
    }

    pub fn baseline(&self) -> Baseline {
        Baseline::Constant(self.baseline)
    }
}

/// Which classifier to run and how to shape its input.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSelection {
    /// `onnx`, `subprocess` or `builtin:<name>`.
    pub backend: Option<String>,
    /// Manifest or `.onnx` path, or the subprocess command line.
    pub model: Option<String>,
    /// `HxWxC`; required for subprocess models.
    pub input_shape: Option<String>,
    /// Required for subprocess models.
    pub classes: Option<usize>,
}

/// Everything a `--config` file may hold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub run: RunConfig,
    pub model: ModelSelection,
    pub taxonomy_edges: Option<PathBuf>,
    pub class_map: Option<PathBuf>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn parse_shape(s: &str) -> anyhow::Result<Shape> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("bad shape {s:?}, expected HxW or HxWxC"))?;
    let shape = match nums[..] {
        [h, w] => Shape::new(h, w, 1),
        [h, w, c] => Shape::new(h, w, c),
        _ => bail!("bad shape {s:?}, expected HxW or HxWxC"),
    }?;
    Ok(shape)
}

/// Locates the JSON sidecar for an exported model: the path itself if it is
/// JSON, else `<stem>.manifest.json` next to the `.onnx` file.
fn manifest_path(model: &str) -> PathBuf {
    let p = PathBuf::from(model);
    if p.extension().is_some_and(|e| e == "json") {
        return p;
    }
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    p.with_file_name(format!("{stem}.manifest.json"))
}

impl ModelSelection {
    /// Builds the classifier spec. `native` is the shape of the input image,
    /// used by builtins when no shape is given.
    pub fn spec(&self, native: Option<Shape>) -> anyhow::Result<ClassifierSpec> {
        let backend = self.backend.as_deref().unwrap_or("onnx");
        let shape = self.input_shape.as_deref().map(parse_shape).transpose()?;
        let spec = if let Some(name) = backend.strip_prefix("builtin:") {
            let model = name.parse().map_err(anyhow::Error::msg)?;
            let Some(shape) = shape.or(native) else {
                bail!("builtin models need --input-shape when no image is given");
            };
            ClassifierSpec::builtin(model, shape)
        } else if backend == "onnx" {
            let Some(model) = &self.model else { bail!("--model is required for the onnx backend") };
            let spec = ClassifierSpec::from_onnx_manifest(&manifest_path(model))?;
            if let Some(s) = shape {
                if s != spec.input_shape {
                    bail!("--input-shape {s} disagrees with the model manifest ({})", spec.input_shape);
                }
            }
            spec
        } else if backend == "subprocess" {
            let Some(model) = &self.model else { bail!("--model is required for the subprocess backend") };
            let command: Vec<String> = model.split_whitespace().map(str::to_string).collect();
            let Some(input_shape) = shape else { bail!("--input-shape is required for the subprocess backend") };
            let Some(class_count) = self.classes else { bail!("--classes is required for the subprocess backend") };
            ClassifierSpec {
                backend: BackendKind::Subprocess { command },
                input_shape,
                preprocessing: Preprocessing::default(),
                class_count,
            }
        } else {
            bail!("unknown backend {backend:?}; use onnx, subprocess or builtin:<name>");
        };
        spec.validate()?;
        Ok(spec)
    }
}
