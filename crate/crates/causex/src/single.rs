//! One image end to end: responsibility, explanation, adjustment, artifacts.

use std::path::Path;

use anyhow::Context;
use causex_core::explain::{self, ExplanationRecord, PartialWitness, ValidityFlags};
use causex_core::imagery::{compose, occlude};
use causex_core::responsibility::{self, ResponsibilityLandscape};
use causex_core::{Classifier, ClassifierOutput, Error, ImageTensor, PixelMask};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::imageio::save_tensor_png;

/// Everything computed for one image.
#[derive(Debug, Clone)]
pub struct Explained {
    pub record: ExplanationRecord,
    pub landscape: ResponsibilityLandscape,
    /// Classification of the adjustment pixels alone over the baseline.
    pub adjustment_output: ClassifierOutput,
    /// Classification of contrastive plus adjustment pixels over the baseline.
    pub complete_output: ClassifierOutput,
}

/// Runs the full pipeline on a tensor already shaped for the classifier.
pub fn explain_tensor(classifier: &Classifier, image: &ImageTensor, cfg: &RunConfig) -> causex_core::Result<Explained> {
    let baseline = cfg.baseline();
    let landscape = responsibility::pixel_ranking(classifier, image, &baseline, &cfg.responsibility())?;
    let ecfg = cfg.explain();
    let mut record = explain::sufficient_contrastive(classifier, image, &baseline, cfg.delta, &landscape, &ecfg)?;
    explain::adjustment_discovery(classifier, image, &baseline, &landscape, &mut record, &ecfg)?;
    let outputs = classifier.classify_batch(&[
        compose(image, &record.adjustment, &baseline)?,
        compose(image, &record.complete(), &baseline)?,
    ])?;
    let [adjustment_output, complete_output]: [ClassifierOutput; 2] =
        outputs.try_into().expect("two outputs for two images");
    Ok(Explained { record, landscape, adjustment_output, complete_output })
}

fn pct(mask: &PixelMask) -> f64 {
    mask.coverage_pct()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSizes {
    pub sufficient_pct: f64,
    pub contrastive_pct: f64,
    pub adjustment_pct: f64,
}

/// JSON form of a finished explanation. Holds no timings, so reruns with the
/// same settings produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordJson {
    pub image_id: String,
    pub model_ref: String,
    pub input_shape: String,
    pub config: RunConfig,
    pub original_label: usize,
    pub original_confidence: f64,
    pub delta: f64,
    pub tau: f64,
    pub prefix_len: usize,
    pub sufficient: Vec<usize>,
    pub sufficient_confidence: f64,
    pub contrastive: Vec<usize>,
    pub contrast_label: usize,
    pub contrast_confidence: f64,
    pub adjustment: Vec<usize>,
    pub adjustment_label: usize,
    pub adjustment_confidence: f64,
    pub complete_confidence: f64,
    pub precision_dp: u32,
    pub flags: ValidityFlags,
    pub sizes: SetSizes,
    pub landscape_degenerate: bool,
}

impl RecordJson {
    pub fn new(image_id: &str, classifier: &Classifier, cfg: &RunConfig, e: &Explained) -> Self {
        let r = &e.record;
        RecordJson {
            image_id: image_id.to_string(),
            model_ref: classifier.spec().backend.model_ref(),
            input_shape: classifier.spec().input_shape.to_string(),
            config: cfg.clone(),
            original_label: r.original_label,
            original_confidence: r.original_confidence,
            delta: r.delta,
            tau: r.tau,
            prefix_len: r.prefix_len,
            sufficient: r.sufficient.iter().collect(),
            sufficient_confidence: r.sufficient_confidence,
            contrastive: r.contrastive.iter().collect(),
            contrast_label: r.contrast_label,
            contrast_confidence: r.contrast_confidence,
            adjustment: r.adjustment.iter().collect(),
            adjustment_label: e.adjustment_output.label,
            adjustment_confidence: e.adjustment_output.confidence(),
            complete_confidence: e.complete_output.confidence_of(r.original_label),
            precision_dp: r.precision_dp,
            flags: r.flags,
            sizes: SetSizes {
                sufficient_pct: pct(&r.sufficient),
                contrastive_pct: pct(&r.contrastive),
                adjustment_pct: pct(&r.adjustment),
            },
            landscape_degenerate: e.landscape.degenerate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum Status {
    Ok,
    NotFound { witness: PartialWitness },
    Error { reason: String },
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NotFound { .. } => "not_found",
            Status::Error { .. } => "error",
        }
    }
}

/// Contents of `record.json` when no explanation was produced.
#[derive(Serialize)]
struct FailureJson<'a> {
    image_id: &'a str,
    #[serde(flatten)]
    status: &'a Status,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub image_id: String,
    pub status: Status,
    pub record: Option<RecordJson>,
    pub wallclock_ms: u64,
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes `record.json`, the three mask PNGs, the landscape and previews.
pub fn write_artifacts(
    dir: &Path,
    image: &ImageTensor,
    cfg: &RunConfig,
    explained: &Explained,
    record: &RecordJson,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let r = &explained.record;
    let baseline = cfg.baseline();
    write_json(&dir.join("record.json"), record)?;
    r.sufficient.save_png(&dir.join("sufficient.png"))?;
    r.contrastive.save_png(&dir.join("contrastive.png"))?;
    r.adjustment.save_png(&dir.join("adjustment.png"))?;
    explained.landscape.save(dir, "responsibility")?;
    explained.landscape.save_heatmap_png(&dir.join("responsibility.png"))?;
    save_tensor_png(image, &dir.join("preview_original.png"))?;
    save_tensor_png(&compose(image, &r.sufficient, &baseline)?, &dir.join("preview_sufficient.png"))?;
    save_tensor_png(&occlude(image, &r.contrastive, &baseline)?, &dir.join("preview_contrast.png"))?;
    save_tensor_png(&compose(image, &r.adjustment, &baseline)?, &dir.join("preview_adjustment.png"))?;
    save_tensor_png(&compose(image, &r.complete(), &baseline)?, &dir.join("preview_complete.png"))?;
    Ok(())
}

/// Explains one tensor and writes its artifacts to `dir`. Failures of the
/// explanation itself become a status; only I/O problems are errors.
pub fn run_tensor(
    image_id: &str,
    image: &ImageTensor,
    classifier: &Classifier,
    cfg: &RunConfig,
    dir: &Path,
) -> anyhow::Result<Outcome> {
    let start = std::time::Instant::now();
    let result = explain_tensor(classifier, image, cfg);
    let wallclock_ms = start.elapsed().as_millis() as u64;
    let (status, record) = match result {
        Ok(explained) => {
            let record = RecordJson::new(image_id, classifier, cfg, &explained);
            write_artifacts(dir, image, cfg, &explained, &record)?;
            (Status::Ok, Some(record))
        }
        Err(Error::NoExplanation(witness)) => (Status::NotFound { witness: *witness }, None),
        Err(e) => (Status::Error { reason: e.to_string() }, None),
    };
    if record.is_none() {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("record.json"), &FailureJson { image_id, status: &status })?;
    }
    Ok(Outcome { image_id: image_id.to_string(), status, record, wallclock_ms })
}

/// Loads an image file, fits it to the classifier, explains it. The image
/// id is the file stem.
pub fn run_single(image_path: &Path, classifier: &Classifier, cfg: &RunConfig, dir: &Path) -> anyhow::Result<Outcome> {
    let image_id = image_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into());
    run_file(&image_id, image_path, classifier, cfg, dir)
}

pub fn run_file(
    image_id: &str,
    image_path: &Path,
    classifier: &Classifier,
    cfg: &RunConfig,
    dir: &Path,
) -> anyhow::Result<Outcome> {
    let spec = classifier.spec();
    match crate::imageio::load_image(image_path, spec.input_shape, spec.preprocessing.value_range) {
        Ok(image) => run_tensor(image_id, &image, classifier, cfg, dir),
        Err(e) => {
            let status = Status::Error { reason: format!("{e:#}") };
            std::fs::create_dir_all(dir)?;
            write_json(&dir.join("record.json"), &FailureJson { image_id, status: &status })?;
            Ok(Outcome { image_id: image_id.to_string(), status, record: None, wallclock_ms: 0 })
        }
    }
}
