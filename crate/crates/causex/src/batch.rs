//! Directory-level runs: one explanation per image plus aggregate files.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use causex_core::taxonomy::TaxonomyTree;
use causex_core::Classifier;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::imageio::{is_supported, PREPROCESSING_NOTE};
use crate::single::{run_file, Outcome, Status};
use crate::stats::{write_plot_files, write_stats_csv, StatsRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub image_id: String,
    pub file: String,
    #[serde(flatten)]
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model_ref: String,
    pub dataset_dir: String,
    pub input_shape: String,
    pub preprocessing: String,
    /// Whether model scores were passed through softmax.
    pub softmax_applied: bool,
    pub delta: f64,
    pub seed: u64,
    pub iterations: usize,
    pub baseline: f32,
    pub precision_dp: u32,
    pub started_at: String,
    pub images: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct BatchSummary {
    pub manifest: RunManifest,
    pub rows: Vec<StatsRow>,
}

impl BatchSummary {
    pub fn count(&self, status: &str) -> usize {
        self.manifest.images.iter().filter(|e| e.status.name() == status).count()
    }
}

/// Supported image files in `dir`, sorted by name, each with a unique id
/// (the file stem, or the whole name when two files share a stem).
pub fn list_images(dir: &Path) -> anyhow::Result<Vec<(String, PathBuf)>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_supported(p))
        .collect();
    files.sort();
    let stem = |p: &Path| p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for p in &files {
        *seen.entry(stem(p)).or_default() += 1;
    }
    Ok(files
        .into_iter()
        .map(|p| {
            let s = stem(&p);
            let id = if seen[&s] > 1 { p.file_name().unwrap_or_default().to_string_lossy().into_owned() } else { s };
            (id, p)
        })
        .collect())
}

/// [`list_images`], failing when there are none.
pub fn require_images(dir: &Path) -> anyhow::Result<Vec<(String, PathBuf)>> {
    let images = list_images(dir)?;
    if images.is_empty() {
        bail!("{} contains no supported images ({})", dir.display(), crate::imageio::SUPPORTED_EXTENSIONS.join(", "));
    }
    Ok(images)
}

fn stats_row(outcome: &Outcome, taxonomy: Option<&TaxonomyTree>) -> Option<StatsRow> {
    let r = outcome.record.as_ref()?;
    let dist = |other: usize| taxonomy.and_then(|t| t.shortest_path(r.original_label, other).ok());
    Some(StatsRow {
        image_id: outcome.image_id.clone(),
        sufficient_size_pct: r.sizes.sufficient_pct,
        contrastive_size_pct: r.sizes.contrastive_pct,
        adjustment_size_pct: r.sizes.adjustment_pct,
        original_label: r.original_label,
        contrast_label: r.contrast_label,
        adjustment_label: r.adjustment_label,
        contrast_distance: dist(r.contrast_label),
        adjustment_distance: dist(r.adjustment_label),
        wallclock_ms: outcome.wallclock_ms,
    })
}

/// Explains every supported image in `dataset_dir`, writing one directory
/// per image under `out` plus `manifest.json`, `stats.csv` and plot data.
/// Per-image failures are recorded and never stop the run.
pub fn run_batch(
    dataset_dir: &Path,
    classifier: &Classifier,
    cfg: &RunConfig,
    taxonomy: Option<&TaxonomyTree>,
    out: &Path,
) -> anyhow::Result<BatchSummary> {
    let images = require_images(dataset_dir)?;
    if let Some(t) = taxonomy {
        if let Some(missing) = (0..classifier.spec().class_count).find(|c| t.node_of(*c).is_err()) {
            bail!("class map does not cover class {missing} of the model");
        }
    }
    std::fs::create_dir_all(out)?;
    let started_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let outcomes = cfg
        .execution()
        .try_map(&images, |(id, path)| run_file(id, path, classifier, cfg, &out.join(id)))?;

    let entries = images
        .iter()
        .zip(&outcomes)
        .map(|((id, path), o)| ManifestEntry {
            image_id: id.clone(),
            file: path.file_name().unwrap_or_default().to_string_lossy().into_owned(),
            status: o.status.clone(),
        })
        .collect();
    let spec = classifier.spec();
    let manifest = RunManifest {
        model_ref: spec.backend.model_ref(),
        dataset_dir: dataset_dir.display().to_string(),
        input_shape: spec.input_shape.to_string(),
        preprocessing: PREPROCESSING_NOTE.to_string(),
        softmax_applied: classifier.softmax_applied(),
        delta: cfg.delta,
        seed: cfg.seed,
        iterations: cfg.iterations,
        baseline: cfg.baseline,
        precision_dp: cfg.precision_dp,
        started_at,
        images: entries,
    };
    let rows: Vec<StatsRow> = outcomes.iter().filter_map(|o| stats_row(o, taxonomy)).collect();

    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(out.join("manifest.json"), text)?;
    write_stats_csv(&rows, &out.join("stats.csv"))?;
    write_plot_files(&rows, out)?;
    Ok(BatchSummary { manifest, rows })
}
