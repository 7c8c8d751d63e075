//! Per-image statistics rows and the plot data derived from them.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub image_id: String,
    pub sufficient_size_pct: f64,
    pub contrastive_size_pct: f64,
    pub adjustment_size_pct: f64,
    pub original_label: usize,
    pub contrast_label: usize,
    pub adjustment_label: usize,
    /// Empty when no taxonomy was supplied.
    pub contrast_distance: Option<usize>,
    pub adjustment_distance: Option<usize>,
    pub wallclock_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Sample quantile with linear interpolation between order statistics
/// (position `(n-1)·p` in the sorted data).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(Quartiles {
        n: v.len(),
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
    })
}

pub fn histogram(values: impl IntoIterator<Item = usize>) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for v in values {
        *h.entry(v).or_insert(0) += 1;
    }
    h
}

pub fn write_stats_csv(rows: &[StatsRow], path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record([
            "image_id",
            "sufficient_size_pct",
            "contrastive_size_pct",
            "adjustment_size_pct",
            "original_label",
            "contrast_label",
            "adjustment_label",
            "contrast_distance",
            "adjustment_distance",
            "wallclock_ms",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_stats_csv(path: &Path) -> anyhow::Result<Vec<StatsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

fn write_histogram(h: &BTreeMap<usize, usize>, path: &Path) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["distance", "count"])?;
    for (d, n) in h {
        w.write_record([d.to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the two distance histograms and the size quartiles; works on an
/// empty row set, leaving header-only files.
pub(crate) fn write_plot_files(rows: &[StatsRow], dir: &Path) -> anyhow::Result<()> {
    write_histogram(&histogram(rows.iter().filter_map(|r| r.contrast_distance)), &dir.join("hist_contrast.csv"))?;
    write_histogram(
        &histogram(rows.iter().filter_map(|r| r.adjustment_distance)),
        &dir.join("hist_adjustment.csv"),
    )?;
    let mut w = csv::Writer::from_path(dir.join("sizes_summary.csv"))?;
    w.write_record(["kind", "n", "min", "q1", "median", "q3", "max"])?;
    for kind in ["sufficient", "contrastive", "adjustment"] {
        let values: Vec<f64> = rows
            .iter()
            .map(|r| match kind {
                "sufficient" => r.sufficient_size_pct,
                "contrastive" => r.contrastive_size_pct,
                _ => r.adjustment_size_pct,
            })
            .collect();
        if let Some(q) = quartiles(&values) {
            w.write_record([
                kind.to_string(),
                q.n.to_string(),
                q.min.to_string(),
                q.q1.to_string(),
                q.median.to_string(),
                q.q3.to_string(),
                q.max.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Histogram and box-plot data for a nonempty set of rows.
pub fn emit_plot_data(rows: &[StatsRow], dir: &Path) -> anyhow::Result<()> {
    anyhow::ensure!(!rows.is_empty(), "no statistics rows to summarise");
    write_plot_files(rows, dir)
}
