//! Exhaustive ground truth on tiny grids.
//!
//! Every pixel is either kept at its image value or replaced by the
//! baseline, so a grid of `n` pixels has `2^n` interventions. Deciding
//! contrastive explanations is intractable in general, so enumeration is
//! capped at [`MAX_ORACLE_PIXELS`].

use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, ClassifierOutput, ClassifierSpec};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::explain::{self, ExplainConfig, Predicate};
use crate::imagery::{compose, Baseline, ImageTensor, PixelMask};
use crate::responsibility::{self, ResponsibilityConfig};

pub const MAX_ORACLE_PIXELS: usize = 16;

const TABLE_BATCH: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyInstance {
    pub image: ImageTensor,
    pub classifier: ClassifierSpec,
    pub baseline: Baseline,
}

impl TinyInstance {
    pub fn new(image: ImageTensor, classifier: ClassifierSpec, baseline: Baseline) -> Result<Self> {
        let n = image.height() * image.width();
        if n > MAX_ORACLE_PIXELS {
            return Err(Error::Refused(format!(
                "{n} pixels exceeds the exhaustive bound of {MAX_ORACLE_PIXELS}"
            )));
        }
        if image.shape() != classifier.input_shape {
            return Err(Error::Input(format!(
                "image shape {} does not match classifier input {}",
                image.shape(),
                classifier.input_shape
            )));
        }
        baseline.validate_for(&image)?;
        Ok(TinyInstance { image, classifier, baseline })
    }

    pub fn pixels(&self) -> usize {
        self.image.height() * self.image.width()
    }
}

/// Classifier output for every keep-set, indexed by its bit pattern.
pub struct OracleTable {
    height: usize,
    width: usize,
    n: usize,
    original: ClassifierOutput,
    keep: Vec<ClassifierOutput>,
}

impl OracleTable {
    pub fn build(inst: &TinyInstance, execution: Execution) -> Result<Self> {
        let n = inst.pixels();
        if n > MAX_ORACLE_PIXELS {
            return Err(Error::Refused(format!("{n} pixels exceeds {MAX_ORACLE_PIXELS}")));
        }
        let (h, w) = (inst.image.height(), inst.image.width());
        let classifier = Classifier::load_with(inst.classifier.clone(), Execution::Sequential)?;
        let words = 1usize << n;
        let chunks: Vec<(usize, usize)> = (0..words)
            .step_by(TABLE_BATCH)
            .map(|s| (s, (s + TABLE_BATCH).min(words)))
            .collect();
        let parts = execution.try_map(&chunks, |&(lo, hi)| {
            let images = (lo..hi)
                .map(|word| compose(&inst.image, &PixelMask::from_word(h, w, word as u64), &inst.baseline))
                .collect::<Result<Vec<_>>>()?;
            classifier.classify_batch(&images)
        })?;
        let keep: Vec<ClassifierOutput> = parts.into_iter().flatten().collect();
        let original = keep[words - 1].clone();
        Ok(OracleTable { height: h, width: w, n, original, keep })
    }

    fn full(&self) -> usize {
        (1usize << self.n) - 1
    }

    pub fn original(&self) -> &ClassifierOutput {
        &self.original
    }

    /// Keeping only `word` retains the label with confidence ≥ delta × original.
    pub fn is_sufficient(&self, word: usize, delta: f64) -> bool {
        let out = &self.keep[word];
        let l = self.original.label;
        out.label == l && out.confidence_of(l) >= delta * self.original.confidence()
    }

    /// Occluding `word` changes the label.
    pub fn is_contrastive(&self, word: usize) -> bool {
        self.keep[self.full() ^ word].label != self.original.label
    }

    /// Words satisfying `pred` with no strictly smaller satisfying subset,
    /// ordered by cardinality, then numeric value.
    fn minimal_words(&self, pred: impl Fn(usize) -> bool) -> Vec<usize> {
        let words = 1usize << self.n;
        let sat: Vec<bool> = (0..words).map(&pred).collect();
        // below[m]: some strict subset of m satisfies the predicate
        let mut below = vec![false; words];
        let mut order: Vec<usize> = (0..words).collect();
        order.sort_by_key(|w| (w.count_ones(), *w));
        for &m in &order {
            let mut bits = m;
            while bits != 0 {
                let b = bits & bits.wrapping_neg();
                bits ^= b;
                let sub = m ^ b;
                if sat[sub] || below[sub] {
                    below[m] = true;
                    break;
                }
            }
        }
        order.into_iter().filter(|m| sat[*m] && !below[*m]).collect()
    }

    fn to_mask(&self, word: usize) -> PixelMask {
        PixelMask::from_word(self.height, self.width, word as u64)
    }

    pub fn minimal_sufficient(&self, delta: f64) -> Vec<PixelMask> {
        self.minimal_words(|w| self.is_sufficient(w, delta))
            .into_iter()
            .map(|w| self.to_mask(w))
            .collect()
    }

    pub fn minimal_contrastive(&self) -> Vec<PixelMask> {
        self.minimal_words(|w| self.is_contrastive(w))
            .into_iter()
            .map(|w| self.to_mask(w))
            .collect()
    }

    /// `1/(1+k)` with `k` the smallest witness set `W` such that occluding
    /// `W` keeps the label and occluding `W ∪ {pixel}` changes it; 0 if none.
    pub fn responsibility(&self, pixel: usize) -> f64 {
        let bit = 1usize << pixel;
        let l = self.original.label;
        let full = self.full();
        let mut best: Option<u32> = None;
        for witness in 0..=full {
            if witness & bit != 0 {
                continue;
            }
            let size = witness.count_ones();
            if best.is_some_and(|b| size >= b) {
                continue;
            }
            let kept = self.keep[full ^ witness].label == l;
            let flipped = self.keep[full ^ witness ^ bit].label != l;
            if kept && flipped {
                best = Some(size);
            }
        }
        best.map_or(0.0, |k| 1.0 / (1.0 + k as f64))
    }
}

pub fn minimal_sufficient_sets(inst: &TinyInstance, delta: f64) -> Result<Vec<PixelMask>> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Input(format!("delta must lie in [0, 1], got {delta}")));
    }
    Ok(OracleTable::build(inst, Execution::default())?.minimal_sufficient(delta))
}

pub fn minimal_contrastive_sets(inst: &TinyInstance) -> Result<Vec<PixelMask>> {
    Ok(OracleTable::build(inst, Execution::default())?.minimal_contrastive())
}

pub fn exact_responsibility(inst: &TinyInstance, pixel: usize) -> Result<f64> {
    if pixel >= inst.pixels() {
        return Err(Error::Input(format!("pixel {pixel} outside the {}-pixel grid", inst.pixels())));
    }
    Ok(OracleTable::build(inst, Execution::default())?.responsibility(pixel))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsibilityRow {
    pub pixel: usize,
    pub exact: f64,
    pub approximate: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyComparison {
    pub sufficient: Vec<usize>,
    pub contains_oracle_minimal: bool,
    pub shrunk: Vec<usize>,
    pub oracle_min_size: usize,
    pub shrunk_at_least_min: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub classifier: String,
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f32>,
    pub baseline: Baseline,
    pub delta: f64,
    pub original_label: usize,
    pub minimal_sufficient: Vec<Vec<usize>>,
    pub minimal_contrastive: Vec<Vec<usize>>,
    pub responsibility: Vec<ResponsibilityRow>,
    /// `None` when the greedy scan was not applicable (baseline invalid).
    pub greedy: Option<GreedyComparison>,
    pub max_responsibility_diff: f64,
}

/// Runs the oracle and the greedy pipeline side by side on one instance.
pub fn compare_greedy(inst: &TinyInstance, delta: f64) -> Result<OracleReport> {
    let table = OracleTable::build(inst, Execution::default())?;
    let classifier = Classifier::load(inst.classifier.clone())?;
    let minimal_sufficient = table.minimal_sufficient(delta);
    let minimal_contrastive = table.minimal_contrastive();
    let baseline_ok = crate::classifier::validate_baseline(&classifier, &inst.image, &inst.baseline)?;

    let (responsibility, greedy) = if baseline_ok {
        let landscape = responsibility::pixel_ranking(
            &classifier,
            &inst.image,
            &inst.baseline,
            &ResponsibilityConfig::exhaustive(),
        )?;
        let rows: Vec<ResponsibilityRow> = (0..inst.pixels())
            .map(|p| {
                let exact = table.responsibility(p);
                let approximate = landscape.score(p);
                ResponsibilityRow { pixel: p, exact, approximate, abs_diff: (exact - approximate).abs() }
            })
            .collect();
        let record = explain::sufficient_contrastive(
            &classifier,
            &inst.image,
            &inst.baseline,
            delta,
            &landscape,
            &ExplainConfig::default(),
        )?;
        let shrunk = explain::shrink_minimal(
            &classifier,
            &inst.image,
            &inst.baseline,
            &record.sufficient,
            Predicate::Sufficient(delta),
            &landscape,
        )?;
        let oracle_min_size = minimal_sufficient.iter().map(|m| m.len()).min().unwrap_or(0);
        let greedy = GreedyComparison {
            sufficient: record.sufficient.iter().collect(),
            contains_oracle_minimal: minimal_sufficient.iter().any(|m| m.is_subset(&record.sufficient)),
            shrunk: shrunk.iter().collect(),
            oracle_min_size,
            shrunk_at_least_min: shrunk.len() >= oracle_min_size,
        };
        (rows, Some(greedy))
    } else {
        let rows: Vec<ResponsibilityRow> = (0..inst.pixels())
            .map(|p| ResponsibilityRow { pixel: p, exact: table.responsibility(p), approximate: f64::NAN, abs_diff: f64::NAN })
            .collect();
        (rows, None)
    };
    let max_responsibility_diff = responsibility
        .iter()
        .map(|r: &ResponsibilityRow| r.abs_diff)
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max);

    Ok(OracleReport {
        classifier: inst.classifier.backend.model_ref(),
        height: inst.image.height(),
        width: inst.image.width(),
        pixels: inst.image.data().to_vec(),
        baseline: inst.baseline.clone(),
        delta,
        original_label: table.original().label,
        minimal_sufficient: minimal_sufficient.iter().map(|m| m.iter().collect()).collect(),
        minimal_contrastive: minimal_contrastive.iter().map(|m| m.iter().collect()).collect(),
        responsibility,
        greedy,
        max_responsibility_diff,
    })
}
