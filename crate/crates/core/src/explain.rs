//! Sufficient, contrastive and complete explanations.
//!
//! [`sufficient_contrastive`] walks the responsibility ranking from the top,
//! growing an insertion context (ranked pixels over the baseline) and a
//! deletion context (ranked pixels replaced by the baseline) in lockstep. It
//! stops at the first prefix that keeps the label with enough confidence
//! when inserted *and* flips the label when deleted.
//!
//! [`adjustment_discovery`] then adds pixels from the bottom of the ranking
//! until the composed image reproduces the original confidence to a fixed
//! number of decimal places.
//!
//! Only the two constructed context families are checked, not every
//! possible context.

use serde::{Deserialize, Serialize};

use crate::classifier::{validate_baseline, Classifier, ClassifierOutput};
use crate::error::{Error, Result};
use crate::imagery::{compose, occlude, Baseline, ImageTensor, PixelMask};
use crate::responsibility::{rank_pixels, RankOrder, ResponsibilityLandscape};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    /// Decimal places used when matching the original confidence.
    pub precision_dp: u32,
    /// Ranked positions evaluated per classifier batch.
    pub chunk_size: usize,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig { precision_dp: 4, chunk_size: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidityFlags {
    pub sufficient_valid: bool,
    pub contrastive_valid: bool,
    pub complete_valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplanationRecord {
    pub sufficient: PixelMask,
    pub contrastive: PixelMask,
    pub adjustment: PixelMask,
    pub delta: f64,
    /// Confidence floor: original confidence × delta.
    pub tau: f64,
    pub original_label: usize,
    pub original_confidence: f64,
    /// Original label's confidence on the sufficient pixels over the baseline.
    pub sufficient_confidence: f64,
    /// Label of the image with the contrastive pixels occluded.
    pub contrast_label: usize,
    pub contrast_confidence: f64,
    /// Prefix length at which the scan stopped.
    pub prefix_len: usize,
    pub precision_dp: u32,
    pub flags: ValidityFlags,
}

impl ExplanationRecord {
    /// Contrastive pixels plus adjustment pixels.
    pub fn complete(&self) -> PixelMask {
        self.contrastive.union(&self.adjustment).expect("masks share dimensions")
    }
}

/// Best the scan managed when no prefix satisfied all three conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialWitness {
    /// Prefix length (1-based) satisfying the most conditions, earliest on ties.
    pub k: usize,
    pub satisfied: u8,
    pub insertion_keeps_label: bool,
    pub deletion_flips_label: bool,
    pub confidence_reached: bool,
    pub insertion_confidence: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyCheck {
    pub holds: bool,
    pub label: usize,
    /// Confidence of the original label on the composed image.
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContrastCheck {
    pub holds: bool,
    pub contrast_label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "delta")]
pub enum Predicate {
    Sufficient(f64),
    Contrastive,
}

/// Rounds half-to-even at `dp` decimal places, as an integer count of units.
pub fn round_units(x: f64, dp: u32) -> i64 {
    (x * 10f64.powi(dp as i32)).round_ties_even() as i64
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Input(format!("delta must lie in [0, 1], got {delta}")));
    }
    Ok(())
}

fn check_landscape(image: &ImageTensor, landscape: &ResponsibilityLandscape) -> Result<()> {
    if landscape.height != image.height() || landscape.width != image.width() {
        return Err(Error::Input(format!(
            "landscape is {}x{}, image is {}x{}",
            landscape.height,
            landscape.width,
            image.height(),
            image.width()
        )));
    }
    Ok(())
}

fn sufficiency_against(
    classifier: &Classifier,
    original: &ClassifierOutput,
    image: &ImageTensor,
    baseline: &Baseline,
    mask: &PixelMask,
    delta: f64,
) -> Result<SufficiencyCheck> {
    let out = classifier.classify(&compose(image, mask, baseline)?)?;
    let confidence = out.confidence_of(original.label);
    Ok(SufficiencyCheck {
        holds: out.label == original.label && confidence >= delta * original.confidence(),
        label: out.label,
        confidence,
    })
}

fn contrast_against(
    classifier: &Classifier,
    original: &ClassifierOutput,
    image: &ImageTensor,
    baseline: &Baseline,
    mask: &PixelMask,
) -> Result<ContrastCheck> {
    let out = classifier.classify(&occlude(image, mask, baseline)?)?;
    Ok(ContrastCheck { holds: out.label != original.label, contrast_label: out.label })
}

/// Does `mask` alone, over the baseline, keep the image's label with at
/// least `delta` × its original confidence?
pub fn check_sufficient(
    classifier: &Classifier,
    image: &ImageTensor,
    baseline: &Baseline,
    mask: &PixelMask,
    delta: f64,
) -> Result<SufficiencyCheck> {
    check_delta(delta)?;
    let original = classifier.classify(image)?;
    sufficiency_against(classifier, &original, image, baseline, mask, delta)
}

/// Does occluding `mask` (everything else kept) change the label?
pub fn check_contrastive(
    classifier: &Classifier,
    image: &ImageTensor,
    baseline: &Baseline,
    mask: &PixelMask,
) -> Result<ContrastCheck> {
    let original = classifier.classify(image)?;
    contrast_against(classifier, &original, image, baseline, mask)
}

/// Finds the shortest prefix of the high-to-low ranking that is both
/// sufficient (with confidence ≥ τ) and contrastive.
pub fn sufficient_contrastive(
    classifier: &Classifier,
    image: &ImageTensor,
    baseline: &Baseline,
    delta: f64,
    landscape: &ResponsibilityLandscape,
    cfg: &ExplainConfig,
) -> Result<ExplanationRecord> {
    check_delta(delta)?;
    check_landscape(image, landscape)?;
    if cfg.chunk_size == 0 {
        return Err(Error::Config("chunk_size must be positive".into()));
    }
    if !validate_baseline(classifier, image, baseline)? {
        return Err(Error::Config(
            "baseline is classified the same as the image; it cannot serve as a contrast".into(),
        ));
    }
    let original = classifier.classify(image)?;
    let label = original.label;
    let tau = original.confidence() * delta;
    let ranking = rank_pixels(landscape, RankOrder::HighToLow);
    let (h, w) = (image.height(), image.width());

    let mut inserted = baseline.image_like(image)?;
    let mut deleted = image.clone();
    let mut best: Option<PartialWitness> = None;

    for (chunk_idx, chunk) in ranking.chunks(cfg.chunk_size).enumerate() {
        let mut batch = Vec::with_capacity(chunk.len() * 2);
        for &p in chunk {
            inserted.copy_pixel_from(image, p);
            deleted.fill_pixel(p, baseline);
            batch.push(inserted.clone());
            batch.push(deleted.clone());
        }
        let outputs = classifier.classify_batch(&batch)?;
        for (i, pair) in outputs.chunks_exact(2).enumerate() {
            let k = chunk_idx * cfg.chunk_size + i + 1;
            let (ins, del) = (&pair[0], &pair[1]);
            let keeps = ins.label == label;
            let flips = del.label != label;
            let confident = ins.confidence_of(label) >= tau;
            if keeps && flips && confident {
                let mask = PixelMask::from_indices(h, w, ranking[..k].iter().copied())?;
                let sufficient_valid =
                    sufficiency_against(classifier, &original, image, baseline, &mask, delta)?.holds;
                let contrastive_valid = contrast_against(classifier, &original, image, baseline, &mask)?.holds;
                return Ok(ExplanationRecord {
                    sufficient: mask.clone(),
                    contrastive: mask,
                    adjustment: PixelMask::empty(h, w),
                    delta,
                    tau,
                    original_label: label,
                    original_confidence: original.confidence(),
                    sufficient_confidence: ins.confidence_of(label),
                    contrast_label: del.label,
                    contrast_confidence: del.confidence(),
                    prefix_len: k,
                    precision_dp: cfg.precision_dp,
                    flags: ValidityFlags { sufficient_valid, contrastive_valid, complete_valid: false },
                });
            }
            let satisfied = keeps as u8 + flips as u8 + confident as u8;
            if best.as_ref().is_none_or(|b| satisfied > b.satisfied) {
                best = Some(PartialWitness {
                    k,
                    satisfied,
                    insertion_keeps_label: keeps,
                    deletion_flips_label: flips,
                    confidence_reached: confident,
                    insertion_confidence: ins.confidence_of(label),
                    tau,
                });
            }
        }
    }
    Err(Error::NoExplanation(Box::new(best.expect("ranking covers at least one pixel"))))
}

/// Adds pixels from the low end of the ranking to the contrastive
/// explanation until the composed image reproduces the original confidence
/// at `record.precision_dp` decimal places. Stores the result in `record`.
pub fn adjustment_discovery(
    classifier: &Classifier,
    image: &ImageTensor,
    baseline: &Baseline,
    landscape: &ResponsibilityLandscape,
    record: &mut ExplanationRecord,
    cfg: &ExplainConfig,
) -> Result<PixelMask> {
    check_landscape(image, landscape)?;
    if record.contrastive.is_empty() {
        return Err(Error::Input("contrastive explanation is empty".into()));
    }
    let dp = record.precision_dp;
    let label = record.original_label;
    let target = round_units(record.original_confidence, dp);
    let matches = |out: &ClassifierOutput| round_units(out.confidence_of(label), dp) == target;
    let (h, w) = (image.height(), image.width());

    let mut current = compose(image, &record.contrastive, baseline)?;
    let adjustment = if matches(&classifier.classify(&current)?) {
        PixelMask::empty(h, w)
    } else {
        let order: Vec<usize> = rank_pixels(landscape, RankOrder::LowToHigh)
            .into_iter()
            .filter(|p| !record.contrastive.contains(*p))
            .collect();
        let mut found = None;
        'scan: for (chunk_idx, chunk) in order.chunks(cfg.chunk_size.max(1)).enumerate() {
            let mut batch = Vec::with_capacity(chunk.len());
            for &p in chunk {
                current.copy_pixel_from(image, p);
                batch.push(current.clone());
            }
            for (i, out) in classifier.classify_batch(&batch)?.iter().enumerate() {
                if matches(out) {
                    found = Some(chunk_idx * cfg.chunk_size.max(1) + i + 1);
                    break 'scan;
                }
            }
        }
        let n = found.ok_or_else(|| {
            Error::NotFound(
                "original confidence not reproduced even by the whole image; \
                 the classifier does not answer consistently"
                    .into(),
            )
        })?;
        PixelMask::from_indices(h, w, order[..n].iter().copied())?
    };

    record.adjustment = adjustment.clone();
    let complete = record.complete();
    let check = classifier.classify(&compose(image, &complete, baseline)?)?;
    record.flags.complete_valid = matches(&check);
    Ok(adjustment)
}

/// Greedily drops pixels (lowest responsibility first) while `predicate`
/// keeps holding, repeating until no single removal is possible.
pub fn shrink_minimal(
    classifier: &Classifier,
    image: &ImageTensor,
    baseline: &Baseline,
    mask: &PixelMask,
    predicate: Predicate,
    landscape: &ResponsibilityLandscape,
) -> Result<PixelMask> {
    check_landscape(image, landscape)?;
    if let Predicate::Sufficient(d) = predicate {
        check_delta(d)?;
    }
    let original = classifier.classify(image)?;
    let holds = |m: &PixelMask| -> Result<bool> {
        Ok(match predicate {
            Predicate::Sufficient(d) => sufficiency_against(classifier, &original, image, baseline, m, d)?.holds,
            Predicate::Contrastive => contrast_against(classifier, &original, image, baseline, m)?.holds,
        })
    };
    if !holds(mask)? {
        return Err(Error::Input("predicate does not hold on the mask to shrink".into()));
    }
    // reverse of the explanation ranking, so ties drop the later pixel first
    let mut order = rank_pixels(landscape, RankOrder::HighToLow);
    order.reverse();
    let mut current = mask.clone();
    loop {
        let mut changed = false;
        for &p in &order {
            if !current.contains(p) {
                continue;
            }
            current.remove(p);
            if holds(&current)? {
                changed = true;
            } else {
                current.insert(p);
            }
        }
        if !changed {
            return Ok(current);
        }
    }
}
