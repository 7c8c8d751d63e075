//! Approximate per-pixel causal responsibility by iterative partition refinement.
//!
//! Each iteration splits the image into a few random rectangles and
//! evaluates every combination of them over the baseline. A part that is a
//! but-for cause inside some passing combination gets responsibility
//! `1/(1+k)`, `k` being the fewest sibling parts that had to be occluded for
//! that to happen. Causal parts are split again, with the rest of their
//! witnessing combination held in place, until they get small. Iterations
//! use independent random partitions and are averaged.
//!
//! With [`Partitioning::Singletons`] the root is split into single pixels and
//! every subset is evaluated, which yields exact actual-cause responsibility
//! on tiny grids.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{validate_baseline, Classifier};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::imagery::{compose, Baseline, ImageTensor, PixelMask};

/// Largest part count evaluated exhaustively at one node.
pub const MAX_PARTS_PER_NODE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partitioning {
    /// Random axis-aligned cuts; `branching` of 2 cuts the longer side once,
    /// 4 cuts both sides.
    Random { branching: usize },
    /// One part per pixel at the root, no refinement.
    Singletons,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsibilityConfig {
    pub seed: u64,
    pub iterations: usize,
    pub partitioning: Partitioning,
    /// Maximum refinement depth (root is depth 0). `None` refines until parts
    /// are no larger than `min_area`.
    pub depth_limit: Option<usize>,
    pub min_area: usize,
    /// Parts scoring at or below this are not refined.
    pub refine_threshold: f64,
    #[serde(skip, default)]
    pub execution: Execution,
}

impl Default for ResponsibilityConfig {
    fn default() -> Self {
        ResponsibilityConfig {
            seed: 0,
            iterations: 20,
            partitioning: Partitioning::Random { branching: 4 },
            depth_limit: None,
            min_area: 4,
            refine_threshold: 0.0,
            execution: Execution::default(),
        }
    }
}

impl ResponsibilityConfig {
    /// Singleton parts with exhaustive subset evaluation.
    pub fn exhaustive() -> Self {
        ResponsibilityConfig { iterations: 1, partitioning: Partitioning::Singletons, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsibilityLandscape {
    pub height: usize,
    pub width: usize,
    pub scores: Vec<f64>,
    pub seed: u64,
    pub iterations: usize,
    /// Set when no part scored anywhere; rankings then fall back to row-major order.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOrder {
    HighToLow,
    LowToHigh,
}

impl ResponsibilityLandscape {
    /// A landscape with explicit scores, mostly for tests and fixtures.
    pub fn from_scores(height: usize, width: usize, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != height * width {
            return Err(Error::Input(format!(
                "{} scores for a {height}x{width} grid",
                scores.len()
            )));
        }
        if scores.iter().any(|s| !s.is_finite() || !(0.0..=1.0).contains(s)) {
            return Err(Error::Input("responsibility scores must lie in [0, 1]".into()));
        }
        let degenerate = scores.iter().all(|s| *s == 0.0);
        Ok(ResponsibilityLandscape { height, width, scores, seed: 0, iterations: 1, degenerate })
    }

    pub fn score(&self, pixel: usize) -> f64 {
        self.scores[pixel]
    }

    /// Writes `<stem>.bin` (little-endian f32, row-major) and `<stem>.json` (dims and provenance).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let bytes: Vec<u8> = self.scores.iter().flat_map(|s| (*s as f32).to_le_bytes()).collect();
        std::fs::write(dir.join(format!("{stem}.bin")), bytes)?;
        let header = LandscapeHeader {
            height: self.height,
            width: self.width,
            dtype: "f32le".into(),
            seed: self.seed,
            iterations: self.iterations,
            degenerate: self.degenerate,
        };
        std::fs::write(
            dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&header)? + "\n",
        )?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let header: LandscapeHeader =
            serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let bytes = std::fs::read(dir.join(format!("{stem}.bin")))?;
        if bytes.len() != header.height * header.width * 4 {
            return Err(Error::Input(format!(
                "landscape payload is {} bytes, header says {}x{} f32",
                bytes.len(),
                header.height,
                header.width
            )));
        }
        let scores = bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect();
        Ok(ResponsibilityLandscape {
            height: header.height,
            width: header.width,
            scores,
            seed: header.seed,
            iterations: header.iterations,
            degenerate: header.degenerate,
        })
    }

    /// Grayscale heatmap, brightest at the maximum score.
    pub fn save_heatmap_png(&self, path: &Path) -> Result<()> {
        let max = self.scores.iter().copied().fold(0.0, f64::max);
        let raw: Vec<u8> = self
            .scores
            .iter()
            .map(|s| if max > 0.0 { (s / max * 255.0).round() as u8 } else { 0 })
            .collect();
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, raw)
            .ok_or_else(|| Error::Input("landscape dimensions do not match its scores".into()))?;
        img.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct LandscapeHeader {
    height: usize,
    width: usize,
    dtype: String,
    seed: u64,
    iterations: usize,
    degenerate: bool,
}

/// Every pixel, ordered by score; ties go to the lower row-major index.
pub fn rank_pixels(landscape: &ResponsibilityLandscape, order: RankOrder) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..landscape.scores.len()).collect();
    let s = &landscape.scores;
    idx.sort_by(|&a, &b| {
        let primary = match order {
            RankOrder::HighToLow => s[b].total_cmp(&s[a]),
            RankOrder::LowToHigh => s[a].total_cmp(&s[b]),
        };
        primary.then(a.cmp(&b))
    });
    idx
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    row0: usize,
    col0: usize,
    row1: usize,
    col1: usize,
}

impl Rect {
    fn area(&self) -> usize {
        (self.row1 - self.row0) * (self.col1 - self.col0)
    }

    fn mask(&self, height: usize, width: usize) -> PixelMask {
        let mut m = PixelMask::empty(height, width);
        for r in self.row0..self.row1 {
            for c in self.col0..self.col1 {
                m.insert(r * width + c);
            }
        }
        m
    }

    /// Random tiling into up to `branching` nonempty rectangles.
    fn split(&self, branching: usize, rng: &mut ChaCha8Rng) -> Vec<Rect> {
        let h = self.row1 - self.row0;
        let w = self.col1 - self.col0;
        let (cut_rows, cut_cols) = if branching >= 4 { (h >= 2, w >= 2) } else { (h >= w && h >= 2, w > h) };
        let rows = if cut_rows {
            let r = rng.random_range(self.row0 + 1..self.row1);
            vec![(self.row0, r), (r, self.row1)]
        } else {
            vec![(self.row0, self.row1)]
        };
        let cols = if cut_cols {
            let c = rng.random_range(self.col0 + 1..self.col1);
            vec![(self.col0, c), (c, self.col1)]
        } else {
            vec![(self.col0, self.col1)]
        };
        rows.iter()
            .flat_map(|&(row0, row1)| cols.iter().map(move |&(col0, col1)| Rect { row0, col0, row1, col1 }))
            .collect()
    }
}

/// One node's verdict for each of its parts.
struct PartScores {
    /// `1/(1+k)` or 0.
    score: Vec<f64>,
    /// Combination word witnessing the score.
    witness: Vec<u32>,
}

struct Search<'a> {
    classifier: &'a Classifier,
    image: &'a ImageTensor,
    baseline: &'a Baseline,
    label: usize,
    cfg: &'a ResponsibilityConfig,
}

impl Search<'_> {
    fn union_of(&self, context: &PixelMask, parts: &[PixelMask], word: u32) -> PixelMask {
        let mut m = context.clone();
        for (i, p) in parts.iter().enumerate() {
            if word >> i & 1 == 1 {
                for px in p.iter() {
                    m.insert(px);
                }
            }
        }
        m
    }

    /// Evaluates all `2^parts` combinations on top of `context`.
    fn score_parts(&self, context: &PixelMask, parts: &[PixelMask]) -> Result<PartScores> {
        let m = parts.len();
        let words = 1u32 << m;
        let images = (0..words)
            .map(|w| compose(self.image, &self.union_of(context, parts, w), self.baseline))
            .collect::<Result<Vec<_>>>()?;
        let passes: Vec<bool> = self
            .classifier
            .classify_batch(&images)?
            .iter()
            .map(|o| o.label == self.label)
            .collect();
        let mut score = vec![0.0; m];
        let mut witness = vec![0u32; m];
        for (i, (s, wit)) in score.iter_mut().zip(witness.iter_mut()).enumerate() {
            let bit = 1u32 << i;
            let mut best: Option<usize> = None;
            for w in 0..words {
                if w & bit != 0 && passes[w as usize] && !passes[(w ^ bit) as usize] {
                    let occluded = m - w.count_ones() as usize;
                    if best.is_none_or(|b| occluded < b) {
                        best = Some(occluded);
                        *wit = w;
                    }
                }
            }
            if let Some(k) = best {
                *s = 1.0 / (1.0 + k as f64);
            }
        }
        Ok(PartScores { score, witness })
    }

    fn singletons(&self) -> Result<Vec<f64>> {
        let (h, w) = (self.image.height(), self.image.width());
        let n = h * w;
        if n > MAX_PARTS_PER_NODE {
            return Err(Error::Config(format!(
                "singleton partitioning is limited to {MAX_PARTS_PER_NODE} pixels, image has {n}"
            )));
        }
        let parts: Vec<PixelMask> = (0..n)
            .map(|p| PixelMask::from_indices(h, w, [p]))
            .collect::<Result<_>>()?;
        Ok(self.score_parts(&PixelMask::empty(h, w), &parts)?.score)
    }

    fn random_iteration(&self, branching: usize, iteration: usize) -> Result<Vec<f64>> {
        let (h, w) = (self.image.height(), self.image.width());
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(iteration as u64);
        let mut scores = vec![0.0; h * w];
        let root = Rect { row0: 0, col0: 0, row1: h, col1: w };
        // explicit stack keeps traversal order, and with it the rng stream, fixed
        let mut stack = vec![(root, PixelMask::empty(h, w), 1.0f64, 0usize)];
        while let Some((rect, context, weight, depth)) = stack.pop() {
            let rects = rect.split(branching, &mut rng);
            if rects.len() < 2 {
                continue;
            }
            let parts: Vec<PixelMask> = rects.iter().map(|r| r.mask(h, w)).collect();
            let verdict = self.score_parts(&context, &parts)?;
            let mut children = Vec::new();
            for (i, part) in parts.iter().enumerate() {
                let s = weight * verdict.score[i];
                for px in part.iter() {
                    scores[px] = s;
                }
                let may_refine = rects[i].area() > self.cfg.min_area
                    && self.cfg.depth_limit.is_none_or(|d| depth < d)
                    && verdict.score[i] > self.cfg.refine_threshold;
                if may_refine {
                    let others = verdict.witness[i] & !(1u32 << i);
                    children.push((rects[i], self.union_of(&context, &parts, others), s, depth + 1));
                }
            }
            stack.extend(children.into_iter().rev());
        }
        Ok(scores)
    }
}

/// Approximates per-pixel responsibility for the image's own label.
pub fn pixel_ranking(
    classifier: &Classifier,
    image: &ImageTensor,
    baseline: &Baseline,
    cfg: &ResponsibilityConfig,
) -> Result<ResponsibilityLandscape> {
    if cfg.iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }
    if !validate_baseline(classifier, image, baseline)? {
        return Err(Error::Config(
            "baseline is classified the same as the image; it cannot serve as a contrast".into(),
        ));
    }
    let label = classifier.classify(image)?.label;
    let search = Search { classifier, image, baseline, label, cfg };
    let per_iteration: Vec<Vec<f64>> = match cfg.partitioning {
        // deterministic partition: every iteration would be identical
        Partitioning::Singletons => vec![search.singletons()?],
        Partitioning::Random { branching } => {
            if branching != 2 && branching != 4 {
                return Err(Error::Config(format!("branching must be 2 or 4, got {branching}")));
            }
            cfg.execution
                .map_range(cfg.iterations, |i| search.random_iteration(branching, i))
                .into_iter()
                .collect::<Result<_>>()?
        }
    };
    let n = image.height() * image.width();
    let mut scores = vec![0.0; n];
    for it in &per_iteration {
        for (acc, s) in scores.iter_mut().zip(it) {
            *acc += s;
        }
    }
    let runs = per_iteration.len() as f64;
    for s in &mut scores {
        *s /= runs;
    }
    let degenerate = scores.iter().all(|s| *s == 0.0);
    Ok(ResponsibilityLandscape {
        height: image.height(),
        width: image.width(),
        scores,
        seed: cfg.seed,
        iterations: cfg.iterations,
        degenerate,
    })
}
