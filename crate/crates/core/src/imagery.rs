//! Images, pixel masks, baselines and the interventions built from them.
//!
//! An intervention keeps the pixels of a mask at their image values and
//! sets every other pixel to the baseline. A mask bit always governs all
//! channels of its pixel.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Height × width × channels, all positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub fn new(height: usize, width: usize, channels: usize) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Input(format!(
                "shape dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        Ok(Shape { height, width, channels })
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn len(&self) -> usize {
        self.pixels() * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

/// Row-major H×W×C image with a declared value range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTensor {
    shape: Shape,
    range: (f32, f32),
    data: Vec<f32>,
}

impl ImageTensor {
    pub fn new(shape: Shape, range: (f32, f32), data: Vec<f32>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Input(format!(
                "image data has {} values, shape {shape} needs {}",
                data.len(),
                shape.len()
            )));
        }
        let (lo, hi) = range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Input(format!("bad value range [{lo}, {hi}]")));
        }
        if let Some((i, v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < lo || **v > hi)
        {
            return Err(Error::Input(format!(
                "value {v} at offset {i} is not finite or outside [{lo}, {hi}]"
            )));
        }
        Ok(ImageTensor { shape, range, data })
    }

    /// Image with every value equal to `value`.
    pub fn filled(shape: Shape, range: (f32, f32), value: f32) -> Result<Self> {
        Self::new(shape, range, vec![value; shape.len()])
    }

    /// Single-channel image from per-pixel values in row-major order.
    pub fn from_gray(height: usize, width: usize, range: (f32, f32), values: &[f32]) -> Result<Self> {
        Self::new(Shape::new(height, width, 1)?, range, values.to_vec())
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn range(&self) -> (f32, f32) {
        self.range
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    /// Channel values of pixel `index` (row-major).
    pub fn pixel(&self, index: usize) -> &[f32] {
        let c = self.shape.channels;
        &self.data[index * c..(index + 1) * c]
    }

    /// Copies pixel `index` from `src`, which must have the same shape.
    pub(crate) fn copy_pixel_from(&mut self, src: &ImageTensor, index: usize) {
        let c = self.shape.channels;
        self.data[index * c..(index + 1) * c].copy_from_slice(&src.data[index * c..(index + 1) * c]);
    }

    pub(crate) fn fill_pixel(&mut self, index: usize, baseline: &Baseline) {
        let c = self.shape.channels;
        for ch in 0..c {
            self.data[index * c + ch] = baseline.value(ch);
        }
    }

    /// Adds `offset[ch]` to every value and shifts the range accordingly.
    pub fn shifted(&self, offset: &[f32]) -> Result<Self> {
        let c = self.shape.channels;
        if offset.len() != c && offset.len() != 1 {
            return Err(Error::Input(format!(
                "offset has {} components for {c} channels",
                offset.len()
            )));
        }
        let at = |ch: usize| if offset.len() == 1 { offset[0] } else { offset[ch] };
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, v)| v + at(i % c))
            .collect();
        let lo_shift = (0..c).map(at).fold(f32::INFINITY, f32::min);
        let hi_shift = (0..c).map(at).fold(f32::NEG_INFINITY, f32::max);
        Self::new(
            self.shape,
            (self.range.0 + lo_shift, self.range.1 + hi_shift),
            data,
        )
    }
}

/// A set of pixels on an H×W grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PixelMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
    count: usize,
}

impl PixelMask {
    pub fn empty(height: usize, width: usize) -> Self {
        PixelMask { height, width, bits: vec![false; height * width], count: 0 }
    }

    pub fn full(height: usize, width: usize) -> Self {
        let n = height * width;
        PixelMask { height, width, bits: vec![true; n], count: n }
    }

    pub fn from_indices<I>(height: usize, width: usize, indices: I) -> Result<Self>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut m = Self::empty(height, width);
        for i in indices {
            if i >= m.bits.len() {
                return Err(Error::Input(format!(
                    "pixel index {i} outside {height}x{width} grid"
                )));
            }
            m.insert(i);
        }
        Ok(m)
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::Input(format!(
                "mask has {} bits, grid {height}x{width} needs {}",
                bits.len(),
                height * width
            )));
        }
        let count = bits.iter().filter(|b| **b).count();
        Ok(PixelMask { height, width, bits, count })
    }

    /// Mask whose set pixels are the low `n` bits of `word` (bit i = pixel i).
    pub fn from_word(height: usize, width: usize, word: u64) -> Self {
        let n = height * width;
        let bits: Vec<bool> = (0..n).map(|i| word >> i & 1 == 1).collect();
        let count = bits.iter().filter(|b| **b).count();
        PixelMask { height, width, bits, count }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> usize {
        self.bits.len()
    }

    /// Number of set pixels.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn contains(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn insert(&mut self, index: usize) -> bool {
        let was = std::mem::replace(&mut self.bits[index], true);
        if !was {
            self.count += 1;
        }
        !was
    }

    pub fn remove(&mut self, index: usize) -> bool {
        let was = std::mem::replace(&mut self.bits[index], false);
        if was {
            self.count -= 1;
        }
        was
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    pub fn complement(&self) -> Self {
        let bits: Vec<bool> = self.bits.iter().map(|b| !b).collect();
        PixelMask {
            height: self.height,
            width: self.width,
            count: bits.len() - self.count,
            bits,
        }
    }

    fn check_dims(&self, other: &PixelMask) -> Result<()> {
        if self.height != other.height || self.width != other.width {
            return Err(Error::Input(format!(
                "mask dimensions differ: {}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )));
        }
        Ok(())
    }

    pub fn union(&self, other: &PixelMask) -> Result<Self> {
        self.check_dims(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect();
        Self::from_bits(self.height, self.width, bits)
    }

    pub fn intersection(&self, other: &PixelMask) -> Result<Self> {
        self.check_dims(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b).collect();
        Self::from_bits(self.height, self.width, bits)
    }

    pub fn is_disjoint(&self, other: &PixelMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !(*a && *b))
    }

    pub fn is_subset(&self, other: &PixelMask) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| !*a || *b)
    }

    /// Percentage of the grid covered by the mask.
    pub fn coverage_pct(&self) -> f64 {
        self.count as f64 * 100.0 / self.bits.len() as f64
    }

    /// Writes an 8-bit grayscale PNG: 255 inside the mask, 0 outside.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let raw: Vec<u8> = self.bits.iter().map(|b| if *b { 255 } else { 0 }).collect();
        let img = image::GrayImage::from_raw(self.width as u32, self.height as u32, raw)
            .ok_or_else(|| Error::Input("mask buffer does not match its dimensions".into()))?;
        img.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }

    /// Reads a mask PNG; any nonzero luma counts as set.
    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?.into_luma8();
        let (w, h) = img.dimensions();
        let bits = img.as_raw().iter().map(|v| *v != 0).collect();
        Self::from_bits(h as usize, w as usize, bits)
    }
}

/// Value substituted for pixels outside an intervention's mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Baseline {
    Constant(f32),
    PerChannel(Vec<f32>),
}

impl Default for Baseline {
    fn default() -> Self {
        Baseline::Constant(0.0)
    }
}

impl Baseline {
    pub fn value(&self, channel: usize) -> f32 {
        match self {
            Baseline::Constant(v) => *v,
            Baseline::PerChannel(vs) => vs[channel],
        }
    }

    /// Checks the baseline is finite, has one value per channel and lies in the image's range.
    pub fn validate_for(&self, image: &ImageTensor) -> Result<()> {
        let (lo, hi) = image.range();
        let values: &[f32] = match self {
            Baseline::Constant(v) => std::slice::from_ref(v),
            Baseline::PerChannel(vs) => {
                if vs.len() != image.channels() {
                    return Err(Error::Input(format!(
                        "baseline has {} channel values, image has {} channels",
                        vs.len(),
                        image.channels()
                    )));
                }
                vs
            }
        };
        for v in values {
            if !v.is_finite() || *v < lo || *v > hi {
                return Err(Error::Input(format!(
                    "baseline value {v} outside image range [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// The same baseline moved by a per-channel offset.
    pub fn shifted(&self, offset: &[f32]) -> Self {
        match (self, offset) {
            (Baseline::Constant(v), [o]) => Baseline::Constant(v + o),
            _ => {
                let n = offset.len().max(match self {
                    Baseline::PerChannel(vs) => vs.len(),
                    Baseline::Constant(_) => 1,
                });
                let at = |i: usize| if offset.len() == 1 { offset[0] } else { offset[i] };
                Baseline::PerChannel((0..n).map(|i| self.value(i) + at(i)).collect())
            }
        }
    }

    /// A whole image at the baseline value.
    pub fn image_like(&self, image: &ImageTensor) -> Result<ImageTensor> {
        compose(image, &PixelMask::empty(image.height(), image.width()), self)
    }
}

fn check_mask(image: &ImageTensor, mask: &PixelMask) -> Result<()> {
    if mask.height() != image.height() || mask.width() != image.width() {
        return Err(Error::Input(format!(
            "mask is {}x{}, image is {}x{}",
            mask.height(),
            mask.width(),
            image.height(),
            image.width()
        )));
    }
    Ok(())
}

/// Keeps masked pixels at their image values and sets all others to the baseline.
pub fn compose(image: &ImageTensor, mask: &PixelMask, baseline: &Baseline) -> Result<ImageTensor> {
    check_mask(image, mask)?;
    let c = image.channels();
    let mut data = image.data().to_vec();
    for (p, keep) in mask.bits().iter().enumerate() {
        if !keep {
            for ch in 0..c {
                data[p * c + ch] = baseline.value(ch);
            }
        }
    }
    Ok(ImageTensor { shape: image.shape(), range: image.range(), data })
}

/// Sets masked pixels to the baseline and keeps all others: the deletion
/// counterpart of [`compose`].
pub fn occlude(image: &ImageTensor, mask: &PixelMask, baseline: &Baseline) -> Result<ImageTensor> {
    check_mask(image, mask)?;
    compose(image, &mask.complement(), baseline)
}

/// Which context family a sweep walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextMode {
    /// Ranked pixels inserted over the baseline.
    Insertion,
    /// Ranked pixels occluded to the baseline.
    Deletion,
}

/// First `k` pixels of `ranking` as a mask.
pub fn prefix_mask(height: usize, width: usize, ranking: &[usize], k: usize) -> PixelMask {
    let mut m = PixelMask::empty(height, width);
    for &p in &ranking[..k] {
        m.insert(p);
    }
    m
}

/// The `k`-th context of a family: the first `k` ranked pixels inserted
/// (or occluded). `k` ranges over `0..=ranking.len()`.
pub fn context_image(
    image: &ImageTensor,
    baseline: &Baseline,
    ranking: &[usize],
    k: usize,
    mode: ContextMode,
) -> Result<ImageTensor> {
    if k > ranking.len() {
        return Err(Error::Input(format!(
            "context index {k} beyond ranking of length {}",
            ranking.len()
        )));
    }
    let mask = prefix_mask(image.height(), image.width(), ranking, k);
    match mode {
        ContextMode::Insertion => compose(image, &mask, baseline),
        ContextMode::Deletion => occlude(image, &mask, baseline),
    }
}

/// An insertion or deletion sweep over a pixel ranking. Each step moves one
/// ranked pixel into (or out of) the context, updating the image in place.
#[derive(Debug, Clone)]
pub struct ContextSweep {
    image: ImageTensor,
    baseline: Baseline,
    ranking: Vec<usize>,
    position: usize,
    mode: ContextMode,
    current: ImageTensor,
}

impl ContextSweep {
    /// `ranking` must be a permutation of the image's pixel indices.
    pub fn new(image: &ImageTensor, baseline: &Baseline, ranking: Vec<usize>, mode: ContextMode) -> Result<Self> {
        let pixels = image.height() * image.width();
        if ranking.len() != pixels {
            return Err(Error::Input(format!(
                "ranking has {} entries for {pixels} pixels",
                ranking.len()
            )));
        }
        let mut seen = vec![false; pixels];
        for &p in &ranking {
            if p >= pixels || std::mem::replace(&mut seen[p], true) {
                return Err(Error::Input(format!("ranking is not a permutation (pixel {p})")));
            }
        }
        baseline.validate_for(image)?;
        let current = context_image(image, baseline, &ranking, 0, mode)?;
        Ok(ContextSweep { image: image.clone(), baseline: baseline.clone(), ranking, position: 0, mode, current })
    }

    /// Pixels moved so far.
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn mode(&self) -> ContextMode {
        self.mode
    }

    pub fn ranking(&self) -> &[usize] {
        &self.ranking
    }

    pub fn is_exhausted(&self) -> bool {
        self.position >= self.ranking.len()
    }

    pub fn current(&self) -> &ImageTensor {
        &self.current
    }

    /// The next context, or `None` once every pixel has been moved.
    pub fn advance(&mut self) -> Option<&ImageTensor> {
        let &p = self.ranking.get(self.position)?;
        match self.mode {
            ContextMode::Insertion => self.current.copy_pixel_from(&self.image, p),
            ContextMode::Deletion => self.current.fill_pixel(p, &self.baseline),
        }
        self.position += 1;
        Some(&self.current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ones(h: usize, w: usize) -> ImageTensor {
        ImageTensor::filled(Shape::new(h, w, 1).unwrap(), (0.0, 1.0), 1.0).unwrap()
    }

    #[test]
    fn compose_full_mask_is_identity() {
        let img = ImageTensor::from_gray(2, 2, (0.0, 1.0), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let out = compose(&img, &PixelMask::full(2, 2), &Baseline::Constant(0.0)).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn compose_empty_mask_is_baseline() {
        let img = ones(2, 2);
        let out = compose(&img, &PixelMask::empty(2, 2), &Baseline::Constant(0.0)).unwrap();
        assert_eq!(out.data(), &[0.0; 4]);
    }

    #[test]
    fn compose_single_pixel() {
        let img = ones(2, 2);
        let m = PixelMask::from_indices(2, 2, [0]).unwrap();
        let out = compose(&img, &m, &Baseline::Constant(0.0)).unwrap();
        assert_eq!(out.data(), &[1.0, 0.0, 0.0, 0.0]);
        // inputs untouched
        assert_eq!(img.data(), &[1.0; 4]);
        assert_eq!(m.len(), 1);
    }

    #[test]
    fn compose_rejects_mismatched_mask() {
        let img = ones(2, 2);
        assert!(matches!(
            compose(&img, &PixelMask::full(3, 2), &Baseline::Constant(0.0)),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn mask_governs_all_channels() {
        let img = ImageTensor::filled(Shape::new(1, 2, 3).unwrap(), (0.0, 1.0), 0.5).unwrap();
        let m = PixelMask::from_indices(1, 2, [1]).unwrap();
        let out = compose(&img, &m, &Baseline::PerChannel(vec![0.0, 0.1, 0.2])).unwrap();
        assert_eq!(out.data(), &[0.0, 0.1, 0.2, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn image_rejects_out_of_range_and_nan() {
        let s = Shape::new(1, 2, 1).unwrap();
        assert!(ImageTensor::new(s, (0.0, 1.0), vec![0.0, 1.5]).is_err());
        assert!(ImageTensor::new(s, (0.0, 1.0), vec![0.0, f32::NAN]).is_err());
        assert!(ImageTensor::new(s, (0.0, 1.0), vec![0.0]).is_err());
        assert!(Shape::new(0, 1, 1).is_err());
    }

    #[test]
    fn baseline_validation() {
        let img = ones(2, 2);
        assert!(Baseline::Constant(0.0).validate_for(&img).is_ok());
        assert!(Baseline::Constant(2.0).validate_for(&img).is_err());
        assert!(Baseline::PerChannel(vec![0.0, 0.0]).validate_for(&img).is_err());
    }

    #[test]
    fn insertion_sweep_on_224_generates_50176_contexts() {
        let shape = Shape::new(224, 224, 1).unwrap();
        let img = ImageTensor::filled(shape, (0.0, 1.0), 1.0).unwrap();
        let b = Baseline::Constant(0.0);
        let ranking: Vec<usize> = (0..shape.pixels()).collect();
        let mut sweep = ContextSweep::new(&img, &b, ranking, ContextMode::Insertion).unwrap();
        assert!(sweep.current().data().iter().all(|v| *v == 0.0));
        let first = sweep.advance().unwrap();
        assert_eq!(first.data().iter().filter(|v| **v == 1.0).count(), 1);
        let mut generated = 1;
        while sweep.advance().is_some() {
            generated += 1;
        }
        assert_eq!(generated, 50176);
        assert_eq!(sweep.current(), &img);
    }

    #[test]
    fn deletion_fully_advanced_is_baseline() {
        let img = ones(3, 3);
        let mut sweep =
            ContextSweep::new(&img, &Baseline::Constant(0.0), (0..9).rev().collect(), ContextMode::Deletion).unwrap();
        while sweep.advance().is_some() {}
        assert_eq!(sweep.current().data(), &[0.0; 9]);
    }

    #[test]
    fn sweep_rejects_non_permutation() {
        let img = ImageTensor::from_gray(1, 3, (0.0, 1.0), &[1.0; 3]).unwrap();
        let b = Baseline::Constant(0.0);
        assert!(ContextSweep::new(&img, &b, vec![0, 0, 1], ContextMode::Insertion).is_err());
        assert!(ContextSweep::new(&img, &b, vec![0, 1], ContextMode::Insertion).is_err());
    }

    // Pixelwise provenance check on random 8x8 instances: the insertion and
    // deletion contexts at the same k take disjoint, covering pixel sets from
    // the image.
    #[test]
    fn insertion_and_deletion_partition_provenance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let vals: Vec<f32> = (0..64).map(|_| rng.random_range(0.5..1.0)).collect();
            let img = ImageTensor::from_gray(8, 8, (0.0, 1.0), &vals).unwrap();
            let b = Baseline::Constant(0.0);
            let mut ranking: Vec<usize> = (0..64).collect();
            ranking.shuffle(&mut rng);
            let mut ins_sweep = ContextSweep::new(&img, &b, ranking.clone(), ContextMode::Insertion).unwrap();
            let mut del_sweep = ContextSweep::new(&img, &b, ranking.clone(), ContextMode::Deletion).unwrap();
            for k in 0..=64 {
                let ins = context_image(&img, &b, &ranking, k, ContextMode::Insertion).unwrap();
                let del = context_image(&img, &b, &ranking, k, ContextMode::Deletion).unwrap();
                assert_eq!(ins_sweep.current(), &ins);
                assert_eq!(del_sweep.current(), &del);
                ins_sweep.advance();
                del_sweep.advance();
                for p in 0..64 {
                    let from_ins = ins.data()[p] == img.data()[p];
                    let from_del = del.data()[p] == img.data()[p];
                    assert!(from_ins ^ from_del, "pixel {p} at k={k}");
                    assert_eq!(from_ins, ranking[..k].contains(&p));
                }
            }
        }
    }

    #[test]
    fn mask_png_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let m = PixelMask::from_indices(3, 5, [0, 4, 7, 14]).unwrap();
        m.save_png(&path).unwrap();
        assert_eq!(PixelMask::load_png(&path).unwrap(), m);
        let raw = image::open(&path).unwrap();
        assert_eq!(raw.color(), image::ColorType::L8);
    }

    proptest! {
        #[test]
        fn compose_is_monotone_in_mask(a in any::<u16>(), b in any::<u16>()) {
            let vals: Vec<f32> = (0..16).map(|i| 0.5 + i as f32 / 64.0).collect();
            let img = ImageTensor::from_gray(4, 4, (0.0, 1.0), &vals).unwrap();
            let base = Baseline::Constant(0.0);
            let ma = PixelMask::from_word(4, 4, a as u64);
            let mb = PixelMask::from_word(4, 4, b as u64);
            let u = compose(&img, &ma.union(&mb).unwrap(), &base).unwrap();
            let ca = compose(&img, &ma, &base).unwrap();
            let cb = compose(&img, &mb, &base).unwrap();
            for p in 0..16 {
                let expect = if ca.data()[p] == img.data()[p] || cb.data()[p] == img.data()[p] {
                    img.data()[p]
                } else {
                    0.0
                };
                prop_assert_eq!(u.data()[p], expect);
            }
        }

        #[test]
        fn mask_count_matches_popcount(word in any::<u16>()) {
            let m = PixelMask::from_word(4, 4, word as u64);
            prop_assert_eq!(m.len(), word.count_ones() as usize);
            prop_assert_eq!(m.complement().len(), 16 - m.len());
            prop_assert_eq!(m.iter().count(), m.len());
        }
    }
}
