//! Decoding images into tensors and writing tensors back out as PNG.

use std::path::Path;

use anyhow::Context;
use causex_core::{ImageTensor, Shape};
use image::imageops::FilterType;
use image::{DynamicImage, GenericImageView};

/// How inputs are fitted to the model's input shape.
pub const PREPROCESSING_NOTE: &str = "center crop to the target aspect ratio, then bilinear resize";

pub const SUPPORTED_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

pub fn is_supported(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| SUPPORTED_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

/// Shape the image would have without resizing: one channel for grayscale
/// files, three otherwise.
pub fn native_shape(path: &Path) -> anyhow::Result<Shape> {
    let img = image::open(path).with_context(|| format!("decoding {}", path.display()))?;
    let (w, h) = img.dimensions();
    let c = if img.color().has_color() { 3 } else { 1 };
    Ok(Shape::new(h as usize, w as usize, c)?)
}

fn center_crop(img: DynamicImage, target_h: u32, target_w: u32) -> DynamicImage {
    let (w, h) = img.dimensions();
    // compare w/h against target_w/target_h without floats
    let lhs = w as u64 * target_h as u64;
    let rhs = h as u64 * target_w as u64;
    if lhs > rhs {
        let new_w = ((h as u64 * target_w as u64 + target_h as u64 / 2) / target_h as u64).max(1) as u32;
        img.crop_imm((w - new_w) / 2, 0, new_w, h)
    } else if lhs < rhs {
        let new_h = ((w as u64 * target_h as u64 + target_w as u64 / 2) / target_w as u64).max(1) as u32;
        img.crop_imm(0, (h - new_h) / 2, w, new_h)
    } else {
        img
    }
}

/// Decodes, fits to `shape`, and scales samples from [0, 1] into `range`.
pub fn load_image(path: &Path, shape: Shape, range: (f32, f32)) -> anyhow::Result<ImageTensor> {
    let img = image::open(path).with_context(|| format!("decoding {}", path.display()))?;
    let (th, tw) = (shape.height as u32, shape.width as u32);
    let mut img = center_crop(img, th, tw);
    if img.dimensions() != (tw, th) {
        img = img.resize_exact(tw, th, FilterType::Triangle);
    }
    let samples: Vec<f32> = match shape.channels {
        1 => img.to_luma32f().into_raw(),
        3 => img.to_rgb32f().into_raw(),
        c => anyhow::bail!("cannot load images with {c} channels"),
    };
    let (lo, hi) = range;
    let data = samples.into_iter().map(|v| (lo + v.clamp(0.0, 1.0) * (hi - lo)).clamp(lo, hi)).collect();
    Ok(ImageTensor::new(shape, range, data)?)
}

/// Writes an image tensor as 8-bit PNG (gray for one channel, RGB
/// otherwise, first three channels).
pub fn save_tensor_png(img: &ImageTensor, path: &Path) -> anyhow::Result<()> {
    let (lo, hi) = img.range();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let to8 = |v: f32| (((v - lo) / span).clamp(0.0, 1.0) * 255.0).round() as u8;
    let (h, w, c) = (img.height() as u32, img.width() as u32, img.channels());
    if c == 1 {
        let buf: Vec<u8> = img.data().iter().map(|v| to8(*v)).collect();
        image::GrayImage::from_raw(w, h, buf).expect("sized buffer").save(path)?;
    } else {
        let mut buf = Vec::with_capacity((h * w * 3) as usize);
        for px in img.data().chunks_exact(c) {
            for ch in 0..3 {
                buf.push(to8(px[ch.min(c - 1)]));
            }
        }
        image::RgbImage::from_raw(w, h, buf).expect("sized buffer").save(path)?;
    }
    Ok(())
}
