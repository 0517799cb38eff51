//! Image loading and the canonical ImageNet preprocessing: shorter side to
//! 256, centre crop 224×224, scale to [0, 1], per-channel normalisation.

use std::path::Path;

use image::imageops::FilterType;
use image::{DynamicImage, RgbImage};

pub const RESIZE_SHORTER: u32 = 256;
pub const CROP: u32 = 224;
pub const IMAGENET_MEAN: [f32; 3] = [0.485, 0.456, 0.406];
pub const IMAGENET_STD: [f32; 3] = [0.229, 0.224, 0.225];

pub fn load_rgb(path: &Path) -> Result<RgbImage, String> {
    image::open(path).map(DynamicImage::into_rgb8).map_err(|e| e.to_string())
}

/// Resize so the shorter side is `RESIZE_SHORTER`, keeping aspect ratio.
pub fn resize_shorter(img: &RgbImage, shorter: u32) -> RgbImage {
    let (w, h) = img.dimensions();
    let (nw, nh) = if w <= h {
        (shorter, ((u64::from(h) * u64::from(shorter) + u64::from(w) / 2) / u64::from(w)) as u32)
    } else {
        (((u64::from(w) * u64::from(shorter) + u64::from(h) / 2) / u64::from(h)) as u32, shorter)
    };
    image::imageops::resize(img, nw.max(1), nh.max(1), FilterType::Triangle)
}

pub fn center_crop(img: &RgbImage, size: u32) -> RgbImage {
    let (w, h) = img.dimensions();
    let x = w.saturating_sub(size) / 2;
    let y = h.saturating_sub(size) / 2;
    image::imageops::crop_imm(img, x, y, size.min(w), size.min(h)).to_image()
}

/// Channel-major (3 × 224 × 224) normalised tensor data.
pub fn preprocess(img: &RgbImage) -> Vec<f32> {
    let cropped = center_crop(&resize_shorter(img, RESIZE_SHORTER), CROP);
    let (w, h) = cropped.dimensions();
    let plane = (w * h) as usize;
    let mut out = vec![0.0f32; 3 * plane];
    for (i, px) in cropped.pixels().enumerate() {
        for c in 0..3 {
            let v = f32::from(px[c]) / 255.0;
            out[c * plane + i] = (v - IMAGENET_MEAN[c]) / IMAGENET_STD[c];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgb;

    #[test]
    fn output_shape_for_landscape_and_portrait() {
        for (w, h) in [(640, 480), (300, 500), (224, 224)] {
            let img = RgbImage::from_pixel(w, h, Rgb([10, 20, 30]));
            let resized = resize_shorter(&img, RESIZE_SHORTER);
            assert_eq!(resized.width().min(resized.height()), RESIZE_SHORTER);
            assert_eq!(preprocess(&img).len(), 3 * 224 * 224);
        }
    }

    #[test]
    fn constant_image_normalises_per_channel() {
        let img = RgbImage::from_pixel(300, 260, Rgb([255, 0, 128]));
        let t = preprocess(&img);
        let plane = 224 * 224;
        assert!((t[0] - (1.0 - 0.485) / 0.229).abs() < 1e-5);
        assert!((t[plane] - (0.0 - 0.456) / 0.224).abs() < 1e-5);
        assert!((t[2 * plane + 17] - (128.0 / 255.0 - 0.406) / 0.225).abs() < 1e-5);
    }

    #[test]
    fn crop_is_centred() {
        let mut img = RgbImage::from_pixel(6, 4, Rgb([0, 0, 0]));
        img.put_pixel(3, 2, Rgb([255, 255, 255]));
        let c = center_crop(&img, 2);
        assert_eq!(c.dimensions(), (2, 2));
        assert_eq!(c.get_pixel(1, 1), &Rgb([255, 255, 255]));
    }
}
