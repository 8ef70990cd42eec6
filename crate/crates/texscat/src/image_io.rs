//! Grayscale image loading and saving.

use std::path::Path;

use image::{DynamicImage, GenericImageView, ImageReader};
use texscat_core::ImageGrid;

use crate::error::{AppError, AppResult};

const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Decodes a PGM or PNG file to luminance in `[0, 1]`.
///
/// Gray images map 8-bit codes by `v / 255`; colour images are converted
/// with the BT.601 luma weights. Alpha is ignored.
pub fn load_grayscale(path: impl AsRef<Path>) -> AppResult<ImageGrid> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(AppError::NotFound(path.to_path_buf()));
    }
    let reader = ImageReader::open(path)
        .map_err(|e| AppError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| AppError::io(path, e))?;
    let img = reader.decode().map_err(|e| AppError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    to_grid(&img).map_err(|message| AppError::Image {
        path: path.to_path_buf(),
        message,
    })
}

fn to_grid(img: &DynamicImage) -> Result<ImageGrid, String> {
    let (w, h) = img.dimensions();
    if w == 0 || h == 0 {
        return Err("zero-dimension image".into());
    }
    let samples: Vec<f64> = match img {
        DynamicImage::ImageLuma8(g) => g.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLumaA8(g) => g.pixels().map(|p| p.0[0] as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(g) => g.as_raw().iter().map(|&v| v as f64 / 65535.0).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| (0..3).map(|c| LUMA[c] * p.0[c] as f64).sum::<f64>() / 255.0)
            .collect(),
    };
    ImageGrid::new(w as usize, h as usize, samples).map_err(|e| e.to_string())
}

/// Writes an 8-bit grayscale file, clamping to `[0, 1]`. The format follows
/// the extension (`.pgm` or `.png`).
pub fn save_grayscale(grid: &ImageGrid, path: impl AsRef<Path>) -> AppResult<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = grid
        .samples()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let buf = image::GrayImage::from_raw(grid.width() as u32, grid.height() as u32, bytes)
        .expect("buffer length matches dimensions");
    buf.save(path).map_err(|e| AppError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Image extensions picked up when scanning datasets.
pub fn is_supported(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "png"))
        .unwrap_or(false)
}
