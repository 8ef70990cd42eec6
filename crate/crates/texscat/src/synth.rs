//! Small generated texture datasets with known class structure.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use texscat_core::fft::{bin_frequency, Fft2d};
use texscat_core::ImageGrid;

use crate::error::{AppError, AppResult};
use crate::image_io::save_grayscale;

/// Images of one class.
#[derive(Debug, Clone)]
pub struct SynthClass {
    pub label: String,
    pub images: Vec<ImageGrid>,
}

fn white_noise(rng: &mut ChaCha8Rng, size: usize) -> ImageGrid {
    ImageGrid::from_fn(size, size, |_, _| rng.sample(StandardNormal))
}

fn blur(g: &ImageGrid, sigma: f64) -> ImageGrid {
    g.gaussian_blur(sigma).expect("positive sigma")
}

fn add(a: &ImageGrid, b: &ImageGrid, wb: f64) -> ImageGrid {
    ImageGrid::from_fn(a.width(), a.height(), |r, c| a.get(r, c) + wb * b.get(r, c))
}

/// Rescales to mean 0.5 and standard deviation `spread` for 8-bit storage.
fn to_display(g: &ImageGrid, spread: f64) -> ImageGrid {
    let mean = g.mean();
    let sd = (g.samples().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / g.len() as f64).sqrt();
    let scale = if sd > 0.0 { spread / sd } else { 0.0 };
    g.map(|v| 0.5 + (v - mean) * scale)
}

/// Noisy gratings, one orientation per class (multiples of 45 degrees), so
/// classes differ in which orientation carries the energy.
pub fn separable(classes: usize, images_per_class: usize, size: usize, seed: u64) -> Vec<SynthClass> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freq = PI / 4.0;
    (0..classes)
        .map(|c| {
            let theta = c as f64 * PI / 4.0;
            let (ct, st) = (theta.cos(), theta.sin());
            let images = (0..images_per_class)
                .map(|_| {
                    let phase = rng.random_range(0.0..2.0 * PI);
                    let noise = blur(&white_noise(&mut rng, size), 0.7);
                    let grating = ImageGrid::from_fn(size, size, |r, col| {
                        (freq * (col as f64 * ct + r as f64 * st) + phase).sin()
                    });
                    to_display(&add(&grating, &noise, 0.6), 0.15)
                })
                .collect();
            SynthClass {
                label: format!("orient{c}"),
                images,
            }
        })
        .collect()
}

/// Classes share one coarse texture model and differ only in the amplitude
/// of an added fine-scale band. Blurring removes the band and with it the
/// only class difference.
pub fn fine_coarse(amplitudes: &[f64], images_per_class: usize, size: usize, seed: u64) -> Vec<SynthClass> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    amplitudes
        .iter()
        .enumerate()
        .map(|(c, &a)| {
            let images = (0..images_per_class)
                .map(|_| {
                    let coarse = blur(&white_noise(&mut rng, size), 3.0).scaled(2.0 * PI.sqrt() * 3.0);
                    let w = white_noise(&mut rng, size);
                    // difference of Gaussians, roughly unit variance
                    let fine = add(&blur(&w, 0.5), &blur(&w, 1.0), -1.0).scaled(2.2);
                    to_display(&add(&coarse, &fine, a), 0.12)
                })
                .collect();
            SynthClass {
                label: format!("fine{c}"),
                images,
            }
        })
        .collect()
}

/// White Gaussian noise filtered by a narrow Gaussian bump at horizontal
/// frequency `±center` (radians per sample) with standard deviation
/// `bandwidth`. Its envelope varies slowly, so a matched band-pass modulus
/// stays close to Rayleigh even after low-pass averaging.
pub fn narrowband(size: usize, center: f64, bandwidth: f64, seed: u64) -> ImageGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fft = Fft2d::new(size, size);
    let mut buf: Vec<Complex64> = (0..size * size)
        .map(|_| Complex64::new(rng.sample(StandardNormal), 0.0))
        .collect();
    fft.forward(&mut buf);
    let bump = |d: f64| (-d * d / (2.0 * bandwidth * bandwidth)).exp();
    for r in 0..size {
        let wy = bin_frequency(r, size);
        for c in 0..size {
            let wx = bin_frequency(c, size);
            let radial = |cx: f64| bump(((wx - cx).powi(2) + wy * wy).sqrt());
            buf[r * size + c] *= radial(center) + radial(-center);
        }
    }
    fft.inverse(&mut buf);
    let field = ImageGrid::new(size, size, buf.iter().map(|z| z.re).collect()).expect("finite field");
    to_display(&field, 0.15)
}

/// Fine-band amplitudes for `classes` classes, a factor of three apart.
pub fn fine_coarse_amplitudes(classes: usize) -> Vec<f64> {
    (0..classes).map(|c| 0.1 * 3f64.powi(c as i32)).collect()
}

/// Writes `root/<label>/img<i>.pgm` for every image.
pub fn write_dataset(root: &Path, classes: &[SynthClass]) -> AppResult<()> {
    for class in classes {
        let dir = root.join(&class.label);
        fs::create_dir_all(&dir).map_err(|e| AppError::io(&dir, e))?;
        for (i, img) in class.images.iter().enumerate() {
            save_grayscale(img, dir.join(format!("img{i:03}.pgm")))?;
        }
    }
    Ok(())
}
