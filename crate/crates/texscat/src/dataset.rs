//! Class-per-directory texture datasets and parallel indexing.
//!
//! A dataset root holds one subdirectory per class. Every PGM or PNG file in
//! a class directory is a source image; it is optionally downscaled by two,
//! cut into patches, and each patch gets the next id of its class. Classes
//! and files are visited in byte order of their names.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use texscat_core::grid::{five_crop_offsets, tile_offsets};
use texscat_core::retrieval::RetrievalRate;
use texscat_core::{Extractor, ExtractorConfig, FeatureDb, ImageGrid, PatchSet, Signature};

use crate::config::Layout;
use crate::error::{AppError, AppResult};
use crate::image_io::{is_supported, load_grayscale};

/// One patch with enough provenance to name it in errors.
#[derive(Debug, Clone)]
pub struct Patch {
    pub class: String,
    pub patch_id: u32,
    pub source: PathBuf,
    pub grid: ImageGrid,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    patches: Vec<Patch>,
    patch_size: usize,
}

impl Dataset {
    /// Scans `root` and cuts every image into `patch_size` squares.
    pub fn load(root: &Path, patch_size: usize, layout: Layout, downscale: bool) -> AppResult<Self> {
        let classes = class_dirs(root)?;
        let mut patches = Vec::new();
        for (class, dir) in classes {
            let mut next_id = 0u32;
            for file in image_files(&dir)? {
                let mut image = load_grayscale(&file)?;
                if downscale {
                    image = image.downscale_half().map_err(|e| pipeline(&file, e))?;
                }
                let set = cut(&image, patch_size, layout, &class, &file)?;
                for grid in set.patches() {
                    patches.push(Patch {
                        class: class.clone(),
                        patch_id: next_id,
                        source: file.clone(),
                        grid: grid.clone(),
                    });
                    next_id += 1;
                }
            }
        }
        if patches.is_empty() {
            return Err(AppError::usage(format!("{}: no patches found", root.display())));
        }
        Ok(Self { patches, patch_size })
    }

    /// Builds a dataset from in-memory patches; all must be square and equal in size.
    pub fn from_patches(patches: Vec<Patch>) -> AppResult<Self> {
        let first = patches.first().ok_or_else(|| AppError::usage("empty dataset"))?;
        let size = first.grid.width();
        if let Some(p) = patches
            .iter()
            .find(|p| p.grid.width() != size || p.grid.height() != size)
        {
            return Err(AppError::Format {
                path: p.source.clone(),
                message: format!(
                    "patch {} is {}x{}, expected {size}x{size}",
                    p.patch_id,
                    p.grid.width(),
                    p.grid.height()
                ),
            });
        }
        Ok(Self {
            patches,
            patch_size: size,
        })
    }

    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// The same dataset with every raw patch blurred by `sigma` pixels.
    pub fn blurred(&self, sigma: f64) -> AppResult<Self> {
        let patches = self
            .patches
            .iter()
            .map(|p| {
                let grid = p.grid.gaussian_blur(sigma).map_err(|e| pipeline(&p.source, e))?;
                Ok(Patch { grid, ..p.clone() })
            })
            .collect::<AppResult<Vec<_>>>()?;
        Ok(Self {
            patches,
            patch_size: self.patch_size,
        })
    }
}

fn pipeline(path: &Path, source: texscat_core::Error) -> AppError {
    AppError::Pipeline {
        context: path.display().to_string(),
        source,
    }
}

fn cut(image: &ImageGrid, size: usize, layout: Layout, class: &str, file: &Path) -> AppResult<PatchSet> {
    let (w, h) = (image.width(), image.height());
    if layout == Layout::Whole && (w != size || h != size) {
        return Err(AppError::Format {
            path: file.to_path_buf(),
            message: format!("{w}x{h} image, expected {size}x{size} for the whole layout"),
        });
    }
    if w < size || h < size {
        return Err(AppError::Format {
            path: file.to_path_buf(),
            message: format!("{w}x{h} image is smaller than the {size}x{size} patch"),
        });
    }
    let offsets = match layout {
        Layout::Tiles => tile_offsets(w, h, size),
        Layout::Five => five_crop_offsets(w, h, size),
        Layout::Whole => vec![(0, 0)],
    };
    let patches = image.extract_patches(size, &offsets).map_err(|e| pipeline(file, e))?;
    PatchSet::new(patches, class, file.display().to_string()).map_err(|e| pipeline(file, e))
}

fn sorted_entries(dir: &Path) -> AppResult<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| AppError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| AppError::io(dir, err)))
        .collect::<AppResult<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

/// `(label, directory)` of every class under `root`, sorted by label.
pub fn class_dirs(root: &Path) -> AppResult<Vec<(String, PathBuf)>> {
    if !root.is_dir() {
        return Err(AppError::usage(format!("{}: no classes found", root.display())));
    }
    let classes: Vec<_> = sorted_entries(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .filter_map(|p| {
            let name = p.file_name()?.to_str()?.to_owned();
            (!name.starts_with('.')).then_some((name, p))
        })
        .collect();
    if classes.is_empty() {
        return Err(AppError::usage(format!("{}: no classes found", root.display())));
    }
    Ok(classes)
}

fn image_files(dir: &Path) -> AppResult<Vec<PathBuf>> {
    Ok(sorted_entries(dir)?
        .into_iter()
        .filter(|p| p.is_file() && is_supported(p))
        .collect())
}

/// Thread count used when neither a flag nor the environment sets one.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Normalizes, transforms and fits every patch on `workers` threads.
///
/// Records come out in dataset order whatever the worker count.
/// `progress(done, total)` is called once per finished patch, possibly from
/// several threads.
pub fn signatures(
    dataset: &Dataset,
    config: ExtractorConfig,
    workers: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> AppResult<Vec<Signature>> {
    let size = dataset.patch_size();
    let extractor = Extractor::new(config, size, size).map_err(|e| AppError::usage(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| AppError::usage(format!("worker pool: {e}")))?;
    let total = dataset.len();
    let done = AtomicUsize::new(0);
    pool.install(|| {
        dataset
            .patches()
            .par_iter()
            .map(|p| {
                let sig = extractor
                    .signature_normalized(&p.grid)
                    .map_err(|e| AppError::Pipeline {
                        context: format!("{} (class {}, patch {})", p.source.display(), p.class, p.patch_id),
                        source: e,
                    })?;
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
                Ok(sig.with_source(p.class.clone(), p.patch_id))
            })
            .collect()
    })
}

pub fn index_dataset(
    dataset: &Dataset,
    config: ExtractorConfig,
    workers: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> AppResult<FeatureDb> {
    let records = signatures(dataset, config, workers, progress)?;
    Ok(FeatureDb::from_records(records)?)
}

/// Overall retrieval rate after blurring every raw patch, one entry per
/// sigma in input order. Sigma 0 leaves the patches untouched.
pub fn blur_sweep(
    dataset: &Dataset,
    config: ExtractorConfig,
    sigmas: &[f64],
    workers: usize,
) -> AppResult<Vec<(f64, RetrievalRate)>> {
    if let Some(s) = sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(AppError::usage(format!("blur sigma {s} must be a nonnegative number")));
    }
    sigmas
        .iter()
        .map(|&sigma| {
            let blurred = dataset.blurred(sigma)?;
            let db = index_dataset(&blurred, config, workers, &|_, _| {})?;
            Ok((sigma, db.retrieval_rate()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_io::save_grayscale;

    fn write(root: &Path, class: &str, name: &str, grid: &ImageGrid) {
        let dir = root.join(class);
        fs::create_dir_all(&dir).unwrap();
        save_grayscale(grid, dir.join(name)).unwrap();
    }

    fn ramp(w: usize, h: usize, k: usize) -> ImageGrid {
        ImageGrid::from_fn(w, h, |r, c| ((r * 7 + c * k) % 13) as f64 / 13.0)
    }

    #[test]
    fn ids_are_sequential_per_class_in_name_order() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "b", "x.pgm", &ramp(32, 32, 3));
        write(dir.path(), "a", "2.png", &ramp(32, 16, 5));
        write(dir.path(), "a", "1.pgm", &ramp(16, 16, 1));
        fs::write(dir.path().join("a/notes.txt"), "ignored").unwrap();
        let ds = Dataset::load(dir.path(), 16, Layout::Tiles, false).unwrap();
        let ids: Vec<_> = ds.patches().iter().map(|p| (p.class.as_str(), p.patch_id)).collect();
        assert_eq!(
            ids,
            [("a", 0), ("a", 1), ("a", 2), ("b", 0), ("b", 1), ("b", 2), ("b", 3)]
        );
        assert!(ds.patches()[0].source.ends_with("a/1.pgm"));
    }

    #[test]
    fn layouts_and_downscale() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "c", "img.pgm", &ramp(64, 48, 2));
        assert_eq!(Dataset::load(dir.path(), 32, Layout::Five, false).unwrap().len(), 5);
        assert_eq!(Dataset::load(dir.path(), 16, Layout::Tiles, false).unwrap().len(), 12);
        assert_eq!(Dataset::load(dir.path(), 16, Layout::Tiles, true).unwrap().len(), 2);
        assert!(Dataset::load(dir.path(), 16, Layout::Whole, false).is_err());
        assert!(Dataset::load(dir.path(), 128, Layout::Tiles, false).is_err());
    }

    #[test]
    fn missing_or_empty_root() {
        let dir = tempfile::tempdir().unwrap();
        for root in [dir.path().to_path_buf(), dir.path().join("absent")] {
            let err = Dataset::load(&root, 16, Layout::Tiles, false).unwrap_err();
            assert!(err.to_string().contains("no classes found"), "{err}");
            assert_eq!(err.exit_code(), 2);
        }
    }

    #[test]
    fn mixed_sizes_rejected() {
        let p = |n| Patch {
            class: "a".into(),
            patch_id: n as u32,
            source: PathBuf::from("mem"),
            grid: ImageGrid::zeros(n, n),
        };
        assert!(Dataset::from_patches(vec![p(8), p(16)]).is_err());
        assert_eq!(Dataset::from_patches(vec![p(8), p(8)]).unwrap().patch_size(), 8);
    }

    #[test]
    fn constant_patch_names_its_file() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "flat", "f.pgm", &ImageGrid::filled(16, 16, 0.5));
        let ds = Dataset::load(dir.path(), 16, Layout::Whole, false).unwrap();
        let cfg = ExtractorConfig {
            method: texscat_core::Method::FwtGgd,
            dwt_levels: 2,
            ..Default::default()
        };
        let err = index_dataset(&ds, cfg, 1, &|_, _| {}).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("f.pgm") && msg.contains("zero-energy"), "{msg}");
    }
}
