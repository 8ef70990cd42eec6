use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use texscat::config::RunConfig;
use texscat::dataset::{blur_sweep, default_workers, index_dataset, Dataset};
use texscat::error::{AppError, AppResult};
use texscat::report::{EvaluationReport, SweepReport};
use texscat::{dbfile, dump, image_io, inspect, synth};
use texscat_core::{Extractor, Method};

/// Environment variable consulted when `--workers` is absent.
const WORKERS_ENV: &str = "TEXSCAT_WORKERS";

#[derive(Parser)]
#[command(
    name = "texscat",
    version,
    about = "Texture retrieval with scattering-domain Weibull signatures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract signatures for every patch of a dataset and write a database.
    Index {
        #[command(flatten)]
        run: RunArgs,
        /// Dataset root with one subdirectory per class.
        #[arg(long)]
        root: Option<PathBuf>,
        /// Output database file.
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[command(flatten)]
        workers: WorkerArgs,
    },
    /// Rank database records by distance to one image.
    Query {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        db: Option<PathBuf>,
        /// Query image; used whole as one patch.
        #[arg(long)]
        image: PathBuf,
        /// Number of results.
        #[arg(short, default_value_t = 10)]
        n: usize,
    },
    /// Retrieval rates of a database, overall and per class.
    Evaluate {
        #[arg(long)]
        db: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Retrieval rate after blurring every patch, one row per sigma.
    BlurSweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        root: Option<PathBuf>,
        /// Comma-separated blur widths in pixels.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,4")]
        sigmas: Vec<f64>,
        #[command(flatten)]
        output: OutputArgs,
        #[command(flatten)]
        workers: WorkerArgs,
    },
    /// Histogram and fitted parameters of one subband, as JSON.
    FitInspect {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        image: PathBuf,
        /// Scattering path `j:r[/j:r...]`, or `{level}{H|V|D}` for fwt-ggd.
        #[arg(long)]
        path: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Write the scattering subbands of an image to a binary dump.
    Dump {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        image: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Generate a synthetic dataset of PGM images.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long, short)]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 2)]
        images: usize,
        /// Image edge in pixels.
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// One grating orientation per class.
    Separable,
    /// Classes differ only in fine-scale amplitude.
    FineCoarse,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct WorkerArgs {
    /// Feature-extraction threads (default: TEXSCAT_WORKERS, else all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// No progress output.
    #[arg(long, short)]
    quiet: bool,
}

/// Every run parameter, overriding the config file.
#[derive(Args)]
struct RunArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long = "scales", short = 'J')]
    scales: Option<String>,
    #[arg(long = "rotations", short = 'L')]
    rotations: Option<String>,
    #[arg(long = "max-order", short = 'M')]
    max_order: Option<String>,
    #[arg(long)]
    epsilon_rel: Option<String>,
    #[arg(long)]
    oversampling: Option<String>,
    #[arg(long)]
    floor_rel: Option<String>,
    #[arg(long)]
    morlet_center_freq: Option<String>,
    #[arg(long)]
    morlet_bandwidth_factor: Option<String>,
    #[arg(long)]
    slant: Option<String>,
    #[arg(long)]
    lowpass_width: Option<String>,
    #[arg(long)]
    blur_width: Option<String>,
    #[arg(long)]
    dwt_levels: Option<String>,
    #[arg(long)]
    patch_size: Option<String>,
    /// tiles, five or whole.
    #[arg(long)]
    layout: Option<String>,
    /// Halve images (2x2 means) before cutting patches.
    #[arg(long)]
    downscale: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> AppResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let overrides = [
            ("method", &self.method),
            ("scales", &self.scales),
            ("rotations", &self.rotations),
            ("max_order", &self.max_order),
            ("epsilon_rel", &self.epsilon_rel),
            ("oversampling", &self.oversampling),
            ("floor_rel", &self.floor_rel),
            ("morlet_center_freq", &self.morlet_center_freq),
            ("morlet_bandwidth_factor", &self.morlet_bandwidth_factor),
            ("slant", &self.slant),
            ("lowpass_width", &self.lowpass_width),
            ("blur_width", &self.blur_width),
            ("dwt_levels", &self.dwt_levels),
            ("patch_size", &self.patch_size),
            ("layout", &self.layout),
            ("downscale", &self.downscale),
            ("seed", &self.seed),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        Ok(cfg)
    }
}

impl WorkerArgs {
    fn count(&self) -> AppResult<usize> {
        if let Some(n) = self.workers {
            return positive_workers(n);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => {
                let n = v
                    .trim()
                    .parse()
                    .map_err(|_| AppError::usage(format!("{WORKERS_ENV}={v} is not a count")))?;
                positive_workers(n)
            }
            Err(_) => Ok(default_workers()),
        }
    }
}

fn positive_workers(n: usize) -> AppResult<usize> {
    if n == 0 {
        return Err(AppError::usage("worker count must be at least 1"));
    }
    Ok(n)
}

fn required(value: Option<PathBuf>, fallback: &Option<PathBuf>, what: &str) -> AppResult<PathBuf> {
    value
        .or_else(|| fallback.clone())
        .ok_or_else(|| AppError::usage(format!("missing {what} (flag or config key)")))
}

fn emit(text: &str, dest: Option<&Path>) -> AppResult<()> {
    match dest {
        Some(p) => std::fs::write(p, text).map_err(|e| AppError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn progress(quiet: bool) -> impl Fn(usize, usize) + Sync {
    move |done, total| {
        if !quiet {
            let mut err = std::io::stderr().lock();
            let _ = write!(err, "\rextracted {done}/{total}");
            if done == total {
                let _ = writeln!(err);
            }
        }
    }
}

fn load_dataset(cfg: &RunConfig, root: &Path) -> AppResult<Dataset> {
    Dataset::load(root, cfg.patch_size, cfg.layout, cfg.downscale)
}

fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Index {
            run,
            root,
            out,
            workers,
        } => {
            let cfg = run.resolve()?;
            cfg.validate()?;
            let root = required(root, &cfg.root, "dataset root")?;
            let out = required(out, &cfg.db, "output database")?;
            let workers_n = workers.count()?;
            let start = Instant::now();
            let dataset = load_dataset(&cfg, &root)?;
            let db = index_dataset(&dataset, cfg.extractor(), workers_n, &progress(workers.quiet))?;
            dbfile::save(&db, &out)?;
            println!("{} records written to {}", db.len(), out.display());
            eprintln!(
                "indexing took {:.2} s on {workers_n} workers",
                start.elapsed().as_secs_f64()
            );
        }
        Command::Query { run, db, image, n } => {
            if n == 0 {
                return Err(AppError::usage("-n must be at least 1"));
            }
            let cfg = run.resolve()?;
            let db_path = required(db, &cfg.db, "database")?;
            let db = dbfile::load(&db_path)?;
            let stored = *db.config();
            if run.method.is_some() && cfg.method != stored.method {
                return Err(AppError::Core(texscat_core::Error::ConfigMismatch(format!(
                    "database holds {} signatures, query asked for {}",
                    stored.method, cfg.method
                ))));
            }
            let mut ex = cfg.extractor();
            ex.method = stored.method;
            if stored.method == Method::FwtGgd {
                ex.dwt_levels = stored.scales;
            } else {
                ex.scales = stored.scales;
                ex.rotations = stored.rotations;
                ex.max_order = stored.order;
                if stored.normalized {
                    ex.epsilon_rel = stored.epsilon_rel;
                }
            }
            let grid = image_io::load_grayscale(&image)?;
            let extractor = Extractor::new(ex, grid.width(), grid.height())?;
            let q = extractor.signature_normalized(&grid).map_err(|e| AppError::Pipeline {
                context: image.display().to_string(),
                source: e,
            })?;
            println!("rank  class  patch  distance");
            for (i, hit) in db.query(&q, n)?.iter().enumerate() {
                println!(
                    "{:>4}  {}  {}  {:.9e}",
                    i + 1,
                    hit.class,
                    hit.patch_id,
                    hit.value.value()
                );
            }
        }
        Command::Evaluate { db, output } => {
            let report = EvaluationReport::from_db(&dbfile::load(&db)?)?;
            let text = match output.format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json() + "\n",
            };
            emit(&text, output.report.as_deref())?;
        }
        Command::BlurSweep {
            run,
            root,
            sigmas,
            output,
            workers,
        } => {
            let cfg = run.resolve()?;
            cfg.validate()?;
            let root = required(root, &cfg.root, "dataset root")?;
            let dataset = load_dataset(&cfg, &root)?;
            let rates = blur_sweep(&dataset, cfg.extractor(), &sigmas, workers.count()?)?;
            let report = SweepReport::new(&cfg.extractor().signature_config(), &rates);
            let text = match output.format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json() + "\n",
            };
            emit(&text, output.report.as_deref())?;
        }
        Command::FitInspect { run, image, path, out } => {
            let cfg = run.resolve()?;
            let grid = image_io::load_grayscale(&image)?;
            let result = inspect::fit_inspect(&grid, &cfg, &path)?;
            emit(&(result.to_json() + "\n"), out.as_deref())?;
        }
        Command::Dump { run, image, out } => {
            let cfg = run.resolve()?;
            if !cfg.method.is_scattering() {
                return Err(AppError::usage("dump needs a scattering method"));
            }
            let grid = image_io::load_grayscale(&image)?.normalize_patch()?;
            let extractor = Extractor::new(cfg.extractor(), grid.width(), grid.height())?;
            let rep = extractor.scatter(&grid)?;
            dump::save(&rep, &out)?;
            println!("{} subbands written to {}", rep.len(), out.display());
        }
        Command::Synth {
            kind,
            out,
            classes,
            images,
            size,
            seed,
        } => {
            if classes == 0 || images == 0 || size < 8 {
                return Err(AppError::usage("synth needs classes >= 1, images >= 1, size >= 8"));
            }
            let data = match kind {
                SynthKind::Separable => synth::separable(classes, images, size, seed),
                SynthKind::FineCoarse => {
                    synth::fine_coarse(&synth::fine_coarse_amplitudes(classes), images, size, seed)
                }
            };
            synth::write_dataset(&out, &data)?;
            println!("{} classes x {images} images written to {}", data.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
