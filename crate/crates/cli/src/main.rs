use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tracekit_core::filters::{self, FilterKind, FilterParams, FilterTag, Variant};
use tracekit_core::metrics::{mse, ssim, SsimParams};
use tracekit_core::nn::{load_model, save_model, train, OptimizerKind, TrainConfig};
use tracekit_core::pipeline::{
    compare_report, parse_spec_list, run_batch, ModelSet, PipelineConfig, RunReport, MODEL_ENV,
};
use tracekit_core::raster::{load_image, prepare, save_image};
use tracekit_core::render::render;
use tracekit_core::svg::{emit_svg, parse_paths};
use tracekit_core::synth::{corpus, write_corpus, SynthKind};
use tracekit_core::tracer::{trace, TraceParams, TurnPolicy};

#[derive(Parser)]
#[command(name = "tracekit", version, about = "Filter, autoencode and vectorize grayscale images")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an autoencoder on a directory of images.
    Train(TrainArgs),
    /// Reconstruct an image through a trained autoencoder.
    Autoencode {
        /// Model file; defaults to $TRACEKIT_MODEL.
        #[arg(long)]
        model: Option<PathBuf>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Apply a high-pass filter.
    Filter {
        #[arg(long)]
        kind: FilterTag,
        #[arg(long, default_value = "inverse")]
        variant: Variant,
        /// Canny low threshold.
        #[arg(long, default_value_t = filters::DEFAULT_CANNY_LOW)]
        low: u8,
        /// Canny high threshold.
        #[arg(long, default_value_t = filters::DEFAULT_CANNY_HIGH)]
        high: u8,
        /// Gaussian high-pass sigma.
        #[arg(long, default_value_t = filters::DEFAULT_GHP_SIGMA)]
        sigma: f64,
        input: PathBuf,
        output: PathBuf,
    },
    /// Trace an image into an SVG.
    Trace {
        #[command(flatten)]
        params: TraceArgs,
        input: PathBuf,
        output: PathBuf,
    },
    /// Render an SVG produced by `trace` to a grayscale image.
    Rasterize {
        input: PathBuf,
        /// WIDTHxHEIGHT; defaults to the SVG's own size.
        #[arg(long)]
        size: Option<String>,
        output: PathBuf,
    },
    /// Print MSE and SSIM between two images.
    Metrics {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 7)]
        ssim_window: usize,
    },
    /// Batch pipelines and reports.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// Write a synthetic image corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, default_value_t = 256)]
        side: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `cats` or `blobs`.
        #[arg(long, default_value = "cats")]
        kind: String,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// `adam` or `sgd`.
    #[arg(long, default_value = "adam")]
    optimizer: OptimizerKind,
    /// Images are center-cropped and resized to this side.
    #[arg(long, default_value_t = 256)]
    side: usize,
    /// Also write per-epoch losses as CSV.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Args, Default)]
struct TraceArgs {
    #[arg(long)]
    threshold: Option<u8>,
    #[arg(long)]
    turdsize: Option<usize>,
    /// black, white, majority or minority.
    #[arg(long)]
    turnpolicy: Option<TurnPolicy>,
    #[arg(long)]
    alphamax: Option<f64>,
    #[arg(long)]
    no_opticurve: bool,
    #[arg(long)]
    opttolerance: Option<f64>,
}

impl TraceArgs {
    fn apply(&self, p: &mut TraceParams) {
        if let Some(v) = self.threshold {
            p.threshold = v;
        }
        if let Some(v) = self.turdsize {
            p.turdsize = v;
        }
        if let Some(v) = self.turnpolicy {
            p.turnpolicy = v;
        }
        if let Some(v) = self.alphamax {
            p.alphamax = v;
        }
        if self.no_opticurve {
            p.opticurve = false;
        }
        if let Some(v) = self.opttolerance {
            p.opttolerance = v;
        }
    }
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Run pipelines over a sample of a corpus and write report.csv.
    Run {
        /// File with one pipeline name per line.
        #[arg(long)]
        specs: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// key=value settings, overridden by the flags below.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        side: Option<usize>,
        /// Fallback model for every autoencode stage.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Model for one input domain, as DOMAIN=PATH (repeatable).
        #[arg(long = "model-for", value_name = "DOMAIN=PATH")]
        model_for: Vec<String>,
        #[arg(long)]
        ssim_window: Option<usize>,
        #[arg(long)]
        compare_original: bool,
        #[arg(long)]
        no_intermediates: bool,
        #[command(flatten)]
        trace: TraceArgs,
    },
    /// Turn a report CSV into box-plot and ranking tables.
    Report {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn env_model() -> Option<PathBuf> {
    std::env::var_os(MODEL_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (w, h) = s.split_once(['x', 'X']).context("size must look like WIDTHxHEIGHT")?;
    let (w, h) = (w.trim().parse()?, h.trim().parse()?);
    if w == 0 || h == 0 {
        bail!("size must be positive");
    }
    Ok((w, h))
}

fn load_dir(dir: &Path, side: usize) -> Result<Vec<tracekit_core::GrayImage>> {
    let mut imgs = Vec::new();
    for p in tracekit_core::pipeline::run::list_corpus(dir)? {
        match load_image(&p).and_then(|i| prepare(&i, side)) {
            Ok(i) => imgs.push(i),
            Err(e) => log::warn!("skipping {}: {e}", p.display()),
        }
    }
    if imgs.is_empty() {
        bail!("no readable images in {}", dir.display());
    }
    Ok(imgs)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let imgs = load_dir(&a.data, a.side)?;
            let cfg = TrainConfig {
                epochs: a.epochs,
                batch_size: a.batch_size,
                learning_rate: a.lr,
                seed: a.seed,
                optimizer: a.optimizer,
            };
            log::info!("training on {} images", imgs.len());
            let out = train(&cfg, &imgs)?;
            save_model(&out.model, &a.out)?;
            if let Some(p) = a.loss_csv {
                let mut text = String::from("epoch,loss\n");
                for (i, l) in out.epoch_losses.iter().enumerate() {
                    text.push_str(&format!("{},{l:.9}\n", i + 1));
                }
                std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
            }
            let l = &out.epoch_losses;
            println!("epochs={} first_loss={:.6} final_loss={:.6}", l.len(), l[0], l[l.len() - 1]);
        }
        Command::Autoencode { model, input, output } => {
            let path = model
                .or_else(env_model)
                .with_context(|| format!("no --model given and {MODEL_ENV} is unset"))?;
            let m = load_model(&path)?;
            let img = prepare(&load_image(&input)?, m.side)?;
            save_image(&m.forward(&img)?.0, &output)?;
        }
        Command::Filter {
            kind,
            variant,
            low,
            high,
            sigma,
            input,
            output,
        } => {
            let params = FilterParams {
                canny_low: low,
                canny_high: high,
                ghp_sigma: sigma,
            };
            let out = filters::apply(FilterKind::new(kind, variant), &load_image(&input)?, &params)?;
            save_image(&out, &output)?;
        }
        Command::Trace { params, input, output } => {
            let mut p = TraceParams::default();
            params.apply(&mut p);
            let doc = trace(&load_image(&input)?, &p)?;
            std::fs::write(&output, emit_svg(&doc)).with_context(|| format!("writing {}", output.display()))?;
        }
        Command::Rasterize { input, size, output } => {
            let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
            let doc = parse_paths(&text)?;
            let (w, h) = match size {
                Some(s) => parse_size(&s)?,
                None => (doc.width.ceil() as usize, doc.height.ceil() as usize),
            };
            if w == 0 || h == 0 {
                bail!("the SVG has no size; pass --size");
            }
            save_image(&render(&doc, w, h)?, &output)?;
        }
        Command::Metrics { a, b, ssim_window } => {
            let (a, b) = (load_image(&a)?, load_image(&b)?);
            let p = SsimParams::with_window(ssim_window);
            println!("mse={:.6} ssim={:.6}", mse(&a, &b)?, ssim(&a, &b, &p)?);
        }
        Command::Pipeline(PipelineCommand::Run {
            specs,
            data,
            out,
            config,
            n,
            seed,
            side,
            model,
            model_for,
            ssim_window,
            compare_original,
            no_intermediates,
            trace,
        }) => {
            let mut cfg = PipelineConfig {
                fallback_model: env_model(),
                ..Default::default()
            };
            if let Some(p) = config {
                let text = std::fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                cfg.apply_text(&text)?;
            }
            if let Some(v) = n {
                cfg.sample_n = v;
            }
            if let Some(v) = seed {
                cfg.seed = v;
            }
            if let Some(v) = side {
                cfg.side = v;
            }
            if let Some(v) = model {
                cfg.fallback_model = Some(v);
            }
            for entry in &model_for {
                let (d, p) = entry.split_once('=').context("--model-for expects DOMAIN=PATH")?;
                cfg.set(&format!("model.{d}"), p)?;
            }
            if let Some(v) = ssim_window {
                cfg.ssim.window = v;
            }
            cfg.compare_original |= compare_original;
            if no_intermediates {
                cfg.write_intermediates = false;
            }
            trace.apply(&mut cfg.trace);
            let text = std::fs::read_to_string(&specs).with_context(|| format!("reading {}", specs.display()))?;
            let list = parse_spec_list(&text)?;
            if list.is_empty() {
                bail!("{} lists no pipelines", specs.display());
            }
            let specs = list;
            let needs_model = specs.iter().any(|s| s.autoencodes());
            let models = if needs_model { ModelSet::load(&cfg)? } else { ModelSet::default() };
            std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let report = run_batch(&data, &specs, &cfg, &models, Some(&out))?;
            let csv = out.join("report.csv");
            report.write_csv(&csv)?;
            compare_report(&report, &out)?;
            println!(
                "images={} skipped={} rows={} report={}",
                report.sampled - report.skipped,
                report.skipped,
                report.rows.len(),
                csv.display()
            );
        }
        Command::Pipeline(PipelineCommand::Report { csv, out }) => {
            let report = RunReport::read_csv(&csv)?;
            for f in compare_report(&report, &out)? {
                println!("{}", f.display());
            }
        }
        Command::Synth {
            out,
            n,
            side,
            seed,
            kind,
        } => {
            let kind = match kind.as_str() {
                "cats" => SynthKind::Cats,
                "blobs" => SynthKind::Blobs,
                k => bail!("unknown synthetic kind '{k}'"),
            };
            let files = write_corpus(&out, "synth", &corpus(kind, n, side, seed))?;
            println!("wrote {} images to {}", files.len(), out.display());
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
