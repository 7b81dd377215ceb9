//! Trains (or loads cached) desk models and prints reconstruction and
//! pipeline comparisons. Usage: desk_eval [CACHE_DIR] [SIDE] [EPOCHS]

use std::collections::BTreeMap;
use std::path::PathBuf;

use tracekit_core::experiment::{domain, filter_all, model_set, reconstruction_ssim, train_domains};
use tracekit_core::filters::{FilterKind, FilterParams, FilterTag, Variant};
use tracekit_core::metrics::{summarize, SsimParams};
use tracekit_core::nn::{load_model, save_model, TrainConfig};
use tracekit_core::pipeline::{run_batch, PipelineConfig, PipelineSpec};
use tracekit_core::synth::{corpus, write_corpus, SynthKind};

fn main() {
    env_logger::init();
    let args: Vec<String> = std::env::args().collect();
    let cache = PathBuf::from(args.get(1).cloned().unwrap_or_else(|| "/tmp/desk".into()));
    let side: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(64);
    let epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(200);
    std::fs::create_dir_all(&cache).unwrap();
    let train_imgs = corpus(SynthKind::Cats, 100, side, 100);
    let test_imgs = corpus(SynthKind::Cats, 20, side, 200);
    let fp = FilterParams::default();
    let mut kinds = vec![None];
    for tag in [FilterTag::Sobel, FilterTag::Canny] {
        for v in [Variant::Inverse, Variant::Direct] {
            kinds.push(Some(FilterKind::new(tag, v)));
        }
    }
    let cfg = TrainConfig { epochs, seed: 7, ..Default::default() };
    let mut models = BTreeMap::new();
    for &k in &kinds {
        let p = cache.join(format!("{}_{side}_{epochs}.tkae", domain(k)));
        let m = if p.exists() {
            load_model(&p).unwrap()
        } else {
            let t = std::time::Instant::now();
            let mut m = train_domains(&[k], &train_imgs, &cfg, &fp).unwrap();
            let (model, losses) = m.remove(&domain(k)).unwrap();
            println!("{} trained in {:?}: loss {} -> {}", domain(k), t.elapsed(), losses[0], losses[losses.len() - 1]);
            save_model(&model, &p).unwrap();
            model
        };
        models.insert(domain(k), (m, vec![]));
    }
    let sp = SsimParams::default();
    for &k in &kinds[1..] {
        let k = k.unwrap();
        let imgs = filter_all(k, &test_imgs, &fp).unwrap();
        let s = reconstruction_ssim(&models[&domain(Some(k))].0, &imgs, &sp).unwrap();
        println!("recon {k}: mean ssim {:.4}", summarize(&s).unwrap().mean);
    }
    let dir = cache.join(format!("corpus_{side}"));
    write_corpus(&dir, "cat", &test_imgs).unwrap();
    let names = [
        "default-vect", "default-dec-vect", "default-sobel-vect", "default-dec-sobel-vect", "default-sobel-dec-vect",
        "default-canny-vect", "default-dec-canny-vect", "default-canny-dec-vect",
    ];
    let specs: Vec<PipelineSpec> = names.iter().map(|n| n.parse().unwrap()).collect();
    let pc = PipelineConfig { side, sample_n: 20, compare_original: true, ..Default::default() };
    let report = run_batch(&dir, &specs, &pc, &model_set(&models), Some(&cache.join("out"))).unwrap();
    for s in report.summaries().unwrap() {
        let orig = summarize(&report.rows_for(&s.pipeline).map(|r| r.ssim_original.unwrap()).collect::<Vec<_>>()).unwrap();
        println!(
            "{:28} median paths {:6.1} mean ssim {:.4} mean ssim_orig {:.4}",
            s.pipeline, s.path_count.median, s.ssim.mean, orig.mean
        );
    }
}
