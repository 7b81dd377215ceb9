use std::time::Instant;

use tracekit_core::nn::{train, TrainConfig};
use tracekit_core::synth::{corpus, SynthKind};

fn main() {
    let arg = |i: usize, d: usize| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let (side, n, epochs) = (arg(1, 256), arg(2, 10), arg(3, 200));
    let kind = if std::env::args().nth(4).as_deref() == Some("cats") { SynthKind::Cats } else { SynthKind::Blobs };
    let imgs = corpus(kind, n, side, 6);
    let cfg = TrainConfig { epochs, seed: 6, ..Default::default() };
    let t = Instant::now();
    let out = train(&cfg, &imgs).unwrap();
    let l = &out.epoch_losses;
    println!("elapsed {:?} first {} last {} ratio {}", t.elapsed(), l[0], l[l.len() - 1], l[l.len() - 1] / l[0]);
    for (i, v) in l.iter().enumerate().step_by(10) {
        println!("{i} {v}");
    }
}
