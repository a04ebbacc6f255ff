//! Trains the structure upsampler on synthetic lines and reports held-out F1
//! for one doubling (64 -> 128) and for two iterated doublings (64 -> 256)
//! after every epoch.
//!
//! `cargo run --release --example ssu_training -- [pairs] [epochs] [step] [final_step]`

use std::time::Instant;

use inpaint_core::init;
use inpaint_core::priors::{evaluate_f1, ssu_train, synthetic_corpus, SsuWeights, TrainConfig, DEFAULT_WIDTH};

fn main() -> inpaint_core::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize| args.get(i).and_then(|s| s.parse::<f64>().ok());
    let pairs = arg(0).map_or(2000, |v| v as usize);
    let defaults = TrainConfig::default();
    let epochs = arg(1).map_or(defaults.epochs, |v| v as usize);
    let mut cfg = TrainConfig { epochs, ..defaults }.with_step(arg(2).unwrap_or(defaults.step));
    if let Some(last) = arg(3) {
        cfg.final_step = last;
    }

    let mut rng = init::rng(0);
    let corpus = synthetic_corpus(pairs, 64, 2, &mut rng)?;
    let held_out = synthetic_corpus(50, 64, 2, &mut rng)?;
    let held_out_x4 = synthetic_corpus(20, 64, 4, &mut rng)?;
    let mut weights = SsuWeights::init(DEFAULT_WIDTH, &mut rng);
    let start = Instant::now();
    ssu_train(&mut weights, &corpus, &cfg, |e, loss, w| {
        let f128 = evaluate_f1(w, &held_out).unwrap_or(f64::NAN);
        let f256 = evaluate_f1(w, &held_out_x4).unwrap_or(f64::NAN);
        println!(
            "epoch {e}: loss {loss:.5}  F1@128 {f128:.4}  F1@256 {f256:.4}  ({:.0}s)",
            start.elapsed().as_secs_f64()
        );
    })?;
    Ok(())
}
