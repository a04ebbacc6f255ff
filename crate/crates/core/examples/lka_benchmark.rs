//! Receptive field and cost of the decomposed large-kernel attention against
//! a direct K×K depthwise convolution.
//!
//! `cargo run --release --example lka_benchmark -- [size] [channels]`

use inpaint_core::blocks::{bench_lka, flop_count, impulse_rf, lka_kernels, LkaBlock};
use inpaint_core::init;

fn main() -> inpaint_core::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let size = args.first().copied().unwrap_or(256);
    let channels = args.get(1).copied().unwrap_or(64);
    let d = 3;
    println!("K,local,dilated,support,direct_macs,decomposed_macs,direct_s,decomposed_s,speedup");
    for k in [14, 21, 28] {
        let (a, b) = lka_kernels(k, d)?;
        let block = LkaBlock::init(1, k, d, &mut init::rng(0))?;
        let rf = impulse_rf(|x| block.attention(x), 1, 0, 48)?;
        let f = flop_count(k, d, channels)?;
        let bench = bench_lka(k, d, size, channels, 2, 0)?;
        println!(
            "{k},{a}x{a},{b}x{b}@{d},{},{},{},{:.3},{:.3},{:.2}",
            rf.height(),
            f.direct,
            f.decomposed,
            bench.direct_secs,
            bench.decomposed_secs,
            bench.speedup()
        );
    }
    Ok(())
}
