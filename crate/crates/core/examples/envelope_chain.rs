//! Raw capture to envelope: synthesise one corpus record, run it through the
//! bandpass / mixing / lowpass / 2:33 resampling / modulus chain, and print
//! where the energy sits on the distance axis.
//!
//!     cargo run --release --example envelope_chain

use std::time::Instant;

use ulsgan::corpus::{synth_raw_signal, CorpusParams};
use ulsgan::signal::{Pipeline, PipelineConfig};
use ulsgan::stats::{bin_sample_range, Condition, DistanceBin, Ground, DEFAULT_SPEED_OF_SOUND_MPS};

fn main() -> ulsgan::Result<()> {
    let cond = Condition::new(0.48, -2.0, Ground::Gravel);
    let raw = synth_raw_signal(&cond, &CorpusParams::default(), 42)?;
    println!(
        "raw: {} samples at {} Hz ({:.1} ms)",
        raw.len(),
        raw.sample_rate_hz,
        1e3 * raw.len() as f64 / raw.sample_rate_hz
    );

    let cfg = PipelineConfig::default();
    let pipeline = Pipeline::new(&cfg, raw.sample_rate_hz)?;
    let t = Instant::now();
    let env = pipeline.process(&raw)?;
    println!(
        "envelope: {} samples at {} Hz in {:.2?} (output sample 0 = raw time {:.2} ms)",
        env.len(),
        env.sample_rate_hz,
        t.elapsed(),
        1e3 * cfg.head_trim_seconds()
    );

    println!("\n  bin   range (m)    mean    peak");
    for bin in DistanceBin::default_set() {
        let range = bin_sample_range(bin, env.sample_rate_hz, DEFAULT_SPEED_OF_SOUND_MPS)?;
        let range = range.start.min(env.len())..range.end.min(env.len());
        if range.is_empty() {
            break;
        }
        let w = &env.samples[range];
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let peak = w.iter().cloned().fold(0.0, f64::max);
        let bar = "#".repeat((mean * 40.0).round() as usize);
        println!(
            "  {:>3}  {:.2}-{:.2}  {mean:.4}  {peak:.4}  {bar}",
            bin.index,
            bin.lo_m(),
            bin.hi_m()
        );
    }
    Ok(())
}
