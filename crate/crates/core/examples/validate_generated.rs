//! Generated-versus-reference comparison with and without the corrective
//! post-generation lowpass, written as the CSV report of `validate`.
//!
//!     cargo run --release --example validate_generated

use ulsgan::cgan::{sample, train, GanConfig};
use ulsgan::corpus::{synth_processed_corpus, CorpusParams, MeasurementGrid};
use ulsgan::signal::PipelineConfig;
use ulsgan::stats::{AnalysisConfig, DistanceBin, Ground, LabeledSignal};
use ulsgan::validation::{
    compare_populations, post_lowpass, write_report, Tolerances, DEFAULT_POST_LOWPASS_HZ,
};

fn main() -> ulsgan::Result<()> {
    let grid = MeasurementGrid {
        heights_m: vec![0.48],
        betas_deg: vec![0.0],
        rotations: 10,
        repetitions: 10,
        grounds: vec![Ground::Gravel],
    };
    let reference = synth_processed_corpus(&grid, &CorpusParams::default(), &PipelineConfig::default(), 5)?
        .labeled()?;
    let cond = reference[0].condition;
    let cfg = GanConfig {
        generator_hidden: vec![64, 128, 128, 256],
        discriminator_hidden: vec![128, 64, 32],
        epochs: 10,
        seed: 1,
        ..GanConfig::default()
    };
    let ckpt = train(&reference, &cfg)?.checkpoint;
    let raw = sample(&ckpt, &cond, reference.len(), 2)?;
    let smooth = post_lowpass(&raw, DEFAULT_POST_LOWPASS_HZ)?;

    let bins: Vec<DistanceBin> = (1..=4).map(DistanceBin::new).collect();
    let label = |signals: Vec<_>| -> Vec<LabeledSignal> {
        signals
            .into_iter()
            .map(|signal| LabeledSignal { condition: cond, signal })
            .collect()
    };
    for (name, generated) in [("as generated", label(raw)), ("post-lowpassed", label(smooth))] {
        let report = compare_populations(
            &reference,
            &generated,
            &bins,
            Tolerances::default(),
            &AnalysisConfig::default(),
        )?;
        println!(
            "{name}: max |dk|/k {:.3}, max |dtheta|/theta {:.3} -> {}",
            report.summary.max_rel_err_k,
            report.summary.max_rel_err_theta,
            if report.passed() { "PASS" } else { "FAIL" }
        );
        write_report(&report, std::io::stdout().lock())?;
    }
    Ok(())
}
