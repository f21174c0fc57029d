//! Gamma statistics of one distance bin: maximum-likelihood fit and the
//! chi-square goodness-of-fit test, on known draws and on corpus envelopes.
//!
//!     cargo run --release --example gamma_fit

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use ulsgan::corpus::{synth_processed_corpus, CorpusParams, MeasurementGrid};
use ulsgan::signal::PipelineConfig;
use ulsgan::stats::{chi_square_gof, collect_bin_amplitudes, fit_gamma, Condition, Ground};

fn main() -> ulsgan::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws: Vec<f64> = {
        let g = Gamma::new(3.0, 0.2).expect("valid parameters");
        (0..50_000).map(|_| g.sample(&mut rng)).collect()
    };
    let fit = fit_gamma(&draws)?;
    let gof = chi_square_gof(&draws, fit.params, 20)?;
    println!(
        "Gamma(3, 0.2) draws: k = {:.4}, theta = {:.5} via {:?} in {} iterations",
        fit.params.k, fit.params.theta, fit.method, fit.iterations
    );
    println!(
        "  chi2 = {:.2} on {} dof (critical {:.2}): {}",
        gof.statistic,
        gof.degrees_of_freedom,
        gof.critical_value,
        if gof.accepted { "accepted" } else { "rejected" }
    );

    let params = CorpusParams::default();
    for ground in Ground::ALL {
        let cond = Condition::new(0.44, 0.0, ground);
        let grid = MeasurementGrid {
            heights_m: vec![cond.height_m],
            betas_deg: vec![cond.beta_deg],
            rotations: 1,
            repetitions: 500,
            grounds: vec![ground],
        };
        let data = synth_processed_corpus(&grid, &params, &PipelineConfig::default(), 3)?.labeled()?;
        let bin = params.dominant_bin(&cond);
        let amps = collect_bin_amplitudes(data.iter().map(|s| &s.signal), bin, params.speed_of_sound_mps)?;
        let fit = fit_gamma(&amps.values)?;
        let target = params.target(&cond, bin)?;
        let gof = chi_square_gof(&amps.values, fit.params, 20)?;
        println!(
            "{cond}, bin {} ({} amplitudes): fit k = {:.3}, theta = {:.4}; configured k = {:.3}, \
             theta = {:.4}; chi2 {:.1} ({})",
            bin.index,
            amps.values.len(),
            fit.params.k,
            fit.params.theta,
            target.k,
            target.theta,
            gof.statistic,
            if gof.accepted { "accepted" } else { "rejected" }
        );
    }
    Ok(())
}
