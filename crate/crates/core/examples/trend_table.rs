//! Per-bin Gamma trends over height and ground: the analysis behind the
//! `analyze` command, printed as a small table and written as CSV.
//!
//!     cargo run --release --example trend_table [report.csv]

use std::path::PathBuf;

use ulsgan::corpus::{synth_processed_corpus, CorpusParams, MeasurementGrid};
use ulsgan::signal::PipelineConfig;
use ulsgan::stats::{
    build_trend_table, interpolate_params, write_trend_csv, AnalysisConfig, DistanceBin, Ground,
};

fn main() -> ulsgan::Result<()> {
    let report = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ulsgan-trend.csv"));
    let grid = MeasurementGrid {
        heights_m: vec![0.36, 0.44, 0.52, 0.60],
        betas_deg: vec![0.0],
        rotations: 10,
        repetitions: 10,
        grounds: Ground::ALL.to_vec(),
    };
    let data = synth_processed_corpus(&grid, &CorpusParams::default(), &PipelineConfig::default(), 7)?
        .labeled()?;
    let cfg = AnalysisConfig::default();
    let bins: Vec<DistanceBin> = (1..=4).map(DistanceBin::new).collect();
    let table = build_trend_table(&data, &bins, &cfg)?;

    println!("ground   bin (m)    height     k      theta   chi2");
    for e in table.entries() {
        println!(
            "{:<8} {:.2}-{:.2}  {:.2} m  {:6.3}  {:7.4}  {}",
            e.condition.ground,
            e.bin.lo_m(),
            e.bin.hi_m(),
            e.condition.height_m,
            e.fit.params.k,
            e.fit.params.theta,
            if e.gof.accepted { "ok" } else { "rejected" }
        );
    }

    let between = interpolate_params(&table, Ground::Gravel, DistanceBin::new(2), 0.40, 0.0)?;
    println!(
        "\ninterpolated gravel, bin 2, 0.40 m: k = {:.3}, theta = {:.4}",
        between.k, between.theta
    );

    write_trend_csv(&table, &report)?;
    println!("wrote {} rows to {}", table.len(), report.display());
    Ok(())
}
