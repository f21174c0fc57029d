//! SVG line plot from a CSV report, as the `plot` command renders it:
//! shape parameter over height, one line per ground type.
//!
//!     cargo run --release --example plot_report [out.svg]

use std::path::PathBuf;

use ulsgan::cli::{render_svg, PlotSpec};
use ulsgan::corpus::{synth_processed_corpus, CorpusParams, MeasurementGrid};
use ulsgan::signal::PipelineConfig;
use ulsgan::stats::{build_trend_table, AnalysisConfig, DistanceBin, Ground};

fn main() -> ulsgan::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("ulsgan-shape.svg"));
    let grid = MeasurementGrid {
        heights_m: vec![0.36, 0.42, 0.48, 0.54, 0.60],
        betas_deg: vec![0.0],
        rotations: 5,
        repetitions: 10,
        grounds: Ground::ALL.to_vec(),
    };
    let data = synth_processed_corpus(&grid, &CorpusParams::default(), &PipelineConfig::default(), 4)?
        .labeled()?;
    let table = build_trend_table(&data, &[DistanceBin::new(2)], &AnalysisConfig::default())?;
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;

    let spec = PlotSpec {
        x: "height_m".into(),
        y: "k".into(),
        series: Some("ground".into()),
        title: Some("Gamma shape, 0.50-0.75 m bin".into()),
        ..PlotSpec::default()
    };
    let svg = render_svg(&String::from_utf8_lossy(&csv), &spec)?;
    std::fs::write(&out, &svg).map_err(|e| ulsgan::Error::Io { path: out.clone(), source: e })?;
    println!("wrote {} ({} bytes)", out.display(), svg.len());
    Ok(())
}
