use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::{
    adaptive_gof, collect_bin_amplitudes, fit_gamma, AnalysisConfig, Condition, DistanceBin,
    GammaFit, GammaParams, GofResult, Ground, LabeledSignal,
};
use crate::signal::ProcessedSignal;
use crate::{Error, Result};

/// Sorted unique heights and angles measured on one ground.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundGrid {
    pub heights_m: Vec<f64>,
    pub betas_deg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendEntry {
    pub condition: Condition,
    pub bin: DistanceBin,
    pub fit: GammaFit,
    pub n_samples: usize,
    pub excluded: usize,
    pub gof: GofResult,
}

/// One Gamma fit per (ground, bin, height, angle) over a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendTable {
    grids: BTreeMap<Ground, GroundGrid>,
    bins: Vec<DistanceBin>,
    // (ground, bin index, height index, beta index)
    entries: BTreeMap<(Ground, usize, usize, usize), TrendEntry>,
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

fn position(values: &[f64], x: f64) -> Option<usize> {
    values.iter().position(|&v| v == x)
}

impl TrendTable {
    pub fn grids(&self) -> &BTreeMap<Ground, GroundGrid> {
        &self.grids
    }

    pub fn bins(&self) -> &[DistanceBin] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in (ground, bin, height, beta) order.
    pub fn entries(&self) -> impl Iterator<Item = &TrendEntry> {
        self.entries.values()
    }

    pub fn get(&self, ground: Ground, bin: DistanceBin, height_m: f64, beta_deg: f64) -> Option<&TrendEntry> {
        let grid = self.grids.get(&ground)?;
        let hi = position(&grid.heights_m, height_m)?;
        let bi = position(&grid.betas_deg, beta_deg)?;
        self.entries.get(&(ground, bin.index, hi, bi))
    }

    /// CSV report, one row per entry.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            ground: Ground,
            bin_lo_m: f64,
            bin_hi_m: f64,
            height_m: f64,
            beta_deg: f64,
            k: f64,
            theta: f64,
            n_samples: usize,
            gof_accepted: bool,
        }
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Format(format!("CSV write failed: {e}"));
        for e in self.entries() {
            w.serialize(Row {
                ground: e.condition.ground,
                bin_lo_m: e.bin.lo_m(),
                bin_hi_m: e.bin.hi_m(),
                height_m: e.condition.height_m,
                beta_deg: e.condition.beta_deg,
                k: e.fit.params.k,
                theta: e.fit.params.theta,
                n_samples: e.n_samples,
                gof_accepted: e.gof.accepted,
            })
            .map_err(csv_err)?;
        }
        if self.entries.is_empty() {
            w.write_record([
                "ground", "bin_lo_m", "bin_hi_m", "height_m", "beta_deg", "k", "theta",
                "n_samples", "gof_accepted",
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

/// Writes the trend table as CSV to `path`.
pub fn write_trend_csv(table: &TrendTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    table.write_csv(std::io::BufWriter::new(file))
}

/// Fits a Gamma per (ground, bin, height, angle).
///
/// Each ground's conditions must form a full height x angle grid; missing
/// cells are reported as a structural error.
pub fn build_trend_table(
    dataset: &[LabeledSignal],
    bins: &[DistanceBin],
    cfg: &AnalysisConfig,
) -> Result<TrendTable> {
    if dataset.is_empty() {
        return Err(Error::Structural("dataset is empty".into()));
    }
    if bins.is_empty() {
        return Err(Error::param("no distance bins requested"));
    }
    let mut by_condition: BTreeMap<_, (Condition, Vec<&ProcessedSignal>)> = BTreeMap::new();
    for rec in dataset {
        by_condition
            .entry(rec.condition.key())
            .or_insert_with(|| (rec.condition, Vec::new()))
            .1
            .push(&rec.signal);
    }

    let mut grids = BTreeMap::new();
    let mut missing = Vec::new();
    for ground in Ground::ALL {
        let conds: Vec<&Condition> = by_condition
            .values()
            .map(|(c, _)| c)
            .filter(|c| c.ground == ground)
            .collect();
        if conds.is_empty() {
            continue;
        }
        let grid = GroundGrid {
            heights_m: sorted_unique(conds.iter().map(|c| c.height_m).collect()),
            betas_deg: sorted_unique(conds.iter().map(|c| c.beta_deg).collect()),
        };
        for &h in &grid.heights_m {
            for &b in &grid.betas_deg {
                if !by_condition.contains_key(&Condition::new(h, b, ground).key()) {
                    missing.push(format!("{ground} h={h} beta={b}"));
                }
            }
        }
        grids.insert(ground, grid);
    }
    if !missing.is_empty() {
        return Err(Error::Structural(format!(
            "grid is not rectangular; missing cells: {}",
            missing.join(", ")
        )));
    }

    let jobs: Vec<(Condition, &Vec<&ProcessedSignal>, DistanceBin)> = by_condition
        .values()
        .flat_map(|(c, sigs)| bins.iter().map(move |&b| (*c, sigs, b)))
        .collect();
    let fitted: Vec<Result<TrendEntry>> = jobs
        .par_iter()
        .map(|(cond, sigs, bin)| fit_cell(*cond, sigs, *bin, cfg))
        .collect();

    let mut entries = BTreeMap::new();
    for entry in fitted {
        let e = entry?;
        let grid = &grids[&e.condition.ground];
        let hi = position(&grid.heights_m, e.condition.height_m).expect("height in grid");
        let bi = position(&grid.betas_deg, e.condition.beta_deg).expect("beta in grid");
        entries.insert((e.condition.ground, e.bin.index, hi, bi), e);
    }
    let mut bins = bins.to_vec();
    bins.sort();
    bins.dedup();
    Ok(TrendTable {
        grids,
        bins,
        entries,
    })
}

pub(crate) fn fit_cell(
    condition: Condition,
    signals: &[&ProcessedSignal],
    bin: DistanceBin,
    cfg: &AnalysisConfig,
) -> Result<TrendEntry> {
    let amps = collect_bin_amplitudes(signals.iter().copied(), bin, cfg.speed_of_sound_mps)?;
    if amps.values.len() < cfg.min_samples.max(super::MIN_FIT_SAMPLES) {
        return Err(Error::InsufficientData(format!(
            "{condition} bin [{}, {}) m has {} positive amplitudes, need {}",
            bin.lo_m(),
            bin.hi_m(),
            amps.values.len(),
            cfg.min_samples.max(super::MIN_FIT_SAMPLES)
        )));
    }
    let fit = fit_gamma(&amps.values).map_err(|e| match e {
        Error::DegenerateData(msg) => Error::DegenerateData(format!(
            "{condition} bin [{}, {}) m: {msg}",
            bin.lo_m(),
            bin.hi_m()
        )),
        other => other,
    })?;
    let gof = adaptive_gof(&amps.values, fit.params, cfg)?;
    Ok(TrendEntry {
        condition,
        bin,
        fit,
        n_samples: amps.values.len(),
        excluded: amps.excluded,
        gof,
    })
}

/// Locates `x` on a sorted axis: lower index and interpolation weight.
fn bracket(axis: &[f64], x: f64, what: &str) -> Result<(usize, f64)> {
    let (first, last) = (axis[0], axis[axis.len() - 1]);
    if axis.len() == 1 {
        return if (x - first).abs() <= 1e-9 {
            Ok((0, 0.0))
        } else {
            Err(Error::Extrapolation(format!(
                "{what} {x} differs from the single grid value {first}"
            )))
        };
    }
    if !(x >= first && x <= last) {
        return Err(Error::Extrapolation(format!(
            "{what} {x} outside grid range [{first}, {last}]"
        )));
    }
    let i = axis
        .windows(2)
        .position(|w| x <= w[1])
        .unwrap_or(axis.len() - 2);
    let t = (x - axis[i]) / (axis[i + 1] - axis[i]);
    Ok((i, t))
}

/// Bilinear interpolation of `k` and `theta` (independently) over the
/// (height, angle) grid. Queries outside the grid are refused.
pub fn interpolate_params(
    table: &TrendTable,
    ground: Ground,
    bin: DistanceBin,
    height_m: f64,
    beta_deg: f64,
) -> Result<GammaParams> {
    let grid = table.grids.get(&ground).ok_or_else(|| {
        Error::Extrapolation(format!("no {ground} measurements in the table"))
    })?;
    if !table.bins.contains(&bin) {
        return Err(Error::Extrapolation(format!(
            "bin [{}, {}) m not in the table",
            bin.lo_m(),
            bin.hi_m()
        )));
    }
    let (hi, th) = bracket(&grid.heights_m, height_m, "height")?;
    let (bi, tb) = bracket(&grid.betas_deg, beta_deg, "beta")?;
    let h1 = (hi + 1).min(grid.heights_m.len() - 1);
    let b1 = (bi + 1).min(grid.betas_deg.len() - 1);
    let at = |h: usize, b: usize| table.entries[&(ground, bin.index, h, b)].fit.params;
    let (p00, p10, p01, p11) = (at(hi, bi), at(h1, bi), at(hi, b1), at(h1, b1));
    let lerp2 = |f: fn(&GammaParams) -> f64| {
        let lo = (1.0 - th) * f(&p00) + th * f(&p10);
        let hi = (1.0 - th) * f(&p01) + th * f(&p11);
        (1.0 - tb) * lo + tb * hi
    };
    Ok(GammaParams {
        k: lerp2(|p| p.k),
        theta: lerp2(|p| p.theta),
    })
}

/// Bin with the largest mean positive amplitude: where the ground clutter
/// dominates.
pub fn dominant_bin<'a, I>(
    signals: I,
    bins: &[DistanceBin],
    speed_of_sound_mps: f64,
) -> Result<DistanceBin>
where
    I: IntoIterator<Item = &'a ProcessedSignal>,
    I::IntoIter: Clone,
{
    let iter = signals.into_iter();
    let mut best: Option<(DistanceBin, f64)> = None;
    for &bin in bins {
        let amps = collect_bin_amplitudes(iter.clone(), bin, speed_of_sound_mps)?;
        if amps.values.is_empty() {
            continue;
        }
        let mean = amps.values.iter().sum::<f64>() / amps.values.len() as f64;
        if best.is_none_or(|(_, m)| mean > m) {
            best = Some((bin, mean));
        }
    }
    best.map(|(b, _)| b)
        .ok_or_else(|| Error::InsufficientData("no positive amplitudes in any bin".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    /// Signals whose samples are iid Gamma(k, theta) everywhere.
    fn population(cond: Condition, k: f64, theta: f64, count: usize, seed: u64) -> Vec<LabeledSignal> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Gamma::new(k, theta).unwrap();
        (0..count)
            .map(|_| LabeledSignal {
                condition: cond,
                signal: ProcessedSignal::new((0..583).map(|_| g.sample(&mut rng)).collect(), 20_000.0),
            })
            .collect()
    }

    fn grid(heights: &[f64], betas: &[f64], ground: Ground) -> Vec<LabeledSignal> {
        let mut out = Vec::new();
        for (i, &h) in heights.iter().enumerate() {
            for (j, &b) in betas.iter().enumerate() {
                let k = 1.5 + i as f64;
                let theta = 0.1 * (1 + j) as f64;
                out.extend(population(Condition::new(h, b, ground), k, theta, 4, (i * 10 + j) as u64));
            }
        }
        out
    }

    #[test]
    fn two_by_two_grid_gives_four_entries() {
        let data = grid(&[0.36, 0.48], &[-2.0, 0.0], Ground::Gravel);
        let table =
            build_trend_table(&data, &[DistanceBin::new(2)], &AnalysisConfig::default()).unwrap();
        assert_eq!(table.len(), 4);
        let g = &table.grids()[&Ground::Gravel];
        assert_eq!(g.heights_m, vec![0.36, 0.48]);
        assert_eq!(g.betas_deg, vec![-2.0, 0.0]);
        let e = table.get(Ground::Gravel, DistanceBin::new(2), 0.48, 0.0).unwrap();
        assert_eq!(e.n_samples, 4 * 29);
    }

    #[test]
    fn missing_cell_is_a_structural_error() {
        let mut data = grid(&[0.36, 0.48], &[-2.0, 0.0], Ground::Gravel);
        data.retain(|r| !(r.condition.height_m == 0.48 && r.condition.beta_deg == 0.0));
        let err = build_trend_table(&data, &[DistanceBin::new(2)], &AnalysisConfig::default())
            .unwrap_err();
        match err {
            Error::Structural(msg) => assert!(msg.contains("h=0.48") && msg.contains("beta=0")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn interpolation_hits_grid_points_and_midpoints() {
        let data = grid(&[0.36, 0.48], &[-2.0, 0.0], Ground::Gravel);
        let bin = DistanceBin::new(2);
        let table = build_trend_table(&data, &[bin], &AnalysisConfig::default()).unwrap();
        let p = |h, b| table.get(Ground::Gravel, bin, h, b).unwrap().fit.params;

        let at = interpolate_params(&table, Ground::Gravel, bin, 0.36, -2.0).unwrap();
        assert_eq!(at, p(0.36, -2.0));

        let mid = interpolate_params(&table, Ground::Gravel, bin, 0.42, 0.0).unwrap();
        let expect = (p(0.36, 0.0).k + p(0.48, 0.0).k) / 2.0;
        assert!((mid.k - expect).abs() < 1e-12);
    }

    #[test]
    fn interpolation_refuses_to_extrapolate() {
        let data = grid(&[0.36, 0.48], &[-2.0, 0.0], Ground::Gravel);
        let bin = DistanceBin::new(2);
        let table = build_trend_table(&data, &[bin], &AnalysisConfig::default()).unwrap();
        for (h, b) in [(0.35, -1.0), (0.50, -1.0), (0.40, 1.0)] {
            assert!(matches!(
                interpolate_params(&table, Ground::Gravel, bin, h, b),
                Err(Error::Extrapolation(_))
            ));
        }
        assert!(interpolate_params(&table, Ground::Asphalt, bin, 0.40, -1.0).is_err());
    }

    #[test]
    fn csv_has_one_row_per_entry() {
        let data = grid(&[0.36, 0.48], &[0.0], Ground::Asphalt);
        let table = build_trend_table(
            &data,
            &[DistanceBin::new(1), DistanceBin::new(2)],
            &AnalysisConfig::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4);
        assert_eq!(
            lines[0],
            "ground,bin_lo_m,bin_hi_m,height_m,beta_deg,k,theta,n_samples,gof_accepted"
        );
        assert!(lines[1].starts_with("asphalt,0.25,0.5,0.36,0.0,"));
    }

    #[test]
    fn dominant_bin_has_the_largest_mean() {
        let mut sigs = Vec::new();
        for s in 0..4 {
            let mut v = vec![0.1; 583];
            for x in &mut v[87..116] {
                *x = 1.0 + s as f64;
            }
            sigs.push(ProcessedSignal::new(v, 20_000.0));
        }
        let b = dominant_bin(&sigs, &DistanceBin::default_set(), 343.0).unwrap();
        assert_eq!(b, DistanceBin::new(3));
    }
}
