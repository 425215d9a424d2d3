//! Pre-selection of control series by correlation and dynamic time
//! warping against the treated series.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::{mean_sd, DateIndexedSeries};

/// Most controls a screening run will hand to the model.
pub const MAX_SELECTED: usize = 50;
/// Fewest controls worth modelling; fewer triggers a warning.
pub const MIN_SELECTED: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrescreenError {
    #[error("series `{0}` is constant over the common days")]
    ConstantSeries(String),
    #[error("series `{a}` and `{b}` are not on the same calendar")]
    NotAligned { a: String, b: String },
    #[error("fewer than two common present days between `{a}` and `{b}`")]
    TooFewCommonDays { a: String, b: String },
}

pub type Result<T, E = PrescreenError> = std::result::Result<T, E>;

/// Sample Pearson correlation over the days where both series are present.
pub fn pearson(a: &DateIndexedSeries, b: &DateIndexedSeries) -> Result<f64> {
    if a.start() != b.start() || a.len() != b.len() {
        return Err(PrescreenError::NotAligned {
            a: a.name().into(),
            b: b.name().into(),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .values()
        .iter()
        .zip(b.values())
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .unzip();
    if xs.len() < 2 {
        return Err(PrescreenError::TooFewCommonDays {
            a: a.name().into(),
            b: b.name().into(),
        });
    }
    let (mx, sx) = mean_sd(&xs);
    let (my, sy) = mean_sd(&ys);
    for (s, name) in [(sx, a.name()), (sy, b.name())] {
        if s == 0.0 {
            return Err(PrescreenError::ConstantSeries(name.into()));
        }
    }
    let cov: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / (xs.len() - 1) as f64;
    Ok((cov / (sx * sy)).clamp(-1.0, 1.0))
}

fn standardized(values: &[f64]) -> Vec<f64> {
    let (mean, sd) = mean_sd(values);
    if values.len() < 2 || sd <= 1e-14 * mean.abs().max(1.0) {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / sd).collect()
}

/// DTW between two raw sequences with absolute-difference cost and steps
/// (1,0), (0,1), (1,1). `window` limits |i − j| (widened to cover the
/// length difference); `None` means unconstrained.
pub fn dtw(a: &[f64], b: &[f64], window: Option<usize>) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return if n == m { 0.0 } else { f64::INFINITY };
    }
    let w = window.map_or(usize::MAX, |w| w.max(n.abs_diff(m)));
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        cur.fill(f64::INFINITY);
        let lo = if w == usize::MAX { 1 } else { i.saturating_sub(w).max(1) };
        let hi = if w == usize::MAX { m } else { (i + w).min(m) };
        for j in lo..=hi {
            let cost = (a[i - 1] - b[j - 1]).abs();
            cur[j] = cost + prev[j].min(cur[j - 1]).min(prev[j - 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// DTW distance between two series after standardizing each. Missing
/// days are interpolated first.
pub fn dtw_distance(
    a: &DateIndexedSeries,
    b: &DateIndexedSeries,
    window: Option<usize>,
) -> f64 {
    let dense = |s: &DateIndexedSeries| match s.fill_missing() {
        Ok(f) => f.to_dense(),
        Err(_) => Vec::new(),
    };
    dtw(
        &standardized(&dense(a)),
        &standardized(&dense(b)),
        window,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub name: String,
    /// `None` when the correlation is undefined (constant series).
    pub pearson: Option<f64>,
    pub dtw: f64,
    pub correlation_rank: usize,
    pub dtw_rank: usize,
    pub combined_rank: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScreeningOptions {
    pub max_k: usize,
    pub dtw_window: Option<usize>,
}

impl Default for ScreeningOptions {
    fn default() -> Self {
        Self {
            max_k: MAX_SELECTED,
            dtw_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub treated: String,
    /// Candidates ordered by combined rank.
    pub candidates: Vec<CandidateScore>,
    pub selected: Vec<String>,
    pub max_k: usize,
    pub dtw_window: Option<usize>,
    pub warnings: Vec<String>,
}

impl ScreeningReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "name,pearson,dtw,correlation_rank,dtw_rank,combined_rank,selected")?;
        for c in &self.candidates {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                c.name,
                c.pearson.map(|r| r.to_string()).unwrap_or_default(),
                c.dtw,
                c.correlation_rank,
                c.dtw_rank,
                c.combined_rank,
                c.selected
            )?;
        }
        Ok(())
    }
}

/// Ordinal ranks (1-based) of `keys`, ascending, ties broken by name.
fn ranks(keys: &[f64], names: &[&str]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&i, &j| keys[i].total_cmp(&keys[j]).then_with(|| names[i].cmp(names[j])));
    let mut out = vec![0; keys.len()];
    for (r, i) in order.into_iter().enumerate() {
        out[i] = r + 1;
    }
    out
}

/// Scores every candidate against `treated` and keeps the best
/// `max_k` (clamped to 3..=50) by the mean of the correlation and DTW ranks.
pub fn rank_controls(
    treated: &DateIndexedSeries,
    candidates: &[DateIndexedSeries],
    options: &ScreeningOptions,
) -> ScreeningReport {
    let scored: Vec<(Option<f64>, f64)> = candidates
        .par_iter()
        .map(|c| {
            let r = pearson(treated, c).ok();
            (r, dtw_distance(treated, c, options.dtw_window))
        })
        .collect();
    let names: Vec<&str> = candidates.iter().map(|c| c.name()).collect();
    // Undefined correlations sort last.
    let corr_keys: Vec<f64> = scored
        .iter()
        .map(|(r, _)| r.map_or(f64::INFINITY, |r| -r.abs()))
        .collect();
    let dtw_keys: Vec<f64> = scored.iter().map(|(_, d)| *d).collect();
    let corr_rank = ranks(&corr_keys, &names);
    let dtw_rank = ranks(&dtw_keys, &names);

    let mut rows: Vec<CandidateScore> = (0..candidates.len())
        .map(|i| CandidateScore {
            name: names[i].to_string(),
            pearson: scored[i].0,
            dtw: scored[i].1,
            correlation_rank: corr_rank[i],
            dtw_rank: dtw_rank[i],
            combined_rank: 0.5 * (corr_rank[i] + dtw_rank[i]) as f64,
            selected: false,
        })
        .collect();
    rows.sort_by(|a, b| {
        a.combined_rank
            .total_cmp(&b.combined_rank)
            .then_with(|| a.name.cmp(&b.name))
    });

    let max_k = options.max_k.clamp(MIN_SELECTED, MAX_SELECTED);
    let keep = max_k.min(rows.len());
    for row in rows.iter_mut().take(keep) {
        row.selected = true;
    }
    let mut warnings = Vec::new();
    if options.max_k != max_k {
        warnings.push(format!(
            "max_k {} outside {MIN_SELECTED}..={MAX_SELECTED}; using {max_k}",
            options.max_k
        ));
    }
    if keep < MIN_SELECTED {
        warnings.push(format!(
            "only {keep} control candidates available; at least {MIN_SELECTED} are recommended"
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    ScreeningReport {
        treated: treated.name().to_string(),
        selected: rows.iter().filter(|r| r.selected).map(|r| r.name.clone()).collect(),
        candidates: rows,
        max_k,
        dtw_window: options.dtw_window,
        warnings,
    }
}
