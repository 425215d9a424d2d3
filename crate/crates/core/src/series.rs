//! Calendar-anchored daily series.
//!
//! A [`DateIndexedSeries`] always covers consecutive calendar days; a day
//! without data is an explicit `None`, never an omitted day. Panels of
//! series share one calendar after [`align`].

use std::collections::HashSet;
use std::io::{self, Write};

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("series `{0}` has no values")]
    Empty(String),
    #[error("series `{name}` has a non-finite value at index {index}")]
    NonFinite { name: String, index: usize },
    #[error("series have no calendar day in common")]
    EmptyIntersection,
    #[error("series `{name}` has {present} present values, need at least {needed}")]
    TooShort {
        name: String,
        present: usize,
        needed: usize,
    },
    #[error("no interpolation points supplied")]
    NoPoints,
    #[error("interpolation points must be sorted with distinct dates (offending date {0})")]
    UnsortedPoints(NaiveDate),
    #[error("duplicate control name `{0}`")]
    DuplicateName(String),
    #[error("series `{0}` has no present values to interpolate from")]
    AllMissing(String),
    #[error("empty calendar: {start} is after {end}")]
    EmptyCalendar { start: NaiveDate, end: NaiveDate },
    #[error("date {date} is outside series `{name}`")]
    OutOfRange { name: String, date: NaiveDate },
}

pub type Result<T, E = SeriesError> = std::result::Result<T, E>;

/// A contiguous daily series. `None` marks a missing day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateIndexedSeries {
    name: String,
    start: NaiveDate,
    values: Vec<Option<f64>>,
}

impl DateIndexedSeries {
    pub fn new(
        name: impl Into<String>,
        start: NaiveDate,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(SeriesError::Empty(name));
        }
        if let Some(index) = values
            .iter()
            .position(|v| matches!(v, Some(x) if !x.is_finite()))
        {
            return Err(SeriesError::NonFinite { name, index });
        }
        Ok(Self {
            name,
            start,
            values,
        })
    }

    /// Series without missing days.
    pub fn from_values(
        name: impl Into<String>,
        start: NaiveDate,
        values: impl IntoIterator<Item = f64>,
    ) -> Result<Self> {
        Self::new(name, start, values.into_iter().map(Some).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn start(&self) -> NaiveDate {
        self.start
    }

    /// Last covered day (inclusive).
    pub fn end(&self) -> NaiveDate {
        self.date_at(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + Duration::days(index as i64)
    }

    /// Position of `date` in the series, if covered.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        let offset = (date - self.start).num_days();
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        self.index_of(date).and_then(|i| self.values[i])
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        (0..self.values.len()).map(|i| self.date_at(i))
    }

    pub fn present(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(|v| *v)
    }

    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Values with missing days replaced by `NaN`.
    pub fn to_dense(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()
    }

    /// Sub-series over `[from, from + len)` by position.
    pub fn slice(&self, from: usize, len: usize) -> Result<Self> {
        if len == 0 || from + len > self.values.len() {
            return Err(SeriesError::OutOfRange {
                name: self.name.clone(),
                date: self.date_at(from + len),
            });
        }
        Ok(Self {
            name: self.name.clone(),
            start: self.date_at(from),
            values: self.values[from..from + len].to_vec(),
        })
    }

    /// Sub-series covering `start..=end`.
    pub fn window(&self, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let from = self.index_of(start).ok_or_else(|| SeriesError::OutOfRange {
            name: self.name.clone(),
            date: start,
        })?;
        let to = self.index_of(end).ok_or_else(|| SeriesError::OutOfRange {
            name: self.name.clone(),
            date: end,
        })?;
        if to < from {
            return Err(SeriesError::EmptyCalendar { start, end });
        }
        self.slice(from, to - from + 1)
    }

    /// Fills missing days by linear interpolation between present
    /// neighbours, flat beyond the first and last present day.
    pub fn fill_missing(&self) -> Result<Self> {
        if self.is_complete() {
            return Ok(self.clone());
        }
        let known: Vec<(f64, f64)> = self
            .values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|x| (i as f64, x)))
            .collect();
        if known.is_empty() {
            return Err(SeriesError::AllMissing(self.name.clone()));
        }
        let filled = (0..self.values.len())
            .map(|i| Some(self.values[i].unwrap_or_else(|| interpolate_at(&known, i as f64))))
            .collect();
        Ok(Self {
            name: self.name.clone(),
            start: self.start,
            values: filled,
        })
    }

    /// Applies `f` to every present value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            name: self.name.clone(),
            start: self.start,
            values: self.values.iter().map(|v| v.map(&f)).collect(),
        }
    }
}

/// Piecewise-linear interpolation over sorted knots, flat outside them.
fn interpolate_at(knots: &[(f64, f64)], x: f64) -> f64 {
    let (x_first, y_first) = knots[0];
    let (x_last, y_last) = knots[knots.len() - 1];
    if x <= x_first {
        return y_first;
    }
    if x >= x_last {
        return y_last;
    }
    let upper = knots.partition_point(|(k, _)| *k <= x);
    let (x0, y0) = knots[upper - 1];
    let (x1, y1) = knots[upper];
    if x == x0 {
        return y0;
    }
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Trims every series to the common date range, preserving order.
pub fn align(series: &[DateIndexedSeries]) -> Result<Vec<DateIndexedSeries>> {
    let first = series.first().ok_or(SeriesError::EmptyIntersection)?;
    let start = series.iter().map(|s| s.start()).max().unwrap_or(first.start);
    let end = series.iter().map(|s| s.end()).min().unwrap_or(first.end());
    if start > end {
        return Err(SeriesError::EmptyIntersection);
    }
    series.iter().map(|s| s.window(start, end)).collect()
}

/// A treated series with its controls and forced-in covariates on one
/// shared calendar.
///
/// Controls and covariates are gap-free: missing values are interpolated
/// when the panel is built, since regression design matrices need
/// complete columns. The treated series keeps its missing markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPanel {
    pub treated: DateIndexedSeries,
    pub controls: Vec<DateIndexedSeries>,
    pub covariates: Vec<DateIndexedSeries>,
}

impl SeriesPanel {
    pub fn new(
        treated: DateIndexedSeries,
        controls: Vec<DateIndexedSeries>,
        covariates: Vec<DateIndexedSeries>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &controls {
            if !seen.insert(c.name().to_string()) {
                return Err(SeriesError::DuplicateName(c.name().to_string()));
            }
        }
        let n_controls = controls.len();
        let mut all = Vec::with_capacity(1 + controls.len() + covariates.len());
        all.push(treated);
        all.extend(controls);
        all.extend(covariates);
        let mut aligned = align(&all)?.into_iter();
        let treated = aligned.next().expect("treated present");
        let mut fill = |s: DateIndexedSeries| -> Result<DateIndexedSeries> {
            if !s.is_complete() {
                log::warn!(
                    "series `{}` has {} missing days; filling by linear interpolation",
                    s.name(),
                    s.len() - s.present_count()
                );
            }
            s.fill_missing()
        };
        let controls = aligned
            .by_ref()
            .take(n_controls)
            .map(&mut fill)
            .collect::<Result<Vec<_>>>()?;
        let covariates = aligned.map(&mut fill).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            treated,
            controls,
            covariates,
        })
    }

    pub fn start(&self) -> NaiveDate {
        self.treated.start()
    }

    pub fn end(&self) -> NaiveDate {
        self.treated.end()
    }

    pub fn len(&self) -> usize {
        self.treated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treated.is_empty()
    }

    pub fn control_names(&self) -> Vec<&str> {
        self.controls.iter().map(|c| c.name()).collect()
    }

    /// Regressor columns: controls first, then covariates.
    pub fn regressors(&self) -> impl Iterator<Item = &DateIndexedSeries> {
        self.controls.iter().chain(self.covariates.iter())
    }

    /// The same panel restricted to positions `[from, from + len)`.
    pub fn slice(&self, from: usize, len: usize) -> Result<Self> {
        Ok(Self {
            treated: self.treated.slice(from, len)?,
            controls: self
                .controls
                .iter()
                .map(|s| s.slice(from, len))
                .collect::<Result<_>>()?,
            covariates: self
                .covariates
                .iter()
                .map(|s| s.slice(from, len))
                .collect::<Result<_>>()?,
        })
    }

    /// Splits into the days before `date` and the days from `date` on.
    pub fn split_at(&self, date: NaiveDate) -> Result<(Self, Self)> {
        let at = self
            .treated
            .index_of(date)
            .filter(|&i| i > 0)
            .ok_or_else(|| SeriesError::OutOfRange {
                name: self.treated.name().to_string(),
                date,
            })?;
        Ok((self.slice(0, at)?, self.slice(at, self.len() - at)?))
    }

    /// Keeps only the named controls, in the given order.
    pub fn with_controls(&self, names: &[String]) -> Self {
        let controls = names
            .iter()
            .filter_map(|n| self.controls.iter().find(|c| c.name() == n).cloned())
            .collect();
        Self {
            treated: self.treated.clone(),
            controls,
            covariates: self.covariates.clone(),
        }
    }
}

/// Location and scale used to standardize a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizeParams {
    pub mean: f64,
    pub sd: f64,
    /// The series had zero variance; standardized values are all zero.
    pub degenerate: bool,
}

impl StandardizeParams {
    pub fn identity() -> Self {
        Self {
            mean: 0.0,
            sd: 1.0,
            degenerate: false,
        }
    }

    pub fn apply(&self, x: f64) -> f64 {
        if self.degenerate {
            0.0
        } else {
            (x - self.mean) / self.sd
        }
    }

    pub fn invert(&self, z: f64) -> f64 {
        self.mean + self.sd * z
    }

    /// Scale used to map standardized quantities back; 0 for a degenerate series.
    pub fn scale(&self) -> f64 {
        self.sd
    }
}

/// Sample mean and standard deviation (n - 1 denominator) of `values`.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let sd = if values.len() > 1 {
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Centers and scales present values to mean 0, sd 1.
pub fn standardize(s: &DateIndexedSeries) -> Result<(DateIndexedSeries, StandardizeParams)> {
    let present: Vec<f64> = s.present().collect();
    if present.len() < 2 {
        return Err(SeriesError::TooShort {
            name: s.name().to_string(),
            present: present.len(),
            needed: 2,
        });
    }
    let (mean, sd) = mean_sd(&present);
    // Relative cutoff so that float noise in a constant series reads as zero.
    let degenerate = sd <= 1e-14 * mean.abs().max(1.0);
    let params = StandardizeParams {
        mean,
        sd: if degenerate { 0.0 } else { sd },
        degenerate,
    };
    Ok((s.map(|x| params.apply(x)), params))
}

pub fn destandardize(s: &DateIndexedSeries, params: &StandardizeParams) -> DateIndexedSeries {
    s.map(|z| params.invert(z))
}

/// Daily series over `start..=end` linearly interpolated from sparse
/// observations (e.g. a quarterly covariate), flat outside the knots.
pub fn interpolate_to_daily(
    name: impl Into<String>,
    points: &[(NaiveDate, f64)],
    start: NaiveDate,
    end: NaiveDate,
) -> Result<DateIndexedSeries> {
    if points.is_empty() {
        return Err(SeriesError::NoPoints);
    }
    if start > end {
        return Err(SeriesError::EmptyCalendar { start, end });
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(SeriesError::UnsortedPoints(w[1].0));
        }
    }
    let knots: Vec<(f64, f64)> = points
        .iter()
        .map(|(d, v)| ((*d - start).num_days() as f64, *v))
        .collect();
    let n = (end - start).num_days() as usize + 1;
    DateIndexedSeries::from_values(name, start, (0..n).map(|i| interpolate_at(&knots, i as f64)))
}

/// A named holiday and the explicit dates it falls on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Holiday {
    pub name: String,
    pub dates: Vec<NaiveDate>,
}

const MONTH_NAMES: [&str; 12] = [
    "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
];

/// Month-of-year dummies (January is the baseline, so 11 of them) followed
/// by one 0/1 indicator per holiday. Holiday dates outside the calendar are
/// ignored.
pub fn seasonal_regressors(
    start: NaiveDate,
    end: NaiveDate,
    holidays: &[Holiday],
) -> Result<Vec<DateIndexedSeries>> {
    if start > end {
        return Err(SeriesError::EmptyCalendar { start, end });
    }
    let n = (end - start).num_days() as usize + 1;
    let dates: Vec<NaiveDate> = (0..n).map(|i| start + Duration::days(i as i64)).collect();
    let mut out = Vec::with_capacity(11 + holidays.len());
    for month in 2..=12u32 {
        let values = dates
            .iter()
            .map(|d| if d.month() == month { 1.0 } else { 0.0 });
        out.push(DateIndexedSeries::from_values(
            format!("month_{}", MONTH_NAMES[month as usize - 1]),
            start,
            values,
        )?);
    }
    for holiday in holidays {
        let on: HashSet<NaiveDate> = holiday.dates.iter().copied().collect();
        let values = dates
            .iter()
            .map(|d| if on.contains(d) { 1.0 } else { 0.0 });
        out.push(DateIndexedSeries::from_values(
            format!("holiday_{}", holiday.name),
            start,
            values,
        )?);
    }
    Ok(out)
}

/// Writes series sharing one calendar in the CSV series format: a `date`
/// column in YYYY-MM-DD then one column per series, empty cell = missing.
pub fn write_csv<W: Write>(mut w: W, series: &[&DateIndexedSeries]) -> io::Result<()> {
    let Some(first) = series.first() else {
        return writeln!(w, "date");
    };
    if series
        .iter()
        .any(|s| s.start() != first.start() || s.len() != first.len())
    {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "series must share one calendar",
        ));
    }
    write!(w, "date")?;
    for s in series {
        write!(w, ",{}", csv_field(s.name()))?;
    }
    writeln!(w)?;
    for (i, date) in first.dates().enumerate() {
        write!(w, "{}", date.format("%Y-%m-%d"))?;
        for s in series {
            match s.values()[i] {
                Some(v) => write!(w, ",{v}")?,
                None => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl SeriesPanel {
    /// Writes treated, controls and covariates as one CSV document.
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let all: Vec<&DateIndexedSeries> = std::iter::once(&self.treated)
            .chain(self.regressors())
            .collect();
        write_csv(w, &all)
    }
}
