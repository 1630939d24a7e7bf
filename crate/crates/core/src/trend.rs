//! Median-polish detrending of a nonstationary field.
//!
//! Scattered observations are binned into a two-way table (equal-width bins
//! over the bounding box, cell means as values), the table is decomposed into
//! overall + row + column effects by alternating median sweeps, and the
//! resulting trend surface is extended to arbitrary sites by piecewise-linear
//! interpolation of the effects with flat extrapolation.

use crate::error::{Error, Result};
use crate::geometry::{Observations, Site};

/// Default convergence tolerance for median polish.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Default sweep limit for median polish.
pub const DEFAULT_MAX_ITER: usize = 50;

/// Default table shape for `n` observations: `ceil(sqrt(n/2))` per side,
/// clamped to at least 2.
pub fn default_table_shape(n: usize) -> (usize, usize) {
    let side = ((n as f64 / 2.0).sqrt().ceil() as usize).max(2);
    (side, side)
}

/// A two-way table of cell means with the mean site coordinates per row and
/// column. Missing cells are allowed as long as every row and column has at
/// least one occupied cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayTable {
    cells: Vec<Vec<Option<f64>>>,
    row_centers: Vec<f64>,
    col_centers: Vec<f64>,
}

impl TwoWayTable {
    pub fn new(
        cells: Vec<Vec<Option<f64>>>,
        row_centers: Vec<f64>,
        col_centers: Vec<f64>,
    ) -> Result<Self> {
        let rows = cells.len();
        if rows < 2 {
            return Err(Error::InvalidParameter(
                "two-way table needs at least 2 rows".into(),
            ));
        }
        let cols = cells[0].len();
        if cols < 2 {
            return Err(Error::InvalidParameter(
                "two-way table needs at least 2 columns".into(),
            ));
        }
        if cells.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidParameter("ragged table".into()));
        }
        if row_centers.len() != rows || col_centers.len() != cols {
            return Err(Error::InvalidParameter(
                "center lists must match the table shape".into(),
            ));
        }
        for (i, row) in cells.iter().enumerate() {
            if row.iter().all(Option::is_none) {
                return Err(Error::EmptyRowOrColumn {
                    axis: "row",
                    index: i,
                });
            }
        }
        for j in 0..cols {
            if cells.iter().all(|row| row[j].is_none()) {
                return Err(Error::EmptyRowOrColumn {
                    axis: "column",
                    index: j,
                });
            }
        }
        Ok(Self {
            cells,
            row_centers,
            col_centers,
        })
    }

    pub fn rows(&self) -> usize {
        self.cells.len()
    }

    pub fn cols(&self) -> usize {
        self.cells[0].len()
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<f64> {
        self.cells[i][j]
    }

    pub fn row_centers(&self) -> &[f64] {
        &self.row_centers
    }

    pub fn col_centers(&self) -> &[f64] {
        &self.col_centers
    }
}

/// Bins scattered observations into a `rows x cols` table of cell means.
///
/// Bins are equal-width over the bounding box of the sites; rows follow `y`,
/// columns follow `x`. Returns the table and the (row, col) cell assigned to
/// each observation. A row or column of bins receiving no observation is an
/// error; rebinning with fewer rows/cols is the caller's remedy.
pub fn bin_to_table(
    obs: &Observations,
    rows: usize,
    cols: usize,
) -> Result<(TwoWayTable, Vec<(usize, usize)>)> {
    if rows < 2 || cols < 2 {
        return Err(Error::InvalidParameter(
            "binning needs rows >= 2 and cols >= 2".into(),
        ));
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in obs.sites() {
        x_min = x_min.min(s.x());
        x_max = x_max.max(s.x());
        y_min = y_min.min(s.y());
        y_max = y_max.max(s.y());
    }
    let x_span = x_max - x_min;
    let y_span = y_max - y_min;
    if x_span <= 0.0 {
        return Err(Error::EmptyRowOrColumn {
            axis: "column",
            index: 1,
        });
    }
    if y_span <= 0.0 {
        return Err(Error::EmptyRowOrColumn {
            axis: "row",
            index: 1,
        });
    }

    let bin_index = |v: f64, lo: f64, span: f64, n: usize| -> usize {
        let idx = ((v - lo) / span * n as f64).floor() as usize;
        idx.min(n - 1)
    };

    let mut sums = vec![vec![0.0f64; cols]; rows];
    let mut counts = vec![vec![0usize; cols]; rows];
    let mut x_sums = vec![0.0f64; cols];
    let mut x_counts = vec![0usize; cols];
    let mut y_sums = vec![0.0f64; rows];
    let mut y_counts = vec![0usize; rows];
    let mut assignment = Vec::with_capacity(obs.len());
    for k in 0..obs.len() {
        let s = obs.site(k);
        let i = bin_index(s.y(), y_min, y_span, rows);
        let j = bin_index(s.x(), x_min, x_span, cols);
        sums[i][j] += obs.value(k);
        counts[i][j] += 1;
        x_sums[j] += s.x();
        x_counts[j] += 1;
        y_sums[i] += s.y();
        y_counts[i] += 1;
        assignment.push((i, j));
    }

    for (i, &c) in y_counts.iter().enumerate() {
        if c == 0 {
            return Err(Error::EmptyRowOrColumn {
                axis: "row",
                index: i,
            });
        }
    }
    for (j, &c) in x_counts.iter().enumerate() {
        if c == 0 {
            return Err(Error::EmptyRowOrColumn {
                axis: "column",
                index: j,
            });
        }
    }

    let cells = (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| {
                    if counts[i][j] > 0 {
                        Some(sums[i][j] / counts[i][j] as f64)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    let row_centers = (0..rows).map(|i| y_sums[i] / y_counts[i] as f64).collect();
    let col_centers = (0..cols).map(|j| x_sums[j] / x_counts[j] as f64).collect();
    let table = TwoWayTable::new(cells, row_centers, col_centers)?;
    Ok((table, assignment))
}

/// Decomposition of a two-way table into overall + row + column effects plus
/// residuals: `cell(i, j) = overall + row_effects[i] + col_effects[j] +
/// residuals[i][j]` for every occupied cell.
#[derive(Debug, Clone)]
pub struct MedianPolishFit {
    pub overall: f64,
    pub row_effects: Vec<f64>,
    pub col_effects: Vec<f64>,
    pub residuals: Vec<Vec<Option<f64>>>,
    row_centers: Vec<f64>,
    col_centers: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn median_of(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = values.len();
    if n.is_multiple_of(2) {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    } else {
        values[n / 2]
    }
}

/// Alternating row/column median sweeps (rows first). After each half-sweep
/// the median of the opposite effect vector is absorbed into the overall
/// term. Stops when the largest absolute median removed in a full sweep is
/// at most `tol`, or after `max_iter` sweeps with `converged = false`.
pub fn median_polish(table: &TwoWayTable, tol: f64, max_iter: usize) -> Result<MedianPolishFit> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
    }
    let rows = table.rows();
    let cols = table.cols();
    let mut resid: Vec<Vec<Option<f64>>> = (0..rows)
        .map(|i| (0..cols).map(|j| table.cell(i, j)).collect())
        .collect();
    let mut overall = 0.0f64;
    let mut row_effects = vec![0.0f64; rows];
    let mut col_effects = vec![0.0f64; cols];
    let mut iterations = 0;
    let mut converged = false;
    let mut scratch = Vec::with_capacity(rows.max(cols));

    while iterations < max_iter {
        iterations += 1;
        let mut largest = 0.0f64;

        // Row sweep.
        for i in 0..rows {
            scratch.clear();
            scratch.extend(resid[i].iter().flatten());
            let m = median_of(&mut scratch);
            largest = largest.max(m.abs());
            for cell in resid[i].iter_mut().flatten() {
                *cell -= m;
            }
            row_effects[i] += m;
        }
        scratch.clear();
        scratch.extend_from_slice(&col_effects);
        let mc = median_of(&mut scratch);
        for c in col_effects.iter_mut() {
            *c -= mc;
        }
        overall += mc;

        // Column sweep.
        for j in 0..cols {
            scratch.clear();
            scratch.extend((0..rows).filter_map(|i| resid[i][j]));
            let m = median_of(&mut scratch);
            largest = largest.max(m.abs());
            for row in resid.iter_mut() {
                if let Some(cell) = row[j].as_mut() {
                    *cell -= m;
                }
            }
            col_effects[j] += m;
        }
        scratch.clear();
        scratch.extend_from_slice(&row_effects);
        let mr = median_of(&mut scratch);
        for r in row_effects.iter_mut() {
            *r -= mr;
        }
        overall += mr;

        if largest <= tol {
            converged = true;
            break;
        }
    }

    Ok(MedianPolishFit {
        overall,
        row_effects,
        col_effects,
        residuals: resid,
        row_centers: table.row_centers().to_vec(),
        col_centers: table.col_centers().to_vec(),
        iterations,
        converged,
    })
}

/// Piecewise-linear interpolation with flat extrapolation; knots must be
/// strictly increasing.
fn interp_clamped(knots: &[f64], values: &[f64], x: f64) -> f64 {
    debug_assert_eq!(knots.len(), values.len());
    if x <= knots[0] {
        return values[0];
    }
    if x >= knots[knots.len() - 1] {
        return values[values.len() - 1];
    }
    let mut hi = 1;
    while knots[hi] < x {
        hi += 1;
    }
    let lo = hi - 1;
    let t = (x - knots[lo]) / (knots[hi] - knots[lo]);
    values[lo] + t * (values[hi] - values[lo])
}

impl MedianPolishFit {
    pub fn row_centers(&self) -> &[f64] {
        &self.row_centers
    }

    pub fn col_centers(&self) -> &[f64] {
        &self.col_centers
    }

    /// Trend surface at a site: overall plus the row effect interpolated in
    /// `y` and the column effect interpolated in `x`, both clamped flat
    /// outside the table.
    pub fn trend_at(&self, s: &Site) -> f64 {
        self.overall
            + interp_clamped(&self.row_centers, &self.row_effects, s.y())
            + interp_clamped(&self.col_centers, &self.col_effects, s.x())
    }
}

/// Subtracts the fitted trend from every observation; sites are unchanged.
pub fn detrend(obs: &Observations, fit: &MedianPolishFit) -> Result<Observations> {
    let values = (0..obs.len())
        .map(|k| obs.value(k) - fit.trend_at(obs.site(k)))
        .collect();
    obs.with_values(values)
}

/// Adds the fitted trend back to a predicted residual.
pub fn retrend(predicted_residual: f64, s: &Site, fit: &MedianPolishFit) -> f64 {
    predicted_residual + fit.trend_at(s)
}
