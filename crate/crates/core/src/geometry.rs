//! Sites, observation sets, and regular prediction grids.

use crate::error::{Error, Result};

/// Two sites closer than this are treated as duplicates.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// A point in the plane. Coordinates are planar Euclidean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    x: f64,
    y: f64,
}

impl Site {
    /// Creates a site, rejecting NaN or infinite coordinates.
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::NonFinite {
                what: "x coordinate",
                value: x,
            });
        }
        if !y.is_finite() {
            return Err(Error::NonFinite {
                what: "y coordinate",
                value: y,
            });
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Euclidean distance to another site.
    pub fn distance_to(&self, other: &Site) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx.hypot(dy)
    }
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Euclidean distance between two sites.
pub fn distance(a: &Site, b: &Site) -> f64 {
    a.distance_to(b)
}

/// An immutable set of sites with one scalar value each.
///
/// Duplicate sites (closer than [`DUPLICATE_TOLERANCE`]) are rejected at
/// construction because they make both kriging and spline systems singular;
/// [`Observations::new_averaging_duplicates`] collapses them instead.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    sites: Vec<Site>,
    values: Vec<f64>,
}

impl Observations {
    /// Builds an observation set, rejecting duplicate sites.
    pub fn new(sites: Vec<Site>, values: Vec<f64>) -> Result<Self> {
        let obs = Self::validated(sites, values)?;
        if let Some((i, j)) = obs.find_duplicate() {
            return Err(Error::DuplicateSites {
                first: i,
                second: j,
            });
        }
        Ok(obs)
    }

    /// Builds an observation set, collapsing duplicate sites to a single site
    /// carrying the mean of their values.
    #[allow(clippy::needless_range_loop)]
    pub fn new_averaging_duplicates(sites: Vec<Site>, values: Vec<f64>) -> Result<Self> {
        let obs = Self::validated(sites, values)?;
        let n = obs.len();
        let mut group = vec![usize::MAX; n];
        let mut merged_sites = Vec::new();
        let mut sums = Vec::new();
        let mut counts = Vec::new();
        for i in 0..n {
            if group[i] != usize::MAX {
                continue;
            }
            let g = merged_sites.len();
            group[i] = g;
            merged_sites.push(obs.sites[i]);
            sums.push(obs.values[i]);
            counts.push(1usize);
            for j in (i + 1)..n {
                if group[j] == usize::MAX
                    && obs.sites[i].distance_to(&obs.sites[j]) < DUPLICATE_TOLERANCE
                {
                    group[j] = g;
                    sums[g] += obs.values[j];
                    counts[g] += 1;
                }
            }
        }
        let values = sums
            .iter()
            .zip(&counts)
            .map(|(s, c)| s / *c as f64)
            .collect();
        // Merging by the leader site can in principle still leave near-pairs
        // (chains of close sites); re-check through the strict constructor.
        Self::new(merged_sites, values)
    }

    fn validated(sites: Vec<Site>, values: Vec<f64>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::InvalidObservations(
                "at least one observation is required".into(),
            ));
        }
        if sites.len() != values.len() {
            return Err(Error::InvalidObservations(format!(
                "{} sites but {} values",
                sites.len(),
                values.len()
            )));
        }
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "observation value",
                    value: v,
                });
            }
        }
        Ok(Self { sites, values })
    }

    fn find_duplicate(&self) -> Option<(usize, usize)> {
        let n = self.sites.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.sites[i].distance_to(&self.sites[j]) < DUPLICATE_TOLERANCE {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires n >= 1
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn site(&self, i: usize) -> &Site {
        &self.sites[i]
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Returns a copy with the same sites and new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.sites.len() {
            return Err(Error::InvalidObservations(format!(
                "{} sites but {} values",
                self.sites.len(),
                values.len()
            )));
        }
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "observation value",
                    value: v,
                });
            }
        }
        Ok(Self {
            sites: self.sites.clone(),
            values,
        })
    }

    /// Returns a copy with observation `index` removed.
    pub fn without(&self, index: usize) -> Result<Self> {
        if self.len() < 2 {
            return Err(Error::InvalidObservations(
                "cannot delete from a single observation".into(),
            ));
        }
        if index >= self.len() {
            return Err(Error::InvalidParameter(format!(
                "index {index} out of bounds for {} observations",
                self.len()
            )));
        }
        let mut sites = self.sites.clone();
        let mut values = self.values.clone();
        sites.remove(index);
        values.remove(index);
        Ok(Self { sites, values })
    }

    /// Max minus min of the values.
    pub fn value_range(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }
}

/// A regular rectangular grid of prediction sites.
///
/// `x_min == x_max` is allowed only when `nx == 1` (and likewise for `y`);
/// a one-point axis uses its minimum coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        for (what, v) in [
            ("x_min", x_min),
            ("x_max", x_max),
            ("y_min", y_min),
            ("y_max", y_max),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite { what, value: v });
            }
        }
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter(
                "grid needs nx >= 1 and ny >= 1".into(),
            ));
        }
        if x_min > x_max || (nx > 1 && x_min >= x_max) {
            return Err(Error::InvalidParameter(format!(
                "grid x bounds [{x_min}, {x_max}] invalid for nx = {nx}"
            )));
        }
        if y_min > y_max || (ny > 1 && y_min >= y_max) {
            return Err(Error::InvalidParameter(format!(
                "grid y bounds [{y_min}, {y_max}] invalid for ny = {ny}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        })
    }

    /// Number of grid sites (`nx * ny`).
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid sites in row-major order (x varies fastest), corners included.
    pub fn sites(&self) -> Vec<Site> {
        let xs = axis_coords(self.x_min, self.x_max, self.nx);
        let ys = axis_coords(self.y_min, self.y_max, self.ny);
        let mut out = Vec::with_capacity(self.len());
        for &y in &ys {
            for &x in &xs {
                // Coordinates are finite by the grid invariants.
                out.push(Site { x, y });
            }
        }
        out
    }
}

fn axis_coords(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect()
}

/// Grid sites in row-major order.
pub fn grid_sites(grid: &Grid) -> Vec<Site> {
    grid.sites()
}
