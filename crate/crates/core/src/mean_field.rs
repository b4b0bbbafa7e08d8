//! Seasonal mean field: local harmonic regression at global grid points and
//! seasonal adjustment of temperatures and paired differences.
//!
//! At each grid cell the design has 18 terms: an intercept, the five first-
//! and second-order spatial terms centered on the cell, and six annual
//! harmonics in sine and cosine. Because the spatial terms are centered,
//! evaluation at the cell reduces to the intercept plus harmonics, so the
//! seasonal correction of a pair depends only on the two observation times.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::float::FloatExt as _;
use crate::geodesy::{lon_delta, GeoPoint};
use crate::profiles::Level;

pub const N_COEF: usize = 18;
pub const N_HARMONICS: usize = 6;
/// Year length used by the harmonic terms.
pub const HARMONIC_YEAR_DAYS: f64 = 365.25;

pub const N_LAT_CELLS: usize = 180;
pub const N_LON_CELLS: usize = 360;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum MeanFieldError {
    #[error("insufficient data: {n} observations, {needed} required")]
    InsufficientData { n: usize, needed: usize },
    #[error("ill-conditioned local design")]
    IllConditioned,
    #[error("no valid grid cell near the query point")]
    NoValidCell,
}

/// Index of a 1-degree grid cell; centers at lat = -89.5 + i, lon = -179.5 + j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellIndex {
    pub lat_idx: u16,
    pub lon_idx: u16,
}

impl CellIndex {
    pub fn center(&self) -> GeoPoint {
        GeoPoint::new(
            -179.5 + self.lon_idx as f64,
            -89.5 + self.lat_idx as f64,
        )
        .expect("cell centers are valid coordinates")
    }
}

/// Nearest grid cell to a location.
pub fn nearest_cell(loc: &GeoPoint) -> CellIndex {
    let lat_idx = ((loc.lat() + 90.0).floor() as i64).clamp(0, N_LAT_CELLS as i64 - 1) as u16;
    let lon_idx = ((loc.lon() + 180.0).floor() as i64).clamp(0, N_LON_CELLS as i64 - 1) as u16;
    CellIndex { lat_idx, lon_idx }
}

/// One observation inside a local window.
#[derive(Debug, Clone, Copy)]
pub struct MeanFieldObs {
    pub loc: GeoPoint,
    /// Fractional day of year.
    pub yearday: f64,
    pub value: f64,
}

/// A fitted local regression at one cell and level.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFit {
    /// beta0; dlat, dlon, dlat^2, dlon^2, dlat*dlon; gamma_1..6; delta_1..6.
    pub coef: [f64; N_COEF],
    pub n_obs: usize,
    /// Crude conditioning estimate: ratio of extreme Cholesky pivots.
    pub condition: f64,
}

/// Design row for an observation displaced (dlat, dlon) from the cell center
/// at day-of-year t.
pub fn design_row(dlat: f64, dlon: f64, t: f64) -> [f64; N_COEF] {
    let mut row = [0.0; N_COEF];
    row[0] = 1.0;
    row[1] = dlat;
    row[2] = dlon;
    row[3] = dlat * dlat;
    row[4] = dlon * dlon;
    row[5] = dlat * dlon;
    for k in 1..=N_HARMONICS {
        let arg = 2.0 * core::f64::consts::PI * k as f64 * t / HARMONIC_YEAR_DAYS;
        row[5 + k] = arg.sin();
        row[11 + k] = arg.cos();
    }
    row
}

/// Ordinary least squares over the 18-term local design.
///
/// Observations are sorted internally so the fit does not depend on input
/// order. Spatial terms are centered at `center`.
pub fn fit_local_regression(
    center: &GeoPoint,
    obs: &[MeanFieldObs],
    n_min: usize,
) -> Result<CellFit, MeanFieldError> {
    if obs.len() < n_min.max(N_COEF) {
        return Err(MeanFieldError::InsufficientData {
            n: obs.len(),
            needed: n_min.max(N_COEF),
        });
    }
    let mut order: Vec<usize> = (0..obs.len()).collect();
    order.sort_by(|&a, &b| {
        let ka = (
            obs[a].yearday.to_bits(),
            obs[a].loc.lon().to_bits(),
            obs[a].loc.lat().to_bits(),
            obs[a].value.to_bits(),
        );
        let kb = (
            obs[b].yearday.to_bits(),
            obs[b].loc.lon().to_bits(),
            obs[b].loc.lat().to_bits(),
            obs[b].value.to_bits(),
        );
        ka.cmp(&kb)
    });

    let mut xtx = DMatrix::<f64>::zeros(N_COEF, N_COEF);
    let mut xty = DVector::<f64>::zeros(N_COEF);
    for &i in &order {
        let o = &obs[i];
        let row = design_row(
            o.loc.lat() - center.lat(),
            lon_delta(o.loc.lon(), center.lon()),
            o.yearday,
        );
        for a in 0..N_COEF {
            for b in a..N_COEF {
                xtx[(a, b)] += row[a] * row[b];
            }
            xty[a] += row[a] * o.value;
        }
    }
    for a in 0..N_COEF {
        for b in 0..a {
            xtx[(a, b)] = xtx[(b, a)];
        }
    }

    let chol = xtx.clone().cholesky().ok_or(MeanFieldError::IllConditioned)?;
    let pivots = chol.l_dirty();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..N_COEF {
        let p = pivots[(k, k)];
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let condition = (hi / lo) * (hi / lo);
    if !condition.is_finite() || condition > 1e14 {
        return Err(MeanFieldError::IllConditioned);
    }
    let coef_v = chol.solve(&xty);
    let mut coef = [0.0; N_COEF];
    for (c, v) in coef.iter_mut().zip(coef_v.iter()) {
        *c = *v;
    }
    Ok(CellFit {
        coef,
        n_obs: obs.len(),
        condition,
    })
}

/// The fitted mean field: per-cell, per-level coefficient vectors.
///
/// Cells that were never fitted, or whose fit failed, are invalid; lookups
/// fall back to the nearest valid cell through an expanding ring search.
#[derive(Debug, Clone, Default)]
pub struct MeanFieldModel {
    cells: BTreeMap<CellIndex, BTreeMap<usize, CellFit>>,
    /// Ring-search cap, in cells.
    pub max_ring: u16,
}

impl MeanFieldModel {
    pub fn new(max_ring: u16) -> Self {
        Self {
            cells: BTreeMap::new(),
            max_ring,
        }
    }

    pub fn insert(&mut self, cell: CellIndex, level: Level, fit: CellFit) {
        self.cells.entry(cell).or_default().insert(level.index(), fit);
    }

    pub fn get(&self, cell: &CellIndex, level: Level) -> Option<&CellFit> {
        self.cells.get(cell).and_then(|m| m.get(&level.index()))
    }

    pub fn cells(&self) -> impl Iterator<Item = (&CellIndex, &BTreeMap<usize, CellFit>)> {
        self.cells.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Nearest valid cell for a level: the query's own cell if valid, else an
    /// expanding Chebyshev-ring search (longitude wraps), nearer centers
    /// first within a ring.
    pub fn resolve_cell(&self, loc: &GeoPoint, level: Level) -> Result<CellIndex, MeanFieldError> {
        let home = nearest_cell(loc);
        if self.get(&home, level).is_some() {
            return Ok(home);
        }
        for r in 1..=self.max_ring as i32 {
            let mut best: Option<(f64, CellIndex)> = None;
            let mut consider = |lat_i: i32, lon_i: i32| {
                if !(0..N_LAT_CELLS as i32).contains(&lat_i) {
                    return;
                }
                let lon_i = lon_i.rem_euclid(N_LON_CELLS as i32);
                let cell = CellIndex {
                    lat_idx: lat_i as u16,
                    lon_idx: lon_i as u16,
                };
                if self.get(&cell, level).is_none() {
                    return;
                }
                let c = cell.center();
                let dlat = c.lat() - loc.lat();
                let dlon = lon_delta(c.lon(), loc.lon());
                let d2 = dlat * dlat + dlon * dlon;
                let better = match &best {
                    None => true,
                    Some((bd, bc)) => d2 < *bd || (d2 == *bd && cell < *bc),
                };
                if better {
                    best = Some((d2, cell));
                }
            };
            let (lat0, lon0) = (home.lat_idx as i32, home.lon_idx as i32);
            for dx in -r..=r {
                consider(lat0 - r, lon0 + dx);
                consider(lat0 + r, lon0 + dx);
            }
            for dy in -r + 1..r {
                consider(lat0 + dy, lon0 - r);
                consider(lat0 + dy, lon0 + r);
            }
            if let Some((_, cell)) = best {
                return Ok(cell);
            }
        }
        Err(MeanFieldError::NoValidCell)
    }

    /// Mean-field value at a cell center: intercept plus harmonics at `t`
    /// (day of year). The spatial terms vanish there by construction and are
    /// not consulted.
    pub fn evaluate_at_cell(&self, cell: &CellIndex, level: Level, t: f64) -> Option<f64> {
        let fit = self.get(cell, level)?;
        let mut m = fit.coef[0];
        for k in 1..=N_HARMONICS {
            let arg = 2.0 * core::f64::consts::PI * k as f64 * t / HARMONIC_YEAR_DAYS;
            m += fit.coef[5 + k] * arg.sin() + fit.coef[11 + k] * arg.cos();
        }
        Some(m)
    }

    /// Seasonally adjusted temperature: `T - m(x', t)` with `x'` the nearest
    /// valid cell to `loc`.
    pub fn seasonal_adjust(
        &self,
        temp: f64,
        loc: &GeoPoint,
        t: f64,
        level: Level,
    ) -> Result<f64, MeanFieldError> {
        let cell = self.resolve_cell(loc, level)?;
        let m = self
            .evaluate_at_cell(&cell, level, t)
            .expect("resolved cell is valid");
        Ok(temp - m)
    }

    /// Seasonally adjusted difference for a pair sharing one location:
    /// `(T_signal - T_baseline) - (m(x', t_signal) - m(x', t_baseline))`,
    /// with the same grid cell used for both members.
    pub fn adjusted_difference(
        &self,
        temp_baseline: f64,
        temp_signal: f64,
        loc: &GeoPoint,
        t_baseline: f64,
        t_signal: f64,
        level: Level,
    ) -> Result<f64, MeanFieldError> {
        let cell = self.resolve_cell(loc, level)?;
        let m_b = self
            .evaluate_at_cell(&cell, level, t_baseline)
            .expect("resolved cell is valid");
        let m_s = self
            .evaluate_at_cell(&cell, level, t_signal)
            .expect("resolved cell is valid");
        Ok((temp_signal - temp_baseline) - (m_s - m_b))
    }
}
