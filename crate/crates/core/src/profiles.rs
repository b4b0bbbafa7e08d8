//! Profile ingestion support: monotone cubic (pchip) interpolation onto the
//! 20-level pressure grid, vertical averaging, and the TC / non-TC partition.

use alloc::string::String;
use alloc::vec::Vec;

use crate::calendar::year_and_yearday;
#[allow(unused_imports)]
use crate::float::FloatExt as _;
use crate::geodesy::{lon_delta, GeoPoint, Track};

/// Gridded pressure levels in decibars: 10, 20, ..., 200.
pub const PRESSURE_LEVELS: [f64; 20] = [
    10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 110.0, 120.0, 130.0, 140.0,
    150.0, 160.0, 170.0, 180.0, 190.0, 200.0,
];

pub const N_DEPTH_LEVELS: usize = PRESSURE_LEVELS.len();

/// Number of evaluation points for the trapezoidal vertical average.
pub const VERT_AVG_EVALS: usize = 5000;

/// One of the twenty gridded pressure levels, or the vertically averaged
/// temperature. The statistical analysis runs independently for each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    /// Index into [`PRESSURE_LEVELS`].
    Depth(usize),
    Avg,
}

impl Level {
    pub fn all() -> impl Iterator<Item = Level> {
        (0..N_DEPTH_LEVELS).map(Level::Depth).chain([Level::Avg])
    }

    /// Stable ordinal: depth index for gridded levels, 20 for the average.
    pub fn index(&self) -> usize {
        match self {
            Level::Depth(i) => *i,
            Level::Avg => N_DEPTH_LEVELS,
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        if s.eq_ignore_ascii_case("avg") {
            return Some(Level::Avg);
        }
        let z: f64 = s.parse().ok()?;
        PRESSURE_LEVELS
            .iter()
            .position(|&p| p == z)
            .map(Level::Depth)
    }
}

impl core::fmt::Display for Level {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Level::Depth(i) => write!(f, "{}", PRESSURE_LEVELS[*i] as i64),
            Level::Avg => f.write_str("AVG"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("profile {float_id}/{cycle} has fewer than two samples")]
    TooFewSamples { float_id: String, cycle: u32 },
    #[error("profile {float_id}/{cycle} has non-increasing pressures")]
    NonIncreasingPressure { float_id: String, cycle: u32 },
    #[error("profile {float_id}/{cycle} has a non-finite sample")]
    NonFiniteSample { float_id: String, cycle: u32 },
    #[error(
        "profile {float_id}/{cycle} spans [{lo}, {hi}] dbar, not the [10, 200] gridding range"
    )]
    InsufficientCoverage {
        float_id: String,
        cycle: u32,
        lo: f64,
        hi: f64,
    },
}

/// One raw vertical cast: (pressure, temperature) samples at strictly
/// increasing pressures.
#[derive(Debug, Clone, PartialEq)]
pub struct RawProfile {
    pub float_id: String,
    pub cycle: u32,
    pub loc: GeoPoint,
    /// Fractional days since the epoch.
    pub time: f64,
    samples: Vec<(f64, f64)>,
}

impl RawProfile {
    pub fn new(
        float_id: String,
        cycle: u32,
        loc: GeoPoint,
        time: f64,
        samples: Vec<(f64, f64)>,
    ) -> Result<Self, ProfileError> {
        if samples.len() < 2 {
            return Err(ProfileError::TooFewSamples { float_id, cycle });
        }
        if samples.iter().any(|(p, t)| !p.is_finite() || !t.is_finite()) {
            return Err(ProfileError::NonFiniteSample { float_id, cycle });
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(ProfileError::NonIncreasingPressure { float_id, cycle });
        }
        Ok(Self {
            float_id,
            cycle,
            loc,
            time,
            samples,
        })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }
}

/// A profile reduced to the 20 gridded temperatures plus the vertical
/// average. `is_tc` is set by [`partition_profiles`].
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedProfile {
    pub float_id: String,
    pub cycle: u32,
    pub loc: GeoPoint,
    pub time: f64,
    pub year: i32,
    pub yearday: f64,
    pub temps: [f64; N_DEPTH_LEVELS],
    pub vert_avg: f64,
    pub is_tc: bool,
}

impl GriddedProfile {
    pub fn value(&self, level: Level) -> f64 {
        match level {
            Level::Depth(i) => self.temps[i],
            Level::Avg => self.vert_avg,
        }
    }
}

/// C¹ monotone cubic Hermite interpolant with Fritsch-Carlson slope limiting.
#[derive(Debug, Clone)]
pub struct PchipInterpolant {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl PchipInterpolant {
    pub fn eval(&self, z: f64) -> f64 {
        let n = self.x.len();
        // Interval index with x[i] <= z < x[i+1]; queries at the right
        // endpoint use the last interval.
        let i = match self.x.partition_point(|&v| v <= z) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let t = (z - self.x[i]) / h;
        let t2 = t * t;
        let omt = 1.0 - t;
        let h00 = (1.0 + 2.0 * t) * omt * omt;
        let h10 = t * omt * omt;
        let h01 = t2 * (3.0 - 2.0 * t);
        let h11 = t2 * (t - 1.0);
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

fn pchip_edge_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let mut d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() && del0 != 0.0 || (d != 0.0 && del0 == 0.0) {
        d = 0.0;
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        d = 3.0 * del0;
    }
    d
}

/// Builds the pchip interpolant for a profile, callable on [10, 200].
///
/// Errors with `InsufficientCoverage` when the samples do not span the full
/// gridding range.
pub fn pchip_interpolate(p: &RawProfile) -> Result<PchipInterpolant, ProfileError> {
    let samples = p.samples();
    let lo = samples[0].0;
    let hi = samples[samples.len() - 1].0;
    if lo > PRESSURE_LEVELS[0] || hi < PRESSURE_LEVELS[N_DEPTH_LEVELS - 1] {
        return Err(ProfileError::InsufficientCoverage {
            float_id: p.float_id.clone(),
            cycle: p.cycle,
            lo,
            hi,
        });
    }

    let n = samples.len();
    let x: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

    let mut d = alloc::vec![0.0; n];
    if n == 2 {
        d[0] = delta[0];
        d[1] = delta[0];
    } else {
        for k in 1..n - 1 {
            if delta[k - 1] * delta[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
            }
        }
        d[0] = pchip_edge_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = pchip_edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
    Ok(PchipInterpolant { x, y, d })
}

/// Grids a raw profile: pchip values at z = 10, 20, ..., 200 dbar plus the
/// trapezoidal vertical average over 5000 evaluations, normalized by 190.
pub fn grid_profile(p: &RawProfile) -> Result<GriddedProfile, ProfileError> {
    let interp = pchip_interpolate(p)?;
    let mut temps = [0.0; N_DEPTH_LEVELS];
    for (i, &z) in PRESSURE_LEVELS.iter().enumerate() {
        temps[i] = interp.eval(z);
    }

    let (a, b) = (PRESSURE_LEVELS[0], PRESSURE_LEVELS[N_DEPTH_LEVELS - 1]);
    let m = VERT_AVG_EVALS;
    let h = (b - a) / (m - 1) as f64;
    let mut sum = 0.5 * (interp.eval(a) + interp.eval(b));
    for k in 1..m - 1 {
        sum += interp.eval(a + h * k as f64);
    }
    let vert_avg = sum * h / (b - a);

    let (year, yearday) = year_and_yearday(p.time);
    Ok(GriddedProfile {
        float_id: p.float_id.clone(),
        cycle: p.cycle,
        loc: p.loc,
        time: p.time,
        year,
        yearday,
        temps,
        vert_avg,
        is_tc: false,
    })
}

/// Space-time window that defines a TC profile, tested against track
/// observation vertices. All bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TcWindow {
    pub half_width_deg: f64,
    pub days_before: f64,
    pub days_after: f64,
}

impl Default for TcWindow {
    fn default() -> Self {
        Self {
            half_width_deg: 8.0,
            days_before: 12.0,
            days_after: 30.0,
        }
    }
}

/// Splits profiles into the TC set (within the window of some track vertex)
/// and the non-TC set, setting `is_tc` accordingly.
pub fn partition_profiles(
    profiles: Vec<GriddedProfile>,
    tracks: &[Track],
    window: &TcWindow,
) -> (Vec<GriddedProfile>, Vec<GriddedProfile>) {
    let mut tc = Vec::new();
    let mut non_tc = Vec::new();
    for mut p in profiles {
        let near = tracks.iter().any(|track| {
            let (t0, t1) = track.time_span();
            // The per-vertex time test cannot pass outside this envelope.
            if p.time < t0 - window.days_before || p.time > t1 + window.days_after {
                return false;
            }
            track.vertices().iter().any(|v| {
                lon_delta(p.loc.lon(), v.point.lon()).abs() <= window.half_width_deg
                    && (p.loc.lat() - v.point.lat()).abs() <= window.half_width_deg
                    && p.time >= v.time - window.days_before
                    && p.time <= v.time + window.days_after
            })
        });
        p.is_tc = near;
        if near {
            tc.push(p);
        } else {
            non_tc.push(p);
        }
    }
    (tc, non_tc)
}
