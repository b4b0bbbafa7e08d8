//! Coordinate geometry: great-circle angles, continuous track interpolation,
//! Euclidean projection onto storm tracks, signed cross-track angles, and
//! year-aware time differences.
//!
//! Projections minimize Euclidean distance in raw (lon, lat) degrees over the
//! straight-line interpolated track; the cross-track magnitude is nevertheless
//! the great-circle angle between the query point and its projection.

use alloc::string::String;
use alloc::vec::Vec;

use crate::calendar::{days_in_year, year_and_yearday, yearday};
#[allow(unused_imports)]
use crate::float::FloatExt as _;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeodesyError {
    #[error("invalid coordinates: lon={lon}, lat={lat}")]
    InvalidCoordinates { lon: f64, lat: f64 },
    #[error("track `{0}` needs at least two vertices")]
    TooFewVertices(String),
    #[error("track `{0}` has non-increasing timestamps")]
    NonIncreasingTimes(String),
    #[error("track `{0}` has a negative wind speed")]
    NegativeWind(String),
    #[error("track `{0}` is degenerate: all vertices coincide")]
    DegenerateTrack(String),
}

/// A point on the sphere. Longitude is normalized to [-180, 180) on
/// construction; latitude must lie in [-90, 90].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lon: f64,
    lat: f64,
}

impl GeoPoint {
    pub fn new(lon: f64, lat: f64) -> Result<Self, GeodesyError> {
        if !lon.is_finite() || !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeodesyError::InvalidCoordinates { lon, lat });
        }
        let mut lon = (lon + 180.0).rem_euclid(360.0) - 180.0;
        if lon >= 180.0 {
            // rem_euclid can land on exactly 360 for inputs just below a wrap.
            lon = -180.0;
        }
        Ok(Self { lon, lat })
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }
}

/// Smallest signed longitude difference `a - b`, in [-180, 180).
pub fn lon_delta(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(360.0);
    if d >= 180.0 {
        d -= 360.0;
    }
    d
}

/// Central angle between two points on the sphere, in degrees in [0, 180].
///
/// Haversine form; symmetric in its arguments and exactly zero for
/// coincident (normalized) points.
pub fn great_circle_angle(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlam = (b.lon - a.lon).to_radians();
    let sp = (dphi / 2.0).sin();
    let sl = (dlam / 2.0).sin();
    let h = sp * sp + phi1.cos() * phi2.cos() * sl * sl;
    let h = h.min(1.0);
    (2.0 * h.sqrt().asin()).to_degrees()
}

/// Year-aware difference of two day-of-year values.
///
/// Returns `t_signal - t_proj`, adding the length of the prior year when the
/// raw difference is negative (the new-year wraparound case).
pub fn year_aware_diff(t_signal: f64, t_proj: f64, prior_year_length: f64) -> f64 {
    let diff = t_signal - t_proj;
    if diff < 0.0 {
        diff + prior_year_length
    } else {
        diff
    }
}

/// Signed time-since-passage for a signal timestamp against a projection
/// timestamp, both in fractional days since the epoch.
///
/// The subtraction goes through day-of-year values with the year-aware rule.
/// That rule also maps small negative lags (a profile shortly *before*
/// passage) close to a full year; since every window in the analysis spans a
/// few tens of days, values in the upper half of the year are folded back to
/// their negative counterparts.
pub fn signed_tau(t_signal: f64, t_proj: f64) -> f64 {
    let (year_s, yd_s) = year_and_yearday(t_signal);
    let yd_p = yearday(t_proj);
    let prior = days_in_year(year_s - 1);
    let ya = year_aware_diff(yd_s, yd_p, prior);
    if ya > prior / 2.0 {
        ya - prior
    } else {
        ya
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basin {
    NA,
    WP,
    EP,
    NI,
    SH,
}

impl Basin {
    pub fn as_str(&self) -> &'static str {
        match self {
            Basin::NA => "NA",
            Basin::WP => "WP",
            Basin::EP => "EP",
            Basin::NI => "NI",
            Basin::SH => "SH",
        }
    }

    pub fn parse(s: &str) -> Option<Basin> {
        match s {
            "NA" => Some(Basin::NA),
            "WP" => Some(Basin::WP),
            "EP" => Some(Basin::EP),
            "NI" => Some(Basin::NI),
            "SH" => Some(Basin::SH),
            _ => None,
        }
    }
}

impl core::fmt::Display for Basin {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackVertex {
    pub point: GeoPoint,
    /// Fractional days since the epoch.
    pub time: f64,
    /// Sustained wind in knots.
    pub wind: f64,
}

/// A time-stamped storm-track polyline, interpolated linearly between
/// six-hourly best-track vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: String,
    pub basin: Basin,
    vertices: Vec<TrackVertex>,
}

impl Track {
    pub fn new(id: String, basin: Basin, vertices: Vec<TrackVertex>) -> Result<Self, GeodesyError> {
        if vertices.len() < 2 {
            return Err(GeodesyError::TooFewVertices(id));
        }
        for w in vertices.windows(2) {
            if w[1].time <= w[0].time {
                return Err(GeodesyError::NonIncreasingTimes(id));
            }
        }
        if vertices.iter().any(|v| v.wind < 0.0) {
            return Err(GeodesyError::NegativeWind(id));
        }
        Ok(Self { id, basin, vertices })
    }

    pub fn vertices(&self) -> &[TrackVertex] {
        &self.vertices
    }

    pub fn time_span(&self) -> (f64, f64) {
        (
            self.vertices[0].time,
            self.vertices[self.vertices.len() - 1].time,
        )
    }

    /// Vertex longitudes unwrapped to a continuous frame, plus the frame
    /// center used to localize query points.
    fn unwrapped_lons(&self) -> (Vec<f64>, f64) {
        let mut lons = Vec::with_capacity(self.vertices.len());
        let mut prev = self.vertices[0].point.lon;
        lons.push(prev);
        for v in &self.vertices[1..] {
            let next = prev + lon_delta(v.point.lon, prev);
            lons.push(next);
            prev = next;
        }
        let center = lons.iter().sum::<f64>() / lons.len() as f64;
        (lons, center)
    }
}

/// Result of projecting a profile location (and its observation time) onto a
/// track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackProjection {
    /// Nearest point on the interpolated track in the Euclidean (lon, lat)
    /// sense.
    pub proj: GeoPoint,
    /// Time at which the storm was at `proj`, in fractional days.
    pub t_proj: f64,
    /// Signed cross-track angle in degrees; positive right of the storm's
    /// forward direction.
    pub d: f64,
    /// Days since passage, year-aware and signed.
    pub tau: f64,
    pub segment_index: usize,
    pub wind_at_proj: f64,
}

/// Projects `p` onto the interpolated track, minimizing Euclidean distance in
/// (lon, lat) degrees. Ties between segments resolve to the earlier passage
/// time. `time` is the observation time used for `tau`.
pub fn project_onto_track(
    p: &GeoPoint,
    time: f64,
    track: &Track,
) -> Result<TrackProjection, GeodesyError> {
    let verts = track.vertices();
    let first = verts[0].point;
    if verts
        .iter()
        .all(|v| v.point.lon == first.lon && v.point.lat == first.lat)
    {
        return Err(GeodesyError::DegenerateTrack(track.id.clone()));
    }

    // Localize all longitudes to a frame centered on the track to avoid
    // spurious 360-degree jumps near the dateline.
    let (lons, center) = track.unwrapped_lons();
    let qx = p.lon + 360.0 * ((center - p.lon) / 360.0).round();
    let qy = p.lat;

    let mut best: Option<(f64, f64, usize, f64, [f64; 4])> = None;
    for i in 0..verts.len() - 1 {
        let (x1, y1) = (lons[i], verts[i].point.lat);
        let (x2, y2) = (lons[i + 1], verts[i + 1].point.lat);
        let (dx, dy) = (x2 - x1, y2 - y1);
        let len2 = dx * dx + dy * dy;
        let s = if len2 > 0.0 {
            (((qx - x1) * dx + (qy - y1) * dy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let px = x1 + s * dx;
        let py = y1 + s * dy;
        let dist2 = (qx - px) * (qx - px) + (qy - py) * (qy - py);
        let t = verts[i].time + s * (verts[i + 1].time - verts[i].time);
        let better = match &best {
            None => true,
            Some((bd2, bt, ..)) => dist2 < *bd2 || (dist2 == *bd2 && t < *bt),
        };
        if better {
            best = Some((dist2, t, i, s, [px, py, dx, dy]));
        }
    }
    let (_, t_proj, seg, s, geom) = best.expect("track has at least one segment");
    let [px, py, mut dx, mut dy] = geom;

    // Direction for the sign convention; fall back to the nearest segment
    // with extent if the winning one is a repeated vertex.
    if dx == 0.0 && dy == 0.0 {
        'search: for j in 1..verts.len() {
            for k in [seg.checked_sub(j), Some(seg + j)].into_iter().flatten() {
                if k + 1 < verts.len() {
                    let ex = lons[k + 1] - lons[k];
                    let ey = verts[k + 1].point.lat - verts[k].point.lat;
                    if ex != 0.0 || ey != 0.0 {
                        dx = ex;
                        dy = ey;
                        break 'search;
                    }
                }
            }
        }
    }

    let proj = GeoPoint::new(px, py)?;
    let angle = great_circle_angle(p, &proj);
    let cross = dx * (qy - py) - dy * (qx - px);
    let d = if cross > 0.0 { -angle } else { angle };

    let wind = verts[seg].wind + s * (verts[seg + 1].wind - verts[seg].wind);
    Ok(TrackProjection {
        proj,
        t_proj,
        d,
        tau: signed_tau(time, t_proj),
        segment_index: seg,
        wind_at_proj: wind,
    })
}
