//! Baseline/signal pair construction: incidental-profile windows per track,
//! pairing by the 0.2-degree gate, greedy lineage sparsification, and
//! TC-centric coordinates.

use alloc::vec::Vec;

use crate::geodesy::{
    great_circle_angle, lon_delta, project_onto_track, signed_tau, GeoPoint, GeodesyError, Track,
    TrackProjection,
};
use crate::profiles::GriddedProfile;

/// Window constants for pairing, all in the units of the paper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairWindows {
    /// Half-width of the incidental window around the projection, degrees.
    pub incidental_deg: f64,
    /// Baseline membership in days since passage: [lo, hi).
    pub baseline_window: (f64, f64),
    /// Signal membership in days since passage: [lo, hi].
    pub signal_window: (f64, f64),
    /// Maximum baseline-to-signal separation, degrees of great-circle angle.
    pub pair_radius_deg: f64,
    /// Minimum time separation between any two lineage members, days.
    pub min_separation_days: f64,
    /// Cap on signals per lineage.
    pub max_signals: usize,
}

impl Default for PairWindows {
    fn default() -> Self {
        Self {
            incidental_deg: 8.0,
            baseline_window: (-12.0, -2.0),
            signal_window: (-2.0, 20.0),
            pair_radius_deg: 0.2,
            min_separation_days: 3.0,
            max_signals: 6,
        }
    }
}

/// A profile incidental to one track, with its own projection.
#[derive(Debug, Clone)]
pub struct Candidate {
    /// Index into the TC-profile slice.
    pub profile: usize,
    pub projection: TrackProjection,
}

/// One baseline/signal pair in TC-centric coordinates. Indices refer to the
/// TC-profile slice the lineage was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfilePair {
    pub baseline: usize,
    pub signal: usize,
    /// Signed cross-track angle of the shared (baseline) location, degrees.
    pub d: f64,
    /// Days since passage of the signal profile, year-aware.
    pub tau: f64,
    pub wind_at_proj: f64,
    /// Shared reference location: the baseline profile's position.
    pub loc: GeoPoint,
}

/// A baseline profile with its time-ordered signal profiles.
#[derive(Debug, Clone, Default)]
pub struct Lineage {
    pub baseline: usize,
    /// Signal profile indices, time-ordered.
    pub signals: Vec<usize>,
    /// Populated by [`attach_coordinates`]; parallel to `signals`.
    pub pairs: Vec<ProfilePair>,
}

/// Classifies TC profiles as baseline or signal candidates for one track.
///
/// Membership is determined by the profile's own projection: the profile must
/// be within the incidental window (longitude and latitude) of the nearest
/// interpolated track location, and its time-since-passage must fall in the
/// baseline or signal window. A profile may be a candidate for several
/// tracks.
pub fn find_incidental(
    track: &Track,
    profiles: &[GriddedProfile],
    windows: &PairWindows,
) -> Result<(Vec<Candidate>, Vec<Candidate>), GeodesyError> {
    let mut baselines = Vec::new();
    let mut signals = Vec::new();
    let (t0, t1) = track.time_span();
    let lo = t0 + windows.baseline_window.0 - 2.0;
    let hi = t1 + windows.signal_window.1 + 2.0;
    for (i, p) in profiles.iter().enumerate() {
        if p.time < lo || p.time > hi {
            continue;
        }
        let proj = project_onto_track(&p.loc, p.time, track)?;
        if lon_delta(p.loc.lon(), proj.proj.lon()).abs() > windows.incidental_deg
            || (p.loc.lat() - proj.proj.lat()).abs() > windows.incidental_deg
        {
            continue;
        }
        let cand = Candidate {
            profile: i,
            projection: proj,
        };
        let tau = proj.tau;
        if tau >= windows.baseline_window.0 && tau < windows.baseline_window.1 {
            baselines.push(cand);
        } else if tau >= windows.signal_window.0 && tau <= windows.signal_window.1 {
            signals.push(cand);
        }
    }
    Ok((baselines, signals))
}

/// Pairs every baseline with every signal within the 0.2-degree gate, then
/// sparsifies each lineage greedily in chronological order: a signal is kept
/// iff it is at least 72 h from every already-kept member (the baseline
/// included), up to the 6-signal cap. Empty lineages are discarded.
pub fn build_lineages(
    baseline_candidates: &[Candidate],
    signal_candidates: &[Candidate],
    profiles: &[GriddedProfile],
    windows: &PairWindows,
) -> Vec<Lineage> {
    let mut lineages = Vec::new();
    for b in baseline_candidates {
        let b_prof = &profiles[b.profile];
        let mut near: Vec<usize> = signal_candidates
            .iter()
            .filter(|s| {
                great_circle_angle(&b_prof.loc, &profiles[s.profile].loc)
                    <= windows.pair_radius_deg
            })
            .map(|s| s.profile)
            .collect();
        near.sort_by(|&a, &z| {
            profiles[a]
                .time
                .partial_cmp(&profiles[z].time)
                .unwrap()
                .then(a.cmp(&z))
        });

        let mut kept_times = alloc::vec![b_prof.time];
        let mut signals = Vec::new();
        for s in near {
            if signals.len() >= windows.max_signals {
                break;
            }
            let t = profiles[s].time;
            if kept_times
                .iter()
                .all(|&k| (t - k).abs() >= windows.min_separation_days)
            {
                kept_times.push(t);
                signals.push(s);
            }
        }
        if !signals.is_empty() {
            lineages.push(Lineage {
                baseline: b.profile,
                signals,
                pairs: Vec::new(),
            });
        }
    }
    lineages
}

/// Populates the pairs of a lineage with TC-centric coordinates.
///
/// The shared baseline location is projected once; `d`, the passage time, and
/// the interpolated wind come from that projection, while each pair's `tau`
/// uses its own signal time.
pub fn attach_coordinates(
    mut lineage: Lineage,
    track: &Track,
    profiles: &[GriddedProfile],
) -> Result<Lineage, GeodesyError> {
    let base = &profiles[lineage.baseline];
    let proj = project_onto_track(&base.loc, base.time, track)?;
    lineage.pairs = lineage
        .signals
        .iter()
        .map(|&s| ProfilePair {
            baseline: lineage.baseline,
            signal: s,
            d: proj.d,
            tau: signed_tau(profiles[s].time, proj.t_proj),
            wind_at_proj: proj.wind_at_proj,
            loc: base.loc,
        })
        .collect();
    Ok(lineage)
}
