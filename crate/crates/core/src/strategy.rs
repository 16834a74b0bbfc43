//! Focus registry and region-of-interest switching.
//!
//! The registry records the sequence of focused solutions (candidate optima).
//! Every `check_interval` iterations the engine calls [`roi_check`]:
//!
//! 1. If a sample acquired since the previous check beats the current focus,
//!    the best such sample becomes the new focus outright.
//! 2. Otherwise the best local candidate among samples acquired after the
//!    current focus (by the distance/value/novelty product `F`) is accepted
//!    as the new focus with probability `(f1 + f2) / dim`, one Bernoulli
//!    draw from the run's RNG stream.
//!
//! Ratio computations happen on a positively shifted value scale,
//! `value - (min archive value - 1)`, recomputed from the archive at every
//! check so all shifted values stay at or above 1.

use rand::Rng;
use thiserror::Error;

use crate::archive::Archive;

#[derive(Debug, Error, PartialEq)]
pub enum StrategyError {
    #[error("focus value {0} must be positive on the shifted scale")]
    NonPositiveFocusValue(f64),
}

/// A focused solution: where it lives in the archive, its normalized
/// location, and its internal value at focus time.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusEntry {
    pub archive_index: usize,
    pub location: Vec<f64>,
    pub value: f64,
}

/// Append-only history of foci; the last entry is the current focus.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusRegistry {
    entries: Vec<FocusEntry>,
}

impl FocusRegistry {
    pub fn new(first: FocusEntry) -> Self {
        Self {
            entries: vec![first],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn entries(&self) -> &[FocusEntry] {
        &self.entries
    }

    pub fn current(&self) -> &FocusEntry {
        self.entries.last().expect("registry is never empty")
    }

    /// All foci before the current one.
    pub fn previous(&self) -> &[FocusEntry] {
        &self.entries[..self.entries.len() - 1]
    }

    pub fn push(&mut self, entry: FocusEntry) {
        self.entries.push(entry);
    }
}

/// L1 distance from a candidate to the current focus, normalized space.
pub fn f1(x: &[f64], focus: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), focus.len());
    x.iter().zip(focus).map(|(a, b)| (a - b).abs()).sum()
}

/// Value ratio against the focus on the shifted positive scale, clamped to
/// `[0, 2]` so one huge sample cannot dominate the switch probability.
pub fn f2(y_shifted: f64, y_focus_shifted: f64) -> Result<f64, StrategyError> {
    if y_focus_shifted <= 0.0 {
        return Err(StrategyError::NonPositiveFocusValue(y_focus_shifted));
    }
    Ok((y_shifted / y_focus_shifted).clamp(0.0, 2.0))
}

/// Mean L1 distance to all previous foci; 0 while only one focus exists.
pub fn f3(x: &[f64], registry: &FocusRegistry) -> f64 {
    let prev = registry.previous();
    if prev.is_empty() {
        return 0.0;
    }
    prev.iter().map(|e| f1(x, &e.location)).sum::<f64>() / prev.len() as f64
}

/// The local candidate chosen by [`local_candidate_search`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCandidate {
    pub archive_index: usize,
    pub f1: f64,
    pub f2: f64,
    /// Mean distance to previous foci (0 with a single focus; the search
    /// substitutes factor 1 in that case).
    pub f3: f64,
    pub f_value: f64,
}

/// Scans archive samples acquired strictly after the current focus and
/// returns the maximizer of `f1 * f2 * f3' / dim` (`f3'` = 1 while only one
/// focus exists). Earliest acquisition wins ties. `None` when no sample
/// postdates the focus.
pub fn local_candidate_search(archive: &Archive, registry: &FocusRegistry) -> Option<LocalCandidate> {
    let shift = archive.positive_shift()?;
    let focus = registry.current();
    let focus_shifted = focus.value - shift;
    let single_focus = registry.len() == 1;
    let mut best: Option<LocalCandidate> = None;
    for sample in &archive.samples()[focus.archive_index + 1..] {
        let dim = sample.norm.len() as f64;
        let d1 = f1(&sample.norm, &focus.location);
        let r2 = f2(sample.internal - shift, focus_shifted)
            .expect("shifted values are at least 1 by construction");
        let d3 = f3(&sample.norm, registry);
        let factor3 = if single_focus { 1.0 } else { d3 };
        let f_value = d1 * r2 * factor3 / dim;
        if best.as_ref().is_none_or(|b| f_value > b.f_value) {
            best = Some(LocalCandidate {
                archive_index: sample.index,
                f1: d1,
                f2: r2,
                f3: d3,
                f_value,
            });
        }
    }
    best
}

/// One Bernoulli draw with `p = clamp((f1 + f2) / dim, 0, 1)`.
/// Returns (accepted, p).
pub fn roi_accept<R: Rng>(f1: f64, f2: f64, dim: usize, rng: &mut R) -> (bool, f64) {
    let p = ((f1 + f2) / dim as f64).clamp(0.0, 1.0);
    let u: f64 = rng.random();
    (u < p, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoiKind {
    /// A sample since the previous check beat the focus; switched outright.
    SuperiorSample,
    /// Local candidate accepted by the Bernoulli draw.
    LocalAccepted,
    /// Local candidate found but the draw rejected it; focus retained.
    LocalRejected,
    /// No sample postdates the current focus.
    NoCandidate,
}

/// Outcome of one region-of-interest check.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiEvent {
    /// Iteration at whose end the check ran.
    pub iteration: usize,
    pub kind: RoiKind,
    /// Archive index of the switched-to (or rejected) sample.
    pub archive_index: Option<usize>,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    pub f3: Option<f64>,
    pub f_value: Option<f64>,
    pub p: Option<f64>,
}

/// Runs one check. `since` is the archive length at the previous check;
/// samples at or past that index form the "new since last check" window.
/// On a switch the registry gains exactly one entry; a rejected draw leaves
/// it untouched.
pub fn roi_check<R: Rng>(
    archive: &Archive,
    registry: &mut FocusRegistry,
    since: usize,
    iteration: usize,
    rng: &mut R,
) -> RoiEvent {
    let current_value = registry.current().value;
    let superior = archive.samples()[since..]
        .iter()
        .filter(|s| s.internal > current_value)
        .reduce(|best, s| if s.internal > best.internal { s } else { best });
    if let Some(s) = superior {
        registry.push(FocusEntry {
            archive_index: s.index,
            location: s.norm.clone(),
            value: s.internal,
        });
        return RoiEvent {
            iteration,
            kind: RoiKind::SuperiorSample,
            archive_index: Some(s.index),
            f1: None,
            f2: None,
            f3: None,
            f_value: None,
            p: None,
        };
    }

    match local_candidate_search(archive, registry) {
        Some(lc) => {
            let sample = archive.get(lc.archive_index);
            let (accepted, p) = roi_accept(lc.f1, lc.f2, sample.norm.len(), rng);
            let kind = if accepted {
                registry.push(FocusEntry {
                    archive_index: sample.index,
                    location: sample.norm.clone(),
                    value: sample.internal,
                });
                RoiKind::LocalAccepted
            } else {
                RoiKind::LocalRejected
            };
            RoiEvent {
                iteration,
                kind,
                archive_index: Some(lc.archive_index),
                f1: Some(lc.f1),
                f2: Some(lc.f2),
                f3: Some(lc.f3),
                f_value: Some(lc.f_value),
                p: Some(p),
            }
        }
        None => RoiEvent {
            iteration,
            kind: RoiKind::NoCandidate,
            archive_index: None,
            f1: None,
            f2: None,
            f3: None,
            f_value: None,
            p: None,
        },
    }
}
