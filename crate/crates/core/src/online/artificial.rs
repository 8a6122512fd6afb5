//! Copies of jobs stretched past their end, clipped to the busy span.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{min_len, span, Instance};
use crate::rational::{zero, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtificialKind {
    /// Same interval as the job.
    F1,
    /// `[end, end + mu)`.
    F2,
    /// `[end, end + 2 mu)`.
    F3,
    /// `[end, end + d)` for a given `d >= mu`.
    Fd(#[serde(with = "crate::rational::serde_rat")] Rat),
}

/// One derived job. Its interval is a union of pieces because clipping to a
/// span with gaps can split it; no pieces means it is never active.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtificialJob {
    /// Index of the originating job.
    pub source: usize,
    pub size: Rat,
    pub pieces: Vec<(Rat, Rat)>,
}

impl ArtificialJob {
    pub fn is_active_at(&self, t: &Rat) -> bool {
        self.pieces.iter().any(|(a, b)| a <= t && t < b)
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtificialJobSet {
    pub kind: ArtificialKind,
    pub jobs: Vec<ArtificialJob>,
}

impl ArtificialJobSet {
    /// Active members at `t`.
    pub fn active_at<'a>(&'a self, t: &'a Rat) -> impl Iterator<Item = &'a ArtificialJob> + 'a {
        self.jobs.iter().filter(move |j| j.is_active_at(t))
    }

    /// All piece endpoints.
    pub fn breakpoints(&self) -> impl Iterator<Item = &Rat> {
        self.jobs.iter().flat_map(|j| j.pieces.iter().flat_map(|(a, b)| [a, b]))
    }
}

/// Builds one artificial job per job of `inst`.
///
/// Extensions are measured in units of the shortest job length, so `mu`
/// stretches a job by the longest job length.
pub fn artificial_jobs(inst: &Instance, kind: ArtificialKind) -> Result<ArtificialJobSet> {
    let jobs = inst.jobs();
    if jobs.is_empty() {
        if let ArtificialKind::Fd(d) = &kind {
            if d < &zero() {
                return Err(Error::Validation(format!("extension {d} is negative")));
            }
        }
        return Ok(ArtificialJobSet { kind, jobs: vec![] });
    }
    let mu = inst.mu()?;
    let unit = min_len(jobs)?;
    let factor = match &kind {
        ArtificialKind::F1 => None,
        ArtificialKind::F2 => Some(mu.clone()),
        ArtificialKind::F3 => Some(&mu * Rat::from_integer(2.into())),
        ArtificialKind::Fd(d) => {
            if d < &mu {
                return Err(Error::Validation(format!("extension {d} is below mu = {mu}")));
            }
            Some(d.clone())
        }
    };
    let busy = span(jobs);
    let out = jobs
        .iter()
        .enumerate()
        .map(|(i, j)| {
            let pieces = match &factor {
                None => vec![(j.start.clone(), j.end.clone())],
                Some(f) => clip(&j.end, &(&j.end + f * &unit), &busy),
            };
            ArtificialJob {
                source: i,
                size: j.size.clone(),
                pieces,
            }
        })
        .collect();
    Ok(ArtificialJobSet { kind, jobs: out })
}

fn clip(a: &Rat, b: &Rat, busy: &[(Rat, Rat)]) -> Vec<(Rat, Rat)> {
    busy.iter()
        .filter_map(|(lo, hi)| {
            let s = lo.max(a).clone();
            let e = hi.min(b).clone();
            (s < e).then_some((s, e))
        })
        .collect()
}
