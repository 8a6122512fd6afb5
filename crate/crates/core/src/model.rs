//! Jobs, machine types, instances and the time-line helpers every other module
//! builds on.
//!
//! Machine types are numbered `1..=|M|` in increasing capacity (and rate), the
//! same numbering used throughout the crate.

use std::collections::HashSet;

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, int, pow8, serde_rat, zero, Rat};

/// An interval job: it occupies `size` units of capacity during `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    #[serde(with = "serde_rat")]
    pub size: Rat,
    #[serde(with = "serde_rat")]
    pub start: Rat,
    #[serde(with = "serde_rat")]
    pub end: Rat,
}

impl Job {
    pub fn new(id: impl Into<String>, size: Rat, start: Rat, end: Rat) -> Result<Self> {
        let job = Job {
            id: id.into(),
            size,
            start,
            end,
        };
        job.validate()?;
        Ok(job)
    }

    fn validate(&self) -> Result<()> {
        if !self.size.is_positive() {
            return Err(Error::Validation(format!(
                "job `{}` has non-positive size {}",
                self.id, self.size
            )));
        }
        if self.start >= self.end {
            return Err(Error::Validation(format!(
                "job `{}` has empty interval [{}, {})",
                self.id, self.start, self.end
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> Rat {
        &self.end - &self.start
    }

    /// `start <= t < end`.
    pub fn is_active_at(&self, t: &Rat) -> bool {
        &self.start <= t && t < &self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineType {
    #[serde(with = "serde_rat")]
    pub capacity: Rat,
    #[serde(with = "serde_rat")]
    pub rate: Rat,
}

impl MachineType {
    pub fn new(capacity: Rat, rate: Rat) -> Self {
        MachineType { capacity, rate }
    }

    /// Normalized cost rate per capacity unit, `r / g`.
    pub fn ratio(&self) -> Rat {
        &self.rate / &self.capacity
    }
}

/// Machine types with strictly increasing capacities and rates.
///
/// Indices are 1-based: `get(1)` is the smallest type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineTypeTable {
    entries: Vec<MachineType>,
}

impl MachineTypeTable {
    pub fn new(entries: Vec<MachineType>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Validation("machine type table is empty".into()));
        }
        for t in &entries {
            if !t.capacity.is_positive() || !t.rate.is_positive() {
                return Err(Error::Validation(format!(
                    "machine type ({}, {}) must have positive capacity and rate",
                    t.capacity, t.rate
                )));
            }
        }
        for pair in entries.windows(2) {
            if pair[0].capacity >= pair[1].capacity || pair[0].rate >= pair[1].rate {
                return Err(Error::Validation(
                    "capacities and rates must both be strictly increasing".into(),
                ));
            }
        }
        Ok(MachineTypeTable { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, z: usize) -> &MachineType {
        &self.entries[z - 1]
    }

    pub fn capacity(&self, z: usize) -> &Rat {
        &self.entries[z - 1].capacity
    }

    pub fn rate(&self, z: usize) -> &Rat {
        &self.entries[z - 1].rate
    }

    pub fn ratio(&self, z: usize) -> Rat {
        self.entries[z - 1].ratio()
    }

    pub fn max_capacity(&self) -> &Rat {
        &self.entries[self.entries.len() - 1].capacity
    }

    /// Type indices `1..=|M|`.
    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.entries.len()
    }

    pub fn entries(&self) -> &[MachineType] {
        &self.entries
    }

    pub fn rates_are_powers_of_eight(&self) -> bool {
        self.entries.iter().all(|t| rational::log8_exact(&t.rate).is_some())
    }

    /// Exact machine type `m(J)`: the lowest type whose capacity fits `size`.
    pub fn exact_machine_type(&self, size: &Rat) -> Result<usize> {
        exact_machine_type(size, self)
    }
}

/// Rounds each rate up to the power of 8 `r` with `r/8 < c <= r`.
pub fn round_rates(raw_rates: &[Rat]) -> Result<Vec<Rat>> {
    raw_rates.iter().map(round_rate).collect()
}

fn round_rate(c: &Rat) -> Result<Rat> {
    if !c.is_positive() {
        return Err(Error::Validation(format!("rate {c} must be positive")));
    }
    let mut n = 0i32;
    while c > &pow8(n) {
        n += 1;
    }
    while c <= &pow8(n - 1) {
        n -= 1;
    }
    Ok(pow8(n))
}

/// Drops every type `i` for which another type `j` has `g_i <= g_j` and
/// `r_i >= r_j`, and re-indexes the survivors.
pub fn prune_dominated(raw: &[MachineType]) -> Result<MachineTypeTable> {
    if raw.is_empty() {
        return Err(Error::Validation("machine type list is empty".into()));
    }
    // Sort by capacity descending, then rate ascending: a type survives iff its
    // rate is strictly below every rate seen before it.
    let mut sorted: Vec<&MachineType> = raw.iter().collect();
    sorted.sort_by(|a, b| b.capacity.cmp(&a.capacity).then(a.rate.cmp(&b.rate)));
    let mut kept: Vec<MachineType> = Vec::new();
    for t in sorted {
        match kept.last() {
            Some(last) if t.rate >= last.rate => {}
            _ => kept.push(t.clone()),
        }
    }
    kept.reverse();
    MachineTypeTable::new(kept)
}

pub fn exact_machine_type(size: &Rat, types: &MachineTypeTable) -> Result<usize> {
    types
        .indices()
        .find(|&z| size <= types.capacity(z))
        .ok_or_else(|| Error::InfeasibleJob {
            id: String::new(),
            size: Box::new(size.clone()),
            capacity: Box::new(types.max_capacity().clone()),
        })
}

/// Indices of the jobs active at `t`.
pub fn active_set(jobs: &[Job], t: &Rat) -> Vec<usize> {
    jobs.iter()
        .enumerate()
        .filter(|(_, j)| j.is_active_at(t))
        .map(|(i, _)| i)
        .collect()
}

/// Total size of the jobs active at `t`.
pub fn total_size(jobs: &[Job], t: &Rat) -> Rat {
    jobs.iter()
        .filter(|j| j.is_active_at(t))
        .fold(zero(), |acc, j| acc + &j.size)
}

/// Union of half-open intervals as sorted disjoint `[a, b)` pieces.
pub fn union_intervals<'a, I>(intervals: I) -> Vec<(Rat, Rat)>
where
    I: IntoIterator<Item = (&'a Rat, &'a Rat)>,
{
    let mut items: Vec<(&Rat, &Rat)> = intervals.into_iter().filter(|(a, b)| a < b).collect();
    items.sort();
    let mut out: Vec<(Rat, Rat)> = Vec::new();
    for (a, b) in items {
        match out.last_mut() {
            Some((_, end)) if a <= &*end => {
                if b > &*end {
                    *end = b.clone();
                }
            }
            _ => out.push((a.clone(), b.clone())),
        }
    }
    out
}

/// `span(X)`: the time during which at least one job of `jobs` is active.
pub fn span(jobs: &[Job]) -> Vec<(Rat, Rat)> {
    union_intervals(jobs.iter().map(|j| (&j.start, &j.end)))
}

pub fn measure(pieces: &[(Rat, Rat)]) -> Rat {
    pieces.iter().fold(zero(), |acc, (a, b)| acc + (b - a))
}

/// Max/min job length ratio.
pub fn mu(jobs: &[Job]) -> Result<Rat> {
    let mut lens = jobs.iter().map(Job::len);
    let first = lens.next().ok_or(Error::Undefined("mu of an empty job set"))?;
    let (lo, hi) = lens.fold((first.clone(), first), |(lo, hi), l| (lo.min(l.clone()), hi.max(l)));
    Ok(hi / lo)
}

pub fn min_len(jobs: &[Job]) -> Result<Rat> {
    jobs.iter()
        .map(Job::len)
        .min()
        .ok_or(Error::Undefined("minimum length of an empty job set"))
}

/// Sorted, deduplicated job starts and ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeline {
    breakpoints: Vec<Rat>,
}

/// A maximal interval `[start, end)` between consecutive breakpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub start: Rat,
    pub end: Rat,
}

impl Segment {
    pub fn len(&self) -> Rat {
        &self.end - &self.start
    }
}

impl Timeline {
    pub fn new(jobs: &[Job]) -> Self {
        Self::from_points(jobs.iter().flat_map(|j| [j.start.clone(), j.end.clone()]))
    }

    pub fn from_points(points: impl IntoIterator<Item = Rat>) -> Self {
        let mut breakpoints: Vec<Rat> = points.into_iter().collect();
        breakpoints.sort();
        breakpoints.dedup();
        Timeline { breakpoints }
    }

    pub fn breakpoints(&self) -> &[Rat] {
        &self.breakpoints
    }

    /// Indices of the segments inside `[start, end)`, assuming both ends are
    /// breakpoints.
    pub fn segment_range(&self, start: &Rat, end: &Rat) -> std::ops::Range<usize> {
        let lo = self.breakpoints.partition_point(|b| b < start);
        let hi = self.breakpoints.partition_point(|b| b < end);
        lo..hi.max(lo)
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.breakpoints
            .windows(2)
            .map(|w| Segment {
                start: w[0].clone(),
                end: w[1].clone(),
            })
            .collect()
    }
}

/// Instance file schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub types: Vec<MachineType>,
    #[serde(default)]
    pub jobs: Vec<Job>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    /// Round rates to powers of 8 before building the table.
    pub round_rates: bool,
    /// Reject instances in which two jobs share a start time.
    pub strict_release: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            round_rates: true,
            strict_release: false,
        }
    }
}

/// A validated scheduling instance. Job order is the release order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    jobs: Vec<Job>,
    types: MachineTypeTable,
    exact: Vec<usize>,
}

impl Instance {
    pub fn new(jobs: Vec<Job>, types: MachineTypeTable) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut exact = Vec::with_capacity(jobs.len());
        for job in &jobs {
            job.validate()?;
            if !seen.insert(job.id.as_str()) {
                return Err(Error::Validation(format!("duplicate job id `{}`", job.id)));
            }
            let m = exact_machine_type(&job.size, &types).map_err(|_| Error::InfeasibleJob {
                id: job.id.clone(),
                size: Box::new(job.size.clone()),
                capacity: Box::new(types.max_capacity().clone()),
            })?;
            exact.push(m);
        }
        Ok(Instance { jobs, types, exact })
    }

    pub fn from_file(file: InstanceFile, opts: LoadOptions) -> Result<Self> {
        let mut raw = file.types;
        if opts.round_rates {
            let rates = round_rates(&raw.iter().map(|t| t.rate.clone()).collect::<Vec<_>>())?;
            for (t, r) in raw.iter_mut().zip(rates) {
                t.rate = r;
            }
        }
        let types = prune_dominated(&raw)?;
        if opts.strict_release {
            let mut starts: Vec<&Rat> = file.jobs.iter().map(|j| &j.start).collect();
            starts.sort();
            if starts.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Validation(
                    "strict release requires distinct job start times".into(),
                ));
            }
        }
        Instance::new(file.jobs, types)
    }

    pub fn from_json(text: &str, opts: LoadOptions) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        Self::from_file(file, opts)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            types: self.types.entries().to_vec(),
            jobs: self.jobs.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("instance serializes")
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn job(&self, j: usize) -> &Job {
        &self.jobs[j]
    }

    pub fn types(&self) -> &MachineTypeTable {
        &self.types
    }

    /// `m(J)` for job index `j`.
    pub fn exact_type(&self, j: usize) -> usize {
        self.exact[j]
    }

    pub fn exact_types(&self) -> &[usize] {
        &self.exact
    }

    pub fn timeline(&self) -> Timeline {
        Timeline::new(&self.jobs)
    }

    pub fn active_at(&self, t: &Rat) -> Vec<usize> {
        active_set(&self.jobs, t)
    }

    pub fn mu(&self) -> Result<Rat> {
        mu(&self.jobs)
    }

    /// Copy with a different job list over the same table.
    pub fn with_jobs(&self, jobs: Vec<Job>) -> Result<Self> {
        Instance::new(jobs, self.types.clone())
    }
}

/// The 13-type example table used throughout the documentation and tests.
pub fn example_table() -> MachineTypeTable {
    let caps = [
        rational::frac(1, 300_000),
        rational::frac(1, 100_000),
        rational::frac(1, 4096),
        rational::frac(1, 1024),
        rational::frac(1, 65),
        rational::frac(1, 40),
        rational::frac(1, 3),
        int(1),
        int(12),
        int(50),
        int(1000),
        int(3000),
        int(100_000),
    ];
    let entries = caps
        .into_iter()
        .enumerate()
        .map(|(i, g)| MachineType::new(g, pow8(i as i32 - 6)))
        .collect();
    MachineTypeTable::new(entries).expect("example table is valid")
}
