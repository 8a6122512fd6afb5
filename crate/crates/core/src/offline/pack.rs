//! First Fit packing of interval jobs onto identical machines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Job, Timeline};
use crate::rational::{zero, Rat};

/// Order in which jobs are offered to First Fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PackPolicy {
    /// Longest job first; ties by start time, then input order.
    #[default]
    FirstFitByLength,
    /// Earliest start first; ties by input order.
    FirstFitByArrival,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packing {
    /// Jobs on each machine, as indices into the packed slice.
    pub machines: Vec<Vec<usize>>,
    pub timeline: Timeline,
    /// Busy machines on each segment of `timeline`.
    pub busy: Vec<usize>,
}

/// Places each job on the first machine whose load stays within `capacity`
/// over the job's whole interval, opening a machine when none fits.
pub fn pack_homogeneous(jobs: &[Job], capacity: &Rat, policy: PackPolicy) -> Result<Packing> {
    for j in jobs {
        if &j.size > capacity {
            return Err(Error::InfeasibleJob {
                id: j.id.clone(),
                size: Box::new(j.size.clone()),
                capacity: Box::new(capacity.clone()),
            });
        }
    }
    let timeline = Timeline::new(jobs);
    let n_seg = timeline.segments().len();
    let ranges: Vec<_> = jobs.iter().map(|j| timeline.segment_range(&j.start, &j.end)).collect();
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    match policy {
        PackPolicy::FirstFitByLength => order.sort_by(|&a, &b| {
            jobs[b]
                .len()
                .cmp(&jobs[a].len())
                .then_with(|| jobs[a].start.cmp(&jobs[b].start))
                .then(a.cmp(&b))
        }),
        PackPolicy::FirstFitByArrival => order.sort_by(|&a, &b| jobs[a].start.cmp(&jobs[b].start).then(a.cmp(&b))),
    }

    let mut machines: Vec<Vec<usize>> = Vec::new();
    let mut loads: Vec<Vec<Rat>> = Vec::new();
    for j in order {
        let size = &jobs[j].size;
        let slot = loads
            .iter()
            .position(|load| ranges[j].clone().all(|k| &(&load[k] + size) <= capacity));
        let m = slot.unwrap_or_else(|| {
            machines.push(Vec::new());
            loads.push(vec![zero(); n_seg]);
            machines.len() - 1
        });
        for k in ranges[j].clone() {
            loads[m][k] += size;
        }
        machines[m].push(j);
    }
    for m in &mut machines {
        m.sort_unstable();
    }
    let busy = (0..n_seg)
        .map(|k| loads.iter().filter(|load| load[k] > zero()).count())
        .collect();
    Ok(Packing {
        machines,
        timeline,
        busy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{ceil, frac, int};
    use proptest::prelude::*;

    fn job(i: usize, size: Rat, a: i64, b: i64) -> Job {
        Job::new(format!("j{i}"), size, int(a), int(b)).unwrap()
    }

    #[test]
    fn everything_fits_one_machine() {
        let jobs = vec![job(0, frac(1, 2), 0, 4), job(1, frac(1, 2), 1, 3)];
        for policy in [PackPolicy::FirstFitByLength, PackPolicy::FirstFitByArrival] {
            let p = pack_homogeneous(&jobs, &int(1), policy).unwrap();
            assert_eq!(p.machines.len(), 1);
        }
    }

    #[test]
    fn disjoint_jobs_reuse_one_machine() {
        let jobs: Vec<Job> = (0..5).map(|i| job(i, int(1), i as i64, i as i64 + 1)).collect();
        let p = pack_homogeneous(&jobs, &int(1), PackPolicy::FirstFitByArrival).unwrap();
        assert_eq!(p.machines, vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn oversize_job_is_rejected() {
        let jobs = vec![job(0, int(2), 0, 1)];
        assert!(matches!(
            pack_homogeneous(&jobs, &int(1), PackPolicy::FirstFitByLength),
            Err(Error::InfeasibleJob { .. })
        ));
    }

    #[test]
    fn overlap_forces_second_machine() {
        let jobs = vec![job(0, frac(2, 3), 0, 2), job(1, frac(2, 3), 1, 3)];
        let p = pack_homogeneous(&jobs, &int(1), PackPolicy::FirstFitByLength).unwrap();
        assert_eq!(p.machines.len(), 2);
        assert_eq!(p.busy, vec![1, 2, 1]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn packing_is_valid_and_above_volume_bound(
            raw in prop::collection::vec((1i64..=8, 0i64..10, 1i64..6), 1..12),
            by_arrival in any::<bool>(),
        ) {
            let jobs: Vec<Job> = raw
                .iter()
                .enumerate()
                .map(|(i, &(s, a, l))| job(i, frac(s, 8), a, a + l))
                .collect();
            let policy = if by_arrival { PackPolicy::FirstFitByArrival } else { PackPolicy::FirstFitByLength };
            let cap = int(1);
            let p = pack_homogeneous(&jobs, &cap, policy).unwrap();
            let mut seen: Vec<usize> = p.machines.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..jobs.len()).collect::<Vec<_>>());
            for (k, seg) in p.timeline.segments().iter().enumerate() {
                let mut total = zero();
                for m in &p.machines {
                    let load = m.iter()
                        .filter(|&&j| jobs[j].is_active_at(&seg.start))
                        .fold(zero(), |acc, &j| acc + &jobs[j].size);
                    prop_assert!(load <= cap);
                    total += load;
                }
                prop_assert!(Rat::from_integer(p.busy[k].into()) >= ceil(&(total / &cap)));
            }
        }
    }
}
