//! Job-to-machine assignments and their busy-time cost.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{measure, union_intervals, Instance, Timeline};
use crate::rational::{zero, Rat};

/// A machine: its type and its instance number within that type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MachineId {
    #[serde(rename = "type")]
    pub type_index: usize,
    pub machine: usize,
}

/// Machine of every job, in job order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub placement: Vec<MachineId>,
}

impl Schedule {
    pub fn new(placement: Vec<MachineId>) -> Self {
        Schedule { placement }
    }

    /// Jobs on each machine, machines in `(type, instance)` order.
    pub fn machines(&self) -> BTreeMap<MachineId, Vec<usize>> {
        let mut out: BTreeMap<MachineId, Vec<usize>> = BTreeMap::new();
        for (j, m) in self.placement.iter().enumerate() {
            out.entry(*m).or_default().push(j);
        }
        out
    }

    /// Union of the active intervals of the machine's jobs.
    pub fn busy_intervals(&self, inst: &Instance, jobs: &[usize]) -> Vec<(Rat, Rat)> {
        union_intervals(jobs.iter().map(|&j| (&inst.job(j).start, &inst.job(j).end)))
    }

    /// Sum over machines of rate times busy time.
    pub fn cost(&self, inst: &Instance) -> Rat {
        self.machines().iter().fold(zero(), |acc, (m, jobs)| {
            acc + inst.types().rate(m.type_index) * measure(&self.busy_intervals(inst, jobs))
        })
    }

    /// Checks job count, type range, and every machine's load at every breakpoint.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.placement.len() != inst.jobs().len() {
            return Err(Error::Validation(format!(
                "schedule places {} jobs, instance has {}",
                self.placement.len(),
                inst.jobs().len()
            )));
        }
        let timeline = inst.timeline();
        for (m, jobs) in self.machines() {
            if !inst.types().indices().contains(&m.type_index) {
                return Err(Error::TypeOutOfRange(m.type_index));
            }
            let cap = inst.types().capacity(m.type_index);
            for t in timeline.breakpoints() {
                let load = jobs
                    .iter()
                    .filter(|&&j| inst.job(j).is_active_at(t))
                    .fold(zero(), |acc, &j| acc + &inst.job(j).size);
                if &load > cap {
                    return Err(Error::ContractViolation(format!(
                        "machine {}:{} carries {load} > {cap} at {t}",
                        m.type_index, m.machine
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of busy machines of each type (index 0 unused) on every segment
    /// of `timeline`.
    pub fn open_counts(&self, inst: &Instance, timeline: &Timeline) -> Vec<Vec<usize>> {
        let n = inst.types().len();
        let machines = self.machines();
        timeline
            .segments()
            .iter()
            .map(|seg| {
                let mut counts = vec![0usize; n + 1];
                for (m, jobs) in &machines {
                    if jobs.iter().any(|&j| inst.job(j).is_active_at(&seg.start)) {
                        counts[m.type_index] += 1;
                    }
                }
                counts
            })
            .collect()
    }

    /// `job id -> {type, machine}`, sorted by id.
    pub fn to_json(&self, inst: &Instance) -> String {
        let map: BTreeMap<&str, MachineId> = self
            .placement
            .iter()
            .enumerate()
            .map(|(j, m)| (inst.job(j).id.as_str(), *m))
            .collect();
        serde_json::to_string_pretty(&map).expect("schedule serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Job, MachineType, MachineTypeTable};
    use crate::rational::int;

    fn inst() -> Instance {
        let types = MachineTypeTable::new(vec![MachineType::new(int(2), int(8))]).unwrap();
        let jobs = vec![
            Job::new("a", int(1), int(0), int(2)).unwrap(),
            Job::new("b", int(1), int(1), int(3)).unwrap(),
            Job::new("c", int(1), int(5), int(6)).unwrap(),
        ];
        Instance::new(jobs, types).unwrap()
    }

    #[test]
    fn cost_uses_union_of_intervals() {
        let inst = inst();
        let m = MachineId {
            type_index: 1,
            machine: 0,
        };
        let s = Schedule::new(vec![m; 3]);
        s.validate(&inst).unwrap();
        assert_eq!(s.cost(&inst), int(8 * 4));
        assert!(s.to_json(&inst).contains("\"type\": 1"));
    }

    #[test]
    fn overload_is_rejected() {
        let types = MachineTypeTable::new(vec![MachineType::new(int(1), int(8))]).unwrap();
        let jobs = vec![
            Job::new("a", int(1), int(0), int(2)).unwrap(),
            Job::new("b", int(1), int(1), int(3)).unwrap(),
        ];
        let inst = Instance::new(jobs, types).unwrap();
        let m = MachineId {
            type_index: 1,
            machine: 0,
        };
        assert!(Schedule::new(vec![m; 2]).validate(&inst).is_err());
    }
}
