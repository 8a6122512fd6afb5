//! Online scheduling: jobs arrive at their start times and are placed
//! without knowledge of later arrivals or of their own end.

mod artificial;
mod checks;

pub use artificial::{artificial_jobs, ArtificialJob, ArtificialJobSet, ArtificialKind};
pub use checks::{charge_integrals, check_online, OnlineCheckOptions};

use crate::check::Violation;
use crate::error::Result;
use crate::graph::CostCapacityForest;
use crate::model::{Instance, Job, MachineTypeTable};
use crate::rational::{int, to_text, zero, Rat};
use crate::schedule::{MachineId, Schedule};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenMachine {
    pub id: MachineId,
    pub opened_at: Rat,
    /// Global opening sequence number; breaks ties between equal open times.
    pub seq: usize,
    pub jobs: Vec<usize>,
    pub load: Rat,
}

/// Open machines per type, in opening order.
#[derive(Debug, Clone)]
pub struct SimulatorState<'a> {
    types: &'a MachineTypeTable,
    forest: &'a CostCapacityForest,
    open: Vec<Vec<OpenMachine>>,
    next_instance: Vec<usize>,
    seq: usize,
}

impl<'a> SimulatorState<'a> {
    pub fn new(types: &'a MachineTypeTable, forest: &'a CostCapacityForest) -> Self {
        let n = types.len();
        SimulatorState {
            types,
            forest,
            open: vec![Vec::new(); n + 1],
            next_instance: vec![0; n + 1],
            seq: 0,
        }
    }

    /// `N(z)` for every type, index 0 unused.
    pub fn open_counts(&self) -> Vec<usize> {
        self.open.iter().map(Vec::len).collect()
    }

    pub fn open_machines(&self, z: usize) -> &[OpenMachine] {
        &self.open[z]
    }

    /// Cost of the open machines of the strict descendants of `z`.
    fn below_cost(&self, z: usize) -> Rat {
        self.forest
            .subtree(z)
            .iter()
            .filter(|&&x| x != z)
            .fold(zero(), |acc, &x| {
                acc + int(self.open[x].len() as i64) * self.types.rate(x)
            })
    }

    /// Whether a new machine of type `z` may be opened: `z` is a root, or for
    /// every strict ancestor the open machines below it cost less than its
    /// rate minus `z`'s rate.
    fn may_open(&self, z: usize) -> bool {
        self.forest.parent(z).is_none()
            || self
                .forest
                .ancestors(z)
                .into_iter()
                .skip(1)
                .all(|anc| self.below_cost(anc) < self.types.rate(anc) - self.types.rate(z))
    }

    /// Places job `j` released at `now`, walking up from its exact type.
    pub fn place(&mut self, j: usize, job: &Job, exact: usize, now: &Rat) -> MachineId {
        let mut z = exact;
        loop {
            let cap = self.types.capacity(z);
            if let Some(m) = self.open[z].iter_mut().find(|m| &(&m.load + &job.size) <= cap) {
                m.load += &job.size;
                m.jobs.push(j);
                return m.id;
            }
            if self.may_open(z) {
                let id = MachineId {
                    type_index: z,
                    machine: self.next_instance[z],
                };
                self.next_instance[z] += 1;
                self.open[z].push(OpenMachine {
                    id,
                    opened_at: now.clone(),
                    seq: self.seq,
                    jobs: vec![j],
                    load: job.size.clone(),
                });
                self.seq += 1;
                return id;
            }
            z = self.forest.parent(z).expect("non-roots have parents");
        }
    }

    /// Removes job `j` from `machine`, closing the machine once it is empty.
    pub fn release(&mut self, j: usize, job: &Job, machine: MachineId) {
        let list = &mut self.open[machine.type_index];
        let pos = list
            .iter()
            .position(|m| m.id == machine)
            .expect("released job sits on an open machine");
        let m = &mut list[pos];
        m.jobs.retain(|&x| x != j);
        m.load -= &job.size;
        if m.jobs.is_empty() {
            list.remove(pos);
        }
    }

    /// Types `z` at which open machines of strict descendants cost `r_z` or more.
    pub fn over_budget(&self) -> Vec<usize> {
        self.types
            .indices()
            .filter(|&z| &self.below_cost(z) >= self.types.rate(z))
            .collect()
    }
}

/// Open counts on one segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesRow {
    pub start: Rat,
    pub end: Rat,
    /// `N(z)` per type, index 0 unused.
    pub counts: Vec<usize>,
    pub rate: Rat,
}

impl SeriesRow {
    pub fn header(n_types: usize) -> Vec<String> {
        let mut h = vec!["start".to_string(), "end".to_string()];
        h.extend((1..=n_types).map(|z| format!("n{z}")));
        h.push("rate".into());
        h
    }

    pub fn record(&self) -> Vec<String> {
        let mut r = vec![to_text(&self.start), to_text(&self.end)];
        r.extend(self.counts[1..].iter().map(usize::to_string));
        r.push(to_text(&self.rate));
        r
    }
}

#[derive(Debug, Clone)]
pub struct OnlineResult {
    pub schedule: Schedule,
    /// Right-limit open counts on every segment.
    pub series: Vec<SeriesRow>,
    pub cost: Rat,
    /// Open counts just before each job was placed, index 0 unused.
    pub counts_before: Vec<Vec<usize>>,
    /// Breaches of the open-cost budget, checked after every event.
    pub event_violations: Vec<Violation>,
    pub events: usize,
}

/// Replays the instance: at each breakpoint ends are processed first, then
/// starts in file order.
pub fn simulate(inst: &Instance, forest: &CostCapacityForest) -> Result<OnlineResult> {
    let types = inst.types();
    let jobs = inst.jobs();
    let timeline = inst.timeline();
    let points = timeline.breakpoints();
    let mut state = SimulatorState::new(types, forest);
    let mut placement: Vec<Option<MachineId>> = vec![None; jobs.len()];
    let mut counts_before = vec![Vec::new(); jobs.len()];
    let mut event_violations = Vec::new();
    let mut events = 0usize;
    let mut series = Vec::new();

    let mut by_start: Vec<usize> = (0..jobs.len()).collect();
    by_start.sort_by(|&a, &b| jobs[a].start.cmp(&jobs[b].start).then(a.cmp(&b)));
    let mut by_end = by_start.clone();
    by_end.sort_by(|&a, &b| jobs[a].end.cmp(&jobs[b].end).then(a.cmp(&b)));
    let (mut si, mut ei) = (0, 0);

    let mut after_event = |state: &SimulatorState, t: &Rat, what: String| {
        for z in state.over_budget() {
            event_violations.push(Violation::new(
                "online-open-budget",
                format!("after {what} at t={t}: descendants of {z} cost at least its rate"),
            ));
        }
    };

    for (k, t) in points.iter().enumerate() {
        while ei < by_end.len() && &jobs[by_end[ei]].end == t {
            let j = by_end[ei];
            let m = placement[j].expect("jobs end after they start");
            state.release(j, &jobs[j], m);
            events += 1;
            after_event(&state, t, format!("end of {}", jobs[j].id));
            ei += 1;
        }
        while si < by_start.len() && &jobs[by_start[si]].start == t {
            let j = by_start[si];
            counts_before[j] = state.open_counts();
            placement[j] = Some(state.place(j, &jobs[j], inst.exact_type(j), t));
            events += 1;
            after_event(&state, t, format!("start of {}", jobs[j].id));
            si += 1;
        }
        if let Some(next) = points.get(k + 1) {
            let counts = state.open_counts();
            let rate = types
                .indices()
                .fold(zero(), |acc, z| acc + int(counts[z] as i64) * types.rate(z));
            series.push(SeriesRow {
                start: t.clone(),
                end: next.clone(),
                counts,
                rate,
            });
        }
    }

    let cost = series
        .iter()
        .fold(zero(), |acc, row| acc + (&row.end - &row.start) * &row.rate);
    let schedule = Schedule::new(placement.into_iter().map(|m| m.expect("every job placed")).collect());
    Ok(OnlineResult {
        schedule,
        series,
        cost,
        counts_before,
        event_violations,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_forest;
    use crate::model::{example_table, MachineType};
    use crate::rational::frac;

    fn job(id: &str, size: Rat, a: i64, b: i64) -> Job {
        Job::new(id, size, int(a), int(b)).unwrap()
    }

    #[test]
    fn single_job_costs_its_exact_type() {
        let types = example_table();
        let forest = build_forest(&types);
        let inst = Instance::new(vec![job("a", int(10), 0, 3)], types).unwrap();
        let r = simulate(&inst, &forest).unwrap();
        let m = inst.exact_type(0);
        assert_eq!(r.schedule.placement[0].type_index, m);
        assert_eq!(r.cost, int(3) * inst.types().rate(m));
        assert_eq!(r.cost, r.schedule.cost(&inst));
    }

    #[test]
    fn overlapping_jobs_share_by_first_fit() {
        let types = MachineTypeTable::new(vec![MachineType::new(int(2), int(8))]).unwrap();
        let forest = build_forest(&types);
        let inst = Instance::new(vec![job("a", int(1), 0, 4), job("b", int(1), 1, 3)], types).unwrap();
        let r = simulate(&inst, &forest).unwrap();
        assert_eq!(r.schedule.placement[0], r.schedule.placement[1]);
        assert_eq!(r.cost, int(32));
    }

    #[test]
    fn disjoint_jobs_open_fresh_machines() {
        let types = MachineTypeTable::new(vec![MachineType::new(int(2), int(8))]).unwrap();
        let forest = build_forest(&types);
        let inst = Instance::new(vec![job("a", int(1), 0, 2), job("b", int(1), 3, 5)], types).unwrap();
        let r = simulate(&inst, &forest).unwrap();
        assert_ne!(r.schedule.placement[0], r.schedule.placement[1]);
        assert_eq!(r.cost, int(32));
        assert_eq!(r.series[1].counts[1], 0);
    }

    #[test]
    fn end_frees_capacity_before_start() {
        let types = MachineTypeTable::new(vec![MachineType::new(int(1), int(8))]).unwrap();
        let forest = build_forest(&types);
        let inst = Instance::new(vec![job("a", int(1), 0, 2), job("b", int(1), 2, 4)], types).unwrap();
        let r = simulate(&inst, &forest).unwrap();
        // The first machine closes at 2, so the second job opens instance 1.
        assert_eq!(r.schedule.placement[1].machine, 1);
        assert_eq!(r.cost, int(32));
    }

    #[test]
    fn guard_escalates_to_parent() {
        // r_1 = 1, r_2 = 8, p(1) = 2. Seven full type-1 machines: 7 < 8 - 1 fails.
        let types = MachineTypeTable::new(vec![
            MachineType::new(int(1), int(1)),
            MachineType::new(int(64), int(8)),
        ])
        .unwrap();
        let forest = build_forest(&types);
        assert_eq!(forest.parent(1), Some(2));
        let mut jobs: Vec<Job> = (0..8).map(|i| job(&format!("j{i}"), int(1), 0, 4)).collect();
        jobs.push(job("late", frac(1, 2), 1, 4));
        let inst = Instance::new(jobs, types).unwrap();
        let r = simulate(&inst, &forest).unwrap();
        let p = &r.schedule.placement;
        // Seven type-1 machines open (the last one at 6 < 7); the eighth job goes up.
        assert!(p[..7].iter().all(|m| m.type_index == 1));
        assert_eq!(p[7].type_index, 2);
        assert_eq!(p[8], p[7]);
        assert!(r.event_violations.is_empty());
        r.schedule.validate(&inst).unwrap();
        assert_eq!(r.cost, r.schedule.cost(&inst));
    }

    #[test]
    fn guard_with_seven_open_machines() {
        let types = MachineTypeTable::new(vec![
            MachineType::new(int(1), int(1)),
            MachineType::new(int(64), int(8)),
        ])
        .unwrap();
        let forest = build_forest(&types);
        let mut state = SimulatorState::new(&types, &forest);
        for m in 0..7 {
            state.open[1].push(OpenMachine {
                id: MachineId {
                    type_index: 1,
                    machine: m,
                },
                opened_at: zero(),
                seq: m,
                jobs: vec![m],
                load: int(1),
            });
        }
        let id = state.place(7, &job("x", int(1), 0, 1), 1, &zero());
        assert_eq!(id.type_index, 2);
    }
}
