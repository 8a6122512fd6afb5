//! Exact optimum by exhaustive search, and the per-instant lower bound.

use crate::error::{Error, Result};
use crate::graph::CostCapacityForest;
use crate::model::{measure, union_intervals, Instance};
use crate::oneshot::{optimal_oneshot, OneShot, SolverLimits};
use crate::rational::{zero, Rat};
use crate::schedule::{MachineId, Schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_nodes: u64,
    pub max_machines_per_type: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_nodes: 5_000_000,
            max_machines_per_type: usize::MAX,
        }
    }
}

impl OracleBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_nodes == 0 || self.max_machines_per_type == 0 {
            return Err(Error::Validation("oracle budget must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Opt2 {
    pub cost: Rat,
    pub schedule: Schedule,
    pub nodes: u64,
}

struct Machine {
    busy: Vec<(Rat, Rat)>,
    load: Vec<Rat>,
}

struct Search<'a> {
    inst: &'a Instance,
    order: Vec<usize>,
    ranges: Vec<std::ops::Range<usize>>,
    n_seg: usize,
    budget: OracleBudget,
    machines: Vec<Vec<Machine>>,
    current: Vec<MachineId>,
    best: Option<(Rat, Vec<MachineId>)>,
    nodes: u64,
}

impl Search<'_> {
    fn run(&mut self, depth: usize, cost: Rat) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes {
            return Err(Error::BudgetExhausted {
                nodes: self.budget.max_nodes,
                best: self.best.as_ref().map(|(c, _)| c.clone()),
            });
        }
        if let Some((b, _)) = &self.best {
            if &cost >= b {
                return Ok(());
            }
        }
        if depth == self.order.len() {
            self.best = Some((cost, self.current.clone()));
            return Ok(());
        }
        let j = self.order[depth];
        let job = self.inst.job(j);
        let types = self.inst.types();
        for z in self.inst.exact_type(j)..=types.len() {
            let cap = types.capacity(z);
            let rate = types.rate(z);
            let used = self.machines[z].len();
            // Existing instances first, then one fresh instance.
            for k in 0..=used {
                if k == used {
                    if used >= self.budget.max_machines_per_type {
                        break;
                    }
                    self.machines[z].push(Machine {
                        busy: vec![],
                        load: vec![zero(); self.n_seg],
                    });
                }
                let m = &mut self.machines[z][k];
                if self.ranges[j].clone().all(|s| &(&m.load[s] + &job.size) <= cap) {
                    let before = measure(&m.busy);
                    let grown = union_intervals(
                        m.busy
                            .iter()
                            .map(|(a, b)| (a, b))
                            .chain(std::iter::once((&job.start, &job.end))),
                    );
                    let old_busy = std::mem::replace(&mut m.busy, grown);
                    let added = (measure(&m.busy) - before) * rate;
                    for s in self.ranges[j].clone() {
                        m.load[s] += &job.size;
                    }
                    self.current[j] = MachineId {
                        type_index: z,
                        machine: k,
                    };
                    let res = self.run(depth + 1, &cost + added);
                    let m = &mut self.machines[z][k];
                    for s in self.ranges[j].clone() {
                        m.load[s] -= &job.size;
                    }
                    m.busy = old_busy;
                    res?;
                }
                if k == used {
                    self.machines[z].pop();
                }
            }
        }
        Ok(())
    }
}

/// Minimum total busy-time cost over all feasible schedules.
///
/// Jobs are placed in start order; within a type a new machine instance is
/// only opened as the next unused index, so permuted machine labels are never
/// explored twice.
pub fn opt2(inst: &Instance, budget: OracleBudget) -> Result<Opt2> {
    budget.validate()?;
    let timeline = inst.timeline();
    let jobs = inst.jobs();
    let mut order: Vec<usize> = (0..jobs.len()).collect();
    order.sort_by(|&a, &b| jobs[a].start.cmp(&jobs[b].start).then(a.cmp(&b)));
    let mut search = Search {
        inst,
        order,
        ranges: jobs.iter().map(|j| timeline.segment_range(&j.start, &j.end)).collect(),
        n_seg: timeline.segments().len(),
        budget,
        machines: (0..=inst.types().len()).map(|_| Vec::new()).collect(),
        current: vec![
            MachineId {
                type_index: 0,
                machine: 0
            };
            jobs.len()
        ],
        best: None,
        nodes: 0,
    };
    search.run(0, zero())?;
    let (cost, placement) = search
        .best
        .expect("placing every job on its own largest machine is always feasible");
    Ok(Opt2 {
        cost,
        schedule: Schedule::new(placement),
        nodes: search.nodes,
    })
}

/// Sum over segments of length times the optimal one-shot cost of the
/// active jobs; never above [`opt2`].
pub fn opt1_lower_bound(inst: &Instance, forest: &CostCapacityForest, limits: SolverLimits) -> Result<Rat> {
    let types = inst.types();
    let mut total = zero();
    for seg in inst.timeline().segments() {
        let sizes: Vec<Rat> = inst
            .active_at(&seg.start)
            .into_iter()
            .map(|j| inst.job(j).size.clone())
            .collect();
        if sizes.is_empty() {
            continue;
        }
        let ctx = OneShot::new(types, forest, sizes)?;
        total += seg.len() * optimal_oneshot(&ctx, limits)?.cost(types);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_forest;
    use crate::model::{Job, MachineType, MachineTypeTable};
    use crate::rational::{frac, int, pow8};
    use proptest::prelude::*;

    fn one_type() -> MachineTypeTable {
        MachineTypeTable::new(vec![MachineType::new(int(1), int(8))]).unwrap()
    }

    fn job(id: &str, size: Rat, a: i64, b: i64) -> Job {
        Job::new(id, size, int(a), int(b)).unwrap()
    }

    /// Every job on every (type, instance) pair with no symmetry reduction.
    fn unreduced(inst: &Instance) -> Rat {
        let n = inst.jobs().len();
        let types = inst.types().len();
        let choices = types * n.max(1);
        let mut best: Option<Rat> = None;
        let total = choices.pow(n as u32);
        for mut code in 0..total {
            let placement: Vec<MachineId> = (0..n)
                .map(|_| {
                    let c = code % choices;
                    code /= choices;
                    MachineId {
                        type_index: c / n.max(1) + 1,
                        machine: c % n.max(1),
                    }
                })
                .collect();
            let s = Schedule::new(placement);
            if s.validate(inst).is_ok() {
                let c = s.cost(inst);
                if best.as_ref().is_none_or(|b| &c < b) {
                    best = Some(c);
                }
            }
        }
        best.unwrap_or_else(zero)
    }

    #[test]
    fn single_job() {
        let inst = Instance::new(vec![job("a", int(1), 0, 3)], one_type()).unwrap();
        let r = opt2(&inst, OracleBudget::default()).unwrap();
        assert_eq!(r.cost, int(24));
        let forest = build_forest(inst.types());
        assert_eq!(
            opt1_lower_bound(&inst, &forest, SolverLimits::default()).unwrap(),
            int(24)
        );
    }

    #[test]
    fn disjoint_jobs_add_up() {
        let inst = Instance::new(vec![job("a", int(1), 0, 1), job("b", int(1), 2, 3)], one_type()).unwrap();
        assert_eq!(opt2(&inst, OracleBudget::default()).unwrap().cost, int(16));
    }

    #[test]
    fn capacity_forces_two_machines() {
        let inst = Instance::new(vec![job("a", frac(2, 3), 0, 2), job("b", frac(2, 3), 0, 2)], one_type()).unwrap();
        let r = opt2(&inst, OracleBudget::default()).unwrap();
        assert_eq!(r.cost, int(32));
        assert_ne!(r.schedule.placement[0], r.schedule.placement[1]);
    }

    #[test]
    fn empty_instance() {
        let inst = Instance::new(vec![], one_type()).unwrap();
        assert_eq!(opt2(&inst, OracleBudget::default()).unwrap().cost, zero());
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let jobs = (0..6).map(|i| job(&format!("j{i}"), frac(1, 3), 0, 2)).collect();
        let inst = Instance::new(jobs, one_type()).unwrap();
        let err = opt2(
            &inst,
            OracleBudget {
                max_nodes: 5,
                max_machines_per_type: 6,
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::BudgetExhausted { nodes: 5, .. }));
        assert!(OracleBudget {
            max_nodes: 0,
            max_machines_per_type: 1
        }
        .validate()
        .is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]
        #[test]
        fn symmetry_reduction_keeps_the_optimum(
            raw in prop::collection::vec((1i64..=8, 0i64..4, 1i64..4), 1..=4),
        ) {
            let types = MachineTypeTable::new(vec![
                MachineType::new(int(1), pow8(0)),
                MachineType::new(int(2), pow8(1)),
            ]).unwrap();
            let jobs: Vec<Job> = raw.iter().enumerate()
                .map(|(i, &(s, a, l))| job(&format!("j{i}"), frac(s, 4), a, a + l))
                .collect();
            let inst = Instance::new(jobs, types).unwrap();
            let r = opt2(&inst, OracleBudget::default()).unwrap();
            prop_assert!(r.schedule.validate(&inst).is_ok());
            prop_assert_eq!(r.schedule.cost(&inst), r.cost.clone());
            prop_assert_eq!(r.cost.clone(), unreduced(&inst));
            let forest = build_forest(inst.types());
            prop_assert!(opt1_lower_bound(&inst, &forest, SolverLimits::default()).unwrap() <= r.cost);
        }
    }
}
