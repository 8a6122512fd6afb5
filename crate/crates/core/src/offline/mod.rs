//! Offline scheduling: choose a type for every job, then pack each type's
//! jobs onto identical machines.

mod assign;
mod pack;

pub use assign::{assign_types, TypeAssignment};
pub use pack::{pack_homogeneous, PackPolicy, Packing};

use crate::check::Violation;
use crate::error::Result;
use crate::graph::CostCapacityForest;
use crate::model::{Instance, Segment, Timeline};
use crate::oneshot::{cn_config, cn_cost, optimal_oneshot, z_diamond, OneShot, SolverLimits};
use crate::rational::{ceil, frac, int, to_text, zero, Rat};
use crate::schedule::{MachineId, Schedule};

use assign::size_on_segment;

/// Per-segment audit of the offline schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditRow {
    pub start: Rat,
    pub end: Rat,
    /// `sum_z ceil(S(K_z, t) / g_z) * r_z`.
    pub ceil_cost: Rat,
    /// Cost of the alternative configuration for the active jobs.
    pub cn_cost: Rat,
    /// Optimal one-shot cost of the active jobs, when the solver finished.
    pub opt1: Option<Rat>,
    /// Rate actually paid: busy machines times their rates.
    pub realized_rate: Rat,
    pub machines: usize,
    /// Four times the volume bound, summed over types.
    pub budget: usize,
    /// Whether every type stays within four times its volume bound.
    pub budget_ok: bool,
}

impl AuditRow {
    pub const HEADER: [&'static str; 9] = [
        "start",
        "end",
        "ceil_cost",
        "cn_cost",
        "opt1",
        "realized_rate",
        "machines",
        "budget",
        "budget_ok",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            to_text(&self.start),
            to_text(&self.end),
            to_text(&self.ceil_cost),
            to_text(&self.cn_cost),
            self.opt1.as_ref().map(to_text).unwrap_or_default(),
            to_text(&self.realized_rate),
            self.machines.to_string(),
            self.budget.to_string(),
            self.budget_ok.to_string(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct OfflineOptions {
    pub policy: PackPolicy,
    /// Node limit for the per-segment one-shot optimum; `None` skips it.
    pub opt1_limits: Option<SolverLimits>,
}

impl Default for OfflineOptions {
    fn default() -> Self {
        OfflineOptions {
            policy: PackPolicy::FirstFitByLength,
            opt1_limits: Some(SolverLimits { max_nodes: 200_000 }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OfflineResult {
    pub schedule: Schedule,
    pub assignment: TypeAssignment,
    pub audit: Vec<AuditRow>,
    pub cost: Rat,
}

pub fn alg_offline(inst: &Instance, forest: &CostCapacityForest, opts: &OfflineOptions) -> Result<OfflineResult> {
    let types = inst.types();
    let assignment = assign_types(inst, forest);
    let mut placement = vec![
        MachineId {
            type_index: 0,
            machine: 0
        };
        inst.jobs().len()
    ];
    for z in types.indices() {
        let ids = &assignment.assigned[z];
        if ids.is_empty() {
            continue;
        }
        let jobs: Vec<_> = ids.iter().map(|&j| inst.job(j).clone()).collect();
        let packing = pack_homogeneous(&jobs, types.capacity(z), opts.policy)?;
        for (m, members) in packing.machines.iter().enumerate() {
            for &local in members {
                placement[ids[local]] = MachineId {
                    type_index: z,
                    machine: m,
                };
            }
        }
    }
    let schedule = Schedule::new(placement);
    let cost = schedule.cost(inst);
    let audit = audit(inst, forest, &assignment, &schedule, opts.opt1_limits)?;
    Ok(OfflineResult {
        schedule,
        assignment,
        audit,
        cost,
    })
}

/// Segments of `timeline` with at least one active job, with their indices.
pub(crate) fn busy_segments(inst: &Instance, timeline: &Timeline) -> Vec<(usize, Segment)> {
    timeline
        .segments()
        .into_iter()
        .enumerate()
        .filter(|(_, seg)| !inst.active_at(&seg.start).is_empty())
        .collect()
}

/// Sizes of the active jobs at `t`.
pub(crate) fn active_sizes(inst: &Instance, t: &Rat) -> Vec<Rat> {
    inst.active_at(t)
        .into_iter()
        .map(|j| inst.job(j).size.clone())
        .collect()
}

fn audit(
    inst: &Instance,
    forest: &CostCapacityForest,
    assignment: &TypeAssignment,
    schedule: &Schedule,
    opt1_limits: Option<SolverLimits>,
) -> Result<Vec<AuditRow>> {
    let types = inst.types();
    let timeline = inst.timeline();
    let open = schedule.open_counts(inst, &timeline);
    let mut rows = Vec::new();
    for (k, seg) in busy_segments(inst, &timeline) {
        let mut ceil_cost = zero();
        let mut budget = 0usize;
        let mut budget_ok = true;
        let mut realized_rate = zero();
        for z in types.indices() {
            let load = size_on_segment(inst, &assignment.assigned[z], &timeline, k);
            let need = ceil(&(load / types.capacity(z)));
            ceil_cost += &need * types.rate(z);
            let allowed = 4 * need.to_integer();
            budget += usize::try_from(&allowed).unwrap_or(usize::MAX);
            budget_ok &= num_bigint::BigInt::from(open[k][z]) <= allowed;
            realized_rate += int(open[k][z] as i64) * types.rate(z);
        }
        let ctx = OneShot::new(types, forest, active_sizes(inst, &seg.start))?;
        let top = z_diamond(&ctx)?;
        let cn = cn_cost(&ctx, top, &cn_config(&ctx, top)?);
        let opt1 = match opt1_limits {
            Some(limits) => optimal_oneshot(&ctx, limits).ok().map(|w| w.cost(types)),
            None => None,
        };
        rows.push(AuditRow {
            start: seg.start.clone(),
            end: seg.end.clone(),
            ceil_cost,
            cn_cost: cn,
            opt1,
            realized_rate,
            machines: open[k].iter().sum(),
            budget,
            budget_ok,
        });
    }
    Ok(rows)
}

/// Per-instant guarantees of the offline algorithm, checked on every busy
/// segment: the highest used type sits on the ancestor chain of the highest
/// exact type, descendants of any type cost at most two of its machines, a
/// top type reached only through descendants is backed by a proportional
/// child cost of at least 4/21 of its rate, and the rounded per-type cost is
/// within 21 times the alternative configuration and 45 times the one-shot
/// optimum.
pub fn check_offline(inst: &Instance, forest: &CostCapacityForest, result: &OfflineResult) -> Vec<Violation> {
    let types = inst.types();
    let a = &result.assignment;
    let timeline = inst.timeline();
    let mut out = Vec::new();
    let rows = busy_segments(inst, &timeline);
    for ((k, seg), row) in rows.iter().zip(&result.audit) {
        let t = &seg.start;
        let active = inst.active_at(t);
        let k0 = active.iter().map(|&j| inst.exact_type(j)).max().unwrap_or(0);
        let on = |z: usize| a.assigned[z].iter().any(|&j| inst.job(j).is_active_at(t));
        let k_off = types.indices().rev().find(|&z| on(z)).unwrap_or(0);
        if !forest.is_ancestor_or_self(k_off, k0) {
            out.push(Violation::new(
                "offline-head",
                format!("t={t}: highest used type {k_off} is not an ancestor of {k0}"),
            ));
        }
        let need: Vec<Rat> = std::iter::once(zero())
            .chain(types.indices().map(|z| {
                ceil(&(size_on_segment(inst, &a.assigned[z], &timeline, *k) / types.capacity(z))) * types.rate(z)
            }))
            .collect();
        for z in types.indices() {
            let below = forest
                .subtree(z)
                .iter()
                .filter(|&&i| i != z)
                .fold(zero(), |acc, &i| acc + &need[i]);
            if below > int(2) * types.rate(z) {
                out.push(Violation::new(
                    "offline-descendant-cost",
                    format!("t={t}, z={z}: {below} > 2 * {}", types.rate(z)),
                ));
            }
            let ancestors_empty = forest.ancestors(z).into_iter().skip(1).all(|i| !on(i));
            let exact_here = a.residual_exact(inst, z).iter().any(|&j| inst.job(j).is_active_at(t));
            if ancestors_empty && on(z) && !exact_here {
                let lhs = forest.children(z).iter().fold(zero(), |acc, &x| {
                    let s = active
                        .iter()
                        .filter(|&&j| forest.in_subtree(inst.exact_type(j), x))
                        .fold(zero(), |s, &j| s + &inst.job(j).size);
                    acc + s * types.ratio(x)
                });
                if lhs < frac(4, 21) * types.rate(z) {
                    out.push(Violation::new(
                        "offline-child-cost",
                        format!("t={t}, z={z}: {lhs} < 4/21 * {}", types.rate(z)),
                    ));
                }
            }
        }
        if row.ceil_cost > int(21) * &row.cn_cost {
            out.push(Violation::new(
                "offline-vs-cn",
                format!("t={t}: {} > 21 * {}", row.ceil_cost, row.cn_cost),
            ));
        }
        if let Some(opt1) = &row.opt1 {
            if row.ceil_cost > int(45) * opt1 {
                out.push(Violation::new(
                    "offline-vs-opt1",
                    format!("t={t}: {} > 45 * {opt1}", row.ceil_cost),
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_forest;
    use crate::model::{example_table, Job, MachineType, MachineTypeTable};

    #[test]
    fn single_job_costs_its_exact_type() {
        let types = example_table();
        let forest = build_forest(&types);
        let inst = Instance::new(vec![Job::new("a", int(10), int(0), int(3)).unwrap()], types).unwrap();
        let r = alg_offline(&inst, &forest, &OfflineOptions::default()).unwrap();
        let m = inst.exact_type(0);
        assert_eq!(r.cost, int(3) * inst.types().rate(m));
        r.schedule.validate(&inst).unwrap();
        assert!(check_offline(&inst, &forest, &r).is_empty());
        assert_eq!(r.audit.len(), 1);
    }

    #[test]
    fn empty_instance_costs_nothing() {
        let types = example_table();
        let forest = build_forest(&types);
        let inst = Instance::new(vec![], types).unwrap();
        let r = alg_offline(&inst, &forest, &OfflineOptions::default()).unwrap();
        assert_eq!(r.cost, zero());
        assert!(r.audit.is_empty());
    }

    #[test]
    fn moved_jobs_share_top_machines() {
        let types = MachineTypeTable::new(vec![
            MachineType::new(int(1), int(8)),
            MachineType::new(int(64), int(64)),
        ])
        .unwrap();
        let forest = build_forest(&types);
        let jobs = (0..6)
            .map(|i| Job::new(format!("j{i}"), frac(1, 2), int(0), int(4)).unwrap())
            .collect();
        let inst = Instance::new(jobs, types).unwrap();
        let r = alg_offline(&inst, &forest, &OfflineOptions::default()).unwrap();
        assert_eq!(r.cost, int(64 * 4));
        assert!(check_offline(&inst, &forest, &r).is_empty());
        let row = &r.audit[0];
        assert_eq!(row.ceil_cost, int(64));
        assert_eq!(row.machines, 1);
        assert!(row.budget_ok);
        assert_eq!(row.opt1, Some(int(24)));
    }
}
