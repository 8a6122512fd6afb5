//! Runtime checks of the online analysis: fill bounds from artificial jobs,
//! the per-instant cost bound, and the charge integral bound.

use super::{artificial_jobs, ArtificialJobSet, ArtificialKind, OnlineResult};
use crate::check::Violation;
use crate::error::Result;
use crate::graph::CostCapacityForest;
use crate::model::{Instance, Timeline};
use crate::oneshot::{charge, optimal_oneshot, OneShot, SolverLimits};
use crate::rational::{int, one, zero, Rat};

#[derive(Debug, Clone)]
pub struct OnlineCheckOptions {
    /// Node limit for the one-shot optimum of jobs plus artificial jobs;
    /// `None` skips the per-instant cost bound.
    pub opt1_limits: Option<SolverLimits>,
    /// Check the charge integral bound for extensions `mu` and `2 mu`.
    pub integrals: bool,
}

impl Default for OnlineCheckOptions {
    fn default() -> Self {
        OnlineCheckOptions {
            opt1_limits: Some(SolverLimits { max_nodes: 200_000 }),
            integrals: true,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct OnlineAudit {
    pub violations: Vec<Violation>,
    /// Largest open rate over the one-shot optimum with artificial jobs.
    pub max_rate_ratio: Option<Rat>,
    /// Segments where that optimum was not computed.
    pub opt1_skipped: usize,
}

/// Checks every busy segment of a simulation result.
pub fn check_online(
    inst: &Instance,
    forest: &CostCapacityForest,
    result: &OnlineResult,
    opts: &OnlineCheckOptions,
) -> Result<OnlineAudit> {
    let mut audit = OnlineAudit {
        violations: result.event_violations.clone(),
        ..OnlineAudit::default()
    };
    if inst.jobs().is_empty() {
        return Ok(audit);
    }
    let types = inst.types();
    let sets = [
        artificial_jobs(inst, ArtificialKind::F1)?,
        artificial_jobs(inst, ArtificialKind::F2)?,
        artificial_jobs(inst, ArtificialKind::F3)?,
    ];
    let placed_on = |j: usize| result.schedule.placement[j].type_index;

    for row in &result.series {
        let t = &row.start;
        let active = inst.active_at(t);
        if active.is_empty() {
            continue;
        }
        let n = &row.counts;
        let Some(top) = types.indices().rev().find(|&z| n[z] > 0) else {
            audit.violations.push(Violation::new(
                "online-open",
                format!("t={t}: active jobs but no open machine"),
            ));
            continue;
        };
        let artificial: Vec<(usize, &Rat)> = sets
            .iter()
            .flat_map(|s| s.active_at(t))
            .map(|a| (inst.exact_type(a.source), &a.size))
            .collect();
        // S(K_z, t) + S(R(t) restricted to the tree of z).
        let filled = |z: usize| -> Rat {
            let own = active
                .iter()
                .filter(|&&j| placed_on(j) == z)
                .fold(zero(), |acc, &j| acc + &inst.job(j).size);
            artificial
                .iter()
                .filter(|(m, _)| forest.in_subtree(*m, z))
                .fold(own, |acc, (_, s)| acc + *s)
        };

        for &z in forest.t_set(top) {
            if n[z] > 1 {
                let lhs = filled(z);
                let rhs = int(n[z] as i64 - 1) * types.capacity(z);
                if lhs <= rhs {
                    audit.violations.push(Violation::new(
                        "online-fill",
                        format!("t={t}, z={z}: {lhs} <= ({} - 1) * {}", n[z], types.capacity(z)),
                    ));
                }
            }
        }

        let on_top: Vec<usize> = active.iter().copied().filter(|&j| placed_on(j) == top).collect();
        if n[top] == 1 && on_top.iter().all(|&j| inst.exact_type(j) < top) {
            for &hat in &on_top {
                for &z in forest.children(top) {
                    let before = result.counts_before[hat][z];
                    if before > 1 {
                        let lhs = filled(z);
                        let rhs = int(before as i64 - 1) * types.capacity(z);
                        if lhs <= rhs {
                            audit.violations.push(Violation::new(
                                "online-fill-single-top",
                                format!(
                                    "t={t}, job {}, z={z}: {lhs} <= ({before} - 1) * {}",
                                    inst.job(hat).id,
                                    types.capacity(z)
                                ),
                            ));
                        }
                    }
                }
            }
        }

        if let Some(limits) = opts.opt1_limits {
            let sizes: Vec<Rat> = active
                .iter()
                .map(|&j| inst.job(j).size.clone())
                .chain(artificial.iter().map(|(_, s)| (*s).clone()))
                .collect();
            let ctx = OneShot::new(types, forest, sizes)?;
            match optimal_oneshot(&ctx, limits) {
                Ok(w) => {
                    let opt1 = w.cost(types);
                    if row.rate > int(5) * &opt1 {
                        audit.violations.push(Violation::new(
                            "online-vs-opt1",
                            format!("t={t}: {} > 5 * {opt1}", row.rate),
                        ));
                    }
                    let ratio = &row.rate / &opt1;
                    if audit.max_rate_ratio.as_ref().is_none_or(|m| &ratio > m) {
                        audit.max_rate_ratio = Some(ratio);
                    }
                }
                Err(_) => audit.opt1_skipped += 1,
            }
        }
    }

    if opts.integrals {
        let mu = inst.mu()?;
        for d in [mu.clone(), &mu * int(2)] {
            let (with, without) = charge_integrals(inst, forest, &d)?;
            if with > (&d + one()) * &without {
                audit.violations.push(Violation::new(
                    "online-charge-integral",
                    format!("d={d}: {with} > ({d} + 1) * {without}"),
                ));
            }
        }
    }
    Ok(audit)
}

/// Integrals over the busy span of the total charge with and without the
/// jobs extended by `d` shortest-job lengths.
pub fn charge_integrals(inst: &Instance, forest: &CostCapacityForest, d: &Rat) -> Result<(Rat, Rat)> {
    let extended = artificial_jobs(inst, ArtificialKind::Fd(d.clone()))?;
    integrate(inst, forest, &extended)
}

fn integrate(inst: &Instance, forest: &CostCapacityForest, extra: &ArtificialJobSet) -> Result<(Rat, Rat)> {
    let types = inst.types();
    let timeline = Timeline::from_points(
        inst.timeline()
            .breakpoints()
            .iter()
            .cloned()
            .chain(extra.breakpoints().cloned()),
    );
    let (mut with, mut without) = (zero(), zero());
    for seg in timeline.segments() {
        let base: Vec<Rat> = inst
            .active_at(&seg.start)
            .into_iter()
            .map(|j| inst.job(j).size.clone())
            .collect();
        if base.is_empty() {
            continue;
        }
        let mut grown = base.clone();
        grown.extend(extra.active_at(&seg.start).map(|a| a.size.clone()));
        let len = seg.len();
        without += &len * charge(&OneShot::new(types, forest, base)?)?.total();
        with += &len * charge(&OneShot::new(types, forest, grown)?)?.total();
    }
    Ok((with, without))
}
