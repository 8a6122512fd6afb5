//! Runs every invariant over a set of instances and collects ratios.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::check::Violation;
use crate::error::Result;
use crate::graph::{build_forest, check_structure, CostCapacityForest};
use crate::model::Instance;
use crate::offline::{alg_offline, check_offline, OfflineOptions};
use crate::oneshot::{
    canonicalize, charge, check_canonical, cn_config, cn_cost, optimal_oneshot, ChargeCase, OneShot, SolverLimits,
};
use crate::online::{charge_integrals, check_online, simulate, OnlineCheckOptions};
use crate::oracle::{opt1_lower_bound, opt2, OracleBudget};
use crate::rational::{frac, int, to_f64, to_text, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    /// Every check that needs no exact optimum.
    #[default]
    Fast,
    /// Adds the one-shot optimum per segment and the exact optimum on tiny instances.
    Full,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub level: Level,
    pub solver: SolverLimits,
    pub oracle: OracleBudget,
    /// Largest instance handed to the exact optimum: (jobs, types).
    pub tiny: (usize, usize),
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            level: Level::Fast,
            solver: SolverLimits { max_nodes: 200_000 },
            oracle: OracleBudget::default(),
            tiny: (6, 3),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub instance: String,
    pub check: String,
    pub detail: String,
}

/// One instance's costs and the largest observed ratio of each bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioRow {
    pub id: String,
    pub jobs: usize,
    pub types: usize,
    pub mu: Option<Rat>,
    pub offline_cost: Rat,
    pub online_cost: Rat,
    pub opt1_bound: Option<Rat>,
    pub opt2: Option<Rat>,
    /// Largest per-segment rounded offline cost over the alternative configuration cost.
    pub offline_vs_cn: Option<Rat>,
    /// Largest per-segment rounded offline cost over the one-shot optimum.
    pub offline_vs_opt1: Option<Rat>,
    /// Largest per-segment online rate over the one-shot optimum with artificial jobs.
    pub online_vs_opt1: Option<Rat>,
    /// Charge integral with jobs extended by `mu`, over the plain one.
    pub charge_growth: Option<Rat>,
    pub failures: usize,
}

impl RatioRow {
    pub const HEADER: [&'static str; 16] = [
        "id",
        "jobs",
        "types",
        "mu",
        "offline_cost",
        "online_cost",
        "opt1_bound",
        "opt2",
        "offline_ratio",
        "online_ratio",
        "offline_vs_cn",
        "offline_vs_opt1",
        "online_vs_opt1",
        "charge_growth",
        "online_ratio_over_mu",
        "failures",
    ];

    pub fn offline_ratio(&self) -> Option<Rat> {
        ratio(&self.offline_cost, self.opt2.as_ref())
    }

    pub fn online_ratio(&self) -> Option<Rat> {
        ratio(&self.online_cost, self.opt2.as_ref())
    }

    pub fn record(&self) -> Vec<String> {
        let text = |x: &Option<Rat>| x.as_ref().map(to_text).unwrap_or_default();
        let dec = |x: &Option<Rat>| x.as_ref().map(|v| format!("{:.6}", to_f64(v))).unwrap_or_default();
        let over_mu = match (self.online_ratio(), &self.mu) {
            (Some(r), Some(mu)) => Some(r / mu),
            _ => None,
        };
        vec![
            self.id.clone(),
            self.jobs.to_string(),
            self.types.to_string(),
            text(&self.mu),
            to_text(&self.offline_cost),
            to_text(&self.online_cost),
            text(&self.opt1_bound),
            text(&self.opt2),
            dec(&self.offline_ratio()),
            dec(&self.online_ratio()),
            dec(&self.offline_vs_cn),
            dec(&self.offline_vs_opt1),
            dec(&self.online_vs_opt1),
            dec(&self.charge_growth),
            dec(&over_mu),
            self.failures.to_string(),
        ]
    }

    pub fn to_json(&self) -> serde_json::Value {
        let text = |x: &Option<Rat>| x.as_ref().map(to_text);
        json!({
            "id": self.id,
            "jobs": self.jobs,
            "types": self.types,
            "mu": text(&self.mu),
            "offline_cost": to_text(&self.offline_cost),
            "online_cost": to_text(&self.online_cost),
            "opt1_bound": text(&self.opt1_bound),
            "opt2": text(&self.opt2),
            "offline_ratio": text(&self.offline_ratio()),
            "online_ratio": text(&self.online_ratio()),
            "offline_vs_cn": text(&self.offline_vs_cn),
            "offline_vs_opt1": text(&self.offline_vs_opt1),
            "online_vs_opt1": text(&self.online_vs_opt1),
            "charge_growth": text(&self.charge_growth),
            "failures": self.failures,
        })
    }
}

fn ratio(num: &Rat, den: Option<&Rat>) -> Option<Rat> {
    den.filter(|d| **d != int(0)).map(|d| num / d)
}

fn keep_max(slot: &mut Option<Rat>, v: Rat) {
    if slot.as_ref().is_none_or(|m| &v > m) {
        *slot = Some(v);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatioReport {
    pub level: Level,
    /// Sorted by instance id.
    pub rows: Vec<RatioRow>,
    pub failures: Vec<Failure>,
}

impl RatioReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn max_offline_ratio(&self) -> Option<Rat> {
        self.rows.iter().filter_map(RatioRow::offline_ratio).max()
    }

    pub fn max_online_ratio(&self) -> Option<Rat> {
        self.rows.iter().filter_map(RatioRow::online_ratio).max()
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let text = |x: Option<Rat>| x.as_ref().map(to_text);
        json!({
            "level": self.level,
            "instances": self.rows.len(),
            "passed": self.passed(),
            "failures": self.failures,
            "max_offline_ratio": text(self.max_offline_ratio()),
            "max_online_ratio": text(self.max_online_ratio()),
            "rows": self.rows.iter().map(RatioRow::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Verifies every instance, in parallel, and sorts the report by id.
pub fn verify(instances: &[(String, Instance)], opts: &VerifyOptions) -> RatioReport {
    let mut results: Vec<(RatioRow, Vec<Failure>)> = instances
        .par_iter()
        .map(|(id, inst)| verify_instance(id, inst, opts))
        .collect();
    results.sort_by(|a, b| a.0.id.cmp(&b.0.id));
    let mut rows = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (row, f) in results {
        rows.push(row);
        failures.extend(f);
    }
    RatioReport {
        level: opts.level,
        rows,
        failures,
    }
}

/// Runs the graph, one-shot, offline, online and (at full level) oracle
/// checks on one instance.
pub fn verify_instance(id: &str, inst: &Instance, opts: &VerifyOptions) -> (RatioRow, Vec<Failure>) {
    let mut violations = Vec::new();
    let row = match run_checks(inst, opts, &mut violations) {
        Ok(row) => row,
        Err(e) => {
            violations.push(Violation::new("error", e.to_string()));
            empty_row(inst)
        }
    };
    let failures: Vec<Failure> = violations
        .into_iter()
        .map(|v| Failure {
            instance: id.to_string(),
            check: v.check.to_string(),
            detail: v.detail,
        })
        .collect();
    let row = RatioRow {
        id: id.to_string(),
        failures: failures.len(),
        ..row
    };
    (row, failures)
}

fn empty_row(inst: &Instance) -> RatioRow {
    RatioRow {
        id: String::new(),
        jobs: inst.jobs().len(),
        types: inst.types().len(),
        mu: inst.mu().ok(),
        offline_cost: int(0),
        online_cost: int(0),
        opt1_bound: None,
        opt2: None,
        offline_vs_cn: None,
        offline_vs_opt1: None,
        online_vs_opt1: None,
        charge_growth: None,
        failures: 0,
    }
}

fn run_checks(inst: &Instance, opts: &VerifyOptions, out: &mut Vec<Violation>) -> Result<RatioRow> {
    let full = opts.level == Level::Full;
    let types = inst.types();
    let forest = build_forest(types);
    out.extend(check_structure(&forest, types));
    let mut row = empty_row(inst);

    // One-shot checks on every distinct active set, plus monotonicity across
    // neighbouring segments whose active sets are nested.
    let limits = full.then_some(opts.solver);
    let mut prev: Option<Vec<usize>> = None;
    for seg in inst.timeline().segments() {
        let active = inst.active_at(&seg.start);
        if active.is_empty() {
            prev = None;
            continue;
        }
        let ctx = OneShot::new(types, &forest, sizes_of(inst, &active))?;
        for v in check_oneshot(&ctx, limits)? {
            out.push(Violation::new(v.check, format!("t={}: {}", seg.start, v.detail)));
        }
        if let Some(p) = &prev {
            let (small, big) = if p.len() <= active.len() {
                (p, &active)
            } else {
                (&active, p)
            };
            if small.iter().all(|j| big.contains(j)) {
                let x = OneShot::new(types, &forest, sizes_of(inst, small))?;
                let y = OneShot::new(types, &forest, sizes_of(inst, big))?;
                let embed: Vec<usize> = small
                    .iter()
                    .map(|j| big.iter().position(|b| b == j).expect("subset"))
                    .collect();
                for v in check_charge_monotone(&x, &y, &embed)? {
                    out.push(Violation::new(v.check, format!("t={}: {}", seg.start, v.detail)));
                }
            }
        }
        prev = Some(active);
    }

    let offline = alg_offline(
        inst,
        &forest,
        &OfflineOptions {
            opt1_limits: limits,
            ..OfflineOptions::default()
        },
    )?;
    if let Err(e) = offline.schedule.validate(inst) {
        out.push(Violation::new("offline-schedule", e.to_string()));
    }
    out.extend(check_offline(inst, &forest, &offline));
    for a in &offline.audit {
        keep_max(&mut row.offline_vs_cn, &a.ceil_cost / &a.cn_cost);
        if let Some(o) = &a.opt1 {
            keep_max(&mut row.offline_vs_opt1, &a.ceil_cost / o);
        }
    }
    row.offline_cost = offline.cost.clone();

    let online = simulate(inst, &forest)?;
    if let Err(e) = online.schedule.validate(inst) {
        out.push(Violation::new("online-schedule", e.to_string()));
    }
    if online.cost != online.schedule.cost(inst) {
        out.push(Violation::new(
            "online-cost",
            format!(
                "integrated {} but per-machine {}",
                online.cost,
                online.schedule.cost(inst)
            ),
        ));
    }
    let audit = check_online(
        inst,
        &forest,
        &online,
        &OnlineCheckOptions {
            opt1_limits: limits,
            integrals: true,
        },
    )?;
    out.extend(audit.violations);
    row.online_vs_opt1 = audit.max_rate_ratio;
    row.online_cost = online.cost.clone();
    if let Some(mu) = &row.mu {
        let (with, without) = charge_integrals(inst, &forest, mu)?;
        row.charge_growth = ratio(&with, Some(&without));
    }

    if full {
        let lb = opt1_lower_bound(inst, &forest, opts.solver).ok();
        let tiny = inst.jobs().len() <= opts.tiny.0 && types.len() <= opts.tiny.1;
        if tiny {
            match opt2(inst, opts.oracle) {
                Ok(best) => {
                    if let Some(lb) = &lb {
                        if lb > &best.cost {
                            out.push(Violation::new("opt-lower-bound", format!("{lb} > {}", best.cost)));
                        }
                    }
                    if offline.cost < best.cost || online.cost < best.cost {
                        out.push(Violation::new(
                            "opt-not-minimal",
                            format!("offline {} / online {} below {}", offline.cost, online.cost, best.cost),
                        ));
                    }
                    if offline.cost > int(180) * &best.cost {
                        out.push(Violation::new(
                            "offline-ratio",
                            format!("{} > 180 * {}", offline.cost, best.cost),
                        ));
                    }
                    row.opt2 = Some(best.cost);
                }
                Err(e) => out.push(Violation::new("oracle", e.to_string())),
            }
        }
        row.opt1_bound = lb;
    }
    Ok(row)
}

fn sizes_of(inst: &Instance, jobs: &[usize]) -> Vec<Rat> {
    jobs.iter().map(|&j| inst.job(j).size.clone()).collect()
}

/// Per-instant checks: charge totals against the alternative configuration
/// and the top group's case rule, and with `limits` the one-shot optimum
/// against the alternative configuration and the canonical form of that optimum.
pub fn check_oneshot(ctx: &OneShot, limits: Option<SolverLimits>) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    if ctx.is_empty() {
        return Ok(out);
    }
    let types = ctx.types;
    let charges = charge(ctx)?;
    let top = charges.top;
    let cn = cn_cost(ctx, top, &cn_config(ctx, top)?);
    let total = charges.total();
    if frac(1, 2) * &total > cn || cn > frac(15, 7) * &total {
        out.push(Violation::new(
            "charge-vs-cn",
            format!("charges {total}, alternative configuration {cn}"),
        ));
    }
    let expected = match charges.case {
        ChargeCase::Proportional => Some(ctx.tree_size(top) * types.ratio(top)),
        ChargeCase::Interpolated | ChargeCase::Inflated => Some(types.rate(top).clone()),
        ChargeCase::ChildrenOnly => None,
    };
    if let Some(e) = expected {
        if charges.top_group_total != e {
            out.push(Violation::new(
                "charge-case",
                format!(
                    "{:?} top group totals {} instead of {e}",
                    charges.case, charges.top_group_total
                ),
            ));
        }
    }
    if let Some(limits) = limits {
        let w = optimal_oneshot(ctx, limits)?;
        let opt = w.cost(types);
        if frac(7, 15) * &cn > opt || opt > frac(8, 7) * &cn {
            out.push(Violation::new(
                "opt1-vs-cn",
                format!("optimum {opt}, alternative configuration {cn}"),
            ));
        }
        match canonicalize(&w, ctx, limits) {
            Ok(c) => {
                for p in check_canonical(&c, ctx) {
                    out.push(Violation::new("canonical", p));
                }
            }
            Err(e) => out.push(Violation::new("canonical", e.to_string())),
        }
    }
    Ok(out)
}

/// `x` is a sub-multiset of `y`; `embed[i]` is the index in `y` of job `i` of `x`.
/// Every job's charge in `x` must be at least its charge in `y`.
pub fn check_charge_monotone(x: &OneShot, y: &OneShot, embed: &[usize]) -> Result<Vec<Violation>> {
    let cx = charge(x)?;
    let cy = charge(y)?;
    Ok(embed
        .iter()
        .enumerate()
        .filter(|(i, &k)| cx.charges[*i] < cy.charges[k])
        .map(|(i, &k)| {
            Violation::new(
                "charge-monotone",
                format!(
                    "job {i}: {} in the smaller set, {} in the larger",
                    cx.charges[i], cy.charges[k]
                ),
            )
        })
        .collect())
}

/// The forest check suite on its own, for tables without jobs.
pub fn verify_forest(forest: &CostCapacityForest, types: &crate::model::MachineTypeTable) -> Vec<Violation> {
    check_structure(forest, types)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{generate, GeneratorSpec, TableSpec};
    use crate::model::example_table;

    #[test]
    fn example_table_without_jobs() {
        let inst = Instance::new(vec![], example_table()).unwrap();
        let report = verify(&[("t1".into(), inst)], &VerifyOptions::default());
        assert!(report.passed(), "{:?}", report.failures);
        assert_eq!(report.rows[0].offline_cost, int(0));
    }

    #[test]
    fn corrupted_forest_is_caught() {
        let types = example_table();
        let mut parents = build_forest(&types).parents().to_vec();
        parents[10] = Some(12);
        let forest = CostCapacityForest::from_parents(parents).unwrap();
        assert!(!verify_forest(&forest, &types).is_empty());
    }

    #[test]
    fn full_level_on_tiny_instances() {
        let instances: Vec<(String, Instance)> = (0..8)
            .map(|seed| {
                let spec = GeneratorSpec {
                    seed,
                    jobs: 5,
                    table: TableSpec {
                        count: 3,
                        ..Default::default()
                    },
                    ..Default::default()
                };
                (format!("i{seed:02}"), generate(&spec).unwrap())
            })
            .collect();
        let report = verify(
            &instances,
            &VerifyOptions {
                level: Level::Full,
                ..Default::default()
            },
        );
        assert!(report.passed(), "{:?}", report.failures);
        assert!(report.rows.iter().all(|r| r.opt2.is_some()));
        let ids: Vec<_> = report.rows.iter().map(|r| r.id.clone()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
        assert!(report.max_offline_ratio().unwrap() <= int(180));
    }
}
