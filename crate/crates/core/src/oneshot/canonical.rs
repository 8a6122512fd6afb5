//! Rewrites an optimal configuration into the canonical optimum whose shape
//! the offline analysis relies on, without changing its cost.

use super::{optimal_oneshot, MachineConfiguration, OneShot, SolverLimits};
use crate::error::{Error, Result};
use crate::rational::{ceil, floor, zero, Rat};

/// Applies the three cost-preserving rewrites in order and checks the result.
///
/// Requires power-of-8 rates and an input that is feasible and optimal
/// (optimality is confirmed with the exact solver).
pub fn canonicalize(w: &MachineConfiguration, ctx: &OneShot, limits: SolverLimits) -> Result<MachineConfiguration> {
    ctx.require_nonempty()?;
    if !ctx.types.rates_are_powers_of_eight() {
        return Err(Error::ContractViolation(
            "canonicalization needs power-of-8 rates".into(),
        ));
    }
    if w.n_types() != ctx.n_types() || !w.is_integral() || !w.is_feasible(ctx) {
        return Err(Error::ContractViolation(
            "input configuration is not integral and feasible".into(),
        ));
    }
    let best = optimal_oneshot(ctx, limits)?.cost(ctx.types);
    if w.cost(ctx.types) != best {
        return Err(Error::ContractViolation(format!(
            "input configuration costs {} but the optimum is {}",
            w.cost(ctx.types),
            best
        )));
    }

    let out = top_shift(&lift_to_ancestors(w, ctx), ctx)?;
    let out = trim_top(&out, ctx)?;
    if out.cost(ctx.types) != best || !out.is_feasible(ctx) || !out.is_integral() {
        return Err(Error::ContractViolation(
            "canonical rewrite lost cost, feasibility or integrality".into(),
        ));
    }
    if let Some(msg) = check_canonical(&out, ctx).into_iter().next() {
        return Err(Error::ContractViolation(msg));
    }
    Ok(out)
}

/// Moves the cost of every type outside `{1..k0-1} ∪ P(k0)` onto the ancestor
/// of `k0` whose elder sibling subtree holds it.
fn lift_to_ancestors(w: &MachineConfiguration, ctx: &OneShot) -> MachineConfiguration {
    let (forest, types) = (ctx.forest, ctx.types);
    let k0 = ctx.k0();
    let mut out = MachineConfiguration::zeros(ctx.n_types());
    for z in 1..k0 {
        out.set(z, w.get(z).clone());
    }
    for z in forest.ancestors(k0) {
        let mut moved = w.get(z) * types.rate(z);
        for e in forest.elder_siblings(z) {
            for &i in forest.subtree(e) {
                moved += w.get(i) * types.rate(i);
            }
        }
        out.set(z, moved / types.rate(z));
    }
    out
}

/// For each `z0` ascending, trades whole type-`z0` machines' worth of cost
/// inside the strict subtree for type-`z0` machines.
fn top_shift(w: &MachineConfiguration, ctx: &OneShot) -> Result<MachineConfiguration> {
    let (forest, types) = (ctx.forest, ctx.types);
    let mut out = w.clone();
    for z0 in 1..=ctx.n_types() {
        let below = strict_subtree_cost(&out, ctx, z0);
        let r0 = types.rate(z0);
        if &below < r0 {
            continue;
        }
        let q = floor(&(&below / r0));
        let target = &q * r0;
        // Find z* with acc(z*+1..z0-1) <= target <= acc(z*..z0-1).
        let mut acc = zero();
        let mut cut = None;
        for z in (forest.lowest(z0)..z0).rev() {
            let with = &acc + out.get(z) * types.rate(z);
            if target <= with {
                cut = Some(z);
                break;
            }
            acc = with;
        }
        let z_star = cut.ok_or_else(|| Error::ContractViolation(format!("no cut point below type {z0}")))?;
        let taken = (&target - &acc) / types.rate(z_star);
        if !taken.is_integer() {
            return Err(Error::ContractViolation(format!("non-integral trade at type {z_star}")));
        }
        out.add(z0, &q);
        for z in z_star + 1..z0 {
            out.set(z, zero());
        }
        let rest = out.get(z_star) - taken;
        out.set(z_star, rest);
    }
    Ok(out)
}

/// Caps the top type at `ceil(S(H_top)/g_top)` and moves the surplus cost to
/// type `v(top) - 1`.
fn trim_top(w: &MachineConfiguration, ctx: &OneShot) -> Result<MachineConfiguration> {
    let (forest, types) = (ctx.forest, ctx.types);
    let mut out = w.clone();
    let Some(top) = w.highest_used() else {
        return Ok(out);
    };
    let cap = ceil(&(ctx.tree_size(top) / types.capacity(top)));
    let low = forest.lowest(top);
    if low > 1 && w.get(top) > &cap {
        let s = low - 1;
        let surplus = w.get(top) - &cap;
        let extra = types.rate(top) / types.rate(s) * surplus;
        if !extra.is_integer() {
            return Err(Error::ContractViolation(format!("non-integral transfer to type {s}")));
        }
        out.set(top, cap);
        out.add(s, &extra);
    }
    Ok(out)
}

fn strict_subtree_cost(w: &MachineConfiguration, ctx: &OneShot, z0: usize) -> Rat {
    ctx.forest
        .subtree(z0)
        .iter()
        .filter(|&&z| z != z0)
        .fold(zero(), |acc, &z| acc + w.get(z) * ctx.types.rate(z))
}

/// Lists every canonical-shape property `w` misses: the top type lies on the
/// ancestor chain of `k0`; every strict subtree costs less than one machine of
/// its root; and the top count is the floor or ceiling of its tree load.
pub fn check_canonical(w: &MachineConfiguration, ctx: &OneShot) -> Vec<String> {
    let mut bad = Vec::new();
    let Some(top) = w.highest_used() else {
        if !ctx.is_empty() {
            bad.push("configuration uses no machines".into());
        }
        return bad;
    };
    if !ctx.forest.is_ancestor_or_self(top, ctx.k0()) {
        bad.push(format!("top type {top} is not on the ancestor chain of {}", ctx.k0()));
    }
    for z0 in 1..=ctx.n_types() {
        let below = strict_subtree_cost(w, ctx, z0);
        if &below >= ctx.types.rate(z0) {
            bad.push(format!("strict subtree of {z0} costs {below}, not below its rate"));
        }
    }
    let load = ctx.tree_size(top) / ctx.types.capacity(top);
    if w.get(top) < &floor(&load) || w.get(top) > &ceil(&load) {
        bad.push(format!("top count {} outside [floor, ceil] of {load}", w.get(top)));
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_forest;
    use crate::model::{example_table, MachineType, MachineTypeTable};
    use crate::rational::{frac, int, pow8};
    use proptest::prelude::*;

    #[test]
    fn fixed_point_is_kept() {
        let types =
            MachineTypeTable::new(vec![MachineType::new(int(1), int(1)), MachineType::new(int(2), int(8))]).unwrap();
        let forest = build_forest(&types);
        let ctx = OneShot::new(&types, &forest, vec![int(2)]).unwrap();
        let w = MachineConfiguration::from_counts(vec![int(0), int(1)]);
        let c = canonicalize(&w, &ctx, SolverLimits::default()).unwrap();
        assert_eq!(c, w);
    }

    #[test]
    fn rejects_suboptimal_input() {
        let types =
            MachineTypeTable::new(vec![MachineType::new(int(1), int(1)), MachineType::new(int(2), int(8))]).unwrap();
        let forest = build_forest(&types);
        let ctx = OneShot::new(&types, &forest, vec![int(1)]).unwrap();
        let w = MachineConfiguration::from_counts(vec![int(0), int(1)]);
        assert!(matches!(
            canonicalize(&w, &ctx, SolverLimits::default()),
            Err(Error::ContractViolation(_))
        ));
        let infeasible = MachineConfiguration::from_counts(vec![int(0), int(0)]);
        assert!(canonicalize(&infeasible, &ctx, SolverLimits::default()).is_err());
    }

    #[test]
    fn lift_moves_cost_from_elder_subtrees() {
        // Jobs only up to type 10; a machine on type 12 is an elder sibling of 11.
        let types = example_table();
        let forest = build_forest(&types);
        let ctx = OneShot::new(&types, &forest, vec![int(40)]).unwrap();
        let mut w = MachineConfiguration::zeros(13);
        w.set(12, int(1));
        let lifted = lift_to_ancestors(&w, &ctx);
        assert_eq!(lifted.get(12), &zero());
        assert_eq!(lifted.get(11), &int(8));
        assert_eq!(lifted.cost(&types), w.cost(&types));
    }

    fn instance() -> impl Strategy<Value = (MachineTypeTable, Vec<Rat>)> {
        (
            prop::collection::vec(2i64..=6, 2..=5),
            prop::collection::vec(1i32..=2, 5),
            prop::collection::vec(1i64..=60, 1..=6),
        )
            .prop_map(|(growth, steps, raw)| {
                let mut g = int(1);
                let mut e = 0;
                let mut entries = Vec::new();
                for (k, s) in growth.iter().zip(&steps) {
                    g *= frac(*k + 1, 2);
                    e += s;
                    entries.push(MachineType::new(g.clone(), pow8(e)));
                }
                let gmax = g.clone();
                let sizes = raw.into_iter().map(|x| &gmax * frac(x, 60)).collect();
                (MachineTypeTable::new(entries).unwrap(), sizes)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn canonical_form_of_solver_optimum((types, sizes) in instance()) {
            let forest = build_forest(&types);
            let ctx = OneShot::new(&types, &forest, sizes).unwrap();
            let w = optimal_oneshot(&ctx, SolverLimits::default()).unwrap();
            let c = canonicalize(&w, &ctx, SolverLimits::default()).unwrap();
            prop_assert_eq!(c.cost(&types), w.cost(&types));
            prop_assert!(c.is_feasible(&ctx));
            prop_assert!(check_canonical(&c, &ctx).is_empty());
        }
    }
}
