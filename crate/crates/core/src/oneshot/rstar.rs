//! Explicit greedy placement of divisible jobs into a feasible configuration.

use super::{MachineConfiguration, OneShot};
use crate::error::{Error, Result};
use crate::rational::{zero, Rat};

/// Per-job cost induced by filling machines (largest first) with jobs
/// (largest first), splitting a job across machines when one fills up.
pub fn r_star(ctx: &OneShot, w: &MachineConfiguration) -> Result<Vec<Rat>> {
    if !w.is_integral() {
        return Err(Error::Validation("r* needs integral machine counts".into()));
    }
    if !w.is_feasible(ctx) {
        return Err(Error::Validation("r* needs a feasible configuration".into()));
    }
    let types = ctx.types;
    let sizes = ctx.sizes();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]));

    // Machines as (type, remaining capacity), largest type first.
    let mut machines = Vec::new();
    for z in (1..=ctx.n_types()).rev() {
        let count = w.get(z).to_integer();
        let mut k = num_bigint::BigInt::from(0);
        while k < count {
            machines.push(z);
            k += 1;
        }
    }

    let mut out = vec![zero(); sizes.len()];
    let mut idx = 0;
    let mut room = machines.first().map(|&z| types.capacity(z).clone()).unwrap_or_default();
    for j in order {
        let mut left = sizes[j].clone();
        let mut pieces = 0;
        while left > zero() {
            let Some(&z) = machines.get(idx) else {
                return Err(Error::ContractViolation("greedy fill ran out of machines".into()));
            };
            if z < ctx.exact_types()[j] {
                return Err(Error::ContractViolation(format!(
                    "job {j} landed on type {z} below its exact type"
                )));
            }
            let piece = if left <= room { left.clone() } else { room.clone() };
            if piece > zero() {
                out[j] += &piece * types.ratio(z);
                pieces += 1;
            }
            left -= &piece;
            room -= &piece;
            if room == zero() {
                idx += 1;
                if let Some(&next) = machines.get(idx) {
                    room = types.capacity(next).clone();
                }
            }
        }
        if pieces > 2 {
            return Err(Error::ContractViolation(format!("job {j} split into {pieces} pieces")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_forest;
    use crate::model::{MachineType, MachineTypeTable};
    use crate::oneshot::{optimal_oneshot, SolverLimits};
    use crate::rational::{frac, int, pow8};
    use proptest::prelude::*;

    #[test]
    fn one_job_one_machine() {
        let types = MachineTypeTable::new(vec![MachineType::new(int(2), int(8))]).unwrap();
        let forest = build_forest(&types);
        let ctx = OneShot::new(&types, &forest, vec![int(1)]).unwrap();
        let w = MachineConfiguration::from_counts(vec![int(1)]);
        assert_eq!(r_star(&ctx, &w).unwrap(), vec![int(4)]);
    }

    #[test]
    fn exact_fill_matches_cost() {
        let types = MachineTypeTable::new(vec![MachineType::new(int(2), int(8))]).unwrap();
        let forest = build_forest(&types);
        let ctx = OneShot::new(&types, &forest, vec![int(1), int(1)]).unwrap();
        let w = MachineConfiguration::from_counts(vec![int(1)]);
        let r = r_star(&ctx, &w).unwrap();
        assert_eq!(r, vec![int(4), int(4)]);
        assert_eq!(&r[0] + &r[1], w.cost(&types));
    }

    #[test]
    fn infeasible_is_rejected() {
        let types = MachineTypeTable::new(vec![MachineType::new(int(2), int(8))]).unwrap();
        let forest = build_forest(&types);
        let ctx = OneShot::new(&types, &forest, vec![int(2), int(1)]).unwrap();
        let w = MachineConfiguration::from_counts(vec![int(1)]);
        assert!(r_star(&ctx, &w).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn lower_bound_per_group_and_total(
            raw in prop::collection::vec(1i64..=40, 1..=6),
            extra in prop::collection::vec(0i64..=2, 3),
        ) {
            let types = MachineTypeTable::new(vec![
                MachineType::new(int(1), pow8(0)),
                MachineType::new(int(3), pow8(1)),
                MachineType::new(int(10), pow8(2)),
            ]).unwrap();
            let forest = build_forest(&types);
            let sizes: Vec<Rat> = raw.into_iter().map(|x| frac(x, 4)).collect();
            let ctx = OneShot::new(&types, &forest, sizes).unwrap();
            let mut w = optimal_oneshot(&ctx, SolverLimits::default()).unwrap();
            for (z, e) in extra.iter().enumerate() {
                w.add(z + 1, &int(*e));
            }
            let r = r_star(&ctx, &w).unwrap();
            let total = r.iter().fold(zero(), |a, x| a + x);
            prop_assert!(total <= w.cost(&types));
            let top = w.highest_used().unwrap();
            for &z in forest.t_set(top) {
                for j in ctx.tree_jobs(z) {
                    prop_assert!(r[j] >= &ctx.sizes()[j] * types.ratio(z));
                }
            }
        }
    }
}
