//! Per-job cost charging whose charges never grow as the job set grows.

use serde::Serialize;

use super::{z_diamond, OneShot};
use crate::error::Result;
use crate::rational::{one, zero, Rat};

/// Which rule priced the group of jobs under the top type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeCase {
    /// The top tree fills at least one top machine: charged by size.
    Proportional,
    /// Child groups alone would cost more than one top machine: children are
    /// pulled toward the top type's unit price until the group costs exactly
    /// one top machine.
    Interpolated,
    /// Jobs of exactly the top type are inflated so the group costs exactly
    /// one top machine.
    Inflated,
    /// No job has exactly the top type and the children cost at most one top
    /// machine: the group is charged the children's own cost, which may fall
    /// short of one top machine.
    ChildrenOnly,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChargeMap {
    /// Charge per job, in input order.
    pub charges: Vec<Rat>,
    pub top: usize,
    pub case: ChargeCase,
    /// Total charged to jobs in the tree of `top`.
    pub top_group_total: Rat,
}

impl ChargeMap {
    pub fn total(&self) -> Rat {
        self.charges.iter().fold(zero(), |acc, c| acc + c)
    }

    /// True when the top group was charged less than one top machine.
    pub fn is_short(&self, ctx: &OneShot) -> bool {
        self.case == ChargeCase::ChildrenOnly && &self.top_group_total < ctx.types.rate(self.top)
    }
}

pub fn charge(ctx: &OneShot) -> Result<ChargeMap> {
    ctx.require_nonempty()?;
    let (types, forest) = (ctx.types, ctx.forest);
    let top = z_diamond(ctx)?;
    let sizes = ctx.sizes();
    let exact = ctx.exact_types();
    let mut charges = vec![zero(); sizes.len()];

    // Group of each job: the member of T(top) whose subtree holds its exact type.
    let t = forest.t_set(top);
    let group_of = |j: usize| -> usize {
        *t.iter()
            .find(|&&z| forest.in_subtree(exact[j], z))
            .expect("T(top) subtrees cover every exact type up to top")
    };

    for (j, s) in sizes.iter().enumerate() {
        let g = group_of(j);
        if g != top {
            charges[j] = s * types.ratio(g);
        }
    }

    let top_ratio = types.ratio(top);
    let top_rate = types.rate(top);
    let top_jobs: Vec<usize> = (0..sizes.len()).filter(|&j| group_of(j) == top).collect();
    let top_size = ctx.tree_size(top);

    // Child of `top` whose subtree holds job j, if any.
    let child_of = |j: usize| -> Option<usize> {
        forest
            .children(top)
            .iter()
            .copied()
            .find(|&x| forest.in_subtree(exact[j], x))
    };

    let case = if &top_size >= types.capacity(top) {
        for &j in &top_jobs {
            charges[j] = &sizes[j] * &top_ratio;
        }
        ChargeCase::Proportional
    } else {
        let mut c = zero();
        let mut exact_cost = zero();
        let mut excess = zero();
        for &j in &top_jobs {
            match child_of(j) {
                Some(x) => {
                    let rx = types.ratio(x);
                    c += &sizes[j] * &rx;
                    excess += &sizes[j] * (&rx - &top_ratio);
                }
                None => {
                    let v = &sizes[j] * &top_ratio;
                    c += &v;
                    exact_cost += v;
                }
            }
        }
        if &c > top_rate {
            let alpha = (&c - top_rate) / &excess;
            for &j in &top_jobs {
                charges[j] = match child_of(j) {
                    Some(x) => {
                        let rx = types.ratio(x);
                        &sizes[j] * (&rx - (&rx - &top_ratio) * &alpha)
                    }
                    None => &sizes[j] * &top_ratio,
                };
            }
            ChargeCase::Interpolated
        } else if exact_cost > zero() {
            let beta = (top_rate - &c) / &exact_cost;
            for &j in &top_jobs {
                charges[j] = match child_of(j) {
                    Some(x) => &sizes[j] * types.ratio(x),
                    None => &sizes[j] * &top_ratio * (one() + &beta),
                };
            }
            ChargeCase::Inflated
        } else {
            for &j in &top_jobs {
                let x = child_of(j).expect("no exact-top jobs in this case");
                charges[j] = &sizes[j] * types.ratio(x);
            }
            ChargeCase::ChildrenOnly
        }
    };

    let top_group_total = top_jobs.iter().fold(zero(), |acc, &j| acc + &charges[j]);
    Ok(ChargeMap {
        charges,
        top,
        case,
        top_group_total,
    })
}
