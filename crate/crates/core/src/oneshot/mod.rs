//! Scheduling at a single instant: divisible jobs, per-piece capacity limits.
//!
//! A [`OneShot`] bundles one job multiset with the machine table and forest
//! and caches the per-type size sums every operation here needs.

mod canonical;
mod charge;
mod cn;
mod rstar;
mod solver;

pub use canonical::{canonicalize, check_canonical};
pub use charge::{charge, ChargeCase, ChargeMap};
pub use cn::{cn_config, cn_cost, is_decent, z_diamond};
pub use rstar::r_star;
pub use solver::{optimal_oneshot, SolverLimits, DEFAULT_NODE_LIMIT};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::CostCapacityForest;
use crate::model::MachineTypeTable;
use crate::rational::{ceil, floor, zero, Rat};

/// One job multiset at a single instant.
#[derive(Debug, Clone)]
pub struct OneShot<'a> {
    pub types: &'a MachineTypeTable,
    pub forest: &'a CostCapacityForest,
    sizes: Vec<Rat>,
    exact: Vec<usize>,
    /// Total size of jobs whose exact type is `z`.
    exact_sum: Vec<Rat>,
    /// Total size of jobs whose exact type is `>= z`; entry `n + 1` is zero.
    suffix: Vec<Rat>,
    k0: usize,
}

impl<'a> OneShot<'a> {
    pub fn new(types: &'a MachineTypeTable, forest: &'a CostCapacityForest, sizes: Vec<Rat>) -> Result<Self> {
        let n = types.len();
        let mut exact = Vec::with_capacity(sizes.len());
        let mut exact_sum = vec![zero(); n + 1];
        for s in &sizes {
            let m = types.exact_machine_type(s)?;
            exact_sum[m] += s;
            exact.push(m);
        }
        let mut suffix = vec![zero(); n + 2];
        for z in (1..=n).rev() {
            suffix[z] = &suffix[z + 1] + &exact_sum[z];
        }
        let k0 = exact.iter().copied().max().unwrap_or(0);
        Ok(OneShot {
            types,
            forest,
            sizes,
            exact,
            exact_sum,
            suffix,
            k0,
        })
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    pub fn sizes(&self) -> &[Rat] {
        &self.sizes
    }

    pub fn exact_types(&self) -> &[usize] {
        &self.exact
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Highest exact type; `0` for an empty job set.
    pub fn k0(&self) -> usize {
        self.k0
    }

    /// `S(H_{>=i})`.
    pub fn suffix_size(&self, i: usize) -> &Rat {
        &self.suffix[i]
    }

    pub fn total_size(&self) -> &Rat {
        &self.suffix[1]
    }

    /// Total size of jobs whose exact type is exactly `z`.
    pub fn exact_size(&self, z: usize) -> &Rat {
        &self.exact_sum[z]
    }

    /// `S(H_z)`: total size of jobs whose exact type is in the subtree of `z`.
    pub fn tree_size(&self, z: usize) -> Rat {
        self.forest
            .subtree(z)
            .iter()
            .fold(zero(), |acc, &i| acc + &self.exact_sum[i])
    }

    /// Indices of the jobs in `H_z`.
    pub fn tree_jobs(&self, z: usize) -> Vec<usize> {
        (0..self.sizes.len())
            .filter(|&j| self.forest.in_subtree(self.exact[j], z))
            .collect()
    }

    pub fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::Undefined("one-shot operation on an empty job set"))
        } else {
            Ok(())
        }
    }
}

/// Per-type machine counts `w(z)`, indexed `1..=|M|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MachineConfiguration {
    #[serde(serialize_with = "serialize_counts")]
    counts: Vec<Rat>,
}

fn serialize_counts<S: serde::Serializer>(counts: &[Rat], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(counts.len().saturating_sub(1)))?;
    for c in &counts[1..] {
        seq.serialize_element(&crate::rational::to_text(c))?;
    }
    seq.end()
}

impl MachineConfiguration {
    pub fn zeros(n: usize) -> Self {
        MachineConfiguration {
            counts: vec![zero(); n + 1],
        }
    }

    /// From counts for types `1..=n` in order.
    pub fn from_counts(counts: Vec<Rat>) -> Self {
        let mut all = Vec::with_capacity(counts.len() + 1);
        all.push(zero());
        all.extend(counts);
        MachineConfiguration { counts: all }
    }

    pub fn n_types(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn get(&self, z: usize) -> &Rat {
        &self.counts[z]
    }

    pub fn set(&mut self, z: usize, value: Rat) {
        self.counts[z] = value;
    }

    pub fn add(&mut self, z: usize, delta: &Rat) {
        self.counts[z] += delta;
    }

    /// Counts for types `1..=n`.
    pub fn counts(&self) -> &[Rat] {
        &self.counts[1..]
    }

    pub fn cost(&self, types: &MachineTypeTable) -> Rat {
        types
            .indices()
            .fold(zero(), |acc, z| acc + &self.counts[z] * types.rate(z))
    }

    /// `max{z : w(z) > 0}`, or `None` when nothing is used.
    pub fn highest_used(&self) -> Option<usize> {
        (1..self.counts.len()).rev().find(|&z| self.counts[z] > zero())
    }

    pub fn is_integral(&self) -> bool {
        self.counts.iter().all(|c| c.is_integer())
    }

    /// First constraint index `i` with `S(H_{>=i}) > sum_{z>=i} w(z) g_z`.
    pub fn first_violation(&self, ctx: &OneShot) -> Option<usize> {
        let mut cap = zero();
        for i in (1..=ctx.n_types()).rev() {
            cap += &self.counts[i] * ctx.types.capacity(i);
            if ctx.suffix_size(i) > &cap {
                return Some(i);
            }
        }
        None
    }

    pub fn is_feasible(&self, ctx: &OneShot) -> bool {
        self.counts.iter().all(|c| c >= &zero()) && self.first_violation(ctx).is_none()
    }

    /// Ceiling of every count.
    pub fn rounded_up(&self) -> Self {
        MachineConfiguration {
            counts: self.counts.iter().map(ceil).collect(),
        }
    }

    pub fn rounded_down(&self) -> Self {
        MachineConfiguration {
            counts: self.counts.iter().map(floor).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_forest;
    use crate::model::MachineType;
    use crate::rational::int;

    #[test]
    fn context_sums() {
        let types =
            MachineTypeTable::new(vec![MachineType::new(int(1), int(1)), MachineType::new(int(2), int(8))]).unwrap();
        let forest = build_forest(&types);
        let ctx = OneShot::new(&types, &forest, vec![int(2), int(1), int(1)]).unwrap();
        assert_eq!(ctx.k0(), 2);
        assert_eq!(ctx.suffix_size(1), &int(4));
        assert_eq!(ctx.suffix_size(2), &int(2));
        assert_eq!(ctx.tree_size(1), int(2));
        let w = MachineConfiguration::from_counts(vec![int(2), int(1)]);
        assert!(w.is_feasible(&ctx));
        assert_eq!(w.cost(&types), int(10));
        let w = MachineConfiguration::from_counts(vec![int(1), int(1)]);
        assert_eq!(w.first_violation(&ctx), Some(1));
    }
}
