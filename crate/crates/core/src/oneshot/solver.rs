//! Exact minimum-cost machine configuration by depth-first search.
//!
//! Counts are chosen from the highest type down, each in ascending order, so
//! the first optimum reached is the lexicographically smallest one when read
//! from the highest type. Sizes, capacities and rates are scaled to integers
//! up front so the inner loop only touches `BigInt`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{MachineConfiguration, OneShot};
use crate::error::{Error, Result};
use crate::rational::Rat;

pub const DEFAULT_NODE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverLimits {
    pub max_nodes: u64,
}

impl Default for SolverLimits {
    fn default() -> Self {
        SolverLimits {
            max_nodes: DEFAULT_NODE_LIMIT,
        }
    }
}

/// Minimum-cost integral configuration satisfying every suffix constraint.
///
/// An empty job set yields the all-zero configuration.
pub fn optimal_oneshot(ctx: &OneShot, limits: SolverLimits) -> Result<MachineConfiguration> {
    let n = ctx.n_types();
    if ctx.is_empty() {
        return Ok(MachineConfiguration::zeros(n));
    }
    let search = Search::new(ctx, limits);
    let counts = search.run()?;
    let w = MachineConfiguration::from_counts(counts.into_iter().map(|c| Rat::from_integer(c.into())).collect());
    debug_assert!(w.is_feasible(ctx));
    Ok(w)
}

fn lcm_of_denoms<'a>(xs: impl Iterator<Item = &'a Rat>) -> BigInt {
    xs.fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

fn scale(x: &Rat, by: &BigInt) -> BigInt {
    let v = x * Rat::from_integer(by.clone());
    debug_assert!(v.is_integer());
    v.to_integer()
}

fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    if !a.is_positive() {
        return BigInt::zero();
    }
    a.div_ceil(b)
}

struct Search {
    n: usize,
    cap: Vec<BigInt>,
    rate: Vec<BigInt>,
    suffix: Vec<BigInt>,
    /// `cheapest[i][z]`: the type in `i..z` with the lowest `rate/cap`.
    cheapest: Vec<Vec<usize>>,
    max_nodes: u64,
    nodes: u64,
    current: Vec<u64>,
    best_cost: Option<BigInt>,
    best: Vec<u64>,
}

impl Search {
    fn new(ctx: &OneShot, limits: SolverLimits) -> Self {
        let n = ctx.n_types();
        let types = ctx.types;
        let size_scale = lcm_of_denoms(types.indices().map(|z| types.capacity(z)).chain(ctx.sizes().iter()));
        let rate_scale = lcm_of_denoms(types.indices().map(|z| types.rate(z)));
        let mut cap = vec![BigInt::zero(); n + 1];
        let mut rate = vec![BigInt::zero(); n + 1];
        let mut suffix = vec![BigInt::zero(); n + 2];
        for z in 1..=n {
            cap[z] = scale(types.capacity(z), &size_scale);
            rate[z] = scale(types.rate(z), &rate_scale);
            suffix[z] = scale(ctx.suffix_size(z), &size_scale);
        }
        let mut cheapest = vec![vec![0usize; n + 1]; n + 1];
        for i in 1..=n {
            let mut best = i;
            for z in i + 1..=n {
                cheapest[i][z] = best;
                let (a, b) = (&rate[z] * &cap[best], &rate[best] * &cap[z]);
                if a < b {
                    best = z;
                }
            }
        }
        Search {
            n,
            cap,
            rate,
            suffix,
            cheapest,
            max_nodes: limits.max_nodes,
            nodes: 0,
            current: vec![0; n + 1],
            best_cost: None,
            best: vec![0; n + 1],
        }
    }

    fn run(mut self) -> Result<Vec<u64>> {
        let n = self.n;
        self.descend(n, BigInt::zero(), BigInt::zero())?;
        Ok(self.best[1..].to_vec())
    }

    /// Whether the cheapest completion of levels below `z` cannot beat the incumbent.
    fn bound_cuts(&self, z: usize, cap_above: &BigInt, cost: &BigInt) -> bool {
        let Some(best) = &self.best_cost else {
            return false;
        };
        if cost >= best {
            return true;
        }
        let slack = best - cost;
        for i in 1..z {
            let deficit = &self.suffix[i] - cap_above;
            if !deficit.is_positive() {
                continue;
            }
            let j = self.cheapest[i][z];
            // cost + deficit * rate_j / cap_j >= best
            if &deficit * &self.rate[j] >= &slack * &self.cap[j] {
                return true;
            }
        }
        false
    }

    fn descend(&mut self, z: usize, cap_above: BigInt, cost: BigInt) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::SearchSpaceExceeded { limit: self.max_nodes });
        }
        let lo = ceil_div(&(&self.suffix[z] - &cap_above), &self.cap[z]);
        if z == 1 {
            let total = &cost + &lo * &self.rate[1];
            if self.best_cost.as_ref().is_none_or(|b| &total < b) {
                self.current[1] = to_u64(&lo);
                self.best = self.current.clone();
                self.best_cost = Some(total);
            }
            return Ok(());
        }
        let hi = ceil_div(&(&self.suffix[1] - &cap_above), &self.cap[z]).max(lo.clone());
        let mut w = lo;
        while w <= hi {
            let new_cost = &cost + &w * &self.rate[z];
            if let Some(best) = &self.best_cost {
                if &new_cost >= best {
                    break;
                }
            }
            let new_cap = &cap_above + &w * &self.cap[z];
            if !self.bound_cuts(z, &new_cap, &new_cost) {
                self.current[z] = to_u64(&w);
                self.descend(z - 1, new_cap, new_cost)?;
            }
            w += 1;
        }
        self.current[z] = 0;
        Ok(())
    }
}

fn to_u64(x: &BigInt) -> u64 {
    u64::try_from(x).expect("machine count fits in u64")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_forest;
    use crate::model::{example_table, MachineType, MachineTypeTable};
    use crate::rational::{frac, int, zero};
    use proptest::prelude::*;

    fn solve(types: &MachineTypeTable, sizes: Vec<Rat>) -> MachineConfiguration {
        let forest = build_forest(types);
        let ctx = OneShot::new(types, &forest, sizes).unwrap();
        optimal_oneshot(&ctx, SolverLimits::default()).unwrap()
    }

    fn two_types() -> MachineTypeTable {
        MachineTypeTable::new(vec![MachineType::new(int(1), int(1)), MachineType::new(int(2), int(8))]).unwrap()
    }

    #[test]
    fn single_small_job_uses_lowest_type() {
        let types = two_types();
        let w = solve(&types, vec![frac(1, 2)]);
        assert_eq!(w.counts(), &[int(1), int(0)]);
        assert_eq!(w.cost(&types), int(1));
    }

    #[test]
    fn single_job_of_size_twelve_on_example_table() {
        let types = example_table();
        let w = solve(&types, vec![int(12)]);
        assert_eq!(w.get(9), &int(1));
        assert_eq!(w.cost(&types), int(64));
    }

    #[test]
    fn three_unit_jobs_prefer_small_machines() {
        let types = two_types();
        let w = solve(&types, vec![int(1), int(1), int(1)]);
        assert_eq!(w.counts(), &[int(3), int(0)]);
        assert_eq!(w.cost(&types), int(3));
    }

    #[test]
    fn empty_set_is_free() {
        let types = two_types();
        let w = solve(&types, vec![]);
        assert_eq!(w.cost(&types), zero());
    }

    #[test]
    fn node_limit_is_reported() {
        let types = example_table();
        let forest = build_forest(&types);
        let ctx = OneShot::new(&types, &forest, vec![int(12), int(40), frac(1, 3)]).unwrap();
        let err = optimal_oneshot(&ctx, SolverLimits { max_nodes: 2 }).unwrap_err();
        assert!(matches!(err, Error::SearchSpaceExceeded { limit: 2 }));
    }

    /// Plain enumeration of every count vector up to a bound.
    fn brute_force(ctx: &OneShot, bound: u64) -> Rat {
        let n = ctx.n_types();
        let mut best: Option<Rat> = None;
        let mut counts = vec![0u64; n];
        loop {
            let w = MachineConfiguration::from_counts(counts.iter().map(|&c| Rat::from_integer(c.into())).collect());
            if w.is_feasible(ctx) {
                let c = w.cost(ctx.types);
                if best.as_ref().is_none_or(|b| &c < b) {
                    best = Some(c);
                }
            }
            let mut k = 0;
            loop {
                if k == n {
                    return best.unwrap();
                }
                counts[k] += 1;
                if counts[k] <= bound {
                    break;
                }
                counts[k] = 0;
                k += 1;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_brute_force(
            sizes in prop::collection::vec(1i64..=12, 1..=5),
            low_caps in prop::sample::subsequence(vec![1i64, 2, 3, 5], 2),
            exps in prop::sample::subsequence(vec![0i32, 1, 2, 3], 3),
        ) {
            let caps = [low_caps[0], low_caps[1], 8];
            let entries = caps.iter().zip(&exps)
                .map(|(&g, &e)| MachineType::new(int(g), crate::rational::pow8(e)))
                .collect();
            let types = MachineTypeTable::new(entries).unwrap();
            let forest = build_forest(&types);
            let sizes: Vec<Rat> = sizes.into_iter().map(|s| frac(s, 3)).collect();
            let ctx = OneShot::new(&types, &forest, sizes).unwrap();
            let w = optimal_oneshot(&ctx, SolverLimits::default()).unwrap();
            prop_assert!(w.is_feasible(&ctx));
            prop_assert_eq!(w.cost(&types), brute_force(&ctx, 20));
        }
    }
}
