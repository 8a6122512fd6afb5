//! Seeded random instances.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Job, MachineType, MachineTypeTable};
use crate::rational::{frac, int, one, pow8, zero, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeDistribution {
    /// Multiples of `g_max / 64` in `(0, g_max]`.
    Uniform,
    /// Pick a type uniformly, then a size in `(g_{m-1}, g_m]`.
    #[default]
    Clustered,
    /// Like `Clustered`, but type `m` is drawn with weight `2^-m` and sizes
    /// sit in the upper half of the band, so low types need many machines.
    Skewed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSpec {
    pub count: usize,
    /// Inclusive range of the integer factor between consecutive capacities.
    pub growth: (u32, u32),
    /// Inclusive range of the power-of-8 exponent step between consecutive rates.
    pub rate_step: (u32, u32),
}

impl Default for TableSpec {
    fn default() -> Self {
        TableSpec {
            count: 4,
            growth: (2, 16),
            rate_step: (1, 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub jobs: usize,
    /// Longest over shortest job length; at least one.
    #[serde(with = "crate::rational::serde_rat")]
    pub mu: Rat,
    pub sizes: SizeDistribution,
    /// Jobs start at multiples of 1/2 in `[0, horizon)`.
    pub horizon: u32,
    pub table: TableSpec,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            seed: 1,
            jobs: 10,
            mu: int(2),
            sizes: SizeDistribution::Clustered,
            horizon: 10,
            table: TableSpec::default(),
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let t = &self.table;
        if self.mu < one() {
            return Err(Error::Validation(format!("mu target {} is below 1", self.mu)));
        }
        if t.count == 0 {
            return Err(Error::Validation("at least one machine type is needed".into()));
        }
        if t.growth.0 < 2 || t.growth.0 > t.growth.1 {
            return Err(Error::Validation(format!(
                "capacity growth range {:?} is invalid",
                t.growth
            )));
        }
        if t.rate_step.0 < 1 || t.rate_step.0 > t.rate_step.1 {
            return Err(Error::Validation(format!(
                "rate step range {:?} is invalid",
                t.rate_step
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Validation("horizon must be positive".into()));
        }
        Ok(())
    }
}

/// An instance and, for clustered sizes, the type each size was drawn for.
#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    pub intended: Option<Vec<usize>>,
}

pub fn generate(spec: &GeneratorSpec) -> Result<Instance> {
    generate_detailed(spec).map(|g| g.instance)
}

pub fn generate_detailed(spec: &GeneratorSpec) -> Result<Generated> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let types = random_table(&mut rng, &spec.table)?;
    let g_max = types.max_capacity().clone();
    let mut jobs = Vec::with_capacity(spec.jobs);
    let mut intended = Vec::new();
    for i in 0..spec.jobs {
        let size = match spec.sizes {
            SizeDistribution::Uniform => &g_max * frac(rng.gen_range(1..=64), 64),
            SizeDistribution::Clustered => {
                let m = rng.gen_range(1..=types.len());
                intended.push(m);
                let lo = if m == 1 { zero() } else { types.capacity(m - 1).clone() };
                let hi = types.capacity(m);
                &lo + (hi - &lo) * frac(rng.gen_range(1..=8), 8)
            }
            SizeDistribution::Skewed => {
                let n = types.len() as u32;
                let roll = rng.gen_range(0..(1u64 << n) - 1);
                // m = 1 takes half of the weight, m = 2 a quarter, and so on.
                let m = (1..=n).find(|&m| roll < (1u64 << n) - (1u64 << (n - m))).unwrap_or(n) as usize;
                intended.push(m);
                let lo = if m == 1 { zero() } else { types.capacity(m - 1).clone() };
                let hi = types.capacity(m);
                let mid = (&lo + hi) / int(2);
                &mid + (hi - &mid) * frac(rng.gen_range(1..=8), 8)
            }
        };
        // The first two jobs pin the shortest and longest lengths.
        let len = match i {
            0 => one(),
            1 => spec.mu.clone(),
            _ => one() + (&spec.mu - one()) * frac(rng.gen_range(0..=8), 8),
        };
        let start = frac(rng.gen_range(0..2 * spec.horizon as i64), 2);
        let end = &start + len;
        jobs.push(Job::new(format!("j{i:03}"), size, start, end)?);
    }
    let instance = Instance::new(jobs, types)?;
    let intended = (spec.sizes != SizeDistribution::Uniform).then_some(intended);
    Ok(Generated { instance, intended })
}

/// Random table with power-of-8 rates and growing capacities.
pub fn random_table(rng: &mut impl Rng, spec: &TableSpec) -> Result<MachineTypeTable> {
    let mut entries = Vec::with_capacity(spec.count);
    let mut cap = one();
    let mut exp = 0i32;
    for i in 0..spec.count {
        if i > 0 {
            cap *= int(rng.gen_range(spec.growth.0..=spec.growth.1) as i64);
            exp += rng.gen_range(spec.rate_step.0..=spec.rate_step.1) as i32;
        }
        entries.push(MachineType::new(cap.clone(), pow8(exp)));
    }
    MachineTypeTable::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_instance() {
        let spec = GeneratorSpec::default();
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = GeneratorSpec {
            seed: 2,
            ..spec.clone()
        };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn mu_one_gives_equal_lengths() {
        let spec = GeneratorSpec {
            mu: one(),
            jobs: 20,
            ..Default::default()
        };
        let inst = generate(&spec).unwrap();
        assert!(inst.jobs().iter().all(|j| j.len() == one()));
        assert_eq!(inst.mu().unwrap(), one());
    }

    #[test]
    fn mu_target_is_met() {
        let spec = GeneratorSpec {
            mu: frac(7, 2),
            ..Default::default()
        };
        assert_eq!(generate(&spec).unwrap().mu().unwrap(), frac(7, 2));
    }

    #[test]
    fn clustered_sizes_hit_their_type() {
        for seed in 0..20 {
            let spec = GeneratorSpec {
                seed,
                ..Default::default()
            };
            let g = generate_detailed(&spec).unwrap();
            assert_eq!(g.intended.as_deref(), Some(g.instance.exact_types()));
        }
    }

    #[test]
    fn skewed_sizes_favour_low_types() {
        let spec = GeneratorSpec {
            sizes: SizeDistribution::Skewed,
            jobs: 200,
            ..Default::default()
        };
        let g = generate_detailed(&spec).unwrap();
        assert_eq!(g.intended.as_deref(), Some(g.instance.exact_types()));
        let low = g.instance.exact_types().iter().filter(|&&m| m == 1).count();
        let high = g.instance.exact_types().iter().filter(|&&m| m == 4).count();
        assert!(low > 3 * high);
    }

    #[test]
    fn bad_specs_are_rejected() {
        let spec = GeneratorSpec {
            mu: frac(1, 2),
            ..Default::default()
        };
        assert!(generate(&spec).is_err());
        let mut spec = GeneratorSpec::default();
        spec.table.growth = (1, 4);
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn uniform_sizes_stay_below_the_largest_capacity() {
        let spec = GeneratorSpec {
            sizes: SizeDistribution::Uniform,
            jobs: 30,
            ..Default::default()
        };
        let g = generate_detailed(&spec).unwrap();
        assert!(g.intended.is_none());
        let max = g.instance.types().max_capacity().clone();
        assert!(g.instance.jobs().iter().all(|j| j.size > zero() && j.size <= max));
    }

    #[test]
    fn rates_are_powers_of_eight() {
        for seed in 0..10 {
            let inst = generate(&GeneratorSpec {
                seed,
                ..Default::default()
            })
            .unwrap();
            assert!(inst.types().rates_are_powers_of_eight());
        }
    }
}
