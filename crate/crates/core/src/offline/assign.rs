//! Splits jobs into per-type sets, highest type first.

use crate::graph::CostCapacityForest;
use crate::model::{Instance, Timeline};
use crate::rational::{ceil, frac, zero, Rat};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeAssignment {
    /// Type chosen for each job.
    pub type_of: Vec<usize>,
    /// Jobs given to each type (index 0 unused), ascending.
    pub assigned: Vec<Vec<usize>>,
    /// Jobs of each type's tree still unassigned when that type was processed.
    pub residual: Vec<Vec<usize>>,
    /// Per type and segment: whether a machine of the type pays off there.
    pub effective: Vec<Vec<bool>>,
    /// Per type and segment: cost of serving the residual jobs on the children
    /// instead, rounded up per child.
    pub child_cost: Vec<Vec<Rat>>,
}

impl TypeAssignment {
    /// Residual jobs whose exact type is `z` itself.
    pub fn residual_exact(&self, inst: &Instance, z: usize) -> Vec<usize> {
        self.residual[z]
            .iter()
            .copied()
            .filter(|&j| inst.exact_type(j) == z)
            .collect()
    }
}

/// Processes types from highest to lowest. Jobs of exactly type `z` always stay
/// on `z`; a job from deeper in the tree stays on `z` only if every segment
/// of its interval is cost-effective for `z`: some exact-`z` job is active,
/// or serving the residual load on the children would cost at least a third
/// of one type-`z` machine.
pub fn assign_types(inst: &Instance, forest: &CostCapacityForest) -> TypeAssignment {
    let types = inst.types();
    let n = types.len();
    let timeline = inst.timeline();
    let segments = timeline.segments();
    let n_jobs = inst.jobs().len();
    let ranges: Vec<_> = inst
        .jobs()
        .iter()
        .map(|j| timeline.segment_range(&j.start, &j.end))
        .collect();

    let mut type_of = vec![0usize; n_jobs];
    let mut assigned = vec![Vec::new(); n + 1];
    let mut residual = vec![Vec::new(); n + 1];
    let mut effective = vec![Vec::new(); n + 1];
    let mut child_cost = vec![Vec::new(); n + 1];
    let third = frac(1, 3);

    for z in (1..=n).rev() {
        let pool: Vec<usize> = (0..n_jobs)
            .filter(|&j| type_of[j] == 0 && forest.in_subtree(inst.exact_type(j), z))
            .collect();
        let mut exact_active = vec![false; segments.len()];
        // Load per child subtree per segment.
        let children = forest.children(z);
        let mut load = vec![vec![zero(); segments.len()]; children.len()];
        for &j in &pool {
            let m = inst.exact_type(j);
            if m == z {
                for k in ranges[j].clone() {
                    exact_active[k] = true;
                }
            } else if let Some(ci) = children.iter().position(|&x| forest.in_subtree(m, x)) {
                for k in ranges[j].clone() {
                    load[ci][k] += &inst.job(j).size;
                }
            }
        }
        let threshold = types.rate(z) * &third;
        let mut eff = vec![false; segments.len()];
        let mut costs = vec![zero(); segments.len()];
        for k in 0..segments.len() {
            let c = children.iter().enumerate().fold(zero(), |acc, (ci, &x)| {
                acc + ceil(&(&load[ci][k] / types.capacity(x))) * types.rate(x)
            });
            eff[k] = exact_active[k] || c >= threshold;
            costs[k] = c;
        }
        for &j in &pool {
            if inst.exact_type(j) == z || ranges[j].clone().all(|k| eff[k]) {
                type_of[j] = z;
                assigned[z].push(j);
            }
        }
        residual[z] = pool;
        effective[z] = eff;
        child_cost[z] = costs;
    }
    TypeAssignment {
        type_of,
        assigned,
        residual,
        effective,
        child_cost,
    }
}

/// Total size of `jobs` active on segment `k` of `timeline`.
pub(crate) fn size_on_segment(inst: &Instance, jobs: &[usize], timeline: &Timeline, k: usize) -> Rat {
    let t = &timeline.breakpoints()[k];
    jobs.iter()
        .filter(|&&j| inst.job(j).is_active_at(t))
        .fold(zero(), |acc, &j| acc + &inst.job(j).size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_forest;
    use crate::model::{Job, MachineType, MachineTypeTable};
    use crate::rational::int;

    /// Two types with p(1) = 2: ratios 8 and 1.
    fn tree_types() -> MachineTypeTable {
        MachineTypeTable::new(vec![
            MachineType::new(int(1), int(8)),
            MachineType::new(int(64), int(64)),
        ])
        .unwrap()
    }

    fn jobs_of(sizes_and_times: &[(i64, i64, i64)]) -> Vec<Job> {
        sizes_and_times
            .iter()
            .enumerate()
            .map(|(i, &(s, a, b))| Job::new(format!("j{i}"), frac(s, 2), int(a), int(b)).unwrap())
            .collect()
    }

    #[test]
    fn single_job_stays_on_exact_type() {
        let types = tree_types();
        let forest = build_forest(&types);
        let inst = Instance::new(jobs_of(&[(1, 0, 4)]), types).unwrap();
        let a = assign_types(&inst, &forest);
        assert_eq!(a.type_of, vec![1]);
    }

    #[test]
    fn heavy_child_load_moves_up() {
        // Six half-size type-1 jobs over [0, 4): ceil(3) * 8 = 24 >= 64 / 3.
        let types = tree_types();
        let forest = build_forest(&types);
        let inst = Instance::new(jobs_of(&[(1, 0, 4); 6]), types).unwrap();
        let a = assign_types(&inst, &forest);
        assert!(a.type_of.iter().all(|&z| z == 2));
        assert_eq!(a.child_cost[2][0], int(24));
    }

    #[test]
    fn light_child_load_falls_through() {
        // Two half-size jobs: ceil(1) * 8 = 8 < 64 / 3.
        let types = tree_types();
        let forest = build_forest(&types);
        let inst = Instance::new(jobs_of(&[(1, 0, 4), (1, 2, 6)]), types).unwrap();
        let a = assign_types(&inst, &forest);
        assert!(a.type_of.iter().all(|&z| z == 1));
    }

    #[test]
    fn partial_coverage_falls_through() {
        // Heavy load on [0, 2) only; the long job also covers [2, 8).
        let types = tree_types();
        let forest = build_forest(&types);
        let mut spec = vec![(1, 0, 2); 6];
        spec.push((1, 0, 8));
        let inst = Instance::new(jobs_of(&spec), types).unwrap();
        let a = assign_types(&inst, &forest);
        assert_eq!(a.type_of[6], 1);
        assert!(a.type_of[..6].iter().all(|&z| z == 2));
    }

    #[test]
    fn job_order_does_not_matter() {
        let types = tree_types();
        let forest = build_forest(&types);
        let mut spec = vec![(1, 0, 2); 6];
        spec.push((1, 0, 8));
        spec.push((3, 1, 3));
        let jobs = jobs_of(&spec);
        let a = assign_types(&Instance::new(jobs.clone(), types.clone()).unwrap(), &forest);
        let mut rev = jobs.clone();
        rev.reverse();
        let b = assign_types(&Instance::new(rev.clone(), types).unwrap(), &forest);
        for (i, job) in jobs.iter().enumerate() {
            let k = rev.iter().position(|r| r.id == job.id).unwrap();
            assert_eq!(a.type_of[i], b.type_of[k]);
        }
    }
}
