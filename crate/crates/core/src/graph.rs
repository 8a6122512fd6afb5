//! The cost-per-capacity forest over machine types.
//!
//! Type `i` points to `p(i)`, the lowest type above `i` whose cost per capacity
//! unit `r/g` is strictly smaller. Roots are treated as children of a virtual
//! node when computing siblings, so all roots are siblings of each other.

use crate::check::Violation;
use crate::error::{Error, Result};
use crate::model::MachineTypeTable;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostCapacityForest {
    n: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    roots: Vec<usize>,
    subtree: Vec<Vec<usize>>,
    t_set: Vec<Vec<usize>>,
}

/// All derived node sets of one type, as returned by [`CostCapacityForest::node_sets`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSets {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub ancestors: Vec<usize>,
    pub subtree: Vec<usize>,
    pub lowest: usize,
    pub younger_siblings: Vec<usize>,
    pub elder_siblings: Vec<usize>,
    pub t_set: Vec<usize>,
}

pub fn build_forest(types: &MachineTypeTable) -> CostCapacityForest {
    let n = types.len();
    let mut parent = vec![None; n + 1];
    for i in 1..=n {
        let ri = types.ratio(i);
        parent[i] = (i + 1..=n).find(|&j| types.ratio(j) < ri);
    }
    CostCapacityForest::from_parents(parent).expect("definition yields a forest")
}

impl CostCapacityForest {
    /// Builds a forest from explicit parent links (`parents[0]` is ignored).
    ///
    /// Links only need to point upward; they need not follow the cost rule,
    /// which lets tests feed in corrupted forests.
    pub fn from_parents(mut parent: Vec<Option<usize>>) -> Result<Self> {
        if parent.len() < 2 {
            return Err(Error::Validation("forest needs at least one type".into()));
        }
        let n = parent.len() - 1;
        parent[0] = None;
        for (i, p) in parent.iter().enumerate().skip(1) {
            if let Some(p) = *p {
                if p <= i || p > n {
                    return Err(Error::Validation(format!(
                        "parent of {i} must be a higher type in range, got {p}"
                    )));
                }
            }
        }
        let mut children = vec![Vec::new(); n + 1];
        let mut roots = Vec::new();
        for i in 1..=n {
            match parent[i] {
                Some(p) => children[p].push(i),
                None => roots.push(i),
            }
        }

        let mut subtree = vec![Vec::new(); n + 1];
        for i in 1..=n {
            let mut stack = vec![i];
            let mut nodes = Vec::new();
            while let Some(x) = stack.pop() {
                nodes.push(x);
                stack.extend(children[x].iter().copied());
            }
            nodes.sort_unstable();
            subtree[i] = nodes;
        }

        let mut forest = CostCapacityForest {
            n,
            parent,
            children,
            roots,
            subtree,
            t_set: vec![Vec::new(); n + 1],
        };
        for i in 1..=n {
            let mut t = vec![i];
            for z in forest.ancestors(i) {
                t.extend(forest.younger_siblings(z));
            }
            t.sort_unstable();
            t.dedup();
            forest.t_set[i] = t;
        }
        Ok(forest)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn check_index(&self, i: usize) -> Result<usize> {
        if (1..=self.n).contains(&i) {
            Ok(i)
        } else {
            Err(Error::TypeOutOfRange(i))
        }
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn is_root(&self, i: usize) -> bool {
        self.parent[i].is_none()
    }

    /// `P(i)`: `i` and its ancestors, ascending.
    pub fn ancestors(&self, i: usize) -> Vec<usize> {
        let mut out = vec![i];
        let mut cur = i;
        while let Some(p) = self.parent[cur] {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Whether `a` lies in `P(i)`.
    pub fn is_ancestor_or_self(&self, a: usize, i: usize) -> bool {
        let mut cur = Some(i);
        while let Some(x) = cur {
            if x == a {
                return true;
            }
            if x > a {
                return false;
            }
            cur = self.parent[x];
        }
        false
    }

    /// `A_i`: the subtree rooted at `i`, ascending.
    pub fn subtree(&self, i: usize) -> &[usize] {
        &self.subtree[i]
    }

    pub fn in_subtree(&self, x: usize, i: usize) -> bool {
        self.is_ancestor_or_self(i, x)
    }

    /// `v(i) = min A_i`.
    pub fn lowest(&self, i: usize) -> usize {
        self.subtree[i][0]
    }

    fn siblings(&self, i: usize) -> &[usize] {
        match self.parent[i] {
            Some(p) => &self.children[p],
            None => &self.roots,
        }
    }

    /// `y(i)`: siblings with a lower index.
    pub fn younger_siblings(&self, i: usize) -> Vec<usize> {
        self.siblings(i).iter().copied().filter(|&s| s < i).collect()
    }

    /// `e(i)`: siblings with a higher index.
    pub fn elder_siblings(&self, i: usize) -> Vec<usize> {
        self.siblings(i).iter().copied().filter(|&s| s > i).collect()
    }

    /// `T(i) = {i} ∪ y(z) for every z in P(i)`, ascending.
    pub fn t_set(&self, i: usize) -> &[usize] {
        &self.t_set[i]
    }

    pub fn node_sets(&self, i: usize) -> Result<NodeSets> {
        let i = self.check_index(i)?;
        Ok(NodeSets {
            parent: self.parent(i),
            children: self.children(i).to_vec(),
            ancestors: self.ancestors(i),
            subtree: self.subtree(i).to_vec(),
            lowest: self.lowest(i),
            younger_siblings: self.younger_siblings(i),
            elder_siblings: self.elder_siblings(i),
            t_set: self.t_set(i).to_vec(),
        })
    }

    /// Graphviz rendering; edges point from child to parent.
    pub fn to_dot(&self, types: &MachineTypeTable) -> String {
        use crate::rational::to_text;
        let mut out = String::from("digraph cost_capacity {\n  rankdir=BT;\n");
        for i in 1..=self.n {
            out.push_str(&format!(
                "  t{i} [label=\"{i}\\ng={}\\nr={}\"];\n",
                to_text(types.capacity(i)),
                to_text(types.rate(i))
            ));
        }
        for i in 1..=self.n {
            if let Some(p) = self.parent[i] {
                out.push_str(&format!("  t{i} -> t{p};\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Checks the structural facts the algorithms rely on: forest shape and the
/// parent rule, consecutive subtrees, non-decreasing `r/g` along `T(k)`, the
/// partition of `1..=k` by `T(k)`, and the split of `T(k0)` by an ancestor's
/// subtree.
pub fn check_structure(forest: &CostCapacityForest, types: &MachineTypeTable) -> Vec<Violation> {
    let mut bad = Vec::new();
    let n = forest.len();
    macro_rules! fail {
        ($check:expr, $($arg:tt)*) => {
            bad.push(Violation::new($check, format!($($arg)*)))
        };
    }

    if n != types.len() {
        fail!("forest", "forest has {n} nodes, table has {}", types.len());
        return bad;
    }

    // Forest shape and the defining parent rule.
    for i in 1..=n {
        let expected = (i + 1..=n).find(|&j| types.ratio(j) < types.ratio(i));
        if forest.parent(i) != expected {
            fail!("forest", "p({i}) = {:?}, rule gives {:?}", forest.parent(i), expected,);
        }
        let chain = forest.ancestors(i);
        if chain.len() > n || !forest.is_root(*chain.last().unwrap()) {
            fail!("forest", "ancestor chain of {i} does not end at a root");
        }
    }

    // Consecutive subtrees.
    for k in 1..=n {
        let expected: Vec<usize> = (forest.lowest(k)..=k).collect();
        if forest.subtree(k) != expected.as_slice() {
            fail!("consecutive", "A_{k} = {:?} is not {:?}", forest.subtree(k), expected);
        }
    }

    // Ratios along T(k) are non-decreasing.
    for k in 1..=n {
        let t = forest.t_set(k);
        for w in t.windows(2) {
            if types.ratio(w[0]) > types.ratio(w[1]) {
                fail!("t-ratio", "r/g decreases from {} to {} in T({k})", w[0], w[1]);
            }
        }
    }

    // {A_z : z in T(k)} partitions 1..=k, with consecutive blocks.
    for k in 1..=n {
        let t = forest.t_set(k);
        let mut covered: Vec<usize> = t.iter().flat_map(|&z| forest.subtree(z).iter().copied()).collect();
        covered.sort_unstable();
        if covered != (1..=k).collect::<Vec<_>>() {
            fail!("partition", "subtrees over T({k}) cover {covered:?}");
        }
        if t.first().map(|&z| forest.lowest(z)) != Some(1) {
            fail!("partition", "lowest member of T({k}) does not start at 1");
        }
        for w in t.windows(2) {
            if w[0] + 1 != forest.lowest(w[1]) {
                fail!(
                    "partition",
                    "T({k}) neighbours {} and {} are not adjacent blocks",
                    w[0],
                    w[1],
                );
            }
        }
    }

    // Splitting T(k0) by the subtree of an ancestor k1.
    for k0 in 1..=n {
        let t0 = forest.t_set(k0);
        for k1 in forest.ancestors(k0) {
            let inside: Vec<usize> = t0.iter().copied().filter(|&z| forest.in_subtree(z, k1)).collect();
            let Some(&z0) = inside.first() else {
                fail!("ancestor-split", "T({k0}) misses the subtree of {k1}");
                continue;
            };
            let upper: Vec<usize> = t0.iter().copied().filter(|&z| z >= z0).collect();
            let outside: Vec<usize> = t0.iter().copied().filter(|&z| !forest.in_subtree(z, k1)).collect();
            let lower: Vec<usize> = t0.iter().copied().filter(|&z| z < z0).collect();
            if inside != upper || outside != lower {
                fail!("ancestor-split", "T({k0}) is not split at {z0} by the subtree of {k1}",);
            }
        }
    }
    bad
}
