//! The fractional alternative configuration with a fixed top type, and the
//! choice of the lowest "decent" top type.

use super::{MachineConfiguration, OneShot};
use crate::error::{Error, Result};
use crate::rational::{ceil, zero, Rat};

/// Alternative configuration using only types in `T(top)`.
///
/// `top` machines are counted up to hold the whole tree of `top`; their spare
/// capacity absorbs the other `T(top)` groups from the highest down, and the
/// first group that does not fit (and every group below it) gets just enough
/// fractional machines of its own type.
pub fn cn_config(ctx: &OneShot, top: usize) -> Result<MachineConfiguration> {
    ctx.require_nonempty()?;
    ctx.forest.check_index(top)?;
    if !ctx.forest.is_ancestor_or_self(top, ctx.k0()) {
        return Err(Error::Validation(format!(
            "top type {top} is not on the ancestor chain of {}",
            ctx.k0()
        )));
    }
    let types = ctx.types;
    let mut out = MachineConfiguration::zeros(ctx.n_types());
    let top_count = ceil(&(ctx.tree_size(top) / types.capacity(top)));
    let top_capacity = &top_count * types.capacity(top);
    out.set(top, top_count);

    let mut acc = ctx.tree_size(top);
    let mut spilled = false;
    for &i in ctx.forest.t_set(top).iter().rev().skip(1) {
        let group = ctx.tree_size(i);
        if spilled {
            out.set(i, group / types.capacity(i));
            continue;
        }
        acc += &group;
        if acc > top_capacity {
            out.set(i, (&acc - &top_capacity) / types.capacity(i));
            spilled = true;
        }
    }
    Ok(out)
}

/// Whether no strict ancestor's subtree share of `cn` costs more than one
/// machine of that ancestor.
pub fn is_decent(ctx: &OneShot, top: usize, cn: &MachineConfiguration) -> bool {
    let t = ctx.forest.t_set(top);
    ctx.forest.ancestors(top).into_iter().skip(1).all(|anc| {
        let share = t
            .iter()
            .filter(|&&z| ctx.forest.in_subtree(z, anc))
            .fold(zero(), |acc: Rat, &z| acc + cn.get(z) * ctx.types.rate(z));
        &share <= ctx.types.rate(anc)
    })
}

/// Lowest type on the ancestor chain of `k0` whose configuration is decent.
pub fn z_diamond(ctx: &OneShot) -> Result<usize> {
    ctx.require_nonempty()?;
    for top in ctx.forest.ancestors(ctx.k0()) {
        let cn = cn_config(ctx, top)?;
        if is_decent(ctx, top, &cn) {
            return Ok(top);
        }
    }
    unreachable!("the root of the chain is always decent")
}

/// Cost of `cn` restricted to `T(top)`.
pub fn cn_cost(ctx: &OneShot, top: usize, cn: &MachineConfiguration) -> Rat {
    ctx.forest
        .t_set(top)
        .iter()
        .fold(zero(), |acc, &z| acc + cn.get(z) * ctx.types.rate(z))
}
