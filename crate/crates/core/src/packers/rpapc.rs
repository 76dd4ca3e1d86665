use std::collections::BTreeMap;
use std::sync::Arc;

use super::{
    classify_at, round_up_steps, rpap_weight, Algorithm, Bin, FirstFitTree, GroupTag, PackerConfig,
    Packing, Params,
};
use crate::error::Result;
use crate::prob::{grid_steps, Item, LatticeDist, CAPACITY_TOL};

#[derive(Default)]
struct GroupBins {
    tree: FirstFitTree,
    bins: Vec<Bin>,
}

/// RPAP grouping with a two-way fit test: an item joins the first bin of its
/// group that admits it either by RPAP weight (`weight_sum + w ≤ 1`) or by the
/// `eps`-lattice overflow test (`≤ alpha`).
///
/// Both states are updated on every placement. A bin admitted past weight 1
/// by the lattice test can only take further items through the lattice test.
/// New bins open only when no bin of the group passes either test, so the
/// Any-Fit property, and with it RPAP's approximation bound, is preserved.
pub fn pack_rpapc(items: &[Item], params: &Params, eps: f64) -> Result<Packing> {
    pack_rpapc_shared(items, Arc::new(params.clone()), eps)
}

pub(crate) fn pack_rpapc_shared(items: &[Item], params: Arc<Params>, eps: f64) -> Result<Packing> {
    let n = grid_steps(eps)?;
    let alpha = params.alpha();
    let mut groups: BTreeMap<GroupTag, GroupBins> = BTreeMap::new();
    for (idx, item) in items.iter().enumerate() {
        let tag = classify_at(idx, item, &params)?;
        let w = rpap_weight(item, tag, &params);
        let k = round_up_steps(item.s(), n);
        let g = groups.entry(tag).or_default();

        // Bins before the first weight fit have already failed the weight
        // test; only the lattice can admit the item there.
        let by_weight = g.tree.first_fit(w);
        let scan_end = by_weight.unwrap_or(g.bins.len());
        let by_lattice = g.bins[..scan_end].iter().position(|b| {
            let lat = b.lattice.as_ref().expect("rpapc bins carry a lattice");
            lat.overflow_if_added(item.p(), k) <= alpha + CAPACITY_TOL
        });
        let b = match by_lattice.or(by_weight) {
            Some(b) => b,
            None => {
                let b = g.tree.open_bin();
                g.bins
                    .push(Bin::new(Some(tag), Some(LatticeDist::with_steps(n))));
                debug_assert_eq!(b, g.bins.len() - 1);
                b
            }
        };
        g.tree.consume(b, w);
        let bin = &mut g.bins[b];
        bin.item_ids.push(idx);
        bin.weight_sum += w;
        bin.lattice
            .as_mut()
            .expect("rpapc bins carry a lattice")
            .add(item.p(), k);
    }
    Ok(Packing {
        algorithm: Algorithm::Rpapc,
        config: PackerConfig::Rpapc { params, eps },
        bins: groups.into_values().flat_map(|g| g.bins).collect(),
        item_count: items.len(),
    })
}
