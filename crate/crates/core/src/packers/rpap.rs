use std::collections::BTreeMap;
use std::sync::Arc;

use super::{
    classify_at, rpap_weight, Algorithm, Bin, FirstFitTree, GroupTag, PackerConfig, Packing, Params,
};
use crate::error::Result;
use crate::prob::Item;

#[derive(Default)]
struct GroupBins {
    tree: FirstFitTree,
    bins: Vec<Bin>,
}

/// Refined Poisson Approximation Packing.
///
/// Each item is classified, converted to its RPAP weight and placed by First
/// Fit among the unit-capacity bins of its own class. O(log n) per item.
pub fn pack_rpap(items: &[Item], params: &Params) -> Result<Packing> {
    pack_rpap_shared(items, Arc::new(params.clone()))
}

pub(crate) fn pack_rpap_shared(items: &[Item], params: Arc<Params>) -> Result<Packing> {
    let mut groups: BTreeMap<GroupTag, GroupBins> = BTreeMap::new();
    for (idx, item) in items.iter().enumerate() {
        let tag = classify_at(idx, item, &params)?;
        let w = rpap_weight(item, tag, &params);
        let g = groups.entry(tag).or_default();
        let (b, opened) = g.tree.place(w);
        if opened {
            g.bins.push(Bin::new(Some(tag), None));
        }
        let bin = &mut g.bins[b];
        bin.item_ids.push(idx);
        bin.weight_sum += w;
    }
    Ok(Packing {
        algorithm: Algorithm::Rpap,
        config: PackerConfig::Rpap { params },
        bins: groups.into_values().flat_map(|g| g.bins).collect(),
        item_count: items.len(),
    })
}
