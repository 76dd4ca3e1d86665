use super::{round_up_steps, Algorithm, Bin, PackerConfig, Packing};
use crate::error::{Error, Result};
use crate::prob::{grid_steps, Item, LatticeDist, LoadLattice, CAPACITY_TOL};

/// First Fit Rounded: sizes are rounded up to multiples of `eps` and an item
/// joins the first bin whose exact lattice overflow stays within `alpha`.
///
/// Rounding is upward, so a bin that is viable on the lattice is viable for
/// the true sizes as well.
pub fn pack_ffr(items: &[Item], alpha: f64, eps: f64) -> Result<Packing> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha {alpha} not in (0, 1)")));
    }
    let n = grid_steps(eps)?;
    let stream = items
        .iter()
        .map(|it| (it.p(), round_up_steps(it.s(), n) as u128));
    let bins = pack_ffr_steps(stream, alpha, || LatticeDist::with_steps(n))
        .into_iter()
        .map(|(ids, lattice)| Bin {
            group: None,
            item_ids: ids,
            weight_sum: 0.0,
            lattice: Some(lattice),
        })
        .collect();
    Ok(Packing {
        algorithm: Algorithm::Ffr,
        config: PackerConfig::Ffr { alpha, eps },
        bins,
        item_count: items.len(),
    })
}

/// First Fit over items already expressed as `(p, steps)` on a lattice.
///
/// Generic over the lattice representation so that grids too fine for a
/// dense array (exact dyadic sizes) can use [`crate::prob::SparseLattice`].
pub fn pack_ffr_steps<L, I, F>(stream: I, alpha: f64, mut new_lattice: F) -> Vec<(Vec<usize>, L)>
where
    L: LoadLattice,
    I: IntoIterator<Item = (f64, u128)>,
    F: FnMut() -> L,
{
    let mut bins: Vec<(Vec<usize>, L)> = Vec::new();
    for (idx, (p, steps)) in stream.into_iter().enumerate() {
        let slot = bins
            .iter()
            .position(|(_, lat)| lat.overflow_if_added(p, steps) <= alpha + CAPACITY_TOL);
        let b = match slot {
            Some(b) => b,
            None => {
                bins.push((Vec::new(), new_lattice()));
                bins.len() - 1
            }
        };
        bins[b].0.push(idx);
        bins[b].1.add(p, steps);
    }
    bins
}
