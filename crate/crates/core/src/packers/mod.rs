//! Online packers: RPAP, FFR and RPAPC.
//!
//! All three are single-pass and never revise a placement. RPAP and RPAPC
//! route every item to one of three classes (confident, minor, standard-k)
//! and pack each class into its own bins; FFR packs everything into one list.

mod anyfit;
mod ffr;
mod file;
mod params;
mod rpap;
mod rpapc;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use anyfit::{anyfit_pack, FirstFitTree};
pub use ffr::{pack_ffr, pack_ffr_steps};
pub use file::{BinRecord, PackingFile};
pub(crate) use params::reciprocal_floor;
pub use params::{minor_budget, Params, ParamsSummary};
pub use rpap::pack_rpap;
pub use rpapc::pack_rpapc;

use crate::error::{Error, Result};
use crate::prob::{ln_odds, Item, LatticeDist, CAPACITY_TOL};

/// Grid step used by FFR and RPAPC when none is given.
pub const DEFAULT_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Confident,
    Minor,
    Standard,
}

/// Class of an item, and of the bins holding that class. Orders as
/// confident < minor < standard by increasing `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupTag {
    /// `p > p_max`: packed by size.
    Confident,
    /// `s ≤ s_min`, `p ≤ p_max`: packed by scaled mean.
    Minor,
    /// Sizes in `(1/(k+1), 1/k]`: packed by Poisson rate.
    Standard(u64),
}

impl GroupTag {
    pub fn kind(self) -> GroupKind {
        match self {
            GroupTag::Confident => GroupKind::Confident,
            GroupTag::Minor => GroupKind::Minor,
            GroupTag::Standard(_) => GroupKind::Standard,
        }
    }

    pub fn k(self) -> Option<u64> {
        match self {
            GroupTag::Standard(k) => Some(k),
            _ => None,
        }
    }

    pub fn from_parts(kind: GroupKind, k: Option<u64>) -> Result<Self> {
        match (kind, k) {
            (GroupKind::Confident, None) => Ok(GroupTag::Confident),
            (GroupKind::Minor, None) => Ok(GroupTag::Minor),
            (GroupKind::Standard, Some(k)) => Ok(GroupTag::Standard(k)),
            (GroupKind::Standard, None) => Err(Error::config("standard group needs k")),
            (_, Some(_)) => Err(Error::config("only standard groups carry k")),
        }
    }
}

impl Serialize for GroupTag {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupTag::Confident => f.write_str("confident"),
            GroupTag::Minor => f.write_str("minor"),
            GroupTag::Standard(k) => write!(f, "standard-{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rpap,
    Rpapc,
    Ffr,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Rpap, Algorithm::Rpapc, Algorithm::Ffr];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Rpap => "rpap",
            Algorithm::Rpapc => "rpapc",
            Algorithm::Ffr => "ffr",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rpap" => Ok(Algorithm::Rpap),
            "rpapc" => Ok(Algorithm::Rpapc),
            "ffr" => Ok(Algorithm::Ffr),
            other => Err(Error::config(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// Settings a packing was produced with.
#[derive(Debug, Clone)]
pub enum PackerConfig {
    Rpap { params: Arc<Params> },
    Rpapc { params: Arc<Params>, eps: f64 },
    Ffr { alpha: f64, eps: f64 },
}

impl PackerConfig {
    pub fn alpha(&self) -> f64 {
        match self {
            PackerConfig::Rpap { params } | PackerConfig::Rpapc { params, .. } => params.alpha(),
            PackerConfig::Ffr { alpha, .. } => *alpha,
        }
    }

    pub fn params(&self) -> Option<&Params> {
        match self {
            PackerConfig::Rpap { params } | PackerConfig::Rpapc { params, .. } => Some(params),
            PackerConfig::Ffr { .. } => None,
        }
    }

    pub fn eps(&self) -> Option<f64> {
        match self {
            PackerConfig::Rpap { .. } => None,
            PackerConfig::Rpapc { eps, .. } | PackerConfig::Ffr { eps, .. } => Some(*eps),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bin {
    /// `None` for FFR, which does not classify items.
    pub group: Option<GroupTag>,
    /// Instance indices in arrival order.
    pub item_ids: Vec<usize>,
    /// Sum of RPAP weights of the members (zero for FFR).
    pub weight_sum: f64,
    /// Rounded load distribution (FFR and RPAPC).
    pub lattice: Option<LatticeDist>,
}

impl Bin {
    fn new(group: Option<GroupTag>, lattice: Option<LatticeDist>) -> Self {
        Bin {
            group,
            item_ids: Vec::new(),
            weight_sum: 0.0,
            lattice,
        }
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    /// Members of this bin, looked up in `items`.
    pub fn items<'a>(&'a self, items: &'a [Item]) -> impl Iterator<Item = Item> + 'a {
        self.item_ids.iter().map(move |&i| items[i])
    }

    /// `Σ p_i s_i` over the members.
    pub fn mean_load(&self, items: &[Item]) -> f64 {
        self.items(items).map(|it| it.mean()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Packing {
    pub algorithm: Algorithm,
    pub config: PackerConfig,
    /// Grouped contiguously by tag; within a group, in opening order.
    pub bins: Vec<Bin>,
    pub item_count: usize,
}

impl Packing {
    pub fn bins_used(&self) -> usize {
        self.bins.len()
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha()
    }

    /// Drops the per-bin lattices, which dominate memory for fine grids.
    pub fn strip_lattices(&mut self) {
        for b in &mut self.bins {
            b.lattice = None;
        }
    }

    /// Checks that every index in `0..item_count` sits in exactly one bin and
    /// that bins of one group are contiguous.
    pub fn check_partition(&self) -> Result<()> {
        check_cover(
            self.bins.iter().map(|b| b.item_ids.as_slice()),
            self.item_count,
        )?;
        let mut closed = HashSet::new();
        for w in self.bins.windows(2) {
            if w[0].group != w[1].group {
                closed.insert(w[0].group);
                if closed.contains(&w[1].group) {
                    return Err(Error::Mismatch(format!(
                        "bins of group {:?} are not contiguous",
                        w[1].group
                    )));
                }
            }
        }
        Ok(())
    }

    /// Contiguous runs of bins sharing a group tag.
    pub fn groups(&self) -> Vec<(Option<GroupTag>, &[Bin])> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.bins.len() {
            if i == self.bins.len() || self.bins[i].group != self.bins[start].group {
                out.push((self.bins[start].group, &self.bins[start..i]));
                start = i;
            }
        }
        out
    }
}

/// Checks that the bins partition `0..item_count`.
pub(crate) fn check_cover<'a>(
    bins: impl Iterator<Item = &'a [usize]>,
    item_count: usize,
) -> Result<()> {
    let mut seen = vec![false; item_count];
    for (b, ids) in bins.enumerate() {
        for &i in ids {
            if i >= item_count {
                return Err(Error::Mismatch(format!(
                    "bin {b} holds item {i}, but the instance has {item_count} items"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Mismatch(format!("item {i} is packed twice")));
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(Error::Mismatch(format!("item {i} is not packed")));
    }
    Ok(())
}

/// Class of `item` under `params`.
pub fn classify(item: &Item, params: &Params) -> Result<GroupTag> {
    if item.s() > params.s_max() + CAPACITY_TOL {
        return Err(Error::domain(format!(
            "size {} exceeds s_max = {}",
            item.s(),
            params.s_max()
        )));
    }
    if item.p() > params.p_max() {
        Ok(GroupTag::Confident)
    } else if item.s() <= params.s_min() {
        Ok(GroupTag::Minor)
    } else {
        let k = params::reciprocal_floor(item.s()).clamp(params.k_min(), params.k_max());
        Ok(GroupTag::Standard(k))
    }
}

pub(crate) fn classify_at(index: usize, item: &Item, params: &Params) -> Result<GroupTag> {
    classify(item, params).map_err(|e| Error::Item {
        index,
        reason: match e {
            Error::Domain(msg) => msg,
            other => other.to_string(),
        },
    })
}

/// RPAP packing weight of an item already classified as `tag`.
///
/// Confident items weigh their size, minor items their mean over `μ_0`, and
/// standard items their Poisson rate `ln(1/(1-p))` over the subgroup budget.
pub fn rpap_weight(item: &Item, tag: GroupTag, params: &Params) -> f64 {
    match tag {
        GroupTag::Confident => item.s(),
        GroupTag::Minor => item.mean() / params.mu_0(),
        GroupTag::Standard(k) => {
            let rate = ln_odds(item.p()).expect("standard items have p ≤ p_max < 1");
            rate / params.lambda(k)
        }
    }
}

/// Number of `eps` grid steps an item of size `s` is rounded up to.
pub fn round_up_steps(s: f64, n_steps: usize) -> usize {
    ((s * n_steps as f64 - 1e-9).ceil() as usize).max(1)
}
