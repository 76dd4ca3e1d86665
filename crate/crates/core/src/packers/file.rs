use serde::{Deserialize, Serialize};

use super::{check_cover, Algorithm, GroupKind, GroupTag, Packing};
use crate::error::{Error, Result};
use crate::prob::Item;

/// On-disk form of a packing: the algorithm and each bin's class and member
/// indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackingFile {
    pub algorithm: Algorithm,
    pub bins: Vec<BinRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRecord {
    /// `null` for FFR bins.
    pub group: Option<GroupKind>,
    /// Subgroup index, set for standard bins only.
    pub k: Option<u64>,
    pub items: Vec<usize>,
}

impl From<&Packing> for PackingFile {
    fn from(p: &Packing) -> Self {
        PackingFile {
            algorithm: p.algorithm,
            bins: p
                .bins
                .iter()
                .map(|b| BinRecord {
                    group: b.group.map(GroupTag::kind),
                    k: b.group.and_then(GroupTag::k),
                    items: b.item_ids.clone(),
                })
                .collect(),
        }
    }
}

impl PackingFile {
    pub fn bins_used(&self) -> usize {
        self.bins.len()
    }

    /// Members of each bin, after checking that the bins partition `items`
    /// and carry consistent class tags.
    pub fn bin_items(&self, items: &[Item]) -> Result<Vec<Vec<Item>>> {
        for (b, rec) in self.bins.iter().enumerate() {
            match (self.algorithm, rec.group) {
                (Algorithm::Ffr, None) => {}
                (Algorithm::Ffr, Some(_)) => {
                    return Err(Error::Mismatch(format!("bin {b}: FFR bins carry no group")))
                }
                (_, None) => return Err(Error::Mismatch(format!("bin {b}: missing group"))),
                (_, Some(kind)) => {
                    GroupTag::from_parts(kind, rec.k)
                        .map_err(|e| Error::Mismatch(format!("bin {b}: {e}")))?;
                }
            }
        }
        check_cover(self.bins.iter().map(|r| r.items.as_slice()), items.len())?;
        Ok(self
            .bins
            .iter()
            .map(|r| r.items.iter().map(|&i| items[i]).collect())
            .collect())
    }
}
