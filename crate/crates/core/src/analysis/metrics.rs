use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::VerifyReport;
use crate::error::{Error, Result};
use crate::packers::Packing;
use crate::prob::Item;

/// How bin counts are made comparable across datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// Bins divided by the average expected load of one item.
    PerItemMean,
    /// Bins divided by the total expected load of the instance.
    TotalMean,
}

impl Normalization {
    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::PerItemMean => "per-item-mean",
            Normalization::TotalMean => "total-mean",
        }
    }

    pub fn other(self) -> Self {
        match self {
            Normalization::PerItemMean => Normalization::TotalMean,
            Normalization::TotalMean => Normalization::PerItemMean,
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-item-mean" => Ok(Normalization::PerItemMean),
            "total-mean" => Ok(Normalization::TotalMean),
            other => Err(Error::config(format!("unknown normalization {other:?}"))),
        }
    }
}

/// Normalized bin count; 0 when the instance carries no expected load.
pub fn normalize(bins: usize, items: &[Item], mode: Normalization) -> f64 {
    let total: f64 = items.iter().map(Item::mean).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let denom = match mode {
        Normalization::PerItemMean => total / items.len() as f64,
        Normalization::TotalMean => total,
    };
    bins as f64 / denom
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub bins_used: usize,
    pub normalization: Normalization,
    pub normalized: f64,
    /// Mean per-bin overflow estimate.
    pub avg_overflow: f64,
}

pub fn metrics(
    packing: &Packing,
    items: &[Item],
    report: &VerifyReport,
    mode: Normalization,
) -> Metrics {
    Metrics {
        bins_used: packing.bins_used(),
        normalization: mode,
        normalized: normalize(packing.bins_used(), items, mode),
        avg_overflow: report.average_overflow(),
    }
}
