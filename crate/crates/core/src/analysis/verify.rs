use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::packers::Packing;
use crate::prob::{mix_seed, overflow_auto, Item, OverflowEstimate};

/// Slack on `alpha` for exactly computed overflow probabilities.
pub const EXACT_PASS_TOL: f64 = 1e-9;
/// Monte Carlo estimates pass when `value ≤ alpha + MC_SIGMAS · stderr`.
pub const MC_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct BinVerdict {
    pub bin: usize,
    pub estimate: OverflowEstimate,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub per_bin: Vec<BinVerdict>,
    pub alpha: f64,
    /// Largest per-bin overflow estimate (0 for an empty packing).
    pub worst: f64,
    pub all_pass: bool,
}

impl VerifyReport {
    /// Mean of the per-bin overflow estimates.
    pub fn average_overflow(&self) -> f64 {
        if self.per_bin.is_empty() {
            0.0
        } else {
            self.per_bin.iter().map(|v| v.estimate.value).sum::<f64>() / self.per_bin.len() as f64
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &BinVerdict> {
        self.per_bin.iter().filter(|v| !v.pass)
    }
}

fn passes(est: &OverflowEstimate, alpha: f64) -> bool {
    if est.method.is_exact() {
        est.value <= alpha + EXACT_PASS_TOL
    } else {
        est.value <= alpha + MC_SIGMAS * est.stderr
    }
}

/// Checks every bin's overflow probability against `alpha`: exact
/// enumeration up to 20 items, Monte Carlo with a per-bin sub-seed beyond.
pub fn verify_bins(bins: &[Vec<Item>], alpha: f64, mc_trials: u64, seed: u64) -> VerifyReport {
    let per_bin: Vec<BinVerdict> = bins
        .par_iter()
        .enumerate()
        .map(|(b, members)| {
            let estimate = overflow_auto(members, mc_trials, mix_seed(seed, b as u64));
            BinVerdict {
                bin: b,
                pass: passes(&estimate, alpha),
                estimate,
            }
        })
        .collect();
    let worst = per_bin.iter().map(|v| v.estimate.value).fold(0.0, f64::max);
    let all_pass = per_bin.iter().all(|v| v.pass);
    VerifyReport {
        per_bin,
        alpha,
        worst,
        all_pass,
    }
}

/// Viability check of a packing of `items`; deterministic given `seed`.
pub fn verify_packing(
    packing: &Packing,
    items: &[Item],
    alpha: f64,
    mc_trials: u64,
    seed: u64,
) -> Result<VerifyReport> {
    if packing.item_count != items.len() {
        return Err(Error::Mismatch(format!(
            "packing covers {} items, instance has {}",
            packing.item_count,
            items.len()
        )));
    }
    packing.check_partition()?;
    let bins: Vec<Vec<Item>> = packing
        .bins
        .iter()
        .map(|b| b.items(items).collect())
        .collect();
    Ok(verify_bins(&bins, alpha, mc_trials, seed))
}
