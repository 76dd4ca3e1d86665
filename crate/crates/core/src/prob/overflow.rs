use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rng_from_seed, Item, CAPACITY_TOL};
use crate::error::{Error, Result};

/// Largest bin that [`overflow_exact`] will enumerate (2^20 patterns).
pub const EXACT_ENUM_LIMIT: usize = 20;

/// Monte Carlo trial count used when a caller has no preference.
pub const MC_DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    ExactEnum,
    Lattice,
    MonteCarlo,
}

impl EstimateMethod {
    pub fn is_exact(self) -> bool {
        !matches!(self, EstimateMethod::MonteCarlo)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EstimateMethod::ExactEnum => "exact-enum",
            EstimateMethod::Lattice => "lattice",
            EstimateMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// An overflow probability together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverflowEstimate {
    pub value: f64,
    pub method: EstimateMethod,
    /// Zero for exact methods.
    pub trials: u64,
    /// Standard error of `value`; zero for exact methods.
    pub stderr: f64,
}

impl OverflowEstimate {
    pub fn exact(value: f64, method: EstimateMethod) -> Self {
        OverflowEstimate {
            value: value.clamp(0.0, 1.0),
            method,
            trials: 0,
            stderr: 0.0,
        }
    }
}

/// `P(Σ X_i > 1)` by enumerating all activation patterns.
///
/// Branches whose partial load already exceeds capacity, or can no longer
/// reach it, are closed early, so typical bins cost far fewer than 2^n steps.
pub fn overflow_exact(items: &[Item]) -> Result<OverflowEstimate> {
    if items.len() > EXACT_ENUM_LIMIT {
        return Err(Error::TooManyItems {
            count: items.len(),
            limit: EXACT_ENUM_LIMIT,
        });
    }
    // remaining[i] = Σ_{j ≥ i} s_j
    let mut remaining = vec![0.0; items.len() + 1];
    for i in (0..items.len()).rev() {
        remaining[i] = remaining[i + 1] + items[i].s();
    }
    let value = enumerate(items, &remaining, 0, 0.0, 1.0);
    Ok(OverflowEstimate::exact(value, EstimateMethod::ExactEnum))
}

fn enumerate(items: &[Item], remaining: &[f64], idx: usize, load: f64, prob: f64) -> f64 {
    if load > 1.0 + CAPACITY_TOL {
        return prob;
    }
    if idx == items.len() || load + remaining[idx] <= 1.0 + CAPACITY_TOL || prob == 0.0 {
        return 0.0;
    }
    let it = items[idx];
    let on = enumerate(items, remaining, idx + 1, load + it.s(), prob * it.p());
    let off = if it.p() < 1.0 {
        enumerate(items, remaining, idx + 1, load, prob * (1.0 - it.p()))
    } else {
        0.0
    };
    on + off
}

/// Monte Carlo estimate of `P(Σ X_i > 1)`; a pure function of
/// `(items, trials, seed)`.
pub fn overflow_mc(items: &[Item], trials: u64, seed: u64) -> OverflowEstimate {
    assert!(trials >= 1, "at least one trial is required");
    let total: f64 = items.iter().map(Item::s).sum();
    let mut hits = 0u64;
    if total > 1.0 + CAPACITY_TOL {
        let mut rng = rng_from_seed(seed);
        for _ in 0..trials {
            let mut load = 0.0;
            for it in items {
                if rng.random::<f64>() < it.p() {
                    load += it.s();
                }
            }
            if load > 1.0 + CAPACITY_TOL {
                hits += 1;
            }
        }
    }
    let v = hits as f64 / trials as f64;
    OverflowEstimate {
        value: v,
        method: EstimateMethod::MonteCarlo,
        trials,
        stderr: (v * (1.0 - v) / trials as f64).sqrt(),
    }
}

/// Exact enumeration for small bins, Monte Carlo above [`EXACT_ENUM_LIMIT`].
pub fn overflow_auto(items: &[Item], trials: u64, seed: u64) -> OverflowEstimate {
    match overflow_exact(items) {
        Ok(est) => est,
        Err(_) => overflow_mc(items, trials, seed),
    }
}
