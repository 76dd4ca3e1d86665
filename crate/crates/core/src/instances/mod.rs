//! Instance generation, trace fitting and serialization.

mod fit;
mod io;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::prob::{rng_from_seed, Item};

pub use fit::{
    fit_batch, fit_bernoulli, l1_distance, FitResult, KEEP_FRACTION, QUANTILE_CANDIDATES,
};
pub use io::{from_json_str, read_instance, to_json_string, write_instance, SCHEMA_VERSION};

/// An ordered item sequence together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub items: Vec<Item>,
    pub s_max: f64,
    pub label: String,
    pub seed: u64,
    pub meta: BTreeMap<String, Value>,
}

impl Instance {
    /// Checks `s ≤ s_max` for every item.
    pub fn new(items: Vec<Item>, s_max: f64, label: impl Into<String>, seed: u64) -> Result<Self> {
        if !(s_max > 0.0 && s_max <= 1.0) {
            return Err(Error::config(format!("s_max {s_max} not in (0, 1]")));
        }
        if let Some(i) = items.iter().position(|it| it.s() > s_max) {
            return Err(Error::Item {
                index: i,
                reason: format!("size {} exceeds s_max {s_max}", items[i].s()),
            });
        }
        Ok(Instance {
            items,
            s_max,
            label: label.into(),
            seed,
            meta: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.meta.insert(key.to_owned(), value.into());
        self
    }
}

/// Uniform on `(0, 1]`.
fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn check_s_max(s_max: f64) -> Result<()> {
    if s_max > 0.0 && s_max <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("s_max {s_max} not in (0, 1]")))
    }
}

/// `s ~ U(0, s_max]`, `p ~ U(0, 1]`.
pub fn gen_uniform(n: usize, s_max: f64, seed: u64) -> Result<Instance> {
    check_s_max(s_max)?;
    let mut rng = rng_from_seed(seed);
    let items = (0..n)
        .map(|_| {
            let s = (open_unit(&mut rng) * s_max).max(f64::MIN_POSITIVE);
            let p = open_unit(&mut rng);
            Item::new(p, s)
        })
        .collect::<Result<_>>()?;
    Instance::new(items, s_max, "uniform", seed)
}

pub const NORMAL_MEAN: f64 = 0.1;
pub const NORMAL_SD: f64 = 1.0;

/// Sizes from `N(0.1, 1)` restricted to `(0, s_max]` by rejection, `p ~ U(0, 1]`.
pub fn gen_normal(n: usize, s_max: f64, seed: u64) -> Result<Instance> {
    check_s_max(s_max)?;
    let normal = Normal::new(NORMAL_MEAN, NORMAL_SD).expect("valid normal");
    let mut rng = rng_from_seed(seed);
    let mut items = Vec::with_capacity(n);
    for _ in 0..n {
        let s = loop {
            let x: f64 = normal.sample(&mut rng);
            if x > 0.0 && x <= s_max {
                break x;
            }
        };
        items.push(Item::new(open_unit(&mut rng), s)?);
    }
    Instance::new(items, s_max, "normal", seed)
}

/// Calibration of the skewed synthetic dataset standing in for trace-derived
/// items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoogleLikeConfig {
    /// Target mean of the unclipped lognormal size.
    pub mean: f64,
    /// Shape of the underlying normal.
    pub sigma: f64,
    /// Sizes above this are clipped down to it.
    pub clip: f64,
}

impl Default for GoogleLikeConfig {
    fn default() -> Self {
        GoogleLikeConfig {
            mean: 0.044,
            sigma: 1.0,
            clip: 0.773,
        }
    }
}

/// Lognormal sizes with mean `cfg.mean`, clipped at `cfg.clip`; `p ~ U(0, 1]`.
pub fn gen_google_like(n: usize, seed: u64, cfg: &GoogleLikeConfig) -> Result<Instance> {
    check_s_max(cfg.clip)?;
    if !(cfg.mean > 0.0 && cfg.sigma > 0.0) {
        return Err(Error::config("google-like mean and sigma must be positive"));
    }
    let mu = cfg.mean.ln() - 0.5 * cfg.sigma * cfg.sigma;
    let dist = LogNormal::new(mu, cfg.sigma).map_err(|e| Error::config(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let items = (0..n)
        .map(|_| {
            let s: f64 = dist.sample(&mut rng);
            let s = s.clamp(f64::MIN_POSITIVE, cfg.clip);
            Item::new(open_unit(&mut rng), s)
        })
        .collect::<Result<_>>()?;
    Ok(Instance::new(items, cfg.clip, "google-like", seed)?
        .with_meta("surrogate", "lognormal sizes, uniform probabilities")
        .with_meta("lognormal_mu", mu)
        .with_meta("lognormal_sigma", cfg.sigma))
}
