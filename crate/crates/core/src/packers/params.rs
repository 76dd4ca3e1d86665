use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::{inv_poisson_cdf, ln_odds, CAPACITY_TOL};

/// Upper limit on the number of standard subgroups a parameter set may span.
const MAX_SUBGROUPS: u64 = 1_000_000;

/// Largest integer `k` with `k·s ≤ 1`, tolerant to representation error so
/// that `s = 1/k` lands in class `k`.
pub(crate) fn reciprocal_floor(s: f64) -> u64 {
    let mut k = (1.0 / s).floor().max(0.0) as u64;
    while ((k + 1) as f64) * s <= 1.0 + CAPACITY_TOL {
        k += 1;
    }
    while k > 0 && (k as f64) * s > 1.0 + CAPACITY_TOL {
        k -= 1;
    }
    k
}

/// Derived constants of the grouping scheme for one `(alpha, s_max)`.
///
/// The Poisson budget `λ_k = inv_poisson_cdf(k, 1 - alpha)` of each standard
/// subgroup is computed on first use and cached.
#[derive(Debug, Clone)]
pub struct Params {
    alpha: f64,
    s_max: f64,
    s_min: f64,
    p_max: f64,
    mu_0: f64,
    k_min: u64,
    k_max: u64,
    lambda_min: f64,
    lambda: Vec<OnceLock<f64>>,
}

/// Plain snapshot of a [`Params`], suitable for printing.
#[derive(Debug, Clone, Serialize)]
pub struct ParamsSummary {
    pub alpha: f64,
    pub s_max: f64,
    pub s_min: f64,
    pub p_max: f64,
    pub mu_0: f64,
    pub k_min: u64,
    pub k_max: u64,
    pub lambda_min: f64,
    /// `(k, λ_k)` pairs; omitted when the subgroup range is very wide.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lambda: Vec<(u64, f64)>,
}

fn check_alpha_smax(alpha: f64, s_max: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::config(format!("alpha {alpha} not in (0, 0.5]")));
    }
    if !(s_max > 0.0 && s_max <= 1.0) {
        return Err(Error::config(format!("s_max {s_max} not in (0, 1]")));
    }
    Ok(())
}

/// Solves `(1 - μ)² / μ = s_min / α` for the root in (0, 1).
pub fn minor_budget(alpha: f64, s_min: f64) -> f64 {
    (2.0 * alpha + s_min - (s_min * s_min + 4.0 * alpha * s_min).sqrt()) / (2.0 * alpha)
}

impl Params {
    /// Parameters minimizing the approximation constant: `p_max` balances the
    /// confident and standard bounds, and `s_min` is the largest value with
    /// `μ_0 ≥ p_max`, clamped to `s_max / 2`.
    pub fn derive(alpha: f64, s_max: f64) -> Result<Self> {
        check_alpha_smax(alpha, s_max)?;
        let k_min = reciprocal_floor(s_max);
        let lambda_min = inv_poisson_cdf(k_min, 1.0 - alpha)? / (k_min + 1) as f64;
        let p_max = lambda_min / (1.0 + lambda_min);
        let mut s_min = (alpha * (1.0 - p_max).powi(2) / p_max).min(s_max / 2.0);
        // At the bound μ_0 = p_max holds only in exact arithmetic; shave
        // s_min by a few ulps until it holds in floating point too.
        while minor_budget(alpha, s_min) < p_max {
            s_min *= 1.0 - 1e-14;
        }
        Self::build(alpha, s_max, s_min, p_max)
    }

    /// Parameters with explicit class thresholds, e.g. from tuning.
    ///
    /// Rejects thresholds for which some minor or standard item would get an
    /// RPAP weight above 1.
    pub fn with_thresholds(alpha: f64, s_max: f64, s_min: f64, p_max: f64) -> Result<Self> {
        check_alpha_smax(alpha, s_max)?;
        if !(s_min > 0.0 && s_min < s_max) {
            return Err(Error::config(format!(
                "s_min {s_min} not in (0, s_max = {s_max})"
            )));
        }
        if !(p_max > 0.0 && p_max < 1.0) {
            return Err(Error::config(format!("p_max {p_max} not in (0, 1)")));
        }
        let params = Self::build(alpha, s_max, s_min, p_max)?;
        if ln_odds(p_max)? > params.lambda(params.k_min) {
            return Err(Error::config(format!(
                "p_max {p_max} too large: standard weights would exceed 1"
            )));
        }
        if p_max * s_min > params.mu_0 {
            return Err(Error::config(format!(
                "p_max·s_min = {} exceeds the minor budget {}",
                p_max * s_min,
                params.mu_0
            )));
        }
        Ok(params)
    }

    fn build(alpha: f64, s_max: f64, s_min: f64, p_max: f64) -> Result<Self> {
        let k_min = reciprocal_floor(s_max);
        let k_max = ((1.0 / s_min - 1e-9).ceil() as u64)
            .saturating_sub(1)
            .max(k_min);
        if k_max - k_min >= MAX_SUBGROUPS {
            return Err(Error::config(format!(
                "s_min {s_min} yields {} standard subgroups (limit {MAX_SUBGROUPS})",
                k_max - k_min + 1
            )));
        }
        let mu_0 = minor_budget(alpha, s_min);
        if !(mu_0 > 0.0 && mu_0 < 1.0) {
            return Err(Error::config(format!("minor budget {mu_0} not in (0, 1)")));
        }
        let params = Params {
            alpha,
            s_max,
            s_min,
            p_max,
            mu_0,
            k_min,
            k_max,
            lambda_min: 0.0,
            lambda: (k_min..=k_max).map(|_| OnceLock::new()).collect(),
        };
        let lambda_min = params.lambda(k_min) / (k_min + 1) as f64;
        Ok(Params {
            lambda_min,
            ..params
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn mu_0(&self) -> f64 {
        self.mu_0
    }

    pub fn k_min(&self) -> u64 {
        self.k_min
    }

    pub fn k_max(&self) -> u64 {
        self.k_max
    }

    /// `λ_{k_min} / (k_min + 1)`.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// `λ_k`, the largest Poisson rate with `P(Poi(λ_k) ≤ k) ≥ 1 - alpha`.
    ///
    /// Panics if `k` is outside `[k_min, k_max]`.
    pub fn lambda(&self, k: u64) -> f64 {
        assert!(
            (self.k_min..=self.k_max).contains(&k),
            "subgroup {k} outside [{}, {}]",
            self.k_min,
            self.k_max
        );
        *self.lambda[(k - self.k_min) as usize]
            .get_or_init(|| inv_poisson_cdf(k, 1.0 - self.alpha).expect("1 - alpha lies in (0, 1)"))
    }

    /// Number of groups RPAP may open: confident, minor and every standard `k`.
    pub fn group_count(&self) -> u64 {
        self.k_max - self.k_min + 3
    }

    pub fn summary(&self) -> ParamsSummary {
        let lambda = if self.k_max - self.k_min < 256 {
            (self.k_min..=self.k_max)
                .map(|k| (k, self.lambda(k)))
                .collect()
        } else {
            Vec::new()
        };
        ParamsSummary {
            alpha: self.alpha,
            s_max: self.s_max,
            s_min: self.s_min,
            p_max: self.p_max,
            mu_0: self.mu_0,
            k_min: self.k_min,
            k_max: self.k_max,
            lambda_min: self.lambda_min,
            lambda,
        }
    }
}

impl PartialEq for Params {
    fn eq(&self, other: &Self) -> bool {
        self.alpha == other.alpha
            && self.s_max == other.s_max
            && self.s_min == other.s_min
            && self.p_max == other.p_max
    }
}
