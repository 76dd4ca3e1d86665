use serde::Serialize;

use crate::error::{Error, Result};
use crate::packers::{reciprocal_floor, GroupTag, Packing, Params};
use crate::prob::{inv_poisson_cdf, Item};

/// Slack for the structural lemma checks.
const LEMMA_TOL: f64 = 1e-9;

/// Approximation constant of RPAP with optimized thresholds:
/// `C = 2(1+α)/(1−α) · (1+λ_min)/λ_min` with
/// `λ_min = inv_poisson_cdf(k_min, 1−α) / (k_min+1)` and `k_min = ⌊1/s_max⌋`.
///
/// For `s_max = 1` this is `2(1+α)/(1−α) · (1 + 2/λ_1)`.
pub fn approx_constant(alpha: f64, s_max: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::config(format!("alpha {alpha} not in (0, 0.5]")));
    }
    if !(s_max > 0.0 && s_max <= 1.0) {
        return Err(Error::config(format!("s_max {s_max} not in (0, 1]")));
    }
    let k_min = reciprocal_floor(s_max);
    let lambda_min = inv_poisson_cdf(k_min, 1.0 - alpha)? / (k_min + 1) as f64;
    Ok(2.0 * (1.0 + alpha) / (1.0 - alpha) * (1.0 + lambda_min) / lambda_min)
}

/// Lower bound on the average expected load of RPAP bins in any class that
/// opened at least two bins: `½ min(p_max, μ_0, (1−p_max)·λ_min)`.
pub fn mu_min(params: &Params) -> f64 {
    0.5 * params
        .p_max()
        .min(params.mu_0())
        .min((1.0 - params.p_max()) * params.lambda_min())
}

/// Largest expected load any viable bin can carry: `(1+α)/(1−α)`.
pub fn mean_upper_bound(alpha: f64) -> f64 {
    (1.0 + alpha) / (1.0 - alpha)
}

/// Certified lower bound on the optimal bin count:
/// `⌈Σ p_i s_i · (1−α)/(1+α)⌉`.
pub fn opt_lower_bound(items: &[Item], alpha: f64) -> u64 {
    let total: f64 = items.iter().map(Item::mean).sum();
    let raw = total / mean_upper_bound(alpha);
    (raw - LEMMA_TOL).ceil().max(0.0) as u64
}

/// Largest `Σ p_i s_i` over the bins of a packing.
pub fn max_bin_mean(packing: &Packing, items: &[Item]) -> f64 {
    packing
        .bins
        .iter()
        .map(|b| b.mean_load(items))
        .fold(0.0, f64::max)
}

/// Per-class structural checks on an RPAP / RPAPC packing.
#[derive(Debug, Clone, Serialize)]
pub struct GroupCheck {
    pub group: String,
    pub bins: usize,
    pub avg_weight: f64,
    pub avg_mean: f64,
    /// Class-specific lower bound on `avg_mean` when `bins ≥ 2`.
    pub mean_bound: f64,
    /// Average weight exceeds 1/2 (vacuous with fewer than two bins).
    pub any_fit_ok: bool,
    pub mean_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    /// `(1+α) / ((1−α)·μ_min)` for the parameters in use.
    pub c_value: f64,
    pub mu_min: f64,
    pub lower_bound_bins: u64,
    /// Number of classes that received at least one item.
    pub group_count: usize,
    /// `c_value · lower_bound_bins + (k_max − k_min + 3)`.
    pub theorem_rhs: f64,
    pub bins_used: usize,
    pub satisfied: bool,
    pub groups: Vec<GroupCheck>,
    /// Largest bin expected load and the viable-bin ceiling it must respect.
    pub max_bin_mean: f64,
    pub mean_ceiling: f64,
    pub lemmas_ok: bool,
}

fn class_mean_bound(tag: GroupTag, params: &Params) -> f64 {
    match tag {
        GroupTag::Confident => params.p_max() / 2.0,
        GroupTag::Minor => params.mu_0() / 2.0,
        GroupTag::Standard(k) => params.lambda(k) * (1.0 - params.p_max()) / (2.0 * (k + 1) as f64),
    }
}

/// Bookkeeping for the bound `M ≤ C·OPT + k_max − k_min + 3` on a packing
/// made by RPAP or RPAPC with `params`.
///
/// OPT is replaced by [`opt_lower_bound`], so the check is one-sided: a
/// violation is a definite bug, a pass is a necessary consequence of the
/// bound. The per-class Any-Fit and mean-load lemmas, and the viable-bin
/// mean ceiling, are re-checked as well.
pub fn check_theorem(packing: &Packing, items: &[Item], params: &Params) -> Result<BoundReport> {
    match packing.config.params() {
        Some(p) if p == params => {}
        Some(_) => return Err(Error::Mismatch("packing used different parameters".into())),
        None => {
            return Err(Error::Mismatch(format!(
                "{} packings carry no RPAP parameters",
                packing.algorithm
            )))
        }
    }
    if packing.item_count != items.len() {
        return Err(Error::Mismatch(format!(
            "packing covers {} items, instance has {}",
            packing.item_count,
            items.len()
        )));
    }
    let alpha = params.alpha();
    let mu = mu_min(params);
    let c_value = mean_upper_bound(alpha) / mu;
    let lower_bound_bins = opt_lower_bound(items, alpha);
    let theorem_rhs = c_value * lower_bound_bins as f64 + params.group_count() as f64;
    let bins_used = packing.bins_used();

    let mut groups = Vec::new();
    for (tag, bins) in packing.groups() {
        let tag = tag.ok_or_else(|| Error::Mismatch("unclassified bin in RPAP packing".into()))?;
        let m = bins.len() as f64;
        let avg_weight = bins.iter().map(|b| b.weight_sum).sum::<f64>() / m;
        let avg_mean = bins.iter().map(|b| b.mean_load(items)).sum::<f64>() / m;
        let mean_bound = class_mean_bound(tag, params);
        let many = bins.len() >= 2;
        groups.push(GroupCheck {
            group: tag.to_string(),
            bins: bins.len(),
            avg_weight,
            avg_mean,
            mean_bound,
            any_fit_ok: !many || avg_weight > 0.5 - LEMMA_TOL,
            mean_ok: !many || avg_mean > mean_bound - LEMMA_TOL,
        });
    }
    let max_mean = max_bin_mean(packing, items);
    let mean_ceiling = mean_upper_bound(alpha);
    let lemmas_ok =
        groups.iter().all(|g| g.any_fit_ok && g.mean_ok) && max_mean <= mean_ceiling + LEMMA_TOL;

    Ok(BoundReport {
        c_value,
        mu_min: mu,
        lower_bound_bins,
        group_count: groups.len(),
        theorem_rhs,
        bins_used,
        satisfied: bins_used as f64 <= theorem_rhs + LEMMA_TOL,
        groups,
        max_bin_mean: max_mean,
        mean_ceiling,
        lemmas_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packers::{minor_budget, pack_ffr, pack_rpap};

    fn ber(p: f64, s: f64) -> Item {
        Item::new(p, s).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn reference_constants() {
        assert!(rel(approx_constant(0.1, 0.25).unwrap(), 7.47) < 0.005);
        assert!(rel(approx_constant(0.01, 1.0).unwrap(), 29.52) < 0.005);
        assert!(rel(approx_constant(0.001, 1.0).unwrap(), 90.29) < 0.005);
    }

    #[test]
    fn constant_specializes_for_unit_smax() {
        for alpha in [0.3, 0.1, 0.01, 0.001] {
            let l1 = inv_poisson_cdf(1, 1.0 - alpha).unwrap();
            let eq6 = 2.0 * (1.0 + alpha) / (1.0 - alpha) * (1.0 + 2.0 / l1);
            assert!(rel(approx_constant(alpha, 1.0).unwrap(), eq6) < 1e-12);
        }
    }

    #[test]
    fn constant_matches_general_formula_with_optimized_params() {
        for &(a, smax) in &[(0.1, 1.0), (0.1, 0.25), (0.01, 0.5), (0.001, 0.33)] {
            let params = Params::derive(a, smax).unwrap();
            let general = mean_upper_bound(a) / mu_min(&params);
            assert!(rel(general, approx_constant(a, smax).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn mu_min_examples() {
        let params = Params::derive(0.1, 1.0).unwrap();
        assert!((mu_min(&params) - params.p_max() / 2.0).abs() < 1e-12);
        assert!((mu_min(&params) - 0.105_025_904_500_034).abs() < 1e-9);

        // s_min = 98α puts μ_0 at 0.01.
        let alpha = 0.001;
        let s_min = alpha * 0.99f64.powi(2) / 0.01;
        assert!((minor_budget(alpha, s_min) - 0.01).abs() < 1e-12);
        let params = Params::with_thresholds(alpha, 1.0, s_min, 0.02).unwrap();
        assert!((mu_min(&params) - 0.005).abs() < 1e-12);
        assert!(mu_min(&params) <= params.p_max() / 2.0);
    }

    #[test]
    fn opt_lower_bound_examples() {
        assert_eq!(opt_lower_bound(&[], 0.1), 0);
        let items = vec![ber(1.0, 0.5); 100];
        assert_eq!(opt_lower_bound(&items, 0.1), 41);
    }

    #[test]
    fn empty_instance_satisfies_theorem() {
        let params = Params::derive(0.1, 1.0).unwrap();
        let packing = pack_rpap(&[], &params).unwrap();
        let r = check_theorem(&packing, &[], &params).unwrap();
        assert!(r.satisfied && r.lemmas_ok);
        assert_eq!(r.bins_used, 0);
        assert_eq!(r.group_count, 0);
    }

    #[test]
    fn duplicated_bins_are_detected() {
        let params = Params::derive(0.1, 1.0).unwrap();
        let items = vec![ber(0.99, 0.9); 50];
        let mut packing = pack_rpap(&items, &params).unwrap();
        let r = check_theorem(&packing, &items, &params).unwrap();
        assert!(r.satisfied);
        let extra = packing.bins[0].clone();
        let need = r.theorem_rhs.ceil() as usize + 1 - packing.bins.len();
        packing.bins.extend(std::iter::repeat_n(extra, need));
        let r = check_theorem(&packing, &items, &params).unwrap();
        assert!(!r.satisfied);
    }

    #[test]
    fn mismatches_are_errors() {
        let params = Params::derive(0.1, 1.0).unwrap();
        let other = Params::derive(0.01, 1.0).unwrap();
        let items = vec![ber(0.5, 0.5); 3];
        let packing = pack_rpap(&items, &params).unwrap();
        assert!(check_theorem(&packing, &items, &other).is_err());
        assert!(check_theorem(&packing, &items[..2], &params).is_err());
        let ffr = pack_ffr(&items, 0.1, 1e-4).unwrap();
        assert!(check_theorem(&ffr, &items, &params).is_err());
    }
}
