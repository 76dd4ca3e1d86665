use serde::Serialize;

use super::verify::EXACT_PASS_TOL;
use crate::error::{Error, Result};
use crate::packers::{pack_ffr, pack_ffr_steps, DEFAULT_EPS};
use crate::prob::{ln_odds, poisson_gt, Item, LoadLattice, SparseLattice};

/// Default excess of the `X` items' probability over `alpha`.
pub const DEFAULT_EPS_PRIME: f64 = 1e-6;

/// Bit budget for the exact grid denominator.
const GRID_BITS: u32 = 126;

/// Interleaved sequence `X_1, Y_1, X_2, Y_2, ...` on which every Any-Fit
/// packer spends one bin per pair, while two bins suffice.
///
/// With `δ_1 = √α` and `δ_j = δ_{j−1} − √α / 2^{j+2}`, the items are
/// `X_i ~ Ber(α + ε′, 1 − δ_{2i−1})` and `Y_i ~ Ber(1, δ_{2i})`. The gaps
/// `δ_{j−1} − δ_j` halve at every step and fall below `f64` resolution within
/// a few dozen pairs, so sizes are also given exactly as integer step counts
/// on a dyadic grid of `n_steps` cells per unit capacity.
#[derive(Debug, Clone)]
pub struct AdversarialInstance {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub items: Vec<Item>,
    /// Exact size of `items[i]` in grid steps.
    pub steps: Vec<u128>,
    pub n_steps: u128,
    /// `δ_1, ..., δ_{2n}` as floats.
    pub deltas: Vec<f64>,
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `√α` as a fraction `num/den`: exact when `√α` has at most six decimals,
/// otherwise rounded down to a multiple of 1e-6 (rounding down keeps every
/// property the construction relies on).
fn sqrt_alpha_fraction(alpha: f64) -> (u128, u128) {
    let root = alpha.sqrt();
    for d in 0..=6u32 {
        let den = 10u128.pow(d);
        let x = root * den as f64;
        if (x - x.round()).abs() < 1e-9 * x.max(1.0) && x.round() >= 1.0 {
            let num = x.round() as u128;
            let g = gcd(num, den);
            return (num / g, den / g);
        }
    }
    let den = 1_000_000u128;
    let num = ((root * den as f64).floor() as u128).max(1);
    let g = gcd(num, den);
    (num / g, den / g)
}

/// Builds the adversarial instance with `n_pairs` pairs.
///
/// Requires `n_pairs ≤ ½·α^{−1/2}` so the reference packing (all `X` in one
/// bin, all `Y` in another) is viable, and the exact grid must fit in 126
/// bits.
pub fn adversarial_instance(
    alpha: f64,
    n_pairs: usize,
    eps_prime: f64,
) -> Result<AdversarialInstance> {
    if !(alpha > 0.0 && alpha <= 0.25) {
        return Err(Error::config(format!("alpha {alpha} not in (0, 0.25]")));
    }
    if !(eps_prime > 0.0 && alpha + eps_prime < 1.0) {
        return Err(Error::config(format!(
            "eps_prime {eps_prime} must be positive and small"
        )));
    }
    let limit = 0.5 / alpha.sqrt();
    if n_pairs == 0 || n_pairs as f64 > limit + 1e-9 {
        return Err(Error::config(format!(
            "n_pairs {n_pairs} must lie in [1, ½·α^(-1/2) = {limit:.3}]"
        )));
    }
    let (num, den) = sqrt_alpha_fraction(alpha);
    let m = 2 * n_pairs as u32;
    // n_steps = den · 2^(m+2); δ_j = num·(7·2^(m−1) + 2^(m−j)) steps.
    let bits = 128 - (den * 8).leading_zeros() + m + 2;
    if bits > GRID_BITS {
        return Err(Error::config(format!(
            "n_pairs {n_pairs} needs a {bits}-bit exact grid (limit {GRID_BITS})"
        )));
    }
    let n_steps = den << (m + 2);
    let delta = |j: u32| num * (7u128 << (m - 1)) + (num << (m - j));
    let alpha_prime = alpha + eps_prime;

    let mut items = Vec::with_capacity(2 * n_pairs);
    let mut steps = Vec::with_capacity(2 * n_pairs);
    let mut deltas = Vec::with_capacity(2 * n_pairs);
    for i in 1..=n_pairs as u32 {
        let dx = delta(2 * i - 1);
        let dy = delta(2 * i);
        deltas.push(dx as f64 / n_steps as f64);
        deltas.push(dy as f64 / n_steps as f64);
        let x_steps = n_steps - dx;
        items.push(Item::new(alpha_prime, x_steps as f64 / n_steps as f64)?);
        steps.push(x_steps);
        items.push(Item::new(1.0, dy as f64 / n_steps as f64)?);
        steps.push(dy);
    }
    Ok(AdversarialInstance {
        alpha,
        alpha_prime,
        items,
        steps,
        n_steps,
        deltas,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdversarialReport {
    pub alpha: f64,
    pub n_pairs: usize,
    /// First Fit with exact overflow on the instance's exact grid.
    pub ffr_bins: usize,
    /// FFR with the default ε = 1e-4 rounding, for comparison.
    pub ffr_rounded_bins: usize,
    pub reference_bins: usize,
    pub ratio: f64,
    /// Exact overflow of the all-`X` and all-`Y` reference bins.
    pub reference_overflow: [f64; 2],
    /// Poisson tail bound `P(Poi(n·ln(1/(1−α′))) > 1)` on the all-`X` bin.
    pub reference_poisson_bound: f64,
    pub reference_viable: bool,
}

/// Packs the adversarial instance with First Fit on its exact grid and checks
/// the two-bin reference packing.
pub fn run_adversarial(alpha: f64, n_pairs: usize, eps_prime: f64) -> Result<AdversarialReport> {
    let inst = adversarial_instance(alpha, n_pairs, eps_prime)?;
    let stream = inst
        .items
        .iter()
        .zip(&inst.steps)
        .map(|(it, &s)| (it.p(), s));
    let exact_bins = pack_ffr_steps(stream, alpha, || SparseLattice::new(inst.n_steps));
    let rounded = pack_ffr(&inst.items, alpha, DEFAULT_EPS)?;

    let mut reference = [
        SparseLattice::new(inst.n_steps),
        SparseLattice::new(inst.n_steps),
    ];
    for (i, (it, &s)) in inst.items.iter().zip(&inst.steps).enumerate() {
        reference[i % 2].add(it.p(), s);
    }
    let reference_overflow = [reference[0].overflow(), reference[1].overflow()];
    // Each X is at most 1, so the all-X bin overflows only if two are active;
    // replacing each X by Poi(ln(1/(1-α'))) bounds that.
    let bound = poisson_gt(1, n_pairs as f64 * ln_odds(inst.alpha_prime)?)?;
    let reference_viable = reference_overflow
        .iter()
        .all(|&v| v <= alpha + EXACT_PASS_TOL)
        && bound <= alpha;

    Ok(AdversarialReport {
        alpha,
        n_pairs,
        ffr_bins: exact_bins.len(),
        ffr_rounded_bins: rounded.bins_used(),
        reference_bins: 2,
        ratio: exact_bins.len() as f64 / 2.0,
        reference_overflow,
        reference_poisson_bound: bound,
        reference_viable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recurrence_examples() {
        let inst = adversarial_instance(0.01, 2, DEFAULT_EPS_PRIME).unwrap();
        assert!((inst.deltas[0] - 0.1).abs() < 1e-15);
        assert!((inst.deltas[1] - 0.09375).abs() < 1e-15);
        assert!((inst.alpha_prime - 0.010001).abs() < 1e-15);
        assert_eq!(inst.items[0].p(), 0.010001);
        assert!((inst.items[0].s() - 0.9).abs() < 1e-15);
        assert_eq!(inst.items[1].p(), 1.0);
        assert!((inst.items[1].s() - 0.09375).abs() < 1e-15);
        // δ_1 exactly √α on the grid
        assert_eq!(inst.n_steps, 10 << 6);
        assert_eq!(inst.n_steps - inst.steps[0], 64);
    }

    #[test]
    fn deltas_strictly_decrease_above_three_quarters_root() {
        let inst = adversarial_instance(1e-4, 50, DEFAULT_EPS_PRIME).unwrap();
        let exact: Vec<u128> = inst
            .steps
            .iter()
            .enumerate()
            .map(|(i, &s)| if i % 2 == 0 { inst.n_steps - s } else { s })
            .collect();
        for w in exact.windows(2) {
            assert!(w[0] > w[1]);
        }
        let floor = 3.0 * 0.01 / 4.0;
        assert!(inst.deltas.iter().all(|&d| d > floor));
    }

    #[test]
    fn precondition_on_pair_count() {
        assert!(adversarial_instance(0.01, 5, 1e-6).is_ok());
        assert!(adversarial_instance(0.01, 6, 1e-6).is_err());
        assert!(adversarial_instance(0.01, 0, 1e-6).is_err());
        assert!(adversarial_instance(0.6, 1, 1e-6).is_err());
    }

    #[test]
    fn irrational_root_is_rounded_down() {
        let inst = adversarial_instance(0.002, 3, 1e-6).unwrap();
        assert!(inst.deltas[0] <= 0.002f64.sqrt());
        assert!(inst.deltas[0] > 0.002f64.sqrt() - 1e-6);
    }

    #[test]
    fn small_demo() {
        let r = run_adversarial(0.01, 2, DEFAULT_EPS_PRIME).unwrap();
        assert!(r.ffr_bins >= 2);
        assert!(r.reference_viable);
        let again = run_adversarial(0.01, 2, DEFAULT_EPS_PRIME).unwrap();
        assert_eq!(r.ffr_bins, again.ffr_bins);
    }

    #[test]
    fn one_bin_per_pair_on_exact_grid() {
        let r = run_adversarial(0.01, 5, DEFAULT_EPS_PRIME).unwrap();
        assert_eq!(r.ffr_bins, 5);
        assert!(r.reference_viable);
    }
}
