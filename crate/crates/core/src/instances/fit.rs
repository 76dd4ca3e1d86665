use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prob::Item;

/// Extra size candidates taken at evenly spaced sample quantiles.
pub const QUANTILE_CANDIDATES: usize = 20;

/// Fraction of a batch kept after dropping the worst fits.
pub const KEEP_FRACTION: f64 = 0.9;

/// Closest scaled Bernoulli to an empirical sample under the L1 distance
/// between CDFs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub p: f64,
    pub s: f64,
    pub l1: f64,
    pub kept: bool,
}

impl FitResult {
    pub fn item(&self) -> Result<Item> {
        Item::new(self.p, self.s)
    }
}

/// Sorted sample with prefix sums, so that `F(x)` and `∫₀ˣ F` cost a binary
/// search each.
struct EmpiricalCdf {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

impl EmpiricalCdf {
    fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("no samples to fit"));
        }
        if let Some(bad) = samples.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain(format!(
                "sample {bad} is not a finite nonnegative value"
            )));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &v in &sorted {
            acc += v;
            prefix.push(acc);
        }
        Ok(EmpiricalCdf { sorted, prefix })
    }

    fn n(&self) -> f64 {
        self.sorted.len() as f64
    }

    fn max(&self) -> f64 {
        *self.sorted.last().unwrap()
    }

    fn count_le(&self, x: f64) -> usize {
        self.sorted.partition_point(|&v| v <= x)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.count_le(x) as f64 / self.n()
    }

    /// `∫₀ˣ F(t) dt = Σ max(0, x − v) / n`.
    fn integral(&self, x: f64) -> f64 {
        let c = self.count_le(x);
        (c as f64 * x - self.prefix[c]) / self.n()
    }

    /// Smallest point where `F` reaches `q`.
    fn crossing(&self, q: f64) -> f64 {
        let mut need = (q * self.n()).ceil() as usize;
        if need > 0 && (need - 1) as f64 / self.n() >= q {
            need -= 1;
        }
        if need == 0 {
            0.0
        } else {
            self.sorted[(need - 1).min(self.sorted.len() - 1)]
        }
    }

    fn l1(&self, q: f64, s: f64) -> f64 {
        let t = self.max().max(s);
        let m = self.crossing(q).clamp(0.0, s);
        let g_m = self.integral(m);
        let g_s = self.integral(s);
        let below = q * m - g_m;
        let above = (g_s - g_m) - q * (s - m);
        let tail = (t - s) - (self.integral(t) - g_s);
        (below + above + tail).max(0.0)
    }

    fn quantile(&self, level: f64) -> f64 {
        let pos = level * (self.sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let frac = pos - lo as f64;
        self.sorted[lo] + frac * (self.sorted[hi] - self.sorted[lo])
    }
}

/// L1 distance between the empirical CDF of `samples` and the CDF of
/// `Ber(p, s)`, integrated over `[0, max(samples, s)]`.
pub fn l1_distance(samples: &[f64], p: f64, s: f64) -> Result<f64> {
    Ok(EmpiricalCdf::new(samples)?.l1(1.0 - p, s))
}

/// Fits `Ber(p, s)` to a usage sample.
///
/// For a fixed `s` the model CDF is the constant `1 − p` on `[0, s)`, and the
/// best constant for a nondecreasing `F` there is `F(s/2)`. Sizes are searched
/// over the distinct positive sample values and a few quantile points.
pub fn fit_bernoulli(samples: &[f64]) -> Result<FitResult> {
    let cdf = EmpiricalCdf::new(samples)?;
    if cdf.max() <= 0.0 {
        return Err(Error::domain(
            "all samples are zero: no positive size to fit",
        ));
    }
    let mut candidates: Vec<f64> = cdf.sorted.iter().copied().filter(|&v| v > 0.0).collect();
    let levels = QUANTILE_CANDIDATES + 1;
    candidates.extend(
        (1..levels)
            .map(|j| cdf.quantile(j as f64 / levels as f64))
            .filter(|&v| v > 0.0),
    );
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let mut best: Option<FitResult> = None;
    for s in candidates {
        let q = cdf.cdf(0.5 * s).min(1.0);
        let l1 = cdf.l1(q, s);
        if best.is_none_or(|b| l1 < b.l1) {
            best = Some(FitResult {
                p: 1.0 - q,
                s,
                l1,
                kept: true,
            });
        }
    }
    Ok(best.expect("at least one positive candidate"))
}

/// Fits every task and keeps the `⌈0.9·n⌉` closest fits.
///
/// Ties in distance are broken by task order. Fails on the first task that
/// cannot be fitted.
pub fn fit_batch(tasks: &[Vec<f64>]) -> Result<Vec<FitResult>> {
    let mut fits: Vec<FitResult> = tasks
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            fit_bernoulli(t).map_err(|e| Error::Item {
                index: i,
                reason: e.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    let keep = (9 * fits.len()).div_ceil(10);
    let mut order: Vec<usize> = (0..fits.len()).collect();
    order.sort_by(|&a, &b| fits[a].l1.total_cmp(&fits[b].l1).then(a.cmp(&b)));
    for (rank, &i) in order.iter().enumerate() {
        fits[i].kept = rank < keep;
    }
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::rng_from_seed;
    use rand::Rng;

    #[test]
    fn exact_bernoulli_data() {
        let f = fit_bernoulli(&[0.4; 7]).unwrap();
        assert_eq!((f.p, f.s), (1.0, 0.4));
        assert!(f.l1.abs() < 1e-15);

        let mut samples = vec![0.0; 6];
        samples.extend([0.5; 4]);
        let f = fit_bernoulli(&samples).unwrap();
        assert!((f.p - 0.4).abs() < 1e-15);
        assert_eq!(f.s, 0.5);
        assert!(f.l1.abs() < 1e-15);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_bernoulli(&[]).is_err());
        assert!(fit_bernoulli(&[0.0, 0.0]).is_err());
        assert!(fit_bernoulli(&[0.1, -0.2]).is_err());
        assert!(fit_bernoulli(&[f64::NAN]).is_err());
    }

    /// Midpoint-rule L1 distance, independent of the closed form.
    fn numeric_l1(samples: &[f64], p: f64, s: f64) -> f64 {
        let t = samples.iter().copied().fold(s, f64::max);
        let steps = 200_000;
        let h = t / steps as f64;
        let n = samples.len() as f64;
        (0..steps)
            .map(|i| {
                let x = (i as f64 + 0.5) * h;
                let emp = samples.iter().filter(|&&v| v <= x).count() as f64 / n;
                let model = if x < s { 1.0 - p } else { 1.0 };
                (emp - model).abs() * h
            })
            .sum()
    }

    #[test]
    fn closed_form_matches_integration() {
        let samples = [0.0, 0.2, 0.4, 0.4, 0.4];
        for &(p, s) in &[(0.8, 0.4), (0.3, 0.2), (0.5, 0.3), (0.9, 0.55)] {
            let a = l1_distance(&samples, p, s).unwrap();
            let b = numeric_l1(&samples, p, s);
            assert!((a - b).abs() < 1e-5, "({p},{s}): {a} vs {b}");
        }
    }

    #[test]
    fn small_grid_example() {
        // s = 0.4 with 1 - p = F(0.2) = 0.4 leaves only 0.2·0.2 on [0, 0.2);
        // s = 0.2 pays 0.2·0.6 on [0.2, 0.4).
        let samples = [0.0, 0.2, 0.4, 0.4, 0.4];
        let f = fit_bernoulli(&samples).unwrap();
        assert!((f.s - 0.4).abs() < 1e-15);
        assert!((f.p - 0.6).abs() < 1e-15);
        assert!((f.l1 - 0.04).abs() < 1e-12);
        for s in [0.2, 0.4] {
            for i in 1..=1000 {
                let p = i as f64 / 1000.0;
                assert!(f.l1 <= numeric_l1(&samples, p, s) + 1e-5);
            }
        }
    }

    #[test]
    fn fit_beats_grid() {
        let mut rng = rng_from_seed(99);
        for _ in 0..20 {
            let len = rng.random_range(1..30);
            let samples: Vec<f64> = (0..len)
                .map(|_| {
                    if rng.random::<f64>() < 0.3 {
                        0.0
                    } else {
                        (rng.random::<f64>() * 1000.0).round() / 1000.0 + 0.001
                    }
                })
                .collect();
            if samples.iter().all(|&v| v == 0.0) {
                continue;
            }
            let f = fit_bernoulli(&samples).unwrap();
            let top = samples.iter().copied().fold(0.0, f64::max);
            for i in 1..=100 {
                let s = top * i as f64 / 100.0;
                for j in 0..=100 {
                    let p = j as f64 / 100.0;
                    let g = l1_distance(&samples, p, s).unwrap();
                    assert!(f.l1 <= g + 1e-12, "fit {f:?} worse than ({p}, {s}) = {g}");
                }
            }
        }
    }

    #[test]
    fn batch_keeps_best_ninety_percent() {
        let mut rng = rng_from_seed(5);
        for batch in [1usize, 7, 10, 23] {
            let tasks: Vec<Vec<f64>> = (0..batch)
                .map(|_| (0..12).map(|_| rng.random::<f64>() * 0.5).collect())
                .collect();
            let fits = fit_batch(&tasks).unwrap();
            let kept: Vec<_> = fits.iter().filter(|f| f.kept).collect();
            assert_eq!(kept.len(), (batch * 9).div_ceil(10));
            let worst_kept = kept.iter().map(|f| f.l1).fold(0.0, f64::max);
            assert!(fits.iter().filter(|f| !f.kept).all(|f| f.l1 >= worst_kept));
            assert_eq!(
                fits[0],
                fit_bernoulli(&tasks[0])
                    .map(|mut f| {
                        f.kept = fits[0].kept;
                        f
                    })
                    .unwrap()
            );
        }
    }

    #[test]
    fn batch_reports_failing_task() {
        let tasks = vec![vec![0.3], vec![0.0, 0.0]];
        match fit_batch(&tasks) {
            Err(Error::Item { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
    }
}
