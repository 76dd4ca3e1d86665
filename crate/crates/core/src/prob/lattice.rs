use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Load distribution of one bin whose item sizes are integer multiples of a
/// grid step. Implemented by the dense [`LatticeDist`] used by the packers and
/// by [`SparseLattice`] for grids too fine to materialize.
pub trait LoadLattice {
    /// Number of grid steps in one unit of capacity.
    fn n_steps(&self) -> u128;

    /// `P(load > capacity)` of the current contents.
    fn overflow(&self) -> f64;

    /// Overflow probability after adding a `Ber(p, steps·eps)` item, without
    /// mutating the distribution.
    fn overflow_if_added(&self, p: f64, steps: u128) -> f64;

    /// Convolves a `Ber(p, steps·eps)` item into the distribution.
    fn add(&mut self, p: f64, steps: u128);
}

/// Dense lattice distribution on `{0, eps, 2·eps, ..., 1}` plus an overflow
/// bucket for mass beyond capacity.
///
/// A suffix-sum cache (`tail[j] = Σ_{i ≥ j} mass[i]`) makes fit queries O(1);
/// it is rebuilt after every insert. Suffix sums are accumulated from the
/// sparse high end of the grid, which keeps the small overflow-relevant
/// ranges free of cancellation.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDist {
    eps: f64,
    n_steps: usize,
    mass: Vec<f64>,
    tail: Vec<f64>,
    overflow: f64,
    /// Highest grid index that may carry mass.
    top: usize,
}

impl LatticeDist {
    /// Point mass at zero on a grid of step `eps`. `1/eps` must be an integer
    /// to within a relative tolerance of 1e-9.
    pub fn new(eps: f64) -> Result<Self> {
        Ok(Self::with_steps(grid_steps(eps)?))
    }

    /// Point mass at zero on a grid of `n_steps` cells per unit capacity.
    pub fn with_steps(n_steps: usize) -> Self {
        assert!(n_steps >= 1, "lattice needs at least one step");
        let mut mass = vec![0.0; n_steps + 1];
        mass[0] = 1.0;
        let mut tail = vec![0.0; n_steps + 2];
        tail[0] = 1.0;
        LatticeDist {
            eps: 1.0 / n_steps as f64,
            n_steps,
            mass,
            tail,
            overflow: 0.0,
            top: 0,
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn steps(&self) -> usize {
        self.n_steps
    }

    /// `mass[j] = P(load = j·eps)`.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `Σ_{i ≤ j} mass[i]`.
    pub fn prefix(&self, j: usize) -> f64 {
        let j = j.min(self.n_steps);
        self.tail[0] - self.tail[j + 1]
    }

    /// `P(load > (n_steps - k)·eps)` restricted to the grid, i.e. the mass
    /// that a `k`-step item would push past capacity.
    #[inline]
    fn spill(&self, k: usize) -> f64 {
        if k > self.n_steps {
            self.tail[0]
        } else {
            self.tail[self.n_steps - k + 1]
        }
    }

    /// Overflow probability if a `Ber(p, k·eps)` item were added. O(1).
    pub fn overflow_if_added(&self, p: f64, k_steps: usize) -> f64 {
        debug_assert!(k_steps >= 1);
        self.overflow + p * self.spill(k_steps)
    }

    /// Adds a `Ber(p, k·eps)` item. O(n_steps).
    pub fn add(&mut self, p: f64, k_steps: usize) {
        assert!(p > 0.0 && p <= 1.0, "probability {p} not in (0, 1]");
        assert!(k_steps >= 1, "item must occupy at least one step");
        let n = self.n_steps;
        self.overflow += p * self.spill(k_steps);
        let q = 1.0 - p;
        let new_top = self.top.saturating_add(k_steps).min(n);
        if k_steps <= n {
            for j in (k_steps..=new_top).rev() {
                self.mass[j] = q * self.mass[j] + p * self.mass[j - k_steps];
            }
        }
        for j in 0..k_steps.min(new_top + 1) {
            self.mass[j] *= q;
        }
        self.top = new_top;
        self.rebuild_tail();
    }

    fn rebuild_tail(&mut self) {
        let mut acc = 0.0;
        for j in (0..=self.top).rev() {
            acc += self.mass[j];
            self.tail[j] = acc;
        }
    }

    pub fn overflow(&self) -> f64 {
        self.overflow
    }

    /// Total probability held on the grid plus the overflow bucket; 1 up to
    /// rounding.
    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum::<f64>() + self.overflow
    }
}

impl LoadLattice for LatticeDist {
    fn n_steps(&self) -> u128 {
        self.n_steps as u128
    }

    fn overflow(&self) -> f64 {
        self.overflow
    }

    fn overflow_if_added(&self, p: f64, steps: u128) -> f64 {
        LatticeDist::overflow_if_added(self, p, clamp_steps(steps, self.n_steps))
    }

    fn add(&mut self, p: f64, steps: u128) {
        let k = clamp_steps(steps, self.n_steps);
        LatticeDist::add(self, p, k)
    }
}

/// Any item longer than the grid behaves identically, so steps beyond
/// `n + 1` are clamped there.
fn clamp_steps(steps: u128, n: usize) -> usize {
    steps.min(n as u128 + 1) as usize
}

/// `round(1/eps)`, rejecting steps that do not divide 1.
pub fn grid_steps(eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::config(format!("grid step {eps} not in (0, 1)")));
    }
    let inv = 1.0 / eps;
    let n = inv.round();
    if (inv - n).abs() > 1e-9 * n || n > (usize::MAX / 4) as f64 {
        return Err(Error::config(format!("grid step {eps} does not divide 1")));
    }
    Ok(n as usize)
}

/// Lattice distribution stored by support point, for grids with astronomically
/// many steps (e.g. exact dyadic sizes) where only a handful of loads are
/// reachable.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLattice {
    n_steps: u128,
    mass: BTreeMap<u128, f64>,
    overflow: f64,
}

impl SparseLattice {
    pub fn new(n_steps: u128) -> Self {
        assert!(n_steps >= 1);
        SparseLattice {
            n_steps,
            mass: BTreeMap::from([(0, 1.0)]),
            overflow: 0.0,
        }
    }

    pub fn support(&self) -> impl Iterator<Item = (u128, f64)> + '_ {
        self.mass.iter().map(|(&j, &m)| (j, m))
    }

    fn spill(&self, steps: u128) -> f64 {
        match self.n_steps.checked_sub(steps) {
            Some(limit) => self.mass.range(limit + 1..).map(|(_, m)| m).sum(),
            None => self.mass.values().sum(),
        }
    }
}

impl LoadLattice for SparseLattice {
    fn n_steps(&self) -> u128 {
        self.n_steps
    }

    fn overflow(&self) -> f64 {
        self.overflow
    }

    fn overflow_if_added(&self, p: f64, steps: u128) -> f64 {
        self.overflow + p * self.spill(steps)
    }

    fn add(&mut self, p: f64, steps: u128) {
        assert!(p > 0.0 && p <= 1.0, "probability {p} not in (0, 1]");
        let q = 1.0 - p;
        let mut next: BTreeMap<u128, f64> = BTreeMap::new();
        for (&j, &m) in &self.mass {
            if q > 0.0 {
                *next.entry(j).or_insert(0.0) += q * m;
            }
            match j.checked_add(steps) {
                Some(t) if t <= self.n_steps => *next.entry(t).or_insert(0.0) += p * m,
                _ => self.overflow += p * m,
            }
        }
        next.retain(|_, m| *m > 0.0);
        self.mass = next;
    }
}
