//! First Fit over unit-capacity bins backed by a max tournament tree.

use crate::prob::CAPACITY_TOL;

/// Tournament tree over the remaining capacities of open bins. Internal nodes
/// hold the maximum of their children, so the leftmost bin with enough room is
/// found by a single root-to-leaf descent: O(log m) per placement.
#[derive(Debug, Clone)]
pub struct FirstFitTree {
    /// Leaves start at `size`; unopened leaves hold -inf.
    tree: Vec<f64>,
    size: usize,
    open: usize,
}

impl Default for FirstFitTree {
    fn default() -> Self {
        Self::new()
    }
}

impl FirstFitTree {
    pub fn new() -> Self {
        Self::with_capacity(4)
    }

    pub fn with_capacity(bins: usize) -> Self {
        let size = bins.max(1).next_power_of_two();
        FirstFitTree {
            tree: vec![f64::NEG_INFINITY; 2 * size],
            size,
            open: 0,
        }
    }

    /// Number of bins opened so far.
    pub fn len(&self) -> usize {
        self.open
    }

    pub fn is_empty(&self) -> bool {
        self.open == 0
    }

    /// Remaining capacity of bin `i`.
    pub fn remaining(&self, i: usize) -> f64 {
        assert!(i < self.open);
        self.tree[self.size + i]
    }

    /// Leftmost open bin whose remaining capacity admits `weight`.
    pub fn first_fit(&self, weight: f64) -> Option<usize> {
        let need = weight - CAPACITY_TOL;
        if self.tree[1] < need {
            return None;
        }
        let mut node = 1;
        while node < self.size {
            node = if self.tree[2 * node] >= need {
                2 * node
            } else {
                2 * node + 1
            };
        }
        Some(node - self.size)
    }

    /// Opens a fresh bin with capacity 1 and returns its index.
    pub fn open_bin(&mut self) -> usize {
        if self.open == self.size {
            self.grow();
        }
        let i = self.open;
        self.open += 1;
        self.set(i, 1.0);
        i
    }

    /// Charges `weight` to bin `i`.
    pub fn consume(&mut self, i: usize, weight: f64) {
        let r = self.remaining(i) - weight;
        self.set(i, r);
    }

    /// First Fit placement of one item: returns the bin index and whether a
    /// new bin was opened for it.
    pub fn place(&mut self, weight: f64) -> (usize, bool) {
        debug_assert!(
            weight > 0.0 && weight <= 1.0 + CAPACITY_TOL,
            "weight {weight}"
        );
        let (i, opened) = match self.first_fit(weight) {
            Some(i) => (i, false),
            None => (self.open_bin(), true),
        };
        self.consume(i, weight);
        (i, opened)
    }

    fn set(&mut self, i: usize, value: f64) {
        let mut node = self.size + i;
        self.tree[node] = value;
        while node > 1 {
            node /= 2;
            self.tree[node] = self.tree[2 * node].max(self.tree[2 * node + 1]);
        }
    }

    fn grow(&mut self) {
        let size = self.size * 2;
        let mut tree = vec![f64::NEG_INFINITY; 2 * size];
        tree[size..size + self.size].copy_from_slice(&self.tree[self.size..]);
        for node in (1..size).rev() {
            tree[node] = tree[2 * node].max(tree[2 * node + 1]);
        }
        self.tree = tree;
        self.size = size;
    }
}

/// First Fit packing of a weight stream into unit bins. Returns, per bin, the
/// stream positions it received.
///
/// Panics if a weight exceeds 1.
pub fn anyfit_pack(weights: impl IntoIterator<Item = f64>) -> Vec<Vec<usize>> {
    let mut tree = FirstFitTree::new();
    let mut bins: Vec<Vec<usize>> = Vec::new();
    for (pos, w) in weights.into_iter().enumerate() {
        assert!(
            w > 0.0 && w <= 1.0 + CAPACITY_TOL,
            "weight {w} at {pos} not in (0, 1]"
        );
        let (i, opened) = tree.place(w);
        if opened {
            bins.push(Vec::new());
        }
        bins[i].push(pos);
    }
    bins
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Linear-scan First Fit used as the reference.
    fn naive_first_fit(weights: &[f64]) -> Vec<Vec<usize>> {
        let mut loads: Vec<f64> = Vec::new();
        let mut bins: Vec<Vec<usize>> = Vec::new();
        for (pos, &w) in weights.iter().enumerate() {
            match loads.iter().position(|&l| l + w <= 1.0 + CAPACITY_TOL) {
                Some(i) => {
                    loads[i] += w;
                    bins[i].push(pos);
                }
                None => {
                    loads.push(w);
                    bins.push(vec![pos]);
                }
            }
        }
        bins
    }

    #[test]
    fn examples() {
        assert_eq!(anyfit_pack([0.6, 0.6]).len(), 2);
        assert_eq!(anyfit_pack([0.5, 0.5, 0.5]), vec![vec![0, 1], vec![2]]);
        assert_eq!(
            anyfit_pack([0.7, 0.4, 0.3, 0.2]),
            vec![vec![0, 2], vec![1, 3]]
        );
        assert!(anyfit_pack(std::iter::empty()).is_empty());
    }

    #[test]
    fn exact_capacity_is_admitted() {
        assert_eq!(anyfit_pack([0.25; 4]).len(), 1);
        assert_eq!(anyfit_pack([0.1; 10]).len(), 1);
    }

    #[test]
    #[should_panic]
    fn oversize_weight_panics() {
        anyfit_pack([1.5]);
    }

    proptest! {
        #[test]
        fn tree_matches_linear_scan(ws in prop::collection::vec(0.001f64..=1.0, 0..300)) {
            prop_assert_eq!(anyfit_pack(ws.iter().copied()), naive_first_fit(&ws));
        }

        #[test]
        fn any_fit_average_exceeds_half(ws in prop::collection::vec(0.001f64..=1.0, 1..300)) {
            let bins = anyfit_pack(ws.iter().copied());
            if bins.len() >= 2 {
                let total: f64 = ws.iter().sum();
                prop_assert!(total / bins.len() as f64 > 0.5);
            }
        }
    }
}
