use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::{Cell, LabelledSample, GRID_COLUMNS, GRID_ROWS};
use crate::seed;

/// Seeded permutation of `0..n`, cut into a train prefix of
/// `floor(ratio * n)` indices and a test suffix.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    assert!((0.0..=1.0).contains(&ratio), "split ratio {ratio} outside [0, 1]");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    // the epsilon absorbs representation error such as 0.8 * 1420
    let cut = ((ratio * n as f64) + 1e-9).floor() as usize;
    let test = order.split_off(cut.min(n));
    (order, test)
}

pub fn split<T: Clone>(items: &[T], ratio: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let (train, test) = split_indices(items.len(), ratio, seed);
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| items[i].clone()).collect();
    (pick(train), pick(test))
}

/// Sample counts per grid cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleHistogram {
    counts: [[usize; GRID_ROWS]; GRID_COLUMNS],
}

impl SampleHistogram {
    pub fn get(&self, cell: Cell) -> usize {
        self.counts[cell.x][cell.y]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Nonzero cells in `(x, y)` order.
    pub fn occupied(&self) -> impl Iterator<Item = (Cell, usize)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(x, col)| col.iter().enumerate().filter(|(_, &c)| c > 0).map(move |(y, &c)| (Cell { x, y }, c)))
    }
}

pub fn sample_histogram(samples: &[LabelledSample]) -> SampleHistogram {
    let mut counts = [[0usize; GRID_ROWS]; GRID_COLUMNS];
    for s in samples {
        let c = s.location.cell();
        counts[c.x][c.y] += 1;
    }
    SampleHistogram { counts }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnderrepresentedCell {
    pub cell: Cell,
    /// Indices into the input slice, in input order.
    pub samples: Vec<usize>,
}

/// Cells holding at least one but fewer than `threshold` samples, ordered by
/// `(x, y)`.
pub fn find_underrepresented(samples: &[LabelledSample], threshold: usize) -> Vec<UnderrepresentedCell> {
    assert!(threshold >= 1, "threshold must be at least 1");
    let mut by_cell: BTreeMap<Cell, Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        by_cell.entry(s.location.cell()).or_default().push(i);
    }
    by_cell
        .into_iter()
        .filter(|(_, idx)| idx.len() < threshold)
        .map(|(cell, samples)| UnderrepresentedCell { cell, samples })
        .collect()
}
