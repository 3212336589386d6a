//! Combinatorics of the cells induced by `m` hyperplanes and the leaf
//! structure of the tree-shaped variant.
//!
//! Cells are sign patterns in `{-1,+1}^m`. The canonical cell order is the
//! binary encoding of the pattern: cell index `i` has sign `+1` on hyperplane
//! `r` iff bit `r` of `i` is set. Model variable indices, serialized
//! classifiers, and tests all rely on this order.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArrangementError {
    #[error("hyperplane count {0} out of range 1..=20")]
    HyperplaneCountOutOfRange(usize),
    #[error("tree depth {0} out of range 1..=10")]
    DepthOutOfRange(usize),
}

/// A cell of the arrangement: one sign per hyperplane.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cell {
    pub signs: Vec<i8>,
}

impl Cell {
    /// Canonical index of this cell (binary encoding, `+1` => bit set).
    pub fn index(&self) -> usize {
        self.signs
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0)
            .map(|(r, _)| 1usize << r)
            .sum()
    }
}

/// Per-hyperplane left/right cell index sets.
///
/// In arrangement mode `plus[r]` and `minus[r]` partition all cells. In tree
/// mode they cover only the leaves below branch node `r`, so their union is a
/// strict subset everywhere except the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSets {
    pub plus: Vec<Vec<usize>>,
    pub minus: Vec<Vec<usize>>,
    /// Number of cells (arrangement) or leaves (tree).
    pub cell_count: usize,
}

impl BranchSets {
    pub fn split_count(&self) -> usize {
        self.plus.len()
    }
}

/// All `2^m` sign patterns in canonical order.
pub fn enumerate_cells(m: usize) -> Result<Vec<Cell>, ArrangementError> {
    if m == 0 || m > 20 {
        return Err(ArrangementError::HyperplaneCountOutOfRange(m));
    }
    Ok((0..1usize << m)
        .map(|idx| Cell {
            signs: (0..m)
                .map(|r| if idx >> r & 1 == 1 { 1 } else { -1 })
                .collect(),
        })
        .collect())
}

/// Left/right cell sets of a full arrangement: `plus[r]` holds the cells with
/// sign `+1` on hyperplane `r`.
pub fn branch_sets(cells: &[Cell]) -> BranchSets {
    let m = cells.first().map_or(0, |c| c.signs.len());
    let mut plus = vec![Vec::new(); m];
    let mut minus = vec![Vec::new(); m];
    for (idx, cell) in cells.iter().enumerate() {
        for (r, &s) in cell.signs.iter().enumerate() {
            if s > 0 {
                plus[r].push(idx);
            } else {
                minus[r].push(idx);
            }
        }
    }
    BranchSets {
        plus,
        minus,
        cell_count: cells.len(),
    }
}

/// Descendant-leaf sets of a complete binary tree of the given depth.
///
/// Branch nodes are numbered in breadth-first order (root = 0); leaves are
/// numbered left to right. `plus[r]` holds the leaves under `r`'s left child,
/// `minus[r]` those under the right child.
pub fn tree_leaf_sets(depth: usize) -> Result<BranchSets, ArrangementError> {
    if depth == 0 || depth > 10 {
        return Err(ArrangementError::DepthOutOfRange(depth));
    }
    let leaves = 1usize << depth;
    let branch_nodes = leaves - 1;
    let mut plus = Vec::with_capacity(branch_nodes);
    let mut minus = Vec::with_capacity(branch_nodes);
    for node in 0..branch_nodes {
        // level of `node` in BFS order, and its offset within the level
        let level = usize::BITS as usize - 1 - (node + 1).leading_zeros() as usize;
        let offset = node + 1 - (1 << level);
        let span = leaves >> level;
        let start = offset * span;
        plus.push((start..start + span / 2).collect());
        minus.push((start + span / 2..start + span).collect());
    }
    Ok(BranchSets {
        plus,
        minus,
        cell_count: leaves,
    })
}

/// Sign pattern of a point with respect to a list of hyperplanes. Boundary
/// points (`a.x + b == 0`) take the left branch (`+1`).
pub fn sign_pattern(hyperplanes: &[(Vec<f64>, f64)], x: &[f64]) -> Cell {
    Cell {
        signs: hyperplanes
            .iter()
            .map(|(a, b)| {
                let value: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum::<f64>() + b;
                if value >= 0.0 {
                    1
                } else {
                    -1
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_m1() {
        let cells = enumerate_cells(1).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].signs, vec![-1]);
        assert_eq!(cells[1].signs, vec![1]);
    }

    #[test]
    fn cells_m2_all_patterns() {
        let cells = enumerate_cells(2).unwrap();
        let patterns: Vec<Vec<i8>> = cells.iter().map(|c| c.signs.clone()).collect();
        assert_eq!(
            patterns,
            vec![vec![-1, -1], vec![1, -1], vec![-1, 1], vec![1, 1]]
        );
    }

    #[test]
    fn cells_m4_distinct_and_indexed() {
        let cells = enumerate_cells(4).unwrap();
        assert_eq!(cells.len(), 16);
        for (i, c) in cells.iter().enumerate() {
            assert_eq!(c.index(), i);
        }
    }

    #[test]
    fn cells_m0_rejected() {
        assert!(enumerate_cells(0).is_err());
        assert!(enumerate_cells(21).is_err());
    }

    #[test]
    fn branch_sets_partition() {
        let cells = enumerate_cells(2).unwrap();
        let bs = branch_sets(&cells);
        // bit 0 encodes the side of the first hyperplane
        assert_eq!(bs.plus[0], vec![1, 3]); // (+1,-1), (+1,+1)
        assert_eq!(bs.minus[1], vec![0, 1]); // (-1,-1), (+1,-1)
        for r in 0..2 {
            assert_eq!(bs.plus[r].len(), 2);
            assert_eq!(bs.minus[r].len(), 2);
            let mut all: Vec<usize> = bs.plus[r].iter().chain(&bs.minus[r]).copied().collect();
            all.sort_unstable();
            assert_eq!(all, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn branch_sets_m1() {
        let cells = enumerate_cells(1).unwrap();
        let bs = branch_sets(&cells);
        assert_eq!(bs.plus[0], vec![1]);
        assert_eq!(bs.minus[0], vec![0]);
    }

    #[test]
    fn tree_depth1_matches_arrangement_m1() {
        let tree = tree_leaf_sets(1).unwrap();
        let arr = branch_sets(&enumerate_cells(1).unwrap());
        // same sets, modulo cell indexing convention: depth-1 tree leaves are
        // {left, right} = {0, 1} with left = plus
        assert_eq!(tree.plus[0].len(), 1);
        assert_eq!(tree.minus[0].len(), 1);
        assert_eq!(tree.cell_count, arr.cell_count);
        assert_eq!(tree.plus[0].len(), arr.plus[0].len());
    }

    #[test]
    fn tree_depth2_structure() {
        let tree = tree_leaf_sets(2).unwrap();
        assert_eq!(tree.split_count(), 3);
        assert_eq!(tree.cell_count, 4);
        // root: left subtree leaves {0,1}, right {2,3}
        assert_eq!(tree.plus[0], vec![0, 1]);
        assert_eq!(tree.minus[0], vec![2, 3]);
        // left child branch node: plus = {leaf 0}, minus = {leaf 1}
        assert_eq!(tree.plus[1], vec![0]);
        assert_eq!(tree.minus[1], vec![1]);
        // leaves 2 and 3 are in neither set of node 1
        assert!(!tree.plus[1].contains(&2) && !tree.minus[1].contains(&3));
        // strict inclusion for every non-root node
        for r in 1..3 {
            assert!(tree.plus[r].len() + tree.minus[r].len() < tree.cell_count);
        }
    }

    #[test]
    fn tree_depth_out_of_range() {
        assert!(tree_leaf_sets(0).is_err());
        assert!(tree_leaf_sets(11).is_err());
    }

    #[test]
    fn sign_pattern_basic() {
        let h = vec![(vec![1.0, 0.0], -0.5)];
        assert_eq!(sign_pattern(&h, &[0.7, 0.2]).signs, vec![1]);
        // boundary tie goes to the left branch
        assert_eq!(sign_pattern(&h, &[0.5, 0.9]).signs, vec![1]);
        assert_eq!(sign_pattern(&h, &[0.2, 0.9]).signs, vec![-1]);
    }

    #[test]
    fn sign_pattern_two_hyperplanes_negative_side() {
        let h = vec![(vec![1.0, 0.0], -2.0), (vec![0.0, 1.0], -2.0)];
        assert_eq!(sign_pattern(&h, &[0.0, 0.0]).signs, vec![-1, -1]);
    }

    #[test]
    fn branch_set_cover_property() {
        for m in 1..=5 {
            let cells = enumerate_cells(m).unwrap();
            let bs = branch_sets(&cells);
            for r in 0..m {
                assert_eq!(bs.plus[r].len() + bs.minus[r].len(), 1 << m);
                assert_eq!(bs.plus[r].len(), 1 << (m - 1));
            }
        }
    }
}
