//! Grid mappings: the symmetry group generated by row complements, column
//! reverses, row and column permutations, and the grid inverse, acting on
//! gridding matrices and on gridded permutations.
//!
//! A mapping is kept in normal form: row complements first, then column
//! reverses, then the row permutation, then the column permutation, then
//! optionally the grid inverse. Any composition of generators renormalizes
//! into this shape, so enumeration is a product of independent factors.

use crate::classes::CellClass;
use crate::gridding::{GriddedPermutation, Gridding, GriddingMatrix};
use crate::perm::Permutation;
use crate::pins::mk_matrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("mapping with source {0}×{1} cannot act on a {2}×{3} object")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("mapping dimensions do not chain: {0}")]
    ChainMismatch(String),
    #[error("reversed column or complemented row index out of range")]
    IndexOutOfRange,
    #[error("enumeration cap exceeded: {0} mappings > {1}")]
    CapExceeded(u128, u128),
    #[error("matrix fails the path conditions: {0}")]
    ConditionsFailed(String),
    #[error("canonicalization failed: {0}")]
    Canonicalize(String),
}

/// A grid mapping in normal form. `col_perm` has the length of the source
/// column count and `row_perm` of the source row count; `reversed_cols` and
/// `complemented_rows` name source columns and rows, applied before the
/// permutations. When `apply_inverse` is set the grid inverse is applied
/// last, swapping the roles of columns and rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridMapping {
    pub apply_inverse: bool,
    pub col_perm: Permutation,
    pub row_perm: Permutation,
    pub reversed_cols: BTreeSet<usize>,
    pub complemented_rows: BTreeSet<usize>,
}

impl GridMapping {
    pub fn new(
        apply_inverse: bool,
        col_perm: Permutation,
        row_perm: Permutation,
        reversed_cols: BTreeSet<usize>,
        complemented_rows: BTreeSet<usize>,
    ) -> Result<Self, MapError> {
        let m = col_perm.len();
        let n = row_perm.len();
        if reversed_cols.iter().any(|&c| c < 1 || c > m)
            || complemented_rows.iter().any(|&r| r < 1 || r > n)
        {
            return Err(MapError::IndexOutOfRange);
        }
        Ok(GridMapping {
            apply_inverse,
            col_perm,
            row_perm,
            reversed_cols,
            complemented_rows,
        })
    }

    pub fn identity(cols: usize, rows: usize) -> Self {
        GridMapping {
            apply_inverse: false,
            col_perm: Permutation::identity(cols),
            row_perm: Permutation::identity(rows),
            reversed_cols: BTreeSet::new(),
            complemented_rows: BTreeSet::new(),
        }
    }

    /// The plain grid inverse of an `cols×rows` source.
    pub fn grid_inverse(cols: usize, rows: usize) -> Self {
        GridMapping {
            apply_inverse: true,
            ..GridMapping::identity(cols, rows)
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.apply_inverse
            && self.col_perm == Permutation::identity(self.col_perm.len())
            && self.row_perm == Permutation::identity(self.row_perm.len())
            && self.reversed_cols.is_empty()
            && self.complemented_rows.is_empty()
    }

    /// Source dimensions (columns, rows).
    pub fn source_dims(&self) -> (usize, usize) {
        (self.col_perm.len(), self.row_perm.len())
    }

    /// Target dimensions; swapped when the grid inverse is applied.
    pub fn target_dims(&self) -> (usize, usize) {
        let (m, n) = self.source_dims();
        if self.apply_inverse {
            (n, m)
        } else {
            (m, n)
        }
    }

    /// Image of a gridding matrix.
    pub fn apply_to_matrix(&self, matrix: &GriddingMatrix) -> Result<GriddingMatrix, MapError> {
        let (m, n) = self.source_dims();
        if (matrix.cols(), matrix.rows()) != (m, n) {
            return Err(MapError::DimensionMismatch(
                m,
                n,
                matrix.cols(),
                matrix.rows(),
            ));
        }
        let (tm, tn) = self.target_dims();
        let mut out = GriddingMatrix::new(tm, tn);
        for i in 1..=tm {
            for j in 1..=tn {
                let (sc, sr) = if self.apply_inverse {
                    (self.col_perm.at(j) as usize, self.row_perm.at(i) as usize)
                } else {
                    (self.col_perm.at(i) as usize, self.row_perm.at(j) as usize)
                };
                let mut class = matrix.get(sc, sr).clone();
                if self.complemented_rows.contains(&sr) {
                    class = class.class_complement();
                }
                if self.reversed_cols.contains(&sc) {
                    class = class.class_reverse();
                }
                if self.apply_inverse {
                    class = class.class_inverse();
                }
                out.set(i, j, class);
            }
        }
        Ok(out)
    }

    /// Image of a gridded permutation.
    pub fn apply_to_gridded(
        &self,
        gp: &GriddedPermutation,
    ) -> Result<GriddedPermutation, MapError> {
        let (m, n) = self.source_dims();
        if (gp.cols(), gp.rows()) != (m, n) {
            return Err(MapError::DimensionMismatch(m, n, gp.cols(), gp.rows()));
        }
        let mut cur = gp.clone();
        for &row in &self.complemented_rows {
            cur = complement_row(&cur, row);
        }
        for &col in &self.reversed_cols {
            cur = reverse_col(&cur, col);
        }
        cur = permute_rows(&cur, &self.row_perm);
        cur = permute_cols(&cur, &self.col_perm);
        if self.apply_inverse {
            cur = grid_inverse_gridded(&cur);
        }
        Ok(cur)
    }

    /// Composite mapping: `f.compose(&g)` applies `g` first, then `f`, so
    /// that `f.compose(&g).apply(x) == f.apply(g.apply(x))`.
    pub fn compose(&self, first: &GridMapping) -> Result<GridMapping, MapError> {
        if self.source_dims() != first.target_dims() {
            return Err(MapError::ChainMismatch(format!(
                "{:?} then {:?}",
                first.target_dims(),
                self.source_dims()
            )));
        }
        let a = Atlas::of(first);
        let b = Atlas::of(self);
        Ok(b.after(&a).into_mapping())
    }

    /// The inverse mapping: `f.invert().apply(f.apply(x)) == x`.
    pub fn invert(&self) -> GridMapping {
        Atlas::of(self).invert().into_mapping()
    }
}

/// Flat description of a mapping's action: for every target column and
/// target row, the source line it came from and whether that band is
/// flipped. Composition and inversion are mechanical on this form, and it
/// is in bijection with the normal form.
struct Atlas {
    inverse: bool,
    /// `cols[i]` = (source line of target column i+1, flipped). The source
    /// line is a column when `inverse` is false, a row otherwise.
    cols: Vec<(usize, bool)>,
    rows: Vec<(usize, bool)>,
}

impl Atlas {
    fn of(f: &GridMapping) -> Atlas {
        let (m, n) = f.source_dims();
        if f.apply_inverse {
            Atlas {
                inverse: true,
                cols: (1..=n)
                    .map(|i| {
                        let r = f.row_perm.at(i) as usize;
                        (r, f.complemented_rows.contains(&r))
                    })
                    .collect(),
                rows: (1..=m)
                    .map(|j| {
                        let c = f.col_perm.at(j) as usize;
                        (c, f.reversed_cols.contains(&c))
                    })
                    .collect(),
            }
        } else {
            Atlas {
                inverse: false,
                cols: (1..=m)
                    .map(|i| {
                        let c = f.col_perm.at(i) as usize;
                        (c, f.reversed_cols.contains(&c))
                    })
                    .collect(),
                rows: (1..=n)
                    .map(|j| {
                        let r = f.row_perm.at(j) as usize;
                        (r, f.complemented_rows.contains(&r))
                    })
                    .collect(),
            }
        }
    }

    /// Composite atlas: apply `first`, then `self`.
    fn after(&self, first: &Atlas) -> Atlas {
        let trace = |&(line, flip): &(usize, bool), from_col: bool| -> (usize, bool) {
            // `line` indexes the intermediate object's columns iff
            // (from_col XOR self.inverse) is false.
            let intermediate_is_col = from_col != self.inverse;
            let (src, f2) = if intermediate_is_col {
                first.cols[line - 1]
            } else {
                first.rows[line - 1]
            };
            (src, flip != f2)
        };
        Atlas {
            inverse: self.inverse != first.inverse,
            cols: self.cols.iter().map(|e| trace(e, true)).collect(),
            rows: self.rows.iter().map(|e| trace(e, false)).collect(),
        }
    }

    fn invert(&self) -> Atlas {
        if self.inverse {
            // Target col i came from source row r: in the inverse, target
            // row r comes from source col i.
            let mut cols = vec![(0usize, false); self.rows.len()];
            let mut rows = vec![(0usize, false); self.cols.len()];
            for (i, &(c, flip)) in self.rows.iter().enumerate() {
                cols[c - 1] = (i + 1, flip);
            }
            for (i, &(r, flip)) in self.cols.iter().enumerate() {
                rows[r - 1] = (i + 1, flip);
            }
            Atlas {
                inverse: true,
                cols,
                rows,
            }
        } else {
            let mut cols = vec![(0usize, false); self.cols.len()];
            let mut rows = vec![(0usize, false); self.rows.len()];
            for (i, &(c, flip)) in self.cols.iter().enumerate() {
                cols[c - 1] = (i + 1, flip);
            }
            for (j, &(r, flip)) in self.rows.iter().enumerate() {
                rows[r - 1] = (j + 1, flip);
            }
            Atlas {
                inverse: false,
                cols,
                rows,
            }
        }
    }

    fn into_mapping(self) -> GridMapping {
        let mut reversed_cols = BTreeSet::new();
        let mut complemented_rows = BTreeSet::new();
        let (col_perm, row_perm) = if self.inverse {
            // Target cols read source rows, target rows read source cols.
            let row_perm =
                Permutation::new(self.cols.iter().map(|&(r, _)| r as u32).collect()).unwrap();
            let col_perm =
                Permutation::new(self.rows.iter().map(|&(c, _)| c as u32).collect()).unwrap();
            for &(r, flip) in &self.cols {
                if flip {
                    complemented_rows.insert(r);
                }
            }
            for &(c, flip) in &self.rows {
                if flip {
                    reversed_cols.insert(c);
                }
            }
            (col_perm, row_perm)
        } else {
            let col_perm =
                Permutation::new(self.cols.iter().map(|&(c, _)| c as u32).collect()).unwrap();
            let row_perm =
                Permutation::new(self.rows.iter().map(|&(r, _)| r as u32).collect()).unwrap();
            for &(c, flip) in &self.cols {
                if flip {
                    reversed_cols.insert(c);
                }
            }
            for &(r, flip) in &self.rows {
                if flip {
                    complemented_rows.insert(r);
                }
            }
            (col_perm, row_perm)
        };
        GridMapping {
            apply_inverse: self.inverse,
            col_perm,
            row_perm,
            reversed_cols,
            complemented_rows,
        }
    }
}

fn complement_row(gp: &GriddedPermutation, row: usize) -> GriddedPermutation {
    let len = gp.len();
    let lo = if row == 1 { 0 } else { gp.gridding().y[row - 2] } as u32;
    let hi = if row == gp.rows() {
        len
    } else {
        gp.gridding().y[row - 1]
    } as u32;
    let values: Vec<u32> = gp
        .perm()
        .values()
        .iter()
        .map(|&v| if v > lo && v <= hi { lo + hi + 1 - v } else { v })
        .collect();
    GriddedPermutation::new(
        Permutation::new(values).unwrap(),
        gp.gridding().clone(),
        gp.cols(),
        gp.rows(),
    )
    .unwrap()
}

fn reverse_col(gp: &GriddedPermutation, col: usize) -> GriddedPermutation {
    let len = gp.len();
    let lo = if col == 1 { 0 } else { gp.gridding().x[col - 2] };
    let hi = if col == gp.cols() {
        len
    } else {
        gp.gridding().x[col - 1]
    };
    let mut values = gp.perm().values().to_vec();
    values[lo..hi].reverse();
    GriddedPermutation::new(
        Permutation::new(values).unwrap(),
        gp.gridding().clone(),
        gp.cols(),
        gp.rows(),
    )
    .unwrap()
}

fn permute_rows(gp: &GriddedPermutation, nu: &Permutation) -> GriddedPermutation {
    let n = gp.rows();
    debug_assert_eq!(nu.len(), n);
    let len = gp.len();
    let band = |t: usize| -> (u32, u32) {
        let lo = if t == 1 { 0 } else { gp.gridding().y[t - 2] } as u32;
        let hi = if t == n { len as u32 } else { gp.gridding().y[t - 1] as u32 };
        (lo, hi)
    };
    // New value offset of each old band, by its place in the new stacking.
    let mut offset = vec![0u32; n + 1];
    let mut acc = 0u32;
    let mut new_y = Vec::with_capacity(n - 1);
    for j in 1..=n {
        let t = nu.at(j) as usize;
        let (lo, hi) = band(t);
        offset[t] = acc;
        acc += hi - lo;
        if j < n {
            new_y.push(acc as usize);
        }
    }
    let values: Vec<u32> = gp
        .perm()
        .values()
        .iter()
        .map(|&v| {
            let t = gp.row_of(v);
            let (lo, _) = band(t);
            offset[t] + (v - lo)
        })
        .collect();
    GriddedPermutation::new(
        Permutation::new(values).unwrap(),
        Gridding {
            x: gp.gridding().x.clone(),
            y: new_y,
        },
        gp.cols(),
        gp.rows(),
    )
    .unwrap()
}

fn permute_cols(gp: &GriddedPermutation, mu: &Permutation) -> GriddedPermutation {
    let m = gp.cols();
    debug_assert_eq!(mu.len(), m);
    let len = gp.len();
    let band = |s: usize| -> (usize, usize) {
        let lo = if s == 1 { 0 } else { gp.gridding().x[s - 2] };
        let hi = if s == m { len } else { gp.gridding().x[s - 1] };
        (lo, hi)
    };
    let mut values = Vec::with_capacity(len);
    let mut new_x = Vec::with_capacity(m - 1);
    for i in 1..=m {
        let s = mu.at(i) as usize;
        let (lo, hi) = band(s);
        values.extend_from_slice(&gp.perm().values()[lo..hi]);
        if i < m {
            new_x.push(values.len());
        }
    }
    GriddedPermutation::new(
        Permutation::new(values).unwrap(),
        Gridding {
            x: new_x,
            y: gp.gridding().y.clone(),
        },
        gp.cols(),
        gp.rows(),
    )
    .unwrap()
}

fn grid_inverse_gridded(gp: &GriddedPermutation) -> GriddedPermutation {
    GriddedPermutation::new(
        gp.perm().inverse(),
        Gridding {
            x: gp.gridding().y.clone(),
            y: gp.gridding().x.clone(),
        },
        gp.rows(),
        gp.cols(),
    )
    .unwrap()
}

pub const MAPPING_ENUMERATION_CAP: u128 = 10_000_000;

/// Number of normal-form mappings with an `cols×rows` source:
/// `2·m!·n!·2^m·2^n`.
pub fn mapping_count(cols: usize, rows: usize) -> u128 {
    let fact = |k: usize| -> u128 { (1..=k as u128).product::<u128>().max(1) };
    2 * fact(cols) * fact(rows) * (1u128 << cols) * (1u128 << rows)
}

/// Every normal-form mapping with the given source dimensions, each exactly
/// once, in a fixed deterministic order.
pub fn enumerate_mappings(cols: usize, rows: usize) -> Result<Vec<GridMapping>, MapError> {
    enumerate_mappings_with_cap(cols, rows, MAPPING_ENUMERATION_CAP)
}

pub fn enumerate_mappings_with_cap(
    cols: usize,
    rows: usize,
    cap: u128,
) -> Result<Vec<GridMapping>, MapError> {
    let count = mapping_count(cols, rows);
    if count > cap {
        return Err(MapError::CapExceeded(count, cap));
    }
    let col_perms: Vec<Permutation> = Permutation::all_of_length(cols).collect();
    let row_perms: Vec<Permutation> = Permutation::all_of_length(rows).collect();
    let mut out = Vec::with_capacity(count as usize);
    for apply_inverse in [false, true] {
        for cp in &col_perms {
            for rp in &row_perms {
                for s_bits in 0u32..(1 << cols) {
                    for t_bits in 0u32..(1 << rows) {
                        let reversed_cols: BTreeSet<usize> =
                            (1..=cols).filter(|&c| s_bits & (1 << (c - 1)) != 0).collect();
                        let complemented_rows: BTreeSet<usize> =
                            (1..=rows).filter(|&r| t_bits & (1 << (r - 1)) != 0).collect();
                        out.push(GridMapping {
                            apply_inverse,
                            col_perm: cp.clone(),
                            row_perm: rp.clone(),
                            reversed_cols,
                            complemented_rows,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct MappingJson {
    inverse: bool,
    col_perm: Permutation,
    row_perm: Permutation,
    rev_cols: Vec<usize>,
    comp_rows: Vec<usize>,
}

impl Serialize for GridMapping {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MappingJson {
            inverse: self.apply_inverse,
            col_perm: self.col_perm.clone(),
            row_perm: self.row_perm.clone(),
            rev_cols: self.reversed_cols.iter().copied().collect(),
            comp_rows: self.complemented_rows.iter().copied().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GridMapping {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = MappingJson::deserialize(deserializer)?;
        GridMapping::new(
            raw.inverse,
            raw.col_perm,
            raw.row_perm,
            raw.rev_cols.into_iter().collect(),
            raw.comp_rows.into_iter().collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for GridMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "inv={} μ={} ν={} rev={:?} comp={:?}",
            self.apply_inverse,
            self.col_perm,
            self.row_perm,
            self.reversed_cols,
            self.complemented_rows
        )
    }
}

/// Report on the path-matrix conditions required by canonicalization.
#[derive(Debug, Clone, Serialize)]
pub struct PathConditions {
    /// (1) no completely empty rows or columns.
    pub no_empty_lines: bool,
    /// (2) every row and column holds at most two non-empty cells.
    pub at_most_two_per_line: bool,
    /// (3) the cell graph is a path with at least one edge.
    pub graph_is_path: bool,
    /// Both path leaves are labelled ⊕21 or ⊖12.
    pub leaves_are_closures: bool,
    /// Internal path vertices are labelled Av(21) or Av(12).
    pub internal_cells_monotone: bool,
    /// Path length (number of edges) when the graph is a path.
    pub path_length: Option<usize>,
}

impl PathConditions {
    pub fn all_hold(&self) -> bool {
        self.no_empty_lines
            && self.at_most_two_per_line
            && self.graph_is_path
            && self.leaves_are_closures
            && self.internal_cells_monotone
    }

    fn failure(&self) -> String {
        let mut bad = Vec::new();
        if !self.no_empty_lines {
            bad.push("empty row or column");
        }
        if !self.at_most_two_per_line {
            bad.push("more than two cells in a row or column");
        }
        if !self.graph_is_path {
            bad.push("cell graph is not a path of length at least one");
        }
        if !self.leaves_are_closures {
            bad.push("a leaf is not labelled sum21 or skew12");
        }
        if !self.internal_cells_monotone {
            bad.push("an internal cell is not monotone");
        }
        bad.join("; ")
    }
}

/// Checks the three conditions under which a matrix is equivalent to a
/// member of the canonical path family, with the leaf- and internal-label
/// checks reported separately.
pub fn check_path_conditions(matrix: &GriddingMatrix) -> PathConditions {
    let cells = matrix.nonempty_cells();
    let no_empty_lines = (1..=matrix.cols())
        .all(|c| cells.iter().any(|&(cc, _)| cc == c))
        && (1..=matrix.rows()).all(|r| cells.iter().any(|&(_, rr)| rr == r));
    let at_most_two_per_line = (1..=matrix.cols())
        .all(|c| cells.iter().filter(|&&(cc, _)| cc == c).count() <= 2)
        && (1..=matrix.rows()).all(|r| cells.iter().filter(|&&(_, rr)| rr == r).count() <= 2);
    let graph = matrix.graph();
    let graph_is_path = graph.is_path() && graph.vertices.len() >= 2;
    let (mut leaves_are_closures, mut internal_cells_monotone) = (false, false);
    let mut path_length = None;
    if graph_is_path {
        path_length = Some(graph.vertices.len() - 1);
        let closure = |c: &CellClass| {
            matches!(c, CellClass::SumClosure21 | CellClass::SkewClosure12)
        };
        leaves_are_closures = (0..graph.vertices.len())
            .filter(|&v| graph.neighbors(v).len() <= 1)
            .all(|v| {
                let (c, r) = graph.vertices[v];
                closure(matrix.get(c, r))
            });
        internal_cells_monotone = (0..graph.vertices.len())
            .filter(|&v| graph.neighbors(v).len() == 2)
            .all(|v| {
                let (c, r) = graph.vertices[v];
                matrix.get(c, r).is_monotone()
            });
    }
    PathConditions {
        no_empty_lines,
        at_most_two_per_line,
        graph_is_path,
        leaves_are_closures,
        internal_cells_monotone,
        path_length,
    }
}

/// Canonicalizes a path matrix: returns the path length `k` and a mapping
/// `f` with `f(M^k) == matrix`, built in three stages: an inverse decision
/// from the dimensions, row/column permutations walking the path, and
/// complements/reverses fixing the labels.
pub fn canonicalize(matrix: &GriddingMatrix) -> Result<(usize, GridMapping), MapError> {
    let conds = check_path_conditions(matrix);
    if !conds.all_hold() {
        return Err(MapError::ConditionsFailed(conds.failure()));
    }
    let k = conds.path_length.expect("path checked");
    let (mk, c_cell, _d_cell) = mk_matrix(k);

    let graph = matrix.graph();
    let leaves: Vec<(usize, usize)> = (0..graph.vertices.len())
        .filter(|&v| graph.neighbors(v).len() <= 1)
        .map(|v| graph.vertices[v])
        .collect();
    // Prefer starting from a leaf carrying the same label as the canonical
    // matrix's ⊕21 end; ties fall to the least cell.
    let mut starts = leaves.clone();
    starts.sort_by_key(|&(c, r)| {
        (
            matrix.get(c, r) != &CellClass::SumClosure21,
            c,
            r,
        )
    });

    // Try without the grid inverse first.
    for use_inverse in [false, true] {
        let f1 = if use_inverse {
            GridMapping::grid_inverse(mk.cols(), mk.rows())
        } else {
            GridMapping::identity(mk.cols(), mk.rows())
        };
        let base = f1.apply_to_matrix(&mk).expect("dims match");
        if (base.cols(), base.rows()) != (matrix.cols(), matrix.rows()) {
            continue;
        }
        let base_start = if use_inverse {
            (c_cell.1, c_cell.0)
        } else {
            c_cell
        };
        let base_path = base
            .graph()
            .path_order_from(base_start)
            .expect("canonical matrix is a path from its sum21 end");
        'candidate: for &start in &starts {
            let target_path = graph.path_order_from(start).expect("path checked");
            // Edge types must agree along the walk.
            for t in 0..k {
                let row_edge_base = base_path[t].1 == base_path[t + 1].1;
                let row_edge_target = target_path[t].1 == target_path[t + 1].1;
                if row_edge_base != row_edge_target {
                    continue 'candidate;
                }
            }
            // Stage two: permutations sending each path cell to its target.
            let mut col_map = vec![0usize; matrix.cols()];
            let mut row_map = vec![0usize; matrix.rows()];
            let mut ok = true;
            for t in 0..=k {
                let (bc, br) = base_path[t];
                let (tc, tr) = target_path[t];
                if col_map[tc - 1] != 0 && col_map[tc - 1] != bc {
                    ok = false;
                    break;
                }
                if row_map[tr - 1] != 0 && row_map[tr - 1] != br {
                    ok = false;
                    break;
                }
                col_map[tc - 1] = bc;
                row_map[tr - 1] = br;
            }
            if !ok || col_map.contains(&0) || row_map.contains(&0) {
                continue 'candidate;
            }
            let col_perm = match Permutation::new(col_map.iter().map(|&c| c as u32).collect()) {
                Ok(p) => p,
                Err(_) => continue 'candidate,
            };
            let row_perm = match Permutation::new(row_map.iter().map(|&r| r as u32).collect()) {
                Ok(p) => p,
                Err(_) => continue 'candidate,
            };
            let f2 = GridMapping {
                apply_inverse: false,
                col_perm,
                row_perm,
                reversed_cols: BTreeSet::new(),
                complemented_rows: BTreeSet::new(),
            };
            let mut working = f2.apply_to_matrix(&base).expect("dims match");

            // Stage three: complements and reverses along the path. The
            // walk fixes vertex t on the axis of the edge to vertex t+1;
            // the final vertex is alone on its other axis.
            let mut rev_cols = BTreeSet::new();
            let mut comp_rows = BTreeSet::new();
            let apply_row = |w: &mut GriddingMatrix, r: usize| {
                for c in 1..=w.cols() {
                    let cls = w.get(c, r).class_complement();
                    w.set(c, r, cls);
                }
            };
            let apply_col = |w: &mut GriddingMatrix, c: usize| {
                for r in 1..=w.rows() {
                    let cls = w.get(c, r).class_reverse();
                    w.set(c, r, cls);
                }
            };
            for t in 0..=k {
                let (c, r) = target_path[t];
                if working.get(c, r) == matrix.get(c, r) {
                    continue;
                }
                let row_edge_next = if t < k {
                    target_path[t + 1].1 == r
                } else {
                    // Last vertex: use the axis not shared with its
                    // neighbour, where it is the sole entry.
                    target_path[t - 1].1 != r
                };
                if row_edge_next {
                    apply_row(&mut working, r);
                    comp_rows.insert(r);
                } else {
                    apply_col(&mut working, c);
                    rev_cols.insert(c);
                }
            }
            if &working != matrix {
                continue 'candidate;
            }
            let f3 = GridMapping {
                apply_inverse: false,
                col_perm: Permutation::identity(matrix.cols()),
                row_perm: Permutation::identity(matrix.rows()),
                reversed_cols: rev_cols,
                complemented_rows: comp_rows,
            };
            let f = f3.compose(&f2.compose(&f1)?)?;
            let image = f.apply_to_matrix(&mk)?;
            if &image == matrix {
                return Ok((k, f));
            }
        }
    }
    Err(MapError::Canonicalize(
        "no grid mapping reproduces the matrix from the canonical family".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridding::{enumerate_griddings, gridded_contains};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn p(s: &str) -> Permutation {
        s.parse().unwrap()
    }

    fn m1() -> GriddingMatrix {
        let mut m = GriddingMatrix::new(2, 1);
        m.set(1, 1, CellClass::SumClosure21);
        m.set(2, 1, CellClass::SkewClosure12);
        m
    }

    fn gridded(perm: &str, x: &[usize], y: &[usize], cols: usize, rows: usize) -> GriddedPermutation {
        GriddedPermutation::new(
            p(perm),
            Gridding {
                x: x.to_vec(),
                y: y.to_vec(),
            },
            cols,
            rows,
        )
        .unwrap()
    }

    /// A probe matrix whose cells are pairwise distinct finitely based
    /// classes with eight distinct symmetry images each.
    fn generic_probe(cols: usize, rows: usize) -> GriddingMatrix {
        let mut asymmetric = Vec::new();
        for n in 4..=6 {
            for q in Permutation::all_of_length(n) {
                let images = [
                    q.clone(),
                    q.reverse(),
                    q.complement(),
                    q.reverse().complement(),
                    q.inverse(),
                    q.inverse().reverse(),
                    q.inverse().complement(),
                    q.inverse().reverse().complement(),
                ];
                let mut distinct = images.to_vec();
                distinct.sort();
                distinct.dedup();
                if distinct.len() == 8 {
                    asymmetric.push(q);
                    if asymmetric.len() >= cols * rows {
                        let mut m = GriddingMatrix::new(cols, rows);
                        let mut it = asymmetric.into_iter();
                        for c in 1..=cols {
                            for r in 1..=rows {
                                m.set(
                                    c,
                                    r,
                                    CellClass::finite_basis(vec![it.next().unwrap()], None)
                                        .unwrap(),
                                );
                            }
                        }
                        return m;
                    }
                }
            }
        }
        unreachable!("enough asymmetric permutations below length 7");
    }

    #[test]
    fn grid_inverse_is_an_involution() {
        let phi = GridMapping::grid_inverse(2, 1);
        let m = m1();
        let image = phi.apply_to_matrix(&m).unwrap();
        assert_eq!(image.cols(), 1);
        assert_eq!(image.rows(), 2);
        let phi_back = GridMapping::grid_inverse(1, 2);
        assert_eq!(phi_back.apply_to_matrix(&image).unwrap(), m);

        let gp = gridded("31542", &[2], &[], 2, 1);
        let img = phi.apply_to_gridded(&gp).unwrap();
        assert_eq!(phi_back.apply_to_gridded(&img).unwrap(), gp);
    }

    #[test]
    fn matrix_action_examples() {
        // Column swap of M^1 = (sum21 skew12) gives (skew12 sum21).
        let swap = GridMapping {
            apply_inverse: false,
            col_perm: p("21"),
            row_perm: Permutation::identity(1),
            reversed_cols: BTreeSet::new(),
            complemented_rows: BTreeSet::new(),
        };
        let image = swap.apply_to_matrix(&m1()).unwrap();
        assert_eq!(image.get(1, 1), &CellClass::SkewClosure12);
        assert_eq!(image.get(2, 1), &CellClass::SumClosure21);

        // Complementing row 1 of M^1 swaps the closures cellwise.
        let comp = GridMapping {
            apply_inverse: false,
            col_perm: Permutation::identity(2),
            row_perm: Permutation::identity(1),
            reversed_cols: BTreeSet::new(),
            complemented_rows: [1].into_iter().collect(),
        };
        let image = comp.apply_to_matrix(&m1()).unwrap();
        assert_eq!(image.get(1, 1), &CellClass::SkewClosure12);
        assert_eq!(image.get(2, 1), &CellClass::SumClosure21);

        let id = GridMapping::identity(2, 1);
        assert_eq!(id.apply_to_matrix(&m1()).unwrap(), m1());
    }

    #[test]
    fn gridded_action_matches_figure_three() {
        // π = 5 1 4 8 9 7 11 12 2 6 3 10 on the 3×3 grid with cuts after
        // position/value 4 and 8.
        let pi = gridded("5 1 4 8 9 7 11 12 2 6 3 10", &[4, 8], &[4, 8], 3, 3);

        let c2 = GridMapping {
            apply_inverse: false,
            col_perm: Permutation::identity(3),
            row_perm: Permutation::identity(3),
            reversed_cols: BTreeSet::new(),
            complemented_rows: [2].into_iter().collect(),
        };
        let image = c2.apply_to_gridded(&pi).unwrap();
        assert_eq!(image.perm(), &p("8 1 4 5 9 6 11 12 2 7 3 10"));
        assert_eq!(image.gridding(), pi.gridding());

        let mu = GridMapping {
            apply_inverse: false,
            col_perm: p("312"),
            row_perm: Permutation::identity(3),
            reversed_cols: BTreeSet::new(),
            complemented_rows: BTreeSet::new(),
        };
        let image = mu.apply_to_gridded(&pi).unwrap();
        assert_eq!(image.perm(), &p("2 6 3 10 5 1 4 8 9 7 11 12"));
        assert_eq!(image.gridding().x, vec![4, 8]);

        let id = GridMapping::identity(3, 3);
        assert_eq!(id.apply_to_gridded(&pi).unwrap(), pi);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let f = GridMapping::identity(2, 2);
        assert!(f.apply_to_matrix(&m1()).is_err());
        let gp = gridded("1", &[], &[], 1, 1);
        assert!(f.apply_to_gridded(&gp).is_err());
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_mappings(1, 1).unwrap().len(), 8);
        assert_eq!(enumerate_mappings(2, 1).unwrap().len(), 32);
        assert_eq!(mapping_count(2, 2), 128);
        assert!(enumerate_mappings_with_cap(3, 3, 100).is_err());
    }

    #[test]
    fn eight_mappings_of_the_unit_grid_act_as_the_eight_symmetries() {
        let probe = generic_probe(1, 1);
        let mut actions: Vec<GriddingMatrix> = enumerate_mappings(1, 1)
            .unwrap()
            .iter()
            .map(|f| f.apply_to_matrix(&probe).unwrap())
            .collect();
        actions.sort_by_key(|m| format!("{m}"));
        actions.dedup();
        assert_eq!(actions.len(), 8);
    }

    #[test]
    fn mappings_act_faithfully_on_a_generic_probe() {
        for (cols, rows) in [(2usize, 1usize), (2, 2)] {
            let probe = generic_probe(cols, rows);
            let mut seen = std::collections::BTreeMap::new();
            for f in enumerate_mappings(cols, rows).unwrap() {
                let image = format!("{}", f.apply_to_matrix(&probe).unwrap());
                if let Some(prev) = seen.insert(image, f.clone()) {
                    panic!("mappings {prev} and {f} act identically");
                }
            }
        }
    }

    #[test]
    fn inverse_mapping_undoes_the_action() {
        let probe = generic_probe(2, 2);
        let pi = gridded("465132", &[3], &[2], 2, 2);
        for f in enumerate_mappings(2, 2).unwrap() {
            let g = f.invert();
            assert_eq!(
                g.apply_to_matrix(&f.apply_to_matrix(&probe).unwrap()).unwrap(),
                probe
            );
            assert_eq!(
                g.apply_to_gridded(&f.apply_to_gridded(&pi).unwrap()).unwrap(),
                pi
            );
            assert!(g.compose(&f).unwrap().is_identity());
            assert!(f.compose(&g).unwrap().is_identity());
        }
    }

    #[test]
    fn composition_matches_sequential_application() {
        let probe = generic_probe(2, 2);
        let pi = gridded("465132", &[3], &[2], 2, 2);
        let all = enumerate_mappings(2, 2).unwrap();
        // A deterministic sample of pairs.
        for (i, f) in all.iter().enumerate().step_by(13) {
            for (j, g) in all.iter().enumerate().step_by(17) {
                if f.source_dims() != g.target_dims() {
                    continue;
                }
                let fg = f.compose(g).unwrap();
                assert_eq!(
                    fg.apply_to_matrix(&probe).unwrap(),
                    f.apply_to_matrix(&g.apply_to_matrix(&probe).unwrap()).unwrap(),
                    "f #{i} g #{j}"
                );
                assert_eq!(
                    fg.apply_to_gridded(&pi).unwrap(),
                    f.apply_to_gridded(&g.apply_to_gridded(&pi).unwrap()).unwrap(),
                );
                // Renormalized composites stay inside the enumeration.
                assert!(all.contains(&fg));
            }
        }
    }

    #[test]
    fn reversal_composed_with_itself_is_identity() {
        let r1 = GridMapping {
            apply_inverse: false,
            col_perm: Permutation::identity(2),
            row_perm: Permutation::identity(1),
            reversed_cols: [1].into_iter().collect(),
            complemented_rows: BTreeSet::new(),
        };
        assert!(r1.compose(&r1).unwrap().is_identity());
    }

    #[test]
    fn inverse_then_complement_renormalizes_correctly() {
        // φ then c_1: check action equality against the composed normal
        // form on random 2×2 matrices.
        let phi = GridMapping::grid_inverse(2, 2);
        let c1 = GridMapping {
            apply_inverse: false,
            col_perm: Permutation::identity(2),
            row_perm: Permutation::identity(2),
            reversed_cols: BTreeSet::new(),
            complemented_rows: [1].into_iter().collect(),
        };
        let composite = c1.compose(&phi).unwrap();
        assert!(composite.apply_inverse);
        let mut rng = StdRng::seed_from_u64(7);
        let kinds = [
            CellClass::Empty,
            CellClass::Increasing,
            CellClass::Decreasing,
            CellClass::SumClosure21,
            CellClass::SkewClosure12,
        ];
        for _ in 0..50 {
            let mut m = GriddingMatrix::new(2, 2);
            for c in 1..=2 {
                for r in 1..=2 {
                    m.set(c, r, kinds[rng.gen_range(0..kinds.len())].clone());
                }
            }
            assert_eq!(
                composite.apply_to_matrix(&m).unwrap(),
                c1.apply_to_matrix(&phi.apply_to_matrix(&m).unwrap()).unwrap()
            );
        }
    }

    #[test]
    fn gridded_containment_is_mapping_invariant() {
        // α ≤ π iff f(α) ≤ f(π), sampled over all 2×1 and 2×2 mappings.
        let mut rng = StdRng::seed_from_u64(42);
        for (cols, rows) in [(2usize, 1usize), (2, 2)] {
            let mappings = enumerate_mappings(cols, rows).unwrap();
            for _ in 0..40 {
                let na = rng.gen_range(1..=4);
                let nt = rng.gen_range(na..=6);
                let alpha = random_gridded(&mut rng, na, cols, rows);
                let pi = random_gridded(&mut rng, nt, cols, rows);
                let base = gridded_contains(&alpha, &pi).unwrap();
                for f in &mappings {
                    let fa = f.apply_to_gridded(&alpha).unwrap();
                    let fp = f.apply_to_gridded(&pi).unwrap();
                    assert_eq!(gridded_contains(&fa, &fp).unwrap(), base);
                }
            }
        }
    }

    fn random_gridded(
        rng: &mut StdRng,
        len: usize,
        cols: usize,
        rows: usize,
    ) -> GriddedPermutation {
        let mut values: Vec<u32> = (1..=len as u32).collect();
        for i in (1..values.len()).rev() {
            values.swap(i, rng.gen_range(0..=i));
        }
        let mut cuts = |count: usize| -> Vec<usize> {
            let mut v: Vec<usize> = (0..count).map(|_| rng.gen_range(0..=len)).collect();
            v.sort();
            v
        };
        GriddedPermutation::new(
            Permutation::new(values).unwrap(),
            Gridding {
                x: cuts(cols - 1),
                y: cuts(rows - 1),
            },
            cols,
            rows,
        )
        .unwrap()
    }

    #[test]
    fn cell_contents_commute_with_the_action() {
        let pi = gridded("5 1 4 8 9 7 11 12 2 6 3 10", &[4, 8], &[4, 8], 3, 3);
        for f in enumerate_mappings(3, 3).unwrap().iter().step_by(11) {
            let image = f.apply_to_gridded(&pi).unwrap();
            let (tm, tn) = f.target_dims();
            for i in 1..=tm {
                for j in 1..=tn {
                    let (sc, sr) = if f.apply_inverse {
                        (f.col_perm.at(j) as usize, f.row_perm.at(i) as usize)
                    } else {
                        (f.col_perm.at(i) as usize, f.row_perm.at(j) as usize)
                    };
                    let mut expected = pi.cell_contents(sc, sr).unwrap();
                    if f.complemented_rows.contains(&sr) {
                        expected = expected.complement();
                    }
                    if f.reversed_cols.contains(&sc) {
                        expected = expected.reverse();
                    }
                    if f.apply_inverse {
                        expected = expected.inverse();
                    }
                    assert_eq!(image.cell_contents(i, j).unwrap(), expected);
                }
            }
        }
    }

    #[test]
    fn mapping_preserves_matrix_satisfaction() {
        let m = m1();
        let mappings = enumerate_mappings(2, 1).unwrap();
        for n in 0..=5usize {
            for perm in Permutation::all_of_length(n) {
                for g in enumerate_griddings(&perm, &m).unwrap() {
                    let gp = GriddedPermutation::new(perm.clone(), g, 2, 1).unwrap();
                    for f in &mappings {
                        let fm = f.apply_to_matrix(&m).unwrap();
                        let fgp = f.apply_to_gridded(&gp).unwrap();
                        assert!(fgp.satisfies(&fm), "f {f} gp {gp}");
                    }
                }
            }
        }
    }

    #[test]
    fn path_conditions_examples() {
        for k in 1..=6 {
            let (mk, _, _) = mk_matrix(k);
            let conds = check_path_conditions(&mk);
            assert!(conds.all_hold(), "M^{k}: {conds:?}");
            assert_eq!(conds.path_length, Some(k));
        }

        // Relabelling a leaf of M^1 with a monotone class breaks the leaf
        // condition.
        let mut m = m1();
        m.set(1, 1, CellClass::Increasing);
        let conds = check_path_conditions(&m);
        assert!(!conds.leaves_are_closures);
        assert!(!conds.all_hold());

        // An all-empty row breaks condition (1).
        let mut m = GriddingMatrix::new(2, 2);
        m.set(1, 1, CellClass::SumClosure21);
        m.set(2, 1, CellClass::SkewClosure12);
        let conds = check_path_conditions(&m);
        assert!(!conds.no_empty_lines);
    }

    #[test]
    fn canonicalize_fixed_points_and_inverse() {
        for k in 1..=5 {
            let (mk, _, _) = mk_matrix(k);
            let (kk, f) = canonicalize(&mk).unwrap();
            assert_eq!(kk, k);
            assert!(f.is_identity(), "M^{k} should canonicalize trivially: {f}");
        }

        let (m3, _, _) = mk_matrix(3);
        let phi = GridMapping::grid_inverse(m3.cols(), m3.rows());
        let image = phi.apply_to_matrix(&m3).unwrap();
        let (k, f) = canonicalize(&image).unwrap();
        assert_eq!(k, 3);
        assert!(f.apply_inverse);
        assert_eq!(f.apply_to_matrix(&m3).unwrap(), image);
    }

    #[test]
    fn canonicalize_column_swap_example() {
        let mut m = GriddingMatrix::new(2, 1);
        m.set(1, 1, CellClass::SkewClosure12);
        m.set(2, 1, CellClass::SumClosure21);
        let (k, f) = canonicalize(&m).unwrap();
        assert_eq!(k, 1);
        assert!(!f.apply_inverse);
        assert_eq!(f.col_perm, p("21"));
        assert!(f.reversed_cols.is_empty() && f.complemented_rows.is_empty());
        let (m1_mat, _, _) = mk_matrix(1);
        assert_eq!(f.apply_to_matrix(&m1_mat).unwrap(), m);
    }

    #[test]
    fn canonicalize_recovers_random_images() {
        let mut rng = StdRng::seed_from_u64(2025);
        for k in 1..=4usize {
            let (mk, _, _) = mk_matrix(k);
            let mappings = enumerate_mappings(mk.cols(), mk.rows()).unwrap();
            for _ in 0..40 {
                let f = &mappings[rng.gen_range(0..mappings.len())];
                let image = f.apply_to_matrix(&mk).unwrap();
                let (kk, g) = canonicalize(&image).unwrap();
                assert_eq!(kk, k);
                assert_eq!(g.apply_to_matrix(&mk).unwrap(), image);
            }
        }
    }

    #[test]
    fn canonicalize_rejects_non_path_matrices() {
        let mut m = GriddingMatrix::new(2, 2);
        for c in 1..=2 {
            for r in 1..=2 {
                m.set(c, r, CellClass::Increasing);
            }
        }
        assert!(matches!(canonicalize(&m), Err(MapError::ConditionsFailed(_))));
    }

    #[test]
    fn mapping_json_round_trip() {
        let f = GridMapping {
            apply_inverse: true,
            col_perm: p("231"),
            row_perm: p("12"),
            reversed_cols: [1, 3].into_iter().collect(),
            complemented_rows: [2].into_iter().collect(),
        };
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.contains("\"inverse\":true"));
        let back: GridMapping = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
    }
}
