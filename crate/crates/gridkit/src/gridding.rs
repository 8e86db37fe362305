//! Gridding matrices, griddings of permutations, gridding enumeration,
//! gridded containment, and the graph on the non-empty cells of a matrix.
//!
//! Matrices are indexed `(column, row)` from the bottom-left, both 1-based.
//! Grid lines are replaced by integer cuts: a column cut vector
//! `x_1 ≤ … ≤ x_{m−1}` assigns position `i` to column `s` iff
//! `x_{s−1} < i ≤ x_s` (with `x_0 = 0`, `x_m = ℓ`), and row cuts partition
//! values the same way. Cell contents depend only on which side of each
//! line a point falls, so nothing is lost by making cuts integral.

use crate::classes::CellClass;
use crate::perm::Permutation;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("cell ({0}, {1}) is out of range for a {2}×{3} matrix")]
    CellOutOfRange(usize, usize, usize, usize),
    #[error("gridding shape does not match: {0}")]
    MalformedGridding(String),
    #[error("gridded permutations have different dimensions: {0}×{1} vs {2}×{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
}

/// An `m×n` matrix of cell classes, `m` columns and `n` rows, indexed from
/// the bottom-left corner.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GriddingMatrix {
    cols: usize,
    rows: usize,
    cells: Vec<CellClass>,
}

impl GriddingMatrix {
    /// An all-empty matrix. Dimensions must be at least 1×1.
    pub fn new(cols: usize, rows: usize) -> Self {
        assert!(cols >= 1 && rows >= 1, "matrix dimensions must be positive");
        GriddingMatrix {
            cols,
            rows,
            cells: vec![CellClass::Empty; cols * rows],
        }
    }

    /// Builds a matrix row by row from the top, the way it is displayed on
    /// paper: `display[0]` is the top row.
    pub fn from_rows_top_down(display: Vec<Vec<CellClass>>) -> Self {
        let rows = display.len();
        let cols = display.first().map(|r| r.len()).unwrap_or(0);
        assert!(rows >= 1 && cols >= 1 && display.iter().all(|r| r.len() == cols));
        let mut m = GriddingMatrix::new(cols, rows);
        for (i, row) in display.into_iter().enumerate() {
            for (j, class) in row.into_iter().enumerate() {
                m.set(j + 1, rows - i, class);
            }
        }
        m
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    fn index(&self, col: usize, row: usize) -> usize {
        debug_assert!(self.in_range(col, row));
        (col - 1) + (row - 1) * self.cols
    }

    pub fn in_range(&self, col: usize, row: usize) -> bool {
        (1..=self.cols).contains(&col) && (1..=self.rows).contains(&row)
    }

    pub fn get(&self, col: usize, row: usize) -> &CellClass {
        &self.cells[self.index(col, row)]
    }

    pub fn set(&mut self, col: usize, row: usize, class: CellClass) {
        let i = self.index(col, row);
        self.cells[i] = class;
    }

    /// Non-empty cells in column-major (col, row) order.
    pub fn nonempty_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for col in 1..=self.cols {
            for row in 1..=self.rows {
                if !self.get(col, row).is_empty_class() {
                    out.push((col, row));
                }
            }
        }
        out
    }

    /// The graph on non-empty cells: two cells are adjacent iff they share
    /// a row or a column and every cell strictly between them is empty.
    pub fn graph(&self) -> MatrixGraph {
        let vertices = self.nonempty_cells();
        let mut adj = vec![Vec::new(); vertices.len()];
        for (a, &(c1, r1)) in vertices.iter().enumerate() {
            for (b, &(c2, r2)) in vertices.iter().enumerate().skip(a + 1) {
                let adjacent = if c1 == c2 {
                    let (lo, hi) = (r1.min(r2), r1.max(r2));
                    (lo + 1..hi).all(|r| self.get(c1, r).is_empty_class())
                } else if r1 == r2 {
                    let (lo, hi) = (c1.min(c2), c1.max(c2));
                    (lo + 1..hi).all(|c| self.get(c, r1).is_empty_class())
                } else {
                    false
                };
                if adjacent {
                    adj[a].push(b);
                    adj[b].push(a);
                }
            }
        }
        MatrixGraph { vertices, adj }
    }

    /// The connected components, each returned as a matrix of the original
    /// dimensions with all other cells emptied, ordered by least cell.
    pub fn components(&self) -> Vec<GriddingMatrix> {
        self.graph()
            .component_vertex_sets()
            .into_iter()
            .map(|cells| {
                let mut m = GriddingMatrix::new(self.cols, self.rows);
                for (c, r) in cells {
                    m.set(c, r, self.get(c, r).clone());
                }
                m
            })
            .collect()
    }

    pub fn is_forest(&self) -> bool {
        self.graph().is_forest()
    }

    pub fn is_path(&self) -> bool {
        self.graph().is_path()
    }
}

impl fmt::Display for GriddingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in (1..=self.rows).rev() {
            for col in 1..=self.cols {
                if col > 1 {
                    write!(f, " ")?;
                }
                let cell = self.get(col, row);
                if cell.is_empty_class() {
                    write!(f, ".")?;
                } else {
                    write!(f, "{cell}")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixCellJson {
    col: usize,
    row: usize,
    class: CellClass,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    cols: usize,
    rows: usize,
    cells: Vec<MatrixCellJson>,
}

impl Serialize for GriddingMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let cells = self
            .nonempty_cells()
            .into_iter()
            .map(|(col, row)| MatrixCellJson {
                col,
                row,
                class: self.get(col, row).clone(),
            })
            .collect();
        MatrixJson {
            cols: self.cols,
            rows: self.rows,
            cells,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GriddingMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        if raw.cols < 1 || raw.rows < 1 {
            return Err(serde::de::Error::custom("matrix dimensions must be positive"));
        }
        let mut m = GriddingMatrix::new(raw.cols, raw.rows);
        for cell in raw.cells {
            if !m.in_range(cell.col, cell.row) {
                return Err(serde::de::Error::custom(format!(
                    "cell ({}, {}) out of range",
                    cell.col, cell.row
                )));
            }
            m.set(cell.col, cell.row, cell.class);
        }
        Ok(m)
    }
}

/// Graph over the non-empty cells of a matrix.
#[derive(Debug, Clone)]
pub struct MatrixGraph {
    pub vertices: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
}

impl MatrixGraph {
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    fn component_vertex_sets(&self) -> Vec<Vec<(usize, usize)>> {
        let mut seen = vec![false; self.vertices.len()];
        let mut out = Vec::new();
        for start in 0..self.vertices.len() {
            if seen[start] {
                continue;
            }
            let mut stack = vec![start];
            let mut cells = Vec::new();
            seen[start] = true;
            while let Some(v) = stack.pop() {
                cells.push(self.vertices[v]);
                for &w in &self.adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            cells.sort();
            out.push(cells);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.component_vertex_sets().len() <= 1
    }

    /// Acyclic iff every component has exactly one more vertex than edges.
    pub fn is_forest(&self) -> bool {
        let components = self.component_vertex_sets().len();
        self.vertices.len() == self.edge_count() + components
    }

    /// A path: connected, acyclic, and no vertex of degree three or more.
    /// A single vertex counts as a path of length zero.
    pub fn is_path(&self) -> bool {
        !self.vertices.is_empty()
            && self.is_connected()
            && self.is_forest()
            && self.adj.iter().all(|a| a.len() <= 2)
    }

    /// Vertices of a path graph in order, starting from `start` (which must
    /// be an endpoint, or the sole vertex).
    pub fn path_order_from(&self, start: (usize, usize)) -> Option<Vec<(usize, usize)>> {
        if !self.is_path() {
            return None;
        }
        let s = self.vertices.iter().position(|&v| v == start)?;
        if self.adj[s].len() > 1 {
            return None;
        }
        let mut order = vec![s];
        let mut prev = usize::MAX;
        let mut cur = s;
        while let Some(&next) = self.adj[cur].iter().find(|&&w| w != prev) {
            order.push(next);
            prev = cur;
            cur = next;
        }
        Some(order.into_iter().map(|v| self.vertices[v]).collect())
    }
}

/// Cut positions of a gridding: `x[s-1]` is the number of points at or left
/// of the s-th vertical line, `y[t-1]` the number of values at or below the
/// t-th horizontal line.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gridding {
    pub x: Vec<usize>,
    pub y: Vec<usize>,
}

/// A permutation equipped with a particular `m×n`-gridding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GriddedPermutation {
    perm: Permutation,
    gridding: Gridding,
    cols: usize,
    rows: usize,
}

impl GriddedPermutation {
    pub fn new(
        perm: Permutation,
        gridding: Gridding,
        cols: usize,
        rows: usize,
    ) -> Result<Self, GridError> {
        let len = perm.len();
        let check = |cuts: &[usize], want: usize, axis: &str| -> Result<(), GridError> {
            if cuts.len() != want {
                return Err(GridError::MalformedGridding(format!(
                    "{axis} cuts: expected {want}, got {}",
                    cuts.len()
                )));
            }
            let mut prev = 0usize;
            for &c in cuts {
                if c < prev || c > len {
                    return Err(GridError::MalformedGridding(format!(
                        "{axis} cuts must be nondecreasing within 0..={len}"
                    )));
                }
                prev = c;
            }
            Ok(())
        };
        check(&gridding.x, cols - 1, "column")?;
        check(&gridding.y, rows - 1, "row")?;
        Ok(GriddedPermutation {
            perm,
            gridding,
            cols,
            rows,
        })
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn gridding(&self) -> &Gridding {
        &self.gridding
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Column of the 1-based position `pos`.
    pub fn column_of(&self, pos: usize) -> usize {
        self.gridding.x.iter().take_while(|&&c| c < pos).count() + 1
    }

    /// Row of the value `v`.
    pub fn row_of(&self, v: u32) -> usize {
        self.gridding.y.iter().take_while(|&&c| (c as u32) < v).count() + 1
    }

    /// Cell of the point at 1-based position `pos`.
    pub fn cell_of(&self, pos: usize) -> (usize, usize) {
        (self.column_of(pos), self.row_of(self.perm.at(pos)))
    }

    /// Points of a cell as (position, value) pairs, in position order.
    pub fn cell_points(&self, col: usize, row: usize) -> Result<Vec<(usize, u32)>, GridError> {
        if !(1..=self.cols).contains(&col) || !(1..=self.rows).contains(&row) {
            return Err(GridError::CellOutOfRange(col, row, self.cols, self.rows));
        }
        Ok((1..=self.perm.len())
            .filter(|&p| self.cell_of(p) == (col, row))
            .map(|p| (p, self.perm.at(p)))
            .collect())
    }

    /// The permutation order isomorphic to the points of a cell; possibly
    /// empty.
    pub fn cell_contents(&self, col: usize, row: usize) -> Result<Permutation, GridError> {
        Ok(Permutation::from_points(&self.cell_points(col, row)?))
    }

    /// True iff every cell's contents lie in the corresponding class of
    /// `matrix` (which must have the same dimensions).
    pub fn satisfies(&self, matrix: &GriddingMatrix) -> bool {
        matrix.cols() == self.cols
            && matrix.rows() == self.rows
            && (1..=self.cols).all(|c| {
                (1..=self.rows).all(|r| {
                    matrix
                        .get(c, r)
                        .member(&self.cell_contents(c, r).expect("cell in range"))
                })
            })
    }
}

impl fmt::Display for GriddedPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [x={:?} y={:?}]",
            self.perm, self.gridding.x, self.gridding.y
        )
    }
}

/// Caps for gridding enumeration; the defaults cover desk-scale inputs.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationCaps {
    pub max_len: usize,
    pub max_cut_lines: usize,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        EnumerationCaps {
            max_len: 60,
            max_cut_lines: 6,
        }
    }
}

/// All griddings of `perm` whose cell contents satisfy `matrix`, in
/// lexicographic cut order (x vector major, y vector minor).
///
/// The enumeration prunes a column-cut prefix as soon as a completed column
/// cannot be split into valid cell contents by any choice of row cuts.
pub fn enumerate_griddings(
    perm: &Permutation,
    matrix: &GriddingMatrix,
) -> Result<Vec<Gridding>, GridError> {
    enumerate_griddings_with_caps(perm, matrix, EnumerationCaps::default())
}

pub fn enumerate_griddings_with_caps(
    perm: &Permutation,
    matrix: &GriddingMatrix,
    caps: EnumerationCaps,
) -> Result<Vec<Gridding>, GridError> {
    if perm.len() > caps.max_len {
        return Err(GridError::CapExceeded(format!(
            "length {} > {}",
            perm.len(),
            caps.max_len
        )));
    }
    if (matrix.cols() - 1) + (matrix.rows() - 1) > caps.max_cut_lines {
        return Err(GridError::CapExceeded(format!(
            "{} cut lines > {}",
            (matrix.cols() - 1) + (matrix.rows() - 1),
            caps.max_cut_lines
        )));
    }
    let mut out = Vec::new();
    let mut x = Vec::with_capacity(matrix.cols() - 1);
    enumerate_x(perm, matrix, &mut x, &mut out);
    Ok(out)
}

fn column_pattern(perm: &Permutation, from: usize, to: usize) -> Permutation {
    perm.pattern_at(&(from..to).collect::<Vec<_>>())
}

/// Can `pattern` be split by value into bands lying in `classes`
/// (bottom-up)? Used to prune column prefixes: a column that cannot be
/// split on its own can never take part in a full gridding.
fn splittable_by_value(pattern: &Permutation, classes: &[CellClass]) -> bool {
    fn rec(pattern: &Permutation, classes: &[CellClass], from: u32, t: usize) -> bool {
        let n = pattern.len() as u32;
        if t == classes.len() - 1 {
            let band: Vec<usize> = (0..pattern.len())
                .filter(|&i| pattern.values()[i] > from)
                .collect();
            return classes[t].member(&pattern.pattern_at(&band));
        }
        for hi in from..=n {
            let band: Vec<usize> = (0..pattern.len())
                .filter(|&i| pattern.values()[i] > from && pattern.values()[i] <= hi)
                .collect();
            if classes[t].member(&pattern.pattern_at(&band))
                && rec(pattern, classes, hi, t + 1)
            {
                return true;
            }
        }
        false
    }
    rec(pattern, classes, 0, 0)
}

fn enumerate_x(
    perm: &Permutation,
    matrix: &GriddingMatrix,
    x: &mut Vec<usize>,
    out: &mut Vec<Gridding>,
) {
    let m = matrix.cols();
    let s = x.len() + 1; // column being completed by the next cut
    let prev = x.last().copied().unwrap_or(0);
    if x.len() == m - 1 {
        // Last column runs to the end; check it, then choose row cuts.
        let classes: Vec<CellClass> = (1..=matrix.rows())
            .map(|r| matrix.get(m, r).clone())
            .collect();
        if !splittable_by_value(&column_pattern(perm, prev, perm.len()), &classes) {
            return;
        }
        let mut y = Vec::with_capacity(matrix.rows() - 1);
        enumerate_y(perm, matrix, x, &mut y, out);
        return;
    }
    for cut in prev..=perm.len() {
        let classes: Vec<CellClass> = (1..=matrix.rows())
            .map(|r| matrix.get(s, r).clone())
            .collect();
        if splittable_by_value(&column_pattern(perm, prev, cut), &classes) {
            x.push(cut);
            enumerate_x(perm, matrix, x, out);
            x.pop();
        }
    }
}

fn enumerate_y(
    perm: &Permutation,
    matrix: &GriddingMatrix,
    x: &[usize],
    y: &mut Vec<usize>,
    out: &mut Vec<Gridding>,
) {
    let n = matrix.rows();
    let band_ok = |lo: usize, hi: usize, row: usize| -> bool {
        (1..=matrix.cols()).all(|col| {
            let from = if col == 1 { 0 } else { x[col - 2] };
            let to = if col == matrix.cols() {
                perm.len()
            } else {
                x[col - 1]
            };
            let band: Vec<usize> = (from..to)
                .filter(|&i| {
                    let v = perm.values()[i] as usize;
                    v > lo && v <= hi
                })
                .collect();
            matrix.get(col, row).member(&perm.pattern_at(&band))
        })
    };
    let prev = y.last().copied().unwrap_or(0);
    if y.len() == n - 1 {
        if band_ok(prev, perm.len(), n) {
            out.push(Gridding {
                x: x.to_vec(),
                y: y.clone(),
            });
        }
        return;
    }
    let t = y.len() + 1;
    for cut in prev..=perm.len() {
        if band_ok(prev, cut, t) {
            y.push(cut);
            enumerate_y(perm, matrix, x, y, out);
            y.pop();
        }
    }
}

pub fn is_griddable(perm: &Permutation, matrix: &GriddingMatrix) -> Result<bool, GridError> {
    Ok(!enumerate_griddings(perm, matrix)?.is_empty())
}

pub fn gridding_count(perm: &Permutation, matrix: &GriddingMatrix) -> Result<usize, GridError> {
    Ok(enumerate_griddings(perm, matrix)?.len())
}

/// The gridding if it is unique, otherwise `None`.
pub fn unique_gridding(
    perm: &Permutation,
    matrix: &GriddingMatrix,
) -> Result<Option<Gridding>, GridError> {
    let mut all = enumerate_griddings(perm, matrix)?;
    if all.len() == 1 {
        Ok(Some(all.remove(0)))
    } else {
        Ok(None)
    }
}

/// Gridded containment `alpha ≤ pi`: an embedding of `alpha.perm()` into
/// `pi.perm()` in which every point lands in the same cell as its preimage.
pub fn gridded_contains(
    alpha: &GriddedPermutation,
    pi: &GriddedPermutation,
) -> Result<bool, GridError> {
    if alpha.cols() != pi.cols() || alpha.rows() != pi.rows() {
        return Err(GridError::DimensionMismatch(
            alpha.cols(),
            alpha.rows(),
            pi.cols(),
            pi.rows(),
        ));
    }
    let k = alpha.len();
    if k == 0 {
        return Ok(true);
    }
    if k > pi.len() {
        return Ok(false);
    }
    let ap = alpha.perm();
    let tp = pi.perm();
    let mut below = vec![usize::MAX; k];
    let mut above = vec![usize::MAX; k];
    for i in 0..k {
        for j in 0..i {
            if ap.values()[j] < ap.values()[i]
                && (below[i] == usize::MAX || ap.values()[j] > ap.values()[below[i]])
            {
                below[i] = j;
            }
            if ap.values()[j] > ap.values()[i]
                && (above[i] == usize::MAX || ap.values()[j] < ap.values()[above[i]])
            {
                above[i] = j;
            }
        }
    }
    let cells: Vec<(usize, usize)> = (1..=k).map(|p| alpha.cell_of(p)).collect();
    fn rec(
        alpha_cells: &[(usize, usize)],
        pi: &GriddedPermutation,
        below: &[usize],
        above: &[usize],
        chosen: &mut [usize],
        i: usize,
        start: usize,
    ) -> bool {
        let k = alpha_cells.len();
        if i == k {
            return true;
        }
        let tp = pi.perm();
        let last = tp.len() - (k - i);
        for j in start..=last {
            if pi.cell_of(j + 1) != alpha_cells[i] {
                continue;
            }
            let v = tp.values()[j];
            let lo = if below[i] == usize::MAX {
                0
            } else {
                tp.values()[chosen[below[i]]]
            };
            let hi = if above[i] == usize::MAX {
                u32::MAX
            } else {
                tp.values()[chosen[above[i]]]
            };
            if v > lo && v < hi {
                chosen[i] = j;
                if rec(alpha_cells, pi, below, above, chosen, i + 1, j + 1) {
                    return true;
                }
            }
        }
        false
    }
    let _ = (ap, tp);
    let mut chosen = vec![0usize; k];
    Ok(rec(&cells, pi, &below, &above, &mut chosen, 0, 0))
}
