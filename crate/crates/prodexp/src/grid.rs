//! The cell grid [n]^D, its axis-parallel lines, and epsilon-closures of
//! cell sets.
//!
//! Cells are addressed two ways: as coordinate vectors and as flat indices
//! with coordinate 0 most significant (index = sum of x_i * n^(D-1-i)).
//! That order matches the Kronecker-product convention in the matrix layer,
//! so a grid word laid out by flat index multiplies directly against
//! tensor-product parity matrices.

use crate::{Error, Rat, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    n: usize,
    d: usize,
    cells: usize,
}

/// Axis-parallel line: coordinate `dir` varies, the others are pinned to
/// `fixed` (in coordinate order, with position `dir` skipped).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Line {
    pub dir: usize,
    pub fixed: Vec<usize>,
}

impl Grid {
    pub fn new(n: usize, d: usize) -> Result<Grid> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument("grid needs n >= 1 and D >= 1".into()));
        }
        let cells = n
            .checked_pow(d as u32)
            .filter(|&c| c <= 1 << 26)
            .ok_or_else(|| Error::InvalidArgument(format!("grid {n}^{d} is too large")))?;
        Ok(Grid { n, d, cells })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.d);
        coords.iter().fold(0, |acc, &x| {
            debug_assert!(x < self.n);
            acc * self.n + x
        })
    }

    pub fn coords(&self, mut index: usize) -> Vec<usize> {
        debug_assert!(index < self.cells);
        let mut out = vec![0; self.d];
        for i in (0..self.d).rev() {
            out[i] = index % self.n;
            index /= self.n;
        }
        out
    }

    pub fn num_lines(&self) -> usize {
        self.d * self.cells / self.n
    }

    /// Lines in a fixed global order: direction ascending, then the pinned
    /// coordinates lexicographically.
    pub fn all_lines(&self) -> Vec<Line> {
        let per_dir = self.cells / self.n;
        let mut out = Vec::with_capacity(self.num_lines());
        for dir in 0..self.d {
            let mut fixed = vec![0; self.d - 1];
            for _ in 0..per_dir {
                out.push(Line { dir, fixed: fixed.clone() });
                for i in (0..self.d - 1).rev() {
                    fixed[i] += 1;
                    if fixed[i] < self.n {
                        break;
                    }
                    fixed[i] = 0;
                }
            }
        }
        out
    }

    pub fn line_index(&self, line: &Line) -> usize {
        let per_dir = self.cells / self.n;
        let offset = line.fixed.iter().fold(0, |acc, &x| acc * self.n + x);
        line.dir * per_dir + offset
    }

    /// Cell indices along the line, in order of the varying coordinate.
    pub fn line_cells(&self, line: &Line) -> Vec<usize> {
        let mut coords = vec![0; self.d];
        let mut fi = 0;
        for i in 0..self.d {
            if i != line.dir {
                coords[i] = line.fixed[fi];
                fi += 1;
            }
        }
        // The varying coordinate contributes v * stride to the flat index.
        let stride = self.n.pow((self.d - 1 - line.dir) as u32);
        coords[line.dir] = 0;
        let base = self.index(&coords);
        (0..self.n).map(|v| base + v * stride).collect()
    }

    pub fn lines_through(&self, cell: usize) -> Vec<Line> {
        let coords = self.coords(cell);
        (0..self.d)
            .map(|dir| {
                let fixed = coords
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != dir)
                    .map(|(_, &x)| x)
                    .collect();
                Line { dir, fixed }
            })
            .collect()
    }
}

/// Bit-packed cell subset of a fixed grid.
#[derive(Clone, PartialEq, Eq)]
pub struct CellSet {
    grid: Grid,
    blocks: Vec<u64>,
    len: usize,
}

impl std::fmt::Debug for CellSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let cells: Vec<Vec<usize>> = self.iter().map(|c| self.grid.coords(c)).collect();
        write!(f, "CellSet({cells:?})")
    }
}

impl CellSet {
    pub fn empty(grid: Grid) -> CellSet {
        CellSet { grid, blocks: vec![0; grid.cells().div_ceil(64)], len: 0 }
    }

    pub fn full(grid: Grid) -> CellSet {
        let mut s = CellSet::empty(grid);
        for c in 0..grid.cells() {
            s.insert(c);
        }
        s
    }

    pub fn from_indices(grid: Grid, indices: &[usize]) -> CellSet {
        let mut s = CellSet::empty(grid);
        for &c in indices {
            s.insert(c);
        }
        s
    }

    pub fn from_coords(grid: Grid, coords: &[&[usize]]) -> CellSet {
        let mut s = CellSet::empty(grid);
        for c in coords {
            s.insert(grid.index(c));
        }
        s
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, cell: usize) -> bool {
        debug_assert!(cell < self.grid.cells());
        let (b, bit) = (cell / 64, 1u64 << (cell % 64));
        if self.blocks[b] & bit == 0 {
            self.blocks[b] |= bit;
            self.len += 1;
            true
        } else {
            false
        }
    }

    pub fn contains(&self, cell: usize) -> bool {
        self.blocks[cell / 64] >> (cell % 64) & 1 == 1
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.grid.cells()).filter(move |&c| self.contains(c))
    }

    pub fn is_subset_of(&self, other: &CellSet) -> bool {
        self.grid == other.grid
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        assert_eq!(self.grid, other.grid);
        let blocks: Vec<u64> =
            self.blocks.iter().zip(&other.blocks).map(|(a, b)| a | b).collect();
        let len = blocks.iter().map(|b| b.count_ones() as usize).sum();
        CellSet { grid: self.grid, blocks, len }
    }

    pub fn line_count(&self, line: &Line) -> usize {
        self.grid.line_cells(line).iter().filter(|&&c| self.contains(c)).count()
    }

    /// Lines fully contained in the set.
    pub fn lines_in(&self) -> Vec<Line> {
        self.grid
            .all_lines()
            .into_iter()
            .filter(|l| self.line_count(l) == self.grid.n())
            .collect()
    }
}

fn check_eps(eps: Rat) -> Result<()> {
    if *eps.numer() == 0 || eps > Rat::new(1, 1) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} outside (0, 1]")));
    }
    Ok(())
}

/// True when every line is either contained in the set or meets it in
/// strictly fewer than eps*n cells. Note the boundary: a fixed point of
/// eps_closure may still have an outside line meeting it in exactly eps*n
/// cells, so closures are not always closed in this strict sense.
pub fn is_eps_closed(set: &CellSet, eps: Rat) -> Result<bool> {
    check_eps(eps)?;
    let grid = set.grid();
    let n = grid.n() as u128;
    Ok(grid.all_lines().iter().all(|line| {
        let hits = set.line_count(line);
        hits == grid.n()
            || (hits as u128) * (*eps.denom() as u128) < (*eps.numer() as u128) * n
    }))
}

#[derive(Clone, Debug)]
pub struct ClosureTrace {
    /// State after each round that added cells; the last entry (or the seed,
    /// if no round fires) is the closure.
    pub rounds: Vec<CellSet>,
    pub result: CellSet,
}

/// Smallest eps-closed superset, grown round by round: each round adds every
/// line that is not yet contained but meets the current set in more than
/// eps*n cells, all such lines at once.
pub fn eps_closure_rounds(seed: &CellSet, eps: Rat) -> Result<ClosureTrace> {
    check_eps(eps)?;
    let grid = seed.grid();
    let n = grid.n();
    let lines = grid.all_lines();
    let mut current = seed.clone();
    let mut rounds = Vec::new();
    // Work list: after the first full scan, only lines through newly added
    // cells can newly cross the threshold.
    let mut dirty: Vec<usize> = (0..lines.len()).collect();
    loop {
        let to_add: Vec<usize> = dirty
            .iter()
            .copied()
            .filter(|&li| {
                let hits = current.line_count(&lines[li]);
                hits < n
                    && (hits as u128) * (*eps.denom() as u128)
                        > (*eps.numer() as u128) * (n as u128)
            })
            .collect();
        if to_add.is_empty() {
            break;
        }
        let mut next = current.clone();
        let mut next_dirty = Vec::new();
        for li in to_add {
            for c in grid.line_cells(&lines[li]) {
                if next.insert(c) {
                    for touched in grid.lines_through(c) {
                        next_dirty.push(grid.line_index(&touched));
                    }
                }
            }
        }
        next_dirty.sort_unstable();
        next_dirty.dedup();
        dirty = next_dirty;
        current = next;
        rounds.push(current.clone());
    }
    Ok(ClosureTrace { rounds, result: current })
}

pub fn eps_closure(seed: &CellSet, eps: Rat) -> Result<CellSet> {
    Ok(eps_closure_rounds(seed, eps)?.result)
}

/// ((2^D + 1) / eps)^D, the guaranteed bound on |closure| / |seed|.
pub fn closure_constant(eps: Rat, d: usize) -> Result<Rat> {
    check_eps(eps)?;
    let two_d = 1u64
        .checked_shl(d as u32)
        .and_then(|v| v.checked_add(1))
        .ok_or_else(|| Error::InvalidArgument("dimension too large".into()))?;
    let base = Rat::new(two_d * eps.denom(), *eps.numer());
    let mut out = Rat::new(1, 1);
    for _ in 0..d {
        out = Rat::new(
            out.numer()
                .checked_mul(*base.numer())
                .ok_or_else(|| Error::InvalidArgument("closure constant overflow".into()))?,
            out.denom() * base.denom(),
        );
    }
    Ok(out)
}
