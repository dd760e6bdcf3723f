//! Cellular-sheaf route to the expansion factor: the poset ([n] ∪ {*})^D,
//! local tensor codes on the upward sets, the cochain complex, and the
//! coboundary expansion constants eta^i. Serves as an independent oracle
//! for the combinatorial computation in the expansion module.

use crate::expansion::RhoValue;
use crate::field::Field;
use crate::matrix::Mat;
use crate::product::CodeTuple;
use crate::{Caps, Error, Rat, Result};

/// One cell of the complex. `None` marks a free coordinate; the upward set
/// X_sigma consists of the full-grid cells agreeing on the pinned ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SheafCell {
    pub coords: Vec<Option<usize>>,
    /// Canonical basis of the local code on X_sigma, columns indexed by the
    /// free coordinates in position-major order.
    basis: Mat,
    /// First coordinate of this cell's block inside its level.
    offset: usize,
}

impl SheafCell {
    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }
}

pub struct Level {
    /// Cell dimension: number of pinned coordinates minus one.
    pub dim: isize,
    pub cells: Vec<SheafCell>,
    pub total_dim: usize,
    /// Cell block index of each level coordinate.
    coord_block: Vec<usize>,
}

/// The augmented cochain complex C^{-1} -> C^0 -> ... -> C^{D-1}.
pub struct Complex {
    field: Field,
    n: usize,
    d: usize,
    levels: Vec<Level>,
    /// deltas[l] maps level l to level l + 1 (cell dimensions l - 1 to l).
    deltas: Vec<Mat>,
}

impl Complex {
    pub fn field(&self) -> Field {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn deltas(&self) -> &[Mat] {
        &self.deltas
    }

    pub fn level(&self, dim: isize) -> Result<&Level> {
        let idx = dim + 1;
        if idx < 0 || idx as usize >= self.levels.len() {
            return Err(Error::InvalidArgument(format!("no level of dimension {dim}")));
        }
        Ok(&self.levels[idx as usize])
    }
}

/// Pinned-coordinate patterns of one level, lexicographic with free slots
/// ordered after pinned values.
fn level_cells(n: usize, d: usize, pinned: usize) -> Vec<Vec<Option<usize>>> {
    let mut out = Vec::new();
    let mut current: Vec<Option<usize>> = Vec::with_capacity(d);
    fn rec(
        n: usize,
        d: usize,
        pinned_left: usize,
        current: &mut Vec<Option<usize>>,
        out: &mut Vec<Vec<Option<usize>>>,
    ) {
        let remaining = d - current.len();
        if remaining == 0 {
            if pinned_left == 0 {
                out.push(current.clone());
            }
            return;
        }
        if pinned_left > remaining {
            return;
        }
        for v in 0..n {
            if pinned_left > 0 {
                current.push(Some(v));
                rec(n, d, pinned_left - 1, current, out);
                current.pop();
            }
        }
        if pinned_left < remaining {
            current.push(None);
            rec(n, d, pinned_left, current, out);
            current.pop();
        }
    }
    rec(n, d, pinned, &mut current, &mut out);
    out
}

/// Flat indices of X_sigma in the full grid, free coordinates
/// position-major.
fn upward_cells(n: usize, d: usize, coords: &[Option<usize>]) -> Vec<usize> {
    let free: Vec<usize> = (0..d).filter(|&i| coords[i].is_none()).collect();
    let count = n.pow(free.len() as u32);
    let mut out = Vec::with_capacity(count);
    let mut point: Vec<usize> = coords.iter().map(|c| c.unwrap_or(0)).collect();
    for mut idx in 0..count {
        for &pos in free.iter().rev() {
            point[pos] = idx % n;
            idx /= n;
        }
        out.push(point.iter().fold(0, |acc, &x| acc * n + x));
    }
    out
}

/// Builds the full augmented complex with canonical local bases and
/// verified square-zero coboundaries.
pub fn build_complex(tuple: &CodeTuple, caps: &Caps) -> Result<Complex> {
    let field = tuple.field();
    let n = tuple.n();
    let d = tuple.d();
    let mut levels = Vec::with_capacity(d + 1);
    for pinned in 0..=d {
        let mut cells = Vec::new();
        let mut offset = 0usize;
        let mut coord_block = Vec::new();
        for coords in level_cells(n, d, pinned) {
            let mut basis = Mat::identity(field, 1);
            for (i, c) in coords.iter().enumerate() {
                if c.is_none() {
                    basis = basis
                        .kron(tuple.code(i).generator())
                        .expect("tuple codes share a field");
                }
            }
            let basis = basis.row_space_canonical();
            let block = cells.len();
            coord_block.extend(std::iter::repeat(block).take(basis.rows()));
            let dim = basis.rows();
            cells.push(SheafCell { coords, basis, offset });
            offset += dim;
        }
        Caps::check("complex level dimension", offset as u128, caps.sweep)?;
        levels.push(Level {
            dim: pinned as isize - 1,
            cells,
            total_dim: offset,
            coord_block,
        });
    }

    let mut deltas = Vec::with_capacity(d);
    for l in 0..d {
        let (src, dst) = (&levels[l], &levels[l + 1]);
        Caps::check(
            "coboundary size",
            src.total_dim as u128 * dst.total_dim as u128,
            caps.sweep,
        )?;
        let mut delta = Mat::zero(field, dst.total_dim, src.total_dim);
        for cell in &src.cells {
            let xs = upward_cells(n, d, &cell.coords);
            for (pos, _) in cell.coords.iter().enumerate().filter(|(_, c)| c.is_none()) {
                for v in 0..n {
                    let mut tc = cell.coords.clone();
                    tc[pos] = Some(v);
                    let tgt_idx = dst
                        .cells
                        .iter()
                        .position(|t| t.coords == tc)
                        .expect("pinning one coordinate lands on the next level");
                    let tgt = &dst.cells[tgt_idx];
                    let xt = upward_cells(n, d, &tc);
                    let take: Vec<usize> = xt
                        .iter()
                        .map(|g| xs.iter().position(|h| h == g).expect("X_tau inside X_sigma"))
                        .collect();
                    let (_, pivots) = tgt.basis.rref();
                    for r in 0..cell.basis.rows() {
                        let row = cell.basis.row(r);
                        let slice: Vec<u64> = take.iter().map(|&j| row[j]).collect();
                        let coeffs: Vec<u64> = pivots.iter().map(|&p| slice[p]).collect();
                        debug_assert_eq!(
                            tgt.basis.vec_mul(&coeffs),
                            slice,
                            "local restriction must stay in the target's code"
                        );
                        for (ci, &cv) in coeffs.iter().enumerate() {
                            if cv != 0 {
                                let dr = tgt.offset + ci;
                                let dc = cell.offset + r;
                                let prev = delta.get(dr, dc);
                                delta.set(dr, dc, field.add(prev, cv));
                            }
                        }
                    }
                }
            }
        }
        deltas.push(delta);
    }
    for l in 0..deltas.len().saturating_sub(1) {
        let composed = deltas[l + 1].mul(&deltas[l])?;
        if !composed.is_zero() {
            return Err(Error::PropertyViolation(format!(
                "coboundary composition at level {} is nonzero",
                l as isize - 1
            )));
        }
    }
    Ok(Complex { field, n, d, levels, deltas })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EtaValue {
    Finite(Rat),
    /// C^i coincides with the image of the previous coboundary: the
    /// defining minimum ranges over nothing.
    Infinite,
}

impl std::fmt::Display for EtaValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EtaValue::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            EtaValue::Infinite => write!(f, "infinite"),
        }
    }
}

/// Shared tables for one eta computation.
struct EtaTables<'a> {
    field: Field,
    q: u64,
    /// Sparse columns of delta^i.
    delta_cols: Vec<Vec<(usize, u64)>>,
    /// Canonical image basis of delta^{i-1}, sparse rows.
    im_rows: Vec<Vec<(usize, u64)>>,
    /// Complement coordinates: non-pivots of the image basis.
    comp: Vec<usize>,
    src_block: &'a [usize],
    dst_block: &'a [usize],
    src_blocks: usize,
    dst_blocks: usize,
}

/// Value vector plus per-cell-block support counters.
struct BlockState {
    values: Vec<u64>,
    block_nz: Vec<u32>,
    blocks_hit: usize,
}

impl BlockState {
    fn new(dim: usize, blocks: usize) -> BlockState {
        BlockState { values: vec![0; dim], block_nz: vec![0; blocks], blocks_hit: 0 }
    }

    fn bump(&mut self, field: Field, coord: usize, block: usize, delta_v: u64) {
        let before = self.values[coord];
        let after = field.add(before, delta_v);
        self.values[coord] = after;
        match (before == 0, after == 0) {
            (true, false) => {
                self.block_nz[block] += 1;
                if self.block_nz[block] == 1 {
                    self.blocks_hit += 1;
                }
            }
            (false, true) => {
                self.block_nz[block] -= 1;
                if self.block_nz[block] == 0 {
                    self.blocks_hit -= 1;
                }
            }
            _ => {}
        }
    }
}

struct EtaShardState {
    src: BlockState,
    dst: BlockState,
    comp_digits: Vec<u64>,
    comp_nonzero: usize,
    im_digits: Vec<u64>,
    best: Option<Rat>,
}

fn comp_transition(t: &EtaTables, s: &mut EtaShardState, idx: usize, to: u64) {
    let from = s.comp_digits[idx];
    let delta_v = t.field.add(from, to);
    if delta_v == 0 {
        return;
    }
    let coord = t.comp[idx];
    s.src.bump(t.field, coord, t.src_block[coord], delta_v);
    for &(r, v) in &t.delta_cols[coord] {
        s.dst.bump(t.field, r, t.dst_block[r], t.field.mul(delta_v, v));
    }
    match (from == 0, to == 0) {
        (true, false) => s.comp_nonzero += 1,
        (false, true) => s.comp_nonzero -= 1,
        _ => {}
    }
    s.comp_digits[idx] = to;
}

fn im_transition(t: &EtaTables, s: &mut EtaShardState, idx: usize, to: u64) {
    let from = s.im_digits[idx];
    let delta_v = t.field.add(from, to);
    if delta_v == 0 {
        return;
    }
    for &(c, v) in &t.im_rows[idx] {
        s.src.bump(t.field, c, t.src_block[c], t.field.mul(delta_v, v));
    }
    s.im_digits[idx] = to;
}

fn eta_inner(t: &EtaTables, s: &mut EtaShardState, depth: usize, min_denom: &mut usize) {
    if depth == t.im_rows.len() {
        *min_denom = (*min_denom).min(s.src.blocks_hit);
        return;
    }
    for v in 0..t.q {
        im_transition(t, s, depth, v);
        eta_inner(t, s, depth + 1, min_denom);
    }
    im_transition(t, s, depth, 0);
}

fn eta_outer(t: &EtaTables, s: &mut EtaShardState, depth: usize) {
    if depth == t.comp.len() {
        if s.comp_nonzero == 0 {
            return;
        }
        let num = s.dst.blocks_hit;
        let mut denom = usize::MAX;
        eta_inner(t, s, 0, &mut denom);
        let ratio = Rat::new(num as u64, denom as u64);
        if s.best.map_or(true, |b| ratio < b) {
            s.best = Some(ratio);
        }
        return;
    }
    for v in 0..t.q {
        comp_transition(t, s, depth, v);
        eta_outer(t, s, depth + 1);
    }
    comp_transition(t, s, depth, 0);
}

/// Coboundary expansion at cell dimension i, by exhaustive coset
/// enumeration: the numerator |delta c|_X is constant on cosets of the
/// previous image, the denominator is the coset's minimal cell support.
pub fn eta(complex: &Complex, i: isize, caps: &Caps) -> Result<EtaValue> {
    eta_with_threads(complex, i, caps, 1)
}

/// Same value, with the leading enumeration digit sharded round-robin
/// across worker threads; exact rational minima merge associatively, so
/// the result does not depend on the thread count.
pub fn eta_with_threads(
    complex: &Complex,
    i: isize,
    caps: &Caps,
    threads: usize,
) -> Result<EtaValue> {
    if i < -1 || i + 1 >= complex.d as isize {
        return Err(Error::InvalidArgument(format!(
            "eta is defined for dimensions -1..={}",
            complex.d as isize - 2
        )));
    }
    let threads = threads.max(1);
    let l = (i + 1) as usize;
    let field = complex.field;
    let q128 = field.order();
    let src = &complex.levels[l];
    let dst = &complex.levels[l + 1];
    Caps::check(
        "cochain enumeration",
        q128.checked_pow(src.total_dim as u32).unwrap_or(u128::MAX),
        caps.codewords,
    )?;
    let im = if l == 0 {
        Mat::zero(field, 0, src.total_dim)
    } else {
        complex.deltas[l - 1].transpose().row_space_canonical()
    };
    let (_, pivots) = im.rref();
    let comp: Vec<usize> =
        (0..src.total_dim).filter(|c| !pivots.contains(c)).collect();
    if comp.is_empty() {
        return Ok(EtaValue::Infinite);
    }
    let delta_mat = &complex.deltas[l];
    let delta_cols: Vec<Vec<(usize, u64)>> = (0..src.total_dim)
        .map(|c| {
            (0..dst.total_dim)
                .filter_map(|r| {
                    let v = delta_mat.get(r, c);
                    (v != 0).then_some((r, v))
                })
                .collect()
        })
        .collect();
    let im_rows: Vec<Vec<(usize, u64)>> = (0..im.rows())
        .map(|r| {
            im.row(r)
                .iter()
                .enumerate()
                .filter_map(|(c, &v)| (v != 0).then_some((c, v)))
                .collect()
        })
        .collect();
    let tables = EtaTables {
        field,
        q: q128 as u64,
        delta_cols,
        im_rows,
        comp,
        src_block: &src.coord_block,
        dst_block: &dst.coord_block,
        src_blocks: src.cells.len(),
        dst_blocks: dst.cells.len(),
    };

    let run_shard = |shard: usize| -> Option<Rat> {
        let mut state = EtaShardState {
            src: BlockState::new(src.total_dim, tables.src_blocks),
            dst: BlockState::new(dst.total_dim, tables.dst_blocks),
            comp_digits: vec![0; tables.comp.len()],
            comp_nonzero: 0,
            im_digits: vec![0; tables.im_rows.len()],
            best: None,
        };
        for v in 0..tables.q {
            if v as usize % threads != shard {
                continue;
            }
            comp_transition(&tables, &mut state, 0, v);
            eta_outer(&tables, &mut state, 1);
        }
        state.best
    };

    let best = if threads == 1 {
        run_shard(0)
    } else {
        std::thread::scope(|scope| {
            let run_shard = &run_shard;
            let handles: Vec<_> =
                (0..threads).map(|shard| scope.spawn(move || run_shard(shard))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("eta shard panicked"))
                .fold(None, |acc, v| match (acc, v) {
                    (None, x) => x,
                    (x, None) => x,
                    (Some(a), Some(b)) => Some(a.min(b)),
                })
        })
    };
    Ok(best.map_or(EtaValue::Infinite, EtaValue::Finite))
}

/// The sheaf route to the expansion factor: eta^{D-2} / n.
pub fn rho_via_sheaf(tuple: &CodeTuple, caps: &Caps) -> Result<RhoValue> {
    rho_via_sheaf_threads(tuple, caps, 1)
}

pub fn rho_via_sheaf_threads(
    tuple: &CodeTuple,
    caps: &Caps,
    threads: usize,
) -> Result<RhoValue> {
    let complex = build_complex(tuple, caps)?;
    let e = eta_with_threads(&complex, tuple.d() as isize - 2, caps, threads)?;
    Ok(match e {
        EtaValue::Finite(r) => RhoValue::Finite(r / Rat::new(tuple.n() as u64, 1)),
        EtaValue::Infinite => RhoValue::Unbounded,
    })
}

/// Per-level dimensions and coboundary ranks, one line each.
pub fn complex_summary(complex: &Complex) -> String {
    let mut out = String::new();
    for level in &complex.levels {
        out.push_str(&format!(
            "level {}: cells {} dim {}\n",
            level.dim,
            level.cells.len(),
            level.total_dim
        ));
    }
    for (l, delta) in complex.deltas.iter().enumerate() {
        out.push_str(&format!("delta {}: rank {}\n", l as isize - 1, delta.rank()));
    }
    out
}
