//! The product-expansion factor rho, minimum-cost decompositions, eps_max,
//! the closed-form bound functions, and the constructive syndrome-driven
//! decomposition for locally testable component codes.

use crate::grid::CellSet;
use crate::matrix::Mat;
use crate::product::{
    inner_generated_with_basis, sum_code_basis, CodeTuple, GridWord,
};
use crate::{Caps, Error, Rat, Result};

/// A representation target = a_1 + ... + a_D with a_i in C^{(i)}.
#[derive(Clone, Debug)]
pub struct Decomposition {
    parts: Vec<GridWord>,
    target: GridWord,
}

impl Decomposition {
    pub fn new(parts: Vec<GridWord>, target: GridWord) -> Decomposition {
        Decomposition { parts, target }
    }

    pub fn parts(&self) -> &[GridWord] {
        &self.parts
    }

    pub fn target(&self) -> &GridWord {
        &self.target
    }

    /// Sum of the per-direction line weights |a_i|_i.
    pub fn cost(&self) -> usize {
        self.parts.iter().enumerate().map(|(i, a)| a.line_weights()[i]).sum()
    }

    pub fn part_costs(&self) -> Vec<usize> {
        self.parts.iter().enumerate().map(|(i, a)| a.line_weights()[i]).collect()
    }

    /// Parts sum to the target and each a_i restricts to C_i on every
    /// direction-i line.
    pub fn validate(&self, tuple: &CodeTuple) -> Result<()> {
        if self.parts.len() != tuple.d() {
            return Err(Error::Dimension("one part per direction required".into()));
        }
        let mut sum = GridWord::zero(self.target.grid(), self.target.field());
        for part in &self.parts {
            sum = sum.add(part);
        }
        if sum != self.target {
            return Err(Error::PropertyViolation("decomposition parts do not sum to the target".into()));
        }
        let grid = tuple.grid();
        for (i, part) in self.parts.iter().enumerate() {
            for line in grid.all_lines().iter().filter(|l| l.dir == i) {
                if !tuple.code(i).contains(&part.restrict_line(line)) {
                    return Err(Error::PropertyViolation(format!(
                        "part {i} leaves its component code on line {line:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The linear map from stacked line-word coefficients to grid words whose
/// image is the sum code. Columns are grouped into (direction, line) blocks
/// of k_i coefficients; a decomposition is exactly a choice of coefficient
/// vector, and its cost is the number of blocks touched.
struct SumMap {
    cols: Vec<Vec<(usize, u64)>>,
    col_block: Vec<usize>,
    col_dir: Vec<usize>,
    num_blocks: usize,
}

impl SumMap {
    fn build(tuple: &CodeTuple) -> SumMap {
        let grid = tuple.grid();
        let mut cols = Vec::new();
        let mut col_block = Vec::new();
        let mut col_dir = Vec::new();
        let mut num_blocks = 0;
        for dir in 0..tuple.d() {
            let gen = tuple.code(dir).generator();
            if gen.rows() == 0 {
                continue;
            }
            for line in grid.all_lines().iter().filter(|l| l.dir == dir) {
                let cells = grid.line_cells(line);
                for r in 0..gen.rows() {
                    let support: Vec<(usize, u64)> = cells
                        .iter()
                        .zip(gen.row(r))
                        .filter(|&(_, &v)| v != 0)
                        .map(|(&c, &v)| (c, v))
                        .collect();
                    cols.push(support);
                    col_block.push(num_blocks);
                    col_dir.push(dir);
                }
                num_blocks += 1;
            }
        }
        SumMap { cols, col_block, col_dir, num_blocks }
    }

    fn t(&self) -> usize {
        self.cols.len()
    }

    fn matrix(&self, tuple: &CodeTuple) -> Mat {
        let cells = tuple.grid().cells();
        Mat::from_fn(tuple.field(), cells, self.t(), |r, c| {
            self.cols[c].iter().find(|&&(cell, _)| cell == r).map_or(0, |&(_, v)| v)
        })
    }

    /// Assemble per-direction parts from a coefficient vector.
    fn parts(&self, tuple: &CodeTuple, w: &[u64]) -> Vec<GridWord> {
        let field = tuple.field();
        let mut parts =
            vec![GridWord::zero(tuple.grid(), field); tuple.d()];
        for (j, &coeff) in w.iter().enumerate() {
            if coeff == 0 {
                continue;
            }
            let part = &mut parts[self.col_dir[j]];
            for &(cell, v) in &self.cols[j] {
                let old = part.get(cell);
                part.set(cell, field.add(old, field.mul(coeff, v)));
            }
        }
        parts
    }
}

/// Coefficient-space walker: applies single-digit transitions to a grid
/// word, tracking the cell weight and the number of touched blocks.
struct SweepState {
    values: Vec<u64>,
    weight: usize,
    block_nz: Vec<u32>,
    cost: usize,
}

impl SweepState {
    fn new(cells: usize, blocks: usize) -> SweepState {
        SweepState { values: vec![0; cells], weight: 0, block_nz: vec![0; blocks], cost: 0 }
    }

    fn apply(&mut self, map: &SumMap, tuple: &CodeTuple, col: usize, old: u64, new: u64) {
        let field = tuple.field();
        let delta = field.add(new, old);
        if delta == 0 {
            return;
        }
        for &(cell, v) in &map.cols[col] {
            let before = self.values[cell];
            let after = field.add(before, field.mul(delta, v));
            self.values[cell] = after;
            match (before == 0, after == 0) {
                (true, false) => self.weight += 1,
                (false, true) => self.weight -= 1,
                _ => {}
            }
        }
        let b = map.col_block[col];
        match (old == 0, new == 0) {
            (true, false) => {
                self.block_nz[b] += 1;
                if self.block_nz[b] == 1 {
                    self.cost += 1;
                }
            }
            (false, true) => {
                self.block_nz[b] -= 1;
                if self.block_nz[b] == 0 {
                    self.cost -= 1;
                }
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RhoValue {
    Finite(Rat),
    /// The sum code is {0}: the defining minimum ranges over no words.
    Unbounded,
}

impl std::fmt::Display for RhoValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RhoValue::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            RhoValue::Unbounded => write!(f, "unbounded"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RhoReport {
    pub rho: RhoValue,
    /// Minimizing codeword and a minimum-cost decomposition of it.
    pub witness: Option<(GridWord, Decomposition)>,
    /// Nonzero sum-code words considered.
    pub codewords: u128,
    /// Coefficient vectors swept.
    pub swept: u128,
    pub degenerate: bool,
}

/// Exact product-expansion factor: the minimum over nonzero sum-code words
/// of |c| / (n * min decomposition cost). One sweep of the coefficient space
/// visits every decomposition of every word, so both minima are exact.
pub fn rho_exact(tuple: &CodeTuple, caps: &Caps) -> Result<RhoReport> {
    let n = tuple.n();
    let field = tuple.field();
    let grid = tuple.grid();
    if tuple.is_degenerate() {
        // Some C_i is the full space: a single cell has cost 1, giving 1/n,
        // and any word's direction-i part covers at most |c| lines, so no
        // word does better.
        let full_dir = (0..tuple.d()).find(|&i| tuple.code(i).is_full()).unwrap();
        let mut c = GridWord::zero(grid, field);
        c.set(0, 1);
        let mut parts = vec![GridWord::zero(grid, field); tuple.d()];
        parts[full_dir] = c.clone();
        let dec = Decomposition::new(parts, c.clone());
        dec.validate(tuple)?;
        return Ok(RhoReport {
            rho: RhoValue::Finite(Rat::new(1, n as u64)),
            witness: Some((c, dec)),
            codewords: 0,
            swept: 0,
            degenerate: true,
        });
    }
    let basis = sum_code_basis(tuple);
    let s = basis.rows();
    if s == 0 {
        return Ok(RhoReport {
            rho: RhoValue::Unbounded,
            witness: None,
            codewords: 0,
            swept: 0,
            degenerate: false,
        });
    }
    let q = field.order();
    let words = q.checked_pow(s as u32).unwrap_or(u128::MAX);
    Caps::check("sum-code enumeration", words, caps.codewords)?;
    let map = SumMap::build(tuple);
    let t = map.t();
    let sweep = q.checked_pow(t as u32).unwrap_or(u128::MAX);
    Caps::check("decomposition sweep", sweep, caps.sweep)?;
    let (_, pivots) = basis.rref();

    let size = words as usize;
    let mut mincost = vec![u32::MAX; size];
    let mut weights = vec![0u32; size];
    let mut state = SweepState::new(grid.cells(), map.num_blocks);
    let mut digits = vec![0u64; t];
    sweep_rec(
        tuple,
        &map,
        0,
        &mut digits,
        &mut state,
        &pivots,
        q as u64,
        &mut mincost,
        &mut weights,
    );

    let mut best: Option<(Rat, usize)> = None;
    for idx in 0..size {
        if weights[idx] == 0 {
            continue;
        }
        let ratio = Rat::new(weights[idx] as u64, (n as u64) * mincost[idx] as u64);
        if best.map_or(true, |(r, _)| ratio < r) {
            best = Some((ratio, idx));
        }
    }
    let (rho, idx) = best.expect("a nonzero sum code has nonzero words");

    // Decode the witness from its values at the basis pivot cells.
    let mut coeffs = vec![0u64; s];
    let mut rem = idx;
    for p in (0..s).rev() {
        coeffs[p] = (rem % q as usize) as u64;
        rem /= q as usize;
    }
    let witness = GridWord::from_values(grid, field, basis.vec_mul(&coeffs))?;
    let dec = best_decomposition(tuple, &witness, caps)?;
    dec.validate(tuple)?;
    let check = Rat::new(witness.weight() as u64, (n as u64) * dec.cost() as u64);
    if check != rho {
        return Err(Error::PropertyViolation(format!(
            "witness decomposition cost disagrees with the sweep: {check} vs {rho}"
        )));
    }
    Ok(RhoReport {
        rho: RhoValue::Finite(rho),
        witness: Some((witness, dec)),
        codewords: words - 1,
        swept: sweep,
        degenerate: false,
    })
}

#[allow(clippy::too_many_arguments)]
fn sweep_rec(
    tuple: &CodeTuple,
    map: &SumMap,
    depth: usize,
    digits: &mut Vec<u64>,
    state: &mut SweepState,
    pivots: &[usize],
    q: u64,
    mincost: &mut [u32],
    weights: &mut [u32],
) {
    if depth == map.t() {
        if state.weight > 0 {
            let mut idx = 0usize;
            for &p in pivots {
                idx = idx * q as usize + state.values[p] as usize;
            }
            weights[idx] = state.weight as u32;
            if (state.cost as u32) < mincost[idx] {
                mincost[idx] = state.cost as u32;
            }
        }
        return;
    }
    for v in 0..q {
        if v != digits[depth] {
            state.apply(map, tuple, depth, digits[depth], v);
            digits[depth] = v;
        }
        sweep_rec(tuple, map, depth + 1, digits, state, pivots, q, mincost, weights);
    }
    state.apply(map, tuple, depth, digits[depth], 0);
    digits[depth] = 0;
}

/// Minimum-cost decomposition of a sum-code word: a particular coefficient
/// solution plus an exhaustive walk of the kernel coset, ties broken by the
/// lexicographically least coefficient vector.
pub fn best_decomposition(
    tuple: &CodeTuple,
    c: &GridWord,
    caps: &Caps,
) -> Result<Decomposition> {
    let map = SumMap::build(tuple);
    let a = map.matrix(tuple);
    let particular = a.solve(c.values())?.ok_or(Error::NotInCode)?;
    let kernel = a.kernel_basis();
    let kdim = kernel.rows();
    let q = tuple.field().order();
    Caps::check(
        "decomposition coset",
        q.checked_pow(kdim as u32).unwrap_or(u128::MAX),
        caps.cosets,
    )?;

    let mut state = SweepState::new(tuple.grid().cells(), map.num_blocks);
    // Block counters start at the particular solution.
    let mut current = particular.clone();
    for (j, &v) in particular.iter().enumerate() {
        state.apply(&map, tuple, j, 0, v);
    }
    let mut best_cost = state.cost;
    let mut best_w = current.clone();
    let mut kdigits = vec![0u64; kdim];
    coset_rec(
        tuple,
        &map,
        &kernel,
        0,
        &mut kdigits,
        &mut current,
        &mut state,
        q as u64,
        &mut best_cost,
        &mut best_w,
    );
    let parts = map.parts(tuple, &best_w);
    let dec = Decomposition::new(parts, c.clone());
    debug_assert!(dec.validate(tuple).is_ok());
    Ok(dec)
}

#[allow(clippy::too_many_arguments)]
fn coset_rec(
    tuple: &CodeTuple,
    map: &SumMap,
    kernel: &Mat,
    depth: usize,
    kdigits: &mut Vec<u64>,
    current: &mut Vec<u64>,
    state: &mut SweepState,
    q: u64,
    best_cost: &mut usize,
    best_w: &mut Vec<u64>,
) {
    let field = tuple.field();
    if depth == kernel.rows() {
        if state.cost < *best_cost
            || (state.cost == *best_cost && current.as_slice() < best_w.as_slice())
        {
            *best_cost = state.cost;
            best_w.clone_from(current);
        }
        return;
    }
    let shift = |from: u64, to: u64,
                 current: &mut Vec<u64>,
                 state: &mut SweepState| {
        let delta = field.add(from, to);
        for (j, &kv) in kernel.row(depth).iter().enumerate() {
            if kv != 0 {
                let old = current[j];
                let new = field.add(old, field.mul(delta, kv));
                state.apply(map, tuple, j, old, new);
                current[j] = new;
            }
        }
    };
    for v in 0..q {
        if v != kdigits[depth] {
            shift(kdigits[depth], v, current, state);
            kdigits[depth] = v;
        }
        coset_rec(tuple, map, kernel, depth + 1, kdigits, current, state, q, best_cost, best_w);
    }
    shift(kdigits[depth], 0, current, state);
    kdigits[depth] = 0;
}

/// Largest eps such that every eps-closed subset is inner-generated:
/// the minimum over non-inner-generated M of the largest line fraction
/// max_{line not inside M} |line ∩ M| / n, or 1 if no such M exists.
pub fn eps_max(tuple: &CodeTuple, caps: &Caps) -> Result<Rat> {
    if tuple.is_degenerate() {
        return Err(Error::Degenerate("eps_max needs every component below the full space"));
    }
    let grid = tuple.grid();
    let cells = grid.cells();
    let needed = if cells < 127 { 1u128 << cells } else { u128::MAX };
    Caps::check("subset scan", needed, caps.subsets)?;
    let basis = sum_code_basis(tuple);
    let lines = grid.all_lines();
    let n = grid.n();
    let mut best: Option<Rat> = None;
    for mask in 0u64..(1 << cells) {
        let m = CellSet::from_indices(
            grid,
            &(0..cells).filter(|&c| mask >> c & 1 == 1).collect::<Vec<_>>(),
        );
        if inner_generated_with_basis(tuple, &basis, &m) {
            continue;
        }
        let worst = lines
            .iter()
            .filter(|l| grid.line_cells(l).iter().any(|&c| !m.contains(c)))
            .map(|l| m.line_count(l))
            .max()
            .expect("a non-inner-generated set is not the full grid");
        let frac = Rat::new(worst as u64, n as u64);
        if best.map_or(true, |b| frac < b) {
            best = Some(frac);
        }
    }
    Ok(best.unwrap_or_else(|| Rat::new(1, 1)))
}

/// eps^D / (D (2^D + 1)^D): the expansion guaranteed for a tuple whose
/// eps-closed sets are all inner-generated.
pub fn gamma(eps: Rat, d: usize) -> Result<Rat> {
    if *eps.numer() == 0 || eps > Rat::new(1, 1) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} outside (0, 1]")));
    }
    let two_d = 1u64
        .checked_shl(d as u32)
        .and_then(|v| v.checked_add(1))
        .ok_or_else(|| Error::InvalidArgument("dimension too large".into()))?;
    let pow = |base: u64, e: usize| -> Result<u64> {
        let mut acc = 1u64;
        for _ in 0..e {
            acc = acc
                .checked_mul(base)
                .ok_or_else(|| Error::InvalidArgument("gamma overflow".into()))?;
        }
        Ok(acc)
    };
    let num = pow(*eps.numer(), d)?;
    let den = pow(*eps.denom(), d)?
        .checked_mul(d as u64)
        .and_then(|v| pow(two_d, d).ok().and_then(|p| v.checked_mul(p)))
        .ok_or_else(|| Error::InvalidArgument("gamma overflow".into()))?;
    Ok(Rat::new(num, den))
}

/// Recursive lower-bound factor for decompositions built from locally
/// testable component codes: f(1) = delta and
/// f(D) = delta f(D-1) / (3 (6 alpha_h / (alpha_l delta))^(D-1)).
pub fn f_bound(d: usize, alpha_l: Rat, alpha_h: Rat, delta: Rat) -> Result<Rat> {
    if d == 0 {
        return Err(Error::InvalidArgument("f is defined for D >= 1".into()));
    }
    if *alpha_l.numer() == 0 || *alpha_h.numer() == 0 || *delta.numer() == 0 {
        return Err(Error::InvalidArgument("f needs positive parameters".into()));
    }
    let mut f = delta;
    let ratio = Rat::new(6, 1) * alpha_h / (alpha_l * delta);
    let mut ratio_pow = Rat::new(1, 1);
    for _ in 2..=d {
        ratio_pow *= ratio;
        f = delta * f / (Rat::new(3, 1) * ratio_pow);
    }
    Ok(f)
}

/// Linear right inverse of H on the syndromes supported inside A, with
/// controlled preimage support.
#[derive(Clone, Debug)]
pub struct PhiMap {
    /// Canonical basis of {y in im H : supp y ⊆ A}.
    ybasis: Mat,
    /// Minimum-weight preimage of each basis vector (ties: lexicographically
    /// least).
    preimages: Vec<Vec<u64>>,
    /// Union of the preimage supports.
    b: Vec<usize>,
    cols: usize,
}

impl PhiMap {
    pub fn b(&self) -> &[usize] {
        &self.b
    }

    pub fn basis_size(&self) -> usize {
        self.ybasis.rows()
    }

    /// phi(y): expand y over the stored basis and combine the preimages.
    /// Errors when y is outside the map's domain.
    pub fn apply(&self, y: &[u64]) -> Result<Vec<u64>> {
        let field = self.ybasis.field();
        let (_, pivots) = self.ybasis.rref();
        let coeffs: Vec<u64> = pivots.iter().map(|&p| y[p]).collect();
        // Verify membership: the coefficients must reproduce y exactly.
        let recon = self.ybasis.vec_mul(&coeffs);
        if recon != y {
            return Err(Error::InvalidArgument(
                "vector outside the domain of the support inverse".into(),
            ));
        }
        let mut x = vec![0u64; self.cols];
        for (coeff, pre) in coeffs.iter().zip(&self.preimages) {
            if *coeff == 0 {
                continue;
            }
            for (j, &v) in pre.iter().enumerate() {
                if v != 0 {
                    x[j] = field.add(x[j], field.mul(*coeff, v));
                }
            }
        }
        Ok(x)
    }
}

/// For each basis syndrome supported in A, a minimum-weight preimage under
/// H; their supports form B.
pub fn phi_map(h: &Mat, a: &[usize], caps: &Caps) -> Result<PhiMap> {
    let field = h.field();
    let image = h.transpose().row_space_canonical();
    let allowed: Vec<bool> = {
        let mut v = vec![false; h.rows()];
        for &r in a {
            v[r] = true;
        }
        v
    };
    let ybasis = Mat::subspace_intersect_coords(&image, &allowed);
    let kernel = h.kernel_basis();
    let q = field.order();
    Caps::check(
        "preimage coset",
        q.checked_pow(kernel.rows() as u32).unwrap_or(u128::MAX),
        caps.cosets,
    )?;
    let mut preimages = Vec::new();
    let mut b_mask = vec![false; h.cols()];
    for i in 0..ybasis.rows() {
        let y = ybasis.row(i);
        let x0 = h.solve(y)?.expect("basis vectors lie in the image");
        let x = min_weight_in_coset(field, &x0, &kernel);
        for (j, &v) in x.iter().enumerate() {
            if v != 0 {
                b_mask[j] = true;
            }
        }
        preimages.push(x);
    }
    let b: Vec<usize> = (0..h.cols()).filter(|&j| b_mask[j]).collect();
    Ok(PhiMap { ybasis, preimages, b, cols: h.cols() })
}

/// Minimum-weight element of x0 + rowspace(kernel); ties go to the
/// lexicographically least vector.
fn min_weight_in_coset(field: crate::field::Field, x0: &[u64], kernel: &Mat) -> Vec<u64> {
    let q = field.order() as u64;
    let mut best = x0.to_vec();
    let mut best_weight = best.iter().filter(|&&v| v != 0).count();
    let mut current = x0.to_vec();
    let mut digits = vec![0u64; kernel.rows()];
    fn rec(
        field: crate::field::Field,
        kernel: &Mat,
        depth: usize,
        q: u64,
        digits: &mut Vec<u64>,
        current: &mut Vec<u64>,
        best: &mut Vec<u64>,
        best_weight: &mut usize,
    ) {
        if depth == kernel.rows() {
            let w = current.iter().filter(|&&v| v != 0).count();
            if w < *best_weight || (w == *best_weight && current.as_slice() < best.as_slice()) {
                *best_weight = w;
                best.clone_from(current);
            }
            return;
        }
        for v in 0..q {
            let delta = field.add(digits[depth], v);
            if delta != 0 {
                for (j, &kv) in kernel.row(depth).iter().enumerate() {
                    if kv != 0 {
                        current[j] = field.add(current[j], field.mul(delta, kv));
                    }
                }
                digits[depth] = v;
            }
            rec(field, kernel, depth + 1, q, digits, current, best, best_weight);
        }
        let delta = digits[depth];
        if delta != 0 {
            for (j, &kv) in kernel.row(depth).iter().enumerate() {
                if kv != 0 {
                    current[j] = field.add(current[j], field.mul(delta, kv));
                }
            }
            digits[depth] = 0;
        }
    }
    rec(field, kernel, 0, q, &mut digits, &mut current, &mut best, &mut best_weight);
    best
}

/// Per-direction data for the constructive decomposition: an explicit
/// parity-check matrix and its soundness/distance parameters.
#[derive(Clone, Debug)]
pub struct DecomposeSpec {
    pub par: Mat,
    pub alpha_l: Rat,
    pub alpha_h: Rat,
    pub delta: Rat,
}

/// Syndrome-driven decomposition of a sum-code word, recursing on the
/// number of directions. The output cost satisfies
/// sum |a_i|_i <= |x| / (n f(D, alpha_l, alpha_h, delta)), asserted before
/// returning.
pub fn ltc_decompose(
    tuple: &CodeTuple,
    x: &GridWord,
    specs: &[DecomposeSpec],
    caps: &Caps,
) -> Result<Decomposition> {
    if specs.len() != tuple.d() {
        return Err(Error::Dimension("one spec per direction required".into()));
    }
    let n = tuple.n() as u64;
    for (i, spec) in specs.iter().enumerate() {
        if spec.par.kernel_basis() != *tuple.code(i).generator() {
            return Err(Error::InvalidArgument(format!(
                "spec parity {i} does not check the tuple's code"
            )));
        }
        let dist = tuple.code(i).min_distance(caps)? as u64;
        if Rat::new(dist, n) < spec.delta {
            return Err(Error::InvalidArgument(format!(
                "component {i} has distance below delta*n"
            )));
        }
    }
    let alpha_l = specs.iter().map(|s| s.alpha_l).min().unwrap();
    let alpha_h = specs.iter().map(|s| s.alpha_h).max().unwrap();
    let delta = specs.iter().map(|s| s.delta).min().unwrap();
    let f = f_bound(tuple.d(), alpha_l, alpha_h, delta)?;

    let pars: Vec<&Mat> = specs.iter().map(|s| &s.par).collect();
    let parts = decompose_rec(tuple.field(), tuple.n(), &pars, x.values(), caps)?;
    let grid = tuple.grid();
    let parts: Vec<GridWord> = parts
        .into_iter()
        .map(|vals| GridWord::from_values(grid, tuple.field(), vals))
        .collect::<Result<_>>()?;
    let dec = Decomposition::new(parts, x.clone());
    dec.validate(tuple)?;
    let cost = dec.cost() as u64;
    let weight = x.weight() as u64;
    if Rat::new(cost * n, 1) * f > Rat::new(weight, 1) {
        return Err(Error::PropertyViolation(format!(
            "decomposition cost {cost} breaks the f({}) bound for |x| = {weight}",
            tuple.d()
        )));
    }
    Ok(dec)
}

/// Returns flat per-direction parts for x over grid [n]^d, d = pars.len().
fn decompose_rec(
    field: crate::field::Field,
    n: usize,
    pars: &[&Mat],
    x: &[u64],
    caps: &Caps,
) -> Result<Vec<Vec<u64>>> {
    let d = pars.len();
    if d == 1 {
        if pars[0].mul_vec(x).iter().any(|&v| v != 0) {
            return Err(Error::NotInCode);
        }
        return Ok(vec![x.to_vec()]);
    }
    // Syndrome of the zero-padded (D-1)-tuple: one kron check per slice of
    // the leading coordinate.
    let kron_rest = {
        let mut acc = pars[1].clone();
        for p in &pars[2..] {
            acc = acc.kron(p)?;
        }
        acc
    };
    let slice_len = x.len() / n;
    let m_rest = kron_rest.rows();
    let mut syndrome = Vec::with_capacity(n * m_rest);
    for v in 0..n {
        let slice = &x[v * slice_len..(v + 1) * slice_len];
        syndrome.extend(kron_rest.mul_vec(slice));
    }
    // Membership in the sum code: the full tensor of checks annihilates x,
    // equivalently every syndrome column lies in ker H_1.
    for j in 0..m_rest {
        let column: Vec<u64> = (0..n).map(|v| syndrome[v * m_rest + j]).collect();
        if pars[0].mul_vec(&column).iter().any(|&v| v != 0) {
            return Err(Error::NotInCode);
        }
    }

    // Projection of supp s onto the syndrome coordinates.
    let a: Vec<usize> = (0..m_rest)
        .filter(|&j| (0..n).any(|v| syndrome[v * m_rest + j] != 0))
        .collect();

    // Chain of support inverses along directions 2..D.
    let mut phis = Vec::new();
    let mut current_a = a;
    for i in 1..d {
        let mut factors: Vec<Mat> = Vec::new();
        for _ in 0..i - 1 {
            factors.push(Mat::identity(field, n));
        }
        factors.push(pars[i].clone());
        for p in &pars[i + 1..] {
            factors.push(Mat::identity(field, p.rows()));
        }
        let mut hat = factors[0].clone();
        for fmat in &factors[1..] {
            hat = hat.kron(fmat)?;
        }
        let phi = phi_map(&hat, &current_a, caps)?;
        current_a = phi.b().to_vec();
        phis.push(phi);
    }

    // a^(1) = (I ⊗ phi) s, slice by slice.
    let part_len = slice_len;
    let mut a1 = vec![0u64; x.len()];
    for v in 0..n {
        let mut z: Vec<u64> = syndrome[v * m_rest..(v + 1) * m_rest].to_vec();
        for phi in &phis {
            z = phi.apply(&z)?;
        }
        debug_assert_eq!(z.len(), part_len);
        a1[v * part_len..(v + 1) * part_len].copy_from_slice(&z);
    }

    // Recurse on x - a^(1), one leading-coordinate slice at a time.
    let mut parts = vec![vec![0u64; x.len()]; d];
    parts[0] = a1.clone();
    for v in 0..n {
        let slice: Vec<u64> = (0..slice_len)
            .map(|j| field.add(x[v * slice_len + j], a1[v * slice_len + j]))
            .collect();
        let sub = decompose_rec(field, n, &pars[1..], &slice, caps)?;
        for (jdir, sub_part) in sub.into_iter().enumerate() {
            parts[jdir + 1][v * slice_len..(v + 1) * slice_len].copy_from_slice(&sub_part);
        }
    }
    Ok(parts)
}

/// Both subcode inequalities with all expansion factors computed exactly.
#[derive(Clone, Debug)]
pub struct SubcodeReport {
    pub rho_full: RhoValue,
    pub rho_rest: RhoValue,
    pub rho_sub: RhoValue,
    /// rho_full / (1 + 1/rho_rest).
    pub lemma_bound: Option<Rat>,
    /// 2^{-D} rho_full^{2^D}.
    pub corollary_bound: Option<Rat>,
    pub holds: bool,
}

pub fn check_subcode_bound(
    tuple: &CodeTuple,
    sub: &crate::code::LinearCode,
    caps: &Caps,
) -> Result<SubcodeReport> {
    if tuple.d() < 2 {
        return Err(Error::InvalidArgument("subcode bound needs D >= 2".into()));
    }
    if !tuple.code(0).has_subcode(sub) {
        return Err(Error::InvalidArgument("not a subcode of the first component".into()));
    }
    let rest = CodeTuple::new(tuple.codes()[1..].to_vec())?;
    let mut sub_codes = tuple.codes().to_vec();
    sub_codes[0] = sub.clone();
    let sub_tuple = CodeTuple::new(sub_codes)?;

    let rho_full = rho_exact(tuple, caps)?.rho;
    let rho_rest = rho_exact(&rest, caps)?.rho;
    let rho_sub = rho_exact(&sub_tuple, caps)?.rho;

    let (lemma_bound, corollary_bound, holds) = match (&rho_full, &rho_rest, &rho_sub) {
        (RhoValue::Finite(full), rest_v, RhoValue::Finite(subr)) => {
            let lemma = match rest_v {
                // 1/rho_rest = 0 when the minimum ranges over nothing.
                RhoValue::Unbounded => *full,
                RhoValue::Finite(r) => *full * *r / (Rat::new(1, 1) + *r),
            };
            let d = tuple.d() as u32;
            let mut pow = Rat::new(1, 1);
            for _ in 0..1u64 << d {
                pow *= *full;
            }
            let corollary = pow / Rat::new(1 << d, 1);
            (Some(lemma), Some(corollary), *subr >= lemma && *subr >= corollary)
        }
        // A {0} sum code in the subcode tuple satisfies any lower bound
        // vacuously.
        (_, _, RhoValue::Unbounded) => (None, None, true),
        (RhoValue::Unbounded, _, RhoValue::Finite(_)) => (None, None, true),
    };
    if !holds {
        return Err(Error::PropertyViolation("subcode expansion bound failed".into()));
    }
    Ok(SubcodeReport { rho_full, rho_rest, rho_sub, lemma_bound, corollary_bound, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::LinearCode;
    use crate::field::Field;
    use crate::grid::Grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn f2() -> Field {
        Field::new(1).unwrap()
    }

    fn rep_tuple(n: usize, d: usize) -> CodeTuple {
        CodeTuple::new(vec![LinearCode::rep_code(f2(), n); d]).unwrap()
    }

    /// Independent oracle for the repetition pair at n = 2: enumerate the 7
    /// nonzero even-weight 2x2 words and all 16 decompositions of each.
    #[test]
    fn rep2_pair_rho_is_one_half_against_bruteforce() {
        let caps = Caps::default();
        let tuple = rep_tuple(2, 2);
        let report = rho_exact(&tuple, &caps).unwrap();
        assert_eq!(report.rho, RhoValue::Finite(Rat::new(1, 2)));

        // Brute force: rows/columns words are {0, (1,1)} per line.
        let grid = tuple.grid();
        let field = f2();
        let mut best = Rat::new(u64::MAX / 2, 1);
        for mask in 1u32..16 {
            let vals: Vec<u64> = (0..4).map(|b| (mask >> b & 1) as u64).collect();
            let word = GridWord::from_values(grid, field, vals).unwrap();
            if word.values().iter().filter(|&&v| v != 0).count() % 2 != 0 {
                continue;
            }
            let mut mincost = usize::MAX;
            for rows in 0u32..4 {
                for cols in 0u32..4 {
                    let mut sum = GridWord::zero(grid, field);
                    let mut cost = 0;
                    for r in 0..2 {
                        if rows >> r & 1 == 1 {
                            cost += 1;
                            for x in 0..2 {
                                let cell = grid.index(&[x, r]);
                                sum.set(cell, field.add(sum.get(cell), 1));
                            }
                        }
                    }
                    for cidx in 0..2 {
                        if cols >> cidx & 1 == 1 {
                            cost += 1;
                            for y in 0..2 {
                                let cell = grid.index(&[cidx, y]);
                                sum.set(cell, field.add(sum.get(cell), 1));
                            }
                        }
                    }
                    if sum == word {
                        mincost = mincost.min(cost);
                    }
                }
            }
            if mincost < usize::MAX {
                best = best.min(Rat::new(word.weight() as u64, 2 * mincost as u64));
            }
        }
        assert_eq!(best, Rat::new(1, 2));
        let (witness, dec) = report.witness.unwrap();
        assert_eq!(
            Rat::new(witness.weight() as u64, 2 * dec.cost() as u64),
            Rat::new(1, 2)
        );
    }

    #[test]
    fn degenerate_tuple_has_rho_one_over_n() {
        let caps = Caps::default();
        let full = LinearCode::full_code(f2(), 3);
        let rep = LinearCode::rep_code(f2(), 3);
        let tuple = CodeTuple::new(vec![rep, full]).unwrap();
        let report = rho_exact(&tuple, &caps).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.rho, RhoValue::Finite(Rat::new(1, 3)));
        report.witness.unwrap().1.validate(&tuple).unwrap();
    }

    #[test]
    fn single_code_rho_is_distance_over_n() {
        let caps = Caps::default();
        for (code, expect) in [
            (LinearCode::rep_code(f2(), 4), Rat::new(4, 4)),
            (LinearCode::rep_code(f2(), 4).dual(), Rat::new(2, 4)),
            (LinearCode::full_code(f2(), 3), Rat::new(1, 3)),
        ] {
            let d = match code.is_full() {
                true => 1,
                false => code.min_distance(&caps).unwrap(),
            };
            assert_eq!(Rat::new(d as u64, code.len() as u64), expect);
            let tuple = CodeTuple::new(vec![code]).unwrap();
            let report = rho_exact(&tuple, &caps).unwrap();
            assert_eq!(report.rho, RhoValue::Finite(expect));
        }
    }

    #[test]
    fn all_zero_tuple_is_unbounded() {
        let caps = Caps::default();
        let zero = LinearCode::zero_code(f2(), 2);
        let tuple = CodeTuple::new(vec![zero.clone(), zero]).unwrap();
        let report = rho_exact(&tuple, &caps).unwrap();
        assert_eq!(report.rho, RhoValue::Unbounded);
        assert!(report.witness.is_none());
    }

    #[test]
    fn zero_code_direction_does_not_change_rho() {
        let caps = Caps::default();
        let mut rng = ChaCha12Rng::seed_from_u64(40);
        for _ in 0..5 {
            let c = LinearCode::random_code(f2(), 3, 1 + rng.gen::<usize>() % 2, &mut rng)
                .unwrap();
            let alone = rho_exact(&CodeTuple::new(vec![c.clone()]).unwrap(), &caps).unwrap();
            let padded = rho_exact(
                &CodeTuple::new(vec![LinearCode::zero_code(f2(), 3), c]).unwrap(),
                &caps,
            )
            .unwrap();
            assert_eq!(alone.rho, padded.rho);
        }
    }

    #[test]
    fn best_decomposition_examples() {
        let caps = Caps::default();
        let tuple = rep_tuple(2, 2);
        let grid = tuple.grid();
        let field = f2();
        let zero = GridWord::zero(grid, field);
        let dec = best_decomposition(&tuple, &zero, &caps).unwrap();
        assert_eq!(dec.cost(), 0);
        // A single direction-0 line.
        let mut line = GridWord::zero(grid, field);
        line.set(grid.index(&[0, 0]), 1);
        line.set(grid.index(&[1, 0]), 1);
        let dec = best_decomposition(&tuple, &line, &caps).unwrap();
        assert_eq!(dec.cost(), 1);
        dec.validate(&tuple).unwrap();
        // The diagonal needs one row and one column.
        let mut diag = GridWord::zero(grid, field);
        diag.set(grid.index(&[0, 0]), 1);
        diag.set(grid.index(&[1, 1]), 1);
        let dec = best_decomposition(&tuple, &diag, &caps).unwrap();
        assert_eq!(dec.cost(), 2);
        // Words outside the sum code are rejected.
        let mut odd = GridWord::zero(grid, field);
        odd.set(0, 1);
        assert!(matches!(best_decomposition(&tuple, &odd, &caps), Err(Error::NotInCode)));
    }

    #[test]
    fn eps_max_examples() {
        let caps = Caps::default();
        // For the n = 2 repetition pair every subset turns out inner
        // generated except those whose closure arguments fail; the exact
        // value here is 1/2 = rho, consistent with the sandwich.
        let tuple = rep_tuple(2, 2);
        let e = eps_max(&tuple, &caps).unwrap();
        assert_eq!(e, Rat::new(1, 2));
        // Degenerate tuples are rejected.
        let degenerate =
            CodeTuple::new(vec![LinearCode::full_code(f2(), 2); 2]).unwrap();
        assert!(matches!(eps_max(&degenerate, &caps), Err(Error::Degenerate(_))));
    }

    #[test]
    fn rep3_pair_eps_max_bounded_by_seven_cell_set() {
        // The 7-cell row-plus-column set is not inner-generated and meets
        // every outside line in at most 2 of 3 cells.
        let caps = Caps::default();
        let tuple = rep_tuple(3, 2);
        let e = eps_max(&tuple, &caps).unwrap();
        assert!(e <= Rat::new(2, 3), "eps_max = {e}");
        let rho = match rho_exact(&tuple, &caps).unwrap().rho {
            RhoValue::Finite(r) => r,
            RhoValue::Unbounded => unreachable!(),
        };
        assert!(rho <= e);
        assert!(gamma(e, 2).unwrap() <= rho);
    }

    #[test]
    fn gamma_reference_values() {
        assert_eq!(gamma(Rat::new(1, 1), 2).unwrap(), Rat::new(1, 50));
        assert_eq!(gamma(Rat::new(1, 2), 2).unwrap(), Rat::new(1, 200));
        assert_eq!(gamma(Rat::new(1, 1), 3).unwrap(), Rat::new(1, 2187));
    }

    #[test]
    fn f_bound_reference_values() {
        let one = Rat::new(1, 1);
        assert_eq!(f_bound(1, one, one, Rat::new(3, 7)).unwrap(), Rat::new(3, 7));
        assert_eq!(f_bound(2, one, one, one).unwrap(), Rat::new(1, 18));
        assert_eq!(f_bound(3, one, one, one).unwrap(), Rat::new(1, 1944));
    }

    #[test]
    fn phi_map_reference_values() {
        let caps = Caps::default();
        let field = f2();
        // H = I_3, A = {1}: preimage of e_1 is e_1.
        let id = Mat::identity(field, 3);
        let phi = phi_map(&id, &[1], &caps).unwrap();
        assert_eq!(phi.b(), &[1]);
        assert_eq!(phi.apply(&[0, 1, 0]).unwrap(), vec![0, 1, 0]);
        // H = [1 1], A = {0}: coset {10, 01}, lexicographically least of the
        // weight-1 preimages.
        let h = Mat::from_rows(field, vec![vec![1, 1]]).unwrap();
        let phi = phi_map(&h, &[0], &caps).unwrap();
        assert_eq!(phi.basis_size(), 1);
        assert_eq!(phi.apply(&[1]).unwrap(), vec![0, 1]);
        assert_eq!(phi.b(), &[1]);
        // A = {}: empty basis, zero map.
        let phi = phi_map(&h, &[], &caps).unwrap();
        assert_eq!(phi.basis_size(), 0);
        assert!(phi.b().is_empty());
    }

    #[test]
    fn ltc_decompose_repetition_pairs() {
        let caps = Caps::default();
        let field = f2();
        for n in [2usize, 3] {
            let rep = LinearCode::rep_code(field, n);
            let tuple = CodeTuple::new(vec![rep.clone(), rep.clone()]).unwrap();
            let par = rep.parity().clone();
            // Exact soundness data for the repetition parity comes from the
            // local-testability module's tests; a valid (not necessarily
            // tight) range suffices here.
            let spec = DecomposeSpec {
                par,
                alpha_l: Rat::new(1, n as u64),
                alpha_h: Rat::new(n as u64 - 1, 1),
                delta: Rat::new(1, 1),
            };
            let specs = vec![spec.clone(), spec];
            let basis = sum_code_basis(&tuple);
            let grid = tuple.grid();
            // Every sum-code word decomposes within the bound.
            for mask in 0..1u32 << basis.rows() {
                let coeffs: Vec<u64> =
                    (0..basis.rows()).map(|b| (mask >> b & 1) as u64).collect();
                let word =
                    GridWord::from_values(grid, field, basis.vec_mul(&coeffs)).unwrap();
                let dec = ltc_decompose(&tuple, &word, &specs, &caps).unwrap();
                dec.validate(&tuple).unwrap();
            }
        }
    }

    #[test]
    fn ltc_decompose_rejects_foreign_words() {
        let caps = Caps::default();
        let tuple = rep_tuple(2, 2);
        let par = LinearCode::rep_code(f2(), 2).parity().clone();
        let spec = DecomposeSpec {
            par,
            alpha_l: Rat::new(1, 1),
            alpha_h: Rat::new(1, 1),
            delta: Rat::new(1, 1),
        };
        let mut odd = GridWord::zero(tuple.grid(), f2());
        odd.set(0, 1);
        assert!(matches!(
            ltc_decompose(&tuple, &odd, &[spec.clone(), spec], &caps),
            Err(Error::NotInCode)
        ));
    }

    #[test]
    fn subcode_bound_trivial_and_random() {
        let caps = Caps::default();
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let field = Field::new(2).unwrap();
        for _ in 0..3 {
            let c1 = LinearCode::random_code(field, 3, 2, &mut rng).unwrap();
            let c2 = LinearCode::random_code(field, 3, 2, &mut rng).unwrap();
            let tuple = CodeTuple::new(vec![c1.clone(), c2]).unwrap();
            // The subcode equal to C_1 itself always satisfies the bound.
            let report = check_subcode_bound(&tuple, &c1, &caps).unwrap();
            assert!(report.holds);
            let sub = c1.random_subcode(1, &mut rng).unwrap();
            let report = check_subcode_bound(&tuple, &sub, &caps).unwrap();
            assert!(report.holds);
        }
    }

    #[test]
    fn sweep_mincost_matches_best_decomposition() {
        let caps = Caps::default();
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        for t in [1u32, 2] {
            let field = Field::new(t).unwrap();
            let codes: Vec<LinearCode> = (0..2)
                .map(|_| {
                    LinearCode::random_code(field, 3, 1 + rng.gen::<usize>() % 2, &mut rng)
                        .unwrap()
                })
                .collect();
            let tuple = CodeTuple::new(codes).unwrap();
            if tuple.is_degenerate() {
                continue;
            }
            let report = rho_exact(&tuple, &caps).unwrap();
            if let (RhoValue::Finite(rho), Some((witness, dec))) =
                (&report.rho, &report.witness)
            {
                let recomputed = best_decomposition(&tuple, witness, &caps).unwrap();
                assert_eq!(recomputed.cost(), dec.cost());
                assert_eq!(
                    *rho,
                    Rat::new(
                        witness.weight() as u64,
                        (tuple.n() as u64) * dec.cost() as u64
                    )
                );
            }
        }
    }

    #[test]
    fn rho_respects_caps() {
        let tuple = rep_tuple(3, 2);
        let caps = Caps::uniform(4);
        assert!(matches!(rho_exact(&tuple, &caps), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn grid_word_round_trip_through_sum_map() {
        let tuple = rep_tuple(3, 2);
        let map = SumMap::build(&tuple);
        assert_eq!(map.t(), 6);
        assert_eq!(map.num_blocks, 6);
        let a = map.matrix(&tuple);
        assert_eq!((a.rows(), a.cols()), (9, 6));
        let grid = Grid::new(3, 2).unwrap();
        let w = vec![1, 0, 0, 1, 0, 0];
        let parts = map.parts(&tuple, &w);
        let mut total = GridWord::zero(grid, f2());
        for p in &parts {
            total = total.add(p);
        }
        assert_eq!(total.values(), a.mul_vec(&w).as_slice());
    }
}
