//! Tensor and sum codes of a tuple (C_1,…,C_D), the stacked parity-check
//! matrix, restriction submatrices, extendable and inner-generated cell
//! sets, and rank-based certification of maximal extendability.

use crate::code::LinearCode;
use crate::field::Field;
use crate::grid::{CellSet, Grid, Line};
use crate::matrix::Mat;
use crate::{mix_seed, Caps, Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeTuple {
    codes: Vec<LinearCode>,
    grid: Grid,
}

impl CodeTuple {
    pub fn new(codes: Vec<LinearCode>) -> Result<CodeTuple> {
        let first = codes
            .first()
            .ok_or_else(|| Error::InvalidArgument("tuple needs at least one code".into()))?;
        let (n, field) = (first.len(), first.field());
        for c in &codes {
            if c.field() != field {
                return Err(Error::MixedFields("tuple codes"));
            }
            if c.len() != n {
                return Err(Error::Dimension(format!(
                    "tuple mixes lengths {} and {}",
                    n,
                    c.len()
                )));
            }
        }
        let grid = Grid::new(n, codes.len())?;
        Ok(CodeTuple { codes, grid })
    }

    pub fn codes(&self) -> &[LinearCode] {
        &self.codes
    }

    pub fn code(&self, i: usize) -> &LinearCode {
        &self.codes[i]
    }

    pub fn d(&self) -> usize {
        self.codes.len()
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn field(&self) -> Field {
        self.codes[0].field()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dual_tuple(&self) -> CodeTuple {
        CodeTuple { codes: self.codes.iter().map(|c| c.dual()).collect(), grid: self.grid }
    }

    /// Some component is the full space.
    pub fn is_degenerate(&self) -> bool {
        self.codes.iter().any(|c| c.is_full())
    }
}

/// A value per grid cell, flat-indexed in the grid's cell order.
#[derive(Clone, PartialEq, Eq)]
pub struct GridWord {
    grid: Grid,
    field: Field,
    values: Vec<u64>,
}

impl std::fmt::Debug for GridWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GridWord({:?})", self.values)
    }
}

impl GridWord {
    pub fn zero(grid: Grid, field: Field) -> GridWord {
        GridWord { grid, field, values: vec![0; grid.cells()] }
    }

    pub fn from_values(grid: Grid, field: Field, values: Vec<u64>) -> Result<GridWord> {
        if values.len() != grid.cells() {
            return Err(Error::Dimension(format!(
                "word has {} values for a {}-cell grid",
                values.len(),
                grid.cells()
            )));
        }
        for &v in &values {
            field.check_elem(v)?;
        }
        Ok(GridWord { grid, field, values })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn get(&self, cell: usize) -> u64 {
        self.values[cell]
    }

    pub fn set(&mut self, cell: usize, v: u64) {
        self.values[cell] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// Number of nonzero cells.
    pub fn weight(&self) -> usize {
        self.values.iter().filter(|&&v| v != 0).count()
    }

    pub fn support(&self) -> CellSet {
        CellSet::from_indices(
            self.grid,
            &(0..self.values.len()).filter(|&c| self.values[c] != 0).collect::<Vec<_>>(),
        )
    }

    pub fn restrict_line(&self, line: &Line) -> Vec<u64> {
        self.grid.line_cells(line).iter().map(|&c| self.values[c]).collect()
    }

    /// |x|_i per direction: the number of direction-i lines where the
    /// restriction is nonzero.
    pub fn line_weights(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.grid.d()];
        for dir in 0..self.grid.d() {
            counts[dir] = self
                .grid
                .all_lines()
                .iter()
                .filter(|l| l.dir == dir)
                .filter(|l| self.restrict_line(l).iter().any(|&v| v != 0))
                .count();
        }
        counts
    }

    pub fn add(&self, other: &GridWord) -> GridWord {
        assert_eq!(self.grid, other.grid);
        let values =
            self.values.iter().zip(&other.values).map(|(&a, &b)| self.field.add(a, b)).collect();
        GridWord { grid: self.grid, field: self.field, values }
    }

    pub fn sub(&self, other: &GridWord) -> GridWord {
        // Characteristic 2: subtraction is addition.
        self.add(other)
    }
}

/// The word that is `vals` along `line` and zero elsewhere.
pub fn line_word(grid: Grid, field: Field, line: &Line, vals: &[u64]) -> GridWord {
    let mut w = GridWord::zero(grid, field);
    for (v, c) in vals.iter().zip(grid.line_cells(line)) {
        w.set(c, *v);
    }
    w
}

/// Stacked parity-check matrix of C_1⊗…⊗C_D: for each direction j the block
/// ⊗_i M_{i,j} with M_{j,j} = H_j and M_{i,j} = I_n, blocks stacked in
/// direction order. Its kernel is the tensor code; `stacked_row_lines` gives
/// each row's line.
pub fn stacked_parity_from(field: Field, n: usize, pars: &[&Mat]) -> Result<Mat> {
    let blocks: Vec<Mat> = (0..pars.len())
        .map(|j| {
            let mut acc: Option<Mat> = None;
            for i in 0..pars.len() {
                let factor =
                    if i == j { pars[j].clone() } else { Mat::identity(field, n) };
                acc = Some(match acc {
                    None => factor,
                    Some(a) => a.kron(&factor).expect("tuple blocks share a field"),
                });
            }
            acc.unwrap()
        })
        .collect();
    Mat::stack_rows(&blocks.iter().collect::<Vec<_>>())
}

pub fn tensor_parity(tuple: &CodeTuple) -> Mat {
    let pars: Vec<&Mat> = tuple.codes().iter().map(|c| c.parity()).collect();
    stacked_parity_from(tuple.field(), tuple.n(), &pars).expect("stack shapes agree")
}

/// The line of each stacked-parity row, in row order: block j's rows are
/// indexed by (r_0,…,r_{D−1}) with r_i ∈ [n] off-direction and r_j a parity
/// row index, coordinate 0 most significant.
pub fn stacked_row_lines(n: usize, d: usize, row_counts: &[usize]) -> Vec<Line> {
    let mut out = Vec::new();
    for (j, &mj) in row_counts.iter().enumerate() {
        let radix: Vec<usize> = (0..d).map(|i| if i == j { mj } else { n }).collect();
        let total: usize = radix.iter().product();
        for mut r in 0..total {
            let mut digits = vec![0usize; d];
            for i in (0..d).rev() {
                digits[i] = r % radix[i];
                r /= radix[i];
            }
            let fixed =
                (0..d).filter(|&i| i != j).map(|i| digits[i]).collect::<Vec<_>>();
            out.push(Line { dir: j, fixed });
        }
    }
    out
}

/// Basis of C_1⊗…⊗C_D: Kronecker product of the generator bases.
pub fn tensor_basis(tuple: &CodeTuple) -> Mat {
    let mut acc: Option<Mat> = None;
    for c in tuple.codes() {
        acc = Some(match acc {
            None => c.generator().clone(),
            Some(a) => a.kron(c.generator()).expect("tuple codes share a field"),
        });
    }
    acc.unwrap().row_space_canonical()
}

/// All direction-i line words over the generator rows of C_i, the spanning
/// set of C^{(i)}.
pub fn direction_span(tuple: &CodeTuple, dir: usize) -> Vec<GridWord> {
    let grid = tuple.grid();
    let gen = tuple.code(dir).generator();
    let mut out = Vec::new();
    for line in grid.all_lines().iter().filter(|l| l.dir == dir) {
        for r in 0..gen.rows() {
            out.push(line_word(grid, tuple.field(), line, gen.row(r)));
        }
    }
    out
}

/// Canonical basis of C_1⊞…⊞C_D = Σ C^{(i)}, cross-checked against the dual
/// of the tensor of duals.
pub fn sum_code_basis(tuple: &CodeTuple) -> Mat {
    let field = tuple.field();
    let cells = tuple.grid().cells();
    let mut rows = Vec::new();
    for dir in 0..tuple.d() {
        for w in direction_span(tuple, dir) {
            rows.push(w.values().to_vec());
        }
    }
    let direct = Mat::from_rows_with_cols(field, rows, cells).expect("row shapes agree");
    let direct = direct.row_space_canonical();
    // Independent route: ⊞C = (C_1^⊥⊗…⊗C_D^⊥)^⊥.
    let dual_tensor = tensor_parity(&tuple.dual_tuple()).kernel_basis();
    let via_duality = dual_tensor.kernel_basis();
    assert_eq!(direct, via_duality, "sum-code duality identity must hold");
    direct
}

/// Columns of the stacked parity restricted to S (cells ascending).
pub fn submatrix_hs(tuple: &CodeTuple, s: &CellSet) -> Mat {
    tensor_parity(tuple).select_columns(&s.iter().collect::<Vec<_>>())
}

/// Rows of the stacked parity whose whole line lies inside S, columns
/// restricted to S. A row constrains only its line's cells, so these are
/// exactly the checks involving no symbol outside S.
pub fn submatrix_hups(tuple: &CodeTuple, s: &CellSet) -> Mat {
    let h = tensor_parity(tuple);
    let row_counts: Vec<usize> =
        tuple.codes().iter().map(|c| c.parity().rows()).collect();
    let lines = stacked_row_lines(tuple.n(), tuple.d(), &row_counts);
    let grid = tuple.grid();
    let keep: Vec<usize> = (0..h.rows())
        .filter(|&r| grid.line_cells(&lines[r]).iter().all(|&c| s.contains(c)))
        .collect();
    h.select_rows(&keep).select_columns(&s.iter().collect::<Vec<_>>())
}

/// S is extendable when every local word satisfying all checks visible
/// inside S extends to a full tensor codeword: dim (tensor code)|_S equals
/// dim ker H^S.
pub fn is_extendable(tuple: &CodeTuple, s: &CellSet) -> bool {
    let basis = tensor_basis(tuple);
    let outside: Vec<bool> = (0..tuple.grid().cells()).map(|c| !s.contains(c)).collect();
    let confined = Mat::subspace_intersect_coords(&basis, &outside).rows();
    let proj_dim = basis.rows() - confined;
    let hups = submatrix_hups(tuple, s);
    let ker_dim = s.len() - hups.rank();
    assert!(proj_dim <= ker_dim, "projection must satisfy the visible checks");
    proj_dim == ker_dim
}

/// M is inner-generated when every sum-code word supported inside M is a sum
/// of codewords along lines contained in M.
pub fn is_inner_generated(tuple: &CodeTuple, m: &CellSet) -> bool {
    inner_generated_with_basis(tuple, &sum_code_basis(tuple), m)
}

/// Same check against a caller-held sum-code basis, for subset scans that
/// would otherwise rebuild it per subset.
pub(crate) fn inner_generated_with_basis(
    tuple: &CodeTuple,
    sum_basis: &Mat,
    m: &CellSet,
) -> bool {
    let inside: Vec<bool> = (0..tuple.grid().cells()).map(|c| m.contains(c)).collect();
    let confined = Mat::subspace_intersect_coords(sum_basis, &inside);
    let grid = tuple.grid();
    let field = tuple.field();
    let mut rows = Vec::new();
    for line in m.lines_in() {
        let gen = tuple.code(line.dir).generator();
        for r in 0..gen.rows() {
            rows.push(line_word(grid, field, &line, gen.row(r)).values().to_vec());
        }
    }
    let generated = Mat::from_rows_with_cols(field, rows, grid.cells())
        .expect("row shapes agree")
        .row_space_canonical();
    for r in 0..generated.rows() {
        assert!(
            confined.rowspace_contains(generated.row(r)),
            "line-generated words lie in the sum code within M"
        );
    }
    confined.rows() == generated.rows()
}

/// Asserts the duality between inner generation and extendability in the
/// dual tensor code, then returns the shared value. A mismatch is an
/// implementation bug, not a data condition.
pub fn duality_check(tuple: &CodeTuple, m: &CellSet) -> bool {
    let ig = is_inner_generated(tuple, m);
    let ext = is_extendable(&tuple.dual_tuple(), m);
    assert_eq!(ig, ext, "inner generation must match extendability in the dual");
    ig
}

/// Which submatrix of the stacked parity a rank condition concerns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternRole {
    /// H_S: columns restricted to S, all rows.
    Columns,
    /// H^S: rows whose line lies in S, columns restricted to S.
    RowsAndColumns,
}

/// Row-count shape of the stacked parity: n, D, and the per-direction
/// parity row counts.
#[derive(Clone, Debug)]
pub struct ParityShape {
    pub n: usize,
    pub row_counts: Vec<usize>,
}

impl ParityShape {
    pub fn of(pars: &[&Mat]) -> ParityShape {
        ParityShape {
            n: pars[0].cols(),
            row_counts: pars.iter().map(|p| p.rows()).collect(),
        }
    }
}

/// Ranks of fully indeterminate stacked-parity submatrices, estimated by
/// random evaluation over GF(2^62). The estimate never exceeds the true
/// generic rank; per trial it falls short with probability at most the
/// Schwartz-Zippel bound deg/2^62, so the max over trials is taken.
pub struct GenericRankTable {
    shape: ParityShape,
    grid: Grid,
    trials: Vec<Mat>,
    row_lines: Vec<Line>,
}

pub const GENERIC_FIELD_DEGREE: u32 = 62;
pub const GENERIC_TRIALS: u32 = 3;

impl GenericRankTable {
    pub fn new(shape: ParityShape, trials: u32, seed: u64) -> Result<GenericRankTable> {
        let d = shape.row_counts.len();
        let grid = Grid::new(shape.n, d)?;
        let field = Field::new(GENERIC_FIELD_DEGREE)?;
        let mut mats = Vec::new();
        for trial in 0..trials {
            let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, trial as u64));
            let pars: Vec<Mat> = shape
                .row_counts
                .iter()
                .map(|&m| Mat::random_uniform(field, m, shape.n, &mut rng))
                .collect();
            mats.push(stacked_parity_from(field, shape.n, &pars.iter().collect::<Vec<_>>())?);
        }
        let row_lines = stacked_row_lines(shape.n, d, &shape.row_counts);
        Ok(GenericRankTable { shape, grid, trials: mats, row_lines })
    }

    pub fn shape(&self) -> &ParityShape {
        &self.shape
    }

    /// Estimated generic rank of the selected submatrix.
    pub fn rank(&self, role: PatternRole, s: &CellSet) -> usize {
        let cols: Vec<usize> = s.iter().collect();
        self.trials
            .iter()
            .map(|h| match role {
                PatternRole::Columns => h.select_columns(&cols).rank(),
                PatternRole::RowsAndColumns => {
                    let keep: Vec<usize> = (0..h.rows())
                        .filter(|&r| {
                            self.grid
                                .line_cells(&self.row_lines[r])
                                .iter()
                                .all(|&c| s.contains(c))
                        })
                        .collect();
                    h.select_rows(&keep).select_columns(&cols).rank()
                }
            })
            .max()
            .unwrap_or(0)
    }
}

/// One-shot generic rank estimate for a single submatrix pattern.
pub fn generic_rank(
    shape: &ParityShape,
    role: PatternRole,
    s: &CellSet,
    trials: u32,
    seed: u64,
) -> Result<usize> {
    Ok(GenericRankTable::new(shape.clone(), trials, seed)?.rank(role, s))
}

#[derive(Clone, Debug)]
pub enum Scope {
    /// Every subset of the grid; needs n^D small enough that 2^{n^D} subsets
    /// fit the cap.
    All,
    /// `count` uniformly drawn subsets.
    Sampled { count: u64 },
}

pub const DEFAULT_SAMPLED_SUBSETS: u64 = 1 << 12;

#[derive(Clone, Debug)]
pub struct RankFailure {
    pub cells: Vec<usize>,
    pub role: PatternRole,
    pub rank: usize,
    pub generic: usize,
}

#[derive(Clone, Debug)]
pub struct GoodSubReport {
    pub good: bool,
    pub scope: Scope,
    pub seed: u64,
    pub trials: u32,
    pub subsets_checked: u64,
    pub failures: Vec<RankFailure>,
}

fn scope_subsets(grid: Grid, scope: &Scope, seed: u64, caps: &Caps) -> Result<Vec<CellSet>> {
    match scope {
        Scope::All => {
            let cells = grid.cells();
            if cells > 24 {
                return Err(Error::InvalidArgument(format!(
                    "all-subsets scope needs at most 24 cells, grid has {cells}"
                )));
            }
            Caps::check("all-subsets scope", 1u128 << cells, caps.subsets)?;
            Ok((0u64..1 << cells)
                .map(|mask| {
                    CellSet::from_indices(
                        grid,
                        &(0..cells).filter(|&c| mask >> c & 1 == 1).collect::<Vec<_>>(),
                    )
                })
                .collect())
        }
        Scope::Sampled { count } => {
            Caps::check("sampled scope", *count as u128, caps.subsets)?;
            Ok((0..*count)
                .map(|i| {
                    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, i ^ 0x5eed));
                    CellSet::from_indices(
                        grid,
                        &(0..grid.cells()).filter(|_| rng.gen::<bool>()).collect::<Vec<_>>(),
                    )
                })
                .collect())
        }
    }
}

/// Checks the rank conditions rk H_S(a) = rk H_S and rk H^S(a) = rk H^S for
/// every S in scope, where the right-hand sides are generic-rank estimates
/// of the indeterminate pattern with the same shape.
pub fn is_good_substitution(
    pars: &[&Mat],
    scope: &Scope,
    trials: u32,
    seed: u64,
    caps: &Caps,
) -> Result<GoodSubReport> {
    if pars.is_empty() {
        return Err(Error::InvalidArgument("need at least one parity matrix".into()));
    }
    let field = pars[0].field();
    let n = pars[0].cols();
    for p in pars {
        if p.field() != field {
            return Err(Error::MixedFields("parity matrices"));
        }
        if p.cols() != n {
            return Err(Error::Dimension("parity matrices must share the length n".into()));
        }
    }
    let shape = ParityShape::of(pars);
    let table = GenericRankTable::new(shape, trials, seed)?;
    let grid = table.grid;
    let h = stacked_parity_from(field, n, pars)?;
    let row_lines = stacked_row_lines(n, pars.len(), &table.shape.row_counts);
    let subsets = scope_subsets(grid, scope, seed, caps)?;
    let mut failures = Vec::new();
    for s in &subsets {
        let cols: Vec<usize> = s.iter().collect();
        let rank_hs = h.select_columns(&cols).rank();
        let generic_hs = table.rank(PatternRole::Columns, s);
        if rank_hs != generic_hs {
            failures.push(RankFailure {
                cells: cols.clone(),
                role: PatternRole::Columns,
                rank: rank_hs,
                generic: generic_hs,
            });
            continue;
        }
        let keep: Vec<usize> = (0..h.rows())
            .filter(|&r| grid.line_cells(&row_lines[r]).iter().all(|&c| s.contains(c)))
            .collect();
        let rank_hups = h.select_rows(&keep).select_columns(&cols).rank();
        let generic_hups = table.rank(PatternRole::RowsAndColumns, s);
        if rank_hups != generic_hups {
            failures.push(RankFailure {
                cells: cols,
                role: PatternRole::RowsAndColumns,
                rank: rank_hups,
                generic: generic_hups,
            });
        }
    }
    Ok(GoodSubReport {
        good: failures.is_empty(),
        scope: scope.clone(),
        seed,
        trials,
        subsets_checked: subsets.len() as u64,
        failures,
    })
}

#[derive(Clone, Debug)]
pub struct MaxExtCertificate {
    pub certified: bool,
    pub report: GoodSubReport,
    /// The certificate is one-sided: generic ranks are randomized estimates
    /// that never exceed the truth, so "certified" can err only through an
    /// underestimated generic rank, with per-trial Schwartz-Zippel
    /// probability at most (total degree)/2^62.
    pub one_sided_note: &'static str,
}

/// A tuple whose parity substitution passes the rank conditions on every S
/// in scope is maximally extendable: any S extendable in some tuple with the
/// same dimensions is extendable here.
pub fn certify_maximally_extendable(
    tuple: &CodeTuple,
    scope: &Scope,
    trials: u32,
    seed: u64,
    caps: &Caps,
) -> Result<MaxExtCertificate> {
    let pars: Vec<&Mat> = tuple.codes().iter().map(|c| c.parity()).collect();
    let report = is_good_substitution(&pars, scope, trials, seed, caps)?;
    Ok(MaxExtCertificate {
        certified: report.good,
        report,
        one_sided_note: "generic ranks are randomized lower estimates; certification is \
                         exact up to the per-trial evaluation failure probability",
    })
}

/// Basis of X⊗Y for two codes of the same field (grid [n]^2 cell order).
pub fn tensor2_basis(x: &LinearCode, y: &LinearCode) -> Mat {
    x.generator()
        .kron(y.generator())
        .expect("codes share a field")
        .row_space_canonical()
}
