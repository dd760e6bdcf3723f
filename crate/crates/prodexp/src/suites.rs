//! Named property batteries. The acceptance tests and the `suite` command
//! run the same code, so a battery passing on the command line is exactly
//! the acceptance check passing.

use crate::code::LinearCode;
use crate::expansion::{
    check_subcode_bound, eps_max, f_bound, gamma, ltc_decompose, rho_exact, DecomposeSpec,
    RhoValue,
};
use crate::field::Field;
use crate::grid::{
    closure_constant, eps_closure, eps_closure_rounds, is_eps_closed, CellSet, Grid,
};
use crate::ltc::{
    delta_limited, pad_zero, soundness_exact, soundness_range, tensor_extend, LtcBundle,
    LtcParams,
};
use crate::matrix::Mat;
use crate::product::{
    certify_maximally_extendable, is_extendable, is_good_substitution, is_inner_generated,
    line_word, sum_code_basis, tensor2_basis, CodeTuple, Scope, GENERIC_TRIALS,
};
use crate::sheaf::rho_via_sheaf_threads;
use crate::{mix_seed, Caps, Error, Rat, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

#[derive(Clone, Debug)]
pub struct Check {
    pub label: String,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(name: &'static str) -> SuiteReport {
        SuiteReport { name, checks: Vec::new() }
    }

    fn push(&mut self, label: impl Into<String>, pass: bool) {
        self.checks.push(Check { label: label.into(), pass });
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn summary(&self) -> String {
        let passed = self.checks.iter().filter(|c| c.pass).count();
        format!(
            "suite {}: {} ({passed}/{} checks)",
            self.name,
            if self.pass() { "PASS" } else { "FAIL" },
            self.checks.len()
        )
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "check {}: {}\n",
                c.label,
                if c.pass { "PASS" } else { "FAIL" }
            ));
        }
        out.push_str(&self.summary());
        out.push('\n');
        out
    }
}

pub const SUITE_NAMES: &[&str] = &[
    "closure-figure",
    "duality",
    "oracle",
    "repetition",
    "sandwich",
    "closure-size",
    "subcode",
    "intersection",
    "theorem1",
    "ltc",
    "decompose",
    "expansion",
    "extendability",
];

pub fn run_suite(name: &str, seed: u64, threads: usize, caps: &Caps) -> Result<SuiteReport> {
    match name {
        "closure-figure" => closure_figure_battery(),
        "duality" => duality_battery(),
        "oracle" => oracle_battery(seed, threads, caps),
        "repetition" => repetition_battery(caps),
        "sandwich" => sandwich_battery(seed, caps),
        "closure-size" => closure_size_battery(seed),
        "subcode" => subcode_battery(seed, caps),
        "intersection" => intersection_battery(seed),
        "theorem1" => theorem1_battery(seed, caps),
        "ltc" => ltc_battery(seed, caps),
        "decompose" => decompose_battery(seed, caps),
        "expansion" => expansion_battery(seed, caps),
        "extendability" => extendability_battery(seed, caps),
        _ => Err(Error::InvalidArgument(format!(
            "unknown suite {name:?}; available: {}",
            SUITE_NAMES.join(", ")
        ))),
    }
}

/// The 13-cell seed on the 6x6 grid whose half-threshold closure adds 8
/// cells over three rounds.
pub fn figure_closure_instance() -> (CellSet, CellSet) {
    let g = Grid::new(6, 2).expect("6x6 grid");
    let xy = |pairs: &[(usize, usize)]| {
        CellSet::from_indices(
            g,
            &pairs.iter().map(|&(x, y)| g.index(&[x, y])).collect::<Vec<_>>(),
        )
    };
    let seed = xy(&[
        (0, 5),
        (4, 5),
        (5, 5),
        (5, 4),
        (1, 3),
        (2, 3),
        (4, 2),
        (4, 1),
        (5, 1),
        (0, 0),
        (1, 0),
        (2, 0),
        (3, 0),
    ]);
    let added = xy(&[
        (4, 0),
        (5, 0),
        (4, 3),
        (4, 4),
        (5, 2),
        (5, 3),
        (0, 3),
        (3, 3),
    ]);
    let expected = seed.union(&added);
    (seed, expected)
}

pub fn closure_figure_battery() -> Result<SuiteReport> {
    let mut report = SuiteReport::new("closure-figure");
    let (seed, expected) = figure_closure_instance();
    let eps = Rat::new(1, 2);
    report.push("seed has 13 cells", seed.len() == 13);
    report.push("seed is not closed", !is_eps_closed(&seed, eps)?);
    let trace = eps_closure_rounds(&seed, eps)?;
    report.push("closure runs exactly three rounds", trace.rounds.len() == 3);
    report.push(
        "closure is the expected 21-cell set",
        trace.result == expected && trace.result.len() == 21,
    );
    report.push(
        "closure is a fixed point",
        eps_closure(&trace.result, eps)? == trace.result,
    );
    Ok(report)
}

/// The depicted 7-cell pattern for the binary repetition pair on the 3x3
/// grid, with its sum-code witness word.
fn figure_pattern() -> (CodeTuple, CellSet, Vec<u64>) {
    let field = Field::new(1).expect("binary field");
    let code = LinearCode::rep_code(field, 3);
    let tuple = CodeTuple::new(vec![code.clone(), code]).expect("repetition pair");
    let g = tuple.grid();
    let cells: Vec<usize> = [(0, 0), (1, 0), (2, 0), (0, 1), (2, 1), (1, 2), (2, 2)]
        .iter()
        .map(|&(x, y)| g.index(&[x, y]))
        .collect();
    let m = CellSet::from_indices(g, &cells);
    // Top row plus left column; they cancel at the shared corner.
    let mut word = vec![0u64; 9];
    for x in 0..3 {
        word[g.index(&[x, 2])] ^= 1;
    }
    for y in 0..3 {
        word[g.index(&[0, y])] ^= 1;
    }
    (tuple, m, word)
}

pub fn duality_battery() -> Result<SuiteReport> {
    let mut report = SuiteReport::new("duality");
    let (tuple, m, word) = figure_pattern();
    let grid = tuple.grid();
    let field = tuple.field();
    report.push("pattern is not inner-generated", !is_inner_generated(&tuple, &m));
    report.push(
        "pattern is not extendable in the dual pair",
        !is_extendable(&tuple.dual_tuple(), &m),
    );
    let sum_basis = sum_code_basis(&tuple);
    let supported = word
        .iter()
        .enumerate()
        .all(|(cell, &v)| v == 0 || m.contains(cell));
    report.push(
        "witness word lies in the sum code with support inside the pattern",
        sum_basis.rowspace_contains(&word) && supported,
    );
    // The only lines inside the pattern are the bottom row and the right
    // column; the witness is not a combination of their codewords.
    let inside = m.lines_in();
    let rows: Vec<Vec<u64>> = inside
        .iter()
        .map(|line| line_word(grid, field, line, &[1, 1, 1]).values().to_vec())
        .collect();
    let span = Mat::from_rows_with_cols(field, rows, grid.cells())?;
    report.push(
        "witness is not generated by the two inside lines",
        inside.len() == 2 && !span.rowspace_contains(&word),
    );
    let mut agreements = 0usize;
    let dual = tuple.dual_tuple();
    for mask in 0..1usize << 9 {
        let cells: Vec<usize> = (0..9).filter(|i| mask >> i & 1 == 1).collect();
        let s = CellSet::from_indices(grid, &cells);
        if is_inner_generated(&tuple, &s) == is_extendable(&dual, &s) {
            agreements += 1;
        }
    }
    report.push(
        format!("inner generation matches dual extendability on {agreements}/512 subsets"),
        agreements == 512,
    );
    Ok(report)
}

/// The tuple population shared by the oracle-equality and sandwich checks:
/// 50 planar tuples with n up to 3 over the binary and quaternary fields,
/// then 5 binary cubic tuples on [2]^3, all with component dimensions up
/// to 2.
pub fn oracle_tuples(seed: u64) -> Result<Vec<CodeTuple>> {
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, 0x07ac1e));
    let mut tuples = Vec::with_capacity(55);
    for _ in 0..50 {
        let t = if rng.gen::<bool>() { 1 } else { 2 };
        let field = Field::new(t)?;
        let n = 2 + rng.gen::<usize>() % 2;
        let codes = (0..2)
            .map(|_| {
                let k = rng.gen::<usize>() % (n.min(2) + 1);
                LinearCode::random_code(field, n, k, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        tuples.push(CodeTuple::new(codes)?);
    }
    let field = Field::new(1)?;
    for _ in 0..5 {
        let codes = (0..3)
            .map(|_| {
                let k = rng.gen::<usize>() % 3;
                LinearCode::random_code(field, 2, k, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        tuples.push(CodeTuple::new(codes)?);
    }
    Ok(tuples)
}

pub fn oracle_battery(seed: u64, threads: usize, caps: &Caps) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("oracle");
    let tuples = oracle_tuples(seed)?;
    let planar = tuples.iter().filter(|t| t.d() == 2).count();
    let cubic = tuples.iter().filter(|t| t.d() == 3).count();
    report.push(
        format!("population holds {planar} planar and {cubic} cubic tuples"),
        planar >= 50 && cubic >= 5,
    );
    let mut mismatch = None;
    let mut finite = 0usize;
    for (i, tuple) in tuples.iter().enumerate() {
        let direct = rho_exact(tuple, caps)?.rho;
        let sheaf = rho_via_sheaf_threads(tuple, caps, threads)?;
        if direct != sheaf {
            mismatch = Some(format!("tuple {i}: {direct} vs {sheaf}"));
            break;
        }
        if matches!(direct, RhoValue::Finite(_)) {
            finite += 1;
        }
    }
    report.push(
        match &mismatch {
            None => format!(
                "direct sweep equals the sheaf route on all {} tuples ({finite} finite)",
                tuples.len()
            ),
            Some(m) => format!("routes disagree at {m}"),
        },
        mismatch.is_none(),
    );
    Ok(report)
}

pub fn repetition_battery(caps: &Caps) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("repetition");
    let field = Field::new(1)?;
    let pair = |n: usize| {
        let c = LinearCode::rep_code(field, n);
        CodeTuple::new(vec![c.clone(), c])
    };
    let rho2 = rho_exact(&pair(2)?, caps)?.rho;
    report.push("repetition pair on [2]^2 reaches exactly 1/2", {
        rho2 == RhoValue::Finite(Rat::new(1, 2))
    });
    for n in 2..=4 {
        let rho = rho_exact(&pair(n)?, caps)?.rho;
        report.push(
            format!("repetition pair on [{n}]^2 stays at or above 1/3"),
            matches!(rho, RhoValue::Finite(r) if r >= Rat::new(1, 3)),
        );
    }
    let c = LinearCode::rep_code(field, 2);
    let triple = CodeTuple::new(vec![c.clone(), c.clone(), c])?;
    let rho3 = rho_exact(&triple, caps)?.rho;
    report.push(
        "repetition triple on [2]^3 stays at or above 1/7",
        matches!(rho3, RhoValue::Finite(r) if r >= Rat::new(1, 7)),
    );
    Ok(report)
}

pub fn sandwich_battery(seed: u64, caps: &Caps) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("sandwich");
    let tuples = oracle_tuples(seed)?;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut failure = None;
    for (i, tuple) in tuples.iter().enumerate() {
        if tuple.is_degenerate() {
            skipped += 1;
            continue;
        }
        let rho = match rho_exact(tuple, caps)?.rho {
            RhoValue::Finite(r) => r,
            // An all-zero sum code leaves nothing to sandwich.
            RhoValue::Unbounded => {
                skipped += 1;
                continue;
            }
        };
        let eps = eps_max(tuple, caps)?;
        let lower = gamma(eps, tuple.d())?;
        if !(lower <= rho && rho <= eps) {
            failure = Some(format!("tuple {i}: gamma {lower}, rho {rho}, eps {eps}"));
            break;
        }
        checked += 1;
    }
    report.push(
        match &failure {
            None => format!("bounds hold on {checked} tuples ({skipped} skipped)"),
            Some(f) => format!("bound violated at {f}"),
        },
        failure.is_none(),
    );
    Ok(report)
}

pub fn closure_size_battery(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("closure-size");
    let g = Grid::new(3, 2)?;
    let mut exhaustive_ok = 0usize;
    let exhaustive_total = 512 * 3;
    for mask in 0..1usize << 9 {
        let cells: Vec<usize> = (0..9).filter(|i| mask >> i & 1 == 1).collect();
        let m = CellSet::from_indices(g, &cells);
        for eps in [Rat::new(1, 3), Rat::new(2, 3), Rat::new(1, 1)] {
            let closure = eps_closure(&m, eps)?;
            let bound = closure_constant(eps, 2)? * Rat::new(m.len() as u64, 1);
            if Rat::new(closure.len() as u64, 1) <= bound {
                exhaustive_ok += 1;
            }
        }
    }
    report.push(
        format!("bound holds on {exhaustive_ok}/{exhaustive_total} exhaustive planar cases"),
        exhaustive_ok == exhaustive_total,
    );
    let g = Grid::new(4, 3)?;
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, 0xc105e));
    let mut random_ok = 0usize;
    let random_total = 10_000 * 2;
    for _ in 0..10_000 {
        let cells: Vec<usize> = (0..g.cells()).filter(|_| rng.gen::<bool>()).collect();
        let m = CellSet::from_indices(g, &cells);
        for eps in [Rat::new(1, 4), Rat::new(1, 2)] {
            let closure = eps_closure(&m, eps)?;
            let bound = closure_constant(eps, 3)? * Rat::new(m.len() as u64, 1);
            if Rat::new(closure.len() as u64, 1) <= bound {
                random_ok += 1;
            }
        }
    }
    report.push(
        format!("bound holds on {random_ok}/{random_total} random cubic cases"),
        random_ok == random_total,
    );
    Ok(report)
}

pub fn subcode_battery(seed: u64, caps: &Caps) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("subcode");
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, 0x50bc0de));
    let quaternary = Field::new(2)?;
    let binary = Field::new(1)?;
    let mut held = 0usize;
    let mut total = 0usize;
    let mut failure = None;
    for i in 0..20 {
        let c1 = LinearCode::random_code(quaternary, 3, 2, &mut rng)?;
        // The first instance keeps the subcode equal to the code itself.
        let sub = if i == 0 { c1.clone() } else { c1.random_subcode(1, &mut rng)? };
        let k2 = 1 + rng.gen::<usize>() % 2;
        let c2 = LinearCode::random_code(quaternary, 3, k2, &mut rng)?;
        let tuple = CodeTuple::new(vec![c1, c2])?;
        total += 1;
        match check_subcode_bound(&tuple, &sub, caps) {
            Ok(r) if r.holds => held += 1,
            Ok(_) => failure = Some(format!("planar instance {i}")),
            Err(e) => return Err(e),
        }
    }
    for i in 0..5 {
        let k1 = 1 + rng.gen::<usize>() % 2;
        let c1 = LinearCode::random_code(binary, 2, k1, &mut rng)?;
        let sub = c1.random_subcode(1 + rng.gen::<usize>() % k1, &mut rng)?;
        let rest = (0..2)
            .map(|_| LinearCode::random_code(binary, 2, 1 + rng.gen::<usize>() % 2, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let mut codes = vec![c1];
        codes.extend(rest);
        let tuple = CodeTuple::new(codes)?;
        total += 1;
        match check_subcode_bound(&tuple, &sub, caps) {
            Ok(r) if r.holds => held += 1,
            Ok(_) => failure = Some(format!("cubic instance {i}")),
            Err(e) => return Err(e),
        }
    }
    report.push(
        match &failure {
            None => format!("lemma and corollary bounds hold on {held}/{total} instances"),
            Some(f) => format!("bound violated at {f}"),
        },
        failure.is_none() && held == total,
    );
    Ok(report)
}

fn intersect_codes(a: &LinearCode, b: &LinearCode) -> Result<LinearCode> {
    LinearCode::from_generator(Mat::subspace_intersect(a.generator(), b.generator())?)
}

pub fn intersection_battery(seed: u64) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("intersection");
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, 0x1e75ec7));
    let mut ok = 0usize;
    for i in 0..50 {
        let field = Field::new(if i % 2 == 0 { 1 } else { 2 })?;
        let n = 2 + rng.gen::<usize>() % 2;
        let kx = rng.gen::<usize>() % (n + 1);
        let ky = rng.gen::<usize>() % (n + 1);
        let k1 = rng.gen::<usize>() % (n + 1);
        let k2 = rng.gen::<usize>() % (n + 1);
        let x = LinearCode::random_code(field, n, kx, &mut rng)?;
        let y = LinearCode::random_code(field, n, ky, &mut rng)?;
        let c1 = LinearCode::random_code(field, n, k1, &mut rng)?;
        let c2 = LinearCode::random_code(field, n, k2, &mut rng)?;
        let tuple = CodeTuple::new(vec![c1.clone(), c2.clone()])?;
        let left =
            Mat::subspace_intersect(&tensor2_basis(&x, &y), &sum_code_basis(&tuple))?;
        let first = tensor2_basis(&intersect_codes(&x, &c1)?, &y);
        let second = tensor2_basis(&x, &intersect_codes(&y, &c2)?);
        let right = Mat::stack_rows(&[&first, &second])?.row_space_canonical();
        if left == right {
            ok += 1;
        }
    }
    report.push(
        format!("tensor-sum intersection identity holds on {ok}/50 quadruples"),
        ok == 50,
    );
    Ok(report)
}

/// Parameters of the random-substitution experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub t: u32,
    pub dims: Vec<usize>,
    pub samples: u64,
    pub seed: u64,
    pub caps: Caps,
    pub scope: Scope,
}

impl ExperimentConfig {
    /// The fixed acceptance parameters: a 2x2 grid over the 2^16-element
    /// field, both dimensions 1, a thousand samples, every subset checked.
    pub fn theorem_one_defaults(seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            n: 2,
            d: 2,
            t: 16,
            dims: vec![1, 1],
            samples: 1000,
            seed,
            caps: Caps::uniform(1 << 26),
            scope: Scope::All,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Theorem1Report {
    pub config: ExperimentConfig,
    /// Samples failing the good-substitution rank conditions.
    pub failures: u64,
    pub fraction: f64,
    /// The analytic failure bound n^D 2^(n^D - t + 1).
    pub bound: f64,
    /// Three-sigma Monte Carlo margin on top of the bound.
    pub margin: f64,
    /// A bound at or above one asserts nothing.
    pub bound_vacuous: bool,
    pub within_bound: bool,
    pub good: u64,
    pub certified: u64,
    pub all_good_certified: bool,
    pub min_rho: Option<Rat>,
    pub rho_skipped: u64,
}

pub fn theorem1_experiment(cfg: &ExperimentConfig) -> Result<Theorem1Report> {
    if cfg.dims.len() != cfg.d {
        return Err(Error::InvalidArgument("one dimension per direction required".into()));
    }
    if cfg.dims.iter().any(|&k| k > cfg.n) || cfg.n == 0 || cfg.samples == 0 {
        return Err(Error::InvalidArgument("dimensions must satisfy k <= n".into()));
    }
    let field = Field::new(cfg.t)?;
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(cfg.seed, 0x7e08e11));
    let mut failures = 0u64;
    let mut good = 0u64;
    let mut certified = 0u64;
    let mut min_rho: Option<Rat> = None;
    let mut rho_skipped = 0u64;
    for _ in 0..cfg.samples {
        let pars: Vec<Mat> = cfg
            .dims
            .iter()
            .map(|&k| Mat::random_uniform(field, cfg.n - k, cfg.n, &mut rng))
            .collect();
        let par_refs: Vec<&Mat> = pars.iter().collect();
        let sub = is_good_substitution(
            &par_refs,
            &cfg.scope,
            GENERIC_TRIALS,
            cfg.seed,
            &cfg.caps,
        )?;
        if !sub.good {
            failures += 1;
            continue;
        }
        good += 1;
        let codes = pars
            .iter()
            .map(|p| LinearCode::from_parity(p.clone()))
            .collect::<Result<Vec<_>>>()?;
        let tuple = CodeTuple::new(codes)?;
        let cert =
            certify_maximally_extendable(&tuple, &cfg.scope, GENERIC_TRIALS, cfg.seed, &cfg.caps)?;
        if cert.certified {
            certified += 1;
        }
        match rho_exact(&tuple, &cfg.caps) {
            Ok(r) => {
                if let RhoValue::Finite(v) = r.rho {
                    min_rho = Some(min_rho.map_or(v, |m| m.min(v)));
                }
            }
            Err(Error::CapExceeded { .. }) => rho_skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let cells = cfg.n.pow(cfg.d as u32) as i32;
    let bound = (cfg.n.pow(cfg.d as u32) as f64) * 2f64.powi(cells - cfg.t as i32 + 1);
    let margin = 3.0 * (bound / cfg.samples as f64).sqrt();
    let fraction = failures as f64 / cfg.samples as f64;
    let bound_vacuous = bound >= 1.0;
    Ok(Theorem1Report {
        config: cfg.clone(),
        failures,
        fraction,
        bound,
        margin,
        bound_vacuous,
        within_bound: bound_vacuous || fraction <= bound + margin,
        good,
        certified,
        all_good_certified: certified == good,
        min_rho,
        rho_skipped,
    })
}

pub fn theorem1_battery(seed: u64, _caps: &Caps) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("theorem1");
    let cfg = ExperimentConfig::theorem_one_defaults(seed);
    let exp = theorem1_experiment(&cfg)?;
    report.push(
        format!(
            "failure fraction {:.6} within bound {:.6} plus margin {:.6}",
            exp.fraction, exp.bound, exp.margin
        ),
        exp.within_bound && !exp.bound_vacuous,
    );
    report.push(
        format!("{}/{} good substitutions certified maximally extendable", exp.certified, exp.good),
        exp.all_good_certified && exp.good > 0,
    );
    Ok(report)
}

fn random_bundle(
    field: Field,
    n: usize,
    k: usize,
    rng: &mut impl Rng,
    caps: &Caps,
) -> Result<LtcBundle> {
    let code = LinearCode::random_code(field, n, k, rng)?;
    let parity = code.parity().clone();
    let s = soundness_exact(&parity, caps)?;
    let params =
        LtcParams { locality: delta_limited(&parity), s, m: parity.rows(), n };
    Ok(LtcBundle { code, parity, params })
}

pub fn ltc_battery(seed: u64, caps: &Caps) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("ltc");
    let field = Field::new(1)?;
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, 0x17c));
    // Identity-extension invariance of the exact soundness range.
    let mut invariant = 0usize;
    let mut tried = 0usize;
    while tried < 20 {
        let m = 1 + rng.gen::<usize>() % 3;
        let n = 2 + rng.gen::<usize>() % 4;
        let h = Mat::random_uniform(field, m, n, &mut rng);
        let base = match soundness_range(&h, caps) {
            Ok(r) => r,
            Err(Error::InvalidArgument(_)) => continue,
            Err(e) => return Err(e),
        };
        tried += 1;
        let mut holds = true;
        for t in [2usize, 3] {
            let ident = Mat::identity(field, t);
            holds &= soundness_range(&ident.kron(&h)?, caps)? == base;
            holds &= soundness_range(&h.kron(&ident)?, caps)? == base;
        }
        if holds {
            invariant += 1;
        }
    }
    report.push(
        format!("identity extensions keep the soundness range on {invariant}/20 matrices"),
        invariant == 20,
    );

    // Extension and padding keep their claimed soundness on random bundles.
    let mut constructed = Vec::new();
    for i in 0..8 {
        let n = 2 + i % 4;
        let k = 1 + rng.gen::<usize>() % (n - 1).max(1);
        constructed.push(random_bundle(field, n, k, &mut rng, caps)?);
    }
    let mut extension_ok = true;
    let mut padding_ok = true;
    let mut window_bundles = Vec::new();
    for bundle in &constructed {
        for t in [2usize, 3] {
            let ext = tensor_extend(bundle, t, caps)?;
            extension_ok &= soundness_exact(&ext.parity, caps)? == bundle.params.s;
            window_bundles.push(ext);
        }
        for u in [1usize, 2] {
            let padded = pad_zero(bundle, u, caps)?;
            let claim = (bundle.params.s / Rat::new(2, 1)).min(Rat::new(1, 1));
            let (m, n) = (bundle.params.m, bundle.params.n);
            if 2 * m >= n && m <= n {
                padding_ok &= soundness_exact(&padded.parity, caps)? >= claim;
                window_bundles.push(padded);
            }
        }
        window_bundles.push(bundle.clone());
    }
    report.push("identity extension preserves exact soundness", extension_ok);
    report.push("zero padding keeps at least min(s/2, 1)", padding_ok);

    // Inside the row-count window, the soundness range is pinned between
    // s/2 and the locality.
    let mut window_ok = true;
    let mut window_count = 0usize;
    for bundle in &window_bundles {
        let (m, n) = (bundle.parity.rows(), bundle.parity.cols());
        if !(2 * m >= n && m <= n) {
            continue;
        }
        window_count += 1;
        let s = soundness_exact(&bundle.parity, caps)?;
        let range = soundness_range(&bundle.parity, caps)?;
        window_ok &= range.alpha_l >= s / Rat::new(2, 1)
            && range.alpha_h <= Rat::new(delta_limited(&bundle.parity) as u64, 1);
    }
    report.push(
        format!("window bounds hold on {window_count} constructed testable codes"),
        window_ok && window_count > 0,
    );
    Ok(report)
}

pub fn decompose_battery(seed: u64, caps: &Caps) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("decompose");
    let field = Field::new(1)?;
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, 0xdec0));
    let mut ok = 0usize;
    for _ in 0..20 {
        let n = 2 + rng.gen::<usize>() % 3;
        let codes: Vec<LinearCode> = (0..2)
            .map(|_| {
                let k = 1 + rng.gen::<usize>() % (n - 1);
                LinearCode::random_code(field, n, k, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let tuple = CodeTuple::new(codes)?;
        let specs = tuple
            .codes()
            .iter()
            .map(|c| {
                let par = c.parity().clone();
                let range = soundness_range(&par, caps)?;
                Ok(DecomposeSpec {
                    par,
                    alpha_l: range.alpha_l,
                    alpha_h: range.alpha_h,
                    delta: Rat::new(c.min_distance(caps)? as u64, n as u64),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let basis = sum_code_basis(&tuple);
        let mut coeffs: Vec<u64> =
            (0..basis.rows()).map(|_| rng.gen::<u64>() % 2).collect();
        if coeffs.iter().all(|&c| c == 0) && !coeffs.is_empty() {
            coeffs[0] = 1;
        }
        let word = crate::product::GridWord::from_values(
            tuple.grid(),
            field,
            basis.vec_mul(&coeffs),
        )?;
        let dec = ltc_decompose(&tuple, &word, &specs, caps)?;
        dec.validate(&tuple)?;
        let alpha_l = specs.iter().map(|s| s.alpha_l).min().unwrap();
        let alpha_h = specs.iter().map(|s| s.alpha_h).max().unwrap();
        let delta = specs.iter().map(|s| s.delta).min().unwrap();
        let f = f_bound(2, alpha_l, alpha_h, delta)?;
        let within = Rat::new((dec.cost() * n) as u64, 1) * f
            <= Rat::new(word.weight() as u64, 1);
        if within {
            ok += 1;
        }
    }
    report.push(
        format!("valid decompositions within the f-bound on {ok}/20 instances"),
        ok == 20,
    );
    let one = Rat::new(1, 1);
    report.push(
        "f recursion reference values",
        f_bound(1, one, Rat::new(3, 1), Rat::new(2, 3))? == Rat::new(2, 3)
            && f_bound(2, one, one, one)? == Rat::new(1, 18),
    );
    Ok(report)
}

pub fn expansion_battery(seed: u64, caps: &Caps) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("expansion");
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, 0xe85a));

    // Every rho-closed planar pattern is inner-generated.
    let mut closed_checked = 0usize;
    let mut closed_ok = true;
    for i in 0..10 {
        let field = Field::new(if i % 2 == 0 { 1 } else { 2 })?;
        let codes: Vec<LinearCode> = (0..2)
            .map(|_| {
                let k = 1 + rng.gen::<usize>() % 2;
                LinearCode::random_code(field, 3, k, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let tuple = CodeTuple::new(codes)?;
        let rho = match rho_exact(&tuple, caps)?.rho {
            RhoValue::Finite(r) => r,
            RhoValue::Unbounded => continue,
        };
        let grid = tuple.grid();
        for mask in 0..1usize << 9 {
            let cells: Vec<usize> = (0..9).filter(|c| mask >> c & 1 == 1).collect();
            let m = CellSet::from_indices(grid, &cells);
            if is_eps_closed(&m, rho)? {
                closed_checked += 1;
                closed_ok &= is_inner_generated(&tuple, &m);
            }
        }
    }
    report.push(
        format!("all {closed_checked} rho-closed patterns are inner-generated"),
        closed_ok && closed_checked > 0,
    );

    // Dropping directions never shrinks rho.
    let field = Field::new(1)?;
    let mut monotone_ok = true;
    for _ in 0..5 {
        let codes: Vec<LinearCode> = (0..3)
            .map(|_| LinearCode::random_code(field, 2, 1, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let tuple = CodeTuple::new(codes.clone())?;
        let full = match rho_exact(&tuple, caps)?.rho {
            RhoValue::Finite(r) => r,
            RhoValue::Unbounded => continue,
        };
        let mut subs: Vec<Vec<LinearCode>> = Vec::new();
        for i in 0..3 {
            subs.push(vec![codes[i].clone()]);
            for j in i + 1..3 {
                subs.push(vec![codes[i].clone(), codes[j].clone()]);
            }
        }
        for sub_codes in subs {
            let sub = CodeTuple::new(sub_codes)?;
            match rho_exact(&sub, caps)?.rho {
                RhoValue::Finite(r) => monotone_ok &= r >= full,
                RhoValue::Unbounded => {}
            }
        }
    }
    report.push("subcollections never fall below the full rho", monotone_ok);

    // A full component pins rho to exactly 1/n on both routes.
    let mut degenerate_ok = true;
    for _ in 0..5 {
        let codes = vec![
            LinearCode::random_code(field, 2, 1, &mut rng)?,
            LinearCode::random_code(field, 2, 1, &mut rng)?,
            LinearCode::full_code(field, 2),
        ];
        let tuple = CodeTuple::new(codes)?;
        let expected = RhoValue::Finite(Rat::new(1, 2));
        degenerate_ok &= rho_exact(&tuple, caps)?.rho == expected;
        degenerate_ok &= rho_via_sheaf_threads(&tuple, caps, 1)? == expected;
    }
    report.push("a full component forces rho to 1/n on both routes", degenerate_ok);
    Ok(report)
}

pub fn extendability_battery(seed: u64, caps: &Caps) -> Result<SuiteReport> {
    let mut report = SuiteReport::new("extendability");
    let big = Field::new(16)?;
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, 0xe7e));
    // A certified tuple inherits every extendable subset from every
    // competitor of the same shape.
    let mut certified_tuple = None;
    for _ in 0..32 {
        let pars: Vec<Mat> =
            (0..2).map(|_| Mat::random_uniform(big, 1, 2, &mut rng)).collect();
        let par_refs: Vec<&Mat> = pars.iter().collect();
        let sub = is_good_substitution(&par_refs, &Scope::All, GENERIC_TRIALS, seed, caps)?;
        if sub.good {
            let codes = pars
                .iter()
                .map(|p| LinearCode::from_parity(p.clone()))
                .collect::<Result<Vec<_>>>()?;
            certified_tuple = Some(CodeTuple::new(codes)?);
            break;
        }
    }
    let Some(certified) = certified_tuple else {
        report.push("found a certified tuple within 32 draws", false);
        return Ok(report);
    };
    let cert =
        certify_maximally_extendable(&certified, &Scope::All, GENERIC_TRIALS, seed, caps)?;
    report.push("reference tuple certified at full scope", cert.certified);
    let grid = certified.grid();
    let mut inherited = true;
    for i in 0..20 {
        let field = Field::new(if i % 2 == 0 { 1 } else { 2 })?;
        let codes: Vec<LinearCode> = (0..2)
            .map(|_| LinearCode::random_code(field, 2, 1, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let competitor = CodeTuple::new(codes)?;
        for mask in 0..1usize << 4 {
            let cells: Vec<usize> = (0..4).filter(|c| mask >> c & 1 == 1).collect();
            let s = CellSet::from_indices(grid, &cells);
            if is_extendable(&competitor, &s) {
                inherited &= is_extendable(&certified, &s);
            }
        }
    }
    report.push(
        "every competitor-extendable subset is extendable in the certified tuple",
        inherited,
    );
    Ok(report)
}
