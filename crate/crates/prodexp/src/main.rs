use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use prodexp::expansion::{eps_max, rho_exact};
use prodexp::grid::eps_closure_rounds;
use prodexp::io::{
    format_ratio, parse_bundle, parse_cellset, parse_matrix, parse_ratio, parse_tuple,
    write_bundle, write_cellset,
};
use prodexp::ltc::{
    delta_limited, pad_zero, rate_adapt, soundness_exact, soundness_range, tensor_extend,
    RateTrace,
};
use prodexp::product::{
    certify_maximally_extendable, is_extendable, is_inner_generated, PatternRole, Scope,
    DEFAULT_SAMPLED_SUBSETS, GENERIC_TRIALS,
};
use prodexp::sheaf::{build_complex, complex_summary, eta_with_threads, rho_via_sheaf_threads};
use prodexp::suites::{run_suite, theorem1_experiment, ExperimentConfig};
use prodexp::{Caps, Error, Rat, Result};

#[derive(Parser)]
#[command(
    name = "prodexp",
    about = "Exact expansion, extendability and testability computations for products of linear codes"
)]
struct Cli {
    /// Base seed for every randomized search; equal seeds give byte-equal
    /// output.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Uniform enumeration cap (codeword sweeps, coset tables, subset
    /// scopes, distance scans).
    #[arg(long, global = true, default_value_t = 1 << 26)]
    caps: u64,

    /// Worker threads for the complex enumerations; results are identical
    /// for every value.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact product-expansion factor of a code tuple.
    Rho {
        tuple: PathBuf,
        /// Recompute through the chain complex and require equality.
        #[arg(long)]
        oracle: bool,
    },
    /// Coboundary expansion of the tuple's augmented complex at one level.
    Eta {
        tuple: PathBuf,
        /// Cell dimension in -1..=D-2; defaults to D-2.
        #[arg(long, allow_hyphen_values = true)]
        level: Option<isize>,
    },
    /// Closure of a cell set: grows by whole lines crossing the threshold.
    Closure {
        cellset: PathBuf,
        /// Threshold fraction p/q of a line that forces the line in.
        #[arg(long)]
        eps: String,
        /// Report per-round growth on stderr.
        #[arg(long)]
        trace: bool,
        /// Write the closure here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Largest threshold at which closed sets are all inner-generated.
    Epsmax { tuple: PathBuf },
    /// Is every word on the subset extendable to the full product?
    Extend { tuple: PathBuf, cellset: PathBuf },
    /// Is the subset spanned by the lines it contains?
    Innergen { tuple: PathBuf, cellset: PathBuf },
    /// Certify maximal extendability over a scope of subsets.
    Maxext {
        tuple: PathBuf,
        /// "all" or a sample count; defaults to "all" on grids of at most
        /// 16 cells and to sampling otherwise.
        #[arg(long)]
        scope: Option<String>,
    },
    /// Exact two-sided soundness of a check matrix.
    Soundness { matrix: PathBuf },
    /// Validate a testable-code bundle, optionally extending and padding it.
    LtcBuild {
        bundle: PathBuf,
        /// Interleave this many copies (t >= 1).
        #[arg(long, default_value_t = 1)]
        extend: usize,
        /// Append this many always-zero coordinates.
        #[arg(long, default_value_t = 0)]
        pad: usize,
        /// Write the resulting bundle here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a code of prescribed length and rate from a bundle family.
    RateAdapt {
        /// Family bundle files, lengths strictly increasing.
        #[arg(required = true)]
        family: Vec<PathBuf>,
        #[arg(long)]
        length: usize,
        /// Target rate p/q in (0, 1).
        #[arg(long)]
        rate: String,
        /// Allowed length ratio p/q between consecutive members.
        #[arg(long)]
        growth: String,
        /// Write the resulting bundle here instead of appending it.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random-substitution experiment over seeded sample tuples.
    Theorem1 {
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Component dimensions, one per direction.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 1])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 16)]
        field_degree: u32,
        #[arg(long, default_value_t = 1000)]
        samples: u64,
        /// "all" or a sample count of subsets per tuple.
        #[arg(long, default_value = "all")]
        scope: String,
    },
    /// Run one named check battery; any failing check exits nonzero.
    Suite { name: String },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(prodexp::exit_code(&err));
    }
}

fn run(cli: Cli) -> Result<()> {
    let caps = Caps::uniform(cli.caps);
    match cli.cmd {
        Cmd::Rho { tuple, oracle } => {
            let tuple = parse_tuple(&fs::read_to_string(tuple)?)?;
            let report = rho_exact(&tuple, &caps)?;
            println!("rho: {}", report.rho);
            println!("degenerate: {}", report.degenerate);
            println!("codewords: {}", report.codewords);
            println!("swept: {}", report.swept);
            if let Some((word, dec)) = &report.witness {
                println!("witness: {}", join(word.values(), " "));
                println!("witness-weight: {}", word.weight());
                println!("witness-costs: {}", join(&dec.part_costs(), " "));
                println!("witness-cost: {}", dec.cost());
            }
            if oracle {
                let via = rho_via_sheaf_threads(&tuple, &caps, cli.threads)?;
                if via != report.rho {
                    return Err(Error::PropertyViolation(format!(
                        "sweep found {} but the complex route found {via}",
                        report.rho
                    )));
                }
                println!("oracle: match");
            }
        }
        Cmd::Eta { tuple, level } => {
            let tuple = parse_tuple(&fs::read_to_string(tuple)?)?;
            let level = level.unwrap_or(tuple.d() as isize - 2);
            let complex = build_complex(&tuple, &caps)?;
            print!("{}", complex_summary(&complex));
            let value = eta_with_threads(&complex, level, &caps, cli.threads)?;
            println!("eta({level}): {value}");
        }
        Cmd::Closure { cellset, eps, trace, out } => {
            let set = parse_cellset(&fs::read_to_string(cellset)?)?;
            let eps = parse_ratio(&eps)?;
            let closure = eps_closure_rounds(&set, eps)?;
            if trace {
                eprintln!("seed: {} cells", set.len());
                for (i, round) in closure.rounds.iter().enumerate() {
                    eprintln!("round {}: {} cells", i + 1, round.len());
                }
            }
            emit(&write_cellset(&closure.result), out.as_deref())?;
        }
        Cmd::Epsmax { tuple } => {
            let tuple = parse_tuple(&fs::read_to_string(tuple)?)?;
            println!("epsmax: {}", format_ratio(eps_max(&tuple, &caps)?));
        }
        Cmd::Extend { tuple, cellset } => {
            let tuple = parse_tuple(&fs::read_to_string(tuple)?)?;
            let set = parse_cellset(&fs::read_to_string(cellset)?)?;
            check_same_grid(&tuple, &set)?;
            println!("extendable: {}", is_extendable(&tuple, &set));
        }
        Cmd::Innergen { tuple, cellset } => {
            let tuple = parse_tuple(&fs::read_to_string(tuple)?)?;
            let set = parse_cellset(&fs::read_to_string(cellset)?)?;
            check_same_grid(&tuple, &set)?;
            println!("inner-generated: {}", is_inner_generated(&tuple, &set));
        }
        Cmd::Maxext { tuple, scope } => {
            let tuple = parse_tuple(&fs::read_to_string(tuple)?)?;
            let scope = match scope {
                Some(text) => parse_scope(&text)?,
                None if tuple.grid().cells() <= 16 => Scope::All,
                None => Scope::Sampled { count: DEFAULT_SAMPLED_SUBSETS },
            };
            let cert =
                certify_maximally_extendable(&tuple, &scope, GENERIC_TRIALS, cli.seed, &caps)?;
            println!("certified: {}", cert.certified);
            println!("scope: {}", fmt_scope(&cert.report.scope));
            println!("subsets-checked: {}", cert.report.subsets_checked);
            println!("trials: {}", cert.report.trials);
            println!("seed: {}", cert.report.seed);
            println!("failures: {}", cert.report.failures.len());
            for f in &cert.report.failures {
                let cells = if f.cells.is_empty() { "none".into() } else { join(&f.cells, ",") };
                let role = match f.role {
                    PatternRole::Columns => "columns",
                    PatternRole::RowsAndColumns => "rows-and-columns",
                };
                println!(
                    "failure: cells={cells} role={role} rank={} generic={}",
                    f.rank, f.generic
                );
            }
            println!("note: {}", cert.one_sided_note);
        }
        Cmd::Soundness { matrix } => {
            let h = parse_matrix(&fs::read_to_string(matrix)?)?;
            let range = soundness_range(&h, &caps)?;
            println!("rows: {}", h.rows());
            println!("cols: {}", h.cols());
            println!("locality: {}", delta_limited(&h));
            println!("alpha-low: {}", format_ratio(range.alpha_l));
            println!("alpha-high: {}", format_ratio(range.alpha_h));
            println!("soundness: {}", format_ratio(soundness_exact(&h, &caps)?));
        }
        Cmd::LtcBuild { bundle, extend, pad, out } => {
            let bundle = parse_bundle(&fs::read_to_string(bundle)?)?;
            bundle.validate(&caps)?;
            let bundle =
                if extend != 1 { tensor_extend(&bundle, extend, &caps)? } else { bundle };
            let bundle = if pad > 0 { pad_zero(&bundle, pad, &caps)? } else { bundle };
            emit(&write_bundle(&bundle), out.as_deref())?;
        }
        Cmd::RateAdapt { family, length, rate, growth, out } => {
            let members = family
                .iter()
                .map(|path| parse_bundle(&fs::read_to_string(path)?))
                .collect::<Result<Vec<_>>>()?;
            for member in &members {
                member.validate(&caps)?;
            }
            let rate = parse_ratio(&rate)?;
            let growth = parse_ratio(&growth)?;
            let adapted = rate_adapt(&members, length, rate, growth, &caps)?;
            println!("members: {}", members.len());
            match adapted.trace {
                RateTrace::Full => println!("trace: full"),
                RateTrace::Composed { j, t, u } => println!("trace: composed j={j} t={t} u={u}"),
            }
            let code = &adapted.bundle.code;
            println!("length: {}", code.len());
            println!("dim: {}", code.dim());
            println!("rate: {}", format_ratio(Rat::new(code.dim() as u64, code.len() as u64)));
            println!("delta: {}", format_ratio(adapted.delta));
            println!("soundness-uniform: {}", format_ratio(adapted.s_uniform));
            println!("locality: {}", adapted.bundle.params.locality);
            println!("checks: {}", adapted.bundle.params.m);
            match out {
                Some(path) => fs::write(path, write_bundle(&adapted.bundle))?,
                None => print!("\n{}", write_bundle(&adapted.bundle)),
            }
        }
        Cmd::Theorem1 { n, dims, field_degree, samples, scope } => {
            let cfg = ExperimentConfig {
                n,
                d: dims.len(),
                t: field_degree,
                dims,
                samples,
                seed: cli.seed,
                caps,
                scope: parse_scope(&scope)?,
            };
            let report = theorem1_experiment(&cfg)?;
            println!("n: {}", cfg.n);
            println!("directions: {}", cfg.d);
            println!("field-degree: {}", cfg.t);
            println!("dims: {}", join(&cfg.dims, " "));
            println!("samples: {}", cfg.samples);
            println!("seed: {}", cfg.seed);
            println!("scope: {}", fmt_scope(&cfg.scope));
            println!("failures: {}", report.failures);
            println!("failure-fraction: {}/{}", report.failures, cfg.samples);
            match exact_bound(cfg.n, cfg.d, cfg.t) {
                Some(bound) => println!("bound: {bound}"),
                None => println!("bound: {}", report.bound),
            }
            println!("margin: {}", report.margin);
            println!("bound-vacuous: {}", report.bound_vacuous);
            println!("within-bound: {}", report.within_bound);
            println!("good: {}", report.good);
            println!("certified: {}", report.certified);
            println!("all-good-certified: {}", report.all_good_certified);
            match report.min_rho {
                Some(r) => println!("min-rho: {}", format_ratio(r)),
                None => println!("min-rho: none"),
            }
            println!("rho-skipped: {}", report.rho_skipped);
            if !report.within_bound {
                return Err(Error::PropertyViolation(
                    "failure fraction exceeds the analytic bound plus margin".into(),
                ));
            }
            if !report.bound_vacuous && !report.all_good_certified {
                return Err(Error::PropertyViolation(
                    "a good substitution failed the extendability certificate".into(),
                ));
            }
        }
        Cmd::Suite { name } => {
            let report = run_suite(&name, cli.seed, cli.threads, &caps)?;
            print!("{}", report.render());
            if !report.pass() {
                return Err(Error::PropertyViolation(format!("suite {name} failed")));
            }
        }
    }
    Ok(())
}

fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(sep)
}

fn emit(text: &str, out: Option<&std::path::Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn check_same_grid(tuple: &prodexp::product::CodeTuple, set: &prodexp::grid::CellSet) -> Result<()> {
    if set.grid() != tuple.grid() {
        return Err(Error::Dimension(format!(
            "cell set lives on [{}]^{}, the tuple on [{}]^{}",
            set.grid().n(),
            set.grid().d(),
            tuple.n(),
            tuple.d()
        )));
    }
    Ok(())
}

fn parse_scope(text: &str) -> Result<Scope> {
    if text == "all" {
        return Ok(Scope::All);
    }
    let count: u64 = text.parse().map_err(|_| {
        Error::InvalidArgument(format!("scope must be \"all\" or a sample count, got {text}"))
    })?;
    if count == 0 {
        return Err(Error::InvalidArgument("sampled scope needs a positive count".into()));
    }
    Ok(Scope::Sampled { count })
}

fn fmt_scope(scope: &Scope) -> String {
    match scope {
        Scope::All => "all".into(),
        Scope::Sampled { count } => format!("sampled {count}"),
    }
}

/// The failure bound n^D 2^(n^D - t + 1) as an exact ratio when it fits.
fn exact_bound(n: usize, d: usize, t: u32) -> Option<String> {
    let cells = (n as u64).checked_pow(d as u32)?;
    let exp = cells as i64 - i64::from(t) + 1;
    let value = if exp >= 0 {
        let shift = u32::try_from(exp).ok().filter(|&s| s < 64)?;
        Rat::new(cells.checked_mul(1u64 << shift)?, 1)
    } else {
        let shift = u32::try_from(-exp).ok().filter(|&s| s < 64)?;
        Rat::new(cells, 1u64 << shift)
    };
    Some(format_ratio(value))
}
