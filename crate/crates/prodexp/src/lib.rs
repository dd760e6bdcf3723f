//! Exact product-expansion computations for tuples of linear codes over
//! GF(2^t), plus the supporting machinery: dense linear algebra over small
//! binary extension fields, grid/line combinatorics with epsilon-closures,
//! tensor and sum codes with extendability certificates, a cochain-complex
//! route to the same expansion constant, and local-testability transforms.
//!
//! Everything downstream of a seed is deterministic: enumeration orders are
//! fixed, random draws go through ChaCha initialized from caller seeds, and
//! reductions never depend on thread count.

pub mod code;
pub mod expansion;
pub mod field;
pub mod grid;
pub mod io;
pub mod ltc;
pub mod matrix;
pub mod product;
pub mod sheaf;
pub mod suites;

/// Enumeration budgets. Every potentially exponential scan checks one of
/// these before it starts and reports `Error::CapExceeded` instead of
/// running away.
#[derive(Clone, Copy, Debug)]
pub struct Caps {
    /// Codeword enumerations (sum-code sweeps, eta cosets), counted in words.
    pub codewords: u64,
    /// Decomposition / preimage kernel-coset enumerations.
    pub cosets: u64,
    /// Subset scans over cells (eps_max, all-subsets certificate scopes).
    pub subsets: u64,
    /// Minimum-distance enumeration.
    pub distance: u64,
    /// Combined codeword-times-coset sweeps.
    pub sweep: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            codewords: 1 << 20,
            cosets: 1 << 20,
            subsets: 1 << 20,
            distance: 1 << 24,
            sweep: 1 << 26,
        }
    }
}

impl Caps {
    /// One flag value applied to every budget.
    pub fn uniform(cap: u64) -> Self {
        Caps { codewords: cap, cosets: cap, subsets: cap, distance: cap, sweep: cap }
    }

    pub(crate) fn check(what: &'static str, needed: u128, cap: u64) -> Result<()> {
        if needed > cap as u128 {
            Err(Error::CapExceeded { what, needed, cap })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cap exceeded: {what} needs {needed} > cap {cap}")]
    CapExceeded { what: &'static str, needed: u128, cap: u64 },
    #[error("inversion of zero")]
    ZeroInverse,
    #[error("mixed fields: {0}")]
    MixedFields(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("word is not in the code")]
    NotInCode,
    #[error("degenerate tuple: {0}")]
    Degenerate(&'static str),
    #[error("base family exhausted: {0}")]
    FamilyExhausted(String),
    #[error("property violation: {0}")]
    PropertyViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Exact rational. All reported constants (rho, eta, soundness, thresholds)
/// fit comfortably: numerators and denominators are bounded by cell counts
/// and line weights, which the caps keep below 2^26.
pub type Rat = num_rational::Ratio<u64>;

/// Process exit code for an error, shared by the CLI and its tests.
/// 2 = malformed input or argument, 3 = enumeration cap, 4 = a checked
/// mathematical property failed to hold.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_) | Error::Io(_) | Error::InvalidArgument(_) | Error::Dimension(_) => 2,
        Error::MixedFields(_) | Error::ZeroInverse | Error::NotInCode => 2,
        Error::Degenerate(_) | Error::FamilyExhausted(_) => 2,
        Error::CapExceeded { .. } => 3,
        Error::PropertyViolation(_) => 4,
    }
}

/// SplitMix64 step, used to derive independent stream seeds from a base seed
/// so that per-sample results do not depend on scheduling.
pub fn mix_seed(base: u64, salt: u64) -> u64 {
    let mut z = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
